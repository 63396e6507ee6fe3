#include "hdtest/limit_laws.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hdtest/errors.hpp"

namespace hdtest {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kSqrt8Pi = 5.01325654926200081245;

double intermediate_floor_exponent(std::size_t p) {
    const double pd = static_cast<double>(p);
    return 0.5 * (pd * pd - pd);
}

double intermediate_shift(std::size_t p) {
    const double lp = std::log(static_cast<double>(p));
    return 4.0 * lp - std::log(lp);
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double normal_tail(double z) { return 0.5 * std::erfc(z / kSqrt2); }

double normal_quantile(double prob) {
    if (!(prob > 0.0 && prob < 1.0)) {
        throw validation_error("normal_quantile requires prob in (0, 1)");
    }

    // Acklam's rational approximation, then one Halley correction.
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;

    double x;
    if (prob < p_low) {
        const double q = std::sqrt(-2.0 * std::log(prob));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (prob <= 1.0 - p_low) {
        const double q = prob - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - prob));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    for (int it = 0; it < 2; ++it) {
        const double err = normal_cdf(x) - prob;
        const double u = err * std::sqrt(2.0 * kPi) * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double chi2_1_tail(double x) {
    if (x < 0.0) throw validation_error("chi2_1_tail requires x >= 0");
    return 2.0 * normal_tail(std::sqrt(x));
}

double intermediate_cdf(double y, std::size_t p) {
    if (p < 2) throw validation_error("intermediate_cdf requires p >= 2");
    const double arg = std::max(0.0, intermediate_shift(p) + y);
    return std::exp(-intermediate_floor_exponent(p) * chi2_1_tail(arg));
}

double intermediate_quantile(double prob, std::size_t p) {
    if (p < 2) throw validation_error("intermediate_quantile requires p >= 2");
    if (!(prob > 0.0 && prob < 1.0)) {
        throw validation_error("intermediate_quantile requires prob in (0, 1)");
    }
    const double shift = intermediate_shift(p);
    double lo = -shift;  // F is flat at its floor below this point
    if (intermediate_cdf(lo, p) >= prob) {
        throw numeric_error("intermediate_quantile: requested probability " +
                            std::to_string(prob) + " is below the law's floor at p=" +
                            std::to_string(p));
    }
    double hi = lo + 8.0;
    while (intermediate_cdf(hi, p) < prob) {
        hi += 8.0;
        if (hi > lo + 1.0e4) {
            throw numeric_error("intermediate_quantile failed to bracket");
        }
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (intermediate_cdf(mid, p) < prob) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1.0e-12 * std::max(1.0, std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

double gumbel_cdf(double y) { return std::exp(-std::exp(-0.5 * y) / kSqrt8Pi); }

GaussHermite::GaussHermite(unsigned point_count) {
    if (point_count < 2) throw validation_error("GaussHermite needs at least 2 points");
    const unsigned n = point_count;
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);

    // Roots of the n-th Hermite polynomial by Newton iteration on the
    // orthonormal recurrence; symmetric pairs are filled together.
    const double pim4 = 0.7511255444649425;  // pi^(-1/4)
    const unsigned m = (n + 1) / 2;
    double z = 0.0;
    for (unsigned i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * nodes[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * nodes[1];
        } else {
            z = 2.0 * z - nodes[i - 2];
        }
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = pim4;
            double p2 = 0.0;
            for (unsigned j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
                     std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z_old = z;
            z = z_old - p1 / pp;
            if (std::abs(z - z_old) <= 1.0e-15 * std::max(1.0, std::abs(z))) break;
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
}

double convolve_normal_cdf(const std::function<double(double)>& inner_cdf, double c,
                           unsigned quad_nodes) {
    static thread_local unsigned cached_n = 0;
    static thread_local GaussHermite cached(64);
    if (cached_n != quad_nodes) {
        cached = GaussHermite(quad_nodes);
        cached_n = quad_nodes;
    }
    // integral of inner_cdf(c - z) dPhi(z) with z = sqrt(2) t
    double acc = 0.0;
    for (unsigned i = 0; i < quad_nodes; ++i) {
        acc += cached.weights[i] * inner_cdf(c - kSqrt2 * cached.nodes[i]);
    }
    return acc / std::sqrt(kPi);
}

double convolution_cdf(double c, std::size_t p, unsigned quad_nodes) {
    if (p < 2) throw validation_error("convolution_cdf requires p >= 2");
    return convolve_normal_cdf([p](double y) { return intermediate_cdf(y, p); }, c,
                               quad_nodes);
}

double convolution_upper_quantile_of(const std::function<double(double)>& inner_cdf,
                                     double alpha, unsigned quad_nodes) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw validation_error("convolution_upper_quantile requires alpha in (0, 1)");
    }
    const double target = 1.0 - alpha;
    auto h = [&](double c) { return convolve_normal_cdf(inner_cdf, c, quad_nodes); };

    double lo = -10.0, hi = 30.0;
    while (h(lo) > target) {
        if (lo <= -100.0) throw numeric_error("convolution quantile: no lower bracket by -100");
        lo = std::max(lo * 2.0, -100.0);
    }
    while (h(hi) < target) {
        if (hi >= 100.0) throw numeric_error("convolution quantile: no upper bracket by +100");
        hi = std::min(hi * 2.0, 100.0);
    }

    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 300; ++it) {
        mid = 0.5 * (lo + hi);
        const double val = h(mid);
        if (std::abs(val - target) < 1.0e-6) return mid;
        if (val < target) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1.0e-14 * std::max(1.0, std::abs(mid))) break;
    }
    if (std::abs(h(mid) - target) >= 1.0e-6) {
        throw numeric_error("convolution quantile did not converge");
    }
    return mid;
}

double convolution_upper_quantile(double alpha, std::size_t p, unsigned quad_nodes) {
    if (p < 2) throw validation_error("convolution_upper_quantile requires p >= 2");
    return convolution_upper_quantile_of(
        [p](double y) { return intermediate_cdf(y, p); }, alpha, quad_nodes);
}

double LimitLaw::cdf(double x) const {
    switch (kind) {
        case Kind::normal:
            return normal_cdf(x);
        case Kind::intermediate:
            return intermediate_cdf(x, p);
        case Kind::gumbel:
            return gumbel_cdf(x);
        case Kind::convolution:
            return convolution_cdf(x, p, quad_nodes);
    }
    throw numeric_error("LimitLaw: unknown kind");
}

}  // namespace hdtest
