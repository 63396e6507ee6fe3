#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace hdtest {

/// Standard normal CDF, evaluated through erfc so both tails keep small
/// relative error.
double normal_cdf(double z);

/// 1 - Phi(z) without cancellation; relative error stays small far into the
/// tail, which the intermediate law depends on (its argument sits near
/// 4 log p where naive 1 - Phi underflows to roundoff).
double normal_tail(double z);

/// Inverse standard normal CDF (rational approximation plus one Halley step).
double normal_quantile(double prob);

/// P(chi^2(1) >= x) = 2 * normal_tail(sqrt(x)); x must be >= 0.
double chi2_1_tail(double x);

/// Intermediate law F(y) = exp(-(p^2-p)/2 * P(chi^2(1) >= 4 log p - log log p + y)).
/// The chi-square argument is clamped at 0 for extreme negative y.
double intermediate_cdf(double y, std::size_t p);

/// Solves F(y) = prob for y (prob strictly between F's floor and 1).
double intermediate_quantile(double prob, std::size_t p);

/// Final extreme-value limit exp(-exp(-y/2)/sqrt(8*pi)).
double gumbel_cdf(double y);

/// Nodes/weights for integration against exp(-t^2) on the real line.
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
    explicit GaussHermite(unsigned point_count);
};

/// CDF of Z + G where Z is standard normal and G has the supplied CDF,
/// independent: H(c) = integral of inner_cdf(c - z) dPhi(z), evaluated by
/// Gauss-Hermite quadrature.
double convolve_normal_cdf(const std::function<double(double)>& inner_cdf, double c,
                           unsigned quad_nodes = 64);

/// H(c) for G following the intermediate law with dimension p.
double convolution_cdf(double c, std::size_t p, unsigned quad_nodes = 64);

/// The alpha upper quantile of Z + G: solves P(Z + G >= c) = alpha by
/// bracketing plus bisection to |H(c) - (1 - alpha)| < 1e-6. The bracket is
/// widened automatically up to +-100 before failing.
double convolution_upper_quantile(double alpha, std::size_t p, unsigned quad_nodes = 64);

/// Same solver against an arbitrary inner CDF (used for cross-checks).
double convolution_upper_quantile_of(const std::function<double(double)>& inner_cdf,
                                     double alpha, unsigned quad_nodes = 64);

/// Evaluable limiting law, tagged by kind.
struct LimitLaw {
    enum class Kind { normal, intermediate, gumbel, convolution };

    Kind kind = Kind::normal;
    std::size_t p = 0;         ///< dimension parameter for intermediate/convolution
    unsigned quad_nodes = 64;  ///< quadrature size for the convolution kind

    double cdf(double x) const;

    static LimitLaw normal() { return {Kind::normal, 0, 64}; }
    static LimitLaw intermediate(std::size_t p) { return {Kind::intermediate, p, 64}; }
    static LimitLaw gumbel() { return {Kind::gumbel, 0, 64}; }
    static LimitLaw convolution(std::size_t p, unsigned nodes = 64) {
        return {Kind::convolution, p, nodes};
    }
};

}  // namespace hdtest
