#include "hdtest/normalization.hpp"

#include <cmath>
#include <string>

#include "hdtest/errors.hpp"

namespace hdtest {

namespace {

double pairs_of(std::size_t p) {
    return 0.5 * static_cast<double>(p) * (static_cast<double>(p) - 1.0);
}

}  // namespace

NormalizationPlan cov_plan(std::size_t n, std::size_t p, const ColumnMoments& moments) {
    if (n < 2 || p < 2) throw validation_error("cov_plan requires n >= 2 and p >= 2");
    if (moments.m4.size() != p) {
        throw validation_error("cov_plan: moments cover " + std::to_string(moments.m4.size()) +
                               " columns, expected " + std::to_string(p));
    }

    const double nd = static_cast<double>(n);
    const double pd = static_cast<double>(p);
    const double q = pairs_of(p);

    double excess_sum = 0.0;    // sum_i (m4_i - 1)
    double excess_sq_sum = 0.0; // sum_i (m4_i - 1)^2
    for (double m4 : moments.m4) {
        const double d = m4 - 1.0;
        excess_sum += d;
        excess_sq_sum += d * d;
    }

    NormalizationPlan plan;
    plan.center = q;
    plan.moment_source = MomentSource::empirical_m4;

    const bool large_p = pd > std::pow(nd, 5.0 / 3.0);
    if (large_p) {
        if (excess_sum <= 0.0) {
            throw numeric_error(
                "cov_plan: sum of fourth-moment excesses is not positive; the large-p "
                "scale is degenerate (consider the general regime)");
        }
        plan.regime = Regime::large_p;
        plan.scale = std::sqrt(nd) / ((pd - 1.0) * std::sqrt(excess_sum));
        return plan;
    }

    // sum over unordered pairs of products of excesses
    const double cross = 0.5 * (excess_sum * excess_sum - excess_sq_sum);
    const double v_n = 4.0 * (nd * nd - nd) / (pd * (pd - 1.0)) +
                       4.0 * nd * cross / (pd * pd * (pd - 1.0) * (pd - 1.0)) +
                       4.0 * nd * excess_sum / (pd * pd);
    if (v_n <= 0.0) {
        throw numeric_error("cov_plan: variance term V_n = " + std::to_string(v_n) +
                            " is not positive");
    }
    plan.regime = Regime::general;
    plan.variance_term = v_n;
    plan.scale = nd / (q * std::sqrt(v_n));
    return plan;
}

RankMomentConstants rank_moment_constants(std::size_t n) {
    if (n < 2) throw validation_error("rank_moment_constants requires n >= 2");
    const double nd = static_cast<double>(n);
    RankMomentConstants c;
    // With c_k = sqrt(12/(n^2-1)) (k - (n+1)/2):
    //   sum_k c_k^2 = n  and  sum_k c_k^4 = n * 3(3n^2-7) / (5(n^2-1)).
    c.e_n4 = 3.0 * (3.0 * nd * nd - 7.0) / (5.0 * (nd * nd - 1.0));
    c.e_n2n2 = (nd - c.e_n4) / (nd - 1.0);
    return c;
}

NormalizationPlan rank_plan(std::size_t n, std::size_t p) {
    if (n < 3) throw validation_error("rank_plan requires n >= 3");
    if (p < 2) throw validation_error("rank_plan requires p >= 2");

    const double nd = static_cast<double>(n);
    const double pd = static_cast<double>(p);
    const double q = pairs_of(p);
    const RankMomentConstants c = rank_moment_constants(n);

    const double e4_excess = c.e_n4 - 1.0;
    const double v_n = (4.0 * nd * nd * c.e_n2n2 + 2.0 * nd * e4_excess * e4_excess - 4.0 * nd) /
                       (pd * (pd - 1.0));
    if (v_n <= 0.0) {
        throw numeric_error("rank_plan: variance term V_n' = " + std::to_string(v_n) +
                            " is not positive");
    }

    NormalizationPlan plan;
    plan.center = q * (1.0 + 1.0 / (nd - 1.0));
    plan.scale = nd / (q * std::sqrt(v_n));
    plan.regime = Regime::general;
    plan.variance_term = v_n;
    plan.moment_source = MomentSource::exact_rank_moments;
    return plan;
}

}  // namespace hdtest
