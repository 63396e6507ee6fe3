#pragma once

#include <cstddef>
#include <optional>

#include "hdtest/data_matrix.hpp"

namespace hdtest {

enum class Regime { large_p, general };
enum class MomentSource { empirical_m4, exact_rank_moments };

/// Centering/scaling constants that bring n*S_n (or n*T_n) onto a standard
/// normal scale: normalized = scale * (n * statistic - center).
struct NormalizationPlan {
    double center = 0.0;  ///< a_n or alpha_n
    double scale = 0.0;   ///< b_n or beta_n, > 0
    Regime regime = Regime::general;
    std::optional<double> variance_term;  ///< V_n or V_n' when regime == general
    MomentSource moment_source = MomentSource::empirical_m4;
};

/// Exact moments of the normalized-rank grid; functions of n alone.
struct RankMomentConstants {
    double e_n4 = 0.0;    ///< E N^4 over the n-point grid
    double e_n2n2 = 0.0;  ///< E N_k^2 N_l^2 over distinct grid points
};

/// Constants for the covariance quadratic statistic.
/// The large-p branch is used exactly when p > n^(5/3).
NormalizationPlan cov_plan(std::size_t n, std::size_t p, const ColumnMoments& moments);

RankMomentConstants rank_moment_constants(std::size_t n);

/// Constants for the Spearman quadratic statistic (exact rank moments).
NormalizationPlan rank_plan(std::size_t n, std::size_t p);

}  // namespace hdtest
