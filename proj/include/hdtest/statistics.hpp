#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hdtest/data_matrix.hpp"

namespace hdtest {

/// The four raw statistics of one dataset: quadratic and extreme forms of the
/// off-diagonal sample covariances and Spearman correlations.
struct StatisticQuartet {
    double s_n = 0.0;  ///< sum of squared off-diagonal covariance entries
    double l_n = 0.0;  ///< max absolute off-diagonal covariance entry
    double t_n = 0.0;  ///< sum of squared off-diagonal Spearman correlations
    double m_n = 0.0;  ///< max absolute off-diagonal Spearman correlation
};

/// Normalized ranks: column i holds sqrt(12/(n^2-1)) * (rank - (n+1)/2).
/// Without ties every column is a permutation of a fixed centered grid with
/// column sum 0 and mean square 1; ties fall back to midranks and set the flag.
struct RankMatrix {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> values;  // column-major like DataMatrix
    bool has_ties = false;

    double at(std::size_t k, std::size_t i) const { return values[i * n + k]; }
    std::span<const double> column(std::size_t i) const {
        return {values.data() + i * n, n};
    }
};

/// X_i . X_j / n over columns i and j (0-based indices).
double sample_cov_entry(const DataMatrix& x, std::size_t i, std::size_t j);

RankMatrix compute_ranks(const DataMatrix& x);

/// (1/n) sum_k N_ki N_kj; equals 1 on the diagonal when no ties occur.
double spearman_entry(const RankMatrix& r, std::size_t i, std::size_t j);

/// Square-sum and max-magnitude of the off-diagonal entries of G'G/n for a
/// column-major n x p matrix. Pairs are cut into fixed chunks by first index
/// and partial results merge in chunk order, so the result does not depend on
/// the worker count.
struct PairAccumulation {
    double square_sum = 0.0;
    double abs_max = 0.0;
};

PairAccumulation offdiag_square_sum_and_max(std::size_t n, std::size_t p,
                                            const double* colmajor,
                                            unsigned threads = 0);

/// All four statistics in one call; ranks are computed internally.
/// The covariance pair (s_n, l_n) assumes columns already have the scale the
/// caller intends (standardize upstream for raw data).
StatisticQuartet quartet(const DataMatrix& x, unsigned threads = 0);

}  // namespace hdtest
