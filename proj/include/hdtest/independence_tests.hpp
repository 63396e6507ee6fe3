#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdtest/data_matrix.hpp"
#include "hdtest/empirical_tail.hpp"
#include "hdtest/statistics.hpp"

namespace hdtest {

enum class StatisticName { s_n, l_n, ts1, t_n, m_n, ts2 };
enum class LawUsed { analytic, empirical };

std::string statistic_label(StatisticName name);
std::string law_label(LawUsed law);

/// One decision: the raw statistic, the normalized quantity compared against
/// the law, the threshold, and a p-value coherent with the rejection.
struct TestOutcome {
    StatisticName statistic = StatisticName::s_n;
    double raw_value = 0.0;
    double normalized_value = 0.0;
    double threshold = 0.0;
    double p_value = 1.0;
    bool reject = false;
    double alpha = 0.05;
    LawUsed law_used = LawUsed::analytic;
    std::uint64_t seed = 0;
};

/// Quadratic test: normalized = scale * (n * statistic - center) against the
/// standard normal law. gaussian_m4 swaps the sample fourth moments for the
/// standard normal value 3 (covariance kind only).
TestOutcome test_quadratic(const DataMatrix& x, double alpha, StatKind kind,
                           bool gaussian_m4 = false, unsigned threads = 0);

/// Extreme-value test: normalized = n * max^2 - 4 log p + log log p against
/// the intermediate law (analytic) or a simulated tail (empirical).
TestOutcome test_extreme(const DataMatrix& x, double alpha, StatKind kind, LawUsed law,
                         const EmpiricalTail* tail = nullptr, unsigned threads = 0);

/// Combined test: the sum of the two normalized statistics against the
/// convolution law or its empirical counterpart.
TestOutcome test_combined(const DataMatrix& x, double alpha, StatKind kind, LawUsed law,
                          const EmpiricalTail* tail = nullptr,
                          std::size_t combined_samples = 1000000, std::uint64_t seed = 0,
                          bool gaussian_m4 = false, unsigned threads = 0);

struct TestConfig {
    double alpha = 0.05;
    LawUsed extreme_law = LawUsed::empirical;
    LawUsed combined_law = LawUsed::empirical;
    const EmpiricalTail* cov_tail = nullptr;   ///< required for empirical covariance laws
    const EmpiricalTail* rank_tail = nullptr;  ///< required for empirical rank laws
    std::size_t combined_samples = 1000000;
    std::uint64_t seed = 0;
    bool gaussian_m4 = false;
    unsigned threads = 0;
};

/// Runs all six tests off one statistics pass and one rank pass.
std::vector<TestOutcome> run_all(const DataMatrix& x, const TestConfig& config);

/// Precomputed decision thresholds for one (n, p) problem, reusable across
/// many datasets of the same shape.
struct ThresholdSet {
    double quadratic = 0.0;       ///< standard normal upper quantile
    double extreme_cov = 0.0;     ///< threshold for n L^2 - 4 log p + log log p
    double extreme_rank = 0.0;
    double combined_cov = 0.0;
    double combined_rank = 0.0;
};

ThresholdSet make_thresholds(double alpha, std::size_t p, LawUsed extreme_law,
                             LawUsed combined_law, const EmpiricalTail* cov_tail,
                             const EmpiricalTail* rank_tail, std::size_t combined_samples,
                             std::uint64_t seed, unsigned threads = 0);

/// The four normalized statistics of one dataset (covariance pair first).
struct NormalizedQuartet {
    double quad_cov = 0.0;
    double extreme_cov = 0.0;
    double quad_rank = 0.0;
    double extreme_rank = 0.0;
};

NormalizedQuartet normalize_quartet(const DataMatrix& x, const StatisticQuartet& q,
                                    bool gaussian_m4 = false);

}  // namespace hdtest
