#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdtest/rng.hpp"

namespace hdtest {

enum class StatKind { covariance, spearman };

/// Fills one n-vector with a draw from the hypothesized null marginal.
using NullSampler = std::function<void(Rng&, std::span<double>)>;

/// Simulated null tail of the squared pair statistic scaled by n
/// (n * sigma_hat_12^2 for the covariance kind, n * r_12^2 for Spearman).
/// The sample set depends on n and the kind only; p is carried along for the
/// pair-count multiplier used by lambda estimates and thresholds.
struct EmpiricalTail {
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t m = 0;
    StatKind kind = StatKind::covariance;
    std::vector<double> sorted_samples;  ///< ascending
    double dkw_epsilon = 0.0;            ///< sqrt(log(2/delta)/(2m)) at delta = 0.01
    std::uint64_t seed = 0;
    std::string sampler_id;
    bool standardized_pairs = false;
};

struct TailOptions {
    /// Standardize each simulated column to mean 0, variance 1 (divisor n)
    /// before taking the pair statistic; matches pipelines that standardize
    /// observed data. Covariance kind only.
    bool standardize_pairs = false;
    /// Enforce m >= 100 p^2.
    bool strict = false;
    unsigned threads = 0;
    std::string sampler_id = "gauss";
};

/// Default pair budget: max(10^6, 100 p^2), capped at 10^8.
std::size_t default_tail_samples(std::size_t p, bool* capped = nullptr);

/// Draws m independent pair statistics under the null; sharded into fixed-size
/// blocks with per-block derived seeds, so results are identical for any
/// thread count. The Spearman kind ignores the sampler (ranks of a continuous
/// i.i.d. column are a uniform random permutation).
EmpiricalTail simulate_tail(std::size_t n, std::size_t p, std::size_t m, StatKind kind,
                            const NullSampler& null_sampler, std::uint64_t seed,
                            const TailOptions& opts = {});

/// Standard-normal-marginal convenience overload.
EmpiricalTail simulate_tail(std::size_t n, std::size_t p, std::size_t m, StatKind kind,
                            std::uint64_t seed, const TailOptions& opts = {});

/// Number of simulated samples >= 4 log p - log log p + y.
std::size_t tail_count(const EmpiricalTail& tail, double y);

/// lambda_hat(y) = (p(p-1)/2) * count / m.
double empirical_lambda(const EmpiricalTail& tail, double y);

/// F_hat(y) = exp(-lambda_hat(y)).
double empirical_cdf_hat(const EmpiricalTail& tail, double y);

/// The y solving 1 - F_hat(y) = alpha by grid inversion on the sorted samples.
double empirical_threshold(const EmpiricalTail& tail, double alpha);

/// p-value 1 - exp(-lambda) with a strict count (#samples > y), which keeps
/// "p_value <= alpha iff y >= empirical_threshold(alpha)" exact.
double empirical_p_value(const EmpiricalTail& tail, double y);

/// Sorted draws of z + g with z standard normal and g inverse-transformed
/// from F_hat; the combined test's threshold and p-value both read from this.
std::vector<double> simulate_combined_samples(const EmpiricalTail& tail, std::size_t count,
                                              std::uint64_t seed, unsigned threads = 0);

/// (1-alpha) upper-quantile order statistic of a sorted sample.
double upper_quantile_from_sorted(std::span<const double> sorted_ascending, double alpha);

/// #{w > x} / size, on a sorted sample.
double strict_upper_fraction(std::span<const double> sorted_ascending, double x);

/// Combined empirical threshold c_alpha from freshly drawn z + g samples.
double empirical_threshold_combined(const EmpiricalTail& tail, double alpha,
                                    std::size_t quad_normal_samples, std::uint64_t seed,
                                    unsigned threads = 0);

/// Binary cache: header (magic, version, n, kind, m, seed, sampler id) then
/// the sorted samples as little-endian 64-bit floats.
void save_tail(const std::string& path, const EmpiricalTail& tail);

/// Loads a cached tail if the header matches every key field; p is attached
/// by the caller. On mismatch or corruption returns nullopt and, when
/// `warning` is non-null, stores a description.
std::optional<EmpiricalTail> load_tail(const std::string& path, std::size_t n, StatKind kind,
                                       std::size_t m, std::uint64_t seed,
                                       const std::string& sampler_id, std::size_t p,
                                       std::string* warning = nullptr);

}  // namespace hdtest
