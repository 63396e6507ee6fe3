#include "hdtest/empirical_tail.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "hdtest/errors.hpp"
#include "hdtest/parallel.hpp"

namespace hdtest {

namespace {

constexpr std::size_t kShardSize = 1 << 15;
constexpr char kMagic[8] = {'H', 'D', 'T', 'S', 'T', 'A', 'I', 'L'};
constexpr std::uint32_t kCacheVersion = 1;

double pair_count(std::size_t p) {
    return 0.5 * static_cast<double>(p) * (static_cast<double>(p) - 1.0);
}

double tail_shift(std::size_t p) {
    const double lp = std::log(static_cast<double>(p));
    return 4.0 * lp - std::log(lp);
}

double dkw_eps(std::size_t m) {
    return std::sqrt(std::log(2.0 / 0.01) / (2.0 * static_cast<double>(m)));
}

void standardize_in_place(std::span<double> col) {
    const double inv_n = 1.0 / static_cast<double>(col.size());
    double mean = 0.0;
    for (double v : col) mean += v;
    mean *= inv_n;
    double var = 0.0;
    for (double v : col) {
        const double d = v - mean;
        var += d * d;
    }
    var *= inv_n;
    if (var <= 0.0) {
        throw numeric_error("null sampler produced a constant column");
    }
    const double inv_sd = 1.0 / std::sqrt(var);
    for (double& v : col) v = (v - mean) * inv_sd;
}

void check_not_constant(std::span<const double> col) {
    const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
    if (*mn == *mx) throw numeric_error("null sampler produced a constant column");
}

/// Rank grid c_k = sqrt(12/(n^2-1)) (k - (n+1)/2), k = 1..n.
std::vector<double> rank_grid(std::size_t n) {
    std::vector<double> grid(n);
    const double scale = std::sqrt(12.0 / (static_cast<double>(n) * n - 1.0));
    const double center = (static_cast<double>(n) + 1.0) / 2.0;
    for (std::size_t k = 0; k < n; ++k) {
        grid[k] = scale * (static_cast<double>(k + 1) - center);
    }
    return grid;
}

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

bool read_u32(std::istream& in, std::uint32_t& v) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
    v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return true;
}

bool read_u64(std::istream& in, std::uint64_t& v) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) return false;
    v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return true;
}

}  // namespace

std::size_t default_tail_samples(std::size_t p, bool* capped) {
    const std::size_t want = std::max<std::size_t>(1000000, 100 * p * p);
    const std::size_t cap = 100000000;
    if (capped) *capped = want > cap;
    return std::min(want, cap);
}

EmpiricalTail simulate_tail(std::size_t n, std::size_t p, std::size_t m, StatKind kind,
                            const NullSampler& null_sampler, std::uint64_t seed,
                            const TailOptions& opts) {
    if (n < 2) throw validation_error("simulate_tail requires n >= 2");
    if (p < 2) throw validation_error("simulate_tail requires p >= 2");
    if (m == 0) throw validation_error("simulate_tail requires m >= 1");
    if (opts.strict && m < 100 * p * p) {
        throw validation_error("strict mode requires m >= 100 p^2 (m=" + std::to_string(m) +
                               ", p=" + std::to_string(p) + ")");
    }
    if (kind == StatKind::covariance && !null_sampler) {
        throw validation_error("covariance tails need a null sampler");
    }

    EmpiricalTail tail;
    tail.n = n;
    tail.p = p;
    tail.m = m;
    tail.kind = kind;
    tail.seed = seed;
    tail.sampler_id = kind == StatKind::spearman ? "perm" : opts.sampler_id;
    tail.standardized_pairs = kind == StatKind::covariance && opts.standardize_pairs;
    tail.dkw_epsilon = dkw_eps(m);
    tail.sorted_samples.resize(m);

    const std::size_t shards = (m + kShardSize - 1) / kShardSize;
    const double nd = static_cast<double>(n);
    double* out = tail.sorted_samples.data();

    if (kind == StatKind::covariance) {
        parallel_chunks(shards, opts.threads, [&](std::size_t shard) {
            Rng rng(derive_seed(seed, "cov-tail-shard", shard));
            std::vector<double> a(n), b(n);
            const std::size_t begin = shard * kShardSize;
            const std::size_t end = std::min(m, begin + kShardSize);
            for (std::size_t i = begin; i < end; ++i) {
                null_sampler(rng, a);
                null_sampler(rng, b);
                if (tail.standardized_pairs) {
                    standardize_in_place(a);
                    standardize_in_place(b);
                } else {
                    check_not_constant(a);
                    check_not_constant(b);
                }
                double acc = 0.0;
                for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
                out[i] = acc * acc / nd;  // n * (dot/n)^2
            }
        });
    } else {
        const std::vector<double> grid = rank_grid(n);
        parallel_chunks(shards, opts.threads, [&](std::size_t shard) {
            Rng rng(derive_seed(seed, "rank-tail-shard", shard));
            std::vector<double> permuted = grid;
            const std::size_t begin = shard * kShardSize;
            const std::size_t end = std::min(m, begin + kShardSize);
            for (std::size_t i = begin; i < end; ++i) {
                rng.shuffle(std::span<double>(permuted));
                double acc = 0.0;
                for (std::size_t k = 0; k < n; ++k) acc += grid[k] * permuted[k];
                out[i] = acc * acc / nd;
            }
        });
    }

    std::sort(tail.sorted_samples.begin(), tail.sorted_samples.end());
    return tail;
}

EmpiricalTail simulate_tail(std::size_t n, std::size_t p, std::size_t m, StatKind kind,
                            std::uint64_t seed, const TailOptions& opts) {
    NullSampler gauss = [](Rng& rng, std::span<double> v) { rng.fill_normal(v); };
    return simulate_tail(n, p, m, kind, gauss, seed, opts);
}

std::size_t tail_count(const EmpiricalTail& tail, double y) {
    const double cut = tail_shift(tail.p) + y;
    const auto it =
        std::lower_bound(tail.sorted_samples.begin(), tail.sorted_samples.end(), cut);
    return static_cast<std::size_t>(tail.sorted_samples.end() - it);
}

double empirical_lambda(const EmpiricalTail& tail, double y) {
    return pair_count(tail.p) * static_cast<double>(tail_count(tail, y)) /
           static_cast<double>(tail.m);
}

double empirical_cdf_hat(const EmpiricalTail& tail, double y) {
    return std::exp(-empirical_lambda(tail, y));
}

double empirical_threshold(const EmpiricalTail& tail, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw validation_error("empirical_threshold requires alpha in (0, 1)");
    }
    const double shift = tail_shift(tail.p);
    // 1 - F_hat(y) <= alpha  iff  count(y) <= m * (-log(1-alpha)) / pair_count
    const double target = static_cast<double>(tail.m) * (-std::log1p(-alpha)) / pair_count(tail.p);
    const auto allowed = static_cast<std::size_t>(std::min(
        std::floor(target), static_cast<double>(tail.m)));
    if (allowed >= tail.m) {
        return tail.sorted_samples.front() - shift;
    }
    return tail.sorted_samples[tail.m - 1 - allowed] - shift;
}

double empirical_p_value(const EmpiricalTail& tail, double y) {
    const double cut = tail_shift(tail.p) + y;
    const auto it =
        std::upper_bound(tail.sorted_samples.begin(), tail.sorted_samples.end(), cut);
    const auto cnt = static_cast<double>(tail.sorted_samples.end() - it);
    const double lambda = pair_count(tail.p) * cnt / static_cast<double>(tail.m);
    return -std::expm1(-lambda);
}

std::vector<double> simulate_combined_samples(const EmpiricalTail& tail, std::size_t count,
                                              std::uint64_t seed, unsigned threads) {
    if (count == 0) throw validation_error("combined sample count must be >= 1");
    std::vector<double> draws(count);
    const double shift = tail_shift(tail.p);
    const double q = pair_count(tail.p);
    const double md = static_cast<double>(tail.m);
    const std::size_t shards = (count + kShardSize - 1) / kShardSize;
    double* out = draws.data();

    parallel_chunks(shards, threads, [&](std::size_t shard) {
        Rng rng(derive_seed(seed, "combined-shard", shard));
        const std::size_t begin = shard * kShardSize;
        const std::size_t end = std::min(count, begin + kShardSize);
        for (std::size_t i = begin; i < end; ++i) {
            const double z = rng.normal();
            const double u = rng.uniform01();
            // inverse transform on F_hat: smallest grid y with F_hat(y) >= u
            const double k_real = md * (-std::log(u)) / q;
            double g;
            if (k_real >= md) {
                g = tail.sorted_samples.front() - shift;
            } else {
                const auto k = static_cast<std::size_t>(k_real);
                g = tail.sorted_samples[tail.m - 1 - k] - shift;
            }
            out[i] = z + g;
        }
    });

    std::sort(draws.begin(), draws.end());
    return draws;
}

double upper_quantile_from_sorted(std::span<const double> sorted_ascending, double alpha) {
    if (sorted_ascending.empty()) throw validation_error("empty sample");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw validation_error("upper quantile requires alpha in (0, 1)");
    }
    const std::size_t size = sorted_ascending.size();
    auto k = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(size)));
    if (k >= size) k = size - 1;
    return sorted_ascending[size - 1 - k];
}

double strict_upper_fraction(std::span<const double> sorted_ascending, double x) {
    const auto it = std::upper_bound(sorted_ascending.begin(), sorted_ascending.end(), x);
    return static_cast<double>(sorted_ascending.end() - it) /
           static_cast<double>(sorted_ascending.size());
}

double empirical_threshold_combined(const EmpiricalTail& tail, double alpha,
                                    std::size_t quad_normal_samples, std::uint64_t seed,
                                    unsigned threads) {
    const auto draws = simulate_combined_samples(tail, quad_normal_samples, seed, threads);
    return upper_quantile_from_sorted(draws, alpha);
}

void save_tail(const std::string& path, const EmpiricalTail& tail) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot open cache file for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kCacheVersion);
    write_u64(out, tail.n);
    write_u32(out, tail.kind == StatKind::covariance ? 0u : 1u);
    write_u64(out, tail.m);
    write_u64(out, tail.seed);
    write_u32(out, tail.standardized_pairs ? 1u : 0u);
    write_u32(out, static_cast<std::uint32_t>(tail.sampler_id.size()));
    out.write(tail.sampler_id.data(),
              static_cast<std::streamsize>(tail.sampler_id.size()));
    for (double v : tail.sorted_samples) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        write_u64(out, bits);
    }
    if (!out) throw validation_error("failed writing cache file: " + path);
}

std::optional<EmpiricalTail> load_tail(const std::string& path, std::size_t n, StatKind kind,
                                       std::size_t m, std::uint64_t seed,
                                       const std::string& sampler_id, std::size_t p,
                                       std::string* warning) {
    auto warn = [&](const std::string& msg) {
        if (warning) *warning = msg;
        return std::nullopt;
    };

    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;  // no cache yet; not a warning

    char magic[8];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
        return warn("tail cache " + path + " is corrupted (bad magic); recomputing");
    }
    std::uint32_t version;
    if (!read_u32(in, version) || version != kCacheVersion) {
        return warn("tail cache " + path + " has unsupported version; recomputing");
    }
    std::uint64_t file_n, file_m, file_seed;
    std::uint32_t file_kind, file_std, id_len;
    if (!read_u64(in, file_n) || !read_u32(in, file_kind) || !read_u64(in, file_m) ||
        !read_u64(in, file_seed) || !read_u32(in, file_std) || !read_u32(in, id_len)) {
        return warn("tail cache " + path + " is truncated; recomputing");
    }
    std::string file_id(id_len, '\0');
    if (!in.read(file_id.data(), id_len)) {
        return warn("tail cache " + path + " is truncated; recomputing");
    }
    if (file_n != n || file_m != m || file_seed != seed ||
        file_kind != (kind == StatKind::covariance ? 0u : 1u) || file_id != sampler_id) {
        return warn("tail cache " + path + " key mismatch; recomputing");
    }

    EmpiricalTail tail;
    tail.n = n;
    tail.p = p;
    tail.m = m;
    tail.kind = kind;
    tail.seed = seed;
    tail.sampler_id = sampler_id;
    tail.standardized_pairs = file_std != 0;
    tail.dkw_epsilon = dkw_eps(m);
    tail.sorted_samples.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::uint64_t bits;
        if (!read_u64(in, bits)) {
            return warn("tail cache " + path + " is truncated; recomputing");
        }
        std::memcpy(&tail.sorted_samples[i], &bits, sizeof(double));
    }
    if (!std::is_sorted(tail.sorted_samples.begin(), tail.sorted_samples.end())) {
        return warn("tail cache " + path + " is not sorted; recomputing");
    }
    return tail;
}

}  // namespace hdtest
