#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hdtest/data_matrix.hpp"
#include "hdtest/empirical_tail.hpp"
#include "hdtest/independence_tests.hpp"
#include "hdtest/rng.hpp"

namespace hdtest {

enum class ModelId { m1a, m1b, m2a, m2b, m3a, m3b };

std::string model_label(ModelId id);
ModelId parse_model(const std::string& label);

/// One data-generating model instance.
struct ModelSpec {
    ModelId id = ModelId::m1a;
    std::size_t n = 200;
    std::size_t p = 50;

    bool is_cauchy() const { return id == ModelId::m1b || id == ModelId::m2b || id == ModelId::m3b; }
    bool is_null() const { return id == ModelId::m1a || id == ModelId::m1b; }

    /// Planted correlation of the sparse Gaussian model: 2.5 sqrt(log p / n).
    double planted_correlation() const;
    /// Cauchy mixing weight of the sparse model: sqrt(log p / n).
    double sparse_mixing() const;
    /// Common off-diagonal covariance of the dense Gaussian model: 2 log p / p.
    double dense_offdiagonal() const;

    void validate() const;
};

/// Draws one n x p dataset with i.i.d. rows from the model.
DataMatrix generate(const ModelSpec& spec, Rng& rng);
DataMatrix generate(const ModelSpec& spec, std::uint64_t seed);

struct CellResult {
    ModelId model = ModelId::m1a;
    std::size_t p = 0;
    StatisticName statistic = StatisticName::s_n;
    double frequency = 0.0;
    double std_error = 0.0;
    std::size_t reps = 0;
};

struct SimulationReport {
    std::vector<CellResult> cells;
    std::size_t n = 0;
    double alpha = 0.05;
    std::uint64_t master_seed = 0;
};

struct GridConfig {
    std::vector<ModelId> models;
    std::vector<std::size_t> p_grid;
    std::vector<StatisticName> statistics;  ///< empty = all six
    std::size_t n = 200;
    std::size_t reps = 500;
    double alpha = 0.05;
    std::uint64_t seed = 42;
    std::size_t tail_m = 0;  ///< 0 = default_tail_samples(max p in grid)
    std::size_t combined_samples = 1000000;
    bool gaussian_m4 = false;  ///< use m4 = 3 instead of per-replicate estimates
    unsigned threads = 0;
    std::string cache_dir;  ///< empty = no tail-table cache
};

/// Size/power study: for each (model, p, statistic), the fraction of seeded
/// replicates rejecting at level alpha. Quadratic statistics use the normal
/// law; extreme and combined statistics use empirical thresholds computed
/// once per (n, p, kind) and shared by all replicates. Cauchy models report
/// the rank statistics only.
SimulationReport run_grid(const GridConfig& config);

void write_report_csv(std::ostream& out, const SimulationReport& report);
void write_report_csv_file(const std::string& path, const SimulationReport& report);
SimulationReport read_report_csv(std::istream& in);
SimulationReport read_report_csv_file(const std::string& path);

/// Aligned-text rendering, one block per model, statistics across the top.
std::string render_report_text(const SimulationReport& report);

/// Loads the tail table from `<cache_dir>/<derived name>.bin` when possible,
/// otherwise simulates and (when cache_dir is nonempty) saves it. Emits any
/// cache diagnostics into `warnings`.
EmpiricalTail cached_tail(const std::string& cache_dir, std::size_t n, std::size_t p,
                          std::size_t m, StatKind kind, std::uint64_t seed,
                          const TailOptions& opts = {},
                          std::vector<std::string>* warnings = nullptr);

}  // namespace hdtest
