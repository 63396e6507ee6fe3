#include "hdtest/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "hdtest/errors.hpp"
#include "hdtest/normalization.hpp"
#include "hdtest/parallel.hpp"
#include "hdtest/statistics.hpp"

namespace hdtest {

namespace {

const std::array<StatisticName, 6> kAllStatistics = {
    StatisticName::s_n, StatisticName::l_n, StatisticName::ts1,
    StatisticName::t_n, StatisticName::m_n, StatisticName::ts2};

const std::array<StatisticName, 3> kRankStatistics = {
    StatisticName::t_n, StatisticName::m_n, StatisticName::ts2};

bool is_rank_statistic(StatisticName s) {
    return s == StatisticName::t_n || s == StatisticName::m_n || s == StatisticName::ts2;
}

std::size_t statistic_slot(StatisticName s) {
    switch (s) {
        case StatisticName::s_n: return 0;
        case StatisticName::l_n: return 1;
        case StatisticName::ts1: return 2;
        case StatisticName::t_n: return 3;
        case StatisticName::m_n: return 4;
        case StatisticName::ts2: return 5;
    }
    throw validation_error("unknown statistic");
}

StatisticName parse_statistic(const std::string& label) {
    for (StatisticName s : kAllStatistics) {
        if (statistic_label(s) == label) return s;
    }
    throw validation_error("unknown statistic label: " + label);
}

}  // namespace

std::string model_label(ModelId id) {
    switch (id) {
        case ModelId::m1a: return "1a";
        case ModelId::m1b: return "1b";
        case ModelId::m2a: return "2a";
        case ModelId::m2b: return "2b";
        case ModelId::m3a: return "3a";
        case ModelId::m3b: return "3b";
    }
    return "?";
}

ModelId parse_model(const std::string& label) {
    if (label == "1a") return ModelId::m1a;
    if (label == "1b") return ModelId::m1b;
    if (label == "2a") return ModelId::m2a;
    if (label == "2b") return ModelId::m2b;
    if (label == "3a") return ModelId::m3a;
    if (label == "3b") return ModelId::m3b;
    throw validation_error("unknown model id \"" + label + "\" (valid: 1a 1b 2a 2b 3a 3b)");
}

double ModelSpec::planted_correlation() const {
    return 2.5 * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

double ModelSpec::sparse_mixing() const {
    return std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

double ModelSpec::dense_offdiagonal() const {
    return 2.0 * std::log(static_cast<double>(p)) / static_cast<double>(p);
}

void ModelSpec::validate() const {
    if (n < 2 || p < 2) throw validation_error("model requires n >= 2 and p >= 2");
    if (id == ModelId::m2a) {
        const double rho = planted_correlation();
        if (!(rho > 0.0 && rho < 1.0)) {
            throw validation_error("sparse Gaussian model needs n > 6.25 log p so the "
                                   "planted correlation stays below 1 (got " +
                                   std::to_string(rho) + ")");
        }
    }
}

DataMatrix generate(const ModelSpec& spec, Rng& rng) {
    spec.validate();
    const std::size_t n = spec.n, p = spec.p;
    DataMatrix x(n, p);

    switch (spec.id) {
        case ModelId::m1a:
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t i = 0; i < p; ++i) x.at(k, i) = rng.normal();
            break;
        case ModelId::m1b:
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t i = 0; i < p; ++i) x.at(k, i) = rng.cauchy();
            break;
        case ModelId::m2a: {
            const double rho = spec.planted_correlation();
            const double resid = std::sqrt(1.0 - rho * rho);
            for (std::size_t k = 0; k < n; ++k) {
                const double z1 = rng.normal();
                const double z2 = rng.normal();
                x.at(k, 0) = z1;
                x.at(k, 1) = rho * z1 + resid * z2;
                for (std::size_t i = 2; i < p; ++i) x.at(k, i) = rng.normal();
            }
            break;
        }
        case ModelId::m2b: {
            const double c = spec.sparse_mixing();
            for (std::size_t k = 0; k < n; ++k) {
                const double z1 = rng.cauchy();
                const double z2 = rng.cauchy();
                x.at(k, 0) = z1 + c * z2;
                x.at(k, 1) = z2 + c * z1;
                for (std::size_t i = 2; i < p; ++i) x.at(k, i) = rng.cauchy();
            }
            break;
        }
        case ModelId::m3a: {
            // Sigma = I + delta * ones: draw z + sqrt(delta) * w * 1 per row,
            // exact covariance in O(p) per row.
            const double sqrt_delta = std::sqrt(spec.dense_offdiagonal());
            for (std::size_t k = 0; k < n; ++k) {
                const double w = rng.normal();
                const double shared = sqrt_delta * w;
                for (std::size_t i = 0; i < p; ++i) x.at(k, i) = rng.normal() + shared;
            }
            break;
        }
        case ModelId::m3b: {
            const double weight = 1.0 / (10.0 * static_cast<double>(p));
            std::vector<double> z(p);
            for (std::size_t k = 0; k < n; ++k) {
                double sum = 0.0;
                for (std::size_t i = 0; i < p; ++i) {
                    z[i] = rng.cauchy();
                    sum += z[i];
                }
                for (std::size_t i = 0; i < p; ++i) {
                    x.at(k, i) = z[i] + weight * (sum - z[i]);
                }
            }
            break;
        }
    }
    return x;
}

DataMatrix generate(const ModelSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    return generate(spec, rng);
}

EmpiricalTail cached_tail(const std::string& cache_dir, std::size_t n, std::size_t p,
                          std::size_t m, StatKind kind, std::uint64_t seed,
                          const TailOptions& opts, std::vector<std::string>* warnings) {
    const std::string sampler_id =
        kind == StatKind::spearman
            ? "perm"
            : (opts.standardize_pairs ? opts.sampler_id + "-std" : opts.sampler_id);
    TailOptions effective = opts;
    effective.sampler_id = sampler_id;

    std::string path;
    if (!cache_dir.empty()) {
        std::ostringstream name;
        name << "tail_n" << n << '_' << (kind == StatKind::covariance ? "cov" : "rank")
             << "_m" << m << "_seed" << std::hex << seed << std::dec << '_' << sampler_id
             << ".bin";
        path = (std::filesystem::path(cache_dir) / name.str()).string();
        std::string warning;
        if (auto tail = load_tail(path, n, kind, m, seed, sampler_id, p, &warning)) {
            return *tail;
        }
        if (!warning.empty() && warnings) warnings->push_back(warning);
    }

    EmpiricalTail tail = simulate_tail(n, p, m, kind, seed, effective);
    if (!path.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(cache_dir, ec);
        try {
            save_tail(path, tail);
        } catch (const std::exception& e) {
            if (warnings) warnings->push_back(std::string("tail cache write failed: ") + e.what());
        }
    }
    return tail;
}

SimulationReport run_grid(const GridConfig& config) {
    if (config.models.empty()) throw validation_error("no models selected");
    if (config.p_grid.empty()) throw validation_error("empty p grid");
    if (config.reps < 1) throw validation_error("reps must be >= 1");
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
        throw validation_error("alpha must be in (0, 1)");
    }

    SimulationReport report;
    report.n = config.n;
    report.alpha = config.alpha;
    report.master_seed = config.seed;

    const bool any_gaussian =
        std::any_of(config.models.begin(), config.models.end(),
                    [](ModelId m) { return !ModelSpec{m, 2, 2}.is_cauchy(); });

    const std::size_t max_p = *std::max_element(config.p_grid.begin(), config.p_grid.end());
    const std::size_t tail_m =
        config.tail_m != 0 ? config.tail_m : default_tail_samples(max_p);

    TailOptions tail_opts;
    tail_opts.threads = config.threads;

    // One table per kind at this n; p is re-keyed per grid point below.
    EmpiricalTail rank_tail = cached_tail(config.cache_dir, config.n, max_p, tail_m,
                                          StatKind::spearman,
                                          derive_seed(config.seed, "tail-rank"), tail_opts);
    EmpiricalTail cov_tail;
    if (any_gaussian) {
        // The extreme statistic runs on standardized columns (coherence), so
        // its null tail is simulated from standardized pairs as well.
        TailOptions cov_opts = tail_opts;
        cov_opts.standardize_pairs = true;
        cov_tail = cached_tail(config.cache_dir, config.n, max_p, tail_m,
                               StatKind::covariance, derive_seed(config.seed, "tail-cov"),
                               cov_opts);
    }

    const std::vector<StatisticName> wanted =
        config.statistics.empty()
            ? std::vector<StatisticName>(kAllStatistics.begin(), kAllStatistics.end())
            : config.statistics;

    for (ModelId model : config.models) {
        const bool cauchy = ModelSpec{model, config.n, 2}.is_cauchy();
        std::vector<StatisticName> active;
        for (StatisticName s : wanted) {
            if (!cauchy || is_rank_statistic(s)) active.push_back(s);
        }
        if (active.empty()) continue;

        for (std::size_t p : config.p_grid) {
            ModelSpec spec{model, config.n, p};
            spec.validate();

            rank_tail.p = p;
            cov_tail.p = p;

            const bool need_cov =
                !cauchy && std::any_of(active.begin(), active.end(),
                                       [](StatisticName s) { return !is_rank_statistic(s); });

            const ThresholdSet thresholds = make_thresholds(
                config.alpha, p, LawUsed::empirical, LawUsed::empirical,
                need_cov ? &cov_tail : nullptr, &rank_tail, config.combined_samples,
                derive_seed(config.seed, "thresholds", p), config.threads);

            const std::uint64_t cell_seed =
                derive_seed(config.seed, "cell-" + model_label(model), p);

            std::vector<std::array<unsigned char, 6>> rejects(config.reps);
            const double nd = static_cast<double>(config.n);
            const double lp = std::log(static_cast<double>(p));
            const double offset = 4.0 * lp - std::log(lp);

            parallel_chunks(config.reps, config.threads, [&](std::size_t rep) {
                Rng rng(derive_seed(cell_seed, "rep", rep));
                const DataMatrix x = generate(spec, rng);
                std::array<unsigned char, 6> bits{};

                const RankMatrix ranks = compute_ranks(x);
                const PairAccumulation rnk =
                    offdiag_square_sum_and_max(x.n, x.p, ranks.values.data(), 1);
                const NormalizationPlan rplan = rank_plan(x.n, x.p);
                const double quad_rank = rplan.scale * (nd * rnk.square_sum - rplan.center);
                const double ext_rank = nd * rnk.abs_max * rnk.abs_max - offset;

                bits[statistic_slot(StatisticName::t_n)] = quad_rank >= thresholds.quadratic;
                bits[statistic_slot(StatisticName::m_n)] = ext_rank >= thresholds.extreme_rank;
                bits[statistic_slot(StatisticName::ts2)] =
                    quad_rank + ext_rank >= thresholds.combined_rank;

                if (need_cov) {
                    // Quadratic part from the raw columns (the models are
                    // population-standardized); extreme part from standardized
                    // columns, i.e. the max absolute sample correlation.
                    const PairAccumulation cov =
                        offdiag_square_sum_and_max(x.n, x.p, x.values.data(), 1);
                    const NormalizationPlan cplan =
                        cov_plan(x.n, x.p,
                                 config.gaussian_m4 ? gaussian_moments(x.p)
                                                    : column_moments(x));
                    const double quad_cov = cplan.scale * (nd * cov.square_sum - cplan.center);
                    const DataMatrix xs = standardize(x);
                    const PairAccumulation corr =
                        offdiag_square_sum_and_max(xs.n, xs.p, xs.values.data(), 1);
                    const double ext_cov = nd * corr.abs_max * corr.abs_max - offset;

                    bits[statistic_slot(StatisticName::s_n)] =
                        quad_cov >= thresholds.quadratic;
                    bits[statistic_slot(StatisticName::l_n)] =
                        ext_cov >= thresholds.extreme_cov;
                    bits[statistic_slot(StatisticName::ts1)] =
                        quad_cov + ext_cov >= thresholds.combined_cov;
                }
                rejects[rep] = bits;
            });

            for (StatisticName s : active) {
                std::size_t count = 0;
                for (const auto& bits : rejects) count += bits[statistic_slot(s)];
                CellResult cell;
                cell.model = model;
                cell.p = p;
                cell.statistic = s;
                cell.reps = config.reps;
                cell.frequency = static_cast<double>(count) / static_cast<double>(config.reps);
                cell.std_error =
                    std::sqrt(cell.frequency * (1.0 - cell.frequency) /
                              static_cast<double>(config.reps));
                report.cells.push_back(cell);
            }
        }
    }
    return report;
}

void write_report_csv(std::ostream& out, const SimulationReport& report) {
    out << "model,p,statistic,frequency,std_error,reps,seed\n";
    out << std::setprecision(17);
    for (const auto& c : report.cells) {
        out << model_label(c.model) << ',' << c.p << ',' << statistic_label(c.statistic)
            << ',' << c.frequency << ',' << c.std_error << ',' << c.reps << ','
            << report.master_seed << '\n';
    }
}

void write_report_csv_file(const std::string& path, const SimulationReport& report) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot open report file for writing: " + path);
    write_report_csv(out, report);
}

SimulationReport read_report_csv(std::istream& in) {
    SimulationReport report;
    std::string line;
    if (!std::getline(in, line)) throw validation_error("empty report file");
    bool first_cell = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string model, p, stat, freq, se, reps, seed;
        if (!std::getline(row, model, ',') || !std::getline(row, p, ',') ||
            !std::getline(row, stat, ',') || !std::getline(row, freq, ',') ||
            !std::getline(row, se, ',') || !std::getline(row, reps, ',') ||
            !std::getline(row, seed, ',')) {
            throw validation_error("malformed report row: " + line);
        }
        CellResult cell;
        cell.model = parse_model(model);
        cell.p = std::stoull(p);
        cell.statistic = parse_statistic(stat);
        cell.frequency = std::stod(freq);
        cell.std_error = std::stod(se);
        cell.reps = std::stoull(reps);
        report.cells.push_back(cell);
        if (first_cell) {
            report.master_seed = std::stoull(seed);
            first_cell = false;
        }
    }
    return report;
}

SimulationReport read_report_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open report file: " + path);
    return read_report_csv(in);
}

std::string render_report_text(const SimulationReport& report) {
    // cells grouped as model -> p -> slot
    std::map<ModelId, std::map<std::size_t, std::array<const CellResult*, 6>>> grouped;
    for (const auto& c : report.cells) {
        grouped[c.model][c.p][statistic_slot(c.statistic)] = &c;
    }

    std::ostringstream out;
    for (const auto& [model, rows] : grouped) {
        std::vector<StatisticName> cols;
        for (StatisticName s : kAllStatistics) {
            bool present = false;
            for (const auto& [p, slots] : rows) {
                if (slots[statistic_slot(s)] != nullptr) present = true;
            }
            if (present) cols.push_back(s);
        }

        out << "Model " << model_label(model);
        if (report.n != 0) out << "  (n = " << report.n << ", alpha = " << report.alpha << ")";
        out << "\n";
        out << std::setw(6) << "p";
        for (StatisticName s : cols) out << std::setw(10) << statistic_label(s);
        out << "\n";
        for (const auto& [p, slots] : rows) {
            out << std::setw(6) << p;
            for (StatisticName s : cols) {
                const CellResult* cell = slots[statistic_slot(s)];
                if (cell) {
                    out << std::setw(10) << std::fixed << std::setprecision(4)
                        << cell->frequency;
                    out.unsetf(std::ios::fixed);
                } else {
                    out << std::setw(10) << "-";
                }
            }
            out << "\n";
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace hdtest
