#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hdtest/data_matrix.hpp"
#include "hdtest/empirical_tail.hpp"
#include "hdtest/errors.hpp"
#include "hdtest/independence_tests.hpp"
#include "hdtest/limit_laws.hpp"
#include "hdtest/simulation.hpp"

namespace {

using nlohmann::json;
using namespace hdtest;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

std::string default_cache_dir() {
    if (const char* env = std::getenv("HDTEST_CACHE_DIR")) return env;
    return ".hdtest-cache";
}

void check_alpha_flag(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw validation_error("alpha must lie strictly between 0 and 1, got " +
                               std::to_string(alpha));
    }
}

std::vector<StatisticName> parse_stats(const std::string& csv) {
    const std::vector<std::pair<std::string, StatisticName>> table = {
        {"s", StatisticName::s_n}, {"l", StatisticName::l_n},  {"ts1", StatisticName::ts1},
        {"t", StatisticName::t_n}, {"m", StatisticName::m_n},  {"ts2", StatisticName::ts2}};

    std::vector<StatisticName> out;
    std::istringstream in(csv);
    std::string token;
    while (std::getline(in, token, ',')) {
        std::string low;
        for (char c : token) {
            if (c != ' ') low.push_back(static_cast<char>(std::tolower(c)));
        }
        if (low.empty()) continue;
        if (low == "all") {
            return {StatisticName::s_n, StatisticName::l_n, StatisticName::ts1,
                    StatisticName::t_n, StatisticName::m_n, StatisticName::ts2};
        }
        bool found = false;
        for (const auto& [label, name] : table) {
            if (low == label) {
                out.push_back(name);
                found = true;
                break;
            }
        }
        if (!found) {
            throw validation_error("unknown statistic \"" + token +
                                   "\" (valid: S, L, TS1, T, M, TS2, all)");
        }
    }
    if (out.empty()) throw validation_error("statistic selection is empty");
    return out;
}

LawUsed parse_law(const std::string& s) {
    if (s == "analytic") return LawUsed::analytic;
    if (s == "empirical") return LawUsed::empirical;
    throw validation_error("law must be \"analytic\" or \"empirical\", got \"" + s + "\"");
}

json outcome_json(const TestOutcome& o) {
    return json{{"statistic", statistic_label(o.statistic)},
                {"raw", o.raw_value},
                {"normalized", o.normalized_value},
                {"threshold", o.threshold},
                {"p_value", o.p_value},
                {"reject", o.reject},
                {"law", law_label(o.law_used)},
                {"seed", o.seed}};
}

void print_outcomes_text(const std::vector<TestOutcome>& outcomes) {
    std::cout << std::left << std::setw(6) << "stat" << std::right << std::setw(14) << "raw"
              << std::setw(14) << "normalized" << std::setw(13) << "threshold"
              << std::setw(12) << "p_value" << std::setw(8) << "reject" << std::setw(11)
              << "law" << '\n';
    for (const auto& o : outcomes) {
        std::cout << std::left << std::setw(6) << statistic_label(o.statistic) << std::right
                  << std::setw(14) << std::setprecision(6) << o.raw_value << std::setw(14)
                  << o.normalized_value << std::setw(13) << o.threshold << std::setw(12)
                  << o.p_value << std::setw(8) << (o.reject ? "yes" : "no") << std::setw(11)
                  << law_label(o.law_used) << '\n';
    }
}

struct CommonFlags {
    double alpha = 0.05;
    std::uint64_t seed = 42;
    unsigned threads = 0;
    std::string cache_dir = default_cache_dir();
    bool json_output = false;
};

int cmd_test(const std::string& input, const CommonFlags& common, const std::string& stats,
             const std::string& extreme_law, const std::string& combined_law,
             std::size_t tail_m, std::size_t combined_samples, bool no_standardize,
             bool gaussian_m4) {
    check_alpha_flag(common.alpha);
    const std::vector<StatisticName> selected = parse_stats(stats);

    DataMatrix raw = load_matrix_file(input);
    const DataMatrix x = no_standardize ? std::move(raw) : standardize(raw);

    TestConfig config;
    config.alpha = common.alpha;
    config.extreme_law = parse_law(extreme_law);
    config.combined_law = parse_law(combined_law);
    config.combined_samples = combined_samples;
    config.seed = common.seed;
    config.gaussian_m4 = gaussian_m4;
    config.threads = common.threads;

    auto selected_has = [&](StatisticName s) {
        return std::find(selected.begin(), selected.end(), s) != selected.end();
    };
    const bool need_cov_tail =
        (config.extreme_law == LawUsed::empirical && selected_has(StatisticName::l_n)) ||
        (config.combined_law == LawUsed::empirical && selected_has(StatisticName::ts1));
    const bool need_rank_tail =
        (config.extreme_law == LawUsed::empirical && selected_has(StatisticName::m_n)) ||
        (config.combined_law == LawUsed::empirical && selected_has(StatisticName::ts2));

    bool capped = false;
    const std::size_t m = tail_m != 0 ? tail_m : default_tail_samples(x.p, &capped);
    if (capped) {
        std::cerr << "warning: default tail sample budget capped at 1e8 (p = " << x.p
                  << "); pass --m to override\n";
    }

    std::vector<std::string> warnings;
    TailOptions opts;
    opts.threads = common.threads;
    opts.standardize_pairs = !no_standardize;

    std::optional<EmpiricalTail> cov_tail, rank_tail;
    if (need_cov_tail) {
        cov_tail = cached_tail(common.cache_dir, x.n, x.p, m, StatKind::covariance,
                               derive_seed(common.seed, "tail-cov"), opts, &warnings);
        config.cov_tail = &*cov_tail;
    }
    if (need_rank_tail) {
        rank_tail = cached_tail(common.cache_dir, x.n, x.p, m, StatKind::spearman,
                                derive_seed(common.seed, "tail-rank"), opts, &warnings);
        config.rank_tail = &*rank_tail;
    }
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';

    std::vector<TestOutcome> all = run_all(x, config);
    std::vector<TestOutcome> outcomes;
    for (const auto& o : all) {
        if (selected_has(o.statistic)) outcomes.push_back(o);
    }

    if (common.json_output) {
        json doc{{"schema", 1},
                 {"subcommand", "test"},
                 {"alpha", common.alpha},
                 {"seed", common.seed},
                 {"n", x.n},
                 {"p", x.p},
                 {"standardized", !no_standardize},
                 {"outcomes", json::array()}};
        for (const auto& o : outcomes) doc["outcomes"].push_back(outcome_json(o));
        std::cout << doc.dump(2) << '\n';
    } else {
        std::cout << "n = " << x.n << ", p = " << x.p << ", alpha = " << common.alpha
                  << (no_standardize ? " (raw columns)" : " (columns standardized)") << '\n';
        print_outcomes_text(outcomes);
    }
    return kExitOk;
}

int cmd_threshold(const CommonFlags& common, std::size_t n, std::size_t p,
                  const std::string& kind_str, const std::string& target,
                  const std::string& law, std::size_t tail_m, std::size_t combined_samples) {
    check_alpha_flag(common.alpha);
    if (n < 3) throw validation_error("--n must be >= 3");
    if (p < 2) throw validation_error("--p must be >= 2");
    StatKind kind;
    if (kind_str == "cov") {
        kind = StatKind::covariance;
    } else if (kind_str == "rank") {
        kind = StatKind::spearman;
    } else {
        throw validation_error("--kind must be \"cov\" or \"rank\"");
    }
    if (target != "extreme" && target != "combined") {
        throw validation_error("--target must be \"extreme\" or \"combined\"");
    }
    const bool want_analytic = law == "analytic" || law == "both";
    const bool want_empirical = law == "empirical" || law == "both";
    if (!want_analytic && !want_empirical) {
        throw validation_error("--law must be \"analytic\", \"empirical\" or \"both\"");
    }

    json doc{{"schema", 1},     {"subcommand", "threshold"},
             {"alpha", common.alpha}, {"seed", common.seed},
             {"n", n},          {"p", p},
             {"kind", kind_str}, {"target", target}};

    std::optional<double> analytic, empirical;
    if (want_analytic) {
        analytic = target == "extreme" ? intermediate_quantile(1.0 - common.alpha, p)
                                       : convolution_upper_quantile(common.alpha, p);
    }
    if (want_empirical) {
        const std::size_t m = tail_m != 0 ? tail_m : default_tail_samples(p);
        std::vector<std::string> warnings;
        TailOptions opts;
        opts.threads = common.threads;
        const std::uint64_t tail_seed =
            derive_seed(common.seed, kind == StatKind::covariance ? "tail-cov" : "tail-rank");
        const EmpiricalTail tail =
            cached_tail(common.cache_dir, n, p, m, kind, tail_seed, opts, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
        if (target == "extreme") {
            empirical = empirical_threshold(tail, common.alpha);
            if (tail_count(tail, *empirical) < 10) {
                std::cerr << "warning: fewer than 10 tail samples beyond the threshold; "
                             "increase --m for better resolution\n";
            }
        } else {
            empirical = empirical_threshold_combined(
                tail, common.alpha, combined_samples,
                derive_seed(common.seed, "combined-quantile"), common.threads);
        }
        doc["m"] = m;
        doc["dkw_epsilon"] = tail.dkw_epsilon;
    }

    if (analytic) doc["analytic"] = *analytic;
    if (empirical) doc["empirical"] = *empirical;

    if (common.json_output) {
        std::cout << doc.dump(2) << '\n';
    } else {
        if (analytic) std::cout << "analytic " << target << " threshold: " << *analytic << '\n';
        if (empirical)
            std::cout << "empirical " << target << " threshold: " << *empirical << '\n';
    }
    return kExitOk;
}

int cmd_simulate(const CommonFlags& common, const std::string& models_csv,
                 const std::string& p_csv, std::size_t n, std::size_t reps,
                 const std::string& out_path, std::size_t tail_m,
                 std::size_t combined_samples, bool gaussian_m4, bool full,
                 const std::string& stats) {
    check_alpha_flag(common.alpha);

    GridConfig config;
    config.alpha = common.alpha;
    config.seed = common.seed;
    config.threads = common.threads;
    config.cache_dir = common.cache_dir;
    config.tail_m = tail_m;
    config.combined_samples = combined_samples;
    config.gaussian_m4 = gaussian_m4;
    config.n = n;
    config.reps = full ? 1000 : reps;
    if (!stats.empty() && stats != "all") config.statistics = parse_stats(stats);

    {
        std::istringstream in(models_csv);
        std::string token;
        while (std::getline(in, token, ',')) {
            if (!token.empty()) config.models.push_back(parse_model(token));
        }
    }
    if (config.models.empty()) throw validation_error("--models selection is empty");

    if (full && p_csv.empty()) {
        config.p_grid = {50, 100, 200, 400, 600, 800, 1000};
    } else {
        std::istringstream in(p_csv.empty() ? std::string("50,100,200") : p_csv);
        std::string token;
        while (std::getline(in, token, ',')) {
            if (token.empty()) continue;
            const long long v = std::stoll(token);
            if (v < 2) throw validation_error("p values must be >= 2");
            config.p_grid.push_back(static_cast<std::size_t>(v));
        }
    }

    const SimulationReport report = run_grid(config);
    if (!out_path.empty()) write_report_csv_file(out_path, report);

    if (common.json_output) {
        json doc{{"schema", 1},  {"subcommand", "simulate"}, {"alpha", report.alpha},
                 {"seed", report.master_seed}, {"n", report.n}, {"cells", json::array()}};
        for (const auto& c : report.cells) {
            doc["cells"].push_back(json{{"model", model_label(c.model)},
                                        {"p", c.p},
                                        {"statistic", statistic_label(c.statistic)},
                                        {"frequency", c.frequency},
                                        {"std_error", c.std_error},
                                        {"reps", c.reps}});
        }
        std::cout << doc.dump(2) << '\n';
    } else {
        std::cout << render_report_text(report);
        if (!out_path.empty()) std::cout << "report written to " << out_path << '\n';
    }
    return kExitOk;
}

int cmd_report(const std::string& in_path, const std::string& format,
               const std::string& out_path) {
    if (format != "text" && format != "csv") {
        throw validation_error("--format must be \"text\" or \"csv\"");
    }
    const SimulationReport report = read_report_csv_file(in_path);
    std::ostringstream rendered;
    if (format == "text") {
        rendered << render_report_text(report);
    } else {
        write_report_csv(rendered, report);
    }
    if (out_path.empty()) {
        std::cout << rendered.str();
    } else {
        std::ofstream out(out_path);
        if (!out) throw validation_error("cannot open output file: " + out_path);
        out << rendered.str();
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "High-dimensional independence tests: quadratic (S, T) and extreme-value (L, M) "
        "statistics with combined tests TS1/TS2. Quadratic statistics are normalized as "
        "scale*(n*stat - center); extreme statistics as n*max^2 - 4 log p + log log p."};
    app.require_subcommand(1);

    CommonFlags common;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--alpha", common.alpha, "significance level in (0, 1)");
        sub->add_option("--seed", common.seed, "master seed; all randomness derives from it");
        sub->add_option("--threads", common.threads, "worker cap (0 = hardware)");
        sub->add_option("--cache-dir", common.cache_dir,
                        "tail-table cache directory (env HDTEST_CACHE_DIR)");
        sub->add_flag("--json", common.json_output, "machine-readable output (schema 1)");
    };

    // test
    auto* test_cmd = app.add_subcommand("test", "run the six tests on a CSV dataset");
    std::string input, stats = "all", extreme_law = "empirical", combined_law = "empirical";
    std::size_t tail_m = 0, combined_samples = 1000000;
    bool no_standardize = false, gaussian_m4 = false;
    test_cmd->add_option("--input", input, "CSV file, rows = observations")->required();
    test_cmd->add_option("--stats", stats, "comma list of S,L,TS1,T,M,TS2 or \"all\"");
    test_cmd->add_option("--law-extreme", extreme_law, "law for L/M: empirical|analytic");
    test_cmd->add_option("--law-combined", combined_law, "law for TS1/TS2: empirical|analytic");
    test_cmd->add_option("--m", tail_m, "simulated tail pairs (0 = max(1e6, 100 p^2))");
    test_cmd->add_option("--combined-samples", combined_samples,
                         "draws for empirical combined thresholds");
    test_cmd->add_flag("--no-standardize", no_standardize, "skip column standardization");
    test_cmd->add_flag("--gaussian-m4", gaussian_m4,
                       "use the standard normal fourth moment instead of estimates");
    add_common(test_cmd);

    // threshold
    auto* thr_cmd = app.add_subcommand("threshold", "compute critical values / tail tables");
    std::size_t thr_n = 200, thr_p = 200;
    std::string thr_kind = "cov", thr_target = "combined", thr_law = "both";
    thr_cmd->add_option("--n", thr_n, "sample count the tail table is simulated at");
    thr_cmd->add_option("--p", thr_p, "dimension");
    thr_cmd->add_option("--kind", thr_kind, "statistic family: cov|rank");
    thr_cmd->add_option("--target", thr_target, "extreme|combined");
    thr_cmd->add_option("--law", thr_law, "analytic|empirical|both");
    thr_cmd->add_option("--m", tail_m, "simulated tail pairs (0 = default)");
    thr_cmd->add_option("--combined-samples", combined_samples,
                        "draws for the empirical combined quantile");
    add_common(thr_cmd);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "size/power study over models 1a-3b");
    std::string models = "1a", p_csv, out_path, sim_stats = "all";
    std::size_t sim_n = 200, reps = 500;
    bool full = false;
    sim_cmd->add_option("--models", models, "comma list from {1a,1b,2a,2b,3a,3b}");
    sim_cmd->add_option("--p", p_csv, "comma list of dimensions (default 50,100,200)");
    sim_cmd->add_option("--n", sim_n, "samples per dataset");
    sim_cmd->add_option("--reps", reps, "replicates per cell");
    sim_cmd->add_option("--stats", sim_stats, "statistics to report");
    sim_cmd->add_option("--out", out_path, "write the report CSV here");
    sim_cmd->add_option("--m", tail_m, "tail pairs (0 = default for the largest p)");
    sim_cmd->add_option("--combined-samples", combined_samples,
                        "draws for empirical combined thresholds");
    sim_cmd->add_flag("--gaussian-m4", gaussian_m4,
                      "normalize with the known normal fourth moment");
    sim_cmd->add_flag("--full", full, "paper-scale protocol: 1000 reps, p up to 1000");
    add_common(sim_cmd);

    // report
    auto* rep_cmd = app.add_subcommand("report", "render a report CSV");
    std::string rep_in, rep_format = "text", rep_out;
    rep_cmd->add_option("--in", rep_in, "report CSV produced by simulate")->required();
    rep_cmd->add_option("--format", rep_format, "text|csv");
    rep_cmd->add_option("--out", rep_out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (test_cmd->parsed()) {
            return cmd_test(input, common, stats, extreme_law, combined_law, tail_m,
                            combined_samples, no_standardize, gaussian_m4);
        }
        if (thr_cmd->parsed()) {
            return cmd_threshold(common, thr_n, thr_p, thr_kind, thr_target, thr_law, tail_m,
                                 combined_samples);
        }
        if (sim_cmd->parsed()) {
            return cmd_simulate(common, models, p_csv, sim_n, reps, out_path, tail_m,
                                combined_samples, gaussian_m4, full, sim_stats);
        }
        if (rep_cmd->parsed()) {
            return cmd_report(rep_in, rep_format, rep_out);
        }
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
