#include <doctest.h>

#include <cmath>

#include "hdtest/data_matrix.hpp"
#include "hdtest/errors.hpp"
#include "hdtest/independence_tests.hpp"
#include "hdtest/limit_laws.hpp"
#include "hdtest/rng.hpp"
#include "hdtest/simulation.hpp"

using namespace hdtest;

namespace {

DataMatrix gaussian_null(std::size_t n, std::size_t p, std::uint64_t seed) {
    Rng rng(seed);
    DataMatrix x(n, p);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < p; ++i) x.at(k, i) = rng.normal();
    return x;
}

DataMatrix planted_pair(std::size_t n, std::size_t p, double rho, std::uint64_t seed) {
    Rng rng(seed);
    DataMatrix x(n, p);
    const double resid = std::sqrt(1.0 - rho * rho);
    for (std::size_t k = 0; k < n; ++k) {
        const double z1 = rng.normal();
        x.at(k, 0) = z1;
        x.at(k, 1) = rho * z1 + resid * rng.normal();
        for (std::size_t i = 2; i < p; ++i) x.at(k, i) = rng.normal();
    }
    return x;
}

}  // namespace

TEST_CASE("quadratic threshold is the normal quantile") {
    const DataMatrix x = gaussian_null(40, 6, 1);
    const TestOutcome o = test_quadratic(x, 0.05, StatKind::covariance);
    CHECK(std::abs(o.threshold - 1.644854) < 1e-5);
    CHECK(o.law_used == LawUsed::analytic);
    CHECK(o.p_value == doctest::Approx(normal_tail(o.normalized_value)));
    CHECK(o.reject == (o.normalized_value >= o.threshold));
}

TEST_CASE("planted strong correlation rejects") {
    const DataMatrix x = planted_pair(200, 10, 0.9, 99);
    const TestOutcome quad = test_quadratic(x, 0.05, StatKind::covariance);
    CHECK(quad.reject);
    const TestOutcome ext =
        test_extreme(x, 0.05, StatKind::covariance, LawUsed::analytic);
    CHECK(ext.reject);
    CHECK(ext.normalized_value ==
          doctest::Approx(200.0 * ext.raw_value * ext.raw_value -
                          (4.0 * std::log(10.0) - std::log(std::log(10.0)))));
}

TEST_CASE("extreme rejection region is an upper set in the raw maximum") {
    // normalized value is strictly increasing in the raw max at fixed (n, p)
    const double offset = 4.0 * std::log(50.0) - std::log(std::log(50.0));
    double prev = -1e300;
    for (double l = 0.0; l <= 1.0; l += 0.05) {
        const double normalized = 100.0 * l * l - offset;
        CHECK(normalized >= prev);
        prev = normalized;
    }
}

TEST_CASE("run_all returns six coherent outcomes") {
    const DataMatrix x = gaussian_null(200, 50, 5);

    const EmpiricalTail cov_tail =
        simulate_tail(200, 50, 200000, StatKind::covariance, 1001, TailOptions{.threads = 2});
    const EmpiricalTail rank_tail =
        simulate_tail(200, 50, 200000, StatKind::spearman, 1002, TailOptions{.threads = 2});

    TestConfig config;
    config.alpha = 0.05;
    config.cov_tail = &cov_tail;
    config.rank_tail = &rank_tail;
    config.combined_samples = 100000;
    config.seed = 7;
    config.threads = 2;

    const auto outcomes = run_all(x, config);
    REQUIRE(outcomes.size() == 6);
    CHECK(outcomes[0].statistic == StatisticName::s_n);
    CHECK(outcomes[1].statistic == StatisticName::l_n);
    CHECK(outcomes[2].statistic == StatisticName::ts1);
    CHECK(outcomes[3].statistic == StatisticName::t_n);
    CHECK(outcomes[4].statistic == StatisticName::m_n);
    CHECK(outcomes[5].statistic == StatisticName::ts2);
    for (const auto& o : outcomes) {
        CHECK(o.p_value >= 0.0);
        CHECK(o.p_value <= 1.0);
        CHECK(o.reject == (o.normalized_value >= o.threshold));
        CHECK(o.reject == (o.p_value <= config.alpha));
    }

    // determinism: identical inputs give identical outcomes
    const auto again = run_all(x, config);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(outcomes[i].normalized_value == again[i].normalized_value);
        CHECK(outcomes[i].threshold == again[i].threshold);
        CHECK(outcomes[i].p_value == again[i].p_value);
        CHECK(outcomes[i].reject == again[i].reject);
    }
}

TEST_CASE("duplicated column rejects every test") {
    DataMatrix x = gaussian_null(100, 6, 12);
    for (std::size_t k = 0; k < x.n; ++k) x.at(k, 1) = x.at(k, 0);  // perfect dependence

    const EmpiricalTail cov_tail =
        simulate_tail(100, 6, 100000, StatKind::covariance, 2001, TailOptions{.threads = 2});
    const EmpiricalTail rank_tail =
        simulate_tail(100, 6, 100000, StatKind::spearman, 2002, TailOptions{.threads = 2});

    TestConfig config;
    config.cov_tail = &cov_tail;
    config.rank_tail = &rank_tail;
    config.combined_samples = 100000;
    const auto outcomes = run_all(x, config);
    for (const auto& o : outcomes) CHECK(o.reject);
}

TEST_CASE("rank-based outcomes are invariant under increasing transforms") {
    const DataMatrix x = gaussian_null(60, 8, 21);
    DataMatrix y(x.n, x.p);
    for (std::size_t i = 0; i < x.p; ++i)
        for (std::size_t k = 0; k < x.n; ++k) {
            const double v = x.at(k, i);
            y.at(k, i) = i % 2 == 0 ? std::exp(v) : v * v * v;
        }

    TestConfig config;
    config.extreme_law = LawUsed::analytic;
    config.combined_law = LawUsed::analytic;

    // compare T, M, TS2 outcomes only
    const auto ox = run_all(standardize(x), config);
    const auto oy = run_all(standardize(y), config);

    // the empirical route reads the same raw values, so a single spot-check
    // with a shared table suffices
    const EmpiricalTail rank_tail =
        simulate_tail(60, 8, 100000, StatKind::spearman, 3001, TailOptions{.threads = 2});
    const TestOutcome mx =
        test_extreme(standardize(x), 0.05, StatKind::spearman, LawUsed::empirical, &rank_tail);
    const TestOutcome my =
        test_extreme(standardize(y), 0.05, StatKind::spearman, LawUsed::empirical, &rank_tail);
    CHECK(mx.normalized_value == my.normalized_value);
    CHECK(mx.p_value == my.p_value);
    CHECK(mx.reject == my.reject);
    for (std::size_t idx : {3ul, 4ul, 5ul}) {
        CHECK(ox[idx].raw_value == oy[idx].raw_value);
        CHECK(ox[idx].normalized_value == oy[idx].normalized_value);
        CHECK(ox[idx].p_value == oy[idx].p_value);
        CHECK(ox[idx].reject == oy[idx].reject);
    }
}

TEST_CASE("rejections nest across significance levels") {
    const EmpiricalTail cov_tail =
        simulate_tail(80, 12, 150000, StatKind::covariance, 4001, TailOptions{.threads = 2});
    const EmpiricalTail rank_tail =
        simulate_tail(80, 12, 150000, StatKind::spearman, 4002, TailOptions{.threads = 2});

    double prev_quad = 1e300, prev_ext_c = 1e300, prev_ext_r = 1e300;
    double prev_comb_c = 1e300, prev_comb_r = 1e300;
    for (double alpha : {0.01, 0.05, 0.10, 0.25}) {
        const ThresholdSet t =
            make_thresholds(alpha, 12, LawUsed::empirical, LawUsed::empirical, &cov_tail,
                            &rank_tail, 50000, 5, 2);
        CHECK(t.quadratic <= prev_quad);
        CHECK(t.extreme_cov <= prev_ext_c);
        CHECK(t.extreme_rank <= prev_ext_r);
        CHECK(t.combined_cov <= prev_comb_c);
        CHECK(t.combined_rank <= prev_comb_r);
        prev_quad = t.quadratic;
        prev_ext_c = t.extreme_cov;
        prev_ext_r = t.extreme_rank;
        prev_comb_c = t.combined_cov;
        prev_comb_r = t.combined_rank;

        const ThresholdSet ta = make_thresholds(alpha, 12, LawUsed::analytic,
                                                LawUsed::analytic, nullptr, nullptr, 0, 0);
        CHECK(ta.extreme_cov == ta.extreme_rank);
        CHECK(ta.combined_cov == ta.combined_rank);
    }
}

TEST_CASE("analytic laws yield coherent p-values too") {
    const DataMatrix x = gaussian_null(120, 20, 31);
    TestConfig config;
    config.extreme_law = LawUsed::analytic;
    config.combined_law = LawUsed::analytic;
    const auto outcomes = run_all(standardize(x), config);
    for (const auto& o : outcomes) {
        CHECK(o.reject == (o.p_value <= config.alpha));
        CHECK(o.law_used == LawUsed::analytic);
    }
}

TEST_CASE("empirical laws demand a matching tail table") {
    const DataMatrix x = gaussian_null(50, 8, 77);
    CHECK_THROWS_AS(test_extreme(x, 0.05, StatKind::covariance, LawUsed::empirical, nullptr),
                    validation_error);

    const EmpiricalTail wrong_n =
        simulate_tail(49, 8, 1000, StatKind::covariance, 1, TailOptions{});
    CHECK_THROWS_AS(test_extreme(x, 0.05, StatKind::covariance, LawUsed::empirical, &wrong_n),
                    validation_error);

    const EmpiricalTail wrong_kind =
        simulate_tail(50, 8, 1000, StatKind::spearman, 1, TailOptions{});
    CHECK_THROWS_AS(test_extreme(x, 0.05, StatKind::covariance, LawUsed::empirical,
                                 &wrong_kind),
                    validation_error);

    CHECK_THROWS_AS(test_quadratic(x, 1.5, StatKind::covariance), validation_error);
}

TEST_CASE("statistic labels are stable") {
    CHECK(statistic_label(StatisticName::s_n) == "S");
    CHECK(statistic_label(StatisticName::ts2) == "TS2");
    CHECK(law_label(LawUsed::empirical) == "empirical");
}
