#include "hdtest/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hdtest/errors.hpp"
#include "hdtest/parallel.hpp"

namespace hdtest {

namespace {

void check_index(std::size_t i, std::size_t p) {
    if (i >= p) {
        throw validation_error("column index " + std::to_string(i) + " out of range (p=" +
                               std::to_string(p) + ")");
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
    return acc;
}

}  // namespace

double sample_cov_entry(const DataMatrix& x, std::size_t i, std::size_t j) {
    check_index(i, x.p);
    check_index(j, x.p);
    return dot(x.column(i), x.column(j)) / static_cast<double>(x.n);
}

RankMatrix compute_ranks(const DataMatrix& x) {
    x.validate();
    RankMatrix r;
    r.n = x.n;
    r.p = x.p;
    r.values.resize(x.n * x.p);

    const double scale = std::sqrt(12.0 / (static_cast<double>(x.n) * x.n - 1.0));
    const double center = (static_cast<double>(x.n) + 1.0) / 2.0;

    std::vector<std::size_t> order(x.n);
    for (std::size_t i = 0; i < x.p; ++i) {
        const auto col = x.column(i);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });

        double* dst = r.values.data() + i * x.n;
        std::size_t k = 0;
        while (k < x.n) {
            std::size_t e = k + 1;
            while (e < x.n && col[order[e]] == col[order[k]]) ++e;
            if (e - k > 1) r.has_ties = true;
            // midrank over the tied block [k, e): average of ranks k+1 .. e
            const double rank = (static_cast<double>(k + 1) + static_cast<double>(e)) / 2.0;
            const double value = scale * (rank - center);
            for (std::size_t t = k; t < e; ++t) dst[order[t]] = value;
            k = e;
        }
    }
    return r;
}

double spearman_entry(const RankMatrix& r, std::size_t i, std::size_t j) {
    check_index(i, r.p);
    check_index(j, r.p);
    return dot(r.column(i), r.column(j)) / static_cast<double>(r.n);
}

PairAccumulation offdiag_square_sum_and_max(std::size_t n, std::size_t p,
                                            const double* colmajor, unsigned threads) {
    // One chunk per first column index; merge in ascending order.
    const std::size_t chunks = p - 1;
    std::vector<double> sums(chunks, 0.0);
    std::vector<double> maxes(chunks, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);

    parallel_chunks(chunks, threads, [&](std::size_t i) {
        const double* ci = colmajor + i * n;
        double sum = 0.0;
        double mx = 0.0;
        for (std::size_t j = i + 1; j < p; ++j) {
            const double* cj = colmajor + j * n;
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += ci[k] * cj[k];
            const double entry = acc * inv_n;
            sum += entry * entry;
            mx = std::max(mx, std::abs(entry));
        }
        sums[i] = sum;
        maxes[i] = mx;
    });

    PairAccumulation out;
    for (std::size_t i = 0; i < chunks; ++i) {
        out.square_sum += sums[i];
        out.abs_max = std::max(out.abs_max, maxes[i]);
    }
    return out;
}

StatisticQuartet quartet(const DataMatrix& x, unsigned threads) {
    x.validate();
    const RankMatrix ranks = compute_ranks(x);

    const PairAccumulation cov = offdiag_square_sum_and_max(x.n, x.p, x.values.data(), threads);
    const PairAccumulation rnk =
        offdiag_square_sum_and_max(x.n, x.p, ranks.values.data(), threads);

    StatisticQuartet q;
    q.s_n = cov.square_sum;
    q.l_n = cov.abs_max;
    q.t_n = rnk.square_sum;
    q.m_n = rnk.abs_max;
    return q;
}

}  // namespace hdtest
