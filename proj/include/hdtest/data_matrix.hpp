#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hdtest {

/// n x p observation matrix: rows are i.i.d. samples, columns are variables.
/// Stored column-major so the pairwise kernels walk contiguous memory.
struct DataMatrix {
    std::size_t n = 0;  ///< sample count (rows)
    std::size_t p = 0;  ///< variable count (columns)
    std::vector<double> values;  ///< values[i * n + k] = x(k, i)

    DataMatrix() = default;
    DataMatrix(std::size_t rows, std::size_t cols)
        : n(rows), p(cols), values(rows * cols, 0.0) {}

    double& at(std::size_t k, std::size_t i) { return values[i * n + k]; }
    double at(std::size_t k, std::size_t i) const { return values[i * n + k]; }

    std::span<const double> column(std::size_t i) const {
        return {values.data() + i * n, n};
    }
    std::span<double> column(std::size_t i) {
        return {values.data() + i * n, n};
    }

    /// Throws validation_error unless n >= 2, p >= 2 and all entries are finite.
    void validate() const;
};

struct LoadOptions {
    /// When true (default) a non-numeric first row is treated as a header.
    bool detect_header = true;
    char delimiter = ',';
};

/// Parses a delimited numeric table, rows = observations.
/// Errors carry 1-based row/column positions; missing cells are rejected.
DataMatrix load_matrix(std::istream& in, const LoadOptions& opts = {});
DataMatrix load_matrix_file(const std::string& path, const LoadOptions& opts = {});

void write_csv(std::ostream& out, const DataMatrix& x);
void write_csv_file(const std::string& path, const DataMatrix& x);

/// Rescales every column to sample mean 0 and variance 1 (divisor n).
/// Throws validation_error on a constant column, naming its index.
DataMatrix standardize(const DataMatrix& x);

/// Per-column sample moments with divisor-n conventions.
struct ColumnMoments {
    std::vector<double> mean;  ///< sample means
    std::vector<double> var;   ///< sample variances, divisor n
    std::vector<double> m4;    ///< fourth central moments, divisor n
};

ColumnMoments column_moments(const DataMatrix& x);

/// Moments of a standard normal column (m4 = 3), for use when the null
/// marginal is known rather than estimated.
ColumnMoments gaussian_moments(std::size_t p);

}  // namespace hdtest
