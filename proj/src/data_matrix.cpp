#include "hdtest/data_matrix.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "hdtest/errors.hpp"

namespace hdtest {

namespace {

void split_fields(const std::string& line, char delim, std::vector<std::string>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string trimmed(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

bool parse_double(const std::string& field, double& out) {
    const std::string t = trimmed(field);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

}  // namespace

void DataMatrix::validate() const {
    if (n < 2 || p < 2) {
        throw validation_error("matrix must have n >= 2 rows and p >= 2 columns (got n=" +
                               std::to_string(n) + ", p=" + std::to_string(p) + ")");
    }
    if (values.size() != n * p) {
        throw validation_error("matrix storage size does not match n*p");
    }
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            if (!std::isfinite(at(k, i))) {
                throw validation_error("non-finite entry at row " + std::to_string(k + 1) +
                                       ", column " + std::to_string(i + 1));
            }
        }
    }
}

DataMatrix load_matrix(std::istream& in, const LoadOptions& opts) {
    std::vector<std::vector<double>> rows;
    std::vector<std::string> fields;
    std::string line;
    std::size_t data_row = 0;
    bool first_content_line = true;

    while (std::getline(in, line)) {
        if (trimmed(line).empty()) continue;
        split_fields(line, opts.delimiter, fields);

        if (first_content_line && opts.detect_header) {
            first_content_line = false;
            bool all_numeric = true;
            double tmp;
            for (const auto& f : fields) {
                if (!parse_double(f, tmp)) {
                    all_numeric = false;
                    break;
                }
            }
            if (!all_numeric) continue;  // header row, skip
        }
        first_content_line = false;

        ++data_row;
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::string t = trimmed(fields[c]);
            if (t.empty()) {
                throw validation_error("missing value at row " + std::to_string(data_row) +
                                       ", column " + std::to_string(c + 1));
            }
            double v;
            if (!parse_double(t, v)) {
                throw validation_error("non-numeric cell \"" + t + "\" at row " +
                                       std::to_string(data_row) + ", column " +
                                       std::to_string(c + 1));
            }
            if (!std::isfinite(v)) {
                throw validation_error("non-finite value at row " + std::to_string(data_row) +
                                       ", column " + std::to_string(c + 1));
            }
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw validation_error("ragged row " + std::to_string(data_row) + ": expected " +
                                   std::to_string(rows.front().size()) + " columns, got " +
                                   std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }

    if (rows.size() < 2) {
        throw validation_error("need at least 2 observation rows, got " +
                               std::to_string(rows.size()));
    }
    const std::size_t p = rows.front().size();
    if (p < 2) {
        throw validation_error("need at least 2 variable columns, got " + std::to_string(p));
    }

    DataMatrix x(rows.size(), p);
    for (std::size_t k = 0; k < rows.size(); ++k)
        for (std::size_t i = 0; i < p; ++i) x.at(k, i) = rows[k][i];
    return x;
}

DataMatrix load_matrix_file(const std::string& path, const LoadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open input file: " + path);
    return load_matrix(in, opts);
}

void write_csv(std::ostream& out, const DataMatrix& x) {
    out << std::setprecision(17);
    for (std::size_t k = 0; k < x.n; ++k) {
        for (std::size_t i = 0; i < x.p; ++i) {
            if (i) out << ',';
            out << x.at(k, i);
        }
        out << '\n';
    }
}

void write_csv_file(const std::string& path, const DataMatrix& x) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot open output file: " + path);
    write_csv(out, x);
}

DataMatrix standardize(const DataMatrix& x) {
    x.validate();
    DataMatrix out(x.n, x.p);
    const double inv_n = 1.0 / static_cast<double>(x.n);
    for (std::size_t i = 0; i < x.p; ++i) {
        const auto col = x.column(i);
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
            throw validation_error("column " + std::to_string(i + 1) +
                                   " is constant; cannot standardize");
        }
        const double inv_sd = 1.0 / std::sqrt(var);
        auto dst = out.column(i);
        for (std::size_t k = 0; k < x.n; ++k) dst[k] = (col[k] - mean) * inv_sd;
    }
    return out;
}

ColumnMoments column_moments(const DataMatrix& x) {
    x.validate();
    ColumnMoments m;
    m.mean.resize(x.p);
    m.var.resize(x.p);
    m.m4.resize(x.p);
    const double inv_n = 1.0 / static_cast<double>(x.n);
    for (std::size_t i = 0; i < x.p; ++i) {
        const auto col = x.column(i);
        double mean = 0.0;
        for (double v : col) mean += v;
        mean *= inv_n;
        double var = 0.0, m4 = 0.0;
        for (double v : col) {
            const double d = v - mean;
            const double d2 = d * d;
            var += d2;
            m4 += d2 * d2;
        }
        m.mean[i] = mean;
        m.var[i] = var * inv_n;
        m.m4[i] = m4 * inv_n;
    }
    return m;
}

ColumnMoments gaussian_moments(std::size_t p) {
    ColumnMoments m;
    m.mean.assign(p, 0.0);
    m.var.assign(p, 1.0);
    m.m4.assign(p, 3.0);
    return m;
}

}  // namespace hdtest
