#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "format.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace rieszboost {

/// Observational data: outcome y, treatment a, covariate matrix x.
/// Treatment may be binary (coded exactly 0/1) or continuous; which one a
/// given functional requires is enforced where the functional is applied.
class Dataset {
public:
    Dataset() = default;

    Dataset(std::vector<double> y, std::vector<double> a, Matrix x)
        : y_(std::move(y)), a_(std::move(a)), x_(std::move(x)) {
        if (y_.size() != a_.size() || y_.size() != x_.rows()) {
            throw std::invalid_argument("Dataset: y, a, x row counts differ");
        }
        if (y_.empty()) {
            throw std::invalid_argument("Dataset: empty");
        }
        if (x_.cols() == 0) {
            throw std::invalid_argument("Dataset: no covariate columns");
        }
        auto check = [](const std::vector<double>& v, const char* name) {
            for (double t : v) {
                if (!std::isfinite(t)) {
                    throw std::invalid_argument(std::string("Dataset: non-finite value in ") + name);
                }
            }
        };
        check(y_, "y");
        check(a_, "a");
        check(x_.data(), "x");
    }

    std::size_t n() const { return y_.size(); }
    std::size_t n_covariates() const { return x_.cols(); }

    const std::vector<double>& y() const { return y_; }
    const std::vector<double>& a() const { return a_; }
    const Matrix& x() const { return x_; }

    double y(std::size_t i) const { return y_[i]; }
    double a(std::size_t i) const { return a_[i]; }
    std::span<const double> x_row(std::size_t i) const { return x_.row(i); }

    /// True when every treatment value is exactly 0.0 or 1.0.
    bool treatment_is_binary() const {
        return std::all_of(a_.begin(), a_.end(),
                           [](double v) { return v == 0.0 || v == 1.0; });
    }

    Dataset subset(const std::vector<std::size_t>& idx) const {
        std::vector<double> y(idx.size()), a(idx.size());
        Matrix x(idx.size(), x_.cols());
        for (std::size_t j = 0; j < idx.size(); ++j) {
            y[j] = y_[idx[j]];
            a[j] = a_[idx[j]];
            auto src = x_.row(idx[j]);
            std::copy(src.begin(), src.end(), x.row(j).begin());
        }
        return Dataset(std::move(y), std::move(a), std::move(x));
    }

private:
    std::vector<double> y_;
    std::vector<double> a_;
    Matrix x_;
};

/// Column naming for CSV IO. Empty covariates means "every column that is
/// neither the outcome nor the treatment, in file order".
struct CsvSchema {
    std::string outcome = "y";
    std::string treatment = "a";
    std::vector<std::string> covariates;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    for (auto& s : out) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
    }
    return out;
}

inline double parse_cell(const std::string& cell, std::size_t data_row, const std::string& col) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = first + cell.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
        throw std::runtime_error("load_csv: cannot parse value '" + cell + "' at data row " +
                                 std::to_string(data_row) + ", column '" + col + "'");
    }
    return v;
}

}  // namespace detail

/// Load a dataset from a headered CSV. Only columns named by the schema are
/// parsed as numbers; any other column is ignored entirely.
inline Dataset load_csv(const std::string& path, const CsvSchema& schema = {}) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_csv: cannot open '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("load_csv: '" + path + "' is empty");
    }
    const auto header = detail::split_csv_line(line);
    auto find_col = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw std::runtime_error("load_csv: column '" + name + "' not found in '" + path + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    };

    const std::size_t y_col = find_col(schema.outcome);
    const std::size_t a_col = find_col(schema.treatment);
    std::vector<std::size_t> x_cols;
    std::vector<std::string> x_names;
    if (schema.covariates.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c != y_col && c != a_col) {
                x_cols.push_back(c);
                x_names.push_back(header[c]);
            }
        }
    } else {
        for (const auto& name : schema.covariates) {
            x_cols.push_back(find_col(name));
            x_names.push_back(name);
        }
    }

    std::vector<double> y, a;
    std::vector<double> xdata;
    std::size_t data_row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++data_row;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw std::runtime_error("load_csv: data row " + std::to_string(data_row) + " has " +
                                     std::to_string(cells.size()) + " cells, header has " +
                                     std::to_string(header.size()));
        }
        y.push_back(detail::parse_cell(cells[y_col], data_row, schema.outcome));
        a.push_back(detail::parse_cell(cells[a_col], data_row, schema.treatment));
        for (std::size_t j = 0; j < x_cols.size(); ++j) {
            xdata.push_back(detail::parse_cell(cells[x_cols[j]], data_row, x_names[j]));
        }
    }
    if (data_row == 0) {
        throw std::runtime_error("load_csv: '" + path + "' has no data rows");
    }
    Matrix x(data_row, x_cols.size(), std::move(xdata));
    return Dataset(std::move(y), std::move(a), std::move(x));
}

/// Write a dataset as CSV (columns y, a, x1..xd) with shortest round-trip
/// float formatting, so load_csv(save_csv(ds)) reproduces ds exactly.
inline void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_csv: cannot open '" + path + "' for writing");
    }
    out << "y,a";
    for (std::size_t c = 0; c < ds.n_covariates(); ++c) {
        out << ",x" << (c + 1);
    }
    out << "\n";
    for (std::size_t i = 0; i < ds.n(); ++i) {
        out << detail::format_double(ds.y(i)) << ',' << detail::format_double(ds.a(i));
        for (double v : ds.x_row(i)) {
            out << ',' << detail::format_double(v);
        }
        out << "\n";
    }
    if (!out) {
        throw std::runtime_error("save_csv: write to '" + path + "' failed");
    }
}

struct SplitResult {
    Dataset train;
    Dataset estimation;
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> estimation_idx;
};

/// Seeded random split. The permutation depends only on (n, seed); each half
/// keeps original dataset order.
inline SplitResult split(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw std::invalid_argument("split: fraction must be in (0, 1)");
    }
    const std::size_t n = ds.n();
    if (n < 2) {
        throw std::invalid_argument("split: need at least two rows");
    }
    auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);
    std::vector<std::size_t> tr(idx.begin(), idx.begin() + n_train);
    std::vector<std::size_t> es(idx.begin() + n_train, idx.end());
    std::sort(tr.begin(), tr.end());
    std::sort(es.begin(), es.end());
    return {ds.subset(tr), ds.subset(es), std::move(tr), std::move(es)};
}

/// Seeded k-fold partition of indices 0..n-1. Both index lists come back
/// sorted; fold sizes differ by at most one.
inline std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>
kfold(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2 || static_cast<std::size_t>(k) > n) {
        throw std::invalid_argument("kfold: need 2 <= k <= n");
    }
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);
    std::vector<int> fold_of(n);
    for (std::size_t i = 0; i < n; ++i) {
        fold_of[idx[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> folds(k);
    for (std::size_t i = 0; i < n; ++i) {
        for (int f = 0; f < k; ++f) {
            if (fold_of[i] == f) {
                folds[f].second.push_back(i);
            } else {
                folds[f].first.push_back(i);
            }
        }
    }
    return folds;
}

}  // namespace rieszboost
