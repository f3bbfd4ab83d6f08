#include "core/dataset.hpp"

#include <cmath>

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/tree.hpp"

namespace legigpt::models {

void LabeledMatrix::push_row(std::span<const double> row, int label,
                             std::string bill_id, std::string legislator_id) {
    if (row.size() != n_cols) {
        throw Error(errc::invalid_argument, "push_row: width mismatch");
    }
    values.insert(values.end(), row.begin(), row.end());
    labels.push_back(label);
    row_ids.emplace_back(std::move(bill_id), std::move(legislator_id));
}

LabeledMatrix LabeledMatrix::select(const std::vector<std::size_t>& indices) const {
    LabeledMatrix out;
    out.n_cols = n_cols;
    out.column_names = column_names;
    out.values.reserve(indices.size() * n_cols);
    out.labels.reserve(indices.size());
    out.row_ids.reserve(indices.size());
    for (const std::size_t i : indices) {
        const auto r = row(i);
        out.values.insert(out.values.end(), r.begin(), r.end());
        out.labels.push_back(labels[i]);
        out.row_ids.push_back(row_ids[i]);
    }
    return out;
}

LabeledMatrix LabeledMatrix::head(std::size_t n) const {
    std::vector<std::size_t> idx;
    const std::size_t take = std::min(n, n_rows());
    idx.reserve(take);
    for (std::size_t i = 0; i < take; ++i) idx.push_back(i);
    return select(idx);
}

SplitResult split_train_test(const LabeledMatrix& matrix, double test_fraction,
                             std::uint64_t seed) {
    const std::size_t n = matrix.n_rows();
    if (n == 0) {
        throw Error(errc::invalid_argument, "split_train_test: empty matrix");
    }
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error(errc::invalid_argument,
                    "split_train_test: test_fraction must be in (0,1)");
    }
    const auto n_train =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - test_fraction)));
    if (n_train == 0 || n_train == n) {
        throw Error(errc::invalid_argument,
                    "split_train_test: degenerate split (" + std::to_string(n_train) +
                        "/" + std::to_string(n - n_train) + ")");
    }
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);

    SplitResult result;
    result.train_indices.assign(idx.begin(), idx.begin() + static_cast<long>(n_train));
    result.test_indices.assign(idx.begin() + static_cast<long>(n_train), idx.end());
    result.train = matrix.select(result.train_indices);
    result.test = matrix.select(result.test_indices);
    return result;
}

void write_matrix(const std::filesystem::path& path, const LabeledMatrix& matrix) {
    csv::Table t;
    t.header = {"bill_id", "legislator_id"};
    for (const auto& name : matrix.column_names) t.header.push_back(name);
    t.header.push_back("label");
    for (std::size_t i = 0; i < matrix.n_rows(); ++i) {
        std::vector<std::string> row;
        row.reserve(matrix.n_cols + 3);
        row.push_back(matrix.row_ids[i].first);
        row.push_back(matrix.row_ids[i].second);
        for (const double v : matrix.row(i)) {
            row.push_back(is_missing(v) ? "" : csv::format_double(v));
        }
        row.push_back(std::to_string(matrix.labels[i]));
        t.rows.push_back(std::move(row));
    }
    csv::write_file(path, t);
}

LabeledMatrix read_matrix(const std::filesystem::path& path) {
    const csv::Table t = csv::read_file(path);
    if (t.header.size() < 4 || t.header[0] != "bill_id" || t.header[1] != "legislator_id" ||
        t.header.back() != "label") {
        throw Error(errc::parse, path.string() + ": unexpected matrix header");
    }
    LabeledMatrix m;
    m.n_cols = t.header.size() - 3;
    m.column_names.assign(t.header.begin() + 2, t.header.end() - 1);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        for (std::size_t j = 0; j < m.n_cols; ++j) {
            const auto& field = row[2 + j];
            m.values.push_back(field.empty()
                                   ? kMissing
                                   : csv::parse_double(field, r + 1, m.column_names[j]));
        }
        const long long label = csv::parse_int(row.back(), r + 1, "label");
        if (label != 0 && label != 1) {
            throw Error(errc::parse,
                        path.string() + ": row " + std::to_string(r + 1) +
                            ": label must be 0 or 1");
        }
        m.labels.push_back(static_cast<int>(label));
        m.row_ids.emplace_back(row[0], row[1]);
    }
    return m;
}

}  // namespace legigpt::models
