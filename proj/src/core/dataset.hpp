#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace legigpt::models {

/// Row-major numeric matrix with binary labels and stable row identity.
/// Missing entries are NaN.
struct LabeledMatrix {
    std::size_t n_cols = 0;
    std::vector<double> values;  // n_rows * n_cols
    std::vector<int> labels;     // 1 = conservative, 0 = progressive
    std::vector<std::string> column_names;
    std::vector<std::pair<std::string, std::string>> row_ids;  // (bill, legislator)

    std::size_t n_rows() const { return n_cols ? values.size() / n_cols : 0; }

    std::span<const double> row(std::size_t i) const {
        return std::span(values.data() + i * n_cols, n_cols);
    }

    void push_row(std::span<const double> row, int label, std::string bill_id,
                  std::string legislator_id);

    /// New matrix containing the given rows, in the given order.
    LabeledMatrix select(const std::vector<std::size_t>& indices) const;

    /// First n rows.
    LabeledMatrix head(std::size_t n) const;
};

struct SplitResult {
    LabeledMatrix train;
    LabeledMatrix test;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

/// Seeded uniform partition: train gets floor(n * (1 - test_fraction))
/// rows, test the remainder. Indices within each side keep shuffled order.
SplitResult split_train_test(const LabeledMatrix& matrix, double test_fraction,
                             std::uint64_t seed);

void write_matrix(const std::filesystem::path& path, const LabeledMatrix& matrix);
LabeledMatrix read_matrix(const std::filesystem::path& path);

}  // namespace legigpt::models
