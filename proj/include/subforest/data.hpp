#pragma once

#include "subforest/common.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace subforest {

enum class Task { regression, binary_classification };

std::string to_string(Task task);
Task parse_task(std::string_view name);

/// Tabular data set: N x P feature matrix with named columns and a response.
/// For classification the response is encoded as -1 / +1.
struct Dataset {
    Matrix features;
    std::vector<std::string> feature_names;
    Vector response;
    Task task = Task::regression;

    /// Raw labels behind -1 and +1 (classification only).
    std::vector<std::string> class_labels;

    [[nodiscard]] std::size_t n_rows() const noexcept { return static_cast<std::size_t>(features.rows()); }
    [[nodiscard]] std::size_t n_features() const noexcept { return static_cast<std::size_t>(features.cols()); }

    /// Index of a named column; throws ValidationError when absent.
    [[nodiscard]] int feature_index(std::string_view name) const;

    /// Throws ValidationError if any invariant is broken.
    void validate() const;
};

/// Raw CSV table: header plus unparsed cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv_table(const std::filesystem::path& path);
std::vector<std::vector<std::string>> parse_csv_text(std::string_view text);

Dataset load_csv(const std::filesystem::path& path, std::string_view target, Task task);

/// Reads only the named feature columns (any extra columns are ignored).
Matrix load_feature_columns(const std::filesystem::path& path, std::span<const std::string> names);

/// Writes features followed by the response under `target_name`. Values are
/// printed in shortest round-trip form.
void write_csv(const Dataset& data, const std::filesystem::path& path, std::string_view target_name = "y");

std::string format_double(double v);

/// Quotes a CSV cell when it contains a separator, quote or line break.
std::string quote_csv(const std::string& s);

Dataset subset_rows(const Dataset& data, std::span<const int> rows);
Dataset select_columns(const Dataset& data, std::span<const int> columns);

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction, std::uint64_t seed);

/// Row indices of the split (train, test) without materializing the sets.
std::pair<std::vector<int>, std::vector<int>> split_indices(std::size_t n, double test_fraction, std::uint64_t seed);

} // namespace subforest
