#include "subforest/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

namespace subforest {

std::string to_string(Task task)
{
    return task == Task::regression ? "regression" : "classification";
}

Task parse_task(std::string_view name)
{
    if (name == "regression") return Task::regression;
    if (name == "classification" || name == "binary_classification") return Task::binary_classification;
    throw ValidationError("unknown task '" + std::string(name) + "' (expected regression or classification)");
}

int Dataset::feature_index(std::string_view name) const
{
    const auto it = std::find(feature_names.begin(), feature_names.end(), name);
    if (it == feature_names.end()) throw ValidationError("unknown feature '" + std::string(name) + "'");
    return static_cast<int>(it - feature_names.begin());
}

void Dataset::validate() const
{
    if (features.rows() < 2) throw ValidationError("dataset needs at least 2 rows");
    if (features.cols() < 1) throw ValidationError("dataset needs at least 1 feature");
    if (response.size() != features.rows()) throw ValidationError("response length does not match row count");
    if (feature_names.size() != n_features()) throw ValidationError("feature name count does not match column count");
    std::unordered_set<std::string> seen;
    for (const auto& name : feature_names)
        if (!seen.insert(name).second) throw ValidationError("duplicate feature name '" + name + "'");
    if (!features.allFinite() || !response.allFinite()) throw ValidationError("dataset contains NaN or Inf");
    if (task == Task::binary_classification) {
        for (Eigen::Index i = 0; i < response.size(); ++i)
            if (response[i] != -1.0 && response[i] != 1.0)
                throw ValidationError("classification response must be encoded as -1/+1");
    }
}

std::vector<std::vector<std::string>> parse_csv_text(std::string_view text)
{
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
        case '"':
            if (field_started && !field.empty()) throw ValidationError("CSV: stray quote inside unquoted field");
            in_quotes = true;
            field_started = true;
            break;
        case ',':
            end_field();
            break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_record();
            break;
        case '\n':
            end_record();
            break;
        default:
            field.push_back(ch);
            field_started = true;
        }
    }
    if (in_quotes) throw ValidationError("CSV: unterminated quoted field");
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

CsvTable read_csv_table(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    auto records = parse_csv_text(buf.str());
    if (records.empty()) throw ValidationError("'" + path.string() + "' is empty (header row required)");

    CsvTable table;
    table.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header.size())
            throw ValidationError("'" + path.string() + "': row " + std::to_string(r) + " has " +
                                  std::to_string(records[r].size()) + " fields, header has " +
                                  std::to_string(table.header.size()));
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

// Data rows are numbered from 1 (the header is not counted).
double parse_cell(std::string_view cell, std::size_t data_row, const std::string& column)
{
    const auto s = trim(cell);
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        throw ValidationError("non-numeric value '" + std::string(cell) + "' at row " + std::to_string(data_row) +
                              ", column \"" + column + "\"");
    if (!std::isfinite(v))
        throw ValidationError("non-finite value at row " + std::to_string(data_row) + ", column \"" + column + "\"");
    return v;
}

} // namespace

Dataset load_csv(const std::filesystem::path& path, std::string_view target, Task task)
{
    if (!std::filesystem::exists(path)) throw ValidationError("file not found: '" + path.string() + "'");
    const CsvTable table = read_csv_table(path);

    const auto target_it = std::find(table.header.begin(), table.header.end(), target);
    if (target_it == table.header.end())
        throw ValidationError("target column '" + std::string(target) + "' not found in '" + path.string() + "'");
    const auto target_col = static_cast<std::size_t>(target_it - table.header.begin());

    Dataset data;
    data.task = task;
    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c == target_col) continue;
        feature_cols.push_back(c);
        data.feature_names.push_back(table.header[c]);
    }

    const std::size_t n = table.rows.size();
    data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(feature_cols.size()));
    data.response.resize(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < feature_cols.size(); ++j)
            data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
                parse_cell(table.rows[r][feature_cols[j]], r + 1, table.header[feature_cols[j]]);
    }

    if (task == Task::regression) {
        for (std::size_t r = 0; r < n; ++r)
            data.response[static_cast<Eigen::Index>(r)] =
                parse_cell(table.rows[r][target_col], r + 1, table.header[target_col]);
    } else {
        std::set<std::string> labels;
        for (const auto& row : table.rows) labels.insert(std::string(trim(row[target_col])));
        if (labels.size() != 2)
            throw ValidationError("classification target '" + std::string(target) + "' must have exactly 2 distinct values, found " +
                                  std::to_string(labels.size()));
        data.class_labels.assign(labels.begin(), labels.end());
        for (std::size_t r = 0; r < n; ++r)
            data.response[static_cast<Eigen::Index>(r)] =
                std::string(trim(table.rows[r][target_col])) == data.class_labels[0] ? -1.0 : 1.0;
    }

    data.validate();
    return data;
}

Matrix load_feature_columns(const std::filesystem::path& path, std::span<const std::string> names)
{
    if (!std::filesystem::exists(path)) throw ValidationError("file not found: '" + path.string() + "'");
    const CsvTable table = read_csv_table(path);
    std::vector<std::size_t> cols;
    for (const auto& name : names) {
        const auto it = std::find(table.header.begin(), table.header.end(), name);
        if (it == table.header.end())
            throw ValidationError("column '" + name + "' not found in '" + path.string() + "'");
        cols.push_back(static_cast<std::size_t>(it - table.header.begin()));
    }
    Matrix X(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r)
        for (std::size_t j = 0; j < cols.size(); ++j)
            X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
                parse_cell(table.rows[r][cols[j]], r + 1, table.header[cols[j]]);
    return X;
}

std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string quote_csv(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

void write_csv(const Dataset& data, const std::filesystem::path& path, std::string_view target_name)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    for (const auto& name : data.feature_names) out << quote_csv(name) << ',';
    out << quote_csv(std::string(target_name)) << '\n';
    for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.features.cols(); ++j) out << format_double(data.features(i, j)) << ',';
        if (data.task == Task::binary_classification && data.class_labels.size() == 2)
            out << quote_csv(data.class_labels[data.response[i] < 0 ? 0 : 1]) << '\n';
        else
            out << format_double(data.response[i]) << '\n';
    }
}

Dataset subset_rows(const Dataset& data, std::span<const int> rows)
{
    Dataset out;
    out.feature_names = data.feature_names;
    out.task = data.task;
    out.class_labels = data.class_labels;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), data.features.cols());
    out.response.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.features.row(static_cast<Eigen::Index>(i)) = data.features.row(rows[i]);
        out.response[static_cast<Eigen::Index>(i)] = data.response[rows[i]];
    }
    return out;
}

Dataset select_columns(const Dataset& data, std::span<const int> columns)
{
    Dataset out;
    out.task = data.task;
    out.class_labels = data.class_labels;
    out.response = data.response;
    out.features.resize(data.features.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
        out.features.col(static_cast<Eigen::Index>(j)) = data.features.col(columns[j]);
        out.feature_names.push_back(data.feature_names.at(static_cast<std::size_t>(columns[j])));
    }
    return out;
}

std::pair<std::vector<int>, std::vector<int>> split_indices(std::size_t n, double test_fraction, std::uint64_t seed)
{
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ValidationError("test fraction must lie in (0, 1)");
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * test_fraction));
    if (n_test < 1) throw ValidationError("test split would be empty");
    if (n - n_test < 2) throw ValidationError("training split would have fewer than 2 rows");

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(mix_seed(seed));
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<int> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<int> train(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction, std::uint64_t seed)
{
    const auto [train, test] = split_indices(data.n_rows(), test_fraction, seed);
    return {subset_rows(data, train), subset_rows(data, test)};
}

} // namespace subforest
