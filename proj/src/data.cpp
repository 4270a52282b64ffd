#include "anovakrr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "anovakrr/error.hpp"
#include "anovakrr/random.hpp"

namespace anovakrr {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::vector<Eigen::Index> indices_where(const Eigen::VectorXd& y, double label) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] == label) out.push_back(i);
  }
  return out;
}

}  // namespace

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.x = x(rows, Eigen::all);
  out.y = y(rows);
  out.column_names = column_names;
  return out;
}

void Dataset::validate() const {
  if (y.size() != x.rows()) throw ValidationError("dataset: label count differs from row count");
  if (static_cast<Eigen::Index>(column_names.size()) != x.cols()) {
    throw ValidationError("dataset: column name count differs from column count");
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 1.0 && y[i] != -1.0) throw ValidationError("dataset: labels must be -1 or +1");
  }
  if (!x.allFinite()) throw ValidationError("dataset: non-finite feature value");
}

std::vector<std::vector<std::string>> parse_csv_records(const std::string& text,
                                                        const std::string& source) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;      // inside a quoted field
  bool was_quoted = false;  // current field started with a quote
  bool any = false;         // current record has content
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(was_quoted ? field : trim(field));
    field.clear();
    was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty() && !any)) records.push_back(std::move(record));
    record.clear();
    any = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!trim(field).empty() || was_quoted) {
          throw IoError(source + ":" + std::to_string(line) + ": stray quote inside a field");
        }
        field.clear();
        quoted = true;
        was_quoted = true;
        any = true;
        break;
      case ',':
        end_field();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        if (was_quoted && c != ' ' && c != '\t') {
          throw IoError(source + ":" + std::to_string(line) + ": text after a closing quote");
        }
        field.push_back(c);
        any = true;
    }
  }
  if (quoted) throw IoError(source + ": unterminated quoted field");
  if (any || !field.empty() || !record.empty()) end_record();
  return records;
}

namespace {

FeatureTable table_from_text(const std::string& text, const std::string& label_column,
                             const std::string& source, bool require_label) {
  const auto records = parse_csv_records(text, source);
  if (records.empty()) throw ValidationError(source + ": missing header row");
  const auto& header = records.front();
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  const bool has_labels = label_it != header.end();
  if (require_label && !has_labels) {
    throw ValidationError(source + ": label column '" + label_column + "' not found in header");
  }
  const auto label_index =
      has_labels ? static_cast<std::size_t>(label_it - header.begin()) : header.size();
  const auto rows = static_cast<Eigen::Index>(records.size() - 1);
  const auto cols = static_cast<Eigen::Index>(header.size() - (has_labels ? 1 : 0));

  FeatureTable table;
  table.has_labels = has_labels;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_index) table.column_names.push_back(header[c]);
  }
  table.x.resize(rows, cols);
  if (has_labels) table.labels.reserve(static_cast<std::size_t>(rows));

  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& rec = records[static_cast<std::size_t>(r) + 1];
    const std::string where = source + ": data row " + std::to_string(r + 1);
    if (rec.size() != header.size()) {
      throw ValidationError(where + " has " + std::to_string(rec.size()) + " fields, header has " +
                            std::to_string(header.size()));
    }
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < rec.size(); ++c) {
      if (c == label_index) continue;
      const std::string& cell = rec[c];
      double value = 0.0;
      const char* first = cell.data();
      const char* last = first + cell.size();
      if (first != last && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, value);
      if (cell.empty() || ec != std::errc() || ptr != last) {
        throw ValidationError(where + ", column '" + header[c] + "': cannot parse '" + cell +
                              "' as a real number");
      }
      if (!std::isfinite(value)) {
        throw ValidationError(where + ", column '" + header[c] + "': non-finite value '" + cell +
                              "'");
      }
      table.x(r, col++) = value;
    }
    if (has_labels) table.labels.push_back(rec[label_index]);
  }
  return table;
}

}  // namespace

FeatureTable parse_feature_table(const std::string& text, const std::string& label_column,
                                 const std::string& source) {
  return table_from_text(text, label_column, source, false);
}

Dataset parse_csv(const std::string& text, const std::string& label_column,
                  const std::string& positive_label, const std::string& source) {
  FeatureTable table = table_from_text(text, label_column, source, true);
  std::vector<std::string> distinct;
  Dataset ds;
  ds.y.resize(table.x.rows());
  for (std::size_t r = 0; r < table.labels.size(); ++r) {
    const std::string& label = table.labels[r];
    if (std::find(distinct.begin(), distinct.end(), label) == distinct.end()) {
      distinct.push_back(label);
      if (distinct.size() > 2) {
        throw ValidationError(source + ": data row " + std::to_string(r + 1) + ": label column '" +
                              label_column + "' has more than two distinct values");
      }
    }
    ds.y[static_cast<Eigen::Index>(r)] = label == positive_label ? 1.0 : -1.0;
  }
  if (distinct.size() != 2) {
    throw ValidationError(source + ": label column '" + label_column +
                          "' must hold exactly two distinct values");
  }
  if (std::find(distinct.begin(), distinct.end(), positive_label) == distinct.end()) {
    throw ValidationError(source + ": positive label '" + positive_label +
                          "' does not occur in column '" + label_column + "'");
  }
  ds.x = std::move(table.x);
  ds.column_names = std::move(table.column_names);
  return ds;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("read error on '" + path.string() + "'");
  return buffer.str();
}

}  // namespace

FeatureTable load_feature_table(const std::filesystem::path& path,
                                const std::string& label_column) {
  return parse_feature_table(read_file(path), label_column, path.string());
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                 const std::string& positive_label) {
  return parse_csv(read_file(path), label_column, positive_label, path.string());
}

ScalerStats zscore_fit(const Eigen::MatrixXd& train) {
  if (train.rows() == 0) throw ValidationError("zscore: empty training data");
  ScalerStats stats;
  stats.means = train.colwise().mean().transpose();
  stats.stds.resize(train.cols());
  const double n = static_cast<double>(train.rows());
  for (Eigen::Index c = 0; c < train.cols(); ++c) {
    const double var = (train.col(c).array() - stats.means[c]).square().sum() / n;
    const double sd = std::sqrt(var);
    stats.stds[c] = sd > 0.0 ? sd : 1.0;
  }
  return stats;
}

Eigen::MatrixXd zscore_apply(const ScalerStats& stats, const Eigen::MatrixXd& x) {
  if (x.cols() != stats.means.size()) {
    throw ValidationError("zscore: data has " + std::to_string(x.cols()) +
                          " columns, scaler was fitted on " + std::to_string(stats.means.size()));
  }
  return (x.rowwise() - stats.means.transpose()).array().rowwise() /
         stats.stds.transpose().array();
}

Dataset balance_undersample(const Dataset& ds, std::uint64_t seed) {
  auto pos = indices_where(ds.y, 1.0);
  auto neg = indices_where(ds.y, -1.0);
  if (pos.empty() || neg.empty()) throw ValidationError("balance: both classes must be present");
  auto& majority = pos.size() > neg.size() ? pos : neg;
  const auto& minority = pos.size() > neg.size() ? neg : pos;
  Rng rng(seed);
  shuffle(majority, rng);
  majority.resize(minority.size());
  std::vector<Eigen::Index> keep = pos;
  keep.insert(keep.end(), neg.begin(), neg.end());
  std::sort(keep.begin(), keep.end());
  return ds.subset(keep);
}

std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> split_indices(
    Eigen::Index n, double fraction, std::uint64_t seed, bool shuffle_rows) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ValidationError("split: fraction must lie strictly between 0 and 1");
  }
  if (n < 2) throw ValidationError("split: need at least two rows");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  if (shuffle_rows) {
    Rng rng(seed);
    shuffle(order, rng);
  }
  auto train_count = static_cast<Eigen::Index>(std::llround(fraction * static_cast<double>(n)));
  train_count = std::clamp<Eigen::Index>(train_count, 1, n - 1);
  std::vector<Eigen::Index> train(order.begin(), order.begin() + train_count);
  std::vector<Eigen::Index> test(order.begin() + train_count, order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double fraction, std::uint64_t seed,
                                             bool shuffle_rows) {
  const auto [train, test] = split_indices(ds.rows(), fraction, seed, shuffle_rows);
  return {ds.subset(train), ds.subset(test)};
}

}  // namespace anovakrr
