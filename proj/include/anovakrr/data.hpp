#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace anovakrr {

// Feature matrix with labels in {-1, +1}.
struct Dataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> column_names;

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index cols() const { return x.cols(); }
  // Rows selected by index, in the given order.
  Dataset subset(const std::vector<Eigen::Index>& rows) const;
  void validate() const;
};

// Numeric columns of a headed CSV document, with the optional label column
// kept as raw strings. `labels` stays empty when the header has no column
// named `label_column`.
struct FeatureTable {
  Eigen::MatrixXd x;
  std::vector<std::string> column_names;
  std::vector<std::string> labels;
  bool has_labels = false;
};

FeatureTable parse_feature_table(const std::string& text, const std::string& label_column,
                                 const std::string& source = "<input>");
FeatureTable load_feature_table(const std::filesystem::path& path,
                                const std::string& label_column);

// Reads a headed CSV file (RFC 4180 quoting, '.' decimal separator). The
// column named `label_column` becomes y: `positive_label` maps to +1 and the
// single other value present maps to -1. Every other column must parse as a
// finite real.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                 const std::string& positive_label);
// Same, reading from an in-memory string; `source` names it in error messages.
Dataset parse_csv(const std::string& text, const std::string& label_column,
                  const std::string& positive_label, const std::string& source = "<input>");

// Splits one CSV document into records of fields.
std::vector<std::vector<std::string>> parse_csv_records(const std::string& text,
                                                        const std::string& source);

// Per-column mean and population standard deviation; zero deviations are
// stored as 1 so constant columns map to zero.
struct ScalerStats {
  Eigen::VectorXd means;
  Eigen::VectorXd stds;
};

ScalerStats zscore_fit(const Eigen::MatrixXd& train);
inline ScalerStats zscore_fit(const Dataset& train) { return zscore_fit(train.x); }
Eigen::MatrixXd zscore_apply(const ScalerStats& stats, const Eigen::MatrixXd& x);

// Keeps every minority row and an equally sized random subset of the
// majority rows, without replacement. Row order is preserved.
Dataset balance_undersample(const Dataset& ds, std::uint64_t seed);

// Row indices of a train/test partition. With `shuffle` the rows are permuted
// by the seeded generator first; otherwise the first rows go to training.
// Both index lists come back ascending.
std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> split_indices(
    Eigen::Index n, double fraction, std::uint64_t seed, bool shuffle = true);

std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double fraction, std::uint64_t seed,
                                             bool shuffle = true);

}  // namespace anovakrr
