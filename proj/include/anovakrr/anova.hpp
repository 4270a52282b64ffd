#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "anovakrr/fastsum.hpp"
#include "anovakrr/nfft.hpp"

namespace anovakrr {

inline constexpr int kWindowSize = 3;

// Mutual information between each feature and the binary label, in nats.
struct MisReport {
  std::vector<double> scores;
  // Feature indices by descending score, ties by ascending index.
  std::vector<int> ranking;
  int bins = 0;
};

// Plug-in estimate from a joint histogram: each feature is cut into
// B = min(64, ceil(sqrt(N))) equal-width bins over its observed range.
MisReport mis_scores(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

nlohmann::json to_json(const MisReport& report, const std::vector<std::string>& names);

// Disjoint feature windows W_1..W_P with equal weights 1/P. All windows but
// the last hold exactly three features; the last holds one to three.
struct WindowSet {
  std::vector<std::vector<int>> windows;
  std::vector<double> weights;
  // Features excluded from every window, ascending.
  std::vector<int> dropped;
  int feature_count = 0;

  // Chunks `features` three at a time in the given order; everything in
  // [0, feature_count) not listed is recorded as dropped.
  static WindowSet from_order(const std::vector<int>& features, int feature_count);

  std::size_t size() const { return windows.size(); }
  // Retained features in window order.
  std::vector<int> retained() const;
  void validate() const;
};

// Keeps features with score >= threshold, in ranking order.
WindowSet build_windows(const MisReport& report, double threshold);

nlohmann::json to_json(const WindowSet& windows);
WindowSet windows_from_json(const nlohmann::json& j);

// Columns of `x` selected by one window.
Eigen::MatrixXd window_columns(const Eigen::MatrixXd& x, const std::vector<int>& window);

/// K = sum_l eta_l K_l with K_l the Gaussian kernel on the columns of W_l,
/// each term applied through its own fast summation operator.
class AnovaKernelOperator {
 public:
  static AnovaKernelOperator build(const Eigen::MatrixXd& x, const WindowSet& windows,
                                   double sigma, const AccuracyProfile& profile);
  // Rectangular variant: rows of the result correspond to `targets`.
  static AnovaKernelOperator build(const Eigen::MatrixXd& x, const WindowSet& windows,
                                   double sigma, const AccuracyProfile& profile,
                                   const Eigen::MatrixXd& targets);

  Eigen::VectorXd apply(const Eigen::VectorXd& alpha) const;

  Eigen::Index source_count() const { return sources_; }
  Eigen::Index target_count() const { return targets_; }
  const WindowSet& windows() const { return windows_; }
  double sigma() const { return sigma_; }
  const std::vector<FastsumOperator>& terms() const { return terms_; }

 private:
  AnovaKernelOperator(WindowSet windows, double sigma, std::vector<FastsumOperator> terms,
                      Eigen::Index sources, Eigen::Index targets);

  static AnovaKernelOperator build_impl(const Eigen::MatrixXd& x, const WindowSet& windows,
                                        double sigma, const AccuracyProfile& profile,
                                        const Eigen::MatrixXd* targets);

  WindowSet windows_;
  double sigma_;
  std::vector<FastsumOperator> terms_;
  Eigen::Index sources_;
  Eigen::Index targets_;
};

}  // namespace anovakrr
