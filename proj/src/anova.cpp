#include "anovakrr/anova.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "anovakrr/error.hpp"
#include "anovakrr/parallel.hpp"

namespace anovakrr {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

// ---------------------------------------------------------------- MIS

MisReport mis_scores(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.rows();
  require(n >= 2, "mis: need at least two samples");
  require(y.size() == n, "mis: label count differs from row count");
  Eigen::Index positives = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    require(y[i] == 1.0 || y[i] == -1.0, "mis: labels must be -1 or +1");
    if (y[i] > 0) ++positives;
  }
  require(positives > 0 && positives < n, "mis: both classes must be present");

  MisReport report;
  report.bins = static_cast<int>(
      std::min<double>(64.0, std::ceil(std::sqrt(static_cast<double>(n)))));
  const int bins = report.bins;
  const double total = static_cast<double>(n);
  const double class_count[2] = {static_cast<double>(n - positives),
                                 static_cast<double>(positives)};

  report.scores.resize(static_cast<std::size_t>(x.cols()));
  std::vector<double> joint(static_cast<std::size_t>(2 * bins));
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    const double lo = x.col(f).minCoeff();
    const double hi = x.col(f).maxCoeff();
    std::fill(joint.begin(), joint.end(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      int bin = 0;
      if (hi > lo) {
        bin = static_cast<int>(std::floor((x(i, f) - lo) / (hi - lo) * bins));
        bin = std::clamp(bin, 0, bins - 1);
      }
      joint[static_cast<std::size_t>(2 * bin + (y[i] > 0 ? 1 : 0))] += 1.0;
    }
    double mi = 0.0;
    for (int b = 0; b < bins; ++b) {
      const double in_bin = joint[2 * b] + joint[2 * b + 1];
      for (int c = 0; c < 2; ++c) {
        const double count = joint[static_cast<std::size_t>(2 * b + c)];
        if (count > 0.0) mi += count / total * std::log(count * total / (in_bin * class_count[c]));
      }
    }
    report.scores[static_cast<std::size_t>(f)] = std::max(0.0, mi);
  }

  report.ranking.resize(report.scores.size());
  std::iota(report.ranking.begin(), report.ranking.end(), 0);
  std::stable_sort(report.ranking.begin(), report.ranking.end(), [&](int a, int b) {
    return report.scores[static_cast<std::size_t>(a)] > report.scores[static_cast<std::size_t>(b)];
  });
  return report;
}

nlohmann::json to_json(const MisReport& report, const std::vector<std::string>& names) {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t f = 0; f < report.scores.size(); ++f) {
    features.push_back({{"index", f},
                        {"name", f < names.size() ? names[f] : std::to_string(f)},
                        {"score", report.scores[f]}});
  }
  return {{"schema", "mis-report/1"},
          {"estimator", "histogram-plugin"},
          {"bins", report.bins},
          {"features", features},
          {"ranking", report.ranking}};
}

// ---------------------------------------------------------------- windows

WindowSet WindowSet::from_order(const std::vector<int>& features, int feature_count) {
  WindowSet set;
  set.feature_count = feature_count;
  for (std::size_t i = 0; i < features.size(); i += kWindowSize) {
    const auto end = std::min(features.size(), i + kWindowSize);
    set.windows.emplace_back(features.begin() + static_cast<std::ptrdiff_t>(i),
                             features.begin() + static_cast<std::ptrdiff_t>(end));
  }
  const std::set<int> kept(features.begin(), features.end());
  for (int f = 0; f < feature_count; ++f) {
    if (!kept.contains(f)) set.dropped.push_back(f);
  }
  set.weights.assign(set.windows.size(),
                     set.windows.empty() ? 0.0 : 1.0 / static_cast<double>(set.windows.size()));
  set.validate();
  return set;
}

std::vector<int> WindowSet::retained() const {
  std::vector<int> out;
  for (const auto& w : windows) out.insert(out.end(), w.begin(), w.end());
  return out;
}

void WindowSet::validate() const {
  if (windows.empty()) throw ValidationError("windows: no features retained (empty model)");
  require(weights.size() == windows.size(), "windows: one weight per window required");
  std::set<int> seen;
  for (std::size_t l = 0; l < windows.size(); ++l) {
    const auto& w = windows[l];
    const bool last = l + 1 == windows.size();
    require(last ? (!w.empty() && w.size() <= kWindowSize) : w.size() == kWindowSize,
            "windows: every window but the last must hold exactly 3 features");
    for (int f : w) {
      require(f >= 0 && f < feature_count, "windows: feature index out of range");
      require(seen.insert(f).second, "windows: feature appears in more than one window");
    }
  }
  for (int f : dropped) {
    require(f >= 0 && f < feature_count, "windows: dropped index out of range");
    require(seen.insert(f).second, "windows: dropped feature also appears in a window");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  require(std::abs(total - 1.0) < 1e-12, "windows: weights must sum to 1");
}

WindowSet build_windows(const MisReport& report, double threshold) {
  require(threshold >= 0.0, "windows: threshold must be nonnegative");
  std::vector<int> kept;
  for (int f : report.ranking) {
    if (report.scores[static_cast<std::size_t>(f)] >= threshold) kept.push_back(f);
  }
  if (kept.empty()) {
    std::ostringstream msg;
    msg << "windows: every feature scores below threshold " << threshold << " (empty model)";
    throw ValidationError(msg.str());
  }
  return WindowSet::from_order(kept, static_cast<int>(report.scores.size()));
}

nlohmann::json to_json(const WindowSet& windows) {
  return {{"windows", windows.windows},
          {"weights", windows.weights},
          {"dropped", windows.dropped},
          {"feature_count", windows.feature_count}};
}

WindowSet windows_from_json(const nlohmann::json& j) {
  WindowSet set;
  try {
    set.windows = j.at("windows").get<std::vector<std::vector<int>>>();
    set.weights = j.at("weights").get<std::vector<double>>();
    set.dropped = j.at("dropped").get<std::vector<int>>();
    set.feature_count = j.at("feature_count").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("windows: malformed JSON: ") + e.what());
  }
  set.validate();
  return set;
}

Eigen::MatrixXd window_columns(const Eigen::MatrixXd& x, const std::vector<int>& window) {
  for (int f : window) {
    require(f >= 0 && f < x.cols(), "anova: window index outside the column range");
  }
  return x(Eigen::all, window);
}

// ---------------------------------------------------------------- operator

AnovaKernelOperator::AnovaKernelOperator(WindowSet windows, double sigma,
                                         std::vector<FastsumOperator> terms, Eigen::Index sources,
                                         Eigen::Index targets)
    : windows_(std::move(windows)),
      sigma_(sigma),
      terms_(std::move(terms)),
      sources_(sources),
      targets_(targets) {}

AnovaKernelOperator AnovaKernelOperator::build(const Eigen::MatrixXd& x, const WindowSet& windows,
                                               double sigma, const AccuracyProfile& profile) {
  return build_impl(x, windows, sigma, profile, nullptr);
}

AnovaKernelOperator AnovaKernelOperator::build(const Eigen::MatrixXd& x, const WindowSet& windows,
                                               double sigma, const AccuracyProfile& profile,
                                               const Eigen::MatrixXd& targets) {
  return build_impl(x, windows, sigma, profile, &targets);
}

AnovaKernelOperator AnovaKernelOperator::build_impl(const Eigen::MatrixXd& x,
                                                    const WindowSet& windows, double sigma,
                                                    const AccuracyProfile& profile,
                                                    const Eigen::MatrixXd* targets) {
  windows.validate();
  require(windows.feature_count == x.cols(), "anova: window set built for a different column count");
  if (targets != nullptr) {
    require(targets->cols() == x.cols(), "anova: targets and sources differ in column count");
  }
  const auto kernel = RadialKernel::gaussian(sigma);
  const auto config = PeriodizationConfig::for_profile(profile);

  std::vector<std::optional<FastsumOperator>> built(windows.size());
  parallel_for(windows.size(), [&](std::size_t l) {
    const Eigen::MatrixXd sources = window_columns(x, windows.windows[l]);
    if (targets == nullptr) {
      built[l].emplace(FastsumOperator::build(kernel, config, profile, sources));
    } else {
      built[l].emplace(FastsumOperator::build(kernel, config, profile, sources,
                                              window_columns(*targets, windows.windows[l])));
    }
  });
  std::vector<FastsumOperator> terms;
  terms.reserve(built.size());
  for (auto& op : built) terms.push_back(std::move(*op));
  return AnovaKernelOperator(windows, sigma, std::move(terms), x.rows(),
                             targets == nullptr ? x.rows() : targets->rows());
}

Eigen::VectorXd AnovaKernelOperator::apply(const Eigen::VectorXd& alpha) const {
  if (alpha.size() != sources_) {
    std::ostringstream msg;
    msg << "anova: coefficient vector has length " << alpha.size() << ", expected " << sources_;
    throw ValidationError(msg.str());
  }
  std::vector<Eigen::VectorXd> partial(terms_.size());
  parallel_for(terms_.size(), [&](std::size_t l) { partial[l] = terms_[l].apply(alpha); });
  Eigen::VectorXd out = Eigen::VectorXd::Zero(targets_);
  for (std::size_t l = 0; l < partial.size(); ++l) out += windows_.weights[l] * partial[l];
  return out;
}

}  // namespace anovakrr
