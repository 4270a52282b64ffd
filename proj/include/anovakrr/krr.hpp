#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anovakrr/anova.hpp"
#include "anovakrr/data.hpp"
#include "anovakrr/nfft.hpp"

namespace anovakrr {

struct KrrConfig {
  double sigma = 1.0;
  double lambda = 1.0;
  double cg_tol = 1e-3;
  int cg_maxiter = 1000;
  Profile profile = Profile::standard;
  double mis_threshold = 0.0;

  void validate() const;
};

// ---------------------------------------------------------------- CG

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
// Called after every iteration with the iteration number and current iterate.
using CgObserver = std::function<void(int, const Eigen::VectorXd&)>;

struct CgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  // Relative residual |r_k| / |b| from the CG recurrence at exit.
  double residual = 0.0;
  bool converged = false;
};

// Unpreconditioned conjugate gradients from x0 = 0. Stops once the relative
// residual drops to `tol`; hitting `maxiter` returns with converged = false.
// Throws NumericalError naming the iteration on NaN/Inf or when the operator
// stops looking positive definite.
CgResult cg_solve(const LinearOperator& apply_a, const Eigen::VectorXd& b, double tol, int maxiter,
                  const CgObserver& observer = {});

// ---------------------------------------------------------------- model

struct FitTimings {
  double scale_seconds = 0.0;
  double mis_seconds = 0.0;
  double build_seconds = 0.0;
  double solve_seconds = 0.0;
};

struct KrrModel {
  KrrConfig config;
  WindowSet windows;
  ScalerStats scaler;
  std::vector<double> mis_scores;
  std::vector<std::string> feature_names;
  // CSV label column and the value mapped to +1; empty when fitted in memory.
  std::string label_column;
  std::string positive_label;
  // z-scored training rows; columns outside every window are zero.
  Eigen::MatrixXd train_nodes;
  Eigen::VectorXd alpha;
  int cg_iterations = 0;
  double cg_residual = 0.0;
  bool cg_converged = false;
  // Not serialized.
  FitTimings timings;
};

// Full pipeline: z-score on the training rows, MIS ranking, windows, then CG
// on (K + lambda I) alpha = y.
KrrModel fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KrrConfig& config);
// As fit() but with the window set supplied instead of derived from MIS.
KrrModel fit_with_windows(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const KrrConfig& config, const WindowSet& windows);

// s(z_i) = sum_j alpha_j K(z_i, x_j) for raw (unscaled) test rows.
Eigen::VectorXd decision_values(const KrrModel& model, const Eigen::MatrixXd& x_test);
// sign(s) with sign(0) = +1.
Eigen::VectorXd sign_labels(const Eigen::VectorXd& decision);
Eigen::VectorXd predict(const KrrModel& model, const Eigen::MatrixXd& x_test);
double accuracy(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth);

// ---------------------------------------------------------------- grid search

struct GridCell {
  double sigma = 0.0;
  double lambda = 0.0;
  bool ok = false;
  double accuracy = 0.0;
  int cg_iterations = 0;
  bool cg_converged = false;
  double fit_seconds = 0.0;
  std::string error;
};

struct GridSearchResult {
  KrrConfig best;
  std::vector<GridCell> cells;  // sigma-major, in grid order
  KrrModel model;               // best configuration refitted on all rows
};

// Scores every (sigma, lambda) pair by holdout accuracy on a seeded 50:50
// split of the training rows. Ties go to the smaller lambda, then the smaller
// sigma. Cells whose fit throws are marked failed and skipped.
GridSearchResult grid_search(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const std::vector<double>& sigma_grid,
                             const std::vector<double>& lambda_grid, const KrrConfig& base,
                             std::uint64_t seed, bool shuffle = true);

}  // namespace anovakrr
