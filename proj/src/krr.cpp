#include "anovakrr/krr.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>

#include "anovakrr/error.hpp"
#include "anovakrr/parallel.hpp"

namespace anovakrr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_labels(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() < 2) throw ValidationError("fit: need at least two training rows");
  if (y.size() != x.rows()) throw ValidationError("fit: label count differs from row count");
  bool pos = false;
  bool neg = false;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] == 1.0) {
      pos = true;
    } else if (y[i] == -1.0) {
      neg = true;
    } else {
      throw ValidationError("fit: labels must be -1 or +1");
    }
  }
  if (!pos || !neg) throw ValidationError("fit: training labels contain a single class");
  if (!x.allFinite()) throw ValidationError("fit: non-finite training feature");
}

KrrModel fit_impl(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KrrConfig& config,
                  const WindowSet* fixed) {
  config.validate();
  check_labels(x, y);
  KrrModel model;
  model.config = config;

  auto t = Clock::now();
  model.scaler = zscore_fit(x);
  Eigen::MatrixXd scaled = zscore_apply(model.scaler, x);
  model.timings.scale_seconds = seconds_since(t);

  t = Clock::now();
  if (fixed == nullptr) {
    const auto report = mis_scores(scaled, y);
    model.mis_scores = report.scores;
    model.windows = build_windows(report, config.mis_threshold);
  } else {
    if (fixed->feature_count != x.cols()) {
      throw ValidationError("fit: window set built for a different column count");
    }
    fixed->validate();
    model.windows = *fixed;
  }
  model.timings.mis_seconds = seconds_since(t);
  for (int f : model.windows.dropped) scaled.col(f).setZero();

  t = Clock::now();
  const auto profile = AccuracyProfile::get(config.profile);
  const auto op = AnovaKernelOperator::build(scaled, model.windows, config.sigma, profile);
  model.timings.build_seconds = seconds_since(t);

  t = Clock::now();
  const double lambda = config.lambda;
  const auto cg = cg_solve(
      [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return op.apply(v) + lambda * v; }, y,
      config.cg_tol, config.cg_maxiter);
  model.timings.solve_seconds = seconds_since(t);

  model.alpha = cg.x;
  model.cg_iterations = cg.iterations;
  model.cg_residual = cg.residual;
  model.cg_converged = cg.converged;
  model.train_nodes = std::move(scaled);
  return model;
}

}  // namespace

void KrrConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("config: " + what); };
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail("sigma must be positive and finite");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail("lambda must be positive and finite");
  if (!(cg_tol > 0.0 && cg_tol < 1.0)) fail("cg_tol must lie strictly between 0 and 1");
  if (cg_maxiter < 1) fail("cg_maxiter must be at least 1");
  if (!(mis_threshold >= 0.0) || !std::isfinite(mis_threshold)) {
    fail("mis_threshold must be nonnegative");
  }
}

CgResult cg_solve(const LinearOperator& apply_a, const Eigen::VectorXd& b, double tol, int maxiter,
                  const CgObserver& observer) {
  if (!b.allFinite()) throw ValidationError("cg: right-hand side is not finite");
  if (!(tol > 0.0)) throw ValidationError("cg: tolerance must be positive");
  CgResult out;
  out.x = Eigen::VectorXd::Zero(b.size());
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    out.converged = true;
    return out;
  }

  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  out.residual = 1.0;
  for (int k = 1; k <= maxiter; ++k) {
    const Eigen::VectorXd ap = apply_a(p);
    if (ap.size() != b.size()) throw ValidationError("cg: operator changed the vector length");
    const double pap = p.dot(ap);
    auto breakdown = [&](const char* what) {
      std::ostringstream msg;
      msg << "cg: " << what << " at iteration " << k;
      throw NumericalError(msg.str());
    };
    if (!std::isfinite(pap)) breakdown("non-finite value in the recurrence");
    if (pap <= 0.0) breakdown("operator is not positive definite");
    const double step = rr / pap;
    out.x += step * p;
    r -= step * ap;
    const double rr_next = r.squaredNorm();
    if (!std::isfinite(rr_next)) breakdown("non-finite residual");
    out.iterations = k;
    out.residual = std::sqrt(rr_next) / b_norm;
    if (observer) observer(k, out.x);
    if (out.residual <= tol) {
      out.converged = true;
      break;
    }
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  return out;
}

KrrModel fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KrrConfig& config) {
  return fit_impl(x, y, config, nullptr);
}

KrrModel fit_with_windows(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const KrrConfig& config, const WindowSet& windows) {
  return fit_impl(x, y, config, &windows);
}

Eigen::VectorXd decision_values(const KrrModel& model, const Eigen::MatrixXd& x_test) {
  if (x_test.cols() != model.train_nodes.cols()) {
    throw ValidationError("predict: test data has " + std::to_string(x_test.cols()) +
                          " columns, model expects " + std::to_string(model.train_nodes.cols()));
  }
  if (x_test.rows() == 0) return Eigen::VectorXd(0);
  if (!x_test.allFinite()) throw ValidationError("predict: non-finite test feature");
  Eigen::MatrixXd scaled = zscore_apply(model.scaler, x_test);
  for (int f : model.windows.dropped) scaled.col(f).setZero();
  const auto op = AnovaKernelOperator::build(model.train_nodes, model.windows, model.config.sigma,
                                             AccuracyProfile::get(model.config.profile), scaled);
  return op.apply(model.alpha);
}

Eigen::VectorXd sign_labels(const Eigen::VectorXd& decision) {
  return decision.unaryExpr([](double s) { return s >= 0.0 ? 1.0 : -1.0; });
}

Eigen::VectorXd predict(const KrrModel& model, const Eigen::MatrixXd& x_test) {
  return sign_labels(decision_values(model, x_test));
}

double accuracy(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth) {
  if (predicted.size() != truth.size() || truth.size() == 0) {
    throw ValidationError("accuracy: label vectors must be nonempty and equally long");
  }
  return (predicted.array() == truth.array()).cast<double>().mean();
}

GridSearchResult grid_search(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const std::vector<double>& sigma_grid,
                             const std::vector<double>& lambda_grid, const KrrConfig& base,
                             std::uint64_t seed, bool shuffle) {
  if (sigma_grid.empty() || lambda_grid.empty()) {
    throw ValidationError("gridsearch: sigma and lambda grids must be nonempty");
  }
  check_labels(x, y);
  const auto [inner_train, inner_test] = split_indices(x.rows(), 0.5, seed, shuffle);
  const Eigen::MatrixXd x_fit = x(inner_train, Eigen::all);
  const Eigen::VectorXd y_fit = y(inner_train);
  const Eigen::MatrixXd x_hold = x(inner_test, Eigen::all);
  const Eigen::VectorXd y_hold = y(inner_test);

  GridSearchResult result;
  for (double s : sigma_grid) {
    for (double l : lambda_grid) {
      GridCell cell;
      cell.sigma = s;
      cell.lambda = l;
      result.cells.push_back(cell);
    }
  }
  parallel_for(result.cells.size(), [&](std::size_t c) {
    GridCell& cell = result.cells[c];
    KrrConfig config = base;
    config.sigma = cell.sigma;
    config.lambda = cell.lambda;
    const auto start = Clock::now();
    try {
      const auto model = fit(x_fit, y_fit, config);
      cell.accuracy = accuracy(predict(model, x_hold), y_hold);
      cell.cg_iterations = model.cg_iterations;
      cell.cg_converged = model.cg_converged;
      cell.ok = true;
    } catch (const Error& e) {
      cell.error = e.what();
    }
    cell.fit_seconds = seconds_since(start);
  });

  const GridCell* best = nullptr;
  for (const auto& cell : result.cells) {
    if (!cell.ok) continue;
    if (best == nullptr || cell.accuracy > best->accuracy ||
        (cell.accuracy == best->accuracy &&
         (cell.lambda < best->lambda ||
          (cell.lambda == best->lambda && cell.sigma < best->sigma)))) {
      best = &cell;
    }
  }
  if (best == nullptr) {
    throw NumericalError("gridsearch: every cell failed; first error: " + result.cells[0].error);
  }
  result.best = base;
  result.best.sigma = best->sigma;
  result.best.lambda = best->lambda;
  result.model = fit(x, y, result.best);
  return result;
}

}  // namespace anovakrr
