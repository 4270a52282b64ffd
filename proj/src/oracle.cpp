#include "anovakrr/oracle.hpp"

#include <cmath>
#include <sstream>

#include "anovakrr/error.hpp"
#include "anovakrr/parallel.hpp"

namespace anovakrr {

namespace {

DenseKernelMatrix assemble(const Eigen::MatrixXd& x, const WindowSet& windows, double sigma,
                           const Eigen::MatrixXd& targets) {
  windows.validate();
  if (!(sigma > 0.0)) throw ValidationError("dense: sigma must be positive");
  if (x.cols() != windows.feature_count || targets.cols() != x.cols()) {
    throw ValidationError("dense: column count does not match the window set");
  }
  if (x.rows() > kDenseSizeGuard || targets.rows() > kDenseSizeGuard) {
    std::ostringstream msg;
    msg << "dense: " << targets.rows() << " x " << x.rows() << " kernel matrix exceeds the "
        << kDenseSizeGuard << " size guard";
    throw ValidationError(msg.str());
  }
  DenseKernelMatrix out{Eigen::MatrixXd::Zero(targets.rows(), x.rows()), windows, sigma};
  const double inv_sigma2 = 1.0 / (sigma * sigma);
  parallel_for(static_cast<std::size_t>(targets.rows()), [&](std::size_t row) {
    const auto i = static_cast<Eigen::Index>(row);
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      double entry = 0.0;
      for (std::size_t l = 0; l < windows.size(); ++l) {
        double dist2 = 0.0;
        for (int f : windows.windows[l]) {
          const double diff = targets(i, f) - x(j, f);
          dist2 += diff * diff;
        }
        entry += windows.weights[l] * std::exp(-dist2 * inv_sigma2);
      }
      out.values(i, j) = entry;
    }
  });
  return out;
}

}  // namespace

DenseKernelMatrix assemble_dense(const Eigen::MatrixXd& x, const WindowSet& windows, double sigma) {
  return assemble(x, windows, sigma, x);
}

DenseKernelMatrix assemble_dense(const Eigen::MatrixXd& x, const WindowSet& windows, double sigma,
                                 const Eigen::MatrixXd& targets) {
  return assemble(x, windows, sigma, targets);
}

Eigen::VectorXd dense_krr_solve(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("dense solve: lambda must be positive");
  if (k.rows() != k.cols() || k.rows() != y.size()) {
    throw ValidationError("dense solve: shape mismatch");
  }
  Eigen::MatrixXd system = k;
  system.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> chol(system);
  if (chol.info() != Eigen::Success) {
    throw NumericalError("dense solve: Cholesky factorization of K + lambda I failed");
  }
  Eigen::VectorXd alpha = chol.solve(y);
  // One step of iterative refinement keeps the residual near machine precision.
  alpha += chol.solve(y - system * alpha);
  if (!alpha.allFinite()) throw NumericalError("dense solve: non-finite solution");
  return alpha;
}

}  // namespace anovakrr
