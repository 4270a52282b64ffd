#pragma once

#include <optional>

#include <Eigen/Dense>

#include "anovakrr/anova.hpp"

namespace anovakrr {

// Largest row or column count assemble_dense accepts.
inline constexpr Eigen::Index kDenseSizeGuard = 20000;

// Entrywise ANOVA kernel matrix. Deliberately naive; for tests and benchmarks.
struct DenseKernelMatrix {
  Eigen::MatrixXd values;
  WindowSet windows;
  double sigma = 1.0;
};

// K[i][j] = sum_l eta_l exp(-|x_i^{W_l} - x_j^{W_l}|^2 / sigma^2), with rows
// taken from `targets` when given.
DenseKernelMatrix assemble_dense(const Eigen::MatrixXd& x, const WindowSet& windows, double sigma);
DenseKernelMatrix assemble_dense(const Eigen::MatrixXd& x, const WindowSet& windows, double sigma,
                                 const Eigen::MatrixXd& targets);

// Solves (K + lambda I) alpha = y by Cholesky factorization.
Eigen::VectorXd dense_krr_solve(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double lambda);

}  // namespace anovakrr
