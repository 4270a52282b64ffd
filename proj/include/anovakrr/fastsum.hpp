#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "anovakrr/nfft.hpp"

namespace anovakrr {

// Radial kernel kappa(r). Only the Gaussian exp(-r^2 / sigma^2) ships.
struct RadialKernel {
  enum class Kind { gaussian };

  Kind kind = Kind::gaussian;
  double sigma = 1.0;

  static RadialKernel gaussian(double sigma);

  double operator()(double r) const;
  // d^order/dr^order kappa(r).
  double derivative(int order, double r) const;
  // Kernel seen by nodes multiplied by `factor`: kappa_s(factor r) = kappa(r).
  RadialKernel rescaled(double factor) const;
};

/// Geometry of the periodic extension, in scaled torus units.
///
/// The kernel is kept exact for distances up to `ball_radius`, bridged by a
/// Hermite polynomial over `transition_width`, and held constant beyond.
/// Nodes are placed inside a ball of radius ball_radius / 2, so every
/// pairwise distance is at most ball_radius.
struct PeriodizationConfig {
  double ball_radius = 0.4375;
  double transition_width = 0.0625;
  int smoothness = 7;
  int coeff_grid = 64;

  static PeriodizationConfig for_profile(const AccuracyProfile& profile);
  void validate() const;
  double node_radius() const { return 0.5 * ball_radius; }
};

// The radial profile of the periodic extension: kappa(r) on [0, L], a
// two-point Hermite polynomial on (L, L + l) matching `smoothness`
// derivatives of kappa at L and of the constant kappa(L) at L + l, and the
// constant kappa(L) beyond.
class PeriodizedKernel {
 public:
  PeriodizedKernel(const RadialKernel& kernel, const PeriodizationConfig& config);

  double operator()(double r) const;
  double plateau() const { return plateau_; }

 private:
  RadialKernel kernel_;
  double inner_;
  double width_;
  double plateau_;
  std::vector<double> poly_;  // monomial coefficients in u = (r - L) / l
};

// Frequency grid of the kernel coefficients: coeff_grid + 2 per dimension.
GridSpec coefficient_grid(const PeriodizationConfig& config, int dims);

// Fourier coefficients c_k of the d-variate function kappa_tilde(|r|),
// sampled on coeff_grid points per dimension and stored as the symmetric
// trigonometric interpolant over coefficient_grid(config, dims). Real, even
// and exactly conjugate symmetric; sum_k c_k reproduces every sample,
// kappa_tilde(0) = 1 in particular.
ComplexVector regularize_kernel(const RadialKernel& kernel, const PeriodizationConfig& config,
                                int dims);

/// s(z_i) ~ sum_j alpha_j kappa(|z_i - x_j|), applied as Phi_z D Phi_x^* alpha.
///
/// Raw coordinates are shifted to the bounding-box centre of sources and
/// targets and scaled into the node ball; sigma is scaled alongside so the
/// scaled kernel reproduces the raw one. With no explicit targets the
/// operator is the square, symmetric training case Z = X.
class FastsumOperator {
 public:
  static FastsumOperator build(const RadialKernel& kernel, const PeriodizationConfig& config,
                               const AccuracyProfile& profile, const Eigen::MatrixXd& sources);
  static FastsumOperator build(const RadialKernel& kernel, const PeriodizationConfig& config,
                               const AccuracyProfile& profile, const Eigen::MatrixXd& sources,
                               const Eigen::MatrixXd& targets);

  Eigen::VectorXd apply(const Eigen::VectorXd& alpha) const;
  // Output before the real part is taken; its imaginary part is roundoff.
  ComplexVector apply_complex(const Eigen::VectorXd& alpha) const;

  int dims() const { return source_plan_.grid().dims(); }
  Eigen::Index source_count() const { return source_plan_.node_count(); }
  Eigen::Index target_count() const {
    return target_plan_ ? target_plan_->node_count() : source_plan_.node_count();
  }
  bool symmetric() const { return !target_plan_.has_value(); }
  double scale() const { return scale_; }
  const Eigen::RowVectorXd& center() const { return center_; }
  const RadialKernel& kernel() const { return kernel_; }
  const RadialKernel& scaled_kernel() const { return scaled_kernel_; }
  const ComplexVector& coefficients() const { return coefficients_; }
  const NfftPlan& source_plan() const { return source_plan_; }

 private:
  FastsumOperator(RadialKernel kernel, RadialKernel scaled_kernel, PeriodizationConfig config,
                  Eigen::RowVectorXd center, double scale, ComplexVector coefficients,
                  NfftPlan source_plan, std::optional<NfftPlan> target_plan);

  static FastsumOperator build_impl(const RadialKernel& kernel, const PeriodizationConfig& config,
                                    const AccuracyProfile& profile,
                                    const Eigen::MatrixXd& sources,
                                    const Eigen::MatrixXd* targets);

  RadialKernel kernel_;
  RadialKernel scaled_kernel_;
  PeriodizationConfig config_;
  Eigen::RowVectorXd center_;
  double scale_;
  ComplexVector coefficients_;
  NfftPlan source_plan_;
  std::optional<NfftPlan> target_plan_;
};

// Literal O(N_x N_z) evaluation of s(z_i) = sum_j alpha_j kappa(|z_i - x_j|).
Eigen::VectorXd direct_sum(const RadialKernel& kernel, const Eigen::MatrixXd& sources,
                           const Eigen::MatrixXd& targets, const Eigen::VectorXd& alpha);

}  // namespace anovakrr
