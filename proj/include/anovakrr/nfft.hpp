#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace anovakrr {

using ComplexVector = Eigen::VectorXcd;

inline constexpr int kMaxDims = 3;

// Frequency grid I_M = {-M_1/2, ..., M_1/2 - 1} x ... x {-M_d/2, ..., M_d/2 - 1}.
// Coefficient vectors are stored row-major over this grid: the last
// dimension varies fastest and k_t = -M_t/2 sits at local index 0.
class GridSpec {
 public:
  explicit GridSpec(std::vector<int> bandwidths);

  // Same bandwidth in every dimension.
  static GridSpec uniform(int dims, int bandwidth);

  int dims() const { return static_cast<int>(bandwidths_.size()); }
  int bandwidth(int t) const { return bandwidths_[t]; }
  const std::vector<int>& bandwidths() const { return bandwidths_; }
  // |I_M|
  Eigen::Index size() const { return size_; }

  // Frequency multi-index of linear coefficient index `linear`.
  std::array<int, kMaxDims> frequency(Eigen::Index linear) const;

 private:
  std::vector<int> bandwidths_;
  Eigen::Index size_ = 0;
};

enum class Profile { rough, standard, fine };

// Accuracy knobs for one named profile. The coefficient grid is only used by
// the fast summation, but it travels with the profile so one name selects a
// consistent speed/accuracy trade-off end to end.
struct AccuracyProfile {
  Profile name = Profile::standard;
  double oversampling = 2.0;
  int window_cutoff = 4;
  int coeff_grid = 64;

  static AccuracyProfile get(Profile name);
  // Accepts "rough", "default", "fine".
  static AccuracyProfile parse(std::string_view name);
};

std::string to_string(Profile name);

// Nodes are rows of an N x d matrix with every coordinate in [-1/2, 1/2).
void validate_nodes(const Eigen::MatrixXd& nodes, int dims);

// O(N |I_M|) evaluation of f_j = sum_k f_hat_k exp(2 pi i k.x_j).
ComplexVector ndft_direct(const GridSpec& grid, const Eigen::MatrixXd& nodes,
                          const ComplexVector& f_hat);

// O(N |I_M|) evaluation of g_k = sum_j c_j exp(-2 pi i k.x_j).
ComplexVector ndft_adjoint_direct(const GridSpec& grid, const Eigen::MatrixXd& nodes,
                                  const ComplexVector& c);

/// Precomputed fast transform for a fixed grid, profile and node set.
///
/// Uses a tensor-product Kaiser-Bessel window truncated to 2m+1 cells of the
/// oversampled grid. Deconvolution factors are the Fourier coefficients of the
/// truncated window, integrated numerically, so the only approximation left
/// is aliasing.
///
/// forward() and adjoint() are exact matrix adjoints of each other: both are
/// built from the same window weights, deconvolution factors and FFT size.
/// The plan is immutable; each call allocates its own oversampled grid, so
/// concurrent calls on one plan are safe.
class NfftPlan {
 public:
  NfftPlan(GridSpec grid, const AccuracyProfile& profile, Eigen::MatrixXd nodes);
  ~NfftPlan();
  NfftPlan(NfftPlan&&) noexcept;
  NfftPlan& operator=(NfftPlan&&) noexcept;
  NfftPlan(const NfftPlan&) = delete;
  NfftPlan& operator=(const NfftPlan&) = delete;

  const GridSpec& grid() const { return grid_; }
  const AccuracyProfile& profile() const { return profile_; }
  const Eigen::MatrixXd& nodes() const { return nodes_; }
  Eigen::Index node_count() const { return nodes_.rows(); }
  // Oversampled FFT length per dimension.
  int oversampled(int t) const { return oversampled_[t]; }

  // Approximates ndft_direct(grid, nodes, f_hat).
  ComplexVector forward(const ComplexVector& f_hat) const;
  // Approximates ndft_adjoint_direct(grid, nodes, c).
  ComplexVector adjoint(const ComplexVector& c) const;

 private:
  struct FftPlans;

  std::size_t grid_points() const;
  void scatter_coefficients(const ComplexVector& f_hat, std::complex<double>* work) const;
  void gather_coefficients(const std::complex<double>* work, ComplexVector& out) const;

  GridSpec grid_;
  AccuracyProfile profile_;
  Eigen::MatrixXd nodes_;
  // Padded to three dimensions; unused dimensions have length 1.
  std::array<int, kMaxDims> oversampled_{1, 1, 1};
  std::array<int, kMaxDims> taps_{1, 1, 1};
  // 1 / (phi_hat(k_t) n_t) per dimension, indexed by k_t + M_t/2.
  std::array<std::vector<double>, kMaxDims> deconvolution_;
  // Per node and dimension: grid indices and window weights, taps_[t] each.
  std::array<std::vector<int>, kMaxDims> window_index_;
  std::array<std::vector<double>, kMaxDims> window_weight_;
  std::unique_ptr<FftPlans> fft_;
};

}  // namespace anovakrr
