#include "anovakrr/nfft.hpp"

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <fftw3.h>

#include "anovakrr/error.hpp"
#include "fftw_lock.hpp"

namespace anovakrr {

std::mutex& detail::fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

namespace {

using Complex = std::complex<double>;

struct FftwDeleter {
  void operator()(Complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<Complex[], FftwDeleter>;

FftwBuffer make_buffer(std::size_t n) {
  auto* raw = static_cast<Complex*>(fftw_malloc(sizeof(Complex) * n));
  if (raw == nullptr) throw NumericalError("nfft: cannot allocate oversampled grid");
  return FftwBuffer(raw);
}

// Per-thread scratch grid, grown on demand and reused across transforms so
// repeated applies do not map and unmap large pages every time.
Complex* scratch_grid(std::size_t n) {
  thread_local FftwBuffer buffer;
  thread_local std::size_t capacity = 0;
  if (capacity < n) {
    buffer = make_buffer(n);
    capacity = n;
  }
  return buffer.get();
}

int even_ceil(double x) {
  auto n = static_cast<int>(std::ceil(x - 1e-12));
  return n % 2 == 0 ? n : n + 1;
}

// Kaiser-Bessel shape in units of grid cells, normalized to 1 at t = 0:
// sinh(b sqrt(m^2 - t^2)) / sqrt(m^2 - t^2), zero outside [-m, m].
class KaiserBessel {
 public:
  KaiserBessel(int cutoff, double oversampling)
      : m_(cutoff), b_(std::numbers::pi * (2.0 - 1.0 / oversampling)) {
    scale_ = 1.0 / raw(0.0);
  }

  double operator()(double t) const {
    if (std::abs(t) > m_) return 0.0;
    return raw(t) * scale_;
  }

  int cutoff() const { return m_; }

 private:
  double raw(double t) const {
    const double s2 = static_cast<double>(m_) * m_ - t * t;
    if (s2 <= 0.0) return b_;
    const double s = std::sqrt(s2);
    return std::sinh(b_ * s) / s;
  }

  int m_;
  double b_;
  double scale_ = 1.0;
};

// Integral of the truncated window against cos(2 pi k t / n) over [-m, m].
// The integrand is entire in t, so fixed-order Gauss-Legendre converges fast.
double window_transform(const KaiserBessel& window, int k, int n) {
  const double omega = 2.0 * std::numbers::pi * k / n;
  auto integrand = [&](double t) { return window(t) * std::cos(omega * t); };
  return 2.0 * boost::math::quadrature::gauss<double, 30>::integrate(
                   integrand, 0.0, static_cast<double>(window.cutoff()));
}

int positive_mod(int a, int n) {
  const int r = a % n;
  return r < 0 ? r + n : r;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

// ---------------------------------------------------------------- GridSpec

GridSpec::GridSpec(std::vector<int> bandwidths) : bandwidths_(std::move(bandwidths)) {
  require(!bandwidths_.empty() && bandwidths_.size() <= kMaxDims,
          "grid: dimension must be 1, 2 or 3");
  size_ = 1;
  for (int m : bandwidths_) {
    require(m >= 2 && m % 2 == 0, "grid: bandwidths must be even and >= 2");
    size_ *= m;
  }
}

GridSpec GridSpec::uniform(int dims, int bandwidth) {
  require(dims >= 1 && dims <= kMaxDims, "grid: dimension must be 1, 2 or 3");
  return GridSpec(std::vector<int>(static_cast<std::size_t>(dims), bandwidth));
}

std::array<int, kMaxDims> GridSpec::frequency(Eigen::Index linear) const {
  std::array<int, kMaxDims> k{0, 0, 0};
  for (int t = dims() - 1; t >= 0; --t) {
    const int m = bandwidths_[t];
    k[t] = static_cast<int>(linear % m) - m / 2;
    linear /= m;
  }
  return k;
}

// ---------------------------------------------------------------- profiles

AccuracyProfile AccuracyProfile::get(Profile name) {
  switch (name) {
    case Profile::rough:
      return {Profile::rough, 1.5, 3, 32};
    case Profile::standard:
      return {Profile::standard, 2.0, 4, 64};
    case Profile::fine:
      return {Profile::fine, 2.0, 6, 128};
  }
  throw ValidationError("unknown accuracy profile");
}

AccuracyProfile AccuracyProfile::parse(std::string_view name) {
  if (name == "rough") return get(Profile::rough);
  if (name == "default") return get(Profile::standard);
  if (name == "fine") return get(Profile::fine);
  throw ValidationError("unknown accuracy profile '" + std::string(name) +
                        "' (expected rough, default or fine)");
}

std::string to_string(Profile name) {
  switch (name) {
    case Profile::rough:
      return "rough";
    case Profile::standard:
      return "default";
    case Profile::fine:
      return "fine";
  }
  return "unknown";
}

// ---------------------------------------------------------------- direct

void validate_nodes(const Eigen::MatrixXd& nodes, int dims) {
  if (nodes.cols() != dims) {
    std::ostringstream msg;
    msg << "nodes: expected " << dims << " columns, got " << nodes.cols();
    throw ValidationError(msg.str());
  }
  for (Eigen::Index j = 0; j < nodes.rows(); ++j) {
    for (int t = 0; t < dims; ++t) {
      const double x = nodes(j, t);
      if (!(x >= -0.5 && x < 0.5)) {
        std::ostringstream msg;
        msg << "nodes: coordinate (" << j << ", " << t << ") = " << x
            << " outside [-1/2, 1/2)";
        throw ValidationError(msg.str());
      }
    }
  }
}

namespace {

template <int Sign>
Complex direct_term(const GridSpec& grid, const Eigen::MatrixXd& nodes, Eigen::Index j,
                    Eigen::Index linear) {
  const auto k = grid.frequency(linear);
  double phase = 0.0;
  for (int t = 0; t < grid.dims(); ++t) phase += k[t] * nodes(j, t);
  return std::polar(1.0, Sign * 2.0 * std::numbers::pi * phase);
}

}  // namespace

ComplexVector ndft_direct(const GridSpec& grid, const Eigen::MatrixXd& nodes,
                          const ComplexVector& f_hat) {
  validate_nodes(nodes, grid.dims());
  require(f_hat.size() == grid.size(), "ndft: coefficient vector length != |I_M|");
  ComplexVector f = ComplexVector::Zero(nodes.rows());
  for (Eigen::Index j = 0; j < nodes.rows(); ++j) {
    Complex sum{0.0, 0.0};
    for (Eigen::Index l = 0; l < grid.size(); ++l) {
      sum += f_hat[l] * direct_term<+1>(grid, nodes, j, l);
    }
    f[j] = sum;
  }
  return f;
}

ComplexVector ndft_adjoint_direct(const GridSpec& grid, const Eigen::MatrixXd& nodes,
                                  const ComplexVector& c) {
  validate_nodes(nodes, grid.dims());
  require(c.size() == nodes.rows(), "ndft adjoint: vector length != node count");
  ComplexVector g = ComplexVector::Zero(grid.size());
  for (Eigen::Index l = 0; l < grid.size(); ++l) {
    Complex sum{0.0, 0.0};
    for (Eigen::Index j = 0; j < nodes.rows(); ++j) {
      sum += c[j] * direct_term<-1>(grid, nodes, j, l);
    }
    g[l] = sum;
  }
  return g;
}

// ---------------------------------------------------------------- NfftPlan

struct NfftPlan::FftPlans {
  fftw_plan exp_plus = nullptr;   // g_l = sum_k a_k exp(+2 pi i k l / n)
  fftw_plan exp_minus = nullptr;  // a_k = sum_l g_l exp(-2 pi i k l / n)

  ~FftPlans() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (exp_plus != nullptr) fftw_destroy_plan(exp_plus);
    if (exp_minus != nullptr) fftw_destroy_plan(exp_minus);
  }
};

NfftPlan::NfftPlan(GridSpec grid, const AccuracyProfile& profile, Eigen::MatrixXd nodes)
    : grid_(std::move(grid)), profile_(profile), nodes_(std::move(nodes)) {
  require(profile_.oversampling >= 1.0, "nfft: oversampling factor must be >= 1");
  require(profile_.window_cutoff >= 1, "nfft: window cutoff must be >= 1");
  validate_nodes(nodes_, grid_.dims());

  const int d = grid_.dims();
  const int m = profile_.window_cutoff;
  const KaiserBessel window(m, profile_.oversampling);
  const auto count = static_cast<std::size_t>(nodes_.rows());

  for (int t = 0; t < d; ++t) {
    const int bandwidth = grid_.bandwidth(t);
    const int n = std::max(even_ceil(profile_.oversampling * bandwidth), bandwidth);
    oversampled_[t] = n;
    taps_[t] = 2 * m + 1;

    auto& deconv = deconvolution_[t];
    deconv.resize(static_cast<std::size_t>(bandwidth));
    for (int k = -bandwidth / 2; k < bandwidth / 2; ++k) {
      const double transform = window_transform(window, k, n);
      if (!(transform > 0.0)) throw NumericalError("nfft: window transform vanishes");
      deconv[static_cast<std::size_t>(k + bandwidth / 2)] = 1.0 / transform;
    }

    auto& index = window_index_[t];
    auto& weight = window_weight_[t];
    index.resize(count * taps_[t]);
    weight.resize(count * taps_[t]);
    for (std::size_t j = 0; j < count; ++j) {
      const double scaled = n * nodes_(static_cast<Eigen::Index>(j), t);
      const auto first = static_cast<int>(std::floor(scaled)) - m;
      for (int a = 0; a < taps_[t]; ++a) {
        const std::size_t slot = j * taps_[t] + a;
        index[slot] = positive_mod(first + a, n);
        weight[slot] = window(scaled - (first + a));
      }
    }
  }
  for (int t = d; t < kMaxDims; ++t) {
    deconvolution_[t] = {1.0};
    window_index_[t].assign(count, 0);
    window_weight_[t].assign(count, 1.0);
  }

  fft_ = std::make_unique<FftPlans>();
  auto buffer = make_buffer(grid_points());
  auto* data = reinterpret_cast<fftw_complex*>(buffer.get());
  std::lock_guard lock(detail::fftw_planner_mutex());
  fft_->exp_plus = fftw_plan_dft(d, oversampled_.data(), data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
  fft_->exp_minus = fftw_plan_dft(d, oversampled_.data(), data, data, FFTW_FORWARD, FFTW_ESTIMATE);
  if (fft_->exp_plus == nullptr || fft_->exp_minus == nullptr) {
    throw NumericalError("nfft: FFT planning failed");
  }
}

NfftPlan::~NfftPlan() = default;
NfftPlan::NfftPlan(NfftPlan&&) noexcept = default;
NfftPlan& NfftPlan::operator=(NfftPlan&&) noexcept = default;

std::size_t NfftPlan::grid_points() const {
  return static_cast<std::size_t>(oversampled_[0]) * oversampled_[1] * oversampled_[2];
}

void NfftPlan::scatter_coefficients(const ComplexVector& f_hat, Complex* work) const {
  const int d = grid_.dims();
  std::array<int, kMaxDims> bw{1, 1, 1};
  for (int t = 0; t < d; ++t) bw[t] = grid_.bandwidth(t);
  const int n1 = oversampled_[1];
  const int n2 = oversampled_[2];
  Eigen::Index linear = 0;
  for (int a = 0; a < bw[0]; ++a) {
    const int i0 = positive_mod(a - bw[0] / 2, oversampled_[0]);
    const double d0 = deconvolution_[0][a];
    for (int b = 0; b < bw[1]; ++b) {
      const int i1 = positive_mod(b - bw[1] / 2, n1);
      const double d01 = d0 * deconvolution_[1][b];
      const std::size_t row = (static_cast<std::size_t>(i0) * n1 + i1) * n2;
      for (int c = 0; c < bw[2]; ++c, ++linear) {
        const int i2 = positive_mod(c - bw[2] / 2, n2);
        work[row + i2] = f_hat[linear] * (d01 * deconvolution_[2][c]);
      }
    }
  }
}

void NfftPlan::gather_coefficients(const Complex* work, ComplexVector& out) const {
  const int d = grid_.dims();
  std::array<int, kMaxDims> bw{1, 1, 1};
  for (int t = 0; t < d; ++t) bw[t] = grid_.bandwidth(t);
  const int n1 = oversampled_[1];
  const int n2 = oversampled_[2];
  out.resize(grid_.size());
  Eigen::Index linear = 0;
  for (int a = 0; a < bw[0]; ++a) {
    const int i0 = positive_mod(a - bw[0] / 2, oversampled_[0]);
    const double d0 = deconvolution_[0][a];
    for (int b = 0; b < bw[1]; ++b) {
      const int i1 = positive_mod(b - bw[1] / 2, n1);
      const double d01 = d0 * deconvolution_[1][b];
      const std::size_t row = (static_cast<std::size_t>(i0) * n1 + i1) * n2;
      for (int c = 0; c < bw[2]; ++c, ++linear) {
        const int i2 = positive_mod(c - bw[2] / 2, n2);
        out[linear] = work[row + i2] * (d01 * deconvolution_[2][c]);
      }
    }
  }
}

ComplexVector NfftPlan::forward(const ComplexVector& f_hat) const {
  require(f_hat.size() == grid_.size(), "nfft forward: coefficient vector length != |I_M|");
  const std::size_t points = grid_points();
  Complex* work = scratch_grid(points);
  std::fill_n(work, points, Complex{0.0, 0.0});
  scatter_coefficients(f_hat, work);
  auto* data = reinterpret_cast<fftw_complex*>(work);
  fftw_execute_dft(fft_->exp_plus, data, data);

  const int n1 = oversampled_[1];
  const int n2 = oversampled_[2];
  const int taps0 = taps_[0], taps1 = taps_[1], taps2 = taps_[2];
  const Eigen::Index count = nodes_.rows();
  ComplexVector f(count);
  for (Eigen::Index j = 0; j < count; ++j) {
    const int* idx0 = &window_index_[0][j * taps0];
    const int* idx1 = &window_index_[1][j * taps1];
    const int* idx2 = &window_index_[2][j * taps2];
    const double* w0 = &window_weight_[0][j * taps0];
    const double* w1 = &window_weight_[1][j * taps1];
    const double* w2 = &window_weight_[2][j * taps2];
    Complex sum{0.0, 0.0};
    for (int a = 0; a < taps0; ++a) {
      for (int b = 0; b < taps1; ++b) {
        const double w01 = w0[a] * w1[b];
        const Complex* row = work + (static_cast<std::size_t>(idx0[a]) * n1 + idx1[b]) * n2;
        Complex inner{0.0, 0.0};
        for (int c = 0; c < taps2; ++c) inner += w2[c] * row[idx2[c]];
        sum += w01 * inner;
      }
    }
    f[j] = sum;
  }
  return f;
}

ComplexVector NfftPlan::adjoint(const ComplexVector& c) const {
  require(c.size() == nodes_.rows(), "nfft adjoint: vector length != node count");
  const std::size_t points = grid_points();
  Complex* work = scratch_grid(points);
  std::fill_n(work, points, Complex{0.0, 0.0});

  const int n1 = oversampled_[1];
  const int n2 = oversampled_[2];
  const int taps0 = taps_[0], taps1 = taps_[1], taps2 = taps_[2];
  for (Eigen::Index j = 0; j < nodes_.rows(); ++j) {
    const int* idx0 = &window_index_[0][j * taps0];
    const int* idx1 = &window_index_[1][j * taps1];
    const int* idx2 = &window_index_[2][j * taps2];
    const double* w0 = &window_weight_[0][j * taps0];
    const double* w1 = &window_weight_[1][j * taps1];
    const double* w2 = &window_weight_[2][j * taps2];
    const Complex value = c[j];
    for (int a = 0; a < taps0; ++a) {
      for (int b = 0; b < taps1; ++b) {
        const Complex v01 = value * (w0[a] * w1[b]);
        Complex* row = work + (static_cast<std::size_t>(idx0[a]) * n1 + idx1[b]) * n2;
        for (int k = 0; k < taps2; ++k) row[idx2[k]] += v01 * w2[k];
      }
    }
  }

  auto* data = reinterpret_cast<fftw_complex*>(work);
  fftw_execute_dft(fft_->exp_minus, data, data);
  ComplexVector g;
  gather_coefficients(work, g);
  return g;
}

}  // namespace anovakrr
