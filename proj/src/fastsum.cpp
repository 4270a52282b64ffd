#include "anovakrr/fastsum.hpp"

#include <cmath>
#include <complex>
#include <mutex>
#include <sstream>

#include <fftw3.h>

#include "anovakrr/error.hpp"
#include "anovakrr/parallel.hpp"
#include "fftw_lock.hpp"

namespace anovakrr {

namespace {

constexpr double kMaxHermiteCondition = 1e13;

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw ValidationError(std::string(what) + ": non-finite coordinate");
}

}  // namespace

// ---------------------------------------------------------------- kernel

RadialKernel RadialKernel::gaussian(double sigma) {
  require(sigma > 0.0 && std::isfinite(sigma), "kernel: sigma must be positive and finite");
  return {Kind::gaussian, sigma};
}

double RadialKernel::operator()(double r) const {
  const double s = r / sigma;
  return std::exp(-s * s);
}

double RadialKernel::derivative(int order, double r) const {
  // d^n/dr^n exp(-(r/sigma)^2) = (-1/sigma)^n H_n(r/sigma) exp(-(r/sigma)^2)
  const double s = r / sigma;
  double h_prev = 1.0;
  double h = 2.0 * s;
  if (order == 0) {
    h = 1.0;
  } else {
    for (int n = 1; n < order; ++n) {
      const double next = 2.0 * s * h - 2.0 * n * h_prev;
      h_prev = h;
      h = next;
    }
  }
  return std::pow(-1.0 / sigma, order) * h * std::exp(-s * s);
}

RadialKernel RadialKernel::rescaled(double factor) const {
  return {kind, sigma * factor};
}

// ---------------------------------------------------------------- config

PeriodizationConfig PeriodizationConfig::for_profile(const AccuracyProfile& profile) {
  PeriodizationConfig config;
  config.coeff_grid = profile.coeff_grid;
  return config;
}

void PeriodizationConfig::validate() const {
  require(ball_radius > 0.0 && ball_radius < 0.5, "periodization: ball radius must be in (0, 1/2)");
  require(transition_width > 0.0, "periodization: transition width must be positive");
  require(ball_radius + transition_width <= 0.5 + 1e-15,
          "periodization: ball radius + transition width must not exceed 1/2");
  require(smoothness >= 1, "periodization: smoothness degree must be >= 1");
  require(coeff_grid >= 2 && coeff_grid % 2 == 0,
          "periodization: coefficient grid must be even and >= 2");
}

// ---------------------------------------------------------------- periodized kernel

PeriodizedKernel::PeriodizedKernel(const RadialKernel& kernel, const PeriodizationConfig& config)
    : kernel_(kernel),
      inner_(config.ball_radius),
      width_(config.transition_width),
      plateau_(kernel(config.ball_radius)) {
  config.validate();
  const int q = config.smoothness;
  const int degree = 2 * q;

  // Unknowns: monomial coefficients a_0..a_{2q-1} of p(u), u in [0, 1].
  // Rows 0..q-1: p^(j)(0) = l^j kappa^(j)(L). Rows q..2q-1: p^(j)(1) = plateau * [j == 0].
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(degree, degree);
  Eigen::VectorXd rhs(degree);
  for (int j = 0; j < q; ++j) {
    // j-th derivative of u^n is n!/(n-j)! u^(n-j).
    double falling = 1.0;
    for (int i = 0; i < j; ++i) falling *= static_cast<double>(j - i);
    system(j, j) = falling;
    rhs[j] = std::pow(width_, j) * kernel_.derivative(j, inner_);
    for (int n = j; n < degree; ++n) {
      double coeff = 1.0;
      for (int i = 0; i < j; ++i) coeff *= static_cast<double>(n - i);
      system(q + j, n) = coeff;
    }
    rhs[q + j] = j == 0 ? plateau_ : 0.0;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(system, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double condition = sv[0] / sv[sv.size() - 1];
  if (!(condition < kMaxHermiteCondition)) {
    std::ostringstream msg;
    msg << "periodization: Hermite system for smoothness " << q
        << " is numerically singular (condition " << condition << ")";
    throw NumericalError(msg.str());
  }
  const Eigen::VectorXd coeffs = svd.solve(rhs);
  poly_.assign(coeffs.data(), coeffs.data() + coeffs.size());
}

double PeriodizedKernel::operator()(double r) const {
  r = std::abs(r);
  if (r <= inner_) return kernel_(r);
  if (r >= inner_ + width_) return plateau_;
  const double u = (r - inner_) / width_;
  double value = 0.0;
  for (auto it = poly_.rbegin(); it != poly_.rend(); ++it) value = value * u + *it;
  return value;
}

// ---------------------------------------------------------------- coefficients

GridSpec coefficient_grid(const PeriodizationConfig& config, int dims) {
  return GridSpec::uniform(dims, config.coeff_grid + 2);
}

ComplexVector regularize_kernel(const RadialKernel& kernel, const PeriodizationConfig& config,
                                int dims) {
  require(dims >= 1 && dims <= kMaxDims, "regularize_kernel: dimension must be 1, 2 or 3");
  const PeriodizedKernel periodic(kernel, config);
  const int m = config.coeff_grid;
  std::array<int, kMaxDims> n{1, 1, 1};
  for (int t = 0; t < dims; ++t) n[t] = m;
  const std::size_t points = static_cast<std::size_t>(n[0]) * n[1] * n[2];
  std::vector<std::complex<double>> samples(points);

  // Sample at r = l / M, l in {-M/2, ..., M/2 - 1}, stored at FFT index l mod M.
  auto position = [m](int index) {
    const int l = index < m / 2 ? index : index - m;
    return static_cast<double>(l) / m;
  };
  for (int a = 0; a < n[0]; ++a) {
    const double r0 = position(a);
    for (int b = 0; b < n[1]; ++b) {
      const double r1 = dims > 1 ? position(b) : 0.0;
      for (int c = 0; c < n[2]; ++c) {
        const double r2 = dims > 2 ? position(c) : 0.0;
        const double r = std::sqrt(r0 * r0 + r1 * r1 + r2 * r2);
        samples[(static_cast<std::size_t>(a) * n[1] + b) * n[2] + c] = periodic(r);
      }
    }
  }

  {
    auto* data = reinterpret_cast<fftw_complex*>(samples.data());
    fftw_plan plan;
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      plan = fftw_plan_dft(dims, n.data(), data, data, FFTW_FORWARD,
                           FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    if (plan == nullptr) throw NumericalError("regularize_kernel: FFT planning failed");
    fftw_execute(plan);
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }

  // Symmetric trigonometric interpolant: a Nyquist sample term is split into
  // halves at k_t = -M/2 and k_t = +M/2, so the coefficient grid has M + 2
  // frequencies per dimension and its outermost negative frequency is zero.
  const GridSpec out_grid = coefficient_grid(config, dims);
  ComplexVector coeffs(out_grid.size());
  const double norm = 1.0 / static_cast<double>(points);
  for (Eigen::Index linear = 0; linear < out_grid.size(); ++linear) {
    const auto k = out_grid.frequency(linear);
    double weight = norm;
    std::size_t index = 0;
    for (int t = 0; t < kMaxDims; ++t) {
      const int kt = t < dims ? k[t] : 0;
      if (t < dims && kt == -m / 2 - 1) weight = 0.0;
      if (t < dims && std::abs(kt) == m / 2) weight *= 0.5;
      index = index * n[t] + static_cast<std::size_t>(kt < 0 ? kt + n[t] : kt % n[t]);
    }
    coeffs[linear] = weight == 0.0 ? 0.0 : samples[index].real() * weight;
  }
  return coeffs;
}

// ---------------------------------------------------------------- operator

FastsumOperator::FastsumOperator(RadialKernel kernel, RadialKernel scaled_kernel,
                                 PeriodizationConfig config, Eigen::RowVectorXd center,
                                 double scale, ComplexVector coefficients, NfftPlan source_plan,
                                 std::optional<NfftPlan> target_plan)
    : kernel_(kernel),
      scaled_kernel_(scaled_kernel),
      config_(config),
      center_(std::move(center)),
      scale_(scale),
      coefficients_(std::move(coefficients)),
      source_plan_(std::move(source_plan)),
      target_plan_(std::move(target_plan)) {}

FastsumOperator FastsumOperator::build(const RadialKernel& kernel,
                                       const PeriodizationConfig& config,
                                       const AccuracyProfile& profile,
                                       const Eigen::MatrixXd& sources) {
  return build_impl(kernel, config, profile, sources, nullptr);
}

FastsumOperator FastsumOperator::build(const RadialKernel& kernel,
                                       const PeriodizationConfig& config,
                                       const AccuracyProfile& profile,
                                       const Eigen::MatrixXd& sources,
                                       const Eigen::MatrixXd& targets) {
  return build_impl(kernel, config, profile, sources, &targets);
}

FastsumOperator FastsumOperator::build_impl(const RadialKernel& kernel,
                                            const PeriodizationConfig& config,
                                            const AccuracyProfile& profile,
                                            const Eigen::MatrixXd& sources,
                                            const Eigen::MatrixXd* targets) {
  config.validate();
  const auto d = static_cast<int>(sources.cols());
  require(sources.rows() > 0, "fastsum: empty source set");
  require(d >= 1 && d <= kMaxDims, "fastsum: dimension must be 1, 2 or 3");
  require_finite(sources, "fastsum sources");
  if (targets != nullptr) {
    require(targets->rows() > 0, "fastsum: empty target set");
    require(targets->cols() == d, "fastsum: targets and sources differ in dimension");
    require_finite(*targets, "fastsum targets");
  }

  Eigen::RowVectorXd lo = sources.colwise().minCoeff();
  Eigen::RowVectorXd hi = sources.colwise().maxCoeff();
  if (targets != nullptr) {
    lo = lo.cwiseMin(targets->colwise().minCoeff());
    hi = hi.cwiseMax(targets->colwise().maxCoeff());
  }
  const Eigen::RowVectorXd center = 0.5 * (lo + hi);
  double radius = (sources.rowwise() - center).rowwise().norm().maxCoeff();
  if (targets != nullptr) {
    radius = std::max(radius, (targets->rowwise() - center).rowwise().norm().maxCoeff());
  }
  const double scale = radius > 0.0 ? config.node_radius() / radius : 1.0;

  auto to_torus = [&](const Eigen::MatrixXd& raw) {
    Eigen::MatrixXd scaled = (raw.rowwise() - center) * scale;
    // Rounding may land a coordinate a hair outside the node ball.
    return scaled.cwiseMax(-config.node_radius()).cwiseMin(config.node_radius()).eval();
  };

  const RadialKernel scaled_kernel = kernel.rescaled(scale);
  ComplexVector coefficients = regularize_kernel(scaled_kernel, config, d);
  const GridSpec grid = coefficient_grid(config, d);
  NfftPlan source_plan(grid, profile, to_torus(sources));
  std::optional<NfftPlan> target_plan;
  if (targets != nullptr) target_plan.emplace(grid, profile, to_torus(*targets));

  return FastsumOperator(kernel, scaled_kernel, config, center, scale, std::move(coefficients),
                         std::move(source_plan), std::move(target_plan));
}

ComplexVector FastsumOperator::apply_complex(const Eigen::VectorXd& alpha) const {
  if (alpha.size() != source_count()) {
    std::ostringstream msg;
    msg << "fastsum: coefficient vector has length " << alpha.size() << ", expected "
        << source_count();
    throw ValidationError(msg.str());
  }
  ComplexVector spectrum = source_plan_.adjoint(alpha.cast<std::complex<double>>());
  spectrum.array() *= coefficients_.array();
  const NfftPlan& targets = target_plan_ ? *target_plan_ : source_plan_;
  return targets.forward(spectrum);
}

Eigen::VectorXd FastsumOperator::apply(const Eigen::VectorXd& alpha) const {
  return apply_complex(alpha).real();
}

// ---------------------------------------------------------------- direct

Eigen::VectorXd direct_sum(const RadialKernel& kernel, const Eigen::MatrixXd& sources,
                           const Eigen::MatrixXd& targets, const Eigen::VectorXd& alpha) {
  require(sources.cols() == targets.cols(), "direct_sum: sources and targets differ in dimension");
  require(alpha.size() == sources.rows(), "direct_sum: coefficient vector length != source count");
  const Eigen::Index nx = sources.rows();
  const Eigen::Index nz = targets.rows();
  const auto d = sources.cols();
  const double inv_sigma2 = 1.0 / (kernel.sigma * kernel.sigma);

  // Row-major copies keep the inner loop contiguous.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> xs = sources;
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> zs = targets;
  Eigen::VectorXd out(nz);
  constexpr Eigen::Index kBlock = 256;
  const auto blocks = static_cast<std::size_t>((nz + kBlock - 1) / kBlock);
  parallel_for(blocks, [&](std::size_t block) {
    const Eigen::Index begin = static_cast<Eigen::Index>(block) * kBlock;
    const Eigen::Index end = std::min(nz, begin + kBlock);
    for (Eigen::Index i = begin; i < end; ++i) {
      const double* z = zs.row(i).data();
      double sum = 0.0;
      for (Eigen::Index j = 0; j < nx; ++j) {
        const double* x = xs.row(j).data();
        double dist2 = 0.0;
        for (Eigen::Index t = 0; t < d; ++t) {
          const double diff = z[t] - x[t];
          dist2 += diff * diff;
        }
        sum += alpha[j] * std::exp(-dist2 * inv_sigma2);
      }
      out[i] = sum;
    }
  });
  return out;
}

}  // namespace anovakrr
