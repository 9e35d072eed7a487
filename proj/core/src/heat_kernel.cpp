#include "spdelab/heat_kernel.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fft.hpp"

namespace spdelab {

double heat_kernel(double t, std::span<const double> x) {
  if (!(t > 0.0)) throw std::domain_error("heat_kernel: t must be positive");
  double r2 = 0.0;
  for (double xi : x) r2 += xi * xi;
  const double d = static_cast<double>(x.size());
  return std::pow(2.0 * std::numbers::pi * t, -0.5 * d) * std::exp(-r2 / (2.0 * t));
}

double heat_kernel(double t, double x) { return heat_kernel(t, std::span<const double>(&x, 1)); }

HeatSemigroup::HeatSemigroup(const SpaceTimeGrid& grid) : grid_(grid) {
  if (grid.dim() != 1) throw std::invalid_argument("HeatSemigroup: only dim = 1 is implemented");
  const auto n = static_cast<std::size_t>(grid.n_x());
  scratch_.resize(n);
  if (grid.boundary() == Boundary::periodic) {
    fft_ = std::make_unique<detail::RealFft>(n);
    xi2_.resize(n / 2 + 1);
    const double base = std::numbers::pi / grid.half_width();
    for (std::size_t k = 0; k < xi2_.size(); ++k) {
      const double xi = base * static_cast<double>(k);
      xi2_[k] = xi * xi;
    }
    multiplier_.resize(xi2_.size());
  } else {
    matrix_.resize(n * n);
  }
}

HeatSemigroup::~HeatSemigroup() = default;
HeatSemigroup::HeatSemigroup(HeatSemigroup&&) noexcept = default;
HeatSemigroup& HeatSemigroup::operator=(HeatSemigroup&&) noexcept = default;

void HeatSemigroup::refresh_multiplier(double t) {
  if (t == cached_t_) return;
  const double inv_n = 1.0 / static_cast<double>(grid_.n_x());
  for (std::size_t k = 0; k < xi2_.size(); ++k) multiplier_[k] = std::exp(-0.5 * t * xi2_[k]) * inv_n;
  cached_t_ = t;
}

void HeatSemigroup::refresh_matrix(double t) {
  if (t == cached_t_) return;
  const int n = grid_.n_x();
  const double dx = grid_.dx();
  const double s = std::sqrt(2.0 * t);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = (i - j) * dx;
      // Cell-integrated kernel: exact mass on an infinite lattice.
      matrix_[static_cast<std::size_t>(i) * n + j] =
          0.5 * (std::erf((d + 0.5 * dx) / s) - std::erf((d - 0.5 * dx) / s));
    }
  }
  cached_t_ = t;
}

void HeatSemigroup::apply(std::span<const double> in, double t, std::span<double> out) {
  const auto n = static_cast<std::size_t>(grid_.n_x());
  if (in.size() != n || out.size() != n) throw std::invalid_argument("semigroup_apply: slice does not match grid");
  if (t < 0.0) throw std::domain_error("semigroup_apply: t must be nonnegative");
  if (t == 0.0) {
    if (in.data() != out.data()) std::copy(in.begin(), in.end(), out.begin());
    return;
  }
  if (grid_.boundary() == Boundary::periodic) {
    refresh_multiplier(t);
    auto real = fft_->real();
    std::copy(in.begin(), in.end(), real.begin());
    fft_->forward();
    auto spec = fft_->spectrum();
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= multiplier_[k];
    fft_->backward();
    std::copy(real.begin(), real.end(), out.begin());
    return;
  }
  refresh_matrix(t);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = matrix_.data() + i * n;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * in[j];
    scratch_[i] = acc;
  }
  std::copy(scratch_.begin(), scratch_.end(), out.begin());
}

std::vector<double> HeatSemigroup::kernel_row(int center, double t) {
  std::vector<double> row(static_cast<std::size_t>(grid_.n_x()), 0.0);
  row.at(static_cast<std::size_t>(center)) = 1.0 / grid_.dx();
  apply_inplace(row, t);
  return row;
}

std::vector<double> semigroup_apply(std::span<const double> slice, double t, const SpaceTimeGrid& grid) {
  HeatSemigroup s(grid);
  std::vector<double> out(slice.size());
  s.apply(slice, t, out);
  return out;
}

double weighted_convolution_lhs(double theta, double tau, double x, double x0) {
  if (!(theta > 0.0)) throw std::invalid_argument("weighted_convolution_lhs: theta must be positive");
  if (!(tau > 0.0)) throw std::domain_error("weighted_convolution_lhs: tau must be positive");
  using boost::math::quadrature::gauss_kronrod;
  const double sd = std::sqrt(tau);
  auto integrand = [&](double y) {
    const double w = std::pow(std::abs(y - x0), theta);
    return heat_kernel(tau, x - y) * (1.0 + w);
  };
  const double lo = x - 14.0 * sd;
  const double hi = x + 14.0 * sd;
  // The weight has a kink at x0; split there so the rule sees smooth pieces.
  double total = 0.0;
  if (x0 > lo && x0 < hi) {
    total += gauss_kronrod<double, 61>::integrate(integrand, lo, x0, 15, 1e-13);
    total += gauss_kronrod<double, 61>::integrate(integrand, x0, hi, 15, 1e-13);
  } else {
    total = gauss_kronrod<double, 61>::integrate(integrand, lo, hi, 15, 1e-13);
  }
  if (!std::isfinite(total)) throw std::overflow_error("weighted_convolution_lhs: non-finite value");
  return total;
}

WeightedBoundReport weighted_convolution_bound_check(double theta, double tau, double x0, double span,
                                                     int samples) {
  if (samples < 1) throw std::invalid_argument("weighted_convolution_bound_check: samples must be >= 1");
  WeightedBoundReport r;
  r.theta = theta;
  r.tau = tau;
  r.x0 = x0;
  for (int i = 0; i < samples; ++i) {
    const double x = samples == 1 ? x0 : x0 - span + 2.0 * span * i / (samples - 1);
    const double lhs = weighted_convolution_lhs(theta, tau, x, x0);
    const double rhs = 1.0 + std::pow(tau, 0.5 * theta) + std::pow(std::abs(x - x0), theta);
    r.xs.push_back(x);
    r.lhs.push_back(lhs);
    r.rhs_shape.push_back(rhs);
    r.constant = std::max(r.constant, lhs / rhs);
  }
  return r;
}

}  // namespace spdelab
