#pragma once

#include <memory>
#include <span>
#include <vector>

#include "spdelab/grid.hpp"

namespace spdelab {

namespace detail {
class RealFft;
}

/// Fundamental solution of du/dt = (1/2) Laplacian:
/// G(t, x) = (2 pi t)^{-d/2} exp(-|x|^2 / (2 t)). Throws std::domain_error for t <= 0.
double heat_kernel(double t, std::span<const double> x);
double heat_kernel(double t, double x);

/// The heat semigroup S(t) = exp(t Laplacian / 2) acting on one spatial slice.
///
/// Periodic grids use the exact continuum symbol exp(-t xi^2 / 2) at the
/// discrete frequencies xi_k = pi k / L (circular convolution via FFT).
/// Truncated-absorbing grids convolve with the cell-integrated kernel and
/// lose whatever mass leaves [-L, L).
///
/// An instance owns FFT scratch space and is not safe for concurrent use;
/// give each worker its own.
class HeatSemigroup {
 public:
  explicit HeatSemigroup(const SpaceTimeGrid& grid);
  ~HeatSemigroup();
  HeatSemigroup(HeatSemigroup&&) noexcept;
  HeatSemigroup& operator=(HeatSemigroup&&) noexcept;

  const SpaceTimeGrid& grid() const { return grid_; }

  /// out = S(t) in. `in` and `out` may alias. t = 0 copies.
  void apply(std::span<const double> in, double t, std::span<double> out);
  void apply_inplace(std::span<double> v, double t) { apply(v, t, v); }

  /// Row of S(t) seen from node `center` and divided by dx: the discrete
  /// heat kernel G_h(t, x_i - x_center).
  std::vector<double> kernel_row(int center, double t);

 private:
  void refresh_multiplier(double t);
  void refresh_matrix(double t);

  SpaceTimeGrid grid_;
  std::unique_ptr<detail::RealFft> fft_;
  std::vector<double> xi2_;          // squared frequencies (periodic)
  std::vector<double> multiplier_;   // exp(-t xi^2 / 2) / n for cached_t_
  std::vector<double> matrix_;       // dense kernel (truncated)
  std::vector<double> scratch_;
  double cached_t_ = -1.0;
};

/// Convenience wrapper: semigroup_apply(v, t, grid) = S(t) v.
std::vector<double> semigroup_apply(std::span<const double> slice, double t,
                                    const SpaceTimeGrid& grid);

/// Left side of the weighted Gaussian convolution estimate
/// int G(tau, x - y) (1 + |y - x0|^theta) dy, by adaptive quadrature.
double weighted_convolution_lhs(double theta, double tau, double x, double x0);

struct WeightedBoundReport {
  double theta = 0.0;
  double tau = 0.0;
  double x0 = 0.0;
  std::vector<double> xs;
  std::vector<double> lhs;
  std::vector<double> rhs_shape;  // 1 + tau^{theta/2} + |x - x0|^theta
  /// Smallest C with lhs <= C * rhs_shape at every sampled x.
  double constant = 0.0;
};

/// Samples x over [x0 - span, x0 + span] and reports the smallest constant in
/// int G(tau, x-y)(1+|y-x0|^theta) dy <= C (1 + tau^{theta/2} + |x-x0|^theta).
WeightedBoundReport weighted_convolution_bound_check(double theta, double tau, double x0,
                                                     double span = 10.0, int samples = 201);

}  // namespace spdelab
