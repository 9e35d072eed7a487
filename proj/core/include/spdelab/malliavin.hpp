#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spdelab/errors.hpp"
#include "spdelab/model.hpp"
#include "spdelab/noise.hpp"
#include "spdelab/solver.hpp"

namespace spdelab {

/// Probe direction h(r, z) = G_h(t0 - r, x0 - z) 1_{[t0 - delta, t0)}(r), where
/// G_h(m dt, .) is the discrete heat kernel S(m dt)[delta_{x0} / dx] and time
/// cell j carries the lag t0 - t_j. t0 and x0 must be grid nodes and delta a
/// positive multiple of dt.
struct MalliavinProbe {
  double t0 = 0.0;
  double x0 = 0.0;
  double delta = 0.0;
  int k0 = 0;       // time index of t0
  int i0 = 0;       // space index of x0
  int m_steps = 0;  // delta / dt
  CameronMartinElement h;
};

MalliavinProbe make_probe(const SpaceTimeGrid& grid, double t0, double x0, double delta, HeatSemigroup& semigroup);

/// Per-node parts of the derivative field: v = inner + a + b, where inner is
/// the source term sum G sigma(u) (Lambda * h) dt, a the drift term
/// sum G f'(u) v and b the Ito term sum G sigma'(u) v dW.
struct DerivativeParts {
  RandomField inner;
  RandomField a;
  RandomField b;
};

/// D_h u on the grid for an arbitrary direction h, as the exact derivative of
/// the discrete scheme along dW -> dW + eps dt (Lambda * h):
///   v_{k+1} = S[(1 + kappa dt) v_k + sigma'(u_k) v_k dW_k + sigma(u_k) dt (Lambda * h)_k]
///             / (1 - dt (f'(u_{k+1}) - kappa)).
/// `u` must be the solution on `path` (solve_direct or a converged Picard run).
RandomField directional_derivative(const RandomField& u, const NoisePath& path, const CameronMartinElement& h,
                                   const ReactionFn& f, const Diffusion& sigma, NoiseCovariance& cov,
                                   HeatSemigroup& semigroup, DerivativeParts* parts = nullptr);

RandomField solve_directional_derivative(const RandomField& u, const NoisePath& path, const MalliavinProbe& probe,
                                         const ReactionFn& f, const Diffusion& sigma, NoiseCovariance& cov,
                                         HeatSemigroup& semigroup);

struct DerivativeDecomposition {
  /// <phi_{t0,x0}, h>_{H_T} with phi(r,z) = G_h(t0 - r, x0 - z) sigma(u(r,z)), via ht_inner.
  double inner = 0.0;
  /// The same quantity accumulated along the recursion (cross-check).
  double inner_recursive = 0.0;
  double a_term = 0.0;
  double b_term = 0.0;
  double total = 0.0;
  double consistency = 0.0;  // |total - (inner + a_term + b_term)|
};

inline constexpr double kDecompositionTolerance = 1e-6;

/// Throws NumericError naming the three terms when the consistency defect
/// exceeds kDecompositionTolerance * (1 + |total|).
DerivativeDecomposition decompose_derivative(const RandomField& u, const NoisePath& path, const MalliavinProbe& probe,
                                             const ReactionFn& f, const Diffusion& sigma, NoiseCovariance& cov,
                                             HeatSemigroup& semigroup);

/// (u^eps(t0, x0) - u(t0, x0)) / eps, where u^eps solves the scheme on the
/// shifted increments dW_j + eps dt (Lambda * h)_j. Both solutions come from
/// the forward sweep (the Picard fixed point).
double cameron_martin_fd_oracle(const Model& model, const NoisePath& path, const MalliavinProbe& probe,
                                double epsilon, NoiseCovariance& cov, HeatSemigroup& semigroup);
/// Variant with the unshifted solution at (t0, x0) already known.
double cameron_martin_fd_oracle(const Model& model, const NoisePath& path, const MalliavinProbe& probe,
                                double epsilon, double base_value, NoiseCovariance& cov, HeatSemigroup& semigroup);

struct PositivityRow {
  int path_id = 0;
  int k = 0;
  double delta = 0.0;
  /// Q on the grid: sum over m = 1..delta/dt of dt <G_h, C G_h>.
  double q_lambda = 0.0;
  double inner = 0.0;
  double a_term = 0.0;
  double b_term = 0.0;
  double total = 0.0;
  bool positive = false;
};

struct PositivityRung {
  int k = 0;
  double delta = 0.0;
  bool resolved = true;
  double q_lambda = 0.0;      // grid value
  double q_continuum = 0.0;   // closed form
  double min_inner_ratio = 0.0;   // min over paths of inner / q
  double median_error_ratio = 0.0;  // median over paths of (|A| + |B|) / q
  double fraction_positive = 0.0;
};

struct PositivityStudy {
  std::vector<PositivityRow> rows;    // resolved rungs only, ordered by (path, k)
  std::vector<PositivityRung> rungs;  // k = 1..k_max, unresolved ones flagged
  int smallest_resolved_k = 0;
  double fraction_positive_smallest = 0.0;
  double alpha = 0.0;
};

struct PositivityOptions {
  double t0 = 0.5;
  double x0 = 0.0;
  int k_max = 6;
  int n_paths = 100;
  std::uint64_t base_seed = 1;
  int threads = 0;
  /// Rungs with delta < min_steps * dt are reported as unresolved.
  int min_steps = 4;
};

/// delta_k = 2^{-k} t0 for k = 1..k_max; per path one forward solve and one
/// decomposition per resolved rung.
PositivityStudy positivity_study(const Model& model, const PositivityOptions& options);

/// CSV with header path_id,k,delta,q_lambda,inner,a_term,b_term,total,positive_flag.
void write_positivity_csv(const std::filesystem::path& file, const PositivityStudy& study);

}  // namespace spdelab
