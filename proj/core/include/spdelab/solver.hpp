#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spdelab/det_map.hpp"
#include "spdelab/errors.hpp"
#include "spdelab/grid.hpp"
#include "spdelab/heat_kernel.hpp"
#include "spdelab/noise.hpp"
#include "spdelab/reaction.hpp"

namespace spdelab {

/// Diffusion coefficient sigma with sigma >= alpha > 0 (or identically zero)
/// and |sigma'| bounded.
class Diffusion {
 public:
  enum class Kind { constant, sine, sqrt_quadratic };

  /// sigma = level (additive noise; level = 0 switches the noise off).
  static Diffusion constant(double level = 1.0);
  /// sigma = level + amplitude sin(u), alpha = level - |amplitude|.
  static Diffusion sine(double level = 1.0, double amplitude = 0.1);
  /// sigma = sqrt(1 + u^2), alpha = 1, |sigma'| <= 1.
  static Diffusion sqrt_quadratic();
  /// "constant"/"additive", "sine", "sqrt", "zero".
  static Diffusion by_name(const std::string& name, double level = 1.0, double amplitude = 0.1);

  const std::string& name() const { return name_; }
  Kind kind() const { return kind_; }
  double level() const { return level_; }
  double amplitude() const { return amplitude_; }
  /// Lower bound alpha of sigma (0 for the zero coefficient).
  double alpha() const;
  bool is_zero() const { return kind_ == Kind::constant && level_ == 0.0; }
  bool is_additive() const { return kind_ == Kind::constant; }

  double eval(double u) const;
  double deriv(double u) const;

 private:
  Diffusion(std::string name, Kind kind, double level, double amplitude)
      : name_(std::move(name)), kind_(kind), level_(level), amplitude_(amplitude) {}
  std::string name_;
  Kind kind_;
  double level_;
  double amplitude_;
};

/// Bounded continuous initial datum u0.
struct InitialCondition {
  enum class Kind { constant, gaussian_bump };
  Kind kind = Kind::constant;
  double value = 0.0;      // constant level
  double amplitude = 1.0;  // bump: amplitude exp(-(x - center)^2 / (2 variance))
  double variance = 0.5;
  double center = 0.0;

  static InitialCondition constant(double c);
  static InitialCondition gaussian_bump(double amplitude, double variance, double center = 0.0);

  double eval(double x) const;
  /// Closed-form heat evolution S(t) u0 at x on the whole line.
  double evolved(double t, double x) const;
};

/// U0(t_k) = S(t_k) u0 for every time node.
RandomField initial_evolution(const InitialCondition& u0, HeatSemigroup& semigroup);

/// I(t_k) = sum_{j<k} S(t_k - t_j)[X(t_j) dW_j]: left-point (Ito) stochastic
/// convolution via I_0 = 0, I_{k+1} = S(dt)[I_k + X_k dW_k]. `integrand` holds
/// n_t + 1 slices; the last one is unused.
RandomField stochastic_convolution(const RandomField& integrand, const NoisePath& path, HeatSemigroup& semigroup);

struct PicardOptions {
  WeightedNorm weight{0.5, 0.0};
  double stop_tol = 1e-5;
  int n_max = 25;
  /// Keep iterating at least this many times even when delta < stop_tol.
  int min_iterations = 1;
  bool keep_iterates = false;
};

struct PicardState {
  int n = 0;
  /// ||u_n - u_{n-1}|| in the weighted norm (n >= 1).
  double delta = 0.0;
  double map_residual = 0.0;
  RandomField u;  // filled when keep_iterates
  RandomField z;
};

struct PicardResult {
  RandomField u;
  RandomField z;  // last stochastic convolution Z_n
  std::vector<PicardState> trace;
  bool converged = false;

  std::vector<double> deltas() const;
};

class PicardError : public NumericError {
 public:
  PicardError(const std::string& what, std::vector<double> deltas)
      : NumericError(what), deltas_(std::move(deltas)) {}
  const std::vector<double>& deltas() const { return deltas_; }

 private:
  std::vector<double> deltas_;
};

/// Picard scheme u_0 = M(U0), Z_{n+1} = I[sigma(u_n)], u_{n+1} = M(U0 + Z_{n+1}),
/// stopped when ||u_{n+1} - u_n|| < stop_tol. Throws PicardError after n_max
/// iterations without convergence.
PicardResult picard_solve(const ReactionFn& f, const Diffusion& sigma, const InitialCondition& u0,
                          const NoisePath& path, HeatSemigroup& semigroup, const PicardOptions& options = {});
PicardResult picard_solve(const ReactionFn& f, const Diffusion& sigma, const InitialCondition& u0,
                          const NoisePath& path, const PicardOptions& options = {});

/// The fixed point of the discrete Picard map computed in one forward sweep:
/// since the scheme is adapted, u_{k+1} depends only on u_0..u_k and the
/// sweep reproduces the Picard limit without iterating.
RandomField solve_direct(const ReactionFn& f, const Diffusion& sigma, const InitialCondition& u0,
                         const NoisePath& path, HeatSemigroup& semigroup);

/// Field u - M(U0 + I[sigma(u)]) of the discrete mild equation.
RandomField mild_defect(const RandomField& u, const ReactionFn& f, const Diffusion& sigma,
                        const InitialCondition& u0, const NoisePath& path, HeatSemigroup& semigroup);

struct ConvergenceReport {
  std::vector<int> n;
  std::vector<double> deltas;
  /// exp(slope) of a least-squares fit of log delta_n against n over positive deltas.
  double rate = 0.0;
  double r_squared = 1.0;
  bool geometric = true;
  /// deltas non-increasing after the burn-in.
  bool monotone_tail = true;
  std::string note;
};

/// Requires at least 3 recorded iterations.
ConvergenceReport convergence_report(const std::vector<PicardState>& trace, int burn_in = 2);

/// CSV with header n,delta,rate (rate = delta_n / delta_{n-1}; nan for the first row).
void write_trace_csv(const std::filesystem::path& file, const std::vector<PicardState>& trace);

}  // namespace spdelab
