#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spdelab/errors.hpp"

namespace spdelab {

/// Half-Lipschitz reaction term f = phi + kappa u with phi non-increasing.
///
/// The growth certificate (K, nu) bounds |f'(u)| <= K exp(K |u|^nu). Every
/// instance is validated on a dense sweep of [-10, 10] when constructed;
/// a sweep failure throws std::invalid_argument.
class ReactionFn {
 public:
  enum class Kind { allen_cahn, exponential, linear, damping, custom };

  /// f(u) = -u^3 + u, kappa = 1.
  static ReactionFn allen_cahn();
  /// f(u) = u - e^u, kappa = 1.
  static ReactionFn exponential();
  /// f(u) = kappa u (phi = 0). `linear(0)` is the zero reaction.
  static ReactionFn linear(double kappa);
  /// f(u) = -u with kappa = 0, so phi(u) = -u.
  static ReactionFn damping();
  static ReactionFn custom(std::string name, std::function<double(double)> f,
                           std::function<double(double)> df, double kappa, double K, double nu);
  /// Lookup by catalogue name: "allen-cahn", "exponential", "linear", "zero", "damping".
  static ReactionFn by_name(const std::string& name, double kappa = 0.0);

  const std::string& name() const { return name_; }
  Kind kind() const { return kind_; }
  double kappa() const { return kappa_; }
  double growth_K() const { return K_; }
  double growth_nu() const { return nu_; }
  bool is_zero() const { return kind_ == Kind::linear && kappa_ == 0.0; }
  /// phi identically zero (resolvents are the identity).
  bool phi_is_zero() const { return kind_ == Kind::linear; }

  double eval(double u) const;
  double deriv(double u) const;
  double phi(double u) const { return phi_is_zero() ? 0.0 : eval(u) - kappa_ * u; }
  double phi_deriv(double u) const { return phi_is_zero() ? 0.0 : deriv(u) - kappa_; }

 private:
  ReactionFn(std::string name, Kind kind, double kappa, double K, double nu)
      : name_(std::move(name)), kind_(kind), kappa_(kappa), K_(K), nu_(nu) {}
  void validate() const;

  std::string name_;
  Kind kind_;
  double kappa_;
  double K_;
  double nu_;
  std::function<double(double)> f_;
  std::function<double(double)> df_;
};

/// phi = f - kappa u and kappa, after re-running the sweep check f' <= kappa.
struct Decomposition {
  std::function<double(double)> phi;
  double kappa;
};
Decomposition decompose(const ReactionFn& f);

inline constexpr double kResolventTolerance = 1e-10;

/// J_lambda(u): the root v of v - lambda phi(v) = u, with |residual| <= tol * max(1, |u|).
/// Throws NumericError when bracketing or the Newton/bisection iteration fails.
double resolvent(const ReactionFn& f, double lambda, double u, double tol = kResolventTolerance);

/// phi_lambda(u) = (J_lambda(u) - u) / lambda.
double yosida_phi(const ReactionFn& f, double lambda, double u);
/// phi_lambda'(u) = phi'(J) / (1 - lambda phi'(J)), J = J_lambda(u).
double yosida_phi_deriv(const ReactionFn& f, double lambda, double u);
/// f_lambda(u) = phi_lambda(u) + kappa u.
double yosida_f(const ReactionFn& f, double lambda, double u);
double yosida_f_deriv(const ReactionFn& f, double lambda, double u);

/// Counts of violated Yosida-approximation inequalities on a randomized sweep.
struct YosidaSuiteReport {
  struct Check {
    std::string name;
    std::int64_t evaluated = 0;
    std::int64_t violations = 0;
    double worst_excess = 0.0;  // largest (lhs - rhs) / scale observed
    double worst_u = 0.0;
    double worst_lambda = 0.0;
  };
  std::string reaction;
  std::vector<Check> checks;

  bool all_pass() const;
  const Check& find(const std::string& name) const;
};

/// Sweeps u uniformly in [lo, hi] (`n_points` draws, pairs formed from
/// consecutive draws) for each lambda and checks
///   phi.i  |phi_l(u1) - phi_l(u2)| <= (2/l)|u1 - u2|
///   phi.ii |phi_l(u)| <= |phi(u)|
///   phi.iii phi_l non-increasing
///   phi.iv |phi_l - phi| non-increasing as l decreases, and <= l |phi'(u) phi(u)|
///   phi.v  |phi_l' - phi'| non-increasing as l decreases; phi_l' matches central differences
///   f.i ... f.v the same for f_l, with f.ii |f_l(u)| <= (1 + 2 kappa)|f(u)|
/// A point violates when lhs - rhs > slack * (1 + |lhs| + |rhs|).
YosidaSuiteReport yosida_suite(const ReactionFn& f, const std::vector<double>& lambdas,
                               std::int64_t n_points, std::uint64_t seed, double slack = 1e-6,
                               double lo = -10.0, double hi = 10.0);

}  // namespace spdelab
