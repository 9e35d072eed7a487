#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spdelab/errors.hpp"
#include "spdelab/grid.hpp"
#include "spdelab/heat_kernel.hpp"
#include "spdelab/reaction.hpp"

namespace spdelab {

/// Weight 1 + |x - center|^theta of the norm sup |z(t,x)| / (1 + |x - x0|^theta).
struct WeightedNorm {
  double theta = 0.5;
  double center = 0.0;

  double weight(double x) const;
};

/// Throws std::invalid_argument unless theta > 0 and theta * nu < 2 for `f`.
void check_weight(const WeightedNorm& w, const ReactionFn& f);

/// max over all stored slices and nodes of |z| / (1 + |x - x0|^theta).
double weighted_norm(const SliceArray& z, const WeightedNorm& w);
/// weighted_norm(a - b) without materializing the difference.
double weighted_distance(const SliceArray& a, const SliceArray& b, const WeightedNorm& w);

/// Treatment of the monotone part phi in the time-marching solve.
enum class DriftScheme {
  /// One resolvent J_dt per node and step.
  semi_implicit,
  /// Rungs lambda = dt, dt/2, ..., each applying J_lambda dt/lambda times per
  /// step (explicit Euler on the Yosida approximation f_lambda), plus a
  /// Richardson extrapolation of the two finest rungs.
  yosida_ladder,
};

struct MapSolveOptions {
  DriftScheme scheme = DriftScheme::semi_implicit;
  int ladder_rungs = 4;
  /// Defect tolerance is defect_factor * (1 + max |z|).
  double defect_factor = 1e-6;
};

/// Result of a map solve. `defect` is the pointwise residual of the discrete
/// integral equation m - z - (discrete Duhamel integral of the drift),
/// evaluated by an independent recursion; `residual` is its maximum.
struct MapSolveReport {
  RandomField solution;
  RandomField defect;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string scheme;
  std::vector<double> ladder_lambdas;
  /// yosida_ladder only: 2 M_{lambda_min} - M_{2 lambda_min} and the sup gap
  /// between the two finest rungs.
  RandomField extrapolated;
  double richardson_gap = 0.0;
};

/// Raised when the defect certificate exceeds its tolerance; carries the report.
class MapSolveError : public NumericError {
 public:
  MapSolveError(const std::string& what, MapSolveReport report)
      : NumericError(what), report_(std::move(report)) {}
  const MapSolveReport& report() const { return report_; }

 private:
  MapSolveReport report_;
};

/// M(z): the solution m of m = G * f(m) + z, realized by the scheme
///   m_0 = z_0,
///   m_{k+1} = J_dt( z_{k+1} + S(dt)[(1 + kappa dt) m_k - z_k] ).
/// With f = 0 this returns z bit for bit.
MapSolveReport apply_M(const RandomField& z, const ReactionFn& f, HeatSemigroup& semigroup,
                       const MapSolveOptions& options = {});
MapSolveReport apply_M(const RandomField& z, const ReactionFn& f, const MapSolveOptions& options = {});

/// L(z) for the linear drift c(s,y) V: the solution of m = G * (c m) + z, with
///   m_{k+1} = (z_{k+1} + S(dt)[(1 + kappa dt) m_k - z_k]) / (1 - dt (c_{k+1} - kappa)).
/// Requires c <= kappa everywhere.
MapSolveReport apply_L(const RandomField& z, const RandomField& coeff, double kappa, HeatSemigroup& semigroup,
                       const MapSolveOptions& options = {});
MapSolveReport apply_L(const RandomField& z, const RandomField& coeff, double kappa,
                       const MapSolveOptions& options = {});

/// CSV with header t,x,value,defect.
void write_map_report_csv(const std::filesystem::path& file, const MapSolveReport& report);

struct LipschitzEstimate {
  double theta = 0.0;
  std::vector<double> centers;
  /// ratios[c][p]: pair p measured with weight center c.
  std::vector<std::vector<double>> ratios;
  std::vector<double> max_ratio;  // per center
  double overall_max = 0.0;
  /// (max - min) / max of max_ratio across centers.
  double center_spread = 0.0;
  /// The same statistics restricted to the untranslated pairs.
  std::vector<double> raw_max_ratio;
  double raw_center_spread = 0.0;
};

/// Random smooth field: a few random Fourier modes in space times a random
/// affine-in-time profile, amplitudes about `amplitude`.
RandomField random_smooth_field(const SpaceTimeGrid& grid, std::uint64_t seed, double amplitude = 1.0);

/// Max of ||M(z2) - M(z1)|| / ||z2 - z1|| in the weighted norm, for each
/// center. The pair family is `trials` random pairs together with their
/// spatial translates by all pairwise center differences, so that each center sees the same
/// translation-closed family (the sup defining the Lipschitz constant is
/// over a translation-invariant set).
LipschitzEstimate estimate_lipschitz_M(const ReactionFn& f, const SpaceTimeGrid& grid, double theta,
                                       const std::vector<double>& centers, int trials, std::uint64_t seed,
                                       double amplitude = 1.0);

/// Frozen regression bound exp(C T) for the empirical Lipschitz constant of M
/// with C = 2 kappa + theta / 2.
double frozen_lipschitz_bound(double theta, double kappa, double t_max);

}  // namespace spdelab
