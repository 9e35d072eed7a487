#include "spdelab/det_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "spdelab/noise.hpp"

namespace spdelab {

double WeightedNorm::weight(double x) const { return 1.0 + std::pow(std::abs(x - center), theta); }

void check_weight(const WeightedNorm& w, const ReactionFn& f) {
  if (!(w.theta > 0.0)) throw std::invalid_argument("weight.theta must be positive");
  if (!(w.theta * f.growth_nu() < 2.0)) throw std::invalid_argument("theta*nu >= 2");
}

namespace {
std::vector<double> inverse_weights(const SpaceTimeGrid& grid, const WeightedNorm& w) {
  if (!(w.theta > 0.0)) throw std::invalid_argument("weighted_norm: theta must be positive");
  std::vector<double> inv(static_cast<std::size_t>(grid.n_x()));
  const double period = 2.0 * grid.half_width();
  for (int i = 0; i < grid.n_x(); ++i) {
    double d = std::abs(grid.x(i) - w.center);
    // On the torus the distance to the center is taken to the nearest image.
    if (grid.boundary() == Boundary::periodic) d = std::min(d, std::abs(period - std::fmod(d, period)));
    inv[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::pow(d, w.theta));
  }
  return inv;
}
}  // namespace

double weighted_norm(const SliceArray& z, const WeightedNorm& w) {
  const auto inv = inverse_weights(z.grid(), w);
  double best = 0.0;
  for (int k = 0; k < z.n_slices(); ++k) {
    auto s = z.slice(k);
    for (std::size_t i = 0; i < s.size(); ++i) best = std::max(best, std::abs(s[i]) * inv[i]);
  }
  return best;
}

double weighted_distance(const SliceArray& a, const SliceArray& b, const WeightedNorm& w) {
  require_same_shape(a, b, "weighted_distance");
  const auto inv = inverse_weights(a.grid(), w);
  double best = 0.0;
  for (int k = 0; k < a.n_slices(); ++k) {
    auto sa = a.slice(k);
    auto sb = b.slice(k);
    for (std::size_t i = 0; i < sa.size(); ++i) best = std::max(best, std::abs(sa[i] - sb[i]) * inv[i]);
  }
  return best;
}

namespace {

void check_input(const RandomField& z, const HeatSemigroup& s, const char* what) {
  if (z.n_slices() != z.grid().n_t() + 1) throw std::invalid_argument(std::string(what) + ": z must hold n_t + 1 slices");
  if (!(z.grid() == s.grid())) throw std::invalid_argument(std::string(what) + ": semigroup built for a different grid");
  if (!z.all_finite()) throw std::invalid_argument(std::string(what) + ": z has non-finite values");
}

// Shared time marcher. `step(k, w, out, inc)` maps the predictor
// w = z_{k+1} + S(dt)[(1 + kappa dt) m_k - z_k] to m_{k+1} and stores the
// implicit drift increment (the dt * phi part) in `inc`.
template <class Step>
MapSolveReport march(const RandomField& z, double kappa, HeatSemigroup& s, const MapSolveOptions& options,
                     Step&& step) {
  const SpaceTimeGrid& grid = z.grid();
  const double dt = grid.dt();
  const auto n = static_cast<std::size_t>(grid.n_x());
  MapSolveReport rep;
  rep.solution = RandomField(grid);
  rep.defect = RandomField(grid);
  RandomField& m = rep.solution;
  std::vector<double> tmp(n), inc(n), dur(n);
  std::copy(z.slice(0).begin(), z.slice(0).end(), m.slice(0).begin());

  // Duhamel integral of the drift, D_{k+1} = S[D_k + kappa dt m_k] + inc_{k+1}.
  std::vector<double> duhamel(n, 0.0);
  double residual = 0.0;
  const double growth = 1.0 + kappa * dt;
  for (int k = 0; k < grid.n_t(); ++k) {
    auto mk = m.slice(k);
    auto zk = z.slice(k);
    auto zk1 = z.slice(k + 1);
    auto mk1 = m.slice(k + 1);
    if (kappa == 0.0) {
      for (std::size_t i = 0; i < n; ++i) tmp[i] = mk[i] - zk[i];
    } else {
      for (std::size_t i = 0; i < n; ++i) tmp[i] = growth * mk[i] - zk[i];
    }
    s.apply_inplace(tmp, dt);
    for (std::size_t i = 0; i < n; ++i) tmp[i] += zk1[i];
    step(k, std::span<const double>(tmp), mk1, std::span<double>(inc));

    for (std::size_t i = 0; i < n; ++i) dur[i] = duhamel[i] + kappa * dt * mk[i];
    s.apply(dur, dt, duhamel);
    auto dk1 = rep.defect.slice(k + 1);
    for (std::size_t i = 0; i < n; ++i) {
      duhamel[i] += inc[i];
      dk1[i] = mk1[i] - zk1[i] - duhamel[i];
      residual = std::max(residual, std::abs(dk1[i]));
    }
  }
  rep.residual = residual;
  double zmax = 0.0;
  for (double v : z.values()) zmax = std::max(zmax, std::abs(v));
  rep.tolerance = options.defect_factor * (1.0 + zmax);
  if (!m.all_finite()) throw NumericError("map solve produced non-finite values");
  if (!(rep.residual <= rep.tolerance)) {
    std::ostringstream os;
    os << "map solve defect " << rep.residual << " exceeds tolerance " << rep.tolerance;
    throw MapSolveError(os.str(), std::move(rep));
  }
  return rep;
}

MapSolveReport march_resolvent(const RandomField& z, const ReactionFn& f, HeatSemigroup& s,
                               const MapSolveOptions& options, double lambda, int substeps) {
  const double dt = z.grid().dt();
  if (f.phi_is_zero()) {
    return march(z, f.kappa(), s, options, [](int, std::span<const double> w, std::span<double> out, std::span<double> inc) {
      std::copy(w.begin(), w.end(), out.begin());
      std::fill(inc.begin(), inc.end(), 0.0);
    });
  }
  if (substeps == 1) {
    return march(z, f.kappa(), s, options,
                 [&](int, std::span<const double> w, std::span<double> out, std::span<double> inc) {
                   for (std::size_t i = 0; i < w.size(); ++i) {
                     out[i] = resolvent(f, dt, w[i]);
                     inc[i] = dt * f.phi(out[i]);
                   }
                 });
  }
  return march(z, f.kappa(), s, options,
               [&](int, std::span<const double> w, std::span<double> out, std::span<double> inc) {
                 for (std::size_t i = 0; i < w.size(); ++i) {
                   double v = w[i];
                   double acc = 0.0;
                   for (int r = 0; r < substeps; ++r) {
                     v = resolvent(f, lambda, v);
                     acc += lambda * f.phi(v);
                   }
                   out[i] = v;
                   inc[i] = acc;
                 }
               });
}

}  // namespace

MapSolveReport apply_M(const RandomField& z, const ReactionFn& f, HeatSemigroup& semigroup,
                       const MapSolveOptions& options) {
  check_input(z, semigroup, "apply_M");
  const double dt = z.grid().dt();
  if (options.scheme == DriftScheme::semi_implicit) {
    auto rep = march_resolvent(z, f, semigroup, options, dt, 1);
    rep.scheme = "semi-implicit";
    rep.ladder_lambdas = {dt};
    return rep;
  }
  if (options.ladder_rungs < 1) throw std::invalid_argument("apply_M: ladder_rungs must be >= 1");
  MapSolveReport finest, coarser;
  std::vector<double> lambdas;
  for (int r = 0; r < options.ladder_rungs; ++r) {
    const int sub = 1 << r;
    const double lambda = dt / sub;
    lambdas.push_back(lambda);
    auto rep = march_resolvent(z, f, semigroup, options, lambda, sub);
    coarser = std::move(finest);
    finest = std::move(rep);
  }
  finest.scheme = "yosida-ladder";
  finest.ladder_lambdas = lambdas;
  finest.extrapolated = finest.solution;
  if (options.ladder_rungs > 1) {
    auto ex = finest.extrapolated.values();
    auto coarse = coarser.solution.values();
    double gap = 0.0;
    for (std::size_t i = 0; i < ex.size(); ++i) {
      gap = std::max(gap, std::abs(ex[i] - coarse[i]));
      ex[i] = 2.0 * ex[i] - coarse[i];
    }
    finest.richardson_gap = gap;
  }
  return finest;
}

MapSolveReport apply_M(const RandomField& z, const ReactionFn& f, const MapSolveOptions& options) {
  HeatSemigroup s(z.grid());
  return apply_M(z, f, s, options);
}

MapSolveReport apply_L(const RandomField& z, const RandomField& coeff, double kappa, HeatSemigroup& semigroup,
                       const MapSolveOptions& options) {
  check_input(z, semigroup, "apply_L");
  require_same_shape(z, coeff, "apply_L");
  for (double c : coeff.values()) {
    if (!(c <= kappa)) {
      std::ostringstream os;
      os << "apply_L: coefficient " << c << " exceeds the bound kappa = " << kappa;
      throw std::invalid_argument(os.str());
    }
  }
  const double dt = z.grid().dt();
  auto rep = march(z, kappa, semigroup, options,
                   [&](int k, std::span<const double> w, std::span<double> out, std::span<double> inc) {
                     auto c = coeff.slice(k + 1);
                     for (std::size_t i = 0; i < w.size(); ++i) {
                       const double a = dt * (c[i] - kappa);
                       out[i] = w[i] / (1.0 - a);
                       inc[i] = a * out[i];
                     }
                   });
  rep.scheme = "linear-implicit";
  rep.ladder_lambdas = {dt};
  return rep;
}

MapSolveReport apply_L(const RandomField& z, const RandomField& coeff, double kappa, const MapSolveOptions& options) {
  HeatSemigroup s(z.grid());
  return apply_L(z, coeff, kappa, s, options);
}

void write_map_report_csv(const std::filesystem::path& file, const MapSolveReport& report) {
  std::ofstream os(file);
  if (!os) throw IoError("cannot open '" + file.string() + "' for writing");
  const auto& g = report.solution.grid();
  os << "t,x,value,defect\n";
  char buf[128];
  for (int k = 0; k <= g.n_t(); ++k) {
    for (int i = 0; i < g.n_x(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", g.t(k), g.x(i),
                    report.solution(k, static_cast<std::size_t>(i)), report.defect(k, static_cast<std::size_t>(i)));
      os << buf;
    }
  }
  if (!os) throw IoError("write to '" + file.string() + "' failed");
}

RandomField random_smooth_field(const SpaceTimeGrid& grid, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  constexpr int kModes = 4;
  double a[kModes], b[kModes], p[kModes];
  for (int m = 0; m < kModes; ++m) {
    const double s = amplitude / (1.0 + m);
    a[m] = s * normal(rng);
    b[m] = 0.5 * s * normal(rng);
    p[m] = phase(rng);
  }
  RandomField z(grid);
  const double base = std::numbers::pi / grid.half_width();
  const auto n = static_cast<std::size_t>(grid.n_x());
  std::vector<double> modes(kModes * n);
  for (int m = 0; m < kModes; ++m)
    for (std::size_t i = 0; i < n; ++i)
      modes[m * n + i] = std::cos(base * m * grid.x(static_cast<int>(i)) + p[m]);
  for (int k = 0; k <= grid.n_t(); ++k) {
    const double t = grid.t(k) / grid.t_max();
    auto s = z.slice(k);
    std::fill(s.begin(), s.end(), 0.0);
    for (int m = 0; m < kModes; ++m) {
      const double c = a[m] + b[m] * t;
      for (std::size_t i = 0; i < n; ++i) s[i] += c * modes[m * n + i];
    }
  }
  return z;
}

namespace {
RandomField translated(const RandomField& z, int shift) {
  if (shift == 0) return z;
  RandomField out(z.grid());
  const int n = z.grid().n_x();
  for (int k = 0; k < z.n_slices(); ++k) {
    auto in = z.slice(k);
    auto o = out.slice(k);
    for (int i = 0; i < n; ++i) o[static_cast<std::size_t>(((i + shift) % n + n) % n)] = in[static_cast<std::size_t>(i)];
  }
  return out;
}

double spread_of(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi > 0.0 ? (*hi - *lo) / *hi : 0.0;
}
}  // namespace

LipschitzEstimate estimate_lipschitz_M(const ReactionFn& f, const SpaceTimeGrid& grid, double theta,
                                       const std::vector<double>& centers, int trials, std::uint64_t seed,
                                       double amplitude) {
  if (trials < 2) throw std::invalid_argument("estimate_lipschitz_M: trials must be >= 2");
  if (centers.empty()) throw std::invalid_argument("estimate_lipschitz_M: no centers");
  LipschitzEstimate est;
  est.theta = theta;
  est.centers = centers;
  est.ratios.assign(centers.size(), {});
  est.max_ratio.assign(centers.size(), 0.0);
  est.raw_max_ratio.assign(centers.size(), 0.0);
  // Translates by all pairwise center differences (mod n_x).
  const int n = grid.n_x();
  std::vector<int> shifts;
  for (double ci : centers)
    for (double cj : centers) {
      const int d = ((static_cast<int>(std::lround((ci - cj) / grid.dx())) % n) + n) % n;
      if (std::find(shifts.begin(), shifts.end(), d) == shifts.end()) shifts.push_back(d);
    }
  std::sort(shifts.begin(), shifts.end());

  HeatSemigroup s(grid);
  for (int p = 0; p < trials; ++p) {
    const RandomField z1 = random_smooth_field(grid, derive_seed(seed, 2 * static_cast<std::uint64_t>(p)), amplitude);
    const RandomField z2 = random_smooth_field(grid, derive_seed(seed, 2 * static_cast<std::uint64_t>(p) + 1), amplitude);
    for (std::size_t j = 0; j < shifts.size(); ++j) {
      const RandomField a = translated(z1, shifts[j]);
      const RandomField b = translated(z2, shifts[j]);
      const auto m1 = apply_M(a, f, s);
      const auto m2 = apply_M(b, f, s);
      for (std::size_t c = 0; c < centers.size(); ++c) {
        const WeightedNorm w{theta, centers[c]};
        const double dz = weighted_distance(b, a, w);
        if (dz == 0.0) continue;  // identical inputs carry no information
        const double r = weighted_distance(m2.solution, m1.solution, w) / dz;
        est.ratios[c].push_back(r);
        est.max_ratio[c] = std::max(est.max_ratio[c], r);
        if (shifts[j] == 0) est.raw_max_ratio[c] = std::max(est.raw_max_ratio[c], r);
      }
    }
  }
  est.overall_max = *std::max_element(est.max_ratio.begin(), est.max_ratio.end());
  est.center_spread = spread_of(est.max_ratio);
  est.raw_center_spread = spread_of(est.raw_max_ratio);
  return est;
}

double frozen_lipschitz_bound(double theta, double kappa, double t_max) {
  return std::exp((2.0 * kappa + 0.5 * theta) * t_max);
}

}  // namespace spdelab
