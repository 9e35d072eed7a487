#include "spdelab/malliavin.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

namespace spdelab {

MalliavinProbe make_probe(const SpaceTimeGrid& grid, double t0, double x0, double delta, HeatSemigroup& semigroup) {
  if (!(semigroup.grid() == grid)) throw std::invalid_argument("make_probe: semigroup built for a different grid");
  MalliavinProbe p;
  p.t0 = t0;
  p.x0 = x0;
  p.delta = delta;
  p.k0 = grid.time_index(t0);
  p.i0 = grid.space_index(x0);
  if (p.k0 < 1) throw std::invalid_argument("probe: t0 must be a positive grid time");
  if (p.i0 < 0) throw std::invalid_argument("probe: x0 must be a grid node");
  const double steps = delta / grid.dt();
  p.m_steps = static_cast<int>(std::lround(steps));
  if (p.m_steps < 1 || std::abs(steps - p.m_steps) > 1e-9 * std::max(1.0, steps))
    throw std::invalid_argument("probe: delta must be a positive multiple of dt");
  if (p.m_steps > p.k0) throw std::invalid_argument("probe: delta exceeds t0");
  p.h = CameronMartinElement(grid);
  for (int j = p.k0 - p.m_steps; j < p.k0; ++j) {
    const auto row = semigroup.kernel_row(p.i0, (p.k0 - j) * grid.dt());
    std::copy(row.begin(), row.end(), p.h.slice(j).begin());
  }
  return p;
}

namespace {

bool slice_is_zero(std::span<const double> s) {
  return std::all_of(s.begin(), s.end(), [](double v) { return v == 0.0; });
}

RandomField derivative_impl(const RandomField& u, const NoisePath& path, const CameronMartinElement& h,
                            const ReactionFn& f, const Diffusion& sigma, NoiseCovariance& cov, HeatSemigroup& s,
                            DerivativeParts* parts, int k_end) {
  const SpaceTimeGrid& g = s.grid();
  if (!(path.grid == g) || !(u.grid() == g)) throw std::invalid_argument("directional_derivative: grid mismatch");
  if (h.n_slices() != g.n_t() || h.slice_size() != g.points_per_slice())
    throw std::invalid_argument("directional_derivative: direction does not match the grid");
  const auto n = static_cast<std::size_t>(g.n_x());
  const double dt = g.dt();
  const double kappa = f.kappa();
  RandomField v(g);
  if (parts) {
    parts->inner = RandomField(g);
    parts->a = RandomField(g);
    parts->b = RandomField(g);
  }
  int start = 0;
  while (start < g.n_t() && slice_is_zero(h.slice(start))) ++start;

  std::vector<double> lam(n), src(n), tmp(n), ito(n), drift(n);
  for (int k = start; k < k_end; ++k) {
    auto uk = u.slice(k);
    auto uk1 = u.slice(k + 1);
    auto vk = v.slice(k);
    auto dw = path.increments.slice(k);
    const bool has_source = !slice_is_zero(h.slice(k));
    if (has_source) {
      cov.apply(h.slice(k), lam);
      for (std::size_t i = 0; i < n; ++i) src[i] = sigma.eval(uk[i]) * dt * lam[i];
    } else {
      std::fill(src.begin(), src.end(), 0.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
      ito[i] = sigma.deriv(uk[i]) * vk[i] * dw[i];
      tmp[i] = (1.0 + kappa * dt) * vk[i] + ito[i] + src[i];
    }
    s.apply_inplace(tmp, dt);
    auto vk1 = v.slice(k + 1);
    for (std::size_t i = 0; i < n; ++i) vk1[i] = tmp[i] / (1.0 - dt * (f.deriv(uk1[i]) - kappa));

    if (parts) {
      auto in_k = parts->inner.slice(k);
      auto a_k = parts->a.slice(k);
      auto b_k = parts->b.slice(k);
      for (std::size_t i = 0; i < n; ++i) {
        tmp[i] = in_k[i] + src[i];
        ito[i] += b_k[i];
        drift[i] = a_k[i] + kappa * dt * vk[i];
      }
      s.apply(tmp, dt, parts->inner.slice(k + 1));
      s.apply(ito, dt, parts->b.slice(k + 1));
      auto a_k1 = parts->a.slice(k + 1);
      s.apply(drift, dt, a_k1);
      for (std::size_t i = 0; i < n; ++i) a_k1[i] += dt * (f.deriv(uk1[i]) - kappa) * vk1[i];
    }
  }
  if (!v.all_finite()) throw NumericError("directional derivative produced non-finite values");
  return v;
}

}  // namespace

RandomField directional_derivative(const RandomField& u, const NoisePath& path, const CameronMartinElement& h,
                                   const ReactionFn& f, const Diffusion& sigma, NoiseCovariance& cov,
                                   HeatSemigroup& semigroup, DerivativeParts* parts) {
  return derivative_impl(u, path, h, f, sigma, cov, semigroup, parts, semigroup.grid().n_t());
}

RandomField solve_directional_derivative(const RandomField& u, const NoisePath& path, const MalliavinProbe& probe,
                                         const ReactionFn& f, const Diffusion& sigma, NoiseCovariance& cov,
                                         HeatSemigroup& semigroup) {
  return directional_derivative(u, path, probe.h, f, sigma, cov, semigroup);
}

DerivativeDecomposition decompose_derivative(const RandomField& u, const NoisePath& path, const MalliavinProbe& probe,
                                             const ReactionFn& f, const Diffusion& sigma, NoiseCovariance& cov,
                                             HeatSemigroup& semigroup) {
  DerivativeParts parts;
  const RandomField v = derivative_impl(u, path, probe.h, f, sigma, cov, semigroup, &parts, probe.k0);
  const auto i0 = static_cast<std::size_t>(probe.i0);
  DerivativeDecomposition d;
  d.total = v(probe.k0, i0);
  d.inner_recursive = parts.inner(probe.k0, i0);
  d.a_term = parts.a(probe.k0, i0);
  d.b_term = parts.b(probe.k0, i0);

  CameronMartinElement phi(semigroup.grid());
  for (int j = probe.k0 - probe.m_steps; j < probe.k0; ++j) {
    auto hj = probe.h.slice(j);
    auto uj = u.slice(j);
    auto pj = phi.slice(j);
    for (std::size_t i = 0; i < hj.size(); ++i) pj[i] = sigma.eval(uj[i]) * hj[i];
  }
  d.inner = ht_inner(phi, probe.h, cov);
  d.consistency = std::abs(d.total - (d.inner + d.a_term + d.b_term));
  if (d.consistency > kDecompositionTolerance * (1.0 + std::abs(d.total))) {
    std::ostringstream os;
    os << "derivative decomposition inconsistent: total " << d.total << " vs inner " << d.inner << " + A "
       << d.a_term << " + B " << d.b_term << " (defect " << d.consistency << ")";
    throw NumericError(os.str());
  }
  return d;
}

double cameron_martin_fd_oracle(const Model& model, const NoisePath& path, const MalliavinProbe& probe,
                                double epsilon, double base_value, NoiseCovariance& cov, HeatSemigroup& semigroup) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("cameron_martin_fd_oracle: epsilon must be positive");
  const SpaceTimeGrid& g = semigroup.grid();
  NoisePath shifted = path;
  std::vector<double> lam(static_cast<std::size_t>(g.n_x()));
  for (int j = 0; j < g.n_t(); ++j) {
    auto hj = probe.h.slice(j);
    if (slice_is_zero(hj)) continue;
    cov.apply(hj, lam);
    auto dw = shifted.increments.slice(j);
    for (std::size_t i = 0; i < lam.size(); ++i) dw[i] += epsilon * g.dt() * lam[i];
  }
  const RandomField ue = solve_direct(model.f, model.sigma, model.u0, shifted, semigroup);
  return (ue(probe.k0, static_cast<std::size_t>(probe.i0)) - base_value) / epsilon;
}

double cameron_martin_fd_oracle(const Model& model, const NoisePath& path, const MalliavinProbe& probe,
                                double epsilon, NoiseCovariance& cov, HeatSemigroup& semigroup) {
  const RandomField u = solve_direct(model.f, model.sigma, model.u0, path, semigroup);
  return cameron_martin_fd_oracle(model, path, probe, epsilon, u(probe.k0, static_cast<std::size_t>(probe.i0)), cov,
                                  semigroup);
}

// ---------------------------------------------------------------------------

namespace {
double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}
}  // namespace

PositivityStudy positivity_study(const Model& model, const PositivityOptions& opt) {
  const SpaceTimeGrid& full = model.grid;
  const int k0 = full.time_index(opt.t0);
  if (k0 < 1) throw std::invalid_argument("positivity_study: t0 must be a positive grid time");
  if (full.space_index(opt.x0) < 0) throw std::invalid_argument("positivity_study: x0 must be a grid node");
  if (opt.k_max < 1) throw std::invalid_argument("positivity_study: k_max must be >= 1");
  if (opt.n_paths < 1) throw std::invalid_argument("positivity_study: n_paths must be >= 1");
  // Only [0, t0] matters; sampling is sequential in time, so the first k0
  // slices coincide with those of the full-horizon path for the same seed.
  const SpaceTimeGrid grid = full.with_steps(k0);

  PositivityStudy study;
  study.alpha = model.sigma.alpha();
  std::vector<int> ks;
  {
    HeatSemigroup s(grid);
    NoiseCovariance cov(grid, model.noise);
    for (int k = 1; k <= opt.k_max; ++k) {
      PositivityRung r;
      r.k = k;
      r.delta = std::ldexp(opt.t0, -k);
      r.q_continuum = q_lambda(r.delta, model.noise);
      const double steps = r.delta / grid.dt();
      r.resolved = steps + 1e-9 >= opt.min_steps && std::abs(steps - std::round(steps)) < 1e-9;
      if (r.resolved) {
        r.q_lambda = grid_q_lambda(grid, cov, static_cast<int>(std::lround(steps)));
        ks.push_back(k);
        study.smallest_resolved_k = k;
      }
      study.rungs.push_back(r);
    }
  }
  if (ks.empty()) throw std::invalid_argument("positivity_study: no delta_k is resolved by the time grid");

  const std::size_t n_paths = static_cast<std::size_t>(opt.n_paths);
  std::vector<std::vector<PositivityRow>> per_path(n_paths);
  const int workers = resolve_threads(opt.threads, n_paths);
  struct Scratch {
    HeatSemigroup s;
    NoiseCovariance cov;
    std::vector<MalliavinProbe> probes;
  };
  std::vector<std::unique_ptr<Scratch>> scratch(static_cast<std::size_t>(workers));
  for (auto& sc : scratch) {
    sc = std::make_unique<Scratch>(Scratch{HeatSemigroup(grid), NoiseCovariance(grid, model.noise), {}});
    for (int k : ks) sc->probes.push_back(make_probe(grid, opt.t0, opt.x0, study.rungs[k - 1].delta, sc->s));
  }

  parallel_for(n_paths, opt.threads, [&](int w, std::size_t p) {
    Scratch& sc = *scratch[static_cast<std::size_t>(w)];
    const std::uint64_t seed = derive_seed(opt.base_seed, p);
    const NoisePath path = sample_noise(grid, sc.cov, seed);
    const RandomField u = solve_direct(model.f, model.sigma, model.u0, path, sc.s);
    auto& rows = per_path[p];
    for (std::size_t r = 0; r < ks.size(); ++r) {
      const auto& rung = study.rungs[static_cast<std::size_t>(ks[r] - 1)];
      const auto d = decompose_derivative(u, path, sc.probes[r], model.f, model.sigma, sc.cov, sc.s);
      PositivityRow row;
      row.path_id = static_cast<int>(p);
      row.k = ks[r];
      row.delta = rung.delta;
      row.q_lambda = rung.q_lambda;
      row.inner = d.inner;
      row.a_term = d.a_term;
      row.b_term = d.b_term;
      row.total = d.total;
      row.positive = d.total > 0.0;
      rows.push_back(row);
    }
  });

  for (auto& rows : per_path)
    for (auto& r : rows) study.rows.push_back(r);
  for (auto& rung : study.rungs) {
    if (!rung.resolved) continue;
    std::vector<double> ratios;
    double min_inner = std::numeric_limits<double>::infinity();
    int positive = 0;
    int count = 0;
    for (const auto& r : study.rows) {
      if (r.k != rung.k) continue;
      ratios.push_back((std::abs(r.a_term) + std::abs(r.b_term)) / r.q_lambda);
      min_inner = std::min(min_inner, r.inner / r.q_lambda);
      positive += r.positive ? 1 : 0;
      ++count;
    }
    rung.median_error_ratio = median(ratios);
    rung.min_inner_ratio = min_inner;
    rung.fraction_positive = static_cast<double>(positive) / count;
  }
  study.fraction_positive_smallest = study.rungs[static_cast<std::size_t>(study.smallest_resolved_k - 1)].fraction_positive;
  return study;
}

void write_positivity_csv(const std::filesystem::path& file, const PositivityStudy& study) {
  std::ofstream os(file);
  if (!os) throw IoError("cannot open '" + file.string() + "' for writing");
  os << "path_id,k,delta,q_lambda,inner,a_term,b_term,total,positive_flag\n";
  char buf[256];
  for (const auto& r : study.rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", r.path_id, r.k, r.delta,
                  r.q_lambda, r.inner, r.a_term, r.b_term, r.total, r.positive ? 1 : 0);
    os << buf;
  }
  if (!os) throw IoError("write to '" + file.string() + "' failed");
}

}  // namespace spdelab
