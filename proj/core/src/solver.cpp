#include "spdelab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace spdelab {

Diffusion Diffusion::constant(double level) {
  if (!std::isfinite(level) || level < 0.0) throw std::invalid_argument("sigma: constant level must be >= 0");
  return Diffusion(level == 0.0 ? "zero" : "constant", Kind::constant, level, 0.0);
}

Diffusion Diffusion::sine(double level, double amplitude) {
  if (!(level - std::abs(amplitude) > 0.0))
    throw std::invalid_argument("sigma: sine coefficient needs level > |amplitude| for a positive lower bound");
  return Diffusion("sine", Kind::sine, level, amplitude);
}

Diffusion Diffusion::sqrt_quadratic() { return Diffusion("sqrt", Kind::sqrt_quadratic, 1.0, 0.0); }

Diffusion Diffusion::by_name(const std::string& name, double level, double amplitude) {
  if (name == "constant" || name == "additive") return constant(level);
  if (name == "sine") return sine(level, amplitude);
  if (name == "sqrt") return sqrt_quadratic();
  if (name == "zero") return constant(0.0);
  throw std::invalid_argument("unknown sigma '" + name + "'");
}

double Diffusion::alpha() const {
  switch (kind_) {
    case Kind::constant: return level_;
    case Kind::sine: return level_ - std::abs(amplitude_);
    case Kind::sqrt_quadratic: return 1.0;
  }
  return 0.0;
}

double Diffusion::eval(double u) const {
  switch (kind_) {
    case Kind::constant: return level_;
    case Kind::sine: return level_ + amplitude_ * std::sin(u);
    case Kind::sqrt_quadratic: return std::sqrt(1.0 + u * u);
  }
  return 0.0;
}

double Diffusion::deriv(double u) const {
  switch (kind_) {
    case Kind::constant: return 0.0;
    case Kind::sine: return amplitude_ * std::cos(u);
    case Kind::sqrt_quadratic: return u / std::sqrt(1.0 + u * u);
  }
  return 0.0;
}

InitialCondition InitialCondition::constant(double c) {
  InitialCondition ic;
  ic.kind = Kind::constant;
  ic.value = c;
  return ic;
}

InitialCondition InitialCondition::gaussian_bump(double amplitude, double variance, double center) {
  if (!(variance > 0.0)) throw std::invalid_argument("initial condition: bump variance must be positive");
  InitialCondition ic;
  ic.kind = Kind::gaussian_bump;
  ic.amplitude = amplitude;
  ic.variance = variance;
  ic.center = center;
  return ic;
}

double InitialCondition::eval(double x) const {
  if (kind == Kind::constant) return value;
  const double d = x - center;
  return amplitude * std::exp(-d * d / (2.0 * variance));
}

double InitialCondition::evolved(double t, double x) const {
  if (kind == Kind::constant) return value;
  const double v = variance + t;
  const double d = x - center;
  return amplitude * std::sqrt(variance / v) * std::exp(-d * d / (2.0 * v));
}

RandomField initial_evolution(const InitialCondition& u0, HeatSemigroup& semigroup) {
  const SpaceTimeGrid& g = semigroup.grid();
  RandomField out(g);
  auto s0 = out.slice(0);
  for (int i = 0; i < g.n_x(); ++i) s0[static_cast<std::size_t>(i)] = u0.eval(g.x(i));
  if (u0.kind == InitialCondition::Kind::constant && g.boundary() == Boundary::periodic) {
    for (int k = 1; k <= g.n_t(); ++k) std::copy(s0.begin(), s0.end(), out.slice(k).begin());
    return out;
  }
  for (int k = 1; k <= g.n_t(); ++k) semigroup.apply(s0, g.t(k), out.slice(k));
  return out;
}

namespace {
void check_path(const NoisePath& path, const SpaceTimeGrid& grid, const char* what) {
  if (!(path.grid == grid)) throw std::invalid_argument(std::string(what) + ": noise path grid differs");
}
}  // namespace

RandomField stochastic_convolution(const RandomField& integrand, const NoisePath& path, HeatSemigroup& semigroup) {
  const SpaceTimeGrid& g = semigroup.grid();
  check_path(path, g, "stochastic_convolution");
  if (!(integrand.grid() == g) || integrand.n_slices() != g.n_t() + 1)
    throw std::invalid_argument("stochastic_convolution: integrand does not match the grid");
  RandomField z(g);
  const auto n = static_cast<std::size_t>(g.n_x());
  std::vector<double> tmp(n);
  for (int k = 0; k < g.n_t(); ++k) {
    auto zk = z.slice(k);
    auto x = integrand.slice(k);
    auto dw = path.increments.slice(k);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = zk[i] + x[i] * dw[i];
    semigroup.apply(tmp, g.dt(), z.slice(k + 1));
  }
  return z;
}

std::vector<double> PicardResult::deltas() const {
  std::vector<double> d;
  for (const auto& s : trace)
    if (s.n >= 1) d.push_back(s.delta);
  return d;
}

namespace {
RandomField sigma_of(const RandomField& u, const Diffusion& sigma) {
  RandomField out(u.grid());
  auto in = u.values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = sigma.eval(in[i]);
  return out;
}

void add_into(RandomField& a, const RandomField& b) {
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
}
}  // namespace

PicardResult picard_solve(const ReactionFn& f, const Diffusion& sigma, const InitialCondition& u0,
                          const NoisePath& path, HeatSemigroup& semigroup, const PicardOptions& options) {
  const SpaceTimeGrid& g = semigroup.grid();
  check_path(path, g, "picard_solve");
  check_weight(options.weight, f);
  if (options.n_max < 1) throw std::invalid_argument("picard_solve: n_max must be >= 1");
  const RandomField base = initial_evolution(u0, semigroup);

  PicardResult res;
  auto first = apply_M(base, f, semigroup);
  res.u = std::move(first.solution);
  res.z = RandomField(g);
  {
    PicardState s0;
    s0.n = 0;
    s0.map_residual = first.residual;
    if (options.keep_iterates) {
      s0.u = res.u;
      s0.z = res.z;
    }
    res.trace.push_back(std::move(s0));
  }
  std::vector<double> deltas;
  for (int n = 1; n <= options.n_max; ++n) {
    RandomField z = sigma.is_zero() ? RandomField(g) : stochastic_convolution(sigma_of(res.u, sigma), path, semigroup);
    RandomField input = base;
    add_into(input, z);
    auto rep = apply_M(input, f, semigroup);
    const double delta = weighted_distance(rep.solution, res.u, options.weight);
    deltas.push_back(delta);
    res.u = std::move(rep.solution);
    res.z = std::move(z);
    PicardState st;
    st.n = n;
    st.delta = delta;
    st.map_residual = rep.residual;
    if (options.keep_iterates) {
      st.u = res.u;
      st.z = res.z;
    }
    res.trace.push_back(std::move(st));
    if (delta < options.stop_tol && n >= options.min_iterations) {
      res.converged = true;
      return res;
    }
  }
  std::ostringstream os;
  os << "Picard iteration did not reach stop_tol " << options.stop_tol << " within " << options.n_max
     << " iterations; deltas:";
  for (double d : deltas) os << ' ' << d;
  throw PicardError(os.str(), deltas);
}

PicardResult picard_solve(const ReactionFn& f, const Diffusion& sigma, const InitialCondition& u0,
                          const NoisePath& path, const PicardOptions& options) {
  HeatSemigroup s(path.grid);
  return picard_solve(f, sigma, u0, path, s, options);
}

RandomField solve_direct(const ReactionFn& f, const Diffusion& sigma, const InitialCondition& u0,
                         const NoisePath& path, HeatSemigroup& semigroup) {
  const SpaceTimeGrid& g = semigroup.grid();
  check_path(path, g, "solve_direct");
  const RandomField base = initial_evolution(u0, semigroup);
  const auto n = static_cast<std::size_t>(g.n_x());
  const double dt = g.dt();
  const double kappa = f.kappa();
  const double growth = 1.0 + kappa * dt;
  RandomField u(g);
  std::copy(base.slice(0).begin(), base.slice(0).end(), u.slice(0).begin());
  // zc = U0 + Z at the current node; the arithmetic mirrors apply_M on the
  // input U0 + I[sigma(u)] so the sweep lands on the Picard fixed point.
  std::vector<double> zstoch(n, 0.0), zc(base.slice(0).begin(), base.slice(0).end()), znext(n), tmp(n);
  for (int k = 0; k < g.n_t(); ++k) {
    auto uk = u.slice(k);
    auto dw = path.increments.slice(k);
    for (std::size_t i = 0; i < n; ++i) zstoch[i] += sigma.eval(uk[i]) * dw[i];
    semigroup.apply_inplace(zstoch, dt);
    auto b1 = base.slice(k + 1);
    for (std::size_t i = 0; i < n; ++i) znext[i] = b1[i] + zstoch[i];

    if (kappa == 0.0) {
      for (std::size_t i = 0; i < n; ++i) tmp[i] = uk[i] - zc[i];
    } else {
      for (std::size_t i = 0; i < n; ++i) tmp[i] = growth * uk[i] - zc[i];
    }
    semigroup.apply_inplace(tmp, dt);
    auto uk1 = u.slice(k + 1);
    for (std::size_t i = 0; i < n; ++i) uk1[i] = resolvent(f, dt, znext[i] + tmp[i]);
    std::swap(zc, znext);
  }
  if (!u.all_finite()) throw NumericError("solve_direct produced non-finite values");
  return u;
}

RandomField mild_defect(const RandomField& u, const ReactionFn& f, const Diffusion& sigma,
                        const InitialCondition& u0, const NoisePath& path, HeatSemigroup& semigroup) {
  RandomField input = initial_evolution(u0, semigroup);
  if (!sigma.is_zero()) add_into(input, stochastic_convolution(sigma_of(u, sigma), path, semigroup));
  auto rep = apply_M(input, f, semigroup);
  RandomField d(u.grid());
  auto a = u.values();
  auto b = rep.solution.values();
  auto o = d.values();
  for (std::size_t i = 0; i < a.size(); ++i) o[i] = a[i] - b[i];
  return d;
}

ConvergenceReport convergence_report(const std::vector<PicardState>& trace, int burn_in) {
  ConvergenceReport r;
  for (const auto& s : trace) {
    if (s.n < 1) continue;
    r.n.push_back(s.n);
    r.deltas.push_back(s.delta);
  }
  if (r.n.size() < 3) throw std::invalid_argument("convergence_report: needs at least 3 iterations");

  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  int m = 0;
  for (std::size_t i = 0; i < r.n.size(); ++i) {
    if (!(r.deltas[i] > 0.0)) continue;
    const double x = r.n[i];
    const double y = std::log(r.deltas[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    ++m;
  }
  if (m < 2) {
    // Deltas vanished right away: the iteration hit its fixed point exactly.
    r.rate = 0.0;
    r.note = "deltas reached zero";
  } else {
    const double vx = sxx - sx * sx / m;
    const double vy = syy - sy * sy / m;
    const double cxy = sxy - sx * sy / m;
    const double slope = cxy / vx;
    r.rate = std::exp(slope);
    r.r_squared = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
    r.geometric = r.rate < 1.0 && r.r_squared >= 0.8;
    if (!r.geometric) r.note = "decay is not geometric";
  }
  for (std::size_t i = 1; i < r.n.size(); ++i) {
    if (r.n[i] <= burn_in) continue;
    if (r.deltas[i] > r.deltas[i - 1]) r.monotone_tail = false;
  }
  return r;
}

void write_trace_csv(const std::filesystem::path& file, const std::vector<PicardState>& trace) {
  std::ofstream os(file);
  if (!os) throw IoError("cannot open '" + file.string() + "' for writing");
  os << "n,delta,rate\n";
  double prev = std::numeric_limits<double>::quiet_NaN();
  char buf[96];
  for (const auto& s : trace) {
    if (s.n < 1) continue;
    const double rate = s.n == 1 ? std::numeric_limits<double>::quiet_NaN() : s.delta / prev;
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", s.n, s.delta, rate);
    os << buf;
    prev = s.delta;
  }
  if (!os) throw IoError("write to '" + file.string() + "' failed");
}

}  // namespace spdelab
