#include "spdelab/density.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace spdelab {

namespace {
std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

std::string ensemble_fingerprint(const Model& m, const EnsembleOptions& o) {
  std::ostringstream os;
  const auto& g = m.grid;
  os << "T=" << num(g.t_max()) << ";n_t=" << g.n_t() << ";L=" << num(g.half_width()) << ";n_x=" << g.n_x()
     << ";dim=" << g.dim() << ";boundary=" << to_string(g.boundary());
  os << ";noise=" << to_string(m.noise.kind()) << ";eta=" << num(m.noise.eta());
  if (m.noise.kind() == CovarianceKind::gaussian) os << ";length=" << num(m.noise.length());
  if (m.noise.kind() == CovarianceKind::riesz) os << ";beta=" << num(m.noise.beta());
  os << ";reaction=" << m.f.name() << ";kappa=" << num(m.f.kappa());
  os << ";sigma=" << m.sigma.name() << ";sigma_level=" << num(m.sigma.level())
     << ";sigma_amplitude=" << num(m.sigma.amplitude());
  if (m.u0.kind == InitialCondition::Kind::constant)
    os << ";u0=constant;u0_value=" << num(m.u0.value);
  else
    os << ";u0=bump;u0_amplitude=" << num(m.u0.amplitude) << ";u0_variance=" << num(m.u0.variance)
       << ";u0_center=" << num(m.u0.center);
  os << ";t0=" << num(o.t0) << ";x0=" << num(o.x0) << ";n_paths=" << o.n_paths << ";base_seed=" << o.base_seed;
  return os.str();
}

Ensemble run_ensemble(const Model& model, const EnsembleOptions& opt) {
  if (opt.n_paths < 1) throw std::invalid_argument("run_ensemble: n_paths must be >= 1");
  const int k0 = model.grid.time_index(opt.t0);
  const int i0 = model.grid.space_index(opt.x0);
  if (k0 < 0) throw std::invalid_argument("run_ensemble: t0 must be a grid time");
  if (i0 < 0) throw std::invalid_argument("run_ensemble: x0 must be a grid node");
  const SpaceTimeGrid grid = model.grid.with_steps(std::max(k0, 1));

  Ensemble e;
  e.fingerprint = ensemble_fingerprint(model, opt);
  const auto n = static_cast<std::size_t>(opt.n_paths);
  e.samples.resize(n);
  e.seeds.resize(n);
  const int workers = resolve_threads(opt.threads, n);
  struct Scratch {
    HeatSemigroup s;
    NoiseCovariance cov;
  };
  std::vector<std::unique_ptr<Scratch>> scratch(static_cast<std::size_t>(workers));
  for (auto& sc : scratch) sc = std::make_unique<Scratch>(Scratch{HeatSemigroup(grid), NoiseCovariance(grid, model.noise)});

  parallel_for(n, opt.threads, [&](int w, std::size_t p) {
    Scratch& sc = *scratch[static_cast<std::size_t>(w)];
    const std::uint64_t seed = derive_seed(opt.base_seed, p);
    e.seeds[p] = seed;
    try {
      const NoisePath path = sample_noise(grid, sc.cov, seed);
      const RandomField u = solve_direct(model.f, model.sigma, model.u0, path, sc.s);
      e.samples[p] = u(k0, static_cast<std::size_t>(i0));
    } catch (const std::exception& ex) {
      throw NumericError("ensemble path " + std::to_string(p) + " (seed " + std::to_string(seed) +
                         ") failed: " + ex.what());
    }
  });
  return e;
}

void write_ensemble_csv(const std::filesystem::path& file, const Ensemble& e) {
  std::ofstream os(file);
  if (!os) throw IoError("cannot open '" + file.string() + "' for writing");
  os << "# fingerprint: " << e.fingerprint << "\n";
  os << "path_id,seed,value\n";
  char buf[96];
  for (std::size_t i = 0; i < e.samples.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%llu,%.17g\n", i, static_cast<unsigned long long>(e.seeds[i]), e.samples[i]);
    os << buf;
  }
  if (!os) throw IoError("write to '" + file.string() + "' failed");
}

Ensemble read_ensemble_csv(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw IoError("cannot open '" + file.string() + "'");
  Ensemble e;
  std::string line;
  const std::string tag = "# fingerprint: ";
  if (!std::getline(is, line) || line.rfind(tag, 0) != 0) throw IoError("ensemble file lacks a fingerprint line");
  e.fingerprint = line.substr(tag.size());
  if (!std::getline(is, line) || line != "path_id,seed,value") throw IoError("ensemble file has an unexpected header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id, seed, value;
    if (!std::getline(ls, id, ',') || !std::getline(ls, seed, ',') || !std::getline(ls, value))
      throw IoError("malformed ensemble row: " + line);
    try {
      e.seeds.push_back(std::stoull(seed));
      e.samples.push_back(std::stod(value));
    } catch (const std::exception&) {
      throw IoError("malformed ensemble row: " + line);
    }
  }
  return e;
}

double silverman_bandwidth(std::span<const double> samples) {
  const auto n = samples.size();
  if (n < 2) throw std::invalid_argument("silverman_bandwidth: need at least 2 samples");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

KdeCurve kde(std::span<const double> samples, double bandwidth) {
  if (samples.size() < 100) throw std::invalid_argument("kde: need at least 100 samples");
  KdeCurve c;
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it, hi = *hi_it;
  if (lo == hi) {
    c.atomic = true;
    c.atom_value = lo;
    c.mass = 1.0;
    return c;
  }
  const double h = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(samples);
  if (!(h > 0.0)) throw NumericError("kde: bandwidth is not positive");
  c.bandwidth = h;
  const double a = lo - 5.0 * h;
  const double b = hi + 5.0 * h;
  const auto points = static_cast<std::size_t>(std::max(512.0, std::ceil((b - a) / (0.25 * h)) + 1.0));
  const double step = (b - a) / static_cast<double>(points - 1);
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  const double cutoff = 9.0 * h;  // exp(-40.5) is below double resolution relative to the peak
  c.values.resize(points);
  c.density.resize(points);
  for (std::size_t j = 0; j < points; ++j) {
    const double x = a + static_cast<double>(j) * step;
    c.values[j] = x;
    auto first = std::lower_bound(sorted.begin(), sorted.end(), x - cutoff);
    auto last = std::upper_bound(first, sorted.end(), x + cutoff);
    double acc = 0.0;
    for (auto it = first; it != last; ++it) {
      const double z = (x - *it) / h;
      acc += std::exp(-0.5 * z * z);
    }
    c.density[j] = acc * norm;
  }
  double mass = 0.0;
  for (std::size_t j = 1; j < points; ++j) mass += 0.5 * step * (c.density[j] + c.density[j - 1]);
  c.mass = mass;
  return c;
}

void write_kde_csv(const std::filesystem::path& file, const KdeCurve& curve) {
  std::ofstream os(file);
  if (!os) throw IoError("cannot open '" + file.string() + "' for writing");
  os << "value,density\n";
  char buf[80];
  if (curve.atomic) {
    std::snprintf(buf, sizeof buf, "%.17g,inf\n", curve.atom_value);
    os << buf;
  }
  for (std::size_t i = 0; i < curve.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", curve.values[i], curve.density[i]);
    os << buf;
  }
  if (!os) throw IoError("write to '" + file.string() + "' failed");
}

double atom_test(std::span<const double> samples, double resolution) {
  if (samples.size() < 1000) throw std::invalid_argument("atom_test: need at least 1000 samples");
  if (!(resolution > 0.0)) throw std::invalid_argument("atom_test: resolution must be positive");
  double best = 1.0;
  for (double offset : {0.0, 0.5 * resolution}) {
    std::unordered_map<long long, std::size_t> bins;
    std::size_t top = 0;
    for (double v : samples) {
      const auto key = static_cast<long long>(std::floor((v - offset) / resolution));
      top = std::max(top, ++bins[key]);
    }
    best = std::min(best, static_cast<double>(top) / static_cast<double>(samples.size()));
  }
  return best;
}

}  // namespace spdelab
