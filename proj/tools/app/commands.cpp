#include "app/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>
#include <type_traits>

#include "app/manifest.hpp"
#include "app/plots.hpp"
#include "spdelab/density.hpp"
#include "spdelab/det_map.hpp"
#include "spdelab/errors.hpp"
#include "spdelab/malliavin.hpp"
#include "spdelab/version.hpp"

namespace spdelab::app {

namespace {

const std::vector<double> kYosidaLambdas{1.0, 0.5, 0.1, 0.01};
const std::vector<double> kAtomResolutions{0.1, 0.05, 0.025};
constexpr int kFdPaths = 20;
constexpr int kLipschitzPairs = 50;

std::string cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
std::string show(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}
std::string cell(bool v) { return v ? "1" : "0"; }
std::string cell(const std::string& v) { return v; }
std::string cell(const char* v) { return v; }
template <class T>
  requires std::is_integral_v<T>
std::string cell(T v) { return std::to_string(v); }

class Csv {
 public:
  Csv(const std::filesystem::path& file, const std::string& header) : file_(file), os_(file) {
    if (!os_) throw IoError("cannot open '" + file.string() + "' for writing");
    os_ << header << "\n";
  }
  ~Csv() = default;

  template <class... T>
  void row(const T&... values) {
    std::string line;
    ((line += cell(values), line += ','), ...);
    line.back() = '\n';
    os_ << line;
  }
  void close() {
    os_.close();
    if (!os_) throw IoError("write to '" + file_.string() + "' failed");
  }

 private:
  std::filesystem::path file_;
  std::ofstream os_;
};

struct Scratch {
  HeatSemigroup semigroup;
  NoiseCovariance cov;
  Scratch(const SpaceTimeGrid& grid, const CovarianceSpec& spec) : semigroup(grid), cov(grid, spec) {}
};

std::vector<std::unique_ptr<Scratch>> make_scratch(const SpaceTimeGrid& grid, const CovarianceSpec& spec, int threads,
                                                   std::size_t n) {
  std::vector<std::unique_ptr<Scratch>> s(static_cast<std::size_t>(resolve_threads(threads, n)));
  for (auto& p : s) p = std::make_unique<Scratch>(grid, spec);
  return s;
}

PicardOptions picard_options(const ExperimentConfig& c) {
  PicardOptions o;
  o.weight = WeightedNorm{c.weight.theta, c.weight.centers.front()};
  o.stop_tol = c.picard.stop_tol;
  o.n_max = c.picard.n_max;
  return o;
}

struct Context {
  const ExperimentConfig& config;
  Model model;
  RunOutputs& outputs;
  bool plots;
  std::ostream& out;
};

void cmd_simulate(Context& cx) {
  const auto& c = cx.config;
  const auto& m = cx.model;
  Scratch sc(m.grid, m.noise);
  const std::uint64_t seed = derive_seed(c.run.base_seed, 0);
  const NoisePath path = sample_noise(m.grid, sc.cov, seed);
  const PicardOptions po = picard_options(c);
  const PicardResult res = picard_solve(m.f, m.sigma, m.u0, path, sc.semigroup, po);
  const double defect = weighted_norm(mild_defect(res.u, m.f, m.sigma, m.u0, path, sc.semigroup), po.weight);

  write_slices(cx.outputs.add("fields/noise.bin"), path.increments, seed);
  write_slices(cx.outputs.add("fields/u.bin"), res.u, seed);
  write_trace_csv(cx.outputs.add("tables/picard_trace.csv"), res.trace);
  Csv slice(cx.outputs.add("tables/final_slice.csv"), "x,u_initial,u_final");
  const int nt = m.grid.n_t();
  PlotSeries s0{"t = 0", {}, {}}, s1{"t = T", {}, {}};
  for (int i = 0; i < m.grid.n_x(); ++i) {
    const auto ii = static_cast<std::size_t>(i);
    slice.row(m.grid.x(i), res.u(0, ii), res.u(nt, ii));
    s0.x.push_back(m.grid.x(i)), s0.y.push_back(res.u(0, ii));
    s1.x.push_back(m.grid.x(i)), s1.y.push_back(res.u(nt, ii));
  }
  slice.close();
  if (cx.plots) {
    write_line_plot(cx.outputs.add("plots/final_slice.svg"), "solution slices", "x", "u", {s0, s1});
    PlotSeries tr{"delta_n", {}, {}};
    for (const auto& st : res.trace) tr.x.push_back(st.n), tr.y.push_back(st.delta);
    write_line_plot(cx.outputs.add("plots/picard_trace.svg"), "Picard deltas", "n", "delta", {tr}, true);
  }
  cx.out << "simulate: seed " << seed << ", " << res.trace.size() << " Picard iterations, final delta "
         << show(res.trace.back().delta) << ", mild defect " << show(defect) << "\n";
}

void cmd_picard_study(Context& cx) {
  const auto& c = cx.config;
  const auto& m = cx.model;
  const auto n = static_cast<std::size_t>(c.run.n_paths);
  const PicardOptions po = picard_options(c);
  struct PathResult {
    std::uint64_t seed = 0;
    std::vector<double> deltas;
    ConvergenceReport report;
    bool has_report = false;
    double defect = 0.0;
  };
  std::vector<PathResult> results(n);
  auto scratch = make_scratch(m.grid, m.noise, c.run.threads, n);
  parallel_for(n, c.run.threads, [&](int w, std::size_t p) {
    Scratch& sc = *scratch[static_cast<std::size_t>(w)];
    PathResult& r = results[p];
    r.seed = derive_seed(c.run.base_seed, p);
    const NoisePath path = sample_noise(m.grid, sc.cov, r.seed);
    const PicardResult res = picard_solve(m.f, m.sigma, m.u0, path, sc.semigroup, po);
    r.deltas = res.deltas();
    if (res.trace.size() >= 3) {
      r.report = convergence_report(res.trace);
      r.has_report = true;
    }
    r.defect = weighted_norm(mild_defect(res.u, m.f, m.sigma, m.u0, path, sc.semigroup), po.weight);
  });

  const double nan = std::numeric_limits<double>::quiet_NaN();
  Csv paths(cx.outputs.add("tables/picard_paths.csv"),
            "path_id,seed,iterations,final_delta,rate,r_squared,monotone_tail,mild_defect");
  Csv deltas(cx.outputs.add("tables/picard_deltas.csv"), "path_id,n,delta");
  std::size_t monotone = 0;
  double worst_rate = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const auto& r = results[p];
    const bool mono = r.has_report ? r.report.monotone_tail : true;
    monotone += mono ? 1 : 0;
    if (r.has_report) worst_rate = std::max(worst_rate, r.report.rate);
    paths.row(p, r.seed, r.deltas.size(), r.deltas.back(), r.has_report ? r.report.rate : nan,
              r.has_report ? r.report.r_squared : nan, mono, r.defect);
    for (std::size_t k = 0; k < r.deltas.size(); ++k) deltas.row(p, k + 1, r.deltas[k]);
  }
  paths.close();
  deltas.close();

  const int pairs = std::min(c.run.n_paths, kLipschitzPairs);
  const LipschitzEstimate lip =
      estimate_lipschitz_M(m.f, m.grid, c.weight.theta, c.weight.centers, pairs, c.run.base_seed);
  const double bound = frozen_lipschitz_bound(c.weight.theta, m.f.kappa(), m.grid.t_max());
  Csv lt(cx.outputs.add("tables/lipschitz.csv"), "center,max_ratio,raw_max_ratio,frozen_bound");
  for (std::size_t i = 0; i < lip.centers.size(); ++i) lt.row(lip.centers[i], lip.max_ratio[i], lip.raw_max_ratio[i], bound);
  lt.close();

  if (cx.plots) {
    std::vector<PlotSeries> series;
    for (std::size_t p = 0; p < std::min<std::size_t>(n, 6); ++p) {
      PlotSeries s{"path " + std::to_string(p), {}, {}};
      for (std::size_t k = 0; k < results[p].deltas.size(); ++k)
        s.x.push_back(static_cast<double>(k + 1)), s.y.push_back(results[p].deltas[k]);
      series.push_back(std::move(s));
    }
    write_line_plot(cx.outputs.add("plots/picard_deltas.svg"), "Picard deltas", "n", "delta", series, true);
  }
  cx.out << "picard-study: " << n << " paths, monotone tails " << monotone << "/" << n << ", worst rate "
         << show(worst_rate) << "; Lipschitz max ratio " << show(lip.overall_max) << " (frozen bound " << show(bound)
         << ", center spread " << show(lip.center_spread) << ")\n";
}

void cmd_yosida_study(Context& cx) {
  const auto& c = cx.config;
  const ReactionFn& f = cx.model.f;
  Csv gap(cx.outputs.add("tables/yosida_gap.csv"), "lambda,u,phi_lambda,phi,gap");
  const Decomposition dec = decompose(f);
  constexpr int kPoints = 241;
  std::vector<PlotSeries> series;
  for (double lam : kYosidaLambdas) {
    PlotSeries s{"lambda = " + cell(lam), {}, {}};
    for (int i = 0; i < kPoints; ++i) {
      const double u = -3.0 + 6.0 * i / (kPoints - 1);
      const double pl = yosida_phi(f, lam, u);
      const double p = dec.phi(u);
      gap.row(lam, u, pl, p, std::abs(pl - p));
      s.x.push_back(u), s.y.push_back(std::abs(pl - p));
    }
    series.push_back(std::move(s));
  }
  gap.close();
  const YosidaSuiteReport rep = yosida_suite(f, kYosidaLambdas, 100000, c.run.base_seed);
  Csv checks(cx.outputs.add("tables/yosida_checks.csv"), "check,evaluated,violations,worst_excess,worst_u,worst_lambda");
  for (const auto& ch : rep.checks)
    checks.row(ch.name, ch.evaluated, ch.violations, ch.worst_excess, ch.worst_u, ch.worst_lambda);
  checks.close();
  if (cx.plots)
    write_line_plot(cx.outputs.add("plots/yosida_gap.svg"), "|phi_lambda - phi|", "u", "gap", series, true);
  cx.out << "yosida-study: reaction " << f.name() << "\n";
  for (const auto& ch : rep.checks)
    cx.out << "  " << ch.name << ": " << ch.violations << "/" << ch.evaluated << " violations\n";
}

void cmd_malliavin(Context& cx) {
  const auto& c = cx.config;
  const auto& m = cx.model;
  PositivityOptions po;
  po.t0 = c.probe.t0;
  po.x0 = c.probe.x0;
  po.k_max = c.probe.k_max;
  po.n_paths = c.run.n_paths;
  po.base_seed = c.run.base_seed;
  po.threads = c.run.threads;
  const PositivityStudy st = positivity_study(m, po);
  write_positivity_csv(cx.outputs.add("tables/positivity.csv"), st);
  Csv rungs(cx.outputs.add("tables/positivity_rungs.csv"),
            "k,delta,resolved,q_lambda,q_continuum,min_inner_ratio,median_error_ratio,fraction_positive");
  for (const auto& r : st.rungs)
    rungs.row(r.k, r.delta, r.resolved, r.q_lambda, r.q_continuum, r.min_inner_ratio, r.median_error_ratio,
              r.fraction_positive);
  rungs.close();

  // Linearized derivative against the Cameron-Martin finite difference.
  const int k0 = m.grid.time_index(c.probe.t0);
  const SpaceTimeGrid grid = m.grid.with_steps(k0);
  const auto n_fd = static_cast<std::size_t>(std::min(c.run.n_paths, kFdPaths));
  struct FdRow {
    std::uint64_t seed;
    double linearized, fd;
  };
  std::vector<FdRow> fd(n_fd);
  auto scratch = make_scratch(grid, m.noise, c.run.threads, n_fd);
  Model local = m;
  local.grid = grid;
  const int i0 = grid.space_index(c.probe.x0);
  parallel_for(n_fd, c.run.threads, [&](int w, std::size_t p) {
    Scratch& sc = *scratch[static_cast<std::size_t>(w)];
    const MalliavinProbe probe = make_probe(grid, c.probe.t0, c.probe.x0, c.probe.delta, sc.semigroup);
    const std::uint64_t seed = derive_seed(c.run.base_seed, p);
    const NoisePath path = sample_noise(grid, sc.cov, seed);
    const RandomField u = solve_direct(m.f, m.sigma, m.u0, path, sc.semigroup);
    const RandomField v = solve_directional_derivative(u, path, probe, m.f, m.sigma, sc.cov, sc.semigroup);
    const double base = u(k0, static_cast<std::size_t>(i0));
    fd[p] = {seed, v(k0, static_cast<std::size_t>(i0)),
             cameron_martin_fd_oracle(local, path, probe, c.probe.epsilon, base, sc.cov, sc.semigroup)};
  });
  Csv ft(cx.outputs.add("tables/fd_oracle.csv"), "path_id,seed,delta,epsilon,linearized,finite_difference,rel_error");
  double worst = 0.0;
  for (std::size_t p = 0; p < n_fd; ++p) {
    const double rel = std::abs(fd[p].linearized - fd[p].fd) / (std::abs(fd[p].linearized) + 1e-12);
    worst = std::max(worst, rel);
    ft.row(p, fd[p].seed, c.probe.delta, c.probe.epsilon, fd[p].linearized, fd[p].fd, rel);
  }
  ft.close();

  if (cx.plots) {
    PlotSeries med{"median (|A|+|B|)/Q", {}, {}}, inner{"min inner/Q", {}, {}};
    for (const auto& r : st.rungs) {
      if (!r.resolved) continue;
      med.x.push_back(r.k), med.y.push_back(r.median_error_ratio);
      inner.x.push_back(r.k), inner.y.push_back(r.min_inner_ratio);
    }
    write_line_plot(cx.outputs.add("plots/positivity.svg"), "positivity ratios", "k", "ratio", {med, inner}, true);
  }
  cx.out << "malliavin: " << c.run.n_paths << " paths, smallest resolved k " << st.smallest_resolved_k
         << ", fraction positive " << show(st.fraction_positive_smallest) << "; FD oracle worst relative gap "
         << show(worst) << " over " << n_fd << " paths\n";
  for (const auto& r : st.rungs)
    cx.out << "  k " << r.k << (r.resolved ? "" : " (unresolved)") << ": min inner/Q " << show(r.min_inner_ratio)
           << ", median (|A|+|B|)/Q " << show(r.median_error_ratio) << "\n";
}

void cmd_density(Context& cx) {
  const auto& c = cx.config;
  const auto& m = cx.model;
  EnsembleOptions eo;
  eo.t0 = c.probe.t0;
  eo.x0 = c.probe.x0;
  eo.n_paths = c.run.n_paths;
  eo.base_seed = c.run.base_seed;
  eo.threads = c.run.threads;
  const Ensemble e = run_ensemble(m, eo);
  write_ensemble_csv(cx.outputs.add("tables/ensemble.csv"), e);

  const auto n = e.samples.size();
  double mean = 0.0, var = 0.0;
  for (double v : e.samples) mean += v;
  mean /= static_cast<double>(n);
  for (double v : e.samples) var += (v - mean) * (v - mean);
  var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;

  Csv summary(cx.outputs.add("tables/density_summary.csv"), "quantity,value");
  summary.row("n_paths", n);
  summary.row("mean", mean);
  summary.row("variance", var);
  if (m.sigma.is_additive() && m.f.is_zero() && m.u0.kind == InitialCondition::Kind::constant) {
    // Exact law: N(u0, sigma^2 Q) with Q the discrete variance on the grid.
    const SpaceTimeGrid grid = m.grid.with_steps(m.grid.time_index(c.probe.t0));
    NoiseCovariance cov(grid, m.noise);
    const double s2 = m.sigma.level() * m.sigma.level();
    summary.row("q_lambda_grid", s2 * grid_q_lambda(grid, cov, grid.n_t()));
    summary.row("q_lambda_continuum", s2 * q_lambda(c.probe.t0, m.noise));
  }
  if (n >= 100) {
    const KdeCurve k = kde(e.samples);
    write_kde_csv(cx.outputs.add("tables/kde.csv"), k);
    summary.row("atomic", k.atomic);
    summary.row("bandwidth", k.bandwidth);
    summary.row("kde_mass", k.mass);
    if (cx.plots && !k.atomic)
      write_line_plot(cx.outputs.add("plots/kde.svg"), "KDE of u(t0, x0)", "value", "density",
                      {PlotSeries{"kde", k.values, k.density}});
    cx.out << "density: " << n << " samples, mean " << show(mean) << ", variance " << show(var)
           << (k.atomic ? ", atomic" : ", bandwidth " + show(k.bandwidth)) << "\n";
  } else {
    cx.out << "density: " << n << " samples (KDE needs at least 100)\n";
  }
  summary.close();
  if (n >= 1000) {
    Csv atoms(cx.outputs.add("tables/atoms.csv"), "resolution,atom_mass");
    for (double r : kAtomResolutions) {
      const double a = atom_test(e.samples, r);
      atoms.row(r, a);
      cx.out << "  atom mass at resolution " << show(r) << ": " << show(a) << "\n";
    }
    atoms.close();
  } else {
    cx.out << "  atom test skipped (needs at least 1000 samples)\n";
  }
}

bool cmd_validate(const ExperimentConfig& c, std::ostream& out) {
  const auto issues = validate_config(c);
  for (const auto& i : issues) out << "invalid: " << i.key << ": " << i.message << "\n";
  if (issues.empty()) out << "config valid\n";
  return issues.empty();
}

}  // namespace

ExperimentConfig effective_config(const CommandOptions& o) {
  ExperimentConfig c = o.config.empty() ? parse_config("", o.overrides) : load_config(o.config, o.overrides);
  if (o.paths) c.run.n_paths = *o.paths;
  if (o.seed) c.run.base_seed = *o.seed;
  if (o.out) c.run.output = *o.out;
  if (o.threads) c.run.threads = *o.threads;
  return c;
}

int run_command(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentConfig c = effective_config(o);
    if (o.command == "validate") {
      return cmd_validate(c, out) ? kExitOk : kExitConfig;
    }
    require_valid(c);
    RunOutputs outputs(c.run.output);
    Context cx{c, c.model(), outputs, o.plots, out};
    if (o.command == "simulate") cmd_simulate(cx);
    else if (o.command == "picard-study") cmd_picard_study(cx);
    else if (o.command == "yosida-study") cmd_yosida_study(cx);
    else if (o.command == "malliavin") cmd_malliavin(cx);
    else if (o.command == "density") cmd_density(cx);
    else throw ConfigError("command", "unknown command '" + o.command + "'");
    write_manifest(outputs, RunRecord{o.command, serialize_config(c), c.run.base_seed, c.run.n_paths});
    out << "wrote " << outputs.files().size() << " files and manifest.json to " << outputs.root().string() << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"spdelab: stochastic heat equation laboratory"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  CommandOptions o;
  std::string config;
  int paths = 0, threads = 0;
  std::uint64_t seed = 0;
  std::string dir;
  const std::pair<const char*, const char*> commands[] = {
      {"validate", "check a configuration and report every violated invariant"},
      {"simulate", "one noise path: field files, Picard trace, final slice"},
      {"picard-study", "Picard convergence over many paths and the Lipschitz estimate of M"},
      {"yosida-study", "Yosida approximation gaps and the randomized inequality sweep"},
      {"malliavin", "positivity study over the delta ladder and the finite-difference oracle"},
      {"density", "ensemble of u(t0, x0), kernel density estimate and atom test"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "INI config file (defaults when omitted)")->check(CLI::ExistingFile);
    sub->add_option("--set", o.overrides, "override section.key=value (repeatable)")->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    if (std::string(name) == "validate") continue;
    sub->add_option("--paths", paths, "number of paths (run.n_paths)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "base seed (run.base_seed)");
    sub->add_option("--out", dir, "output directory (run.output)");
    sub->add_option("--threads", threads, "worker threads, 0 = all cores (run.threads)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--plots", o.plots, "also write plots/*.svg");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  CLI::App* sub = app.get_subcommands().front();
  o.command = sub->get_name();
  o.config = config;
  auto given = [&](const char* flag) {
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--paths")) o.paths = paths;
  if (given("--seed")) o.seed = seed;
  if (given("--out")) o.out = dir;
  if (given("--threads")) o.threads = threads;
  return run_command(o, out, err);
}

}  // namespace spdelab::app
