#include "app/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "spdelab/det_map.hpp"
#include "spdelab/errors.hpp"
#include "spdelab/noise.hpp"

namespace spdelab::app {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(key, "expected a finite number, got '" + s + "'");
  return v;
}

template <class Int>
Int to_integer(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(key, "expected an integer, got '" + s + "'");
  return v;
}

std::vector<double> to_list(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError(key, "expected a comma-separated list of numbers");
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// One accessor per key path, in canonical order.
struct Field {
  const char* path;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define SPDELAB_DOUBLE(path, member)                                                        \
  Field{path, [](ExperimentConfig& c, const std::string& v) { c.member = to_double(path, v); }, \
        [](const ExperimentConfig& c) { return fmt_double(c.member); }}
#define SPDELAB_INT(path, member, type)                                                            \
  Field{path, [](ExperimentConfig& c, const std::string& v) { c.member = to_integer<type>(path, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.member); }}
#define SPDELAB_STRING(path, member)                                                       \
  Field{path, [](ExperimentConfig& c, const std::string& v) { c.member = trim(v); }, \
        [](const ExperimentConfig& c) { return c.member; }}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      SPDELAB_DOUBLE("grid.T", grid.T),
      SPDELAB_INT("grid.n_t", grid.n_t, int),
      SPDELAB_DOUBLE("grid.L", grid.L),
      SPDELAB_INT("grid.n_x", grid.n_x, int),
      SPDELAB_INT("grid.dim", grid.dim, int),
      SPDELAB_STRING("grid.boundary", grid.boundary),
      SPDELAB_STRING("noise.kind", noise.kind),
      SPDELAB_DOUBLE("noise.eta", noise.eta),
      SPDELAB_DOUBLE("noise.length", noise.length),
      SPDELAB_DOUBLE("noise.beta", noise.beta),
      SPDELAB_STRING("reaction.name", reaction.name),
      SPDELAB_DOUBLE("reaction.kappa", reaction.kappa),
      SPDELAB_STRING("sigma.name", sigma.name),
      SPDELAB_DOUBLE("sigma.level", sigma.level),
      SPDELAB_DOUBLE("sigma.amplitude", sigma.amplitude),
      SPDELAB_STRING("initial.kind", initial.kind),
      SPDELAB_DOUBLE("initial.value", initial.value),
      SPDELAB_DOUBLE("initial.amplitude", initial.amplitude),
      SPDELAB_DOUBLE("initial.variance", initial.variance),
      SPDELAB_DOUBLE("initial.center", initial.center),
      SPDELAB_DOUBLE("weight.theta", weight.theta),
      Field{"weight.centers",
            [](ExperimentConfig& c, const std::string& v) { c.weight.centers = to_list("weight.centers", v); },
            [](const ExperimentConfig& c) {
              std::string s;
              for (std::size_t i = 0; i < c.weight.centers.size(); ++i)
                s += (i ? ", " : "") + fmt_double(c.weight.centers[i]);
              return s;
            }},
      SPDELAB_DOUBLE("probe.t0", probe.t0),
      SPDELAB_DOUBLE("probe.x0", probe.x0),
      SPDELAB_INT("probe.k_max", probe.k_max, int),
      SPDELAB_DOUBLE("probe.delta", probe.delta),
      SPDELAB_DOUBLE("probe.epsilon", probe.epsilon),
      SPDELAB_DOUBLE("picard.stop_tol", picard.stop_tol),
      SPDELAB_INT("picard.n_max", picard.n_max, int),
      SPDELAB_INT("run.n_paths", run.n_paths, int),
      SPDELAB_INT("run.base_seed", run.base_seed, std::uint64_t),
      SPDELAB_STRING("run.output", run.output),
      SPDELAB_INT("run.threads", run.threads, int),
  };
  return all;
}

#undef SPDELAB_DOUBLE
#undef SPDELAB_INT
#undef SPDELAB_STRING

const Field& field(const std::string& path) {
  for (const auto& f : fields())
    if (path == f.path) return f;
  throw ConfigError(path, "unknown key");
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("<file>", e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError(section, "key outside of a section");
    for (const auto& [key, value] : body) field(section + "." + key).set(c, value.data());
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError(o, "override must have the form section.key=value");
    const std::string path = trim(o.substr(0, eq));
    field(path).set(c, o.substr(eq + 1));
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  std::ifstream is(file);
  if (!is) throw IoError("cannot open config '" + file.string() + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields()) {
    const std::string path = f.path;
    const auto dot = path.find('.');
    const std::string sec = path.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) os << "\n";
      os << "[" << sec << "]\n";
      section = sec;
    }
    os << path.substr(dot + 1) << " = " << f.get(c) << "\n";
  }
  return os.str();
}

Model ExperimentConfig::model() const {
  require_valid(*this);
  Model m;
  m.grid = SpaceTimeGrid(grid.T, grid.n_t, grid.L, grid.n_x, grid.dim, boundary_from_string(grid.boundary));
  switch (covariance_kind_from_string(noise.kind)) {
    case CovarianceKind::white: m.noise = CovarianceSpec::white(noise.eta); break;
    case CovarianceKind::gaussian: m.noise = CovarianceSpec::gaussian(noise.length, noise.eta); break;
    case CovarianceKind::riesz: m.noise = CovarianceSpec::riesz(noise.beta, noise.eta, grid.dim); break;
  }
  m.f = ReactionFn::by_name(reaction.name, reaction.kappa);
  m.sigma = Diffusion::by_name(sigma.name, sigma.level, sigma.amplitude);
  m.u0 = initial.kind == "constant" ? InitialCondition::constant(initial.value)
                                    : InitialCondition::gaussian_bump(initial.amplitude, initial.variance, initial.center);
  return m;
}

std::vector<ConfigIssue> validate_config(const ExperimentConfig& c) {
  std::vector<ConfigIssue> issues;
  auto fail = [&](const std::string& key, const std::string& msg) { issues.push_back({key, msg}); };

  // grid
  bool grid_ok = true;
  if (!(c.grid.T > 0.0)) fail("grid.T", "must be positive"), grid_ok = false;
  if (c.grid.n_t < 1) fail("grid.n_t", "must be >= 1"), grid_ok = false;
  if (!(c.grid.L > 0.0)) fail("grid.L", "must be positive"), grid_ok = false;
  if (!is_power_of_two(c.grid.n_x) || c.grid.n_x < 2) fail("grid.n_x", "must be a power of two >= 2"), grid_ok = false;
  if (c.grid.dim != 1) fail("grid.dim", "only dim = 1 is implemented"), grid_ok = false;
  try {
    boundary_from_string(c.grid.boundary);
  } catch (const std::exception& e) {
    fail("grid.boundary", e.what()), grid_ok = false;
  }

  // noise
  bool noise_ok = true;
  CovarianceKind kind = CovarianceKind::white;
  try {
    kind = covariance_kind_from_string(c.noise.kind);
  } catch (const std::exception& e) {
    fail("noise.kind", e.what()), noise_ok = false;
  }
  if (!(c.noise.eta > 0.0 && c.noise.eta < 1.0)) fail("noise.eta", "must lie in (0, 1)"), noise_ok = false;
  if (noise_ok && kind == CovarianceKind::gaussian && !(c.noise.length > 0.0))
    fail("noise.length", "must be positive"), noise_ok = false;
  if (noise_ok && kind == CovarianceKind::riesz && !(c.noise.beta > 0.0 && c.noise.beta < c.grid.dim))
    fail("noise.beta", "riesz exponent must satisfy 0 < beta < dim"), noise_ok = false;
  if (noise_ok) {
    CovarianceSpec spec = CovarianceSpec::white(c.noise.eta);
    if (kind == CovarianceKind::gaussian) spec = CovarianceSpec::gaussian(c.noise.length, c.noise.eta);
    if (kind == CovarianceKind::riesz) spec = CovarianceSpec::riesz(c.noise.beta, c.noise.eta, c.grid.dim);
    const DalangReport d = dalang_check(spec, c.grid.dim);
    if (!d.pass) fail("noise.eta", "Dalang condition fails: " + d.detail);
  }

  // reaction and weight
  try {
    const ReactionFn f = ReactionFn::by_name(c.reaction.name, c.reaction.kappa);
    if (!(c.weight.theta > 0.0)) fail("weight.theta", "must be positive");
    else if (c.weight.theta * f.growth_nu() >= 2.0) fail("weight.theta", "theta*nu >= 2");
  } catch (const std::exception& e) {
    fail("reaction.name", e.what());
  }
  if (c.weight.centers.empty()) fail("weight.centers", "needs at least one center");

  // sigma
  try {
    const Diffusion s = Diffusion::by_name(c.sigma.name, c.sigma.level, c.sigma.amplitude);
    if (!(s.alpha() > 0.0)) fail("sigma.level", "alpha <= 0: sigma must be bounded below by a positive constant");
  } catch (const std::exception& e) {
    fail("sigma.name", e.what());
  }

  // initial datum
  if (c.initial.kind != "constant" && c.initial.kind != "bump")
    fail("initial.kind", "unknown initial datum '" + c.initial.kind + "' (constant, bump)");
  else if (c.initial.kind == "bump" && !(c.initial.variance > 0.0))
    fail("initial.variance", "must be positive");

  // probe
  if (grid_ok) {
    const SpaceTimeGrid g(c.grid.T, c.grid.n_t, c.grid.L, c.grid.n_x, c.grid.dim, boundary_from_string(c.grid.boundary));
    const int k0 = g.time_index(c.probe.t0);
    if (!(c.probe.t0 > 0.0) || k0 < 0) fail("probe.t0", "must be a positive grid time <= grid.T");
    if (g.space_index(c.probe.x0) < 0) fail("probe.x0", "must be a spatial grid node");
    if (c.probe.k_max < 1) fail("probe.k_max", "must be >= 1");
    else if (c.probe.t0 * std::ldexp(1.0, -c.probe.k_max) < 4.0 * g.dt() * (1.0 - 1e-12))
      fail("probe.k_max", "delta ladder not resolvable: t0*2^-k_max < 4*dt");
    const double steps = c.probe.delta / g.dt();
    if (!(c.probe.delta > 0.0) || std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps) ||
        c.probe.delta > c.probe.t0 * (1.0 + 1e-12))
      fail("probe.delta", "must be a positive multiple of dt not exceeding t0");
  }
  if (!(c.probe.epsilon > 0.0)) fail("probe.epsilon", "must be positive");

  if (!(c.picard.stop_tol > 0.0)) fail("picard.stop_tol", "must be positive");
  if (c.picard.n_max < 1) fail("picard.n_max", "must be >= 1");
  if (c.run.n_paths < 1) fail("run.n_paths", "must be >= 1");
  if (c.run.threads < 0) fail("run.threads", "must be >= 0 (0 = all cores)");
  if (c.run.output.empty()) fail("run.output", "must not be empty");
  return issues;
}

void require_valid(const ExperimentConfig& config) {
  const auto issues = validate_config(config);
  if (!issues.empty()) throw ConfigError(issues.front().key, issues.front().message);
}

}  // namespace spdelab::app
