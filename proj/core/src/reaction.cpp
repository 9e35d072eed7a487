#include "spdelab/reaction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace spdelab {

namespace {
constexpr double kSweepLo = -10.0;
constexpr double kSweepHi = 10.0;
constexpr int kSweepPoints = 20001;
}  // namespace

ReactionFn ReactionFn::allen_cahn() {
  ReactionFn r("allen-cahn", Kind::allen_cahn, 1.0, 3.0, 1.0);
  r.validate();
  return r;
}

ReactionFn ReactionFn::exponential() {
  ReactionFn r("exponential", Kind::exponential, 1.0, 2.0, 1.0);
  r.validate();
  return r;
}

ReactionFn ReactionFn::linear(double kappa) {
  if (!std::isfinite(kappa)) throw std::invalid_argument("linear reaction: kappa must be finite");
  ReactionFn r(kappa == 0.0 ? "zero" : "linear", Kind::linear, kappa, std::max(std::abs(kappa), 1.0), 1.0);
  r.validate();
  return r;
}

ReactionFn ReactionFn::damping() {
  ReactionFn r("damping", Kind::damping, 0.0, 1.0, 1.0);
  r.validate();
  return r;
}

ReactionFn ReactionFn::custom(std::string name, std::function<double(double)> f,
                              std::function<double(double)> df, double kappa, double K, double nu) {
  if (!f || !df) throw std::invalid_argument("custom reaction: f and f' are required");
  ReactionFn r(std::move(name), Kind::custom, kappa, K, nu);
  r.f_ = std::move(f);
  r.df_ = std::move(df);
  r.validate();
  return r;
}

ReactionFn ReactionFn::by_name(const std::string& name, double kappa) {
  if (name == "allen-cahn") return allen_cahn();
  if (name == "exponential") return exponential();
  if (name == "linear") return linear(kappa);
  if (name == "zero") return linear(0.0);
  if (name == "damping") return damping();
  throw std::invalid_argument("unknown reaction '" + name + "'");
}

double ReactionFn::eval(double u) const {
  switch (kind_) {
    case Kind::allen_cahn: return u - u * u * u;
    case Kind::exponential: return u - std::exp(u);
    case Kind::linear: return kappa_ * u;
    case Kind::damping: return -u;
    case Kind::custom: return f_(u);
  }
  return 0.0;
}

double ReactionFn::deriv(double u) const {
  switch (kind_) {
    case Kind::allen_cahn: return 1.0 - 3.0 * u * u;
    case Kind::exponential: return 1.0 - std::exp(u);
    case Kind::linear: return kappa_;
    case Kind::damping: return -1.0;
    case Kind::custom: return df_(u);
  }
  return 0.0;
}

void ReactionFn::validate() const {
  if (!(K_ > 0.0) || !(nu_ > 0.0))
    throw std::invalid_argument("reaction '" + name_ + "': growth constants K, nu must be positive");
  const double step = (kSweepHi - kSweepLo) / (kSweepPoints - 1);
  double prev_u = kSweepLo;
  double prev_f = eval(prev_u);
  for (int i = 0; i < kSweepPoints; ++i) {
    const double u = kSweepLo + i * step;
    const double fu = eval(u);
    const double d = deriv(u);
    std::ostringstream os;
    if (!std::isfinite(fu) || !std::isfinite(d)) {
      os << "reaction '" << name_ << "': non-finite value at u = " << u;
      throw std::invalid_argument(os.str());
    }
    if (d > kappa_ + 1e-12 * (1.0 + std::abs(kappa_))) {
      os << "reaction '" << name_ << "': f'(" << u << ") = " << d << " exceeds kappa = " << kappa_;
      throw std::invalid_argument(os.str());
    }
    if (std::abs(d) > K_ * std::exp(K_ * std::pow(std::abs(u), nu_))) {
      os << "reaction '" << name_ << "': |f'(" << u << ")| violates the growth bound";
      throw std::invalid_argument(os.str());
    }
    if (i > 0) {
      const double slack = 1e-10 * (1.0 + std::abs(fu) + std::abs(prev_f));
      if (fu - prev_f > kappa_ * (u - prev_u) + slack) {
        os << "reaction '" << name_ << "': half-Lipschitz bound fails on [" << prev_u << ", " << u << "]";
        throw std::invalid_argument(os.str());
      }
    }
    prev_u = u;
    prev_f = fu;
  }
}

Decomposition decompose(const ReactionFn& f) {
  const double step = (kSweepHi - kSweepLo) / (kSweepPoints - 1);
  for (int i = 0; i < kSweepPoints; ++i) {
    const double u = kSweepLo + i * step;
    if (f.phi_deriv(u) > 1e-12 * (1.0 + std::abs(f.kappa()))) {
      std::ostringstream os;
      os << "reaction '" << f.name() << "': phi'(" << u << ") > 0, f is not half-Lipschitz with kappa " << f.kappa();
      throw std::invalid_argument(os.str());
    }
  }
  return {[f](double u) { return f.phi(u); }, f.kappa()};
}

double resolvent(const ReactionFn& f, double lambda, double u, double tol) {
  if (!(lambda > 0.0)) throw std::invalid_argument("resolvent: lambda must be positive");
  if (f.phi_is_zero()) return u;
  if (f.kind() == ReactionFn::Kind::damping) return u / (1.0 + lambda);
  const double phi_u = f.phi(u);
  if (phi_u == 0.0) return u;

  // g(v) = v - lambda phi(v) - u is strictly increasing with g' >= 1.
  auto g = [&](double v) { return v - lambda * f.phi(v) - u; };
  const double scale = tol * std::max(1.0, std::abs(u));

  // The root lies between u and u + lambda phi(u): g(u) = -lambda phi(u) and
  // g is increasing, so expand from u towards the sign of phi(u).
  double lo, hi;
  double step = std::max(std::abs(lambda * phi_u), 1e-3);
  if (phi_u > 0.0) {
    lo = u;
    hi = u + step;
    int n = 0;
    while (g(hi) < 0.0) {
      lo = hi;
      step *= 2.0;
      hi = u + step;
      if (++n > 200 || !std::isfinite(hi)) break;
    }
  } else {
    hi = u;
    lo = u - step;
    int n = 0;
    while (g(lo) > 0.0) {
      hi = lo;
      step *= 2.0;
      lo = u - step;
      if (++n > 200 || !std::isfinite(lo)) break;
    }
  }
  double glo = g(lo), ghi = g(hi);
  if (!(glo <= 0.0 && ghi >= 0.0)) {
    std::ostringstream os;
    os << "resolvent: failed to bracket the root of v - " << lambda << " phi(v) = " << u << " for reaction '"
       << f.name() << "' (bracket [" << lo << ", " << hi << "], g = [" << glo << ", " << ghi << "])";
    throw NumericError(os.str());
  }

  // Newton from the end with the smaller residual, safeguarded by bisection.
  double v = std::abs(glo) < std::abs(ghi) ? lo : hi;
  double gv = v == lo ? glo : ghi;
  for (int it = 0; it < 200; ++it) {
    if (std::abs(gv) <= scale) {
      // One more Newton step polishes to near machine precision.
      const double dg = 1.0 - lambda * f.phi_deriv(v);
      const double polished = v - gv / dg;
      if (polished >= lo && polished <= hi && std::abs(g(polished)) <= std::abs(gv)) return polished;
      return v;
    }
    if (gv < 0.0)
      lo = v;
    else
      hi = v;
    const double dg = 1.0 - lambda * f.phi_deriv(v);
    double next = v - gv / dg;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == v || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(v))) {
      return next;
    }
    v = next;
    gv = g(v);
  }
  std::ostringstream os;
  os << "resolvent: no convergence for lambda = " << lambda << ", u = " << u << " (reaction '" << f.name()
     << "', last residual " << gv << ")";
  throw NumericError(os.str());
}

double yosida_phi(const ReactionFn& f, double lambda, double u) {
  return (resolvent(f, lambda, u) - u) / lambda;
}

double yosida_phi_deriv(const ReactionFn& f, double lambda, double u) {
  const double j = resolvent(f, lambda, u);
  const double d = f.phi_deriv(j);
  return d / (1.0 - lambda * d);
}

double yosida_f(const ReactionFn& f, double lambda, double u) {
  return yosida_phi(f, lambda, u) + f.kappa() * u;
}

double yosida_f_deriv(const ReactionFn& f, double lambda, double u) {
  return yosida_phi_deriv(f, lambda, u) + f.kappa();
}

// ---------------------------------------------------------------------------

bool YosidaSuiteReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.violations == 0; });
}

const YosidaSuiteReport::Check& YosidaSuiteReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("no Yosida check named '" + name + "'");
}

namespace {

struct Tally {
  YosidaSuiteReport::Check check;
  double slack;

  // Records lhs <= rhs.
  void leq(double lhs, double rhs, double u, double lambda) {
    ++check.evaluated;
    const double scale = 1.0 + std::abs(lhs) + std::abs(rhs);
    const double excess = (lhs - rhs) / scale;
    if (excess > slack) {
      ++check.violations;
      if (excess > check.worst_excess) {
        check.worst_excess = excess;
        check.worst_u = u;
        check.worst_lambda = lambda;
      }
    }
  }
};

double central_difference(const std::function<double(double)>& g, double u) {
  const double h = 1e-4 * std::max(1.0, std::abs(u));
  return (-g(u + 2 * h) + 8 * g(u + h) - 8 * g(u - h) + g(u - 2 * h)) / (12 * h);
}

}  // namespace

YosidaSuiteReport yosida_suite(const ReactionFn& f, const std::vector<double>& lambdas, std::int64_t n_points,
                               std::uint64_t seed, double slack, double lo, double hi) {
  if (lambdas.empty()) throw std::invalid_argument("yosida_suite: no lambdas");
  for (double l : lambdas)
    if (!(l > 0.0)) throw std::invalid_argument("yosida_suite: lambdas must be positive");
  std::vector<double> ls = lambdas;
  std::sort(ls.begin(), ls.end(), std::greater<>());
  const double kappa = f.kappa();

  const char* names[] = {"phi.i", "phi.ii", "phi.iii", "phi.iv", "phi.v", "f.i", "f.ii", "f.iii", "f.iv", "f.v"};
  std::vector<Tally> t;
  for (const char* n : names) t.push_back({{n}, slack});
  auto& pi = t[0];
  auto& pii = t[1];
  auto& piii = t[2];
  auto& piv = t[3];
  auto& pv = t[4];
  auto& fi = t[5];
  auto& fii = t[6];
  auto& fiii = t[7];
  auto& fiv = t[8];
  auto& fv = t[9];

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(lo, hi);
  std::uniform_real_distribution<double> near(-1e-3, 1e-3);

  double u_prev = uni(rng);
  for (std::int64_t p = 0; p < n_points; ++p) {
    const double u = uni(rng);
    const double phi_u = f.phi(u);
    const double dphi_u = f.phi_deriv(u);
    const double f_u = f.eval(u);
    const double df_u = f.deriv(u);
    // Partners: the previous draw (far pair) and a close neighbour.
    const double partners[2] = {u_prev, u + near(rng)};

    double prev_gap = std::numeric_limits<double>::infinity();
    double prev_dgap = std::numeric_limits<double>::infinity();
    double prev_fgap = std::numeric_limits<double>::infinity();
    double prev_fdgap = std::numeric_limits<double>::infinity();
    for (double l : ls) {
      const double j = resolvent(f, l, u);
      const double phil = (j - u) / l;
      const double dj = f.phi_deriv(j);
      const double dphil = dj / (1.0 - l * dj);
      const double fl = phil + kappa * u;
      const double dfl = dphil + kappa;

      for (double w : partners) {
        if (w == u) continue;
        const double phil_w = yosida_phi(f, l, w);
        const double fl_w = phil_w + kappa * w;
        const double du = std::abs(u - w);
        pi.leq(std::abs(phil - phil_w), 2.0 / l * du, u, l);
        fi.leq(std::abs(fl - fl_w), (2.0 / l + std::abs(kappa)) * du, u, l);
        // Non-increasing: (phi_l(u) - phi_l(w)) sign(u - w) <= 0.
        const double s = u > w ? 1.0 : -1.0;
        piii.leq((phil - phil_w) * s, 0.0, u, l);
        fiii.leq((fl - fl_w) * s, kappa * du, u, l);
      }

      pii.leq(std::abs(phil), std::abs(phi_u), u, l);
      fii.leq(std::abs(fl), (1.0 + 2.0 * kappa) * std::abs(f_u), u, l);

      // (iv): the gap shrinks as lambda decreases, at rate lambda |phi'| |phi|.
      const double gap = std::abs(phil - phi_u);
      const double rate = l * std::max(std::abs(dphi_u), std::abs(dj)) * std::abs(phi_u);
      piv.leq(gap, prev_gap, u, l);
      piv.leq(gap, rate, u, l);
      const double fgap = std::abs(fl - f_u);
      fiv.leq(fgap, prev_fgap, u, l);
      fiv.leq(fgap, rate, u, l);
      prev_gap = gap;
      prev_fgap = fgap;

      // (v): derivative gap shrinks; the closed-form phi_l' agrees with finite differences.
      const double dgap = std::abs(dphil - dphi_u);
      pv.leq(dgap, prev_dgap, u, l);
      const double fd = central_difference([&](double v) { return yosida_phi(f, l, v); }, u);
      pv.leq(std::abs(fd - dphil), 0.0, u, l);
      const double fdgap = std::abs(dfl - df_u);
      fv.leq(fdgap, prev_fdgap, u, l);
      const double ffd = central_difference([&](double v) { return yosida_f(f, l, v); }, u);
      fv.leq(std::abs(ffd - dfl), 0.0, u, l);
      prev_dgap = dgap;
      prev_fdgap = fdgap;
    }
    u_prev = u;
  }

  YosidaSuiteReport rep;
  rep.reaction = f.name();
  for (auto& x : t) rep.checks.push_back(x.check);
  return rep;
}

}  // namespace spdelab
