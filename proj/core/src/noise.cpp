#include "spdelab/noise.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "fft.hpp"
#include "spdelab/heat_kernel.hpp"

namespace spdelab {

std::string to_string(CovarianceKind kind) {
  switch (kind) {
    case CovarianceKind::white: return "white";
    case CovarianceKind::gaussian: return "gaussian";
    case CovarianceKind::riesz: return "riesz";
  }
  return "?";
}

CovarianceKind covariance_kind_from_string(const std::string& name) {
  if (name == "white") return CovarianceKind::white;
  if (name == "gaussian") return CovarianceKind::gaussian;
  if (name == "riesz") return CovarianceKind::riesz;
  throw std::invalid_argument("unknown noise kind '" + name + "'");
}

namespace {
void check_eta(double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("covariance: eta must lie in (0, 1)");
}

double sphere_area(int dim) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}
}  // namespace

CovarianceSpec CovarianceSpec::white(double eta) {
  check_eta(eta);
  return {CovarianceKind::white, eta, 0.0, 0.0};
}

CovarianceSpec CovarianceSpec::gaussian(double length, double eta) {
  check_eta(eta);
  if (!(length > 0.0)) throw std::invalid_argument("covariance: gaussian length must be positive");
  return {CovarianceKind::gaussian, eta, length, 0.0};
}

CovarianceSpec CovarianceSpec::riesz(double beta, double eta, int dim) {
  check_eta(eta);
  if (!(beta > 0.0) || !(beta < dim))
    throw std::invalid_argument("covariance: riesz exponent must satisfy 0 < beta < dim");
  return {CovarianceKind::riesz, eta, 0.0, beta};
}

double CovarianceSpec::lambda(double r) const {
  switch (kind_) {
    case CovarianceKind::white: throw std::logic_error("white noise has no pointwise covariance");
    case CovarianceKind::gaussian: return std::exp(-r * r / (2.0 * length_ * length_));
    case CovarianceKind::riesz: return std::pow(r, -beta_);
  }
  return 0.0;
}

double CovarianceSpec::spectral_density(double r, int dim) const {
  const double d = dim;
  switch (kind_) {
    case CovarianceKind::white: return std::pow(2.0 * std::numbers::pi, -d);
    case CovarianceKind::gaussian: {
      const double l2 = length_ * length_;
      return std::pow(l2 / (2.0 * std::numbers::pi), 0.5 * d) * std::exp(-0.5 * l2 * r * r);
    }
    case CovarianceKind::riesz: {
      const double c = std::pow(std::numbers::pi, 0.5 * d) * std::pow(2.0, d - beta_) *
                       std::tgamma(0.5 * (d - beta_)) / std::tgamma(0.5 * beta_);
      return c * std::pow(2.0 * std::numbers::pi, -d) * std::pow(r, beta_ - d);
    }
  }
  return 0.0;
}

DalangReport dalang_check(const CovarianceSpec& spec, int dim) {
  DalangReport rep;
  const double a = 2.0 * (1.0 - spec.eta());
  auto radial = [&](double r) {
    return sphere_area(dim) * std::pow(r, dim - 1) * spec.spectral_density(r, dim) / (1.0 + std::pow(r, a));
  };
  // Power of r in the radial integrand for large r.
  double density_power = 0.0;
  if (spec.kind() == CovarianceKind::riesz) density_power = spec.beta() - dim;
  if (spec.kind() == CovarianceKind::gaussian) {
    rep.tail_exponent = -std::numeric_limits<double>::infinity();
  } else {
    rep.tail_exponent = dim - 1 + density_power - a;
  }

  const double cutoff = spec.kind() == CovarianceKind::gaussian ? 40.0 / spec.length() : 1.0e3;
  boost::math::quadrature::tanh_sinh<double> integrator;
  double body = integrator.integrate(radial, 0.0, cutoff);

  if (spec.kind() == CovarianceKind::gaussian) {
    rep.pass = std::isfinite(body);
    rep.integral = body;
    rep.detail = "spectral measure has gaussian decay";
    return rep;
  }
  if (rep.tail_exponent >= -1.0) {
    rep.pass = false;
    rep.integral = std::numeric_limits<double>::infinity();
    std::ostringstream os;
    os << "radial integrand decays like |xi|^" << rep.tail_exponent << " (needs < -1)";
    rep.detail = os.str();
    return rep;
  }
  // Tail: integrand <= c r^{p - a} with p the density power; integrate analytically.
  const double c = sphere_area(dim) * spec.spectral_density(1.0, dim);
  const double e = rep.tail_exponent;
  const double tail = c * std::pow(cutoff, e + 1.0) / -(e + 1.0);
  rep.integral = body + tail;
  rep.pass = std::isfinite(rep.integral);
  std::ostringstream os;
  os << "radial integrand decays like |xi|^" << e;
  rep.detail = os.str();
  return rep;
}

double q_lambda(double t, const CovarianceSpec& spec, int dim) {
  if (t < 0.0) throw std::domain_error("q_lambda: t must be nonnegative");
  if (t == 0.0) return 0.0;
  const double d = dim;
  switch (spec.kind()) {
    case CovarianceKind::white:
      if (dim != 1) return std::numeric_limits<double>::infinity();
      return std::sqrt(t / std::numbers::pi);
    case CovarianceKind::gaussian: {
      const double l = spec.length();
      if (dim == 1) return l * (std::sqrt(2.0 * t + l * l) - l);
      if (dim == 2) return 0.5 * l * l * std::log1p(2.0 * t / (l * l));
      // (l^2 / (l^2 + 2s))^{d/2} integrated in closed form for d > 2.
      const double p = 1.0 - 0.5 * d;
      return std::pow(l, d) * (std::pow(l * l + 2.0 * t, p) - std::pow(l * l, p)) / (2.0 * p);
    }
    case CovarianceKind::riesz: {
      const double b = spec.beta();
      if (b >= 2.0) return std::numeric_limits<double>::infinity();
      const double c = std::pow(2.0, -b) * std::tgamma(0.5 * (d - b)) / std::tgamma(0.5 * d);
      return c * std::pow(t, 1.0 - 0.5 * b) / (1.0 - 0.5 * b);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

NoiseCovariance::NoiseCovariance(const SpaceTimeGrid& grid, const CovarianceSpec& spec)
    : grid_(grid), spec_(spec) {
  if (grid.dim() != 1) throw std::invalid_argument("NoiseCovariance: only dim = 1 is implemented");
  scratch_.resize(static_cast<std::size_t>(grid.n_x()));
  if (grid.boundary() == Boundary::periodic)
    build_periodic();
  else
    build_truncated();
}

NoiseCovariance::~NoiseCovariance() = default;
NoiseCovariance::NoiseCovariance(NoiseCovariance&&) noexcept = default;
NoiseCovariance& NoiseCovariance::operator=(NoiseCovariance&&) noexcept = default;

NoiseCovariance::NoiseCovariance(const NoiseCovariance& other)
    : grid_(other.grid_),
      spec_(other.spec_),
      first_row_(other.first_row_),
      eigenvalues_(other.eigenvalues_),
      sqrt_eigenvalues_(other.sqrt_eigenvalues_),
      dense_(other.dense_),
      cholesky_(other.cholesky_),
      scratch_(other.scratch_) {
  if (other.fft_) {
    fft_ = std::make_unique<detail::RealFft>(other.fft_->size());
    spectrum_a_.resize(fft_->spectrum_size());
  }
}

namespace {
// Covariance between nodes at distance r on the grid; Lambda(0) of the
// singular riesz kernel is replaced by its average over one cell.
double discrete_entry(const CovarianceSpec& spec, double r, double dx) {
  if (spec.kind() == CovarianceKind::white) return r == 0.0 ? 1.0 / dx : 0.0;
  if (r == 0.0 && spec.kind() == CovarianceKind::riesz) {
    const double b = spec.beta();
    return 2.0 * std::pow(0.5 * dx, 1.0 - b) / ((1.0 - b) * dx);
  }
  return spec.lambda(r);
}
}  // namespace

void NoiseCovariance::build_periodic() {
  const int n = grid_.n_x();
  const double dx = grid_.dx();
  first_row_.resize(static_cast<std::size_t>(n));
  if (spec_.kind() == CovarianceKind::gaussian) {
    // Periodized kernel sum_j Lambda(x + 2 L j): a positive-definite function
    // on the torus. The nearest-image kernel is not once length ~ L.
    const double period = n * dx;
    const int images = static_cast<int>(std::ceil(10.0 * spec_.length() / period)) + 1;
    for (int m = 0; m < n; ++m) {
      double acc = 0.0;
      for (int j = -images; j <= images; ++j) {
        const double r = m * dx + j * period;
        acc += r == 0.0 ? discrete_entry(spec_, 0.0, dx) : spec_.lambda(std::abs(r));
      }
      first_row_[static_cast<std::size_t>(m)] = acc;
    }
  } else {
    for (int m = 0; m < n; ++m) {
      const int dist = std::min(m, n - m);
      first_row_[static_cast<std::size_t>(m)] = discrete_entry(spec_, dist * dx, dx);
    }
  }
  fft_ = std::make_unique<detail::RealFft>(static_cast<std::size_t>(n));
  spectrum_a_.resize(fft_->spectrum_size());
  auto real = fft_->real();
  std::copy(first_row_.begin(), first_row_.end(), real.begin());
  fft_->forward();
  auto spec = fft_->spectrum();
  eigenvalues_.resize(spec.size());
  double max_abs = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    eigenvalues_[k] = spec[k].real();
    max_abs = std::max(max_abs, std::abs(eigenvalues_[k]));
  }
  sqrt_eigenvalues_.resize(eigenvalues_.size());
  for (std::size_t k = 0; k < eigenvalues_.size(); ++k) {
    double ev = eigenvalues_[k];
    if (ev < -1e-10 * max_abs) {
      std::ostringstream os;
      os << "discretized circulant covariance is not positive semi-definite: eigenvalue #" << k << " = "
         << ev << " (kind " << to_string(spec_.kind()) << ", dx = " << dx << ")";
      throw NumericError(os.str());
    }
    ev = std::max(ev, 0.0);
    eigenvalues_[k] = ev;
    sqrt_eigenvalues_[k] = std::sqrt(ev);
  }
}

void NoiseCovariance::build_truncated() {
  const int n = grid_.n_x();
  const double dx = grid_.dx();
  if (spec_.kind() == CovarianceKind::white) return;
  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) c(i, k) = discrete_entry(spec_, std::abs(i - k) * dx, dx);
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
    std::ostringstream os;
    os << "covariance matrix is not positive definite: smallest eigenvalue " << es.eigenvalues()(0);
    throw NumericError(os.str());
  }
  dense_.assign(static_cast<std::size_t>(n) * n, 0.0);
  cholesky_.assign(static_cast<std::size_t>(n) * n, 0.0);
  Eigen::MatrixXd l = llt.matrixL();
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      dense_[static_cast<std::size_t>(i) * n + k] = c(i, k);
      cholesky_[static_cast<std::size_t>(i) * n + k] = l(i, k);
    }
}

double NoiseCovariance::entry(int i, int k) const {
  const int n = grid_.n_x();
  const double dx = grid_.dx();
  if (grid_.boundary() == Boundary::periodic) return first_row_[static_cast<std::size_t>(((i - k) % n + n) % n)];
  return discrete_entry(spec_, std::abs(i - k) * dx, dx);
}

void NoiseCovariance::apply(std::span<const double> v, std::span<double> out) {
  const auto n = static_cast<std::size_t>(grid_.n_x());
  const double dx = grid_.dx();
  if (v.size() != n || out.size() != n) throw std::invalid_argument("NoiseCovariance::apply: size mismatch");
  if (spec_.kind() == CovarianceKind::white) {
    if (v.data() != out.data()) std::copy(v.begin(), v.end(), out.begin());
    return;
  }
  if (fft_) {
    auto real = fft_->real();
    std::copy(v.begin(), v.end(), real.begin());
    fft_->forward();
    auto spec = fft_->spectrum();
    const double scale = dx / static_cast<double>(n);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= eigenvalues_[k] * scale;
    fft_->backward();
    std::copy(real.begin(), real.end(), out.begin());
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += dense_[i * n + k] * v[k];
    scratch_[i] = acc * dx;
  }
  std::copy(scratch_.begin(), scratch_.end(), out.begin());
}

double NoiseCovariance::slice_inner(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<std::size_t>(grid_.n_x());
  const double dx = grid_.dx();
  if (spec_.kind() == CovarianceKind::white) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc * dx;
  }
  if (fft_) {
    auto real = fft_->real();
    std::copy(a.begin(), a.end(), real.begin());
    fft_->forward();
    auto spec = fft_->spectrum();
    std::copy(spec.begin(), spec.end(), spectrum_a_.begin());
    std::copy(b.begin(), b.end(), real.begin());
    fft_->forward();
    double acc = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
      const double w = (k == 0 || 2 * k == n) ? 1.0 : 2.0;
      // Re(a_k conj(b_k)) written so that swapping a and b is bit-identical.
      const double re = spectrum_a_[k].real() * spec[k].real() + spectrum_a_[k].imag() * spec[k].imag();
      acc += w * eigenvalues_[k] * re;
    }
    return acc * dx * dx / static_cast<double>(n);
  }
  // a^T C b = (L^T a) . (L^T b)
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double la = 0.0, lb = 0.0;
    for (std::size_t i = j; i < n; ++i) {
      la += cholesky_[i * n + j] * a[i];
      lb += cholesky_[i * n + j] * b[i];
    }
    acc += la * lb;
  }
  return acc * dx * dx;
}

void NoiseCovariance::color(std::span<const double> w, std::span<double> out) {
  const auto n = static_cast<std::size_t>(grid_.n_x());
  if (spec_.kind() == CovarianceKind::white) {
    const double s = 1.0 / std::sqrt(grid_.dx());
    for (std::size_t i = 0; i < n; ++i) out[i] = s * w[i];
    return;
  }
  if (fft_) {
    auto real = fft_->real();
    std::copy(w.begin(), w.end(), real.begin());
    fft_->forward();
    auto spec = fft_->spectrum();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= sqrt_eigenvalues_[k] * inv_n;
    fft_->backward();
    std::copy(real.begin(), real.end(), out.begin());
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k <= i; ++k) acc += cholesky_[i * n + k] * w[k];
    scratch_[i] = acc;
  }
  std::copy(scratch_.begin(), scratch_.end(), out.begin());
}

// ---------------------------------------------------------------------------

NoisePath sample_noise(const SpaceTimeGrid& grid, NoiseCovariance& cov, std::uint64_t seed) {
  if (!(grid == cov.grid()) && !(grid.dx() == cov.grid().dx() && grid.n_x() == cov.grid().n_x()))
    throw std::invalid_argument("sample_noise: covariance built for a different grid");
  NoisePath path{grid, SliceArray(grid, grid.n_t()), seed};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> w(static_cast<std::size_t>(grid.n_x()));
  const double sdt = std::sqrt(grid.dt());
  for (int k = 0; k < grid.n_t(); ++k) {
    for (double& v : w) v = normal(rng);
    auto slice = path.increments.slice(k);
    cov.color(w, slice);
    for (double& v : slice) v *= sdt;
  }
  return path;
}

NoisePath sample_noise(const SpaceTimeGrid& grid, const CovarianceSpec& spec, std::uint64_t seed) {
  NoiseCovariance cov(grid, spec);
  return sample_noise(grid, cov, seed);
}

double ht_inner(const CameronMartinElement& phi, const CameronMartinElement& psi, NoiseCovariance& cov) {
  require_same_shape(phi, psi, "ht_inner");
  double acc = 0.0;
  for (int k = 0; k < phi.n_slices(); ++k) {
    auto a = phi.slice(k);
    auto b = psi.slice(k);
    const bool zero_a = std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; });
    const bool zero_b = std::all_of(b.begin(), b.end(), [](double v) { return v == 0.0; });
    if (zero_a || zero_b) continue;
    acc += cov.slice_inner(a, b);
  }
  return acc * phi.grid().dt();
}

double wiener_integral(const CameronMartinElement& phi, const NoisePath& path) {
  if (phi.n_slices() != path.increments.n_slices() || phi.slice_size() != path.increments.slice_size())
    throw std::invalid_argument("wiener_integral: shape mismatch");
  double acc = 0.0;
  auto a = phi.values();
  auto b = path.increments.values();
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc * path.grid.dx();
}

double grid_q_lambda(const SpaceTimeGrid& grid, NoiseCovariance& cov, int lag_steps) {
  if (lag_steps < 0) throw std::invalid_argument("grid_q_lambda: negative lag");
  HeatSemigroup s(grid);
  const int center = grid.n_x() / 2;
  std::vector<double> row(static_cast<std::size_t>(grid.n_x()), 0.0);
  row[static_cast<std::size_t>(center)] = 1.0 / grid.dx();
  double acc = 0.0;
  for (int m = 1; m <= lag_steps; ++m) {
    s.apply_inplace(row, grid.dt());
    acc += cov.slice_inner(row, row);
  }
  return acc * grid.dt();
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) {
  std::uint64_t z = base_seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------

namespace {
template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  auto raw = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bytes[i] = std::endian::native == std::endian::little ? raw[i] : raw[sizeof(T) - 1 - i];
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> raw{};
  is.read(reinterpret_cast<char*>(raw.data()), sizeof(T));
  if (!is) throw IoError("slice file truncated");
  if constexpr (std::endian::native != std::endian::little) std::reverse(raw.begin(), raw.end());
  return std::bit_cast<T>(raw);
}
}  // namespace

void write_slices(const std::filesystem::path& file, const SliceArray& slices, std::uint64_t seed) {
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + file.string() + "' for writing");
  os.write("SPDN", 4);
  put_le<std::uint32_t>(os, kSliceFileVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(slices.n_slices()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(slices.slice_size()));
  put_le<std::uint64_t>(os, seed);
  for (double v : slices.values()) put_le<double>(os, v);
  if (!os) throw IoError("write to '" + file.string() + "' failed");
}

SliceFileHeader read_slices(const std::filesystem::path& file, std::vector<double>& values) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw IoError("cannot open '" + file.string() + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "SPDN") throw IoError("'" + file.string() + "' is not an SPDN file");
  SliceFileHeader h;
  h.version = get_le<std::uint32_t>(is);
  if (h.version != kSliceFileVersion) throw IoError("unsupported SPDN version");
  h.n_slices = get_le<std::uint32_t>(is);
  h.n_x = get_le<std::uint32_t>(is);
  h.seed = get_le<std::uint64_t>(is);
  values.resize(static_cast<std::size_t>(h.n_slices) * h.n_x);
  for (double& v : values) v = get_le<double>(is);
  if (is.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in '" + file.string() + "'");
  return h;
}

NoisePath read_noise_path(const std::filesystem::path& file, const SpaceTimeGrid& grid) {
  std::vector<double> values;
  const auto h = read_slices(file, values);
  if (static_cast<int>(h.n_slices) != grid.n_t() || h.n_x != grid.points_per_slice())
    throw IoError("noise file shape does not match the grid");
  NoisePath p{grid, SliceArray(grid, grid.n_t()), h.seed};
  std::copy(values.begin(), values.end(), p.increments.values().begin());
  return p;
}

}  // namespace spdelab
