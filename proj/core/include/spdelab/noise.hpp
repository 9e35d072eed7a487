#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "spdelab/errors.hpp"
#include "spdelab/grid.hpp"

namespace spdelab {

namespace detail {
class RealFft;
}

enum class CovarianceKind { white, gaussian, riesz };

std::string to_string(CovarianceKind kind);
CovarianceKind covariance_kind_from_string(const std::string& name);

/// Spatial covariance Lambda of a noise that is white in time.
///
///   white:    Lambda = delta
///   gaussian: Lambda(x) = exp(-|x|^2 / (2 l^2))
///   riesz:    Lambda(x) = |x|^{-beta}, 0 < beta < dim
///
/// Only these positive-definite kinds can be constructed. `eta` is the
/// exponent declared for the strong Dalang condition.
class CovarianceSpec {
 public:
  static CovarianceSpec white(double eta);
  static CovarianceSpec gaussian(double length, double eta);
  static CovarianceSpec riesz(double beta, double eta, int dim = 1);

  CovarianceKind kind() const { return kind_; }
  double eta() const { return eta_; }
  double length() const { return length_; }
  double beta() const { return beta_; }

  /// Lambda(r) for r = |x| > 0. Throws for the white kind.
  double lambda(double r) const;
  /// Density of the spectral measure mu at |xi| = r in dimension `dim`,
  /// normalized so that Lambda(x) = int exp(i xi.x) mu(d xi).
  double spectral_density(double r, int dim = 1) const;

 private:
  CovarianceSpec(CovarianceKind kind, double eta, double length, double beta)
      : kind_(kind), eta_(eta), length_(length), beta_(beta) {}

  CovarianceKind kind_;
  double eta_;
  double length_;
  double beta_;
};

struct DalangReport {
  bool pass = false;
  /// int mu(d xi) / (1 + |xi|^{2(1-eta)}); +inf when divergent.
  double integral = 0.0;
  /// Power of |xi| governing the radial integrand at infinity (gaussian: -inf).
  double tail_exponent = 0.0;
  std::string detail;
};

/// Strong Dalang condition: quadrature on a bounded ball plus an analytic
/// power-law tail.
DalangReport dalang_check(const CovarianceSpec& spec, int dim = 1);

/// Q(t) = int_0^t int int G(s, y1) G(s, y2) Lambda(y1 - y2) dy1 dy2 ds
/// in closed form (white: sqrt(t / pi) in d = 1).
double q_lambda(double t, const CovarianceSpec& spec, int dim = 1);

/// Discretized covariance of the noise on a grid.
///
/// `apply` computes (Lambda * v)(x_i) = sum_k C_ik v_k dx, where C is the
/// covariance matrix of the normalized increments: C_ik = Lambda(x_i - x_k)
/// for colored kinds and delta_ik / dx for white noise. On periodic grids C is
/// circulant and handled by FFT; truncated grids use a dense Cholesky factor.
class NoiseCovariance {
 public:
  NoiseCovariance(const SpaceTimeGrid& grid, const CovarianceSpec& spec);
  ~NoiseCovariance();
  NoiseCovariance(NoiseCovariance&&) noexcept;
  NoiseCovariance& operator=(NoiseCovariance&&) noexcept;
  NoiseCovariance(const NoiseCovariance& other);

  const SpaceTimeGrid& grid() const { return grid_; }
  const CovarianceSpec& spec() const { return spec_; }

  /// Entry C_ik.
  double entry(int i, int k) const;
  /// Circulant eigenvalues of C (periodic grids only).
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }

  void apply(std::span<const double> v, std::span<double> out);
  /// sum_i sum_k a_i C_ik b_k dx^2, symmetric in (a, b) to the last bit.
  double slice_inner(std::span<const double> a, std::span<const double> b);
  /// out = C^{1/2} w, i.e. a sample with covariance C when w is standard normal.
  void color(std::span<const double> w, std::span<double> out);

 private:
  void build_periodic();
  void build_truncated();

  SpaceTimeGrid grid_;
  CovarianceSpec spec_;
  std::vector<double> first_row_;
  std::vector<double> eigenvalues_;
  std::vector<double> sqrt_eigenvalues_;
  std::vector<double> dense_;     // C, row-major (truncated colored)
  std::vector<double> cholesky_;  // lower factor L with C = L L^T
  std::unique_ptr<detail::RealFft> fft_;
  std::vector<std::complex<double>> spectrum_a_;
  std::vector<double> scratch_;
};

/// Gaussian increments W([t_k, t_{k+1}) x dx) / dx on every grid cell; each
/// slice has covariance dt * C and slices are independent.
struct NoisePath {
  SpaceTimeGrid grid;
  SliceArray increments;  // n_t slices
  std::uint64_t seed = 0;
};

/// Deterministic given (grid, spec, seed).
NoisePath sample_noise(const SpaceTimeGrid& grid, NoiseCovariance& cov, std::uint64_t seed);
NoisePath sample_noise(const SpaceTimeGrid& grid, const CovarianceSpec& spec, std::uint64_t seed);

/// Element h(r, z) of the Cameron-Martin space, stored per time cell (n_t slices).
class CameronMartinElement : public SliceArray {
 public:
  CameronMartinElement() = default;
  explicit CameronMartinElement(const SpaceTimeGrid& grid) : SliceArray(grid, grid.n_t()) {}
};

/// <phi, psi>_{H_T} = sum_k dt sum_i sum_j phi psi C dx^2.
double ht_inner(const CameronMartinElement& phi, const CameronMartinElement& psi, NoiseCovariance& cov);

/// Wiener integral sum_k sum_i phi(t_k, x_i) dW_k(x_i) dx of a deterministic integrand.
double wiener_integral(const CameronMartinElement& phi, const NoisePath& path);

/// The grid counterpart of q_lambda: sum over m = 1..lag_steps of
/// dt * <G_h(m dt, x0 - .), G_h(m dt, x0 - .)> with the discrete heat kernel.
double grid_q_lambda(const SpaceTimeGrid& grid, NoiseCovariance& cov, int lag_steps);

/// Independent sub-seed for path `index` (splitmix64 finalizer applied to
/// base + (index + 1) * golden gamma).
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index);

// Binary slice files: little-endian header {"SPDN", u32 version, u32 n_slices,
// u32 n_x, u64 seed} followed by n_slices * n_x little-endian f64 values in time order.
inline constexpr std::uint32_t kSliceFileVersion = 1;

struct SliceFileHeader {
  std::uint32_t version = kSliceFileVersion;
  std::uint32_t n_slices = 0;
  std::uint32_t n_x = 0;
  std::uint64_t seed = 0;
};

void write_slices(const std::filesystem::path& file, const SliceArray& slices, std::uint64_t seed);
/// Reads header and values; throws IoError on malformed files.
SliceFileHeader read_slices(const std::filesystem::path& file, std::vector<double>& values);
NoisePath read_noise_path(const std::filesystem::path& file, const SpaceTimeGrid& grid);

}  // namespace spdelab
