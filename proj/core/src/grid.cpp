#include "spdelab/grid.hpp"

#include <algorithm>
#include <cmath>

namespace spdelab {

std::string to_string(Boundary b) {
  return b == Boundary::periodic ? "periodic" : "truncated-absorbing";
}

Boundary boundary_from_string(const std::string& name) {
  if (name == "periodic") return Boundary::periodic;
  if (name == "truncated-absorbing" || name == "truncated") return Boundary::truncated_absorbing;
  throw std::invalid_argument("unknown boundary '" + name + "'");
}

namespace {
bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }
}  // namespace

SpaceTimeGrid::SpaceTimeGrid(double t_max, int n_t, double half_width, int n_x, int dim,
                             Boundary boundary)
    : t_max_(t_max), n_t_(n_t), half_width_(half_width), n_x_(n_x), dim_(dim), boundary_(boundary) {
  if (!(t_max > 0.0) || n_t <= 0) throw std::invalid_argument("grid: need t_max > 0 and n_t > 0");
  if (!(half_width > 0.0) || n_x <= 1) throw std::invalid_argument("grid: need half_width > 0 and n_x > 1");
  if (dim < 1) throw std::invalid_argument("grid: dim must be >= 1");
  if (boundary == Boundary::periodic && !is_power_of_two(n_x))
    throw std::invalid_argument("grid: n_x must be a power of two for the periodic boundary");
}

std::size_t SpaceTimeGrid::points_per_slice() const {
  std::size_t n = 1;
  for (int d = 0; d < dim_; ++d) n *= static_cast<std::size_t>(n_x_);
  return n;
}

int SpaceTimeGrid::time_index(double t, double rel_tol) const {
  const double k = t / dt();
  const double r = std::round(k);
  if (r < 0 || r > n_t_ || std::abs(k - r) > rel_tol * std::max(1.0, std::abs(k))) return -1;
  return static_cast<int>(r);
}

int SpaceTimeGrid::space_index(double x, double rel_tol) const {
  const double k = (x + half_width_) / dx();
  const double r = std::round(k);
  if (r < 0 || r >= n_x_ || std::abs(k - r) > rel_tol * std::max(1.0, std::abs(k))) return -1;
  return static_cast<int>(r);
}

SpaceTimeGrid SpaceTimeGrid::with_steps(int n_t) const {
  return SpaceTimeGrid(dt() * n_t, n_t, half_width_, n_x_, dim_, boundary_);
}

SliceArray::SliceArray(const SpaceTimeGrid& grid, int n_slices, double fill)
    : grid_(grid),
      n_slices_(n_slices),
      slice_size_(grid.points_per_slice()),
      values_(static_cast<std::size_t>(n_slices) * grid.points_per_slice(), fill) {}

bool SliceArray::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

bool SliceArray::same_shape(const SliceArray& other) const {
  return grid_ == other.grid_ && n_slices_ == other.n_slices_;
}

void require_same_shape(const SliceArray& a, const SliceArray& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

}  // namespace spdelab
