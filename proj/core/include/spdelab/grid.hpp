#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spdelab {

enum class Boundary { periodic, truncated_absorbing };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& name);

/// Uniform discretization of [0, T] x [-L, L)^dim.
///
/// Time nodes are t_k = k * dt for k = 0..n_t. Spatial nodes are
/// x_i = -L + i * dx for i = 0..n_x-1, so the right end point +L is the
/// periodic image of -L and is not stored.
class SpaceTimeGrid {
 public:
  SpaceTimeGrid() = default;
  SpaceTimeGrid(double t_max, int n_t, double half_width, int n_x, int dim = 1,
                Boundary boundary = Boundary::periodic);

  double t_max() const { return t_max_; }
  int n_t() const { return n_t_; }
  double half_width() const { return half_width_; }
  int n_x() const { return n_x_; }
  int dim() const { return dim_; }
  Boundary boundary() const { return boundary_; }

  double dt() const { return t_max_ / n_t_; }
  double dx() const { return 2.0 * half_width_ / n_x_; }
  double t(int k) const { return k * dt(); }
  double x(int i) const { return -half_width_ + i * dx(); }

  /// Number of spatial values per time slice (n_x^dim).
  std::size_t points_per_slice() const;

  /// Index of the time node equal to `t`, or -1 when `t` is not a node.
  int time_index(double t, double rel_tol = 1e-9) const;
  /// Index of the spatial node equal to `x`, or -1 when `x` is not a node.
  int space_index(double x, double rel_tol = 1e-9) const;

  /// Same discretization with a different time horizon (same dt).
  SpaceTimeGrid with_steps(int n_t) const;

  friend bool operator==(const SpaceTimeGrid&, const SpaceTimeGrid&) = default;

 private:
  double t_max_ = 1.0;
  int n_t_ = 1;
  double half_width_ = 1.0;
  int n_x_ = 2;
  int dim_ = 1;
  Boundary boundary_ = Boundary::periodic;
};

/// Row-major stack of spatial slices sharing one grid.
///
/// A RandomField holds n_t + 1 slices (one per time node); noise increments
/// and Cameron-Martin elements hold n_t slices (one per time cell
/// [t_k, t_{k+1})).
class SliceArray {
 public:
  SliceArray() = default;
  SliceArray(const SpaceTimeGrid& grid, int n_slices, double fill = 0.0);

  const SpaceTimeGrid& grid() const { return grid_; }
  int n_slices() const { return n_slices_; }
  std::size_t slice_size() const { return slice_size_; }

  std::span<double> slice(int k) {
    return {values_.data() + static_cast<std::size_t>(k) * slice_size_, slice_size_};
  }
  std::span<const double> slice(int k) const {
    return {values_.data() + static_cast<std::size_t>(k) * slice_size_, slice_size_};
  }

  double& operator()(int k, std::size_t i) { return values_[k * slice_size_ + i]; }
  double operator()(int k, std::size_t i) const { return values_[k * slice_size_ + i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool all_finite() const;
  bool same_shape(const SliceArray& other) const;

 private:
  SpaceTimeGrid grid_;
  int n_slices_ = 0;
  std::size_t slice_size_ = 0;
  std::vector<double> values_;
};

/// Scalar field sampled at every time node of the grid.
class RandomField : public SliceArray {
 public:
  RandomField() = default;
  explicit RandomField(const SpaceTimeGrid& grid, double fill = 0.0)
      : SliceArray(grid, grid.n_t() + 1, fill) {}
};

/// Throws std::invalid_argument naming `what` when the shapes differ.
void require_same_shape(const SliceArray& a, const SliceArray& b, const char* what);

}  // namespace spdelab
