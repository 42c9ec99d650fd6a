#pragma once

// Functions and kernels on [0,1] sampled on a p-point midpoint grid.
//
// Every integral in the library is the equal-weight midpoint rule
//   \int_0^1 f  ~  (1/p) sum_i f(t_i),   t_i = (2i - 1) / (2p).
// With this rule the cosine basis 1, sqrt(2) cos(j pi t), j < p, is exactly
// orthonormal, so discretization never leaks into estimator comparisons.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flr/error.hpp"

namespace flr {

inline constexpr std::size_t kDefaultGridSize = 50;

class Grid {
 public:
  explicit Grid(std::size_t p = kDefaultGridSize) : p_(p) {
    if (p < 2) throw Error(ErrorKind::parameter, "grid needs at least 2 points, got " + std::to_string(p));
  }

  std::size_t size() const noexcept { return p_; }
  double weight() const noexcept { return 1.0 / static_cast<double>(p_); }

  /// t_i for zero-based i, i.e. (2i + 1) / (2p).
  double point(std::size_t i) const noexcept {
    return (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(p_));
  }

  Eigen::VectorXd points() const {
    Eigen::VectorXd t(static_cast<Eigen::Index>(p_));
    for (std::size_t i = 0; i < p_; ++i) t[static_cast<Eigen::Index>(i)] = point(i);
    return t;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t p_;
};

namespace detail {

inline void require_same_grid(const Grid& a, const Grid& b, const char* op) {
  if (a != b) {
    throw Error(ErrorKind::dimension, std::string(op) + ": grid mismatch (p = " + std::to_string(a.size()) +
                                          " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace detail

/// A real function on [0,1] represented by its values at the grid points.
class GridFunction {
 public:
  explicit GridFunction(const Grid& grid) : grid_(grid), values_(Eigen::VectorXd::Zero(dim())) {}

  GridFunction(const Grid& grid, Eigen::VectorXd values) : grid_(grid), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != grid_.size()) {
      throw Error(ErrorKind::dimension, "grid function has " + std::to_string(values_.size()) +
                                            " values on a " + std::to_string(grid_.size()) + "-point grid");
    }
    if (!values_.allFinite()) throw Error(ErrorKind::invariant, "grid function has non-finite values");
  }

  GridFunction(const Grid& grid, std::span<const double> values)
      : GridFunction(grid, Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()))) {}

  /// Samples f at every grid point.
  template <typename F>
  static GridFunction sample(const Grid& grid, F&& f) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i) v[static_cast<Eigen::Index>(i)] = f(grid.point(i));
    return GridFunction(grid, std::move(v));
  }

  static GridFunction constant(const Grid& grid, double c) {
    return GridFunction(grid, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid.size()), c));
  }

  const Grid& grid() const noexcept { return grid_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return grid_.size(); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

  GridFunction& operator+=(const GridFunction& o) {
    detail::require_same_grid(grid_, o.grid_, "operator+=");
    values_ += o.values_;
    return *this;
  }
  GridFunction& operator-=(const GridFunction& o) {
    detail::require_same_grid(grid_, o.grid_, "operator-=");
    values_ -= o.values_;
    return *this;
  }
  GridFunction& operator*=(double s) {
    values_ *= s;
    return *this;
  }

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(double s, GridFunction f) { return f *= s; }
  friend GridFunction operator-(GridFunction f) { return f *= -1.0; }

 private:
  Eigen::Index dim() const { return static_cast<Eigen::Index>(grid_.size()); }

  Grid grid_;
  Eigen::VectorXd values_;
};

/// A symmetric function of two variables, stored densely as its p x p grid values.
class SymmetricKernel {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;

  explicit SymmetricKernel(const Grid& grid)
      : grid_(grid), values_(Eigen::MatrixXd::Zero(dim(), dim())) {}

  SymmetricKernel(const Grid& grid, Eigen::MatrixXd values) : grid_(grid), values_(std::move(values)) {
    if (values_.rows() != dim() || values_.cols() != dim()) {
      throw Error(ErrorKind::dimension, "kernel is " + std::to_string(values_.rows()) + "x" +
                                            std::to_string(values_.cols()) + " on a " +
                                            std::to_string(grid_.size()) + "-point grid");
    }
    if (!values_.allFinite()) throw Error(ErrorKind::invariant, "kernel has non-finite values");
    const double scale = values_.cwiseAbs().maxCoeff();
    const double asym = (values_ - values_.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTolerance * scale) {
      throw Error(ErrorKind::invariant, "kernel is not symmetric (max asymmetry " + std::to_string(asym) + ")");
    }
  }

  /// M(u,v) = f(u) f(v). A projector when f has unit norm.
  static SymmetricKernel outer(const GridFunction& f) { return SymmetricKernel(f.grid(), f.values() * f.values().transpose()); }

  static SymmetricKernel constant(const Grid& grid, double c) {
    return SymmetricKernel(grid, Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(grid.size()),
                                                           static_cast<Eigen::Index>(grid.size()), c));
  }

  const Grid& grid() const noexcept { return grid_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return grid_.size(); }

  SymmetricKernel& operator+=(const SymmetricKernel& o) {
    detail::require_same_grid(grid_, o.grid_, "operator+=");
    values_ += o.values_;
    return *this;
  }
  SymmetricKernel& operator-=(const SymmetricKernel& o) {
    detail::require_same_grid(grid_, o.grid_, "operator-=");
    values_ -= o.values_;
    return *this;
  }
  SymmetricKernel& operator*=(double s) {
    values_ *= s;
    return *this;
  }

  friend SymmetricKernel operator+(SymmetricKernel a, const SymmetricKernel& b) { return a += b; }
  friend SymmetricKernel operator-(SymmetricKernel a, const SymmetricKernel& b) { return a -= b; }
  friend SymmetricKernel operator*(double s, SymmetricKernel m) { return m *= s; }

 private:
  Eigen::Index dim() const { return static_cast<Eigen::Index>(grid_.size()); }

  Grid grid_;
  Eigen::MatrixXd values_;
};

/// Quadrature approximation of \int f g.
inline double inner_product(const GridFunction& f, const GridFunction& g) {
  detail::require_same_grid(f.grid(), g.grid(), "inner_product");
  return f.values().dot(g.values()) * f.grid().weight();
}

/// (M f)(u) = \int M(u,v) f(v) dv.
inline GridFunction apply_kernel(const SymmetricKernel& m, const GridFunction& f) {
  detail::require_same_grid(m.grid(), f.grid(), "apply_kernel");
  return GridFunction(f.grid(), (m.values() * f.values()) * f.grid().weight());
}

/// Hilbert-Schmidt norm (\iint M^2)^{1/2}.
inline double hs_norm(const SymmetricKernel& m) { return m.values().norm() * m.grid().weight(); }

inline double l2_distance_sq(const GridFunction& f, const GridFunction& g) {
  detail::require_same_grid(f.grid(), g.grid(), "l2_distance_sq");
  return (f.values() - g.values()).squaredNorm() * f.grid().weight();
}

inline double l2_norm(const GridFunction& f) { return std::sqrt(f.values().squaredNorm() * f.grid().weight()); }

}  // namespace flr
