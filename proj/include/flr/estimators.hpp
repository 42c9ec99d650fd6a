#pragma once

// Slope estimators for Y = a + \int b X + eps.
//
// Both estimators start from the centered moments
//   K_hat(u,v) = n^{-1} sum_i (X_i(u) - X_bar(u)) (X_i(v) - X_bar(v)),
//   g_hat(u)   = n^{-1} sum_i (Y_i - Y_bar) (X_i(u) - X_bar(u)),
// and invert K_hat b = g_hat either on the leading m eigenfunctions (spectral
// cutoff) or through (K_hat + rho I)^{-1} (ridge).

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flr/error.hpp"
#include "flr/grid.hpp"
#include "flr/spectral.hpp"

namespace flr {

struct Dataset {
  Grid grid;
  std::vector<GridFunction> x;
  std::vector<double> y;

  Dataset(const Grid& g, std::vector<GridFunction> xs, std::vector<double> ys)
      : grid(g), x(std::move(xs)), y(std::move(ys)) {
    if (x.size() != y.size()) {
      throw Error(ErrorKind::dimension, "dataset has " + std::to_string(x.size()) + " curves but " +
                                            std::to_string(y.size()) + " responses");
    }
    if (x.size() < 2) throw Error(ErrorKind::insufficient_data, "dataset needs at least 2 observations");
    for (const auto& xi : x) detail::require_same_grid(grid, xi.grid(), "Dataset");
    for (double yi : y) {
      if (!std::isfinite(yi)) throw Error(ErrorKind::invariant, "dataset has a non-finite response");
    }
  }

  std::size_t size() const noexcept { return y.size(); }
};

struct CenteredMoments {
  GridFunction x_bar;
  double y_bar = 0.0;
  SymmetricKernel k_hat;
  GridFunction g_hat;
};

struct Method {
  enum class Kind { pca, ridge };
  Kind kind = Kind::pca;
  double parameter = 1.0;  // m for pca, rho for ridge

  static Method pca(std::size_t m) { return {Kind::pca, static_cast<double>(m)}; }
  static Method ridge(double rho) { return {Kind::ridge, rho}; }

  std::string name() const { return kind == Kind::pca ? "pca" : "ridge"; }
};

struct FittedModel {
  GridFunction slope;
  double intercept = 0.0;
  Method method;
  std::optional<EigenSystem> spectrum_used;
};

/// Relative cutoff below which kappa_hat_j is treated as zero by the spectral-cutoff estimator.
inline constexpr double kUsableRankThreshold = 1e-10;

inline CenteredMoments compute_moments(const Dataset& data) {
  const Grid& grid = data.grid;
  const auto p = static_cast<Eigen::Index>(grid.size());
  const double inv_n = 1.0 / static_cast<double>(data.size());

  Eigen::VectorXd x_bar = Eigen::VectorXd::Zero(p);
  double y_bar = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    x_bar += data.x[i].values();
    y_bar += data.y[i];
  }
  x_bar *= inv_n;
  y_bar *= inv_n;

  // Accumulate both triangles from the same products so K_hat is exactly symmetric.
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd c(p);
  for (std::size_t i = 0; i < data.size(); ++i) {
    c = data.x[i].values() - x_bar;
    for (Eigen::Index v = 0; v < p; ++v) {
      for (Eigen::Index u = v; u < p; ++u) k(u, v) += c[u] * c[v];
    }
    g += (data.y[i] - y_bar) * c;
  }
  for (Eigen::Index v = 0; v < p; ++v) {
    for (Eigen::Index u = v; u < p; ++u) {
      k(u, v) *= inv_n;
      k(v, u) = k(u, v);
    }
  }
  g *= inv_n;
  return {GridFunction(grid, std::move(x_bar)), y_bar, SymmetricKernel(grid, std::move(k)),
          GridFunction(grid, std::move(g))};
}

/// Number of leading kappa_hat_j strictly above kUsableRankThreshold * kappa_hat_1 and not numerically null.
inline std::size_t usable_rank(const EigenSystem& sys) {
  if (sys.size() == 0 || !(sys.eigenvalue(1) > 0.0)) return 0;
  const double cutoff = kUsableRankThreshold * sys.eigenvalue(1);
  std::size_t r = 0;
  while (r < sys.size() && sys.eigenvalue(r + 1) > cutoff && !sys.is_numerically_null(r + 1)) ++r;
  return r;
}

/// a_hat = n^{-1} sum_i (Y_i - \int slope X_i).
inline double estimate_intercept(const GridFunction& slope, const Dataset& data) {
  detail::require_same_grid(slope.grid(), data.grid, "estimate_intercept");
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) sum += data.y[i] - inner_product(slope, data.x[i]);
  return sum / static_cast<double>(data.size());
}

/// Same value as estimate_intercept, written through the sample means: Y_bar - \int slope X_bar.
inline double intercept_from_moments(const GridFunction& slope, const CenteredMoments& moments) {
  return moments.y_bar - inner_product(slope, moments.x_bar);
}

/// Spectral-cutoff slope sum_{j<=m} (g_hat_j / kappa_hat_j) phi_hat_j on a precomputed spectrum of K_hat.
inline GridFunction pca_slope(const CenteredMoments& moments, const EigenSystem& spectrum, std::size_t m) {
  const std::size_t rank = usable_rank(spectrum);
  if (m < 1 || m > rank) {
    throw Error(ErrorKind::rank, "pca: m = " + std::to_string(m) + " is outside the usable rank; largest admissible m is " +
                                     std::to_string(rank));
  }
  GridFunction slope(moments.g_hat.grid());
  for (std::size_t j = 1; j <= m; ++j) {
    const GridFunction& phi = spectrum.eigenfunction(j);
    slope += (inner_product(moments.g_hat, phi) / spectrum.eigenvalue(j)) * phi;
  }
  return slope;
}

inline FittedModel pca_fit(const CenteredMoments& moments, const EigenSystem& spectrum, std::size_t m) {
  GridFunction slope = pca_slope(moments, spectrum, m);
  const double a = intercept_from_moments(slope, moments);
  return {std::move(slope), a, Method::pca(m), spectrum};
}

inline FittedModel pca_fit(const CenteredMoments& moments, std::size_t m) {
  return pca_fit(moments, eigendecompose(moments.k_hat), m);
}

enum class RidgeSolver {
  linear_system,    // (K_hat / p + rho Id) b = g_hat
  spectral_filter,  // sum_j g_hat_j / (kappa_hat_j + rho) phi_hat_j over all p eigenpairs
};

namespace detail {

inline void require_positive_ridge(double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw Error(ErrorKind::parameter, "ridge: rho must be positive and finite, got " + std::to_string(rho));
  }
}

}  // namespace detail

inline GridFunction ridge_slope_linear(const CenteredMoments& moments, double rho) {
  detail::require_positive_ridge(rho);
  const Grid& grid = moments.k_hat.grid();
  const auto p = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd a = moments.k_hat.values() * grid.weight();
  a.diagonal().array() += rho;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw Error(ErrorKind::numerical, "ridge: system matrix is not positive definite");
  }
  Eigen::VectorXd b = ldlt.solve(moments.g_hat.values());
  if (!b.allFinite() || b.size() != p) throw Error(ErrorKind::numerical, "ridge: solve produced non-finite values");
  return GridFunction(grid, std::move(b));
}

inline GridFunction ridge_slope_spectral(const CenteredMoments& moments, const EigenSystem& spectrum, double rho) {
  detail::require_positive_ridge(rho);
  GridFunction slope(moments.g_hat.grid());
  for (std::size_t j = 1; j <= spectrum.size(); ++j) {
    const GridFunction& phi = spectrum.eigenfunction(j);
    slope += (inner_product(moments.g_hat, phi) / (spectrum.clamped_eigenvalue(j) + rho)) * phi;
  }
  return slope;
}

/// Ridge fit through the linear system; spectrum_used is left empty.
inline FittedModel ridge_fit(const CenteredMoments& moments, double rho) {
  GridFunction slope = ridge_slope_linear(moments, rho);
  const double a = intercept_from_moments(slope, moments);
  return {std::move(slope), a, Method::ridge(rho), std::nullopt};
}

/// Ridge fit through the spectral filter on a precomputed spectrum of K_hat.
inline FittedModel ridge_fit(const CenteredMoments& moments, const EigenSystem& spectrum, double rho) {
  GridFunction slope = ridge_slope_spectral(moments, spectrum, rho);
  const double a = intercept_from_moments(slope, moments);
  return {std::move(slope), a, Method::ridge(rho), spectrum};
}

inline double predict(const FittedModel& model, const GridFunction& x_new) {
  return model.intercept + inner_product(model.slope, x_new);
}

}  // namespace flr
