#pragma once

// Data-generating process of the cosine-basis simulation design:
//   X = sum_{j<=J} gamma_j Z_j phi_j,  Z_j ~ U[-sqrt(3), sqrt(3)],
//   Y = \int b X + eps,                 eps ~ N(0, sigma^2),  a = 0,
// with phi_1 = 1, phi_{j+1}(t) = sqrt(2) cos(j pi t), b_1 = 0.3, b_j = 4 (-1)^{j+1} j^{-2}.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flr/error.hpp"
#include "flr/estimators.hpp"
#include "flr/grid.hpp"
#include "flr/rng.hpp"

namespace flr {

enum class Spacing { well_spaced, closely_spaced };

inline std::string_view to_string(Spacing s) { return s == Spacing::well_spaced ? "well" : "closely"; }

inline Spacing parse_spacing(std::string_view s) {
  if (s == "well" || s == "well_spaced") return Spacing::well_spaced;
  if (s == "closely" || s == "closely_spaced") return Spacing::closely_spaced;
  throw Error(ErrorKind::usage, "unknown spacing '" + std::string(s) + "' (expected well or closely)");
}

struct SimConfig {
  std::size_t n = 100;
  double sigma_eps = 0.5;
  double alpha = 2.0;
  Spacing spacing = Spacing::well_spaced;
  std::size_t basis_size = 50;  // J
  std::size_t grid_size = kDefaultGridSize;
  std::uint64_t seed = 1;

  void validate() const {
    if (n < 2) throw Error(ErrorKind::parameter, "n must be at least 2");
    if (!(sigma_eps >= 0.0) || !std::isfinite(sigma_eps)) throw Error(ErrorKind::parameter, "sigma must be >= 0");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorKind::parameter, "alpha must be > 0");
    if (grid_size < 2) throw Error(ErrorKind::parameter, "grid size must be at least 2");
    if (basis_size < 1 || basis_size > grid_size) {
      throw Error(ErrorKind::parameter, "basis size J must lie in [1, p] = [1, " + std::to_string(grid_size) + "]");
    }
  }
};

/// phi_1 = 1, phi_{j+1}(t) = sqrt(2) cos(j pi t); j is one-based and at most p.
inline GridFunction basis(std::size_t j, const Grid& grid) {
  if (j < 1 || j > grid.size()) {
    throw Error(ErrorKind::parameter, "basis index " + std::to_string(j) + " outside [1, " +
                                          std::to_string(grid.size()) + "]");
  }
  if (j == 1) return GridFunction::constant(grid, 1.0);
  const double freq = static_cast<double>(j - 1) * std::numbers::pi;
  return GridFunction::sample(grid, [&](double t) { return std::numbers::sqrt2 * std::cos(freq * t); });
}

inline double slope_coefficient(std::size_t j) {
  if (j == 1) return 0.3;
  const double sign = (j % 2 == 0) ? -1.0 : 1.0;  // (-1)^{j+1}
  return 4.0 * sign / (static_cast<double>(j) * static_cast<double>(j));
}

inline GridFunction true_slope(const Grid& grid, std::size_t basis_size) {
  GridFunction b(grid);
  for (std::size_t j = 1; j <= basis_size; ++j) b += slope_coefficient(j) * basis(j, grid);
  return b;
}

/// gamma_1..gamma_J for either eigenvalue design.
inline std::vector<double> gamma_sequence(Spacing spacing, double alpha, std::size_t basis_size) {
  auto alternating = [](std::size_t j) { return (j % 2 == 0) ? -1.0 : 1.0; };  // (-1)^{j+1}
  std::vector<double> gamma(basis_size, 0.0);
  if (spacing == Spacing::well_spaced) {
    for (std::size_t j = 1; j <= basis_size; ++j) {
      gamma[j - 1] = alternating(j) * std::pow(static_cast<double>(j), -alpha / 2.0);
    }
    return gamma;
  }
  // Leading 1, a near-tied triple, then near-tied blocks of five: index 5 * block + k, k = 0..4.
  gamma[0] = 1.0;
  for (std::size_t j = 2; j <= std::min<std::size_t>(4, basis_size); ++j) {
    gamma[j - 1] = 0.2 * alternating(j) * (1.0 - 0.0001 * static_cast<double>(j));
  }
  for (std::size_t block = 1; 5 * block <= basis_size; ++block) {
    const double level = std::pow(5.0 * static_cast<double>(block), -alpha / 2.0);
    for (std::size_t k = 0; k <= 4 && 5 * block + k <= basis_size; ++k) {
      const std::size_t idx = 5 * block + k;
      gamma[idx - 1] = 0.2 * alternating(idx) * (level - 0.0001 * static_cast<double>(k));
    }
  }
  return gamma;
}

struct TruthBundle {
  GridFunction b_true;
  std::vector<double> gamma;
  SymmetricKernel k_true;
  std::vector<double> kappa_true;        // gamma_j^2 sorted descending
  std::vector<std::size_t> kappa_index;  // one-based basis index of each sorted kappa
  std::vector<GridFunction> basis_functions;
};

inline TruthBundle make_truth(const SimConfig& config) {
  config.validate();
  const Grid grid(config.grid_size);
  const std::size_t J = config.basis_size;
  std::vector<GridFunction> phis;
  phis.reserve(J);
  for (std::size_t j = 1; j <= J; ++j) phis.push_back(basis(j, grid));

  std::vector<double> gamma = gamma_sequence(config.spacing, config.alpha, J);
  const auto p = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t j = 0; j < J; ++j) k += gamma[j] * gamma[j] * (phis[j].values() * phis[j].values().transpose());
  k = 0.5 * (k + k.transpose()).eval();

  std::vector<std::size_t> order(J);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return gamma[a] * gamma[a] > gamma[b] * gamma[b]; });
  std::vector<double> kappa;
  std::vector<std::size_t> index;
  for (std::size_t j : order) {
    kappa.push_back(gamma[j] * gamma[j]);
    index.push_back(j + 1);
  }

  return {true_slope(grid, J), std::move(gamma), SymmetricKernel(grid, std::move(k)), std::move(kappa),
          std::move(index), std::move(phis)};
}

/// Draws n observations. Order within the stream: for each i, Z_{i1..iJ} then eps_i.
/// eps_i is drawn even when sigma = 0 so streams stay aligned across noise levels.
inline Dataset draw_dataset(const SimConfig& config, const TruthBundle& truth) {
  config.validate();
  const Grid grid(config.grid_size);
  const std::size_t J = config.basis_size;
  const double root3 = std::sqrt(3.0);
  rng::Stream stream(config.seed);

  std::vector<GridFunction> xs;
  std::vector<double> ys;
  xs.reserve(config.n);
  ys.reserve(config.n);
  Eigen::VectorXd x(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < config.n; ++i) {
    x.setZero();
    for (std::size_t j = 0; j < J; ++j) {
      const double z = stream.uniform(-root3, root3);
      x += (truth.gamma[j] * z) * truth.basis_functions[j].values();
    }
    const double eps = config.sigma_eps * stream.normal();
    GridFunction xi(grid, x);
    ys.push_back(inner_product(truth.b_true, xi) + eps);
    xs.push_back(std::move(xi));
  }
  return Dataset(grid, std::move(xs), std::move(ys));
}

inline std::pair<Dataset, TruthBundle> draw_dataset(const SimConfig& config) {
  TruthBundle truth = make_truth(config);
  Dataset data = draw_dataset(config, truth);
  return {std::move(data), std::move(truth)};
}

}  // namespace flr
