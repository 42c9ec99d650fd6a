#pragma once

// Eigendecomposition of symmetric integral operators on the midpoint grid and
// numerical checks of the classical perturbation bounds relating two operators.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "flr/error.hpp"
#include "flr/grid.hpp"

namespace flr {

/// Eigenpairs (kappa_j, phi_j) of f -> \int M(., v) f(v) dv, sorted so kappa_1 >= kappa_2 >= ...
/// Eigenfunctions are orthonormal under the grid inner product.
struct EigenSystem {
  static constexpr double kNullRelativeThreshold = 1e-12;

  Grid grid;
  Eigen::VectorXd eigenvalues;
  std::vector<GridFunction> eigenfunctions;

  std::size_t size() const noexcept { return eigenfunctions.size(); }

  /// kappa_j with a one-based index.
  double eigenvalue(std::size_t j) const { return eigenvalues[static_cast<Eigen::Index>(j - 1)]; }
  const GridFunction& eigenfunction(std::size_t j) const { return eigenfunctions.at(j - 1); }

  /// Negative rounding residue removed; what estimators divide by.
  double clamped_eigenvalue(std::size_t j) const { return std::max(eigenvalue(j), 0.0); }

  double null_threshold() const {
    const double top = size() == 0 ? 0.0 : eigenvalues[0];
    return kNullRelativeThreshold * std::max(top, 1.0);
  }

  bool is_numerically_null(std::size_t j) const { return eigenvalue(j) < null_threshold(); }
};

/// Sum_j kappa_j phi_j(u) phi_j(v).
inline SymmetricKernel reconstruct(const EigenSystem& sys) {
  const auto p = static_cast<Eigen::Index>(sys.grid.size());
  Eigen::MatrixXd basis(p, static_cast<Eigen::Index>(sys.size()));
  for (std::size_t j = 0; j < sys.size(); ++j) basis.col(static_cast<Eigen::Index>(j)) = sys.eigenfunctions[j].values();
  Eigen::MatrixXd m = basis * sys.eigenvalues.asDiagonal() * basis.transpose();
  m = 0.5 * (m + m.transpose()).eval();
  return SymmetricKernel(sys.grid, std::move(m));
}

/// Makes the largest-magnitude entry of every eigenfunction nonnegative (first index wins ties).
inline EigenSystem canonical_signs(EigenSystem sys) {
  for (auto& phi : sys.eigenfunctions) {
    Eigen::Index at = 0;
    phi.values().cwiseAbs().maxCoeff(&at);
    if (phi.values()[at] < 0.0) phi *= -1.0;
  }
  return sys;
}

/// Flips each eigenfunction so that \int phi_hat_j phi_j >= 0 against the reference system.
inline EigenSystem align_signs(EigenSystem sys, const EigenSystem& reference) {
  detail::require_same_grid(sys.grid, reference.grid, "align_signs");
  if (sys.size() != reference.size()) {
    throw Error(ErrorKind::dimension, "align_signs: " + std::to_string(sys.size()) + " eigenpairs vs " +
                                          std::to_string(reference.size()) + " in the reference");
  }
  for (std::size_t j = 0; j < sys.size(); ++j) {
    if (inner_product(sys.eigenfunctions[j], reference.eigenfunctions[j]) < 0.0) sys.eigenfunctions[j] *= -1.0;
  }
  return sys;
}

/// All p eigenpairs of the integral operator with kernel M, canonically signed.
///
/// The matrix problem is solved on M / p, so its eigenvalues are the operator
/// eigenvalues; eigenvectors are scaled by sqrt(p) to unit quadrature norm.
inline EigenSystem eigendecompose(const SymmetricKernel& m) {
  const Grid& grid = m.grid();
  const Eigen::MatrixXd a = m.values() * grid.weight();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::numerical, "eigensolver did not converge");

  const auto p = static_cast<Eigen::Index>(grid.size());
  const double scale = std::sqrt(static_cast<double>(grid.size()));
  EigenSystem sys{grid, Eigen::VectorXd(p), {}};
  sys.eigenfunctions.reserve(grid.size());
  // Eigen returns ascending order.
  for (Eigen::Index k = 0; k < p; ++k) {
    const Eigen::Index src = p - 1 - k;
    sys.eigenvalues[k] = solver.eigenvalues()[src];
    sys.eigenfunctions.emplace_back(grid, Eigen::VectorXd(solver.eigenvectors().col(src) * scale));
  }
  return canonical_signs(std::move(sys));
}

struct PerturbationEntry {
  std::size_t j = 0;
  double delta = 0.0;                   // min_{k<=j} (kappa_k - kappa_{k+1})
  double eigenfunction_distance = 0.0;  // ||phi_j - psi_j|| after sign alignment
  double eigenvalue_slack = 0.0;        // ||K - L|| - |kappa_j - lambda_j|
  double eigenfunction_slack = 0.0;     // sqrt(8) ||K - L|| - delta_j ||phi_j - psi_j||
};

struct PerturbationReport {
  double hs_gap = 0.0;          // ||K - L||
  double max_eigen_gap = 0.0;   // max_{j<=j_max} |kappa_j - lambda_j|
  double eigenvalue_slack = 0.0;  // hs_gap - max_eigen_gap
  std::vector<PerturbationEntry> per_index;

  double min_eigenfunction_slack() const {
    double s = std::numeric_limits<double>::infinity();
    for (const auto& e : per_index) s = std::min(s, e.eigenfunction_slack);
    return s;
  }
};

/// Evaluates both sides of
///   sup_j |kappa_j - lambda_j| <= ||K - L||,
///   sup_j delta_j ||phi_j - psi_j|| <= sqrt(8) ||K - L||
/// for j = 1..j_max, with psi_j signed so that \int psi_j phi_j >= 0.
inline PerturbationReport perturbation_report(const SymmetricKernel& k, const SymmetricKernel& l, std::size_t j_max) {
  detail::require_same_grid(k.grid(), l.grid(), "perturbation_report");
  const std::size_t p = k.grid().size();
  if (j_max < 1 || j_max >= p) {
    throw Error(ErrorKind::parameter, "perturbation_report: j_max must lie in [1, " + std::to_string(p - 1) + "]");
  }
  const EigenSystem ks = eigendecompose(k);
  const EigenSystem ls = align_signs(eigendecompose(l), ks);

  PerturbationReport report;
  report.hs_gap = hs_norm(k - l);
  double delta = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j <= j_max; ++j) {
    delta = std::min(delta, ks.eigenvalue(j) - ks.eigenvalue(j + 1));
    if (!(delta > 0.0)) {
      throw Error(ErrorKind::degenerate_spectrum,
                  "perturbation_report: reference spectrum is not distinct at index " + std::to_string(j));
    }
    PerturbationEntry e;
    e.j = j;
    e.delta = delta;
    e.eigenfunction_distance = std::sqrt(l2_distance_sq(ks.eigenfunction(j), ls.eigenfunction(j)));
    const double gap = std::abs(ks.eigenvalue(j) - ls.eigenvalue(j));
    e.eigenvalue_slack = report.hs_gap - gap;
    e.eigenfunction_slack = std::sqrt(8.0) * report.hs_gap - delta * e.eigenfunction_distance;
    report.max_eigen_gap = std::max(report.max_eigen_gap, gap);
    report.per_index.push_back(e);
  }
  report.eigenvalue_slack = report.hs_gap - report.max_eigen_gap;
  return report;
}

inline void write_tsv(std::ostream& os, const PerturbationReport& report) {
  const auto old_flags = os.flags();
  const auto old_precision = os.precision();
  os << std::setprecision(17);
  os << "# hs_gap=" << report.hs_gap << " max_eigen_gap=" << report.max_eigen_gap
     << " eigenvalue_slack=" << report.eigenvalue_slack << '\n';
  os << "j\tdelta\teigenfunction_distance\teigenvalue_slack\teigenfunction_slack\n";
  for (const auto& e : report.per_index) {
    os << e.j << '\t' << e.delta << '\t' << e.eigenfunction_distance << '\t' << e.eigenvalue_slack << '\t'
       << e.eigenfunction_slack << '\n';
  }
  os.flags(old_flags);
  os.precision(old_precision);
}

/// L2 norm of the gap between psi_j - phi_j and its resolvent expansion
///   sum_{k != j} (lambda_j - kappa_k)^{-1} phi_k \int (L - K) psi_j phi_k + phi_j \int (psi_j - phi_j) phi_j,
/// summed over every discrete eigenpair of K. Zero up to rounding in finite dimensions.
inline double resolvent_identity_residual(const SymmetricKernel& k, const SymmetricKernel& l, std::size_t j) {
  static constexpr double kMinSeparation = 1e-8;
  detail::require_same_grid(k.grid(), l.grid(), "resolvent_identity_residual");
  const std::size_t p = k.grid().size();
  if (j < 1 || j > p) throw Error(ErrorKind::parameter, "resolvent_identity_residual: index out of range");

  const EigenSystem ks = eigendecompose(k);
  const EigenSystem ls = align_signs(eigendecompose(l), ks);
  const double lambda = ls.eigenvalue(j);
  const GridFunction& psi = ls.eigenfunction(j);
  const GridFunction& phi = ks.eigenfunction(j);

  const GridFunction perturbed_psi = apply_kernel(l - k, psi);
  GridFunction expansion = inner_product(psi - phi, phi) * phi;
  for (std::size_t m = 1; m <= p; ++m) {
    if (m == j) continue;
    const double separation = lambda - ks.eigenvalue(m);
    if (std::abs(separation) < kMinSeparation) {
      throw Error(ErrorKind::near_degeneracy, "resolvent_identity_residual: lambda_" + std::to_string(j) +
                                                  " is within 1e-8 of kappa_" + std::to_string(m));
    }
    expansion += (inner_product(perturbed_psi, ks.eigenfunction(m)) / separation) * ks.eigenfunction(m);
  }
  return std::sqrt(l2_distance_sq(expansion, psi - phi));
}

}  // namespace flr
