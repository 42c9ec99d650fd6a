#pragma once

// Monte Carlo harness: integrated squared bias, integrated variance and MISE of
// both estimators over replications, oracle choice of m and rho, and log-log
// rate fits across sample sizes.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "flr/error.hpp"
#include "flr/estimators.hpp"
#include "flr/grid.hpp"
#include "flr/rng.hpp"
#include "flr/simulation.hpp"
#include "flr/spectral.hpp"

namespace flr {

struct CandidateStats {
  double parameter = 0.0;  // m or rho
  double bias2 = 0.0;
  double var = 0.0;
  double mise = 0.0;
};

struct McResult {
  SimConfig config;
  std::size_t replications = 0;
  std::size_t m_star = 0;
  double rho_star = 0.0;
  double bias2_pca = 0.0, bias2_ridge = 0.0;
  double var_pca = 0.0, var_ridge = 0.0;
  double mise_pca = 0.0, mise_ridge = 0.0;
  std::vector<std::size_t> excluded_m;  // cutoffs above the usable rank in some replication
  std::vector<CandidateStats> pca_profile;
  std::vector<CandidateStats> ridge_profile;
};

inline std::vector<std::size_t> default_m_grid() {
  std::vector<std::size_t> g;
  for (std::size_t m = 1; m <= 20; ++m) g.push_back(m);
  return g;
}

/// count points log-spaced over [lo, hi], endpoints included.
inline std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw Error(ErrorKind::parameter, "log_spaced: need 0 < lo <= hi, count >= 1");
  if (count == 1) return {lo};
  std::vector<double> g(count);
  const double a = std::log10(lo), b = std::log10(hi);
  for (std::size_t k = 0; k < count; ++k) {
    g[k] = std::pow(10.0, a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1));
  }
  return g;
}

inline std::vector<double> default_rho_grid() { return log_spaced(1e-6, 1.0, 25); }

/// Bias^2 = \int (mean - b)^2, Var = \int mean_r (est_r - mean)^2 (divisor R), MISE = mean_r \int (est_r - b)^2.
/// MISE is accumulated directly rather than as the sum, so Bias^2 + Var = MISE is a real check.
inline CandidateStats candidate_stats(std::span<const GridFunction> estimates, const GridFunction& truth) {
  if (estimates.empty()) throw Error(ErrorKind::parameter, "candidate_stats: no estimates");
  const double inv_r = 1.0 / static_cast<double>(estimates.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(truth.values().size());
  for (const auto& e : estimates) {
    detail::require_same_grid(e.grid(), truth.grid(), "candidate_stats");
    mean += e.values();
  }
  mean *= inv_r;
  const double w = truth.grid().weight();
  CandidateStats s;
  s.bias2 = (mean - truth.values()).squaredNorm() * w;
  for (const auto& e : estimates) {
    s.var += (e.values() - mean).squaredNorm() * w;
    s.mise += (e.values() - truth.values()).squaredNorm() * w;
  }
  s.var *= inv_r;
  s.mise *= inv_r;
  return s;
}

namespace detail {

inline std::size_t resolve_threads(std::size_t threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs body(r) for r in [0, count) on up to `threads` workers. The exception from the lowest failing r wins.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
  threads = std::min(resolve_threads(threads), std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = std::numeric_limits<std::size_t>::max();
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t r = next++; r < count; r = next++) {
      try {
        body(r);
      } catch (...) {
        std::lock_guard lock(mu);
        if (r < failed_at) {
          failed_at = r;
          failure = std::current_exception();
        }
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Smallest MISE; ties go to the smaller m.
inline const CandidateStats* best_pca(const std::vector<CandidateStats>& profile) {
  const CandidateStats* best = nullptr;
  for (const auto& c : profile) {
    if (!best || c.mise < best->mise || (c.mise == best->mise && c.parameter < best->parameter)) best = &c;
  }
  return best;
}

/// Smallest MISE; ties go to the larger rho.
inline const CandidateStats* best_ridge(const std::vector<CandidateStats>& profile) {
  const CandidateStats* best = nullptr;
  for (const auto& c : profile) {
    if (!best || c.mise < best->mise || (c.mise == best->mise && c.parameter > best->parameter)) best = &c;
  }
  return best;
}

/// Replication r draws from rng::child_seed(config.seed, r); every candidate m and rho is
/// evaluated on the same draws. Output is independent of `threads` (0 = all cores).
inline McResult mc_run(const SimConfig& config, std::size_t replications, std::vector<std::size_t> m_grid,
                       std::vector<double> rho_grid, std::size_t threads = 0) {
  config.validate();
  if (replications < 2) throw Error(ErrorKind::parameter, "mc_run: need at least 2 replications");
  if (m_grid.empty() || rho_grid.empty()) throw Error(ErrorKind::parameter, "mc_run: candidate grids must be nonempty");
  std::sort(m_grid.begin(), m_grid.end());
  m_grid.erase(std::unique(m_grid.begin(), m_grid.end()), m_grid.end());
  std::sort(rho_grid.begin(), rho_grid.end());
  rho_grid.erase(std::unique(rho_grid.begin(), rho_grid.end()), rho_grid.end());
  if (m_grid.front() < 1) throw Error(ErrorKind::parameter, "mc_run: m must be >= 1");
  if (!(rho_grid.front() > 0.0)) throw Error(ErrorKind::parameter, "mc_run: rho must be > 0");

  const TruthBundle truth = make_truth(config);
  const Grid grid(config.grid_size);
  const std::size_t nm = m_grid.size(), nr = rho_grid.size();
  std::vector<GridFunction> pca(replications * nm, GridFunction(grid));
  std::vector<GridFunction> ridge(replications * nr, GridFunction(grid));
  std::vector<std::size_t> rank(replications, 0);

  detail::parallel_for(replications, threads, [&](std::size_t r) {
    SimConfig rep = config;
    rep.seed = rng::child_seed(config.seed, r);
    const Dataset data = draw_dataset(rep, truth);
    const CenteredMoments moments = compute_moments(data);
    const EigenSystem spectrum = eigendecompose(moments.k_hat);
    rank[r] = usable_rank(spectrum);
    for (std::size_t c = 0; c < nm; ++c) {
      if (m_grid[c] <= rank[r]) pca[r * nm + c] = pca_slope(moments, spectrum, m_grid[c]);
    }
    for (std::size_t c = 0; c < nr; ++c) ridge[r * nr + c] = ridge_slope_spectral(moments, spectrum, rho_grid[c]);
  });

  McResult result;
  result.config = config;
  result.replications = replications;
  const std::size_t min_rank = *std::min_element(rank.begin(), rank.end());
  std::vector<GridFunction> column;
  column.reserve(replications);
  for (std::size_t c = 0; c < nm; ++c) {
    if (m_grid[c] > min_rank) {
      result.excluded_m.push_back(m_grid[c]);
      continue;
    }
    column.clear();
    for (std::size_t r = 0; r < replications; ++r) column.push_back(pca[r * nm + c]);
    CandidateStats s = candidate_stats(column, truth.b_true);
    s.parameter = static_cast<double>(m_grid[c]);
    result.pca_profile.push_back(s);
  }
  for (std::size_t c = 0; c < nr; ++c) {
    column.clear();
    for (std::size_t r = 0; r < replications; ++r) column.push_back(ridge[r * nr + c]);
    CandidateStats s = candidate_stats(column, truth.b_true);
    s.parameter = rho_grid[c];
    result.ridge_profile.push_back(s);
  }
  if (result.pca_profile.empty()) {
    throw Error(ErrorKind::rank, "mc_run: every candidate m exceeds the usable rank (smallest rank seen: " +
                                     std::to_string(min_rank) + ")");
  }

  const CandidateStats& bp = *best_pca(result.pca_profile);
  const CandidateStats& br = *best_ridge(result.ridge_profile);
  result.m_star = static_cast<std::size_t>(bp.parameter);
  result.rho_star = br.parameter;
  result.bias2_pca = bp.bias2;
  result.var_pca = bp.var;
  result.mise_pca = bp.mise;
  result.bias2_ridge = br.bias2;
  result.var_ridge = br.var;
  result.mise_ridge = br.mise;
  return result;
}

inline std::pair<std::size_t, double> oracle_tune(const SimConfig& config, std::size_t replications,
                                                  std::vector<std::size_t> m_grid, std::vector<double> rho_grid,
                                                  std::size_t threads = 0) {
  const McResult r = mc_run(config, replications, std::move(m_grid), std::move(rho_grid), threads);
  return {r.m_star, r.rho_star};
}

enum class Estimator { pca, ridge };

inline std::string_view to_string(Estimator e) { return e == Estimator::pca ? "pca" : "ridge"; }

struct RateFit {
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<double> sample_sizes;
  std::vector<double> mise_values;
  double fitted_slope = 0.0;
  double theoretical_slope = 0.0;
};

/// -(2 beta - 1) / (alpha + 2 beta): the log-log MISE slope predicted for either estimator.
inline double theoretical_rate(double alpha, double beta) { return -(2.0 * beta - 1.0) / (alpha + 2.0 * beta); }

/// Least-squares slope of log(MISE) on log(n) for the oracle-tuned estimator.
inline RateFit rate_fit(double alpha, double beta, Estimator estimator, std::span<const McResult> results) {
  if (results.size() < 3) throw Error(ErrorKind::parameter, "rate_fit: need at least 3 sample sizes");
  RateFit fit;
  fit.alpha = alpha;
  fit.beta = beta;
  fit.theoretical_slope = theoretical_rate(alpha, beta);
  for (const auto& r : results) {
    const double n = static_cast<double>(r.config.n);
    const double mise = estimator == Estimator::pca ? r.mise_pca : r.mise_ridge;
    if (!fit.sample_sizes.empty() && !(n > fit.sample_sizes.back())) {
      throw Error(ErrorKind::parameter, "rate_fit: sample sizes must be strictly increasing");
    }
    if (!(mise > 0.0)) throw Error(ErrorKind::numerical, "rate_fit: MISE must be positive to take logs");
    fit.sample_sizes.push_back(n);
    fit.mise_values.push_back(mise);
  }
  const auto k = static_cast<double>(results.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    mx += std::log(fit.sample_sizes[i]);
    my += std::log(fit.mise_values[i]);
  }
  mx /= k;
  my /= k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const double dx = std::log(fit.sample_sizes[i]) - mx;
    sxy += dx * (std::log(fit.mise_values[i]) - my);
    sxx += dx * dx;
  }
  fit.fitted_slope = sxy / sxx;
  return fit;
}

// Tables ---------------------------------------------------------------------

enum class TableFormat {
  tsv,   // full precision, machine readable
  text,  // aligned, three decimals
};

struct TableRow {
  double sigma_eps = 0.0;
  std::size_t n = 0;
  double alpha = 0.0;
  std::size_t m = 0;
  double rho = 0.0;
  double bias2_pca = 0.0, bias2_ridge = 0.0;
  double var_pca = 0.0, var_ridge = 0.0;
  double mise_pca = 0.0, mise_ridge = 0.0;

  friend bool operator==(const TableRow&, const TableRow&) = default;
};

inline TableRow to_row(const McResult& r) {
  return {r.config.sigma_eps, r.config.n, r.config.alpha, r.m_star,     r.rho_star,  r.bias2_pca,
          r.bias2_ridge,      r.var_pca,  r.var_ridge,    r.mise_pca,   r.mise_ridge};
}

inline constexpr const char* kTableColumns[] = {"sigma_eps", "n",           "alpha",   "m",         "rho",      "bias2_pca",
                                                "bias2_ridge", "var_pca", "var_ridge", "mise_pca", "mise_ridge"};

inline std::string emit_table(std::span<const McResult> results, TableFormat format) {
  for (const auto& r : results) {
    if (r.config.spacing != results.front().config.spacing) {
      throw Error(ErrorKind::usage, "emit_table: results mix well and closely spaced designs");
    }
  }
  std::ostringstream os;
  if (format == TableFormat::tsv) {
    for (std::size_t c = 0; c < std::size(kTableColumns); ++c) os << (c ? "\t" : "") << kTableColumns[c];
    os << '\n' << std::setprecision(17);
    for (const auto& res : results) {
      const TableRow r = to_row(res);
      os << r.sigma_eps << '\t' << r.n << '\t' << r.alpha << '\t' << r.m << '\t' << r.rho << '\t' << r.bias2_pca
         << '\t' << r.bias2_ridge << '\t' << r.var_pca << '\t' << r.var_ridge << '\t' << r.mise_pca << '\t'
         << r.mise_ridge << '\n';
    }
    return os.str();
  }
  os << std::left;
  for (const char* c : kTableColumns) os << std::setw(12) << c;
  os << '\n';
  for (const auto& res : results) {
    const TableRow r = to_row(res);
    os << std::setw(12) << r.sigma_eps << std::setw(12) << r.n << std::setw(12) << r.alpha << std::setw(12) << r.m
       << std::setw(12) << std::setprecision(3) << std::defaultfloat << r.rho << std::fixed << std::setprecision(3);
    for (double v : {r.bias2_pca, r.bias2_ridge, r.var_pca, r.var_ridge, r.mise_pca, r.mise_ridge}) {
      os << std::setw(12) << v;
    }
    os << std::defaultfloat << std::setprecision(6) << '\n';
  }
  return os.str();
}

/// Inverse of emit_table(..., TableFormat::tsv).
inline std::vector<TableRow> parse_table(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::data_format, "table: missing header");
  std::vector<TableRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    TableRow r;
    ls >> r.sigma_eps >> r.n >> r.alpha >> r.m >> r.rho >> r.bias2_pca >> r.bias2_ridge >> r.var_pca >> r.var_ridge >>
        r.mise_pca >> r.mise_ridge;
    if (!ls) throw Error(ErrorKind::data_format, "table: malformed row '" + line + "'");
    rows.push_back(r);
  }
  return rows;
}

/// Per-candidate profile for plotting: one row per (configuration, estimator, candidate).
inline void write_profile(std::ostream& os, std::span<const McResult> results) {
  const auto old_precision = os.precision(17);
  os << "sigma_eps\tn\talpha\testimator\tcandidate\tbias2\tvar\tmise\n";
  for (const auto& r : results) {
    auto emit = [&](std::string_view est, const std::vector<CandidateStats>& profile) {
      for (const auto& c : profile) {
        os << r.config.sigma_eps << '\t' << r.config.n << '\t' << r.config.alpha << '\t' << est << '\t' << c.parameter
           << '\t' << c.bias2 << '\t' << c.var << '\t' << c.mise << '\n';
      }
    };
    emit("pca", r.pca_profile);
    emit("ridge", r.ridge_profile);
  }
  os.precision(old_precision);
}

}  // namespace flr
