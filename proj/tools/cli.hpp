#pragma once

// Command-line front end. Exit codes: 0 ok, 2 usage, 3 data format,
// 4 numeric or precondition failure, 5 i/o.

#include <CLI11.hpp>

#include <cstddef>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flr/error.hpp"
#include "flr/estimators.hpp"
#include "flr/evaluation.hpp"
#include "flr/io.hpp"
#include "flr/simulation.hpp"
#include "flr/spectral.hpp"

namespace flr::cli {

enum ExitCode : int { ok = 0, usage = 2, data_format = 3, numeric = 4, io_failure = 5 };

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return usage;
    case ErrorKind::data_format: return data_format;
    case ErrorKind::io: return io_failure;
    default: return numeric;
  }
}

namespace detail {

struct Output {
  std::string path;

  void write(const std::string& content, std::ostream& fallback) const {
    if (path.empty()) {
      fallback << content;
      fallback.flush();
    } else {
      io::write_file_atomic(path, content);
    }
  }
};

struct GridOptions {
  std::vector<std::size_t> m_grid = default_m_grid();
  std::vector<double> rho_grid;
  double rho_min = 1e-6;
  double rho_max = 1.0;
  std::size_t rho_count = 25;

  void add(CLI::App* cmd) {
    cmd->add_option("--m-grid", m_grid, "Candidate truncation points")->delimiter(',')->capture_default_str();
    cmd->add_option("--rho-grid", rho_grid, "Explicit candidate ridge values (overrides --rho-min/max/count)")
        ->delimiter(',');
    cmd->add_option("--rho-min", rho_min, "Smallest ridge candidate")->capture_default_str();
    cmd->add_option("--rho-max", rho_max, "Largest ridge candidate")->capture_default_str();
    cmd->add_option("--rho-count", rho_count, "Number of log-spaced ridge candidates")->capture_default_str();
  }

  std::vector<double> rhos() const { return rho_grid.empty() ? log_spaced(rho_min, rho_max, rho_count) : rho_grid; }

  void validate() const {
    if (m_grid.empty()) throw Error(ErrorKind::parameter, "--m-grid is empty");
    for (std::size_t m : m_grid) {
      if (m < 1) throw Error(ErrorKind::parameter, "--m-grid values must be >= 1");
    }
    for (double r : rhos()) {
      if (!(r > 0.0)) throw Error(ErrorKind::parameter, "ridge candidates must be > 0");
    }
  }
};

inline void require_reps(std::size_t reps) {
  if (reps < 2) throw Error(ErrorKind::parameter, "--reps must be at least 2");
}

}  // namespace detail

/// Runs one subcommand. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Functional linear regression: spectral-cutoff and ridge slope estimators", "flr"};
  app.require_subcommand(1);

  // simulate
  SimConfig sim;
  std::string spacing = "well";
  detail::Output sim_out;
  auto* simulate = app.add_subcommand("simulate", "Draw a dataset from the cosine-basis design");
  simulate->add_option("--n", sim.n, "Sample size")->required();
  simulate->add_option("--sigma", sim.sigma_eps, "Noise standard deviation")->required();
  simulate->add_option("--alpha", sim.alpha, "Eigenvalue decay exponent")->required();
  simulate->add_option("--spacing", spacing, "well | closely")->required();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--p", sim.grid_size, "Grid size")->capture_default_str();
  simulate->add_option("--J", sim.basis_size, "Basis terms")->capture_default_str();
  simulate->add_option("--out", sim_out.path, "Output CSV (default stdout)");

  // fit
  std::string data_path, method = "pca";
  std::optional<long long> fit_m;
  std::optional<double> fit_rho;
  detail::Output fit_out;
  auto* fit = app.add_subcommand("fit", "Fit a model to a dataset CSV");
  fit->add_option("--data", data_path, "Dataset CSV")->required();
  fit->add_option("--method", method, "pca | ridge")->required();
  fit->add_option("--m", fit_m, "Truncation point (pca)");
  fit->add_option("--rho", fit_rho, "Ridge parameter (ridge)");
  fit->add_option("--out", fit_out.path, "Model file (default stdout)");

  // predict
  std::string model_path, x_path;
  detail::Output pred_out;
  auto* predict_cmd = app.add_subcommand("predict", "Predict responses for curves in a CSV");
  predict_cmd->add_option("--model", model_path, "Model file")->required();
  predict_cmd->add_option("--data", x_path, "Curves CSV (y column optional)")->required();
  predict_cmd->add_option("--out", pred_out.path, "Predictions (default stdout)");

  // mc-table
  std::vector<double> sigmas{0.5}, alphas{2.0};
  std::vector<std::size_t> ns{100, 500};
  std::size_t reps = 200, threads = 0, p = kDefaultGridSize, basis_size = 50;
  std::uint64_t seed = 1;
  std::string format = "tsv", profile_path, mc_spacing = "well";
  detail::GridOptions grids;
  detail::Output mc_out;
  auto* mc = app.add_subcommand("mc-table", "Monte Carlo Bias^2 / Var / MISE table with oracle tuning");
  mc->add_option("--sigma", sigmas, "Noise levels")->delimiter(',')->capture_default_str();
  mc->add_option("--n", ns, "Sample sizes")->delimiter(',')->capture_default_str();
  mc->add_option("--alpha", alphas, "Decay exponents")->delimiter(',')->capture_default_str();
  mc->add_option("--spacing", mc_spacing, "well | closely")->capture_default_str();
  mc->add_option("--reps", reps, "Replications per configuration")->capture_default_str();
  mc->add_option("--seed", seed, "Master seed")->capture_default_str();
  mc->add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();
  mc->add_option("--format", format, "tsv | text")->capture_default_str();
  mc->add_option("--profile", profile_path, "Also write per-candidate MISE profile here");
  mc->add_option("--p", p, "Grid size")->capture_default_str();
  mc->add_option("--J", basis_size, "Basis terms")->capture_default_str();
  mc->add_option("--out", mc_out.path, "Table output (default stdout)");
  grids.add(mc);

  // rate-check
  double rate_alpha = 2.0, rate_beta = 2.0, rate_sigma = 0.5;
  std::vector<std::size_t> rate_ns{100, 200, 400, 800};
  std::string rate_spacing = "well";
  detail::GridOptions rate_grids;
  detail::Output rate_out;
  auto* rate = app.add_subcommand("rate-check", "Fit the log-log MISE slope across sample sizes");
  rate->add_option("--alpha", rate_alpha, "Decay exponent")->capture_default_str();
  rate->add_option("--beta", rate_beta, "Slope smoothness exponent")->capture_default_str();
  rate->add_option("--sigma", rate_sigma, "Noise standard deviation")->capture_default_str();
  rate->add_option("--n", rate_ns, "Sample sizes (at least 3, increasing)")->delimiter(',')->capture_default_str();
  rate->add_option("--spacing", rate_spacing, "well | closely")->capture_default_str();
  rate->add_option("--reps", reps, "Replications per sample size")->capture_default_str();
  rate->add_option("--seed", seed, "Master seed")->capture_default_str();
  rate->add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();
  rate->add_option("--out", rate_out.path, "Report output (default stdout)");
  rate_grids.add(rate);

  // diagnose
  SimConfig diag;
  std::string diag_spacing = "well";
  std::size_t j_max = 10;
  detail::Output diag_out;
  auto* diagnose = app.add_subcommand("diagnose", "Perturbation bounds for the true and empirical covariance");
  diagnose->add_option("--n", diag.n, "Sample size")->capture_default_str();
  diagnose->add_option("--alpha", diag.alpha, "Decay exponent")->capture_default_str();
  diagnose->add_option("--spacing", diag_spacing, "well | closely")->capture_default_str();
  diagnose->add_option("--seed", diag.seed, "Random seed")->capture_default_str();
  diagnose->add_option("--jmax", j_max, "Largest index checked")->capture_default_str();
  diagnose->add_option("--p", diag.grid_size, "Grid size")->capture_default_str();
  diagnose->add_option("--J", diag.basis_size, "Basis terms")->capture_default_str();
  diagnose->add_option("--out", diag_out.path, "Report output (default stdout)");

  std::vector<std::string> argv_store{"flr"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "flr: " << e.what() << '\n';
    return usage;
  }

  try {
    if (*simulate) {
      sim.spacing = parse_spacing(spacing);
      sim.validate();
      auto [data, truth] = draw_dataset(sim);
      std::ostringstream os;
      io::write_dataset_csv(os, data);
      sim_out.write(os.str(), out);
    } else if (*fit) {
      Method chosen;
      if (method == "pca") {
        if (!fit_m) throw Error(ErrorKind::usage, "fit --method pca requires --m");
        if (*fit_m < 1) throw Error(ErrorKind::parameter, "--m must be >= 1, got " + std::to_string(*fit_m));
        chosen = Method::pca(static_cast<std::size_t>(*fit_m));
      } else if (method == "ridge") {
        if (!fit_rho) throw Error(ErrorKind::usage, "fit --method ridge requires --rho");
        if (!(*fit_rho > 0.0)) throw Error(ErrorKind::parameter, "--rho must be > 0");
        chosen = Method::ridge(*fit_rho);
      } else {
        throw Error(ErrorKind::usage, "unknown method '" + method + "' (expected pca or ridge)");
      }
      std::istringstream in(io::read_file(data_path));
      const Dataset data = io::read_dataset_csv(in);
      const CenteredMoments moments = compute_moments(data);
      FittedModel model = chosen.kind == Method::Kind::pca
                              ? pca_fit(moments, static_cast<std::size_t>(chosen.parameter))
                              : ridge_fit(moments, chosen.parameter);
      model.intercept = estimate_intercept(model.slope, data);
      std::ostringstream os;
      io::write_model(os, model);
      fit_out.write(os.str(), out);
    } else if (*predict_cmd) {
      std::istringstream model_in(io::read_file(model_path));
      const FittedModel model = io::read_model(model_in);
      std::istringstream data_in(io::read_file(x_path));
      const io::CurveTable curves = io::read_curves_csv(data_in);
      std::ostringstream os;
      os.precision(17);
      for (const auto& x : curves.x) os << predict(model, x) << '\n';
      pred_out.write(os.str(), out);
    } else if (*mc) {
      const Spacing sp = parse_spacing(mc_spacing);
      TableFormat fmt;
      if (format == "tsv") fmt = TableFormat::tsv;
      else if (format == "text") fmt = TableFormat::text;
      else throw Error(ErrorKind::usage, "unknown format '" + format + "' (expected tsv or text)");
      detail::require_reps(reps);
      grids.validate();
      std::vector<SimConfig> configs;
      for (double s : sigmas) {
        for (std::size_t n : ns) {
          for (double a : alphas) {
            SimConfig c{n, s, a, sp, basis_size, p, seed};
            c.validate();
            configs.push_back(c);
          }
        }
      }
      std::vector<McResult> results;
      for (const auto& c : configs) results.push_back(mc_run(c, reps, grids.m_grid, grids.rhos(), threads));
      if (!profile_path.empty()) {
        std::ostringstream prof;
        write_profile(prof, results);
        io::write_file_atomic(profile_path, prof.str());
      }
      for (const auto& r : results) {
        if (!r.excluded_m.empty()) {
          err << "flr: n=" << r.config.n << " alpha=" << r.config.alpha << " sigma=" << r.config.sigma_eps
              << ": excluded " << r.excluded_m.size() << " m value(s) above the usable rank (smallest "
              << r.excluded_m.front() << ")\n";
        }
      }
      mc_out.write(emit_table(results, fmt), out);
    } else if (*rate) {
      const Spacing sp = parse_spacing(rate_spacing);
      detail::require_reps(reps);
      rate_grids.validate();
      if (rate_ns.size() < 3) throw Error(ErrorKind::parameter, "rate-check needs at least 3 sample sizes");
      std::vector<McResult> results;
      for (std::size_t n : rate_ns) {
        SimConfig c{n, rate_sigma, rate_alpha, sp, basis_size, p, seed};
        c.validate();
        results.push_back(mc_run(c, reps, rate_grids.m_grid, rate_grids.rhos(), threads));
      }
      std::ostringstream os;
      os.precision(17);
      os << "estimator\tn\tmise\tfitted_slope\ttheoretical_slope\n";
      for (Estimator e : {Estimator::pca, Estimator::ridge}) {
        const RateFit f = rate_fit(rate_alpha, rate_beta, e, results);
        for (std::size_t i = 0; i < f.sample_sizes.size(); ++i) {
          os << to_string(e) << '\t' << f.sample_sizes[i] << '\t' << f.mise_values[i] << '\t' << f.fitted_slope << '\t'
             << f.theoretical_slope << '\n';
        }
      }
      rate_out.write(os.str(), out);
    } else if (*diagnose) {
      diag.spacing = parse_spacing(diag_spacing);
      diag.sigma_eps = 0.0;
      diag.validate();
      auto [data, truth] = draw_dataset(diag);
      const CenteredMoments moments = compute_moments(data);
      std::ostringstream os;
      write_tsv(os, perturbation_report(truth.k_true, moments.k_hat, j_max));
      diag_out.write(os.str(), out);
    }
  } catch (const Error& e) {
    err << "flr: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "flr: " << e.what() << '\n';
    return numeric;
  }
  return ok;
}

}  // namespace flr::cli
