#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "flr/evaluation.hpp"
#include "test_support.hpp"

using namespace flr;
namespace ft = flr::testing;

namespace {

SimConfig config(std::size_t n, double sigma, double alpha, Spacing s = Spacing::well_spaced, std::uint64_t seed = 5) {
  return SimConfig{n, sigma, alpha, s, 50, 50, seed};
}

void expect_identity(const CandidateStats& c) {
  EXPECT_GE(c.bias2, 0.0);
  EXPECT_GE(c.var, 0.0);
  EXPECT_LE(std::abs(c.mise - c.bias2 - c.var), 1e-10 * (1.0 + c.mise));
}

}  // namespace

TEST(CandidateStats, IdenticalReplicationsHaveZeroVariance) {
  const Grid g(50);
  const GridFunction b = ft::cosine_fn(2, g);
  const GridFunction est = 0.5 * ft::cosine_fn(3, g);
  const std::vector<GridFunction> reps{est, est};
  const CandidateStats s = candidate_stats(reps, b);
  EXPECT_EQ(s.var, 0.0);
  EXPECT_NEAR(s.bias2, 1.25, 1e-12);
  EXPECT_NEAR(s.mise, 1.25, 1e-12);
}

TEST(CandidateStats, BiasVarianceDecomposition) {
  std::mt19937_64 gen(51);
  const Grid g(30);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<GridFunction> reps;
    for (int r = 0; r < 2 + trial; ++r) reps.push_back(ft::random_function(gen, g));
    expect_identity(candidate_stats(reps, ft::random_function(gen, g)));
  }
}

TEST(McRun, IdentityHoldsForEveryCandidate) {
  const McResult r = mc_run(config(100, 0.5, 2.0), 20, default_m_grid(), default_rho_grid(), 2);
  EXPECT_EQ(r.pca_profile.size(), 20u);
  EXPECT_EQ(r.ridge_profile.size(), 25u);
  EXPECT_TRUE(r.excluded_m.empty());
  for (const auto& c : r.pca_profile) expect_identity(c);
  for (const auto& c : r.ridge_profile) expect_identity(c);
  EXPECT_LE(std::abs(r.mise_pca - r.bias2_pca - r.var_pca), 1e-10 * (1.0 + r.mise_pca));
  EXPECT_LE(std::abs(r.mise_ridge - r.bias2_ridge - r.var_ridge), 1e-10 * (1.0 + r.mise_ridge));
}

TEST(McRun, ReportedCellsAreAtTheMinimizers) {
  const McResult r = mc_run(config(100, 1.0, 1.5), 10, default_m_grid(), default_rho_grid(), 1);
  for (const auto& c : r.pca_profile) EXPECT_GE(c.mise, r.mise_pca);
  for (const auto& c : r.ridge_profile) EXPECT_GE(c.mise, r.mise_ridge);
  EXPECT_EQ(static_cast<double>(r.m_star), best_pca(r.pca_profile)->parameter);
  EXPECT_EQ(r.rho_star, best_ridge(r.ridge_profile)->parameter);
}

TEST(McRun, CutoffsAboveRankAreExcludedAndReported) {
  // n = 5 centered curves span at most 4 dimensions.
  const McResult r = mc_run(config(5, 0.5, 2.0), 4, default_m_grid(), {0.1}, 1);
  ASSERT_EQ(r.pca_profile.size(), 4u);
  ASSERT_EQ(r.excluded_m.size(), 16u);
  EXPECT_EQ(r.excluded_m.front(), 5u);
  EXPECT_LE(r.m_star, 4u);
}

TEST(McRun, AllCutoffsExcludedIsRankError) {
  try {
    mc_run(config(3, 0.5, 2.0), 3, {5, 6}, {0.1}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::rank);
  }
}

TEST(McRun, PreconditionErrors) {
  EXPECT_THROW(mc_run(config(50, 0.5, 2.0), 1, {1}, {0.1}), Error);
  EXPECT_THROW(mc_run(config(50, 0.5, 2.0), 5, {}, {0.1}), Error);
  EXPECT_THROW(mc_run(config(50, 0.5, 2.0), 5, {1}, {}), Error);
  EXPECT_THROW(mc_run(config(50, 0.5, 2.0), 5, {0, 1}, {0.1}), Error);
  EXPECT_THROW(mc_run(config(50, 0.5, 2.0), 5, {1}, {-0.1}), Error);
}

TEST(McRun, ThreadCountDoesNotChangeResults) {
  const SimConfig c = config(80, 0.5, 1.1, Spacing::closely_spaced, 99);
  const McResult a = mc_run(c, 16, default_m_grid(), default_rho_grid(), 1);
  const McResult b = mc_run(c, 16, default_m_grid(), default_rho_grid(), 4);
  ASSERT_EQ(a.pca_profile.size(), b.pca_profile.size());
  for (std::size_t i = 0; i < a.pca_profile.size(); ++i) {
    EXPECT_EQ(a.pca_profile[i].mise, b.pca_profile[i].mise);
    EXPECT_EQ(a.pca_profile[i].bias2, b.pca_profile[i].bias2);
  }
  for (std::size_t i = 0; i < a.ridge_profile.size(); ++i) EXPECT_EQ(a.ridge_profile[i].mise, b.ridge_profile[i].mise);
  EXPECT_EQ(to_row(a), to_row(b));
}

TEST(McRun, OracleMiseFallsFromSmallToLargeSamples) {
  for (Spacing s : {Spacing::well_spaced, Spacing::closely_spaced}) {
    const McResult small = mc_run(config(100, 0.5, 2.0, s), 50, default_m_grid(), default_rho_grid());
    const McResult large = mc_run(config(500, 0.5, 2.0, s), 50, default_m_grid(), default_rho_grid());
    EXPECT_LT(large.mise_pca, small.mise_pca);
    EXPECT_LT(large.mise_ridge, small.mise_ridge);
  }
}

TEST(OracleTune, SingletonRidgeGrid) {
  const auto [m, rho] = oracle_tune(config(60, 0.5, 2.0), 5, {1, 2, 3}, {0.037}, 1);
  EXPECT_EQ(rho, 0.037);
  EXPECT_GE(m, 1u);
  EXPECT_LE(m, 3u);
}

TEST(OracleTune, TiesPreferMoreRegularization) {
  const std::vector<CandidateStats> pca{{3, 0, 0, 1.0}, {2, 0, 0, 1.0}, {4, 0, 0, 2.0}};
  EXPECT_EQ(best_pca(pca)->parameter, 2.0);
  const std::vector<CandidateStats> ridge{{0.1, 0, 0, 1.0}, {0.5, 0, 0, 1.0}, {0.01, 0, 0, 3.0}};
  EXPECT_EQ(best_ridge(ridge)->parameter, 0.5);
}

TEST(OracleTune, NoiselessCutoffGrowsWithSampleSize) {
  const auto [m100, r100] = oracle_tune(config(100, 0.0, 2.0, Spacing::well_spaced, 11), 50, default_m_grid(),
                                        default_rho_grid());
  const auto [m500, r500] = oracle_tune(config(500, 0.0, 2.0, Spacing::well_spaced, 11), 50, default_m_grid(),
                                        default_rho_grid());
  EXPECT_GE(m500, m100);
}

TEST(RateFit, TheoreticalExponent) {
  EXPECT_DOUBLE_EQ(theoretical_rate(2.0, 2.0), -0.5);
  EXPECT_NEAR(theoretical_rate(1.1, 2.0), -3.0 / 5.1, 1e-15);
  EXPECT_NEAR(theoretical_rate(1.1, 2.0), -0.588, 5e-4);
}

TEST(RateFit, ExactPowerLawIsRecovered) {
  std::vector<McResult> rs;
  for (std::size_t n : {100, 200, 400, 800}) {
    McResult r;
    r.config.n = n;
    r.mise_pca = 3.0 * std::pow(double(n), -0.7);
    r.mise_ridge = 0.5 * std::pow(double(n), -0.25);
    rs.push_back(r);
  }
  EXPECT_NEAR(rate_fit(2.0, 2.0, Estimator::pca, rs).fitted_slope, -0.7, 1e-12);
  const RateFit f = rate_fit(2.0, 2.0, Estimator::ridge, rs);
  EXPECT_NEAR(f.fitted_slope, -0.25, 1e-12);
  EXPECT_DOUBLE_EQ(f.theoretical_slope, -0.5);
  EXPECT_EQ(f.sample_sizes.size(), 4u);
}

TEST(RateFit, Errors) {
  std::vector<McResult> rs(3);
  for (std::size_t i = 0; i < 3; ++i) {
    rs[i].config.n = 100 * (i + 1);
    rs[i].mise_pca = 1.0;
  }
  EXPECT_THROW(rate_fit(2, 2, Estimator::pca, std::span(rs).first(2)), Error);
  rs[2].config.n = 200;
  EXPECT_THROW(rate_fit(2, 2, Estimator::pca, rs), Error);
  rs[2].config.n = 300;
  rs[1].mise_pca = 0.0;
  try {
    rate_fit(2, 2, Estimator::pca, rs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numerical);
  }
}

TEST(EmitTable, EmptyListIsHeaderOnly) {
  const std::string t = emit_table({}, TableFormat::tsv);
  EXPECT_EQ(t, "sigma_eps\tn\talpha\tm\trho\tbias2_pca\tbias2_ridge\tvar_pca\tvar_ridge\tmise_pca\tmise_ridge\n");
}

TEST(EmitTable, OneRowElevenColumnsAndRoundTrip) {
  std::vector<McResult> rs{mc_run(config(60, 0.5, 1.5), 4, {1, 2, 3}, {0.01, 0.1}, 1),
                           mc_run(config(90, 1.0, 4.0), 4, {1, 2, 3}, {0.01, 0.1}, 1)};
  const std::string one = emit_table(std::span(rs).first(1), TableFormat::tsv);
  const auto nl = one.find('\n');
  const std::string row = one.substr(nl + 1);
  EXPECT_EQ(std::count(row.begin(), row.end(), '\t'), 10);
  EXPECT_EQ(std::count(row.begin(), row.end(), '\n'), 1);

  const auto parsed = parse_table(emit_table(rs, TableFormat::tsv));
  ASSERT_EQ(parsed.size(), 2u);
  EXPECT_EQ(parsed[0], to_row(rs[0]));
  EXPECT_EQ(parsed[1], to_row(rs[1]));
}

TEST(EmitTable, TextFormatUsesThreeDecimals) {
  std::vector<McResult> rs{mc_run(config(60, 0.5, 1.5), 4, {1, 2}, {0.1}, 1)};
  const std::string t = emit_table(rs, TableFormat::text);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", rs[0].mise_pca);
  EXPECT_NE(t.find(buf), std::string::npos) << t;
}

TEST(EmitTable, MixedSpacingIsUsageError) {
  std::vector<McResult> rs(2);
  rs[1].config.spacing = Spacing::closely_spaced;
  try {
    emit_table(rs, TableFormat::tsv);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::usage);
  }
}

TEST(ParseTable, MalformedRow) {
  EXPECT_THROW(parse_table("header\n1\t2\tx\n"), Error);
  EXPECT_THROW(parse_table(""), Error);
}

TEST(Profile, OneLinePerCandidate) {
  std::vector<McResult> rs{mc_run(config(60, 0.5, 1.5), 4, {1, 2, 3}, {0.01, 0.1}, 1)};
  std::ostringstream os;
  write_profile(os, rs);
  const std::string s = os.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 3 + 2);
}

TEST(OracleTune, CloselySpacedSmallSampleTruncatesToOneComponent) {
  for (double alpha : {1.1, 1.5, 2.0, 4.0}) {
    const auto [m, rho] = oracle_tune(config(100, 0.5, alpha, Spacing::closely_spaced, 1), 200, default_m_grid(),
                                      default_rho_grid());
    EXPECT_EQ(m, 1u) << "alpha " << alpha;
  }
}
