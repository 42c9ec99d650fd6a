#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "flr/io.hpp"
#include "flr/simulation.hpp"

using namespace flr;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("flr_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static void write(const std::string& p, const std::string& content) {
    std::ofstream(p, std::ios::binary) << content;
  }

  int run(const std::vector<std::string>& args) {
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

std::string small_csv(std::size_t p, const std::vector<std::vector<double>>& rows, bool with_y = true) {
  std::ostringstream os;
  os << "# grid=midpoint p=" << p << '\n';
  for (std::size_t j = 1; j <= p; ++j) os << "x_" << j << (j < p || with_y ? "," : "");
  os << (with_y ? "y\n" : "\n");
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) os << r[k] << (k + 1 < r.size() ? "," : "\n");
  }
  return os.str();
}

}  // namespace

TEST(DatasetCsv, RoundTripIsExact) {
  const auto [data, truth] = draw_dataset(SimConfig{7, 0.5, 1.5, Spacing::closely_spaced, 50, 50, 3});
  std::stringstream ss;
  io::write_dataset_csv(ss, data);
  const Dataset back = io::read_dataset_csv(ss);
  EXPECT_EQ(back.y, data.y);
  for (std::size_t i = 0; i < data.size(); ++i) EXPECT_EQ(back.x[i].values(), data.x[i].values());
}

TEST(DatasetCsv, FormatErrors) {
  auto kind_of = [](const std::string& text) {
    std::istringstream is(text);
    try {
      io::read_dataset_csv(is);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::usage;  // sentinel: no error
  };
  EXPECT_EQ(kind_of("x_1,x_2,y\n1,2,3\n4,5,6\n"), ErrorKind::data_format);                   // no metadata
  EXPECT_EQ(kind_of("# grid=uniform p=2\nx_1,x_2,y\n1,2,3\n4,5,6\n"), ErrorKind::data_format);  // wrong grid
  EXPECT_EQ(kind_of(small_csv(2, {{1, 2, 3}, {4, 5}})), ErrorKind::data_format);              // short row
  EXPECT_EQ(kind_of("# grid=midpoint p=2\nx_1,x_2,y\n1,abc,3\n4,5,6\n"), ErrorKind::data_format);
  EXPECT_EQ(kind_of("# grid=midpoint p=2\nx_1,x_3,y\n1,2,3\n4,5,6\n"), ErrorKind::data_format);
  EXPECT_EQ(kind_of(small_csv(2, {{1, 2}, {4, 5}}, false)), ErrorKind::data_format);  // no y
  EXPECT_EQ(kind_of(small_csv(2, {{1, 2, 3}})), ErrorKind::insufficient_data);
  EXPECT_EQ(kind_of(small_csv(2, {{1, 2, 3}, {4, 5, 6}})), ErrorKind::usage);
}

TEST(ModelFile, RoundTripIsExact) {
  const auto [data, truth] = draw_dataset(SimConfig{60, 0.5, 2.0, Spacing::well_spaced, 50, 50, 4});
  const FittedModel m = ridge_fit(compute_moments(data), 0.0123);
  std::stringstream ss;
  io::write_model(ss, m);
  const FittedModel back = io::read_model(ss);
  EXPECT_EQ(back.slope.values(), m.slope.values());
  EXPECT_EQ(back.intercept, m.intercept);
  EXPECT_EQ(back.method.kind, Method::Kind::ridge);
  EXPECT_EQ(back.method.parameter, 0.0123);
}

TEST(ModelFile, Malformed) {
  std::istringstream missing("method pca\nparameter 2\nintercept 0\np 3\n1\n2\n");
  EXPECT_THROW(io::read_model(missing), Error);
  std::istringstream trailing("method pca\nparameter 2\nintercept 0\np 2\n1\n2\n3\n");
  EXPECT_THROW(io::read_model(trailing), Error);
  std::istringstream bad_method("method lasso\nparameter 2\nintercept 0\np 2\n1\n2\n");
  EXPECT_THROW(io::read_model(bad_method), Error);
}

TEST_F(TempDir, SimulateFitPredictSmokePath) {
  ASSERT_EQ(run({"simulate", "--n", "4", "--sigma", "0", "--alpha", "2", "--spacing", "well", "--seed", "1", "--out",
                 path("d.csv")}),
            0)
      << err_.str();
  ASSERT_EQ(run({"fit", "--data", path("d.csv"), "--method", "ridge", "--rho", "0.1", "--out", path("m.txt")}), 0)
      << err_.str();
  std::ifstream in(path("m.txt"));
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 4u + 50u);
  EXPECT_EQ(lines[0], "method ridge");
  EXPECT_EQ(lines[3], "p 50");
  ASSERT_EQ(run({"predict", "--model", path("m.txt"), "--data", path("d.csv")}), 0) << err_.str();
  const std::string preds = out_.str();
  EXPECT_EQ(std::count(preds.begin(), preds.end(), '\n'), 4);
}

TEST_F(TempDir, FitPredictReproducesNoiselessTrainingResponses) {
  ASSERT_EQ(run({"simulate", "--n", "200", "--sigma", "0", "--alpha", "2", "--spacing", "well", "--seed", "5", "--out",
                 path("d.csv")}),
            0);
  ASSERT_EQ(run({"fit", "--data", path("d.csv"), "--method", "ridge", "--rho", "1e-8", "--out", path("m.txt")}), 0);
  ASSERT_EQ(run({"predict", "--model", path("m.txt"), "--data", path("d.csv"), "--out", path("p.txt")}), 0);
  std::istringstream csv(io::read_file(path("d.csv")));
  const Dataset data = io::read_dataset_csv(csv);
  std::ifstream preds(path("p.txt"));
  for (double y : data.y) {
    double p = 0.0;
    ASSERT_TRUE(preds >> p);
    EXPECT_NEAR(p, y, 1e-4);
  }
}

TEST_F(TempDir, FitPcaWritesModel) {
  ASSERT_EQ(run({"simulate", "--n", "100", "--sigma", "0.5", "--alpha", "1.5", "--spacing", "closely", "--out",
                 path("d.csv")}),
            0);
  ASSERT_EQ(run({"fit", "--data", path("d.csv"), "--method", "pca", "--m", "4"}), 0) << err_.str();
  std::istringstream model(out_.str());
  const FittedModel m = io::read_model(model);
  EXPECT_EQ(m.method.kind, Method::Kind::pca);
  EXPECT_EQ(m.method.parameter, 4.0);
}

TEST_F(TempDir, ErrorPathsMapToExitCodes) {
  ASSERT_EQ(run({"simulate", "--n", "10", "--sigma", "0.5", "--alpha", "2", "--spacing", "well", "--out", path("d.csv")}), 0);
  EXPECT_EQ(run({"fit", "--data", path("d.csv"), "--method", "pca", "--m", "0", "--out", path("m.txt")}), 4);
  EXPECT_FALSE(fs::exists(path("m.txt")));
  EXPECT_FALSE(fs::exists(path("m.txt.tmp")));
  EXPECT_EQ(run({"fit", "--data", path("d.csv"), "--method", "pca", "--m", "40", "--out", path("m.txt")}), 4);
  EXPECT_NE(err_.str().find("largest admissible m is 9"), std::string::npos) << err_.str();
  EXPECT_FALSE(fs::exists(path("m.txt")));
  EXPECT_EQ(run({"fit", "--data", path("d.csv"), "--method", "ridge", "--rho", "-1"}), 4);
  EXPECT_EQ(run({"fit", "--data", path("d.csv"), "--method", "ridge"}), 2);
  EXPECT_EQ(run({"fit", "--data", path("d.csv"), "--method", "lasso"}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"fit", "--data", path("missing.csv"), "--method", "pca", "--m", "1"}), 5);
  write(path("bad.csv"), "x_1,x_2,y\n1,2,3\n");
  EXPECT_EQ(run({"fit", "--data", path("bad.csv"), "--method", "pca", "--m", "1"}), 3);
  write(path("bad2.csv"), small_csv(2, {{1, 2, 3}, {4, 5}}));
  EXPECT_EQ(run({"fit", "--data", path("bad2.csv"), "--method", "pca", "--m", "1"}), 3);
  EXPECT_EQ(run({"simulate", "--n", "1", "--sigma", "0.5", "--alpha", "2", "--spacing", "well"}), 4);
  EXPECT_EQ(run({"simulate", "--n", "5", "--sigma", "0.5", "--alpha", "2", "--spacing", "sparse"}), 2);
  EXPECT_EQ(run({"mc-table", "--reps", "1"}), 4);
  EXPECT_EQ(run({"mc-table", "--format", "xml"}), 2);
  EXPECT_EQ(run({"fit", "--data", path("d.csv"), "--method", "pca", "--m", "2", "--out",
                 (dir_ / "no_such_dir" / "m.txt").string()}),
            5);
}

TEST_F(TempDir, SameArgumentsGiveIdenticalBytes) {
  const std::vector<std::string> sim{"simulate", "--n", "30", "--sigma", "1", "--alpha", "1.1", "--spacing",
                                     "closely",  "--seed", "42"};
  ASSERT_EQ(run(sim), 0);
  const std::string first = out_.str();
  ASSERT_EQ(run(sim), 0);
  EXPECT_EQ(out_.str(), first);

  auto table = [&](const std::string& threads, const std::string& name) {
    EXPECT_EQ(run({"mc-table", "--spacing", "closely", "--sigma", "0.5", "--n", "60", "--alpha", "2,4", "--reps", "8",
                   "--seed", "3", "--threads", threads, "--out", path(name), "--profile", path(name + ".profile")}),
              0)
        << err_.str();
    return io::read_file(path(name)) + io::read_file(path(name + ".profile"));
  };
  EXPECT_EQ(table("1", "a.tsv"), table("3", "b.tsv"));
}

TEST_F(TempDir, RateCheckAndDiagnoseReports) {
  ASSERT_EQ(run({"rate-check", "--n", "60,120,240", "--reps", "4", "--m-grid", "1,2,3,4", "--rho-count", "5"}), 0)
      << err_.str();
  std::istringstream rate(out_.str());
  std::string line;
  std::getline(rate, line);
  EXPECT_EQ(line, "estimator\tn\tmise\tfitted_slope\ttheoretical_slope");
  int rows = 0;
  while (std::getline(rate, line)) ++rows;
  EXPECT_EQ(rows, 6);

  ASSERT_EQ(run({"diagnose", "--n", "500", "--alpha", "2", "--jmax", "10", "--seed", "9"}), 0) << err_.str();
  std::istringstream diag(out_.str());
  std::vector<std::string> lines;
  while (std::getline(diag, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 12u);
  EXPECT_EQ(run({"diagnose", "--spacing", "well", "--jmax", "50"}), 4);
}
