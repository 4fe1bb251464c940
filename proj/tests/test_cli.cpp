#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kdecomp/cli.hpp"
#include "kdecomp/data.hpp"
#include "kdecomp/numerics.hpp"

namespace fs = std::filesystem;
using kdecomp::split_csv_line;

namespace {

const std::string kTables = KDECOMP_TABLE_DIR;

class CliTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("kdecomp_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream(path) << content;
    return path.string();
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "kdecomp");
    out_.str("");
    err_.str("");
    return kdecomp::cli::run(args, out_, err_);
  }

  std::vector<std::vector<std::string>> rows() const {
    std::vector<std::vector<std::string>> out;
    std::istringstream in(out_.str());
    std::string line;
    while (std::getline(in, line)) out.push_back(split_csv_line(line));
    return out;
  }

  // statistic, dof, p_value from a test report
  std::vector<double> summary() const {
    const auto r = rows();
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
      if (!r[i].empty() && r[i][0] == "statistic") {
        return {std::stod(r[i + 1][0]), std::stod(r[i + 1][1]), std::stod(r[i + 1][2])};
      }
    }
    ADD_FAILURE() << "no summary in:\n" << out_.str();
    return {0, 0, 0};
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

}  // namespace

TEST_F(CliTest, DensityRiemannCheck) {
  const auto input = write("toy.csv", "value\n0\n3\n");
  ASSERT_EQ(run({"density", input, "--kernel", "normal", "--bandwidth", "fixed=1", "--grid=-5:10:16"}), 0) << err_.str();
  const auto r = rows();
  ASSERT_EQ(r.size(), 17u);
  EXPECT_EQ(r[0], (std::vector<std::string>{"x", "pdf", "cdf"}));
  double riemann = 0;
  for (std::size_t i = 1; i < r.size(); ++i) riemann += std::stod(r[i][1]) * 1.0;
  const double mass = std::stod(r.back()[2]) - std::stod(r[1][2]);
  EXPECT_NEAR(riemann, mass, 1e-6);
}

TEST_F(CliTest, DensitySingleGridPoint) {
  const auto input = write("toy.csv", "value\n0\n3\n");
  ASSERT_EQ(run({"density", input, "--kernel", "normal", "--bandwidth", "fixed=1", "--grid", "2:9:1"}), 0);
  const auto r = rows();
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(std::stod(r[1][0]), 2.0);
}

TEST_F(CliTest, WeibullRejectsNegativeRow) {
  const auto input = write("neg.csv", "value\n5\n-2\n7\n");
  EXPECT_EQ(run({"density", input, "--kernel", "weibull", "--bandwidth", "fixed=1"}), 1);
  EXPECT_NE(err_.str().find("line 3"), std::string::npos) << err_.str();
}

TEST_F(CliTest, DecomposeSingleCategory) {
  const auto input = write("one.csv", "value,g\n1,a\n4,a\n6,a\n");
  ASSERT_EQ(run({"decompose", input, "--by", "g", "--kernel", "gumbel", "--grid", "-10:20:31"}), 0) << err_.str();
  const auto r = rows();
  ASSERT_EQ(r.size(), 1u + 62u);
  for (std::size_t i = 1; i <= 31; ++i) {
    EXPECT_EQ(r[i][0], "(composite)");
    EXPECT_EQ(r[i + 31][0], "a");
    // far-tail values can be subnormal, which std::stod rejects
    EXPECT_NEAR(std::strtod(r[i][2].c_str(), nullptr), std::strtod(r[i + 31][2].c_str(), nullptr), 1e-12);
  }
}

TEST_F(CliTest, DecomposeComponentsSumToComposite) {
  const auto input = write("two.csv", "scc,paper,prtp\n10,A,3\n25,A,3.0\n40,B,1\n-5,C,0.25\n80,C,1.0\n55,D,1\n");
  const auto report = (dir_ / "weights.csv").string();
  ASSERT_EQ(run({"decompose", input, "--value-column", "scc", "--by", "prtp", "--bin", "prtp=discount", "--weights",
                 "paper", "--assume-positive", "false", "--grid", "-50:150:41", "--weights-report", report}),
            0)
      << err_.str();
  std::map<std::string, std::vector<double>> curves;
  for (const auto& row : rows()) {
    if (row[0] == "component") continue;
    curves[row[0]].push_back(std::stod(row[2]));
  }
  ASSERT_EQ(curves.size(), 4u);  // composite, 3.0, 1.0, other
  for (std::size_t i = 0; i < 41; ++i) {
    double sum = 0;
    for (const auto& [name, ys] : curves) {
      if (name != "(composite)") sum += ys[i];
    }
    EXPECT_NEAR(sum, curves["(composite)"][i], 1e-9);
  }
  std::ifstream w(report);
  std::stringstream text;
  text << w.rdbuf();
  EXPECT_NE(text.str().find("3.0,2,0.25"), std::string::npos) << text.str();
}

TEST_F(CliTest, DecomposeMissingDimension) {
  const auto input = write("toy.csv", "value\n1\n2\n");
  EXPECT_EQ(run({"decompose", input, "--by", "region"}), 1);
  EXPECT_NE(err_.str().find("region"), std::string::npos);
}

TEST_F(CliTest, TestProportionalToy) {
  const auto input = write("prop.csv", "value,g\n1,a\n5,a\n9,a\n1,b\n5,b\n9,b\n");
  ASSERT_EQ(run({"test", input, "--by", "g", "--kernel", "gumbel", "--bandwidth", "fixed=2"}), 0) << err_.str();
  const auto s = summary();
  EXPECT_LT(s[0], 1e-12);
  EXPECT_EQ(s[1], 4);
  EXPECT_NEAR(s[2], 1.0, 1e-12);
}

TEST_F(CliTest, TestPublishedTables) {
  ASSERT_EQ(run({"test", "--shares", kTables + "/period.csv", "--effective-n", "185"}), 0) << err_.str();
  const auto period = summary();
  EXPECT_NEAR(period[0], 4.14, 0.15);
  EXPECT_EQ(period[1], 16);
  EXPECT_NEAR(period[2], 0.999, 0.002);
  ASSERT_EQ(run({"test", "--shares", kTables + "/author.csv", "--effective-n", "185"}), 0) << err_.str();
  const auto author = summary();
  EXPECT_EQ(author[1], 16);
  EXPECT_NEAR(author[0] / period[0], 19.2 / 4.14, 0.05 * 19.2 / 4.14);
}

TEST_F(CliTest, TestPreconditions) {
  const auto input = write("one.csv", "value,g\n1,a\n5,a\n");
  EXPECT_EQ(run({"test", input, "--by", "g"}), 1);
  EXPECT_NE(err_.str().find("two components"), std::string::npos) << err_.str();
  const auto two = write("two.csv", "value,g\n1,a\n5,b\n");
  EXPECT_EQ(run({"test", two, "--by", "g", "--quantiles", "1", "--bandwidth", "fixed=1"}), 1);
}

TEST_F(CliTest, UsageErrors) {
  const auto input = write("toy.csv", "value\n1\n2\n");
  EXPECT_EQ(run({"density", input, "--no-such-flag"}), 2);
  EXPECT_EQ(run({"density", input, "--kernel", "epanechnikov"}), 2);
  EXPECT_EQ(run({"density", input, "--bandwidth", "fixed=-1"}), 2);
  EXPECT_EQ(run({"density", input, "--grid", "1:2"}), 2);
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"test", "--shares", kTables + "/period.csv"}), 2);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  const auto input = write("toy.csv", "value\n0\n3\n");
  const auto config = write("run.ini", "[density]\nkernel=normal\nbandwidth=fixed=1\ngrid=0:0:1\n");
  ASSERT_EQ(run({"--config", config, "density", input}), 0) << err_.str();
  const auto from_config = rows();
  ASSERT_EQ(from_config.size(), 2u);
  EXPECT_NEAR(std::stod(from_config[1][1]), 0.5 * (kdecomp::std_normal_pdf(0.0) + kdecomp::std_normal_pdf(3.0)), 1e-12);
  ASSERT_EQ(run({"--config", config, "density", input, "--bandwidth", "fixed=2"}), 0) << err_.str();
  EXPECT_NEAR(std::stod(rows()[1][1]), 0.25 * (kdecomp::std_normal_pdf(0.0) + kdecomp::std_normal_pdf(1.5)), 1e-12);
}

TEST_F(CliTest, ExportSvg) {
  const auto empty = write("empty.csv", "component,x,pdf\n");
  ASSERT_EQ(run({"export-svg", empty}), 0) << err_.str();
  EXPECT_NE(out_.str().find("<svg"), std::string::npos);
  EXPECT_NE(out_.str().find("id=\"axes\""), std::string::npos);
  EXPECT_EQ(out_.str().find("<path"), std::string::npos);

  const auto input = write("one.csv", "value,g\n1,a\n4,a\n6,a\n");
  const auto curve = (dir_ / "curve.csv").string();
  ASSERT_EQ(run({"decompose", input, "--by", "g", "--kernel", "gumbel", "-o", curve}), 0) << err_.str();
  ASSERT_EQ(run({"export-svg", curve}), 0) << err_.str();
  const std::string first = out_.str();
  std::size_t filled = 0;
  for (auto pos = first.find("<path fill=\"#"); pos != std::string::npos; pos = first.find("<path fill=\"#", pos + 1)) ++filled;
  EXPECT_EQ(filled, 1u);
  ASSERT_EQ(run({"export-svg", curve}), 0);
  EXPECT_EQ(out_.str(), first);

  const auto broken = write("broken.csv", "component,x,pdf\na,1,zz\n");
  EXPECT_EQ(run({"export-svg", broken}), 1);
}
