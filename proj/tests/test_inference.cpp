#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "kdecomp/inference.hpp"
#include "kdecomp/share_matrix_io.hpp"
#include "test_support.hpp"

using namespace kdecomp;

namespace {

const std::string kTables = KDECOMP_TABLE_DIR;

Observation obs(double value, std::string category) {
  Observation o;
  o.value = value;
  o.labels["g"] = std::move(category);
  return o;
}

std::vector<double> equal_weights(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

ShareMatrixd table(const std::string& name, double n = 185.0) {
  return read_share_matrix(kTables + "/" + name, n).matrix;
}

TestResultd table_test(const std::string& name, double n = 185.0) {
  const auto loaded = read_share_matrix(kTables + "/" + name, n);
  return pearson_test(loaded.matrix, loaded.tolerance);
}

ShareMatrixd proportional(Eigen::Index m, Eigen::Index p) {
  ShareMatrixd s;
  s.null_weights = Eigen::VectorXd::LinSpaced(m, 1, double(m));
  s.null_weights /= s.null_weights.sum();
  s.shares = (s.null_weights / double(p)).replicate(1, p);
  for (Eigen::Index j = 0; j < m; ++j) s.component_names.push_back("c" + std::to_string(j));
  s.effective_n = 100;
  return s;
}

}  // namespace

TEST(ShareMatrix, IdenticalComponentsAreProportional) {
  const std::vector<Observation> data{obs(1, "x"), obs(5, "x"), obs(9, "x")};
  const auto f = fit(data, KernelScheme::gumbel, 2.0, equal_weights(3));
  const Decompositiond d({{"a", f, 0.5}, {"b", f, 0.5}});
  const auto s = share_matrix(d, 5, 100.0);
  ASSERT_EQ(s.shares.rows(), 2);
  ASSERT_EQ(s.shares.cols(), 5);
  for (Eigen::Index j = 0; j < 2; ++j) {
    for (Eigen::Index k = 0; k < 5; ++k) EXPECT_NEAR(s.shares(j, k), 0.1, 1e-10);
  }
  EXPECT_NEAR(pearson_test(s).statistic, 0.0, 1e-12);
}

TEST(ShareMatrix, CompleteSeparation) {
  const std::vector<Observation> data{obs(0, "low"), obs(1000, "high")};
  const auto d = decompose(data, "g", equal_weights(2), {KernelScheme::normal, BandwidthRule::fixed(1.0)});
  const auto s = share_matrix(d, 2, 100.0);
  EXPECT_NEAR(s.shares(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(s.shares(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(s.shares(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(s.shares(1, 1), 0.5, 1e-12);
  const auto r = pearson_test(s);
  EXPECT_NEAR(r.statistic, 100.0, 1e-9);
  EXPECT_EQ(r.dof, 1);
}

TEST(ShareMatrix, PublishedDiscountTable) {
  const auto s = table("discount_rate.csv");
  ASSERT_EQ(s.components(), 7);
  ASSERT_EQ(s.quantiles(), 5);
  EXPECT_EQ(s.component_names.front(), "3.0");
  EXPECT_EQ(s.shares(0, 0), 0.1677);
  // Null row x 5
  EXPECT_NEAR(s.null_weights(0), 0.2225, 0.0005);
}

TEST(ShareMatrix, RowSumsAndQuadratureOnRandomDecompositions) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t n = 20 + rng() % 40;
    auto data = oracle::random_observations(rng, n);
    const int m = 2 + static_cast<int>(rng() % 4);
    for (std::size_t i = 0; i < n; ++i) data[i].labels["g"] = std::to_string(i % static_cast<std::size_t>(m));
    const auto d = decompose(data, "g", equal_weights(n), {KernelScheme::weibull_gumbel, BandwidthRule::silverman()});
    const int p = 2 + static_cast<int>(rng() % 6);
    const auto s = share_matrix(d, p, double(n));
    const Eigen::VectorXd gap = s.shares.rowwise().sum() - s.null_weights;
    EXPECT_LT(gap.cwiseAbs().maxCoeff(), 1e-9);

    // Component masses between the cut points by quadrature.
    const auto composite = reaggregate(d);
    auto cuts = quantile_cuts(composite, p);
    const auto [lo, hi] = composite.span_of_centers(60.0);
    cuts.insert(cuts.begin(), lo);
    cuts.push_back(hi);
    const auto& c = d[0];
    std::vector<double> breaks;
    for (const auto& k : c.density.kernels()) {
      for (double b : oracle::kernel_breaks(k.spec)) breaks.push_back(b);
    }
    for (int k = 0; k < p; ++k) {
      const double mass = c.weight * oracle::integrate_piecewise([&c](double x) { return c.density.pdf(x); },
                                                                  cuts[std::size_t(k)], cuts[std::size_t(k + 1)], breaks);
      EXPECT_NEAR(s.shares(0, k), mass, 1e-7);
    }
  }
}

TEST(PearsonTest, ProportionalIsExactNull) {
  for (Eigen::Index m = 2; m <= 8; ++m) {
    for (Eigen::Index p = 2; p <= 10; ++p) {
      const auto r = pearson_test(proportional(m, p));
      EXPECT_EQ(r.statistic, 0.0);
      EXPECT_EQ(r.p_value, 1.0);
      EXPECT_EQ(r.dof, (m - 1) * (p - 1));
    }
  }
}

TEST(PearsonTest, PublishedPeriodTable) {
  const auto r = table_test("period.csv");
  EXPECT_NEAR(r.statistic, 4.14, 0.15);
  EXPECT_EQ(r.dof, 16);
  EXPECT_NEAR(r.p_value, 0.999, 0.002);
}

TEST(PearsonTest, PublishedRatios) {
  // Summation of (s - e)^2 / e over the printed tables (numpy):
  // discount 0.53394, author 0.10378, period 0.022370
  const double discount = table_test("discount_rate.csv").statistic;
  const double author = table_test("author.csv").statistic;
  const double period = table_test("period.csv").statistic;
  EXPECT_NEAR(author / period, 4.6393, 1e-3);
  EXPECT_NEAR(author / period, 19.2 / 4.14, 0.05 * 19.2 / 4.14);
  EXPECT_NEAR(discount / author, 98.6 / 19.2, 0.05 * 98.6 / 19.2);
  EXPECT_NEAR(discount / period, 98.6 / 4.14, 0.05 * 98.6 / 4.14);
  EXPECT_EQ(table_test("discount_rate.csv").dof, 24);
}

TEST(PearsonTest, GrowthTableWithItsOwnScale) {
  const auto r = table_test("growth_discount_rate.csv", 56.5);
  EXPECT_EQ(r.dof, 24);
  EXPECT_NEAR(r.statistic, 10.6, 0.2);
  EXPECT_NEAR(r.p_value, 0.992, 0.005);
}

TEST(PearsonTest, Degeneracies) {
  auto s = proportional(3, 4);
  s.null_weights(0) = 0;
  s.null_weights(1) += proportional(3, 4).null_weights(0);
  s.shares = (s.null_weights / 4.0).replicate(1, 4);
  EXPECT_THROW(pearson_test(s), DegenerateCategoryError);

  ShareMatrixd one = proportional(2, 3);
  one.shares = one.shares.topRows(1).eval();
  one.null_weights = Eigen::VectorXd::Ones(1);
  one.shares.setConstant(1.0 / 3);
  one.component_names.resize(1);
  EXPECT_THROW(pearson_test(one), TestPreconditionError);

  ShareMatrixd single_interval = proportional(3, 1);
  EXPECT_THROW(pearson_test(single_interval), TestPreconditionError);
}

TEST(TestDecomposition, Preconditions) {
  const std::vector<Observation> data{obs(1, "a"), obs(2, "a")};
  const auto d = decompose(data, "g", equal_weights(2), {KernelScheme::normal, BandwidthRule::fixed(1.0)});
  EXPECT_THROW(test_decomposition(d, 5, 10.0), TestPreconditionError);
  const std::vector<Observation> two{obs(1, "a"), obs(2, "b")};
  const auto d2 = decompose(two, "g", equal_weights(2), {KernelScheme::normal, BandwidthRule::fixed(1.0)});
  EXPECT_THROW(test_decomposition(d2, 1, 10.0), TestPreconditionError);
}

TEST(TestDecomposition, DisjointHandComputed) {
  const std::vector<Observation> data{obs(-500, "a"), obs(500, "b")};
  const auto d = decompose(data, "g", equal_weights(2), {KernelScheme::gumbel, BandwidthRule::fixed(2.0)});
  const auto r = test_decomposition(d, 2, 100.0);
  // four cells, each off the null 0.25 by 0.25: 100 * 4 * 0.25^2 / 0.25
  EXPECT_NEAR(r.statistic, 100.0, 1e-9);
  EXPECT_EQ(r.dof, 1);
}

TEST(PearsonTest, InvarianceAndScaling) {
  std::mt19937_64 rng(32);
  const auto base = table("author.csv", 185.0);
  const auto loaded = read_share_matrix(kTables + "/author.csv", 185.0);
  const double stat = pearson_test(base, loaded.tolerance).statistic;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> rows(5), cols(5);
    std::iota(rows.begin(), rows.end(), 0);
    std::iota(cols.begin(), cols.end(), 0);
    std::shuffle(rows.begin(), rows.end(), rng);
    std::shuffle(cols.begin(), cols.end(), rng);
    ShareMatrixd permuted = base;
    for (int j = 0; j < 5; ++j) {
      permuted.null_weights(j) = base.null_weights(rows[std::size_t(j)]);
      permuted.component_names[std::size_t(j)] = base.component_names[std::size_t(rows[std::size_t(j)])];
      for (int k = 0; k < 5; ++k) permuted.shares(j, k) = base.shares(rows[std::size_t(j)], cols[std::size_t(k)]);
    }
    EXPECT_NEAR(pearson_test(permuted, loaded.tolerance).statistic, stat, 1e-12);
  }
  ShareMatrixd doubled = base;
  doubled.effective_n *= 2;
  const auto r2 = pearson_test(doubled, loaded.tolerance);
  EXPECT_NEAR(r2.statistic, 2 * stat, 1e-12);
  EXPECT_LT(r2.p_value, pearson_test(base, loaded.tolerance).p_value);
}

TEST(PearsonTest, StatisticZeroOnlyAtNull) {
  auto s = proportional(3, 4);
  s.shares(0, 0) += 1e-6;
  s.shares(0, 1) -= 1e-6;
  EXPECT_GT(pearson_test(s).statistic, 0.0);
}

TEST(ShareMatrixIo, TransposedLayout) {
  std::istringstream in(
      "component,Q1,Q2,Null\n"
      "a,0.3,0.1,0.2\n"
      "b,0.2,0.4,0.3\n");
  const auto loaded = read_share_matrix(in, 50.0);
  EXPECT_TRUE(loaded.transposed);
  EXPECT_EQ(loaded.matrix.component_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(loaded.matrix.shares(1, 1), 0.4);
  EXPECT_NEAR(loaded.matrix.null_weights(0), 0.4, 1e-15);
}

TEST(ShareMatrixIo, RoundTripPreservesStatistic) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 30;
    auto data = oracle::random_observations(rng, n);
    for (std::size_t i = 0; i < n; ++i) data[i].labels["g"] = (i % 3 == 0) ? "x" : (i % 3 == 1 ? "y" : "z, w");
    const auto d = decompose(data, "g", equal_weights(n), {KernelScheme::weibull_gumbel, BandwidthRule::silverman()});
    const auto s = share_matrix(d, 4, 30.0);
    std::stringstream io;
    write_share_matrix(io, s);
    const auto back = read_share_matrix(io, 30.0);
    EXPECT_EQ(back.matrix.component_names, s.component_names);
    EXPECT_NEAR(pearson_test(back.matrix, back.tolerance).statistic, pearson_test(s).statistic, 1e-8);
  }
}

TEST(ShareMatrixIo, Errors) {
  std::istringstream no_null(",a,b\nQ1,0.5,0.5\n");
  EXPECT_THROW(read_share_matrix(no_null, 10.0), SchemaError);
  std::istringstream bad(",a,b\nQ1,0.5,zz\nNull,0.5,0.5\n");
  EXPECT_THROW(read_share_matrix(bad, 10.0), RowError);
}
