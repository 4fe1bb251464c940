#pragma once

// Quantile shares of decomposition components and Pearson's test for
// equality of proportions across quantile intervals.

#include <Eigen/Core>

#include <cmath>
#include <concepts>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "kdecomp/density.hpp"
#include "kdecomp/errors.hpp"
#include "kdecomp/numerics.hpp"

namespace kdecomp {

/// m x p masses s(j, k) of weighted component j inside quantile interval k of
/// the composite, with the null weights w_j. Rows sum to the null weights.
template <std::floating_point Scalar>
struct ShareMatrix {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<std::string> component_names;
  Matrix shares;       // m x p
  Vector null_weights; // m
  Scalar effective_n = 1;

  Eigen::Index components() const noexcept { return shares.rows(); }
  Eigen::Index quantiles() const noexcept { return shares.cols(); }

  /// Expected share of every cell under the null, w_j / p.
  Matrix expected() const {
    return (null_weights / Scalar(quantiles())).replicate(1, quantiles());
  }

  /// Checks the shape and mass invariants. `tolerance` bounds both the row-sum
  /// mismatch and the deviation of sum(w) from one; published 4-decimal
  /// tables need a looser bound than computed matrices.
  void validate(Scalar tolerance = Scalar(1e-9)) const {
    const auto m = shares.rows();
    const auto p = shares.cols();
    if (m < 2 || p < 2) {
      throw TestPreconditionError("equality-of-proportions test needs at least two components and two quantile "
                                  "intervals (got m = " + std::to_string(m) + ", p = " + std::to_string(p) +
                                  "); with fewer there is nothing to compare");
    }
    if (null_weights.size() != m) throw ValidationError("share matrix: one null weight per component required");
    if (static_cast<Eigen::Index>(component_names.size()) != m) {
      throw ValidationError("share matrix: one name per component required");
    }
    if (!(effective_n > 0) || !std::isfinite(effective_n)) {
      throw ValidationError("share matrix: effective_n must be positive");
    }
    if (!shares.allFinite() || (shares.array() < 0).any()) {
      throw ValidationError("share matrix: shares must be finite and nonnegative");
    }
    if (!null_weights.allFinite() || (null_weights.array() < 0).any()) {
      throw ValidationError("share matrix: null weights must be finite and nonnegative");
    }
    if (std::abs(null_weights.sum() - Scalar(1)) > tolerance) {
      throw ValidationError("share matrix: null weights sum to " + std::to_string(static_cast<double>(null_weights.sum())));
    }
    const Vector gap = (shares.rowwise().sum() - null_weights).cwiseAbs();
    Eigen::Index worst = 0;
    if (gap.maxCoeff(&worst) > tolerance) {
      throw ValidationError("share matrix: shares of '" + component_names[static_cast<std::size_t>(worst)] +
                            "' sum to " + std::to_string(static_cast<double>(shares.row(worst).sum())) +
                            " but its null weight is " + std::to_string(static_cast<double>(null_weights(worst))));
    }
  }
};

using ShareMatrixd = ShareMatrix<double>;

template <std::floating_point Scalar>
struct TestResult {
  Scalar statistic = 0;
  int dof = 0;
  Scalar p_value = 1;
};

using TestResultd = TestResult<double>;

/// Cut the composite at its k/p quantiles and integrate every weighted
/// component over each interval.
template <std::floating_point Scalar>
ShareMatrix<Scalar> share_matrix(const Decomposition<Scalar>& d, int p, Scalar effective_n) {
  const auto m = static_cast<Eigen::Index>(d.size());
  if (m < 2 || p < 2) {
    throw TestPreconditionError("equality-of-proportions test needs at least two components and two quantile "
                                "intervals (got m = " + std::to_string(m) + ", p = " + std::to_string(p) +
                                "); with fewer there is nothing to compare");
  }
  const auto composite = reaggregate(d);
  std::vector<Scalar> cuts = quantile_cuts(composite, p);
  cuts.insert(cuts.begin(), -std::numeric_limits<Scalar>::infinity());
  cuts.push_back(std::numeric_limits<Scalar>::infinity());

  ShareMatrix<Scalar> s;
  s.shares.resize(m, p);
  s.null_weights = d.weights();
  s.effective_n = effective_n;
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& c = d[static_cast<std::size_t>(j)];
    s.component_names.push_back(c.name);
    Scalar previous = 0;
    for (Eigen::Index k = 0; k < p; ++k) {
      const Scalar upper = c.density.cdf(cuts[static_cast<std::size_t>(k + 1)]);
      s.shares(j, k) = c.weight * std::max(Scalar(0), upper - previous);
      previous = upper;
    }
  }
  s.validate();
  return s;
}

/// Pearson's chi-square on the quantile shares against the null shares w_j/p,
/// with (m-1)(p-1) degrees of freedom.
template <std::floating_point Scalar>
TestResult<Scalar> pearson_test(const ShareMatrix<Scalar>& s, Scalar tolerance = Scalar(1e-9)) {
  s.validate(tolerance);
  for (Eigen::Index j = 0; j < s.components(); ++j) {
    if (!(s.null_weights(j) > 0)) {
      throw DegenerateCategoryError("component '" + s.component_names[static_cast<std::size_t>(j)] +
                                    "' has zero null weight; the chi-square denominator vanishes");
    }
  }
  const auto expected = s.expected();
  const Scalar sum = ((s.shares - expected).array().square() / expected.array()).sum();
  TestResult<Scalar> r;
  r.statistic = s.effective_n * sum;
  r.dof = static_cast<int>((s.components() - 1) * (s.quantiles() - 1));
  r.p_value = chi_square_survival(r.statistic, Scalar(r.dof));
  return r;
}

template <std::floating_point Scalar>
TestResult<Scalar> test_decomposition(const Decomposition<Scalar>& d, int p, Scalar effective_n) {
  return pearson_test(share_matrix(d, p, effective_n));
}

}  // namespace kdecomp
