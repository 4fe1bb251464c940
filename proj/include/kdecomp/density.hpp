#pragma once

// Composite kernel densities, their exact decomposition by a categorical label,
// and reaggregation of weighted components.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kdecomp/bandwidth.hpp"
#include "kdecomp/errors.hpp"
#include "kdecomp/kernels.hpp"
#include "kdecomp/numerics.hpp"

namespace kdecomp {

inline constexpr double kWeightSumTolerance = 1e-12;

struct Observation {
  double value = 0.0;
  std::string paper_id;
  std::map<std::string, std::string, std::less<>> labels;
  bool positive_only = false;
  std::size_t line = 0;  // 1-based source line, 0 when not from a file

  std::optional<std::string_view> label(std::string_view dimension) const {
    auto it = labels.find(dimension);
    if (it == labels.end()) return std::nullopt;
    return std::string_view(it->second);
  }
};

/// Rule choosing a kernel family per observation.
enum class KernelScheme { normal, knotted_normal, gumbel, weibull, weibull_gumbel };

inline std::optional<KernelScheme> parse_kernel_scheme(std::string_view name) {
  if (name == "weibull-gumbel" || name == "weibull_gumbel") return KernelScheme::weibull_gumbel;
  if (auto family = parse_kernel_family(name)) {
    switch (*family) {
      case KernelFamily::normal: return KernelScheme::normal;
      case KernelFamily::knotted_normal: return KernelScheme::knotted_normal;
      case KernelFamily::gumbel: return KernelScheme::gumbel;
      case KernelFamily::weibull: return KernelScheme::weibull;
    }
  }
  return std::nullopt;
}

/// Weibull for cost-only observations and Gumbel otherwise, under the default
/// scheme; a fixed family under the others.
inline KernelFamily family_for(KernelScheme scheme, const Observation& obs) {
  switch (scheme) {
    case KernelScheme::normal: return KernelFamily::normal;
    case KernelScheme::knotted_normal: return KernelFamily::knotted_normal;
    case KernelScheme::gumbel: return KernelFamily::gumbel;
    case KernelScheme::weibull: return KernelFamily::weibull;
    case KernelScheme::weibull_gumbel:
      return obs.positive_only ? KernelFamily::weibull : KernelFamily::gumbel;
  }
  return KernelFamily::normal;
}

namespace detail {

// Neumaier summation; weight sums are checked at 1e-12 for thousands of terms.
template <std::floating_point Scalar, class Range>
Scalar compensated_sum(const Range& range) {
  Scalar sum = 0;
  Scalar carry = 0;
  for (Scalar v : range) {
    const Scalar t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

inline std::string where(const Observation& obs, std::size_t index) {
  if (obs.line > 0) return "row at line " + std::to_string(obs.line);
  return "observation " + std::to_string(index);
}

}  // namespace detail

template <std::floating_point Scalar>
struct WeightedKernel {
  KernelSpec<Scalar> spec;
  Scalar weight;
};

/// Weighted sum of kernels. Weights are nonnegative and sum to one.
template <std::floating_point Scalar>
class CompositeDensity {
public:
  using scalar_type = Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit CompositeDensity(std::vector<WeightedKernel<Scalar>> kernels) : kernels_(std::move(kernels)) {
    if (kernels_.empty()) throw ValidationError("composite density needs at least one kernel");
    std::vector<Scalar> weights;
    weights.reserve(kernels_.size());
    for (const auto& k : kernels_) {
      if (!(k.weight >= 0) || !std::isfinite(k.weight)) {
        throw ValidationError("kernel weights must be nonnegative and finite");
      }
      weights.push_back(k.weight);
    }
    const Scalar total = detail::compensated_sum<Scalar>(weights);
    if (std::abs(total - Scalar(1)) > Scalar(kWeightSumTolerance)) {
      throw ValidationError("kernel weights sum to " + std::to_string(static_cast<double>(total)) + ", expected 1");
    }
  }

  std::span<const WeightedKernel<Scalar>> kernels() const noexcept { return kernels_; }
  std::size_t size() const noexcept { return kernels_.size(); }

  Scalar pdf(Scalar x) const {
    Scalar sum = 0;
    for (const auto& k : kernels_) sum += k.weight * kernel_pdf(k.spec, x);
    return sum;
  }

  Scalar cdf(Scalar x) const {
    Scalar sum = 0;
    for (const auto& k : kernels_) sum += k.weight * kernel_cdf(k.spec, x);
    return std::clamp(sum, Scalar(0), Scalar(1));
  }

  /// [min(center - margin*bw), max(center + margin*bw)] over the kernels,
  /// clamped to each kernel's support.
  std::pair<Scalar, Scalar> span_of_centers(Scalar margin) const {
    Scalar lo = std::numeric_limits<Scalar>::infinity();
    Scalar hi = -std::numeric_limits<Scalar>::infinity();
    for (const auto& k : kernels_) {
      lo = std::min(lo, std::max(k.spec.support_lower(), k.spec.center() - margin * k.spec.bandwidth()));
      hi = std::max(hi, k.spec.center() + margin * k.spec.bandwidth());
    }
    return {lo, hi};
  }

private:
  std::vector<WeightedKernel<Scalar>> kernels_;
};

using CompositeDensityd = CompositeDensity<double>;

template <std::floating_point Scalar>
Scalar pdf(const CompositeDensity<Scalar>& d, Scalar x) {
  return d.pdf(x);
}

template <std::floating_point Scalar>
Scalar cdf(const CompositeDensity<Scalar>& d, Scalar x) {
  return d.cdf(x);
}

/// Elementwise pdf over a vector of points.
template <std::floating_point Scalar, class Derived>
typename CompositeDensity<Scalar>::Vector pdf(const CompositeDensity<Scalar>& d, const Eigen::DenseBase<Derived>& xs) {
  return xs.derived().unaryExpr([&d](Scalar x) { return d.pdf(x); });
}

template <std::floating_point Scalar, class Derived>
typename CompositeDensity<Scalar>::Vector cdf(const CompositeDensity<Scalar>& d, const Eigen::DenseBase<Derived>& xs) {
  return xs.derived().unaryExpr([&d](Scalar x) { return d.cdf(x); });
}

inline constexpr double kQuantileMargin = 50.0;
inline constexpr int kQuantileBracketExpansions = 4;

/// x with cdf(x) = q, by bracketed root finding. The bracket starts at the
/// kernel centers +/- 50 bandwidths and doubles its margin up to four times.
template <std::floating_point Scalar>
Scalar quantile(const CompositeDensity<Scalar>& d, Scalar q) {
  if (!(q > 0 && q < 1)) throw DomainError("quantile: probability must lie in (0, 1)");
  Scalar margin = Scalar(kQuantileMargin);
  for (int attempt = 0; attempt <= kQuantileBracketExpansions; ++attempt, margin *= 2) {
    const auto [lo, hi] = d.span_of_centers(margin);
    if (d.cdf(lo) <= q && d.cdf(hi) >= q) {
      auto residual = [&d, q](Scalar x) { return d.cdf(x) - q; };
      return find_root(residual, lo, hi, Tolerance{1e-13, 1e-16, 1000});
    }
  }
  throw BracketError("quantile: could not bracket q = " + std::to_string(static_cast<double>(q)));
}

/// P_1 < ... < P_{p-1}: the interior cut points of p equal-probability intervals.
template <std::floating_point Scalar>
std::vector<Scalar> quantile_cuts(const CompositeDensity<Scalar>& d, int p) {
  if (p < 1) throw DomainError("quantile_cuts: need p >= 1");
  std::vector<Scalar> cuts;
  cuts.reserve(static_cast<std::size_t>(p - 1));
  for (int k = 1; k < p; ++k) cuts.push_back(quantile(d, Scalar(k) / Scalar(p)));
  return cuts;
}

/// Kernel density of weighted observations with a common bandwidth.
template <std::floating_point Scalar = double>
CompositeDensity<Scalar> fit(std::span<const Observation> observations, KernelScheme scheme, Scalar bandwidth,
                             std::span<const Scalar> weights) {
  if (observations.empty()) throw ValidationError("fit: no observations");
  if (weights.size() != observations.size()) throw ValidationError("fit: one weight per observation required");
  std::vector<WeightedKernel<Scalar>> kernels;
  kernels.reserve(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& obs = observations[i];
    if (!std::isfinite(obs.value)) throw ValidationError("fit: non-finite value in " + detail::where(obs, i));
    const KernelFamily family = family_for(scheme, obs);
    if (positive_support(family) && !(obs.value > 0)) {
      throw ValidationError("fit: " + detail::where(obs, i) + " has value " + std::to_string(obs.value) +
                            " but its kernel (" + std::string(to_string(family)) + ") needs a positive value");
    }
    try {
      kernels.push_back({KernelSpec<Scalar>(family, Scalar(obs.value), bandwidth), weights[i]});
    } catch (const Error& e) {
      throw ParameterizationError("fit: " + detail::where(obs, i) + ": " + e.what());
    }
  }
  return CompositeDensity<Scalar>(std::move(kernels));
}

template <std::floating_point Scalar = double>
CompositeDensity<Scalar> fit(std::span<const Observation> observations, KernelScheme scheme, Scalar bandwidth,
                             const std::vector<Scalar>& weights) {
  return fit<Scalar>(observations, scheme, bandwidth, std::span<const Scalar>(weights));
}

template <std::floating_point Scalar>
struct Component {
  std::string name;
  CompositeDensity<Scalar> density;
  Scalar weight;
};

/// Ordered components whose weights sum to one.
template <std::floating_point Scalar>
class Decomposition {
public:
  explicit Decomposition(std::vector<Component<Scalar>> components) : components_(std::move(components)) {
    if (components_.empty()) throw ValidationError("decomposition needs at least one component");
    std::vector<Scalar> weights;
    for (const auto& c : components_) {
      if (!(c.weight >= 0) || !std::isfinite(c.weight)) {
        throw ValidationError("component weights must be nonnegative and finite");
      }
      weights.push_back(c.weight);
    }
    const Scalar total = detail::compensated_sum<Scalar>(weights);
    if (std::abs(total - Scalar(1)) > Scalar(kWeightSumTolerance)) {
      throw ValidationError("component weights sum to " + std::to_string(static_cast<double>(total)) + ", expected 1");
    }
  }

  std::span<const Component<Scalar>> components() const noexcept { return components_; }
  std::size_t size() const noexcept { return components_.size(); }
  const Component<Scalar>& operator[](std::size_t j) const { return components_[j]; }

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights() const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w(static_cast<Eigen::Index>(components_.size()));
    for (std::size_t j = 0; j < components_.size(); ++j) w(static_cast<Eigen::Index>(j)) = components_[j].weight;
    return w;
  }

private:
  std::vector<Component<Scalar>> components_;
};

using Decompositiond = Decomposition<double>;

/// The mixture sum_j w_j f_j, flattened into a single kernel list.
template <std::floating_point Scalar>
CompositeDensity<Scalar> reaggregate(const Decomposition<Scalar>& d) {
  std::vector<WeightedKernel<Scalar>> kernels;
  for (const auto& c : d.components()) {
    for (const auto& k : c.density.kernels()) kernels.push_back({k.spec, c.weight * k.weight});
  }
  return CompositeDensity<Scalar>(std::move(kernels));
}

enum class BandwidthScope { global, per_component };

struct DecomposeOptions {
  KernelScheme scheme = KernelScheme::weibull_gumbel;
  BandwidthRule rule = BandwidthRule::silverman();
  BandwidthScope scope = BandwidthScope::global;
  // Categories listed here come first, in this order; others follow in order
  // of first appearance.
  std::vector<std::string> category_order;
};

namespace detail {

template <std::floating_point Scalar>
bool all_equal(std::span<const Scalar> weights) {
  return std::adjacent_find(weights.begin(), weights.end(), std::not_equal_to<>()) == weights.end();
}

template <std::floating_point Scalar>
Scalar rule_bandwidth(const BandwidthRule& rule, std::span<const Scalar> values, std::span<const Scalar> weights) {
  if (all_equal(weights)) return bandwidth(rule, values);
  return bandwidth(rule, values, weights);
}

}  // namespace detail

/// Bandwidth from the rule applied to all observations, then fit().
template <std::floating_point Scalar = double>
CompositeDensity<Scalar> fit(std::span<const Observation> observations, KernelScheme scheme,
                             const BandwidthRule& rule, std::span<const Scalar> weights) {
  std::vector<Scalar> values;
  values.reserve(observations.size());
  for (const auto& o : observations) values.push_back(Scalar(o.value));
  if (weights.size() != observations.size()) throw ValidationError("fit: one weight per observation required");
  return fit<Scalar>(observations, scheme, detail::rule_bandwidth<Scalar>(rule, values, weights), weights);
}

/// Splits the observations by their label for `dimension`. Component j gets
/// the total weight of its observations and, internally, the renormalized
/// per-observation weights. Under the global bandwidth scope the reaggregated
/// mixture equals the pooled fit.
template <std::floating_point Scalar = double>
Decomposition<Scalar> decompose(std::span<const Observation> observations, std::string_view dimension,
                                std::span<const Scalar> weights, const DecomposeOptions& options = {}) {
  if (observations.empty()) throw ValidationError("decompose: no observations");
  if (weights.size() != observations.size()) throw ValidationError("decompose: one weight per observation required");

  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>, std::less<>> members;
  for (const auto& name : options.category_order) {
    if (!members.contains(name)) {
      members.emplace(name, std::vector<std::size_t>{});
      order.push_back(name);
    }
  }
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto label = observations[i].label(dimension);
    if (!label) {
      throw ValidationError("decompose: " + detail::where(observations[i], i) + " has no label for dimension '" +
                            std::string(dimension) + "'");
    }
    auto it = members.find(*label);
    if (it == members.end()) {
      it = members.emplace(std::string(*label), std::vector<std::size_t>{}).first;
      order.emplace_back(*label);
    }
    it->second.push_back(i);
  }

  std::optional<Scalar> shared_h;
  if (options.scope == BandwidthScope::global) {
    std::vector<Scalar> values;
    for (const auto& o : observations) values.push_back(Scalar(o.value));
    shared_h = detail::rule_bandwidth<Scalar>(options.rule, values, weights);
  }

  std::vector<Component<Scalar>> components;
  for (const auto& name : order) {
    const auto& idx = members.at(name);
    if (idx.empty()) continue;
    std::vector<Observation> subset;
    std::vector<Scalar> sub_weights;
    std::vector<Scalar> sub_values;
    for (auto i : idx) {
      subset.push_back(observations[i]);
      sub_weights.push_back(weights[i]);
      sub_values.push_back(Scalar(observations[i].value));
    }
    const Scalar total = detail::compensated_sum<Scalar>(sub_weights);
    if (!(total > 0)) throw ValidationError("decompose: category '" + name + "' has zero total weight");
    for (auto& w : sub_weights) w /= total;

    Scalar h;
    if (shared_h) {
      h = *shared_h;
    } else {
      try {
        h = detail::rule_bandwidth<Scalar>(options.rule, sub_values, sub_weights);
      } catch (const Error& e) {
        throw ValidationError("decompose: per-component bandwidth for '" + name + "': " + e.what());
      }
    }
    components.push_back({name, fit<Scalar>(subset, options.scheme, h, sub_weights), total});
  }
  return Decomposition<Scalar>(std::move(components));
}

template <std::floating_point Scalar = double>
Decomposition<Scalar> decompose(std::span<const Observation> observations, std::string_view dimension,
                                const std::vector<Scalar>& weights, const DecomposeOptions& options = {}) {
  return decompose<Scalar>(observations, dimension, std::span<const Scalar>(weights), options);
}

}  // namespace kdecomp
