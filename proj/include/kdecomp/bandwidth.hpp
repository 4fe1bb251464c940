#pragma once

#include <cmath>
#include <concepts>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kdecomp/errors.hpp"

namespace kdecomp {

class BandwidthRule {
public:
  enum class Kind { silverman, sample_std, fixed };

  static BandwidthRule silverman() { return BandwidthRule(Kind::silverman, 0.0); }
  static BandwidthRule sample_std() { return BandwidthRule(Kind::sample_std, 0.0); }
  static BandwidthRule fixed(double value) {
    if (!(value > 0) || !std::isfinite(value)) throw ValidationError("fixed bandwidth must be positive and finite");
    return BandwidthRule(Kind::fixed, value);
  }

  Kind kind() const noexcept { return kind_; }
  double value() const noexcept { return value_; }
  bool data_driven() const noexcept { return kind_ != Kind::fixed; }

  // "silverman", "sd" or "fixed=V"
  static std::optional<BandwidthRule> parse(std::string_view text) {
    if (text == "silverman") return silverman();
    if (text == "sd" || text == "std" || text == "sample-std") return sample_std();
    constexpr std::string_view prefix = "fixed=";
    if (text.substr(0, prefix.size()) == prefix) {
      const std::string number(text.substr(prefix.size()));
      try {
        std::size_t used = 0;
        const double v = std::stod(number, &used);
        if (used != number.size()) return std::nullopt;
        return fixed(v);
      } catch (const std::exception&) {
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  std::string to_string() const {
    switch (kind_) {
      case Kind::silverman: return "silverman";
      case Kind::sample_std: return "sd";
      case Kind::fixed: return "fixed=" + std::to_string(value_);
    }
    return "?";
  }

private:
  BandwidthRule(Kind kind, double value) : kind_(kind), value_(value) {}

  Kind kind_;
  double value_;
};

// Silverman bandwidth expressed as a multiple of the standard deviation.
inline constexpr double kSilvermanFactor = 1.06;

namespace detail {

template <std::floating_point Scalar>
Scalar apply_rule(const BandwidthRule& rule, Scalar sd, Scalar n) {
  if (!(sd > 0)) throw DegenerateDataError("bandwidth: sample has zero variance");
  if (rule.kind() == BandwidthRule::Kind::silverman) return Scalar(kSilvermanFactor) * sd * std::pow(n, Scalar(-0.2));
  return sd;
}

}  // namespace detail

/// Sample standard deviation with the n-1 denominator (two-pass).
template <std::floating_point Scalar>
Scalar sample_std(std::span<const Scalar> values) {
  const auto n = values.size();
  if (n < 2) throw ValidationError("sample standard deviation needs at least 2 values");
  Scalar mean = 0;
  for (Scalar v : values) mean += v;
  mean /= Scalar(n);
  Scalar ss = 0;
  for (Scalar v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / Scalar(n - 1));
}

/// Weighted standard deviation, reading the weights as vote frequencies scaled
/// to the Kish effective count n_eff = (sum w)^2 / sum w^2. Equal weights give
/// the ordinary n-1 estimator.
template <std::floating_point Scalar>
std::pair<Scalar, Scalar> weighted_std(std::span<const Scalar> values, std::span<const Scalar> weights) {
  if (values.size() != weights.size()) throw ValidationError("bandwidth: values and weights differ in length");
  Scalar total = 0;
  Scalar total_sq = 0;
  std::size_t positive = 0;
  for (Scalar w : weights) {
    if (!(w >= 0) || !std::isfinite(w)) throw ValidationError("bandwidth: weights must be nonnegative and finite");
    total += w;
    total_sq += w * w;
    if (w > 0) ++positive;
  }
  if (positive < 2) throw ValidationError("bandwidth: data-driven rule needs at least 2 weighted values");
  Scalar mean = 0;
  for (std::size_t i = 0; i < values.size(); ++i) mean += weights[i] * values[i];
  mean /= total;
  Scalar ss = 0;
  for (std::size_t i = 0; i < values.size(); ++i) ss += weights[i] * (values[i] - mean) * (values[i] - mean);
  ss /= total;
  const Scalar n_eff = total * total / total_sq;
  return {std::sqrt(ss * n_eff / (n_eff - Scalar(1))), n_eff};
}

/// Bandwidth for an unweighted sample.
template <std::floating_point Scalar>
Scalar bandwidth(const BandwidthRule& rule, std::span<const Scalar> values) {
  if (!rule.data_driven()) return Scalar(rule.value());
  if (values.size() < 2) throw ValidationError("bandwidth: data-driven rule needs at least 2 values");
  return detail::apply_rule(rule, sample_std(values), Scalar(values.size()));
}

/// Bandwidth for a weighted sample; n in the Silverman factor is the Kish
/// effective count.
template <std::floating_point Scalar>
Scalar bandwidth(const BandwidthRule& rule, std::span<const Scalar> values, std::span<const Scalar> weights) {
  if (!rule.data_driven()) return Scalar(rule.value());
  const auto [sd, n_eff] = weighted_std(values, weights);
  return detail::apply_rule(rule, sd, n_eff);
}

template <std::floating_point Scalar>
Scalar bandwidth(const BandwidthRule& rule, const std::vector<Scalar>& values) {
  return bandwidth(rule, std::span<const Scalar>(values));
}

}  // namespace kdecomp
