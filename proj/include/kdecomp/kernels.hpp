#pragma once

// Kernel families parameterized by a center and a bandwidth.
//
// The center is always the mode of the realized density. The bandwidth is
// the standard deviation of the kernel, except for the knotted Normal where
// it is the standard deviation of the Normal before truncation at zero.

#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "kdecomp/errors.hpp"
#include "kdecomp/numerics.hpp"

namespace kdecomp {

enum class KernelFamily { normal, knotted_normal, gumbel, weibull };

inline std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::normal: return "normal";
    case KernelFamily::knotted_normal: return "knotted";
    case KernelFamily::gumbel: return "gumbel";
    case KernelFamily::weibull: return "weibull";
  }
  return "unknown";
}

inline std::optional<KernelFamily> parse_kernel_family(std::string_view name) {
  if (name == "normal") return KernelFamily::normal;
  if (name == "knotted" || name == "knotted_normal" || name == "knotted-normal") return KernelFamily::knotted_normal;
  if (name == "gumbel") return KernelFamily::gumbel;
  if (name == "weibull") return KernelFamily::weibull;
  return std::nullopt;
}

/// True for the families defined on [0, inf).
constexpr bool positive_support(KernelFamily family) {
  return family == KernelFamily::knotted_normal || family == KernelFamily::weibull;
}

/// Natural parameters of a family.
///   normal:   location = mean, scale = std
///   knotted:  location/scale of the untruncated Normal, normalizer = P(X >= 0)
///   gumbel:   location = mode, scale = beta
///   weibull:  scale = lambda, shape = k
template <std::floating_point Scalar>
struct KernelParameters {
  Scalar location = 0;
  Scalar scale = 1;
  Scalar shape = 1;
  Scalar normalizer = 1;
};

namespace detail {

// Solved shape parameters are restricted to this interval. The lower end keeps
// the mode in the interior of the support.
inline constexpr double kWeibullShapeMin = 1.0 + 1e-8;
inline constexpr double kWeibullShapeMax = 500.0;

// (Gamma(1+2/k) - Gamma(1+1/k)^2), formed through lgamma and expm1 so that the
// large-k regime does not cancel catastrophically.
template <std::floating_point Scalar>
Scalar weibull_unit_variance(Scalar k) {
  const Scalar lg1 = std::lgamma(Scalar(1) + Scalar(1) / k);
  const Scalar lg2 = std::lgamma(Scalar(1) + Scalar(2) / k);
  return std::exp(Scalar(2) * lg1) * std::expm1(lg2 - Scalar(2) * lg1);
}

// mode / lambda for shape k > 1.
template <std::floating_point Scalar>
Scalar weibull_unit_mode(Scalar k) {
  return std::pow((k - Scalar(1)) / k, Scalar(1) / k);
}

// log(std / mode) as a function of the shape alone; strictly decreasing on (1, inf).
template <std::floating_point Scalar>
Scalar weibull_log_spread_ratio(Scalar k) {
  return Scalar(0.5) * std::log(weibull_unit_variance(k)) - std::log1p(-Scalar(1) / k) / k;
}

template <std::floating_point Scalar>
std::string describe(KernelFamily family, Scalar center, Scalar bandwidth) {
  std::ostringstream os;
  os.precision(17);
  os << to_string(family) << "(center=" << center << ", bandwidth=" << bandwidth << ")";
  return os.str();
}

}  // namespace detail

template <std::floating_point Scalar>
void validate_kernel(KernelFamily family, Scalar center, Scalar bandwidth) {
  if (!std::isfinite(center)) throw ValidationError("kernel center must be finite");
  if (!(bandwidth > 0) || !std::isfinite(bandwidth)) {
    throw ValidationError("kernel bandwidth must be positive and finite, got " + detail::describe(family, center, bandwidth));
  }
  if (positive_support(family) && !(center > 0)) {
    throw ValidationError("positive-support kernel needs center > 0, got " + detail::describe(family, center, bandwidth));
  }
}

/// Maps (center, bandwidth) to the family's natural parameters with the mode at
/// center. Normal, knotted and Gumbel are closed form; Weibull solves for the
/// shape whose std/mode ratio equals bandwidth/center.
template <std::floating_point Scalar>
KernelParameters<Scalar> realize_parameters(KernelFamily family, Scalar center, Scalar bandwidth) {
  validate_kernel(family, center, bandwidth);
  KernelParameters<Scalar> p;
  switch (family) {
    case KernelFamily::normal:
      p.location = center;
      p.scale = bandwidth;
      break;
    case KernelFamily::knotted_normal:
      p.location = center;
      p.scale = bandwidth;
      p.normalizer = std_normal_cdf(center / bandwidth);
      break;
    case KernelFamily::gumbel:
      p.location = center;
      p.scale = bandwidth * std::sqrt(Scalar(6)) / std::numbers::pi_v<Scalar>;
      break;
    case KernelFamily::weibull: {
      const Scalar target = std::log(bandwidth) - std::log(center);
      auto residual = [target](Scalar k) { return detail::weibull_log_spread_ratio(k) - target; };
      const Scalar k_lo = Scalar(detail::kWeibullShapeMin);
      const Scalar k_hi = Scalar(detail::kWeibullShapeMax);
      const Scalar r_lo = residual(k_lo);
      const Scalar r_hi = residual(k_hi);
      if (r_lo < 0 || r_hi > 0) {
        std::ostringstream os;
        os << "no Weibull shape in (1, " << detail::kWeibullShapeMax << "] gives mode " << center << " and std "
           << bandwidth << " (bandwidth/center = " << bandwidth / center << ", feasible range ["
           << std::exp(r_hi + target) << ", " << std::exp(r_lo + target) << "])";
        throw ParameterizationError(os.str());
      }
      const Scalar k = find_root(residual, k_lo, k_hi, Tolerance{1e-15, 1e-15, 400});
      p.shape = k;
      p.scale = center / detail::weibull_unit_mode(k);
      break;
    }
  }
  return p;
}

/// One kernel: family, center (mode) and bandwidth, with realized parameters.
/// Immutable once constructed.
template <std::floating_point Scalar>
class KernelSpec {
public:
  using scalar_type = Scalar;

  KernelSpec(KernelFamily family, Scalar center, Scalar bandwidth)
      : family_(family), center_(center), bandwidth_(bandwidth),
        params_(realize_parameters(family, center, bandwidth)) {}

  KernelFamily family() const noexcept { return family_; }
  Scalar center() const noexcept { return center_; }
  Scalar bandwidth() const noexcept { return bandwidth_; }
  const KernelParameters<Scalar>& parameters() const noexcept { return params_; }

  Scalar support_lower() const noexcept {
    return positive_support(family_) ? Scalar(0) : -std::numeric_limits<Scalar>::infinity();
  }

private:
  KernelFamily family_;
  Scalar center_;
  Scalar bandwidth_;
  KernelParameters<Scalar> params_;
};

using KernelSpecd = KernelSpec<double>;

template <std::floating_point Scalar>
Scalar kernel_pdf(const KernelSpec<Scalar>& spec, Scalar x) {
  const auto& p = spec.parameters();
  switch (spec.family()) {
    case KernelFamily::normal:
      return std_normal_pdf((x - p.location) / p.scale) / p.scale;
    case KernelFamily::knotted_normal:
      if (x < 0) return Scalar(0);
      return std_normal_pdf((x - p.location) / p.scale) / (p.scale * p.normalizer);
    case KernelFamily::gumbel: {
      const Scalar z = (x - p.location) / p.scale;
      return std::exp(-(z + std::exp(-z))) / p.scale;
    }
    case KernelFamily::weibull: {
      if (x < 0) return Scalar(0);
      if (x == 0) return Scalar(0);  // shape > 1
      const Scalar u = x / p.scale;
      const Scalar uk = std::pow(u, p.shape);
      return p.shape / p.scale * (uk / u) * std::exp(-uk);
    }
  }
  return Scalar(0);
}

template <std::floating_point Scalar>
Scalar kernel_cdf(const KernelSpec<Scalar>& spec, Scalar x) {
  const auto& p = spec.parameters();
  if (std::isinf(x)) return x > 0 ? Scalar(1) : Scalar(0);
  switch (spec.family()) {
    case KernelFamily::normal:
      return std_normal_cdf((x - p.location) / p.scale);
    case KernelFamily::knotted_normal: {
      if (x <= 0) return Scalar(0);
      // Phi(z) - Phi(z0) written with upper tails when both are far right.
      const Scalar z = (x - p.location) / p.scale;
      const Scalar z0 = -p.location / p.scale;
      const Scalar mass = std_normal_cdf(-z0) - std_normal_cdf(-z);
      return std::clamp(mass / p.normalizer, Scalar(0), Scalar(1));
    }
    case KernelFamily::gumbel: {
      const Scalar z = (x - p.location) / p.scale;
      return std::exp(-std::exp(-z));
    }
    case KernelFamily::weibull: {
      if (x <= 0) return Scalar(0);
      return -std::expm1(-std::pow(x / p.scale, p.shape));
    }
  }
  return Scalar(0);
}

/// Standard deviation of the realized density. Equals the bandwidth except for
/// the knotted Normal, where truncation narrows it.
template <std::floating_point Scalar>
Scalar kernel_std(const KernelSpec<Scalar>& spec) {
  const auto& p = spec.parameters();
  switch (spec.family()) {
    case KernelFamily::normal:
      return p.scale;
    case KernelFamily::knotted_normal: {
      const Scalar alpha = -p.location / p.scale;
      const Scalar hazard = std_normal_pdf(alpha) / p.normalizer;
      return p.scale * std::sqrt(Scalar(1) + alpha * hazard - hazard * hazard);
    }
    case KernelFamily::gumbel:
      return p.scale * std::numbers::pi_v<Scalar> / std::sqrt(Scalar(6));
    case KernelFamily::weibull:
      return p.scale * std::sqrt(detail::weibull_unit_variance(p.shape));
  }
  return Scalar(0);
}

}  // namespace kdecomp
