#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kdecomp/kernels.hpp"
#include "test_support.hpp"

using namespace kdecomp;
using kdecomp::oracle::kAllFamilies;

TEST(KernelPdf, Examples) {
  EXPECT_NEAR(kernel_pdf(KernelSpecd(KernelFamily::normal, 0.0, 1.0), 0.0), 1.0 / std::sqrt(2 * std::numbers::pi), 1e-15);
  EXPECT_EQ(kernel_pdf(KernelSpecd(KernelFamily::weibull, 10.0, 5.0), -1.0), 0.0);
  const KernelSpecd gumbel(KernelFamily::gumbel, 0.0, 1.0);
  EXPECT_NEAR(oracle::argmax([&](double x) { return kernel_pdf(gumbel, x); }, -10.0, 10.0), 0.0, 1e-6);
}

TEST(KernelCdf, Examples) {
  EXPECT_EQ(kernel_cdf(KernelSpecd(KernelFamily::normal, 0.0, 1.0), 0.0), 0.5);
  const KernelSpecd gumbel(KernelFamily::gumbel, 0.0, 1.0);
  EXPECT_NEAR(kernel_cdf(gumbel, 0.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(oracle::pdf_mass(gumbel, -60.0, 0.0), std::exp(-1.0), 1e-9);
  for (auto family : kAllFamilies) {
    const KernelSpecd k(family, 10.0, 2.0);
    const double far_left = std::max(k.support_lower(), k.center() - 50 * k.bandwidth());
    EXPECT_LE(kernel_cdf(k, far_left), 1e-9) << to_string(family);
  }
}

TEST(RealizeParameters, Examples) {
  const auto normal = realize_parameters(KernelFamily::normal, 3.0, 2.0);
  EXPECT_EQ(normal.location, 3.0);
  EXPECT_EQ(normal.scale, 2.0);

  const auto gumbel = realize_parameters(KernelFamily::gumbel, 0.0, 1.0);
  EXPECT_EQ(gumbel.location, 0.0);
  EXPECT_NEAR(gumbel.scale, 0.779696801233676, 1e-14);
  EXPECT_NEAR(std::sqrt(oracle::central_moment(KernelSpecd(KernelFamily::gumbel, 0.0, 1.0), 2)), 1.0, 1e-6);

  // scipy brentq on the same two conditions: k = 2.3744462296693665, lambda = 12.589131572145277
  const auto weibull = realize_parameters(KernelFamily::weibull, 10.0, 5.0);
  EXPECT_NEAR(weibull.shape, 2.3744462296693665, 1e-9);
  EXPECT_NEAR(weibull.scale, 12.589131572145277, 1e-8);
  EXPECT_NEAR(weibull.scale * std::pow((weibull.shape - 1) / weibull.shape, 1 / weibull.shape), 10.0, 1e-12);
  EXPECT_NEAR(std::sqrt(oracle::central_moment(KernelSpecd(KernelFamily::weibull, 10.0, 5.0), 2)), 5.0, 1e-6);
}

TEST(RealizeParameters, WeibullOutsideBracket) {
  // std/mode ratio below what shape 500 can reach
  EXPECT_THROW(realize_parameters(KernelFamily::weibull, 1000.0, 0.5), ParameterizationError);
  // center too close to zero for the bandwidth
  EXPECT_THROW(realize_parameters(KernelFamily::weibull, 1e-9, 10.0), ParameterizationError);
}

TEST(KernelSpec, Validation) {
  EXPECT_THROW(KernelSpecd(KernelFamily::normal, 0.0, 0.0), ValidationError);
  EXPECT_THROW(KernelSpecd(KernelFamily::normal, 0.0, -1.0), ValidationError);
  EXPECT_THROW(KernelSpecd(KernelFamily::gumbel, std::nan(""), 1.0), ValidationError);
  EXPECT_THROW(KernelSpecd(KernelFamily::weibull, 0.0, 1.0), ValidationError);
  EXPECT_THROW(KernelSpecd(KernelFamily::knotted_normal, 0.0, 1.0), ValidationError);
  EXPECT_THROW(KernelSpecd(KernelFamily::knotted_normal, -2.0, 1.0), ValidationError);
  EXPECT_NO_THROW(KernelSpecd(KernelFamily::gumbel, -5.0, 1.0));
}

TEST(KernelProperties, Normalization) {
  std::mt19937_64 rng(11);
  for (auto family : kAllFamilies) {
    for (int i = 0; i < 30; ++i) {
      const auto k = oracle::random_kernel(rng, family);
      const auto [lo, hi] = oracle::kernel_range(k);
      EXPECT_NEAR(oracle::pdf_mass(k, lo, hi), 1.0, 1e-7) << to_string(family) << " c=" << k.center() << " h=" << k.bandwidth();
    }
  }
}

TEST(KernelProperties, ModeCentering) {
  std::mt19937_64 rng(12);
  for (auto family : kAllFamilies) {
    for (int i = 0; i < 30; ++i) {
      const auto k = oracle::random_kernel(rng, family);
      const double lo = std::max(k.support_lower(), k.center() - 5 * k.bandwidth());
      const double mode = oracle::argmax([&k](double x) { return kernel_pdf(k, x); }, lo, k.center() + 5 * k.bandwidth());
      EXPECT_NEAR(mode, k.center(), 1e-6 * k.bandwidth()) << to_string(family);
    }
  }
}

TEST(KernelProperties, CdfIsIntegralOfPdf) {
  std::mt19937_64 rng(13);
  for (auto family : kAllFamilies) {
    for (int i = 0; i < 25; ++i) {
      const auto k = oracle::random_kernel(rng, family);
      const auto [lo, hi] = oracle::kernel_range(k, 8.0);
      const double a = oracle::uniform(rng, lo, hi);
      const double b = oracle::uniform(rng, a, hi);
      EXPECT_NEAR(oracle::pdf_mass(k, a, b), kernel_cdf(k, b) - kernel_cdf(k, a), 1e-7) << to_string(family);
    }
  }
}

TEST(KernelProperties, CdfDerivativeIsPdf) {
  std::mt19937_64 rng(14);
  for (auto family : kAllFamilies) {
    const auto k = oracle::random_kernel(rng, family);
    const auto [lo, hi] = oracle::kernel_range(k, 3.0);
    for (int i = 0; i < 100; ++i) {
      const double x = oracle::uniform(rng, std::max(lo, k.support_lower() + 0.05 * k.bandwidth()), hi);
      const double step = 1e-5 * k.bandwidth();
      const double derivative = (kernel_cdf(k, x + step) - kernel_cdf(k, x - step)) / (2 * step);
      const double density = kernel_pdf(k, x);
      EXPECT_LT(std::abs(derivative - density), 1e-4 * density + 1e-12) << to_string(family) << " x=" << x;
    }
  }
}

TEST(KernelProperties, RightSkew) {
  std::mt19937_64 rng(15);
  for (int i = 0; i < 20; ++i) {
    const auto g = oracle::random_kernel(rng, KernelFamily::gumbel);
    EXPECT_GT(oracle::central_moment(g, 3), 0.0);
    const auto w = oracle::random_kernel(rng, KernelFamily::weibull);
    if (w.parameters().shape < 3.6) {
      EXPECT_GT(oracle::central_moment(w, 3), 0.0) << "shape " << w.parameters().shape;
    }
  }
}

TEST(KernelProperties, KnottedHasNoNegativeMass) {
  const KernelSpecd k(KernelFamily::knotted_normal, 0.5, 3.0);
  EXPECT_EQ(kernel_cdf(k, 0.0), 0.0);
  EXPECT_EQ(kernel_cdf(k, -10.0), 0.0);
  EXPECT_EQ(kernel_pdf(k, -1e-9), 0.0);
  EXPECT_NEAR(oracle::pdf_mass(k, 0.0, 200.0), 1.0, 1e-9);
  // truncation narrows the spread
  EXPECT_LT(kernel_std(k), k.bandwidth());
  EXPECT_NEAR(kernel_std(k), std::sqrt(oracle::central_moment(k, 2)), 1e-7);
}

TEST(KernelProperties, StdMatchesBandwidth) {
  for (auto family : {KernelFamily::normal, KernelFamily::gumbel, KernelFamily::weibull}) {
    const KernelSpecd k(family, 40.0, 12.0);
    EXPECT_NEAR(kernel_std(k), 12.0, 1e-9);
  }
}
