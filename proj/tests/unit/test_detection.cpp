// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "core/detection.hpp"
#include "core/error.hpp"

namespace normsep::detection {
namespace {

DetectionSpec spec(double d, double m, int p, double delta) {
  DetectionSpec s;
  s.delta_min = d;
  s.m_bound = m;
  s.p = p;
  s.delta = delta;
  return s;
}

TEST(Bounds, Values) {
  const auto b = detection_bounds(spec(0.5, 1.0, 97, 0.05));
  EXPECT_NEAR(b.gamma, std::log(1940.0), 1e-12);
  EXPECT_NEAR(b.gamma, 7.5704, 1e-4);
  EXPECT_NEAR(b.lower, 15.14, 1e-2);
  EXPECT_NEAR(b.upper, 126.14, 1e-2);
  const auto e = detection_bounds(spec(0.7, 0.7, 23, 0.1));
  EXPECT_NEAR(e.lower, e.gamma / 0.7, 1e-12);
}

TEST(Bounds, LinearInGamma) {
  // p = 20 and delta = 0.1 give gamma = ln 200; p = 4000 gives 2 ln 200.
  const auto a = detection_bounds(spec(0.3, 1.0, 20, 0.1));
  const auto b = detection_bounds(spec(0.3, 1.0, 4000, 0.1));
  EXPECT_NEAR(b.gamma, 2 * a.gamma, 1e-12);
  EXPECT_NEAR(b.lower, 2 * a.lower, 1e-12);
  const double tail = 8 * std::log(10.0) / 0.09;
  EXPECT_NEAR(b.upper - tail, 2 * (a.upper - tail), 1e-9);
}

TEST(Bounds, InvalidSpec) {
  EXPECT_THROW(detection_bounds(spec(0.0, 1.0, 5, 0.05)), Error);
  EXPECT_THROW(detection_bounds(spec(2.0, 1.0, 5, 0.05)), Error);
  EXPECT_THROW(detection_bounds(spec(0.5, 1.0, 5, 1.0)), Error);
}

TEST(Simulate, ConstantIsExact) {
  const auto s = spec(0.5, 1.0, 97, 0.05);
  const auto e = simulate_detection(s, IncrementLaw::kConstant, 100, 1);
  EXPECT_EQ(e.mean_tau, std::ceil(std::log(1940.0) / 0.5));
  EXPECT_EQ(e.stderr_tau, 0.0);
}

TEST(Simulate, DegenerateThreshold) {
  // gamma = ln(2 / 0.9) ~ 0.8 <= delta_min
  const auto s = spec(0.9, 1.0, 2, 0.9);
  for (auto law : {IncrementLaw::kConstant, IncrementLaw::kBernoulliScaled,
                   IncrementLaw::kClippedGaussian}) {
    if (law == IncrementLaw::kConstant) {
      EXPECT_EQ(simulate_detection(s, law, 50, 0).mean_tau, 1.0);
    }
  }
  const auto c = simulate_detection(spec(1.0, 1.0, 2, 0.9),
                                    IncrementLaw::kBernoulliScaled, 200, 3);
  EXPECT_EQ(c.mean_tau, 1.0);
}

TEST(Simulate, BernoulliWithinSandwich) {
  const auto s = spec(0.5, 1.0, 97, 0.05);
  const auto b = detection_bounds(s);
  const auto e = simulate_detection(s, IncrementLaw::kBernoulliScaled, 10000, 7);
  EXPECT_GE(e.mean_tau, b.lower - 1);
  EXPECT_LE(e.mean_tau, b.upper + 3 * e.stderr_tau);
  // Wald: E[tau] ~ gamma / mean plus an overshoot below one step.
  EXPECT_NEAR(e.mean_tau, b.gamma / 0.5 + 0.5, 1.0);
}

TEST(Simulate, ClippedGaussianMeanMatchesDelta) {
  const auto s = spec(0.3, 1.0, 23, 0.05);
  const double mu = clipped_gaussian_center(s);
  // Clipped mean by quadrature must equal delta_min.
  const double sd = 0.25;
  double mean = 0, mass = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = -8 * sd + 16 * sd * (i + 0.5) / n + mu;
    const double w = std::exp(-0.5 * (x - mu) * (x - mu) / (sd * sd));
    mean += w * std::clamp(x, 0.0, 1.0);
    mass += w;
  }
  EXPECT_NEAR(mean / mass, 0.3, 1e-6);
  const auto e = simulate_detection(s, IncrementLaw::kClippedGaussian, 5000, 2);
  const auto b = detection_bounds(s);
  EXPECT_GE(e.mean_tau, b.lower - 1);
  EXPECT_LE(e.mean_tau, b.upper + 3 * e.stderr_tau);
}

TEST(Simulate, DeterministicAndMonotoneInGap) {
  const auto a = simulate_detection(spec(0.2, 1.0, 31, 0.05),
                                    IncrementLaw::kBernoulliScaled, 3000, 5);
  const auto b = simulate_detection(spec(0.2, 1.0, 31, 0.05),
                                    IncrementLaw::kBernoulliScaled, 3000, 5);
  EXPECT_EQ(a.mean_tau, b.mean_tau);
  const auto c = simulate_detection(spec(0.4, 1.0, 31, 0.05),
                                    IncrementLaw::kBernoulliScaled, 3000, 5);
  EXPECT_LT(c.mean_tau, a.mean_tau);
}

TEST(Law, NamesRoundTrip) {
  for (auto law : {IncrementLaw::kConstant, IncrementLaw::kBernoulliScaled,
                   IncrementLaw::kClippedGaussian}) {
    EXPECT_EQ(parse_increment_law(to_string(law)), law);
  }
  EXPECT_THROW(parse_increment_law("poisson"), Error);
}

}  // namespace
}  // namespace normsep::detection
