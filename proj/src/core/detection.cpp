// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace normsep::detection {

namespace {

constexpr long kMaxSteps = 100'000'000;

double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// E[clip(N(mu, s^2), 0, m)]
double clipped_mean(double mu, double s, double m) {
  const double alpha = (0.0 - mu) / s;
  const double beta = (m - mu) / s;
  const double mid = mu * (norm_cdf(beta) - norm_cdf(alpha)) +
                     s * (norm_pdf(alpha) - norm_pdf(beta));
  return mid + m * (1.0 - norm_cdf(beta));
}

}  // namespace

double DetectionSpec::gamma_thresh() const {
  return std::log(double(p) / delta);
}

void DetectionSpec::validate() const {
  require(delta_min > 0.0, ErrorCode::kInvalidArgument,
          "DetectionSpec: delta_min must be > 0");
  require(delta_min <= m_bound, ErrorCode::kInvalidArgument,
          "DetectionSpec: delta_min must not exceed m_bound");
  require(p >= 1, ErrorCode::kInvalidArgument, "DetectionSpec: p must be >= 1");
  require(delta > 0.0 && delta < 1.0, ErrorCode::kInvalidArgument,
          "DetectionSpec: delta must lie in (0, 1)");
}

DetectionBounds detection_bounds(const DetectionSpec& spec) {
  spec.validate();
  DetectionBounds b;
  b.gamma = spec.gamma_thresh();
  const double d = spec.delta_min;
  b.lower = b.gamma / d;
  b.upper = 2.0 * b.gamma / d +
            8.0 * spec.m_bound * spec.m_bound * std::log(1.0 / spec.delta) /
                (d * d);
  return b;
}

const char* to_string(IncrementLaw law) noexcept {
  switch (law) {
    case IncrementLaw::kConstant:
      return "constant";
    case IncrementLaw::kBernoulliScaled:
      return "bernoulli-scaled";
    case IncrementLaw::kClippedGaussian:
      return "clipped-gaussian";
  }
  return "constant";
}

IncrementLaw parse_increment_law(const std::string& s) {
  if (s == "constant") return IncrementLaw::kConstant;
  if (s == "bernoulli-scaled" || s == "bernoulli") {
    return IncrementLaw::kBernoulliScaled;
  }
  if (s == "clipped-gaussian" || s == "gaussian") {
    return IncrementLaw::kClippedGaussian;
  }
  fail(ErrorCode::kInvalidArgument, "unknown increment law: " + s);
}

double clipped_gaussian_center(const DetectionSpec& spec) {
  spec.validate();
  const double m = spec.m_bound;
  const double s = m / 4.0;
  require(spec.delta_min < m, ErrorCode::kInvalidArgument,
          "clipped-gaussian law needs delta_min < m_bound");
  double lo = -20.0 * m;
  double hi = 20.0 * m;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (clipped_mean(mid, s, m) < spec.delta_min ? lo : hi) = mid;
  }
  return hi;  // mean at hi is >= delta_min
}

DetectionEstimate simulate_detection(const DetectionSpec& spec,
                                     IncrementLaw law, int n_mc,
                                     std::uint64_t seed) {
  spec.validate();
  require(n_mc >= 1, ErrorCode::kInvalidArgument,
          "simulate_detection: n_mc must be >= 1");
  const double gamma = spec.gamma_thresh();
  const double m = spec.m_bound;
  const double d = spec.delta_min;
  double mu = 0.0;
  if (law == IncrementLaw::kClippedGaussian) mu = clipped_gaussian_center(spec);
  const double s = m / 4.0;

  if (law == IncrementLaw::kConstant) {
    // Deterministic; avoid drift from repeated summation.
    double t = std::max(1.0, std::ceil(gamma / d));
    if ((t - 1.0) * d >= gamma && t > 1.0) t -= 1.0;
    return {t, 0.0};
  }

  double sum = 0.0, sum2 = 0.0;
  for (int r = 0; r < n_mc; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    double acc = 0.0;
    long t = 0;
    while (acc < gamma) {
      double x = 0.0;
      switch (law) {
        case IncrementLaw::kConstant:
          x = d;
          break;
        case IncrementLaw::kBernoulliScaled:
          x = rng.uniform() < d / m ? m : 0.0;
          break;
        case IncrementLaw::kClippedGaussian:
          x = std::clamp(mu + s * rng.normal(), 0.0, m);
          break;
      }
      acc += x;
      ++t;
      require(t < kMaxSteps, ErrorCode::kInternal,
              "simulate_detection: stopping time exceeded step cap");
    }
    sum += double(t);
    sum2 += double(t) * double(t);
  }
  const double n = double(n_mc);
  DetectionEstimate e;
  e.mean_tau = sum / n;
  const double var =
      n > 1 ? std::max(0.0, (sum2 - n * e.mean_tau * e.mean_tau) / (n - 1))
            : 0.0;
  e.stderr_tau = std::sqrt(var / n);
  return e;
}

}  // namespace normsep::detection
