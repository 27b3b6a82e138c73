// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Sequential confirmation time tau = inf{t : S_t >= ln(p/delta)} for
// bounded nonnegative increments, with its expectation bounds.

#pragma once

#include <cstdint>
#include <string>

namespace normsep::detection {

struct DetectionSpec {
  double delta_min = 0.5;
  double m_bound = 1.0;
  int p = 97;
  double delta = 0.05;

  double gamma_thresh() const;  // ln(p / delta)
  void validate() const;
};

struct DetectionBounds {
  double gamma = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// lower = gamma / delta_min,
// upper = 2 gamma / delta_min + 8 M^2 ln(1/delta) / delta_min^2.
DetectionBounds detection_bounds(const DetectionSpec& spec);

// kConstant: X = delta_min.
// kBernoulliScaled: X = M with probability delta_min / M, else 0.
// kClippedGaussian: X = clip(N(mu, (M/4)^2), 0, M) with mu chosen so that
// E[X] = delta_min.
enum class IncrementLaw { kConstant, kBernoulliScaled, kClippedGaussian };

const char* to_string(IncrementLaw law) noexcept;
IncrementLaw parse_increment_law(const std::string& s);

struct DetectionEstimate {
  double mean_tau = 0.0;
  double stderr_tau = 0.0;
};

DetectionEstimate simulate_detection(const DetectionSpec& spec,
                                     IncrementLaw law, int n_mc,
                                     std::uint64_t seed);

// Centre mu of the clipped Gaussian law for the given spec.
double clipped_gaussian_center(const DetectionSpec& spec);

}  // namespace normsep::detection
