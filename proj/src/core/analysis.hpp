// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Exponential contraction fits, escape-time formulas, robust regression and
// regime labels.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace normsep::analysis {

struct FitResult {
  double a = 0.0;
  double rho = 0.0;
  double c = 0.0;
  double r2 = 0.0;
  double gamma_fit = 0.0;  // 1 - rho
};

// Fits V = A rho^(t - t[0]) + C. C is scanned on 200 points of
// [0, 1.05 min V] (points leaving some V - C <= 0 are skipped), A and rho
// come from a log-linear fit at each C, and the best C is refined by golden
// section on the raw squared error. A final pass over the decay rate, with A
// and C solved by linear least squares, keeps whichever triple has the lower
// raw squared error. R^2 uses raw residuals.
FitResult fit_exponential(std::span<const double> t, std::span<const double> v);
// Unit-spaced series starting at t = 0.
FitResult fit_exponential(std::span<const double> v);

// (1/gamma) ln(v_mem / v_post); negative when v_mem < v_post.
double predict_escape(double gamma, double v_mem, double v_post);

struct EscapeBounds {
  double lower = 0.0;
  double upper = 0.0;
};

// lower = ln(v0/v_post) / (4 eta lambda),
// upper = ln((v0 - Vinf)/(v_post - Vinf)) / (eta lambda), Vinf = eta sigma^2 / lambda.
EscapeBounds escape_bounds(double eta, double lambda, double v0, double v_post,
                           double sigma);

struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::optional<std::vector<bool>> inlier_mask;
  std::optional<double> inlier_r2;
};

// Ordinary least squares. R^2 of a constant y is 0.
RegressionResult ols_fit(std::span<const double> x, std::span<const double> y);

double pearson_r(std::span<const double> x, std::span<const double> y);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Percentile interval of case-resampled OLS slopes at level 1 - alpha.
Interval bootstrap_slope_ci(std::span<const double> x,
                            std::span<const double> y, int n_boot, double alpha,
                            std::uint64_t seed);

// Two-point RANSAC with absolute residual threshold, OLS refit on the best
// consensus set.
RegressionResult ransac_fit(std::span<const double> x,
                            std::span<const double> y, int n_iters,
                            double inlier_tol, double min_inlier_frac,
                            std::uint64_t seed);

enum class Regime { kI, kII, kIII };

const char* to_string(Regime r) noexcept;
Regime parse_regime(const std::string& s);

struct RegimeEvidence {
  double grok_fraction = 0.0;
  double mean_log_norm_ratio = 0.0;
  // mean V_final / V_init; separates weak decay from norm collapse.
  double norm_retention = 1.0;
};

struct RegimeThresholds {
  double grok_fraction = 0.8;
  double log_norm_ratio = 0.5;
  double norm_retention = 0.1;
};

struct RegimeLabel {
  Regime label = Regime::kI;
  RegimeEvidence evidence;
};

RegimeLabel classify_regime(const RegimeEvidence& evidence,
                            const RegimeThresholds& thresholds = {});

nlohmann::json to_json(const FitResult& f);
nlohmann::json to_json(const RegressionResult& r);
nlohmann::json to_json(const RegimeLabel& r);
FitResult fit_from_json(const nlohmann::json& j);

}  // namespace normsep::analysis
