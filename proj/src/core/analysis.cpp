// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace normsep::analysis {

namespace {

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
};

// Plain least-squares line; caller guarantees x is not constant.
Line line_fit(std::span<const double> x, std::span<const double> y) {
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  Line l;
  l.slope = sxy / sxx;
  l.intercept = my - l.slope * mx;
  return l;
}

double r_squared(std::span<const double> x, std::span<const double> y,
                 const Line& l) {
  const double my =
      std::accumulate(y.begin(), y.end(), 0.0) / double(y.size());
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (l.slope * x[i] + l.intercept);
    sse += r * r;
    sst += (y[i] - my) * (y[i] - my);
  }
  if (sst <= 0.0) return 0.0;
  return 1.0 - sse / sst;
}

bool constant(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
}

struct Candidate {
  bool valid = false;
  double sse = std::numeric_limits<double>::infinity();
  double a = 0.0;
  double rho = 0.0;
  double c = 0.0;
};

Candidate fit_at_offset(std::span<const double> tau, std::span<const double> v,
                        double c, std::vector<double>& work) {
  Candidate out;
  out.c = c;
  work.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = v[i] - c;
    if (!(d > 0.0)) return out;
    work[i] = std::log(d);
  }
  const Line l = line_fit(tau, work);
  out.a = std::exp(l.intercept);
  out.rho = std::exp(l.slope);
  double sse = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = v[i] - (out.a * std::pow(out.rho, tau[i]) + c);
    sse += r * r;
  }
  out.sse = sse;
  out.valid = std::isfinite(sse);
  return out;
}

// Raw-space least squares at fixed rho: A and C enter linearly. C is held
// at 0 if the unconstrained value is negative; A must come out positive.
Candidate fit_at_rate(std::span<const double> tau, std::span<const double> v,
                      double rho) {
  Candidate out;
  out.rho = rho;
  const double n = double(v.size());
  double mb = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    mb += std::pow(rho, tau[i]);
    mv += v[i];
  }
  mb /= n;
  mv /= n;
  double sbb = 0.0, sbv = 0.0, sb2 = 0.0, sbv0 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double b = std::pow(rho, tau[i]);
    sbb += (b - mb) * (b - mb);
    sbv += (b - mb) * (v[i] - mv);
    sb2 += b * b;
    sbv0 += b * v[i];
  }
  if (!(sbb > 0.0)) return out;
  out.a = sbv / sbb;
  out.c = mv - out.a * mb;
  if (out.c < 0.0) {
    out.c = 0.0;
    out.a = sbv0 / sb2;
  }
  if (!(out.a > 0.0)) return out;
  double sse = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = v[i] - (out.a * std::pow(rho, tau[i]) + out.c);
    sse += r * r;
  }
  out.sse = sse;
  out.valid = std::isfinite(sse);
  return out;
}

// Golden-section minimum of f over [lo, hi]; returns the best candidate seen.
template <typename F>
Candidate golden(double lo, double hi, double tol, F&& f, Candidate best) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - g * (hi - lo);
  double x2 = lo + g * (hi - lo);
  Candidate f1 = f(x1);
  Candidate f2 = f(x2);
  for (int it = 0; it < 300 && hi - lo > tol; ++it) {
    if (f1.sse <= f2.sse) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    }
    if (f1.valid && f1.sse < best.sse) best = f1;
    if (f2.valid && f2.sse < best.sse) best = f2;
  }
  return best;
}

double quantile(std::vector<double>& sorted, double q) {
  const double pos = q * double(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double f = pos - double(lo);
  return sorted[lo] * (1.0 - f) + sorted[hi] * f;
}

}  // namespace

FitResult fit_exponential(std::span<const double> t,
                          std::span<const double> v) {
  require(t.size() == v.size(), ErrorCode::kDimensionMismatch,
          "fit_exponential: t and v lengths differ");
  require(v.size() >= 8, ErrorCode::kInvalidArgument,
          "fit_exponential: need at least 8 points");
  for (std::size_t i = 0; i < v.size(); ++i) {
    require(std::isfinite(v[i]) && v[i] > 0.0, ErrorCode::kInvalidArgument,
            "fit_exponential: values must be positive and finite");
    require(std::isfinite(t[i]), ErrorCode::kInvalidArgument,
            "fit_exponential: non-finite time");
  }
  require(!constant(v), ErrorCode::kPrecondition,
          "fit_exponential: constant series, rho unidentifiable");
  require(!constant(t), ErrorCode::kInvalidArgument,
          "fit_exponential: constant time axis");

  std::vector<double> tau(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) tau[i] = t[i] - t[0];
  const double vmin = *std::min_element(v.begin(), v.end());
  const double c_hi = 1.05 * vmin;
  constexpr int kGrid = 200;
  std::vector<double> work;

  Candidate best;
  int best_i = -1;
  for (int i = 0; i < kGrid; ++i) {
    const double c = c_hi * double(i) / double(kGrid - 1);
    const Candidate cand = fit_at_offset(tau, v, c, work);
    if (cand.valid && cand.sse < best.sse) {
      best = cand;
      best_i = i;
    }
  }
  if (best_i < 0) fail(ErrorCode::kPrecondition, "offset exhausts signal");

  // Golden section on the neighbouring grid cells, kept strictly below
  // min V so the logarithm stays defined.
  const double step = c_hi / double(kGrid - 1);
  const double lo = std::max(0.0, (best_i - 1) * step);
  const double hi = std::min((best_i + 1) * step, std::nextafter(vmin, 0.0));
  if (hi > lo) {
    best = golden(lo, hi, 1e-14 * std::max(1.0, vmin),
                  [&](double c) { return fit_at_offset(tau, v, c, work); },
                  best);
  }

  // The log-linear fits weight points with V - C near zero heavily, so when
  // the transient fades well inside the window the offset search can miss
  // the raw least-squares minimum. Polish over the decay rate with A and C
  // solved exactly; this only ever lowers the raw error.
  const double span = *std::max_element(tau.begin(), tau.end());
  constexpr int kRateGrid = 400;
  const double u_lo = std::log(1e-3), u_hi = std::log(700.0);
  auto rate_at = [&](double log_u) {
    return fit_at_rate(tau, v, std::exp(-std::exp(log_u) / span));
  };
  Candidate polish;
  int polish_i = -1;
  for (int i = 0; i < kRateGrid; ++i) {
    const Candidate cand =
        rate_at(u_lo + (u_hi - u_lo) * double(i) / double(kRateGrid - 1));
    if (cand.valid && cand.sse < polish.sse) {
      polish = cand;
      polish_i = i;
    }
  }
  if (polish_i >= 0) {
    const double du = (u_hi - u_lo) / double(kRateGrid - 1);
    polish = golden(u_lo + (polish_i - 1) * du, u_lo + (polish_i + 1) * du,
                    1e-15, rate_at, polish);
    if (polish.sse < best.sse) best = polish;
  }

  require(best.rho > 0.0 && best.rho < 1.0, ErrorCode::kPrecondition,
          "fit_exponential: fitted rho outside (0, 1), series does not "
          "contract");
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  double sst = 0.0;
  for (double x : v) sst += (x - mean) * (x - mean);

  FitResult r;
  r.a = best.a;
  r.rho = best.rho;
  r.c = best.c;
  r.gamma_fit = 1.0 - best.rho;
  r.r2 = 1.0 - best.sse / sst;
  return r;
}

FitResult fit_exponential(std::span<const double> v) {
  std::vector<double> t(v.size());
  std::iota(t.begin(), t.end(), 0.0);
  return fit_exponential(t, v);
}

double predict_escape(double gamma, double v_mem, double v_post) {
  require(gamma > 0.0 && std::isfinite(gamma), ErrorCode::kInvalidArgument,
          "predict_escape: gamma must be > 0");
  require(v_mem > 0.0 && v_post > 0.0, ErrorCode::kInvalidArgument,
          "predict_escape: norms must be > 0");
  return std::log(v_mem / v_post) / gamma;
}

EscapeBounds escape_bounds(double eta, double lambda, double v0, double v_post,
                           double sigma) {
  require(eta > 0.0, ErrorCode::kInvalidArgument, "escape_bounds: eta must be > 0");
  require(lambda > 0.0, ErrorCode::kInvalidArgument,
          "escape_bounds: lambda must be > 0");
  require(eta * lambda < 0.25, ErrorCode::kPrecondition,
          "escape_bounds: eta*lambda must lie in (0, 1/4)");
  require(sigma >= 0.0, ErrorCode::kInvalidArgument,
          "escape_bounds: sigma must be >= 0");
  const double v_inf = eta * sigma * sigma / lambda;
  require(v_post > v_inf, ErrorCode::kPrecondition,
          "escape_bounds: v_post must exceed the noise floor");
  require(v0 > v_post, ErrorCode::kPrecondition,
          "escape_bounds: v0 must exceed v_post");
  const double el = eta * lambda;
  EscapeBounds b;
  b.lower = std::log(v0 / v_post) / (4.0 * el);
  b.upper = std::log((v0 - v_inf) / (v_post - v_inf)) / el;
  return b;
}

RegressionResult ols_fit(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorCode::kDimensionMismatch,
          "ols_fit: x and y lengths differ");
  require(x.size() >= 3, ErrorCode::kInvalidArgument, "ols_fit: need n >= 3");
  require(!constant(x), ErrorCode::kInvalidArgument, "ols_fit: degenerate x");
  const Line l = line_fit(x, y);
  RegressionResult r;
  r.slope = l.slope;
  r.intercept = l.intercept;
  r.r2 = r_squared(x, y, l);
  r.ci_low = r.ci_high = r.slope;
  return r;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::kInvalidArgument,
          "pearson_r: need two equal-length samples of size >= 2");
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0 && syy > 0.0, ErrorCode::kPrecondition,
          "pearson_r: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

Interval bootstrap_slope_ci(std::span<const double> x,
                            std::span<const double> y, int n_boot, double alpha,
                            std::uint64_t seed) {
  require(x.size() == y.size(), ErrorCode::kDimensionMismatch,
          "bootstrap_slope_ci: x and y lengths differ");
  require(x.size() >= 5, ErrorCode::kInvalidArgument,
          "bootstrap_slope_ci: need n >= 5");
  require(n_boot >= 100, ErrorCode::kInvalidArgument,
          "bootstrap_slope_ci: n_boot must be >= 100");
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::kInvalidArgument,
          "bootstrap_slope_ci: alpha must lie in (0, 1)");
  require(!constant(x), ErrorCode::kInvalidArgument,
          "bootstrap_slope_ci: degenerate x");
  const std::size_t n = x.size();
  std::vector<double> bx(n), by(n), slopes;
  slopes.reserve(n_boot);
  for (int b = 0; b < n_boot; ++b) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    do {
      for (std::size_t i = 0; i < n; ++i) {
        const auto j = rng.below(n);
        bx[i] = x[j];
        by[i] = y[j];
      }
    } while (constant(bx));
    slopes.push_back(line_fit(bx, by).slope);
  }
  std::sort(slopes.begin(), slopes.end());
  return {quantile(slopes, alpha / 2.0), quantile(slopes, 1.0 - alpha / 2.0)};
}

RegressionResult ransac_fit(std::span<const double> x,
                            std::span<const double> y, int n_iters,
                            double inlier_tol, double min_inlier_frac,
                            std::uint64_t seed) {
  require(x.size() == y.size(), ErrorCode::kDimensionMismatch,
          "ransac_fit: x and y lengths differ");
  require(x.size() >= 5, ErrorCode::kInvalidArgument, "ransac_fit: need n >= 5");
  require(n_iters >= 1, ErrorCode::kInvalidArgument,
          "ransac_fit: n_iters must be >= 1");
  require(inlier_tol > 0.0, ErrorCode::kInvalidArgument,
          "ransac_fit: inlier_tol must be > 0");
  require(min_inlier_frac > 0.0 && min_inlier_frac <= 1.0,
          ErrorCode::kInvalidArgument,
          "ransac_fit: min_inlier_frac must lie in (0, 1]");
  require(!constant(x), ErrorCode::kInvalidArgument, "ransac_fit: degenerate x");

  const std::size_t n = x.size();
  Rng rng(seed);
  std::vector<bool> best_mask;
  std::size_t best_count = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  std::vector<bool> mask(n);
  for (int it = 0; it < n_iters; ++it) {
    const auto i = rng.below(n);
    auto j = rng.below(n - 1);
    if (j >= i) ++j;
    if (x[i] == x[j]) continue;
    const double slope = (y[j] - y[i]) / (x[j] - x[i]);
    const double icpt = y[i] - slope * x[i];
    std::size_t count = 0;
    double sse = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double r = y[k] - (slope * x[k] + icpt);
      mask[k] = std::abs(r) <= inlier_tol;
      if (mask[k]) {
        ++count;
        sse += r * r;
      }
    }
    if (count > best_count || (count == best_count && sse < best_sse)) {
      best_count = count;
      best_sse = sse;
      best_mask = mask;
    }
  }
  require(best_count >= 2 &&
              double(best_count) >= min_inlier_frac * double(n),
          ErrorCode::kInfeasible, "no consensus");

  std::vector<double> ix, iy;
  for (std::size_t k = 0; k < n; ++k) {
    if (best_mask[k]) {
      ix.push_back(x[k]);
      iy.push_back(y[k]);
    }
  }
  require(!constant(ix), ErrorCode::kInfeasible,
          "no consensus: inliers share one x");
  const Line l = line_fit(ix, iy);
  RegressionResult r;
  r.slope = l.slope;
  r.intercept = l.intercept;
  r.r2 = r_squared(x, y, l);
  r.ci_low = r.ci_high = r.slope;
  r.inlier_mask = best_mask;
  r.inlier_r2 = r_squared(ix, iy, l);
  return r;
}

const char* to_string(Regime r) noexcept {
  switch (r) {
    case Regime::kI:
      return "I";
    case Regime::kII:
      return "II";
    case Regime::kIII:
      return "III";
  }
  return "I";
}

Regime parse_regime(const std::string& s) {
  if (s == "I") return Regime::kI;
  if (s == "II") return Regime::kII;
  if (s == "III") return Regime::kIII;
  fail(ErrorCode::kInvalidArgument, "unknown regime label: " + s);
}

RegimeLabel classify_regime(const RegimeEvidence& e,
                            const RegimeThresholds& th) {
  RegimeLabel out;
  out.evidence = e;
  if (e.grok_fraction >= th.grok_fraction &&
      e.mean_log_norm_ratio >= th.log_norm_ratio) {
    out.label = Regime::kII;
  } else if (e.norm_retention != th.norm_retention) {
    out.label =
        e.norm_retention > th.norm_retention ? Regime::kI : Regime::kIII;
  } else {
    out.label = e.grok_fraction >= 0.5 ? Regime::kI : Regime::kIII;
  }
  return out;
}

nlohmann::json to_json(const FitResult& f) {
  return {{"a", f.a}, {"rho", f.rho}, {"c", f.c}, {"r2", f.r2},
          {"gamma_fit", f.gamma_fit}};
}

FitResult fit_from_json(const nlohmann::json& j) {
  FitResult f;
  f.a = j.at("a").get<double>();
  f.rho = j.at("rho").get<double>();
  f.c = j.at("c").get<double>();
  f.r2 = j.at("r2").get<double>();
  f.gamma_fit = j.at("gamma_fit").get<double>();
  return f;
}

nlohmann::json to_json(const RegressionResult& r) {
  nlohmann::json j = {{"slope", r.slope},     {"intercept", r.intercept},
                      {"r2", r.r2},           {"ci_low", r.ci_low},
                      {"ci_high", r.ci_high}, {"inlier_mask", nullptr},
                      {"inlier_r2", nullptr}};
  if (r.inlier_mask) j["inlier_mask"] = *r.inlier_mask;
  if (r.inlier_r2) j["inlier_r2"] = *r.inlier_r2;
  return j;
}

nlohmann::json to_json(const RegimeLabel& r) {
  return {{"label", to_string(r.label)},
          {"evidence",
           {{"grok_fraction", r.evidence.grok_fraction},
            {"log_norm_ratio", r.evidence.mean_log_norm_ratio},
            {"norm_retention", r.evidence.norm_retention}}}};
}

}  // namespace normsep::analysis
