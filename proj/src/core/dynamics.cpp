// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/dynamics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace normsep::dynamics {

namespace {

void check_finite(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      fail(ErrorCode::kNonFinite, std::string(what) +
                                      ": non-finite value at index " +
                                      std::to_string(i));
    }
  }
}

void check_dims(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    fail(ErrorCode::kDimensionMismatch,
         std::string(what) + ": dimension mismatch (expected " +
             std::to_string(expected) + ", got " + std::to_string(got) + ")");
  }
}

}  // namespace

ParamVector::ParamVector(std::vector<double> values)
    : values_(std::move(values)) {
  require(!values_.empty(), ErrorCode::kInvalidArgument,
          "ParamVector: dim must be >= 1");
  check_finite(values_, "ParamVector");
}

ParamVector::ParamVector(std::initializer_list<double> values)
    : ParamVector(std::vector<double>(values)) {}

ParamVector ParamVector::zeros(std::size_t dim) {
  return ParamVector(std::vector<double>(dim, 0.0));
}

double ParamVector::squared_norm() const noexcept {
  double s = 0.0;
  for (double x : values_) s += x * x;
  return s;
}

void SgdHyper::validate() const {
  require(eta > 0.0 && std::isfinite(eta), ErrorCode::kInvalidArgument,
          "SgdHyper: eta must be > 0");
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::kInvalidArgument,
          "SgdHyper: lambda must be >= 0");
  require(sigma >= 0.0 && std::isfinite(sigma), ErrorCode::kInvalidArgument,
          "SgdHyper: sigma must be >= 0");
}

AdamWState AdamWState::fresh(std::size_t dim, double beta1, double beta2,
                             double epsilon) {
  AdamWState s;
  s.m.assign(dim, 0.0);
  s.v.assign(dim, 0.0);
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  s.validate(dim);
  return s;
}

void AdamWState::validate(std::size_t dim) const {
  check_dims(dim, m.size(), "AdamWState.m");
  check_dims(dim, v.size(), "AdamWState.v");
  require(beta1 > 0.0 && beta1 < 1.0, ErrorCode::kInvalidArgument,
          "AdamWState: beta1 must lie in (0,1)");
  require(beta2 > 0.0 && beta2 < 1.0, ErrorCode::kInvalidArgument,
          "AdamWState: beta2 must lie in (0,1)");
  require(epsilon > 0.0, ErrorCode::kInvalidArgument,
          "AdamWState: epsilon must be > 0");
  for (double x : v) {
    require(x >= 0.0, ErrorCode::kInvalidArgument,
            "AdamWState: second moment must be >= 0");
  }
}

ParamVector sgd_step(const ParamVector& theta, const ParamVector& grad,
                     const SgdHyper& hyper, const ParamVector& noise) {
  hyper.validate();
  check_dims(theta.dim(), grad.dim(), "sgd_step grad");
  check_dims(theta.dim(), noise.dim(), "sgd_step noise");
  std::vector<double> out(theta.values().begin(), theta.values().end());
  sgd_update_inplace(out, grad.values(), hyper.eta, 2.0 * hyper.lambda);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += hyper.eta * noise[i];
  check_finite(out, "sgd_step");
  return ParamVector(std::move(out));
}

std::pair<ParamVector, AdamWState> adamw_step(const ParamVector& theta,
                                              const ParamVector& grad,
                                              const AdamWState& state,
                                              double eta, double lambda) {
  require(eta > 0.0, ErrorCode::kInvalidArgument, "adamw_step: eta must be > 0");
  require(lambda >= 0.0, ErrorCode::kInvalidArgument,
          "adamw_step: lambda must be >= 0");
  check_dims(theta.dim(), grad.dim(), "adamw_step grad");
  state.validate(theta.dim());
  std::vector<double> out(theta.values().begin(), theta.values().end());
  AdamWState next = state;
  adamw_update_inplace(out, grad.values(), next, eta, lambda);
  return {ParamVector(std::move(out)), std::move(next)};
}

void sgd_update_inplace(std::span<double> theta, std::span<const double> grad,
                        double eta, double decay) {
  check_dims(theta.size(), grad.size(), "sgd_update grad");
  for (std::size_t i = 0; i < theta.size(); ++i) {
    theta[i] -= eta * (grad[i] + decay * theta[i]);
  }
}

void adamw_update_inplace(std::span<double> theta,
                          std::span<const double> grad, AdamWState& state,
                          double eta, double lambda) {
  check_dims(theta.size(), grad.size(), "adamw_update grad");
  require(state.step_count < std::numeric_limits<std::uint64_t>::max(),
          ErrorCode::kInvalidArgument, "adamw_step: step_count overflow");
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  const double shrink = 1.0 - eta * lambda;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    const double next =
        shrink * theta[i] - eta * m_hat / (std::sqrt(v_hat) + state.epsilon);
    if (!std::isfinite(next)) {
      fail(ErrorCode::kNonFinite,
           "adamw_step: non-finite update at index " + std::to_string(i));
    }
    theta[i] = next;
  }
}

SyntheticTrajectory simulate_on_manifold(std::size_t dim, double v0,
                                         const SgdHyper& hyper,
                                         std::size_t steps,
                                         std::uint64_t seed) {
  hyper.validate();
  require(dim >= 1, ErrorCode::kInvalidArgument,
          "simulate_on_manifold: dim must be >= 1");
  require(v0 > 0.0, ErrorCode::kInvalidArgument,
          "simulate_on_manifold: v0 must be > 0");
  require(steps >= 1, ErrorCode::kInvalidArgument,
          "simulate_on_manifold: steps must be >= 1");
  const double contraction = 1.0 - 2.0 * hyper.eta * hyper.lambda;
  require(contraction > 0.0, ErrorCode::kPrecondition,
          "contraction factor non-positive");

  SyntheticTrajectory traj;
  traj.hyper = hyper;
  traj.seed = seed;
  traj.dim = dim;
  traj.v_series.reserve(steps + 1);

  std::vector<double> theta(dim, std::sqrt(v0 / static_cast<double>(dim)));
  traj.v_series.push_back(v0);
  const double noise_scale =
      hyper.eta * hyper.sigma / std::sqrt(static_cast<double>(dim));
  Rng rng(seed);
  const bool noisy = hyper.sigma > 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    double v = 0.0;
    for (double& x : theta) {
      x = contraction * x;
      if (noisy) x += noise_scale * rng.normal();
      v += x * x;
    }
    traj.v_series.push_back(v);
    require(v <= kDivergenceLimit, ErrorCode::kDiverged,
            "simulate_on_manifold: V exceeded divergence limit");
  }
  return traj;
}

double on_manifold_floor(const SgdHyper& hyper) {
  hyper.validate();
  const double c = 1.0 - 2.0 * hyper.eta * hyper.lambda;
  require(c > 0.0, ErrorCode::kPrecondition,
          "contraction factor non-positive");
  const double noise = hyper.eta * hyper.eta * hyper.sigma * hyper.sigma;
  if (noise == 0.0) return 0.0;
  const double denom = 1.0 - c * c;
  require(denom > 0.0, ErrorCode::kPrecondition, "no stationary floor");
  return noise / denom;
}

double closed_form_mean_v(std::uint64_t t, double v0, const SgdHyper& hyper) {
  hyper.validate();
  const double c = 1.0 - 2.0 * hyper.eta * hyper.lambda;
  require(c > 0.0, ErrorCode::kPrecondition, "contraction factor non-positive");
  if (t == 0) return v0;
  const double floor = on_manifold_floor(hyper);
  return std::pow(c, 2.0 * static_cast<double>(t)) * (v0 - floor) + floor;
}

long first_crossing_below(std::span<const double> series, double v_post) {
  for (std::size_t t = 0; t < series.size(); ++t) {
    if (series[t] <= v_post) return static_cast<long>(t);
  }
  return -1;
}

std::vector<double> mean_on_manifold(std::size_t dim, double v0,
                                     const SgdHyper& hyper, std::size_t steps,
                                     std::size_t n_seeds, std::uint64_t seed) {
  require(n_seeds >= 1, ErrorCode::kInvalidArgument,
          "mean_on_manifold: n_seeds must be >= 1");
  std::vector<double> mean(steps + 1, 0.0);
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const auto traj =
        simulate_on_manifold(dim, v0, hyper, steps, derive_seed(seed, s));
    for (std::size_t t = 0; t <= steps; ++t) mean[t] += traj.v_series[t];
  }
  for (double& x : mean) x /= static_cast<double>(n_seeds);
  return mean;
}

}  // namespace normsep::dynamics
