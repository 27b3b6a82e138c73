// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Optimizer steppers for regularised first-order training and a synthetic
// on-manifold process whose mean squared norm has a closed form.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace normsep::dynamics {

// Flat real parameter vector. All entries are finite and dim() >= 1.
class ParamVector {
 public:
  explicit ParamVector(std::vector<double> values);
  ParamVector(std::initializer_list<double> values);
  static ParamVector zeros(std::size_t dim);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  // V = sum of squared entries.
  double squared_norm() const noexcept;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

struct SgdHyper {
  double eta = 1e-3;
  double lambda = 1.0;
  double sigma = 0.0;

  void validate() const;
};

struct AdamWState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamWState fresh(std::size_t dim, double beta1 = 0.9,
                          double beta2 = 0.999, double epsilon = 1e-8);
  void validate(std::size_t dim) const;
};

// theta - eta * (grad + 2 * lambda * theta) + eta * noise.
ParamVector sgd_step(const ParamVector& theta, const ParamVector& grad,
                     const SgdHyper& hyper, const ParamVector& noise);

// Decoupled-decay AdamW. lambda never enters the moment estimates.
std::pair<ParamVector, AdamWState> adamw_step(const ParamVector& theta,
                                              const ParamVector& grad,
                                              const AdamWState& state,
                                              double eta, double lambda);

// In-place kernels used by the trainer. `decay` is the coefficient w in
// theta -= eta * (grad + w * theta); callers choose w = lambda or 2 * lambda.
void sgd_update_inplace(std::span<double> theta, std::span<const double> grad,
                        double eta, double decay);
void adamw_update_inplace(std::span<double> theta,
                          std::span<const double> grad, AdamWState& state,
                          double eta, double lambda);

inline constexpr double kDivergenceLimit = 1e12;

struct SyntheticTrajectory {
  std::vector<double> v_series;  // V_0 .. V_steps
  SgdHyper hyper;
  std::uint64_t seed = 0;
  std::size_t dim = 0;
};

// theta_{t+1} = (1 - 2 eta lambda) theta_t + eta xi_t with isotropic
// Gaussian xi, E|xi|^2 = sigma^2. theta_0 = sqrt(v0 / dim) * (1, ..., 1).
SyntheticTrajectory simulate_on_manifold(std::size_t dim, double v0,
                                         const SgdHyper& hyper,
                                         std::size_t steps,
                                         std::uint64_t seed);

// Stationary floor eta^2 sigma^2 / (1 - (1 - 2 eta lambda)^2) of the
// on-manifold process.
double on_manifold_floor(const SgdHyper& hyper);

// Exact E[V_t] of the on-manifold process.
double closed_form_mean_v(std::uint64_t t, double v0, const SgdHyper& hyper);

// First index t with series[t] <= v_post, or -1 if never reached.
long first_crossing_below(std::span<const double> series, double v_post);

// Pointwise mean of V_t over `n_seeds` synthetic trajectories, seeds derived
// from `seed`.
std::vector<double> mean_on_manifold(std::size_t dim, double v0,
                                     const SgdHyper& hyper, std::size_t steps,
                                     std::size_t n_seeds, std::uint64_t seed);

}  // namespace normsep::dynamics
