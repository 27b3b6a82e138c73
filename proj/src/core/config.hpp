// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration: JSON with sections, overridable by dotted
// ("optimizer.lambda") or unique flat ("lambda") keys.

#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "core/analysis.hpp"
#include "core/models.hpp"

namespace normsep::harness {

enum class Task { kModAdd, kModMul, kParity };
enum class Optimizer { kSgd, kAdamW };
enum class WdConvention { kWEqLambda, kWEq2Lambda };

const char* to_string(Task t) noexcept;
const char* to_string(Optimizer o) noexcept;
const char* to_string(WdConvention w) noexcept;
Task parse_task(const std::string& s);
Optimizer parse_optimizer(const std::string& s);
WdConvention parse_wd_convention(const std::string& s);

struct ExperimentConfig {
  // task
  Task task = Task::kModAdd;
  int p = 23;
  int n = 20;
  double train_frac = 0.95;
  int num_train = 1000;
  int num_val = 1000;

  // model
  int d_e = 32;
  int hidden = 256;
  models::Activation activation = models::Activation::kQuadratic;
  double embed_scale = 8.0;

  // optimizer
  Optimizer optimizer = Optimizer::kAdamW;
  WdConvention wd_convention = WdConvention::kWEq2Lambda;
  double eta = 1e-3;
  double lambda = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  // training
  int batch_size = 0;  // 0: full train set when it has <= 512 rows, else 512
  int max_steps = 30000;
  int eval_every = 25;
  int spectral_every = 0;
  int checkpoint_every = 0;
  double acc_threshold = 0.99;
  int post_grok_steps = 1000;
  std::uint64_t seed = 0;

  // analysis
  double delta = 0.05;
  double support_coverage = 0.99;
  int tau_window = 20;  // logged points averaged for the final val loss
  analysis::RegimeThresholds regime;

  bool is_modular() const noexcept { return task != Task::kParity; }
  int n_out() const noexcept { return is_modular() ? p : 2; }
  models::MlpShape model_shape() const;
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);

ExperimentConfig load_config(const std::string& path);

// Applies `key=value`. Keys are dotted section paths or unique leaf names.
// The value is parsed as JSON when possible, else taken as a string.
void apply_override(ExperimentConfig& c, const std::string& assignment);
void apply_override(ExperimentConfig& c, const std::string& key,
                    const std::string& value);

}  // namespace normsep::harness
