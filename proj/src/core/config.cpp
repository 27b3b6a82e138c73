// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/config.hpp"

#include <cmath>
#include <fstream>
#include <vector>

#include "core/error.hpp"

namespace normsep::harness {

using nlohmann::json;

const char* to_string(Task t) noexcept {
  switch (t) {
    case Task::kModAdd:
      return "mod_add";
    case Task::kModMul:
      return "mod_mul";
    case Task::kParity:
      return "parity";
  }
  return "mod_add";
}

const char* to_string(Optimizer o) noexcept {
  return o == Optimizer::kSgd ? "sgd" : "adamw";
}

const char* to_string(WdConvention w) noexcept {
  return w == WdConvention::kWEqLambda ? "w_eq_lambda" : "w_eq_2lambda";
}

Task parse_task(const std::string& s) {
  if (s == "mod_add") return Task::kModAdd;
  if (s == "mod_mul") return Task::kModMul;
  if (s == "parity") return Task::kParity;
  fail(ErrorCode::kInvalidArgument, "unknown task: " + s);
}

Optimizer parse_optimizer(const std::string& s) {
  if (s == "sgd") return Optimizer::kSgd;
  if (s == "adamw") return Optimizer::kAdamW;
  fail(ErrorCode::kInvalidArgument, "unknown optimizer: " + s);
}

WdConvention parse_wd_convention(const std::string& s) {
  if (s == "w_eq_lambda") return WdConvention::kWEqLambda;
  if (s == "w_eq_2lambda") return WdConvention::kWEq2Lambda;
  fail(ErrorCode::kInvalidArgument, "unknown wd_convention: " + s);
}

models::MlpShape ExperimentConfig::model_shape() const {
  models::MlpShape s;
  if (is_modular()) {
    s.vocab = p;
    s.d_e = d_e;
  } else {
    s.n_in = n;
  }
  s.hidden = hidden;
  s.n_out = n_out();
  s.activation = activation;
  return s;
}

void ExperimentConfig::validate() const {
  auto positive = [](bool ok, const char* name) {
    require(ok, ErrorCode::kInvalidArgument,
            std::string("config: ") + name + " must be positive");
  };
  if (is_modular()) {
    require(models::is_prime(p) && p <= 257, ErrorCode::kInvalidArgument,
            "config: task.p must be a prime <= 257");
    require(train_frac > 0.0 && train_frac <= 1.0, ErrorCode::kInvalidArgument,
            "config: task.train_frac must lie in (0, 1]");
  } else {
    require(n >= 4 && n <= 64, ErrorCode::kInvalidArgument,
            "config: task.n must lie in [4, 64]");
    positive(num_train > 0, "task.num_train");
    positive(num_val > 0, "task.num_val");
  }
  positive(d_e > 0, "model.d_e");
  positive(hidden > 0, "model.hidden");
  require(embed_scale >= 0.0, ErrorCode::kInvalidArgument,
          "config: model.embed_scale must be >= 0");
  positive(eta > 0.0, "optimizer.eta");
  require(lambda >= 0.0, ErrorCode::kInvalidArgument,
          "config: optimizer.lambda must be >= 0");
  require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0,
          ErrorCode::kInvalidArgument, "config: betas must lie in (0, 1)");
  positive(epsilon > 0.0, "optimizer.epsilon");
  require(batch_size >= 0, ErrorCode::kInvalidArgument,
          "config: training.batch_size must be >= 0");
  positive(max_steps > 0, "training.max_steps");
  positive(eval_every > 0, "training.eval_every");
  require(spectral_every >= 0 && checkpoint_every >= 0,
          ErrorCode::kInvalidArgument,
          "config: spectral_every and checkpoint_every must be >= 0");
  require(acc_threshold > 0.5 && acc_threshold <= 1.0,
          ErrorCode::kInvalidArgument,
          "config: training.acc_threshold must lie in (0.5, 1]");
  require(post_grok_steps >= 0, ErrorCode::kInvalidArgument,
          "config: training.post_grok_steps must be >= 0");
  require(delta > 0.0 && delta < 1.0, ErrorCode::kInvalidArgument,
          "config: analysis.delta must lie in (0, 1)");
  require(support_coverage > 0.0 && support_coverage < 1.0,
          ErrorCode::kInvalidArgument,
          "config: analysis.support_coverage must lie in (0, 1)");
  positive(tau_window > 0, "analysis.tau_window");
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["task"] = {{"name", to_string(c.task)},   {"p", c.p},
               {"n", c.n},                    {"train_frac", c.train_frac},
               {"num_train", c.num_train},    {"num_val", c.num_val}};
  j["model"] = {{"d_e", c.d_e},
                {"hidden", c.hidden},
                {"activation", models::to_string(c.activation)},
                {"embed_scale", c.embed_scale}};
  j["optimizer"] = {{"name", to_string(c.optimizer)},
                    {"wd_convention", to_string(c.wd_convention)},
                    {"eta", c.eta},
                    {"lambda", c.lambda},
                    {"beta1", c.beta1},
                    {"beta2", c.beta2},
                    {"epsilon", c.epsilon}};
  j["training"] = {{"batch_size", c.batch_size},
                   {"max_steps", c.max_steps},
                   {"eval_every", c.eval_every},
                   {"spectral_every", c.spectral_every},
                   {"checkpoint_every", c.checkpoint_every},
                   {"acc_threshold", c.acc_threshold},
                   {"post_grok_steps", c.post_grok_steps},
                   {"seed", c.seed}};
  j["analysis"] = {{"delta", c.delta},
                   {"support_coverage", c.support_coverage},
                   {"tau_window", c.tau_window},
                   {"regime_grok_fraction", c.regime.grok_fraction},
                   {"regime_log_norm_ratio", c.regime.log_norm_ratio},
                   {"regime_norm_retention", c.regime.norm_retention}};
  return j;
}

namespace {

template <typename T>
void read(const json& sec, const char* key, T& out) {
  if (sec.contains(key)) out = sec.at(key).get<T>();
}

void reject_unknown(const json& j, const json& reference) {
  require(j.is_object(), ErrorCode::kInvalidArgument,
          "config: top level must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    require(reference.contains(it.key()), ErrorCode::kInvalidArgument,
            "config: unknown section '" + it.key() + "'");
    require(it->is_object(), ErrorCode::kInvalidArgument,
            "config: section '" + it.key() + "' must be an object");
    for (auto f = it->begin(); f != it->end(); ++f) {
      require(reference.at(it.key()).contains(f.key()),
              ErrorCode::kInvalidArgument,
              "config: unknown key '" + it.key() + "." + f.key() + "'");
    }
  }
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  reject_unknown(j, to_json(c));
  try {
    if (j.contains("task")) {
      const json& s = j["task"];
      if (s.contains("name")) c.task = parse_task(s["name"].get<std::string>());
      read(s, "p", c.p);
      read(s, "n", c.n);
      read(s, "train_frac", c.train_frac);
      read(s, "num_train", c.num_train);
      read(s, "num_val", c.num_val);
    }
    if (j.contains("model")) {
      const json& s = j["model"];
      read(s, "d_e", c.d_e);
      read(s, "hidden", c.hidden);
      if (s.contains("activation")) {
        c.activation = models::parse_activation(s["activation"].get<std::string>());
      }
      read(s, "embed_scale", c.embed_scale);
    }
    if (j.contains("optimizer")) {
      const json& s = j["optimizer"];
      if (s.contains("name")) {
        c.optimizer = parse_optimizer(s["name"].get<std::string>());
      }
      if (s.contains("wd_convention")) {
        c.wd_convention =
            parse_wd_convention(s["wd_convention"].get<std::string>());
      }
      read(s, "eta", c.eta);
      read(s, "lambda", c.lambda);
      read(s, "beta1", c.beta1);
      read(s, "beta2", c.beta2);
      read(s, "epsilon", c.epsilon);
    }
    if (j.contains("training")) {
      const json& s = j["training"];
      read(s, "batch_size", c.batch_size);
      read(s, "max_steps", c.max_steps);
      read(s, "eval_every", c.eval_every);
      read(s, "spectral_every", c.spectral_every);
      read(s, "checkpoint_every", c.checkpoint_every);
      read(s, "acc_threshold", c.acc_threshold);
      read(s, "post_grok_steps", c.post_grok_steps);
      read(s, "seed", c.seed);
    }
    if (j.contains("analysis")) {
      const json& s = j["analysis"];
      read(s, "delta", c.delta);
      read(s, "support_coverage", c.support_coverage);
      read(s, "tau_window", c.tau_window);
      read(s, "regime_grok_fraction", c.regime.grok_fraction);
      read(s, "regime_log_norm_ratio", c.regime.log_norm_ratio);
      read(s, "regime_norm_retention", c.regime.norm_retention);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIo,
          "cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument,
         "config " + path + ": " + std::string(e.what()));
  }
  return config_from_json(j);
}

void apply_override(ExperimentConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos && eq > 0, ErrorCode::kInvalidArgument,
          "override must look like key=value: " + assignment);
  apply_override(c, assignment.substr(0, eq), assignment.substr(eq + 1));
}

void apply_override(ExperimentConfig& c, const std::string& key,
                    const std::string& value) {
  json j = to_json(c);
  std::string section, leaf;
  const auto dot = key.find('.');
  if (dot != std::string::npos) {
    section = key.substr(0, dot);
    leaf = key.substr(dot + 1);
    require(j.contains(section) && j[section].contains(leaf),
            ErrorCode::kInvalidArgument, "unknown config key: " + key);
  } else if (j.contains(key) && j[key].contains("name")) {
    section = key;
    leaf = "name";
  } else {
    std::vector<std::string> hits;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->contains(key)) hits.push_back(it.key());
    }
    require(!hits.empty(), ErrorCode::kInvalidArgument,
            "unknown config key: " + key);
    require(hits.size() == 1, ErrorCode::kInvalidArgument,
            "ambiguous config key '" + key + "', use section.key");
    section = hits.front();
    leaf = key;
  }

  json& slot = j[section][leaf];
  json parsed = json::parse(value, nullptr, false);
  if (slot.is_string()) {
    slot = parsed.is_string() ? parsed.get<std::string>() : value;
  } else if (slot.is_number_unsigned() || slot.is_number_integer()) {
    require(parsed.is_number(), ErrorCode::kInvalidArgument,
            "config key " + key + " expects an integer, got '" + value + "'");
    const double d = parsed.get<double>();
    require(std::floor(d) == d, ErrorCode::kInvalidArgument,
            "config key " + key + " expects an integer, got '" + value + "'");
    if (slot.is_number_unsigned()) {
      require(d >= 0.0, ErrorCode::kInvalidArgument,
              "config key " + key + " must be non-negative");
      slot = parsed.is_number_unsigned() ? parsed.get<std::uint64_t>()
                                         : static_cast<std::uint64_t>(d);
    } else {
      slot = static_cast<std::int64_t>(d);
    }
  } else {
    require(parsed.is_number(), ErrorCode::kInvalidArgument,
            "config key " + key + " expects a number, got '" + value + "'");
    slot = parsed.get<double>();
  }
  c = config_from_json(j);
}

}  // namespace normsep::harness
