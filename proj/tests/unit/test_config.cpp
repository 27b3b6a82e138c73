// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "core/config.hpp"
#include "core/error.hpp"

namespace normsep::harness {
namespace {

TEST(Config, DefaultsValidateAndRoundTrip) {
  ExperimentConfig c;
  EXPECT_NO_THROW(c.validate());
  const auto j = to_json(c);
  for (const char* s : {"task", "model", "optimizer", "training", "analysis"}) {
    EXPECT_TRUE(j.contains(s)) << s;
  }
  const auto back = config_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(c.n_out(), 23);
}

TEST(Config, OverridesDottedAndLeaf) {
  ExperimentConfig c;
  apply_override(c, "lambda=0.5");
  EXPECT_EQ(c.lambda, 0.5);
  apply_override(c, "optimizer.eta", "0.002");
  EXPECT_EQ(c.eta, 0.002);
  apply_override(c, "task=parity");
  EXPECT_EQ(c.task, Task::kParity);
  EXPECT_EQ(c.n_out(), 2);
  apply_override(c, "optimizer=sgd");
  EXPECT_EQ(c.optimizer, Optimizer::kSgd);
  apply_override(c, "wd_convention=w_eq_lambda");
  EXPECT_EQ(c.wd_convention, WdConvention::kWEqLambda);
  apply_override(c, "activation=relu");
  EXPECT_EQ(c.activation, models::Activation::kRelu);
  apply_override(c, "seed=17");
  EXPECT_EQ(c.seed, 17u);
}

TEST(Config, RejectsUnknownAndMistyped) {
  ExperimentConfig c;
  EXPECT_THROW(apply_override(c, "nope=1"), Error);
  EXPECT_THROW(apply_override(c, "optimizer.bogus=1"), Error);
  EXPECT_THROW(apply_override(c, "p=abc"), Error);
  EXPECT_THROW(apply_override(c, "lambda"), Error);
  EXPECT_THROW(apply_override(c, "task=division"), Error);
  auto j = to_json(c);
  j["extra"] = 1;
  EXPECT_THROW(config_from_json(j), Error);
  j = to_json(c);
  j["training"]["max_step"] = 10;
  EXPECT_THROW(config_from_json(j), Error);
}

TEST(Config, InvalidValues) {
  ExperimentConfig c;
  c.p = 21;
  EXPECT_THROW(c.validate(), Error);
  c = ExperimentConfig{};
  c.acc_threshold = 0.5;
  EXPECT_THROW(c.validate(), Error);
  c = ExperimentConfig{};
  c.eta = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Config, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "normsep_cfg.json";
  {
    std::ofstream f(path);
    f << R"({"optimizer": {"lambda": 0.3}, "training": {"seed": 4}})";
  }
  const auto c = load_config(path.string());
  EXPECT_EQ(c.lambda, 0.3);
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.p, 23);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config("/nonexistent/cfg.json"), Error);
}

}  // namespace
}  // namespace normsep::harness
