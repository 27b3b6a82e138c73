// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training runs, sweeps and the per-run summary they produce.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/analysis.hpp"
#include "core/config.hpp"
#include "core/models.hpp"

namespace normsep::harness {

inline constexpr const char* kSchemaVersion = "normsep-records-1";

struct TrajectoryPoint {
  long step = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double v_sq_norm = 0.0;
  std::optional<double> r_value;
  friend bool operator==(const TrajectoryPoint&,
                         const TrajectoryPoint&) = default;
};

struct RunRecord {
  std::string run_id;
  std::string axis;        // empty for single runs
  std::string axis_value;  // empty for single runs
  ExperimentConfig config;
  std::vector<TrajectoryPoint> trajectory;
  std::optional<long> t_mem;
  std::optional<long> t_grok;
  std::optional<long> delay;
  std::optional<long> tau_detect;
  double v_init = 0.0;
  std::optional<double> v_mem;
  std::optional<double> v_post_at_grok;
  double v_final = 0.0;
  std::optional<analysis::FitResult> fit;
  bool grokked = false;
  std::vector<int> support;  // K* behind the logged r_value
  std::string regime;        // set by sweeps
  bool failed = false;
  std::string error;

  // ln(v_mem / v_post_at_grok) for grokked runs, ln(v_mem / v_final) for
  // runs that only memorise, 0 otherwise.
  double log_norm_ratio() const;
  // v_final / v_init
  double norm_retention() const;
};

// Receives model snapshots at checkpoint_every steps.
using CheckpointSink =
    std::function<void(long step, const models::MlpModel& model)>;

RunRecord run_training(const ExperimentConfig& config,
                       const CheckpointSink& sink = {});

// Applies one axis value to a config. Axes: lambda, eta, p, optimizer
// (adamw | sgd | sgd_w_eq_lambda | sgd_w_eq_2lambda), task, eta_x_lambda
// (value "eta:lambda").
void apply_axis(ExperimentConfig& c, const std::string& axis,
                const std::string& value);

struct SweepPoint {
  std::string axis_value;
  std::vector<std::size_t> runs;  // indices into SweepResult::records
  double grok_fraction = 0.0;
  std::optional<double> mean_delay;
  double mean_log_norm_ratio = 0.0;
  double mean_norm_retention = 0.0;
  analysis::RegimeLabel regime;
};

struct SweepResult {
  std::string axis;
  std::vector<RunRecord> records;
  std::vector<SweepPoint> points;
  std::map<std::string, analysis::RegressionResult> regressions;
  std::map<std::string, double> statistics;
};

SweepResult run_sweep(const ExperimentConfig& base, const std::string& axis,
                      const std::vector<std::string>& values,
                      const std::vector<std::uint64_t>& seeds, int jobs = 1,
                      const std::function<void(const RunRecord&)>& on_done = {});

// Groups records by axis_value (in first-seen order), labels regimes and
// computes the axis regressions. Used by run_sweep and by analyze.
SweepResult summarize(std::string axis, std::vector<RunRecord> records);

struct GapData {
  std::vector<double> r;
  std::vector<double> gap;
};

// Pre-grok points with r_value > 0.03 paired with val_loss minus the
// val_loss at t_grok, pooled over grokked runs.
GapData gap_regression_dataset(std::span<const RunRecord> records);

}  // namespace normsep::harness
