// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Persistence of run records, checkpoints and the derived report files.

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/harness.hpp"

namespace normsep::harness {

namespace fs = std::filesystem;

inline constexpr const char* kTrajectoryHeader =
    "step,train_loss,val_loss,train_acc,val_acc,v_sq_norm,r_value";
inline constexpr const char* kSweepSummaryHeader =
    "axis_value,seed,grokked,t_mem,t_grok,delay,v_mem,v_post_at_grok,v_final,"
    "rho,gamma_fit,fit_r2,regime";

nlohmann::json summary_to_json(const RunRecord& r);
RunRecord summary_from_json(const nlohmann::json& j);

void write_trajectory_csv(const RunRecord& r, std::ostream& out);
std::vector<TrajectoryPoint> read_trajectory_csv(std::istream& in,
                                                 const std::string& what);
void write_sweep_summary_csv(std::span<const RunRecord> records,
                             std::ostream& out);

// <dir>/<run_id>.trajectory.csv, <dir>/<run_id>.summary.json and
// <dir>/sweep_summary.csv. Creates dir.
void write_records(std::span<const RunRecord> records, const fs::path& dir);
// Reads every *.summary.json in dir, sorted by run id.
std::vector<RunRecord> read_records(const fs::path& dir);

void write_sweep_json(const SweepResult& s, const fs::path& path);
nlohmann::json sweep_to_json(const SweepResult& s);

// Binary parameter snapshot.
void write_checkpoint(const fs::path& path, long step,
                      std::span<const double> params);
std::vector<double> read_checkpoint(const fs::path& path, long* step = nullptr);
fs::path checkpoint_dir(const fs::path& dir, const std::string& run_id);

// Spectra of every checkpoint of one run; K* from post-grok checkpoints.
// Writes <out>/<run_id>.step<N>.spectrum.csv and .json; returns count.
int spectral_from_checkpoints(const fs::path& run_dir, const std::string& run_id,
                              const fs::path& out_dir);

// Per-axis regressions, fit table and gap regression over a records dir.
nlohmann::json analyze_records(std::span<const RunRecord> records);

// Emits the CSV/JSON files the figure component reads. Returns the number
// of record directories found under in_dir (in_dir itself included).
int write_report(const fs::path& in_dir, const fs::path& out_dir);

}  // namespace normsep::harness
