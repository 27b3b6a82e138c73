// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Exercises the shared library through its C interface only.

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "normsep/normsep.h"

namespace {

namespace fs = std::filesystem;

std::string take(char* s) {
  std::string out = s ? s : "";
  ns_string_free(s);
  return out;
}

ns_config* tiny_config() {
  ns_config* c = nullptr;
  EXPECT_EQ(ns_config_create(&c), NS_OK);
  EXPECT_EQ(ns_config_set(c, "p", "7"), NS_OK);
  EXPECT_EQ(ns_config_set(c, "d_e", "8"), NS_OK);
  EXPECT_EQ(ns_config_set(c, "hidden", "16"), NS_OK);
  EXPECT_EQ(ns_config_set(c, "max_steps", "100"), NS_OK);
  return c;
}

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(ns_version(), "0.1.0");
  EXPECT_STREQ(ns_status_name(NS_OK), "ok");
  EXPECT_STRNE(ns_status_name(NS_ERR_IO), ns_status_name(NS_ERR_INTERNAL));
}

TEST(CApi, ConfigErrorsAreReported) {
  ns_config* c = nullptr;
  ASSERT_EQ(ns_config_create(&c), NS_OK);
  EXPECT_EQ(ns_config_set(c, "nope", "1"), NS_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(ns_last_error()).find("nope"), std::string::npos);
  EXPECT_EQ(ns_config_set(c, "lambda", "0.25"), NS_OK);
  char* js = nullptr;
  ASSERT_EQ(ns_config_to_json(c, &js), NS_OK);
  EXPECT_NE(take(js).find("0.25"), std::string::npos);
  ns_config* d = nullptr;
  ASSERT_EQ(ns_config_clone(c, &d), NS_OK);
  ns_config_free(d);
  ns_config_free(c);
  EXPECT_EQ(ns_config_create(nullptr), NS_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(ns_config_load("/nonexistent.json", &c), NS_ERR_IO);
}

TEST(CApi, ClosedForms) {
  double v = 0;
  ASSERT_EQ(ns_predict_escape(0.001, 4000, 300, &v), NS_OK);
  EXPECT_NEAR(v, std::log(4000.0 / 300.0) / 0.001, 1e-9);
  EXPECT_EQ(ns_predict_escape(0.0, 4000, 300, &v), NS_ERR_INVALID_ARGUMENT);
  double lo = 0, hi = 0;
  ASSERT_EQ(ns_escape_bounds(1e-3, 1.0, 4000, 300, 0.0, &lo, &hi), NS_OK);
  EXPECT_LT(lo, hi);
  EXPECT_NEAR(hi, v, 1e-6);
  double g = 0;
  ASSERT_EQ(ns_detection_bounds(0.5, 1.0, 97, 0.05, &g, &lo, &hi), NS_OK);
  EXPECT_NEAR(g, std::log(1940.0), 1e-12);
  double m = 0, se = 0;
  ASSERT_EQ(ns_simulate_detection(0.5, 1.0, 97, 0.05, "constant", 10, 0, &m,
                                  &se),
            NS_OK);
  EXPECT_EQ(m, std::ceil(g / 0.5));
  EXPECT_EQ(ns_simulate_detection(0.5, 1.0, 97, 0.05, "poisson", 10, 0, &m,
                                  &se),
            NS_ERR_INVALID_ARGUMENT);
  std::vector<double> series(11);
  ASSERT_EQ(ns_simulate_on_manifold(4, 10.0, 0.01, 1.0, 0.0, 10, 0,
                                    series.data()),
            NS_OK);
  double cf = 0;
  ASSERT_EQ(ns_closed_form_mean_v(10, 10.0, 0.01, 1.0, 0.0, &cf), NS_OK);
  EXPECT_NEAR(series[10], cf, 1e-9);
}

TEST(CApi, FitExponential) {
  std::vector<double> t, v;
  for (int i = 0; i < 60; ++i) {
    t.push_back(50.0 * i);
    v.push_back(1000 * std::pow(0.998, 50.0 * i) + 20);
  }
  ns_fit f{};
  ASSERT_EQ(ns_fit_exponential(t.data(), v.data(), t.size(), &f), NS_OK);
  EXPECT_NEAR(f.rho, 0.998, 1e-6);
  EXPECT_GT(f.r2, 0.999);
  EXPECT_NE(ns_fit_exponential(t.data(), v.data(), 2, &f), NS_OK);
}

TEST(CApi, TrainWritesRecordsAndReport) {
  const fs::path dir = fs::temp_directory_path() / "normsep_capi";
  fs::remove_all(dir);
  ns_config* c = tiny_config();
  ASSERT_EQ(ns_config_set(c, "checkpoint_every", "50"), NS_OK);
  ns_run* r = nullptr;
  ASSERT_EQ(ns_train(c, dir.c_str(), "one", &r), NS_OK) << ns_last_error();
  ns_run_summary s{};
  ASSERT_EQ(ns_run_summary_get(r, &s), NS_OK);
  EXPECT_GT(s.n_points, 1u);
  EXPECT_GT(s.v_init, 0.0);
  ns_trajectory_point p{};
  ASSERT_EQ(ns_run_point(r, 0, &p), NS_OK);
  EXPECT_EQ(p.step, 0);
  EXPECT_EQ(ns_run_point(r, s.n_points, &p), NS_ERR_INVALID_ARGUMENT);
  char* js = nullptr;
  ASSERT_EQ(ns_run_to_json(r, &js), NS_OK);
  EXPECT_NE(take(js).find("\"run_id\""), std::string::npos);
  ns_run_free(r);

  EXPECT_TRUE(fs::exists(dir / "one.summary.json"));
  EXPECT_TRUE(fs::exists(dir / "one.trajectory.csv"));
  int n = 0;
  ASSERT_EQ(ns_spectral_run(dir.c_str(), "one", (dir / "spec").c_str(), &n),
            NS_OK)
      << ns_last_error();
  EXPECT_GE(n, 2);
  ASSERT_EQ(ns_analyze_dir(dir.c_str(), &js), NS_OK) << ns_last_error();
  EXPECT_NE(take(js).find("points"), std::string::npos);
  ASSERT_EQ(ns_report(dir.c_str(), (dir / "rep").c_str(), &n), NS_OK);
  EXPECT_EQ(n, 1);
  EXPECT_EQ(ns_analyze_dir((dir / "missing").c_str(), &js), NS_ERR_IO);
  ns_config_free(c);
  fs::remove_all(dir);
}

void count_done(const char*, int ok, void* user) {
  *static_cast<int*>(user) += ok ? 1 : 100;
}

TEST(CApi, SweepRunsEveryCell) {
  ns_config* c = tiny_config();
  const char* values[] = {"0.1", "1"};
  const uint64_t seeds[] = {0, 1};
  int done = 0;
  ns_sweep* s = nullptr;
  ASSERT_EQ(ns_sweep_run(c, "lambda", values, 2, seeds, 2, 2, nullptr,
                         count_done, &done, &s),
            NS_OK)
      << ns_last_error();
  EXPECT_EQ(done, 4);
  char* js = nullptr;
  ASSERT_EQ(ns_sweep_to_json(s, &js), NS_OK);
  const std::string j = take(js);
  EXPECT_NE(j.find("\"lambda\""), std::string::npos);
  ns_sweep_free(s);
  EXPECT_EQ(ns_sweep_run(c, "width", values, 2, seeds, 2, 1, nullptr, nullptr,
                         nullptr, &s),
            NS_ERR_INVALID_ARGUMENT);
  ns_config_free(c);
}

}  // namespace
