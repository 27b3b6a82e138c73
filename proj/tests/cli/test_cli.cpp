// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Runs the normsep executable and checks exit codes and key output.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <string>

#ifndef NORMSEP_CLI_PATH
#error "NORMSEP_CLI_PATH must be defined"
#endif

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(NORMSEP_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* f = popen(cmd.c_str(), "r");
  if (!f) return r;
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), buf.size(), f)) r.out += buf.data();
  const int st = pclose(f);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

TEST(Cli, PredictPrintsEscapeTime) {
  const auto r = run("predict --gamma 0.001 --v-mem 4000 --v-post 300");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("2590.3"), std::string::npos) << r.out;
}

TEST(Cli, HelpOnEveryVerb) {
  for (const char* v : {"train", "sweep", "synth", "detect", "spectral",
                        "analyze", "predict", "report"}) {
    const auto r = run(std::string(v) + " --help");
    EXPECT_EQ(r.code, 0) << v;
    EXPECT_NE(r.out.find("Usage"), std::string::npos) << v;
  }
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("--version").code, 0);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("train --set nope=1 --print-defaults").code, 2);
  EXPECT_EQ(run("predict --gamma 0.001").code, 2);
  EXPECT_EQ(run("sweep --axis lambda").code, 2);
  EXPECT_EQ(run("predict --gamma -1 --v-mem 4000 --v-post 300").code, 2);
}

TEST(Cli, RuntimeErrorsExitOne) {
  EXPECT_EQ(run("analyze --in /nonexistent/normsep").code, 1);
  EXPECT_EQ(run("report --in /nonexistent/normsep --out /tmp/x").code, 1);
}

TEST(Cli, PrintDefaultsIsJson) {
  const auto r = run("train --print-defaults --set lambda=0.5");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\"optimizer\""), std::string::npos);
  EXPECT_NE(r.out.find("0.5"), std::string::npos);
}

TEST(Cli, SynthAndDetect) {
  const auto s = run(
      "synth --eta 0.001 --lambda 1 --v0 4000 --v-post 300 --trajectories 20");
  EXPECT_EQ(s.code, 0) << s.out;
  EXPECT_NE(s.out.find("consistent yes"), std::string::npos) << s.out;
  const auto d = run("detect --delta-min 0.5 --m 1 --p 97 --delta 0.05 --n 500");
  EXPECT_EQ(d.code, 0) << d.out;
  EXPECT_NE(d.out.find("bernoulli-scaled"), std::string::npos) << d.out;
}

}  // namespace
