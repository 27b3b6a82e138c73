// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0
//
// normsep command-line driver. Links only the C interface.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "normsep/normsep.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Thrown for problems the user can fix on the command line.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RuntimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(ns_status s) {
  if (s == NS_OK) return;
  const std::string msg = ns_last_error();
  throw RuntimeError(msg.empty() ? ns_status_name(s) : msg);
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  ns_string_free(s);
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Owns an ns_config built from --config, --set and NORMSEP_SEED.
class Config {
 public:
  Config(const std::string& path, const std::vector<std::string>& sets) {
    ns_status s = path.empty() ? ns_config_create(&c_)
                               : ns_config_load(path.c_str(), &c_);
    if (s != NS_OK) {
      if (s == NS_ERR_IO) throw RuntimeError(ns_last_error());
      throw UsageError(std::string("--config: ") + ns_last_error());
    }
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw UsageError("--set expects key=value, got '" + kv + "'");
      }
      set("--set", kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (const char* env = std::getenv("NORMSEP_SEED"); env && *env) {
      set("NORMSEP_SEED", "training.seed", env);
    }
  }
  ~Config() { ns_config_free(c_); }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;

  const ns_config* get() const { return c_; }

  std::string json() const {
    char* s = nullptr;
    check(ns_config_to_json(c_, &s));
    return take_string(s);
  }

 private:
  void set(const std::string& flag, const std::string& key,
           const std::string& value) {
    if (ns_config_set(c_, key.c_str(), value.c_str()) != NS_OK) {
      throw UsageError(flag + ": " + ns_last_error());
    }
  }

  ns_config* c_ = nullptr;
};

void ensure_dir(const std::string& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw RuntimeError("cannot create " + dir + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw RuntimeError("cannot write " + path.string());
  f << text << '\n';
}

void print_summary(const ns_run* run) {
  ns_run_summary s{};
  check(ns_run_summary_get(run, &s));
  std::printf("grokked        %s\n", s.grokked ? "yes" : "no");
  std::printf("t_mem          %lld\n", static_cast<long long>(s.t_mem));
  std::printf("t_grok         %lld\n", static_cast<long long>(s.t_grok));
  std::printf("delay          %lld\n", static_cast<long long>(s.delay));
  std::printf("tau_detect     %lld\n", static_cast<long long>(s.tau_detect));
  std::printf("v_init         %.6g\n", s.v_init);
  std::printf("v_mem          %.6g\n", s.v_mem);
  std::printf("v_post_at_grok %.6g\n", s.v_post_at_grok);
  std::printf("v_final        %.6g\n", s.v_final);
  if (s.has_fit) {
    std::printf("fit            A=%.6g rho=%.8f C=%.6g R2=%.4f gamma=%.6g\n",
                s.fit_a, s.fit_rho, s.fit_c, s.fit_r2, s.gamma_fit);
    if (s.t_grok >= 0 && s.v_post_at_grok > 0 && s.v_mem > s.v_post_at_grok) {
      double pred = 0;
      if (ns_predict_escape(s.gamma_fit, s.v_mem, s.v_post_at_grok, &pred) ==
          NS_OK) {
        std::printf("predicted      %.1f\n", pred);
      }
    }
  }
}

void progress(const char* run_id, int ok, void*) {
  std::fprintf(stderr, "%s %s\n", ok ? "done  " : "failed", run_id);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"normsep: norm-separation grokking laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ns_version());

  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  std::string in_dir;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file")
        ->check(CLI::ExistingFile);
    sub->add_option("--set", sets, "Override a config field (key=value)")
        ->take_all()
        ->allow_extra_args(false);
  };

  auto* train = app.add_subcommand("train", "Train one model");
  add_config(train);
  bool print_defaults = false;
  std::string run_id;
  train->add_flag("--print-defaults", print_defaults,
                  "Print the resolved config and exit");
  train->add_option("--out", out_dir, "Output directory");
  train->add_option("--run-id", run_id, "Run identifier");

  auto* sweep = app.add_subcommand("sweep", "Run an axis x seed sweep");
  add_config(sweep);
  std::string axis;
  std::string values;
  std::string seeds_arg = "0,1,2";
  int jobs = 1;
  sweep->add_option("--axis", axis, "lambda|eta|p|task|optimizer|eta_x_lambda")
      ->required();
  sweep->add_option("--values", values, "Comma-separated axis values")
      ->required();
  sweep->add_option("--seeds", seeds_arg, "Comma-separated seeds");
  sweep->add_option("--jobs", jobs, "Concurrent runs")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--out", out_dir, "Output directory")->required();

  auto* synth = app.add_subcommand(
      "synth", "Synthetic on-manifold escape versus closed forms");
  double eta = 1e-3, lambda = 1.0, v0 = 4000, v_post = 300, sigma = 0;
  std::size_t dim = 64, n_seeds = 100;
  std::uint64_t seed = 0;
  synth->add_option("--eta", eta)->check(CLI::PositiveNumber);
  synth->add_option("--lambda", lambda)->check(CLI::PositiveNumber);
  synth->add_option("--v0", v0)->check(CLI::PositiveNumber);
  synth->add_option("--v-post", v_post)->check(CLI::PositiveNumber);
  synth->add_option("--sigma", sigma)->check(CLI::NonNegativeNumber);
  synth->add_option("--dim", dim)->check(CLI::PositiveNumber);
  synth->add_option("--trajectories", n_seeds)->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed);

  auto* detect = app.add_subcommand(
      "detect", "Detection-time bounds and Monte Carlo");
  double delta_min = 0.1, m_bound = 1.0, delta = 0.05;
  int p = 23, n_mc = 10000;
  detect->add_option("--delta-min", delta_min)->check(CLI::PositiveNumber);
  detect->add_option("--m", m_bound)->check(CLI::PositiveNumber);
  detect->add_option("--p", p)->check(CLI::PositiveNumber);
  detect->add_option("--delta", delta)->check(CLI::Range(0.0, 1.0));
  detect->add_option("--n", n_mc)->check(CLI::PositiveNumber);
  detect->add_option("--seed", seed);

  auto* spectral = app.add_subcommand(
      "spectral", "Spectra of a saved run's checkpoints");
  std::string run_name;
  spectral->add_option("--in", in_dir, "Run directory")->required();
  spectral->add_option("--run", run_name, "Run id (default: all runs)");
  spectral->add_option("--out", out_dir, "Output directory")->required();

  auto* analyze = app.add_subcommand(
      "analyze", "Fits and regressions over a results directory");
  analyze->add_option("--in", in_dir, "Results directory")->required();
  analyze->add_option("--out", out_dir, "Write analysis.json here");

  auto* predict = app.add_subcommand(
      "predict", "Predicted escape time and synthetic bounds");
  double gamma = 0, v_mem = 0;
  auto* o_gamma = predict->add_option("--gamma", gamma)
                      ->check(CLI::PositiveNumber);
  auto* o_vmem = predict->add_option("--v-mem", v_mem)
                     ->check(CLI::PositiveNumber);
  predict->add_option("--v-post", v_post)->check(CLI::PositiveNumber);
  auto* o_eta = predict->add_option("--eta", eta)->check(CLI::PositiveNumber);
  auto* o_lambda =
      predict->add_option("--lambda", lambda)->check(CLI::PositiveNumber);
  predict->add_option("--sigma", sigma)->check(CLI::NonNegativeNumber);

  auto* report = app.add_subcommand(
      "report", "Emit the summary files the figure scripts read");
  report->add_option("--in", in_dir, "Results root")->required();
  report->add_option("--out", out_dir, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed()) {
      Config cfg(config_path, sets);
      if (print_defaults) {
        std::printf("%s\n", cfg.json().c_str());
        return kExitOk;
      }
      ensure_dir(out_dir);
      ns_run* run = nullptr;
      check(ns_train(cfg.get(), out_dir.empty() ? nullptr : out_dir.c_str(),
                     run_id.c_str(), &run));
      print_summary(run);
      ns_run_free(run);
    } else if (sweep->parsed()) {
      Config cfg(config_path, sets);
      const auto vals = split_list(values);
      if (vals.empty()) throw UsageError("--values: empty list");
      std::vector<uint64_t> seeds;
      for (const auto& s : split_list(seeds_arg)) {
        try {
          std::size_t used = 0;
          seeds.push_back(std::stoull(s, &used));
          if (used != s.size()) throw std::invalid_argument(s);
        } catch (const std::exception&) {
          throw UsageError("--seeds: not an integer: " + s);
        }
      }
      if (seeds.empty()) throw UsageError("--seeds: empty list");
      std::vector<const char*> cvals;
      for (const auto& v : vals) cvals.push_back(v.c_str());
      ensure_dir(out_dir);
      ns_sweep* sw = nullptr;
      const ns_status s =
          ns_sweep_run(cfg.get(), axis.c_str(), cvals.data(), cvals.size(),
                       seeds.data(), seeds.size(), jobs, out_dir.c_str(),
                       progress, nullptr, &sw);
      if (s == NS_ERR_INVALID_ARGUMENT) {
        throw UsageError(std::string("--axis/--values: ") + ns_last_error());
      }
      check(s);
      char* js = nullptr;
      check(ns_sweep_to_json(sw, &js));
      ns_sweep_free(sw);
      std::printf("%s\n", take_string(js).c_str());
    } else if (synth->parsed()) {
      double lo = 0, hi = 0, pred = 0;
      check(ns_escape_bounds(eta, lambda, v0, v_post, sigma, &lo, &hi));
      check(ns_predict_escape(eta * lambda, v0, v_post, &pred));
      const auto steps = static_cast<std::size_t>(std::ceil(hi)) + 2;
      std::vector<double> mean(steps + 1);
      check(ns_mean_on_manifold(dim, v0, eta, lambda, sigma, steps, n_seeds,
                                seed, mean.data()));
      long measured = -1;
      for (std::size_t t = 0; t < mean.size(); ++t) {
        if (mean[t] <= v_post) {
          measured = static_cast<long>(t);
          break;
        }
      }
      std::printf("lower      %.1f\n", lo);
      std::printf("upper      %.1f\n", hi);
      std::printf("predicted  %.1f\n", pred);
      std::printf("simulated  %ld\n", measured);
      std::printf("%-8s %-16s %-16s\n", "t", "mean_V", "closed_form");
      const std::size_t stride = std::max<std::size_t>(1, steps / 10);
      for (std::size_t t = 0; t <= steps; t += stride) {
        double cf = 0;
        check(ns_closed_form_mean_v(t, v0, eta, lambda, sigma, &cf));
        std::printf("%-8zu %-16.8g %-16.8g\n", t, mean[t], cf);
      }
      const bool ok = measured >= 0 && measured >= lo - 1 && measured <= hi + 1;
      std::printf("consistent %s\n", ok ? "yes" : "no");
    } else if (detect->parsed()) {
      double g = 0, lo = 0, hi = 0;
      check(ns_detection_bounds(delta_min, m_bound, p, delta, &g, &lo, &hi));
      std::printf("gamma  %.6g\nlower  %.3f\nupper  %.3f\n", g, lo, hi);
      for (const char* law : {"constant", "bernoulli-scaled", "clipped-gaussian"}) {
        double mt = 0, se = 0;
        check(ns_simulate_detection(delta_min, m_bound, p, delta, law, n_mc,
                                    seed, &mt, &se));
        const bool ok = mt >= lo - 1 && mt <= hi + 3 * se;
        std::printf("%-17s E[tau]=%.3f stderr=%.3f %s\n", law, mt, se,
                    ok ? "within" : "outside");
      }
    } else if (spectral->parsed()) {
      ensure_dir(out_dir);
      int n = 0;
      check(ns_spectral_run(in_dir.c_str(),
                            run_name.empty() ? nullptr : run_name.c_str(),
                            out_dir.c_str(), &n));
      std::printf("wrote %d spectra to %s\n", n, out_dir.c_str());
    } else if (analyze->parsed()) {
      char* js = nullptr;
      check(ns_analyze_dir(in_dir.c_str(), &js));
      const std::string text = take_string(js);
      if (!out_dir.empty()) {
        ensure_dir(out_dir);
        write_text(std::filesystem::path(out_dir) / "analysis.json", text);
      }
      std::printf("%s\n", text.c_str());
    } else if (predict->parsed()) {
      const bool have_pred = o_gamma->count() && o_vmem->count();
      const bool have_bounds = o_eta->count() && o_lambda->count();
      if (!have_pred && !have_bounds) {
        throw UsageError(
            "predict needs --gamma/--v-mem/--v-post or --eta/--lambda");
      }
      if (have_pred) {
        double pred = 0;
        check(ns_predict_escape(gamma, v_mem, v_post, &pred));
        std::printf("%.1f\n", pred);
      }
      if (have_bounds) {
        double lo = 0, hi = 0;
        check(ns_escape_bounds(eta, lambda, have_pred ? v_mem : v0, v_post,
                               sigma, &lo, &hi));
        std::printf("lower %.1f\nupper %.1f\n", lo, hi);
      }
    } else if (report->parsed()) {
      ensure_dir(out_dir);
      int n = 0;
      check(ns_report(in_dir.c_str(), out_dir.c_str(), &n));
      std::printf("report from %d record directories written to %s\n", n,
                  out_dir.c_str());
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}
