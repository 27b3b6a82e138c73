// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "normsep/normsep.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <string>
#include <vector>

#include "core/analysis.hpp"
#include "core/config.hpp"
#include "core/detection.hpp"
#include "core/dynamics.hpp"
#include "core/error.hpp"
#include "core/harness.hpp"
#include "core/records.hpp"

struct ns_config {
  normsep::harness::ExperimentConfig cfg;
};

struct ns_run {
  normsep::harness::RunRecord rec;
};

struct ns_sweep {
  normsep::harness::SweepResult result;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
ns_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return NS_OK;
  } catch (const normsep::Error& e) {
    g_last_error = e.what();
    return static_cast<ns_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return NS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return NS_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  normsep::require(p != nullptr, normsep::ErrorCode::kInvalidArgument,
                   std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

normsep::dynamics::SgdHyper hyper(double eta, double lambda, double sigma) {
  normsep::dynamics::SgdHyper h;
  h.eta = eta;
  h.lambda = lambda;
  h.sigma = sigma;
  return h;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

extern "C" {

const char* ns_version(void) { return "0.1.0"; }

const char* ns_last_error(void) { return g_last_error.c_str(); }

const char* ns_status_name(ns_status s) {
  switch (s) {
    case NS_OK:
      return "ok";
    case NS_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case NS_ERR_DIMENSION_MISMATCH:
      return "dimension mismatch";
    case NS_ERR_NON_FINITE:
      return "non-finite value";
    case NS_ERR_PRECONDITION:
      return "precondition violated";
    case NS_ERR_INFEASIBLE:
      return "infeasible";
    case NS_ERR_IO:
      return "io error";
    case NS_ERR_DIVERGED:
      return "diverged";
    case NS_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

void ns_string_free(char* s) { std::free(s); }

ns_status ns_config_create(ns_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new ns_config{};
  });
}

ns_status ns_config_load(const char* path, ns_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto cfg = normsep::harness::load_config(path);
    *out = new ns_config{std::move(cfg)};
  });
}

ns_status ns_config_clone(const ns_config* c, ns_config** out) {
  return guarded([&] {
    need(c, "config");
    need(out, "out");
    *out = new ns_config{c->cfg};
  });
}

void ns_config_free(ns_config* c) { delete c; }

ns_status ns_config_set(ns_config* c, const char* key, const char* value) {
  return guarded([&] {
    need(c, "config");
    need(key, "key");
    need(value, "value");
    normsep::harness::apply_override(c->cfg, key, value);
  });
}

ns_status ns_config_to_json(const ns_config* c, char** out) {
  return guarded([&] {
    need(c, "config");
    need(out, "out");
    *out = dup_string(normsep::harness::to_json(c->cfg).dump(2));
  });
}

ns_status ns_train(const ns_config* c, const char* out_dir, const char* run_id,
                   ns_run** out) {
  return guarded([&] {
    need(c, "config");
    need(out, "out");
    namespace h = normsep::harness;
    const std::string id =
        run_id && *run_id ? run_id : "run_s" + std::to_string(c->cfg.seed);
    h::CheckpointSink sink;
    if (out_dir && c->cfg.checkpoint_every > 0) {
      const auto dir = h::checkpoint_dir(out_dir, id);
      sink = [dir](long step, const normsep::models::MlpModel& m) {
        char name[32];
        std::snprintf(name, sizeof name, "step_%09ld.bin", step);
        h::write_checkpoint(dir / name, step, m.params());
      };
    }
    auto rec = h::run_training(c->cfg, sink);
    rec.run_id = id;
    if (out_dir) {
      h::write_records(std::span<const h::RunRecord>(&rec, 1), out_dir);
    }
    *out = new ns_run{std::move(rec)};
  });
}

void ns_run_free(ns_run* r) { delete r; }

ns_status ns_run_summary_get(const ns_run* r, ns_run_summary* out) {
  return guarded([&] {
    need(r, "run");
    need(out, "out");
    const auto& rec = r->rec;
    ns_run_summary s{};
    s.grokked = rec.grokked ? 1 : 0;
    s.t_mem = rec.t_mem.value_or(-1);
    s.t_grok = rec.t_grok.value_or(-1);
    s.delay = rec.delay.value_or(-1);
    s.tau_detect = rec.tau_detect.value_or(-1);
    s.v_init = rec.v_init;
    s.v_mem = rec.v_mem.value_or(kNaN);
    s.v_post_at_grok = rec.v_post_at_grok.value_or(kNaN);
    s.v_final = rec.v_final;
    s.has_fit = rec.fit ? 1 : 0;
    if (rec.fit) {
      s.fit_a = rec.fit->a;
      s.fit_rho = rec.fit->rho;
      s.fit_c = rec.fit->c;
      s.fit_r2 = rec.fit->r2;
      s.gamma_fit = rec.fit->gamma_fit;
    }
    s.n_points = rec.trajectory.size();
    *out = s;
  });
}

ns_status ns_run_point(const ns_run* r, size_t i, ns_trajectory_point* out) {
  return guarded([&] {
    need(r, "run");
    need(out, "out");
    normsep::require(i < r->rec.trajectory.size(),
                     normsep::ErrorCode::kInvalidArgument,
                     "trajectory index out of range");
    const auto& p = r->rec.trajectory[i];
    *out = {p.step,    p.train_loss, p.val_loss,
            p.train_acc, p.val_acc, p.v_sq_norm, p.r_value.value_or(kNaN)};
  });
}

ns_status ns_run_to_json(const ns_run* r, char** out) {
  return guarded([&] {
    need(r, "run");
    need(out, "out");
    *out = dup_string(normsep::harness::summary_to_json(r->rec).dump(2));
  });
}

ns_status ns_sweep_run(const ns_config* base, const char* axis,
                       const char* const* values, size_t n_values,
                       const uint64_t* seeds, size_t n_seeds, int jobs,
                       const char* out_dir, ns_progress_fn progress,
                       void* user, ns_sweep** out) {
  return guarded([&] {
    need(base, "config");
    need(axis, "axis");
    need(values, "values");
    need(seeds, "seeds");
    need(out, "out");
    namespace h = normsep::harness;
    std::vector<std::string> vals;
    for (size_t i = 0; i < n_values; ++i) {
      need(values[i], "values[i]");
      vals.emplace_back(values[i]);
    }
    std::vector<std::uint64_t> sd(seeds, seeds + n_seeds);
    std::function<void(const h::RunRecord&)> cb;
    if (progress) {
      cb = [&](const h::RunRecord& r) {
        progress(r.run_id.c_str(), r.failed ? 0 : 1, user);
      };
    }
    auto result = h::run_sweep(base->cfg, axis, vals, sd, jobs, cb);
    if (out_dir) {
      h::write_records(result.records, out_dir);
      h::write_sweep_json(result, std::filesystem::path(out_dir) / "sweep.json");
    }
    *out = new ns_sweep{std::move(result)};
  });
}

void ns_sweep_free(ns_sweep* s) { delete s; }

ns_status ns_sweep_to_json(const ns_sweep* s, char** out) {
  return guarded([&] {
    need(s, "sweep");
    need(out, "out");
    *out = dup_string(normsep::harness::sweep_to_json(s->result).dump(2));
  });
}

ns_status ns_predict_escape(double gamma, double v_mem, double v_post,
                            double* out) {
  return guarded([&] {
    need(out, "out");
    *out = normsep::analysis::predict_escape(gamma, v_mem, v_post);
  });
}

ns_status ns_escape_bounds(double eta, double lambda, double v0, double v_post,
                           double sigma, double* lower, double* upper) {
  return guarded([&] {
    need(lower, "lower");
    need(upper, "upper");
    const auto b = normsep::analysis::escape_bounds(eta, lambda, v0, v_post, sigma);
    *lower = b.lower;
    *upper = b.upper;
  });
}

ns_status ns_simulate_on_manifold(size_t dim, double v0, double eta,
                                  double lambda, double sigma, size_t steps,
                                  uint64_t seed, double* v_series) {
  return guarded([&] {
    need(v_series, "v_series");
    const auto t = normsep::dynamics::simulate_on_manifold(
        dim, v0, hyper(eta, lambda, sigma), steps, seed);
    std::copy(t.v_series.begin(), t.v_series.end(), v_series);
  });
}

ns_status ns_mean_on_manifold(size_t dim, double v0, double eta, double lambda,
                              double sigma, size_t steps, size_t n_seeds,
                              uint64_t seed, double* mean_series) {
  return guarded([&] {
    need(mean_series, "mean_series");
    const auto m = normsep::dynamics::mean_on_manifold(
        dim, v0, hyper(eta, lambda, sigma), steps, n_seeds, seed);
    std::copy(m.begin(), m.end(), mean_series);
  });
}

ns_status ns_closed_form_mean_v(uint64_t t, double v0, double eta,
                                double lambda, double sigma, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = normsep::dynamics::closed_form_mean_v(t, v0, hyper(eta, lambda, sigma));
  });
}

ns_status ns_detection_bounds(double delta_min, double m_bound, int p,
                              double delta, double* gamma, double* lower,
                              double* upper) {
  return guarded([&] {
    need(gamma, "gamma");
    need(lower, "lower");
    need(upper, "upper");
    const normsep::detection::DetectionSpec spec{delta_min, m_bound, p, delta};
    const auto b = normsep::detection::detection_bounds(spec);
    *gamma = b.gamma;
    *lower = b.lower;
    *upper = b.upper;
  });
}

ns_status ns_simulate_detection(double delta_min, double m_bound, int p,
                                double delta, const char* law, int n_mc,
                                uint64_t seed, double* mean_tau,
                                double* stderr_tau) {
  return guarded([&] {
    need(law, "law");
    need(mean_tau, "mean_tau");
    need(stderr_tau, "stderr_tau");
    namespace d = normsep::detection;
    const d::DetectionSpec spec{delta_min, m_bound, p, delta};
    const auto e =
        d::simulate_detection(spec, d::parse_increment_law(law), n_mc, seed);
    *mean_tau = e.mean_tau;
    *stderr_tau = e.stderr_tau;
  });
}

ns_status ns_fit_exponential(const double* t, const double* v, size_t n,
                             ns_fit* out) {
  return guarded([&] {
    need(t, "t");
    need(v, "v");
    need(out, "out");
    const auto f = normsep::analysis::fit_exponential(
        std::span<const double>(t, n), std::span<const double>(v, n));
    *out = {f.a, f.rho, f.c, f.r2, f.gamma_fit};
  });
}

ns_status ns_spectral_run(const char* run_dir, const char* run_id,
                          const char* out_dir, int* n_written) {
  return guarded([&] {
    need(run_dir, "run_dir");
    need(out_dir, "out_dir");
    namespace h = normsep::harness;
    int total = 0;
    if (run_id && *run_id) {
      total = h::spectral_from_checkpoints(run_dir, run_id, out_dir);
    } else {
      bool any = false;
      for (const auto& r : h::read_records(run_dir)) {
        if (!std::filesystem::is_directory(h::checkpoint_dir(run_dir, r.run_id))) {
          continue;
        }
        any = true;
        total += h::spectral_from_checkpoints(run_dir, r.run_id, out_dir);
      }
      normsep::require(any, normsep::ErrorCode::kIo,
                       std::string("no run with checkpoints under ") + run_dir);
    }
    if (n_written) *n_written = total;
  });
}

ns_status ns_analyze_dir(const char* in_dir, char** json_out) {
  return guarded([&] {
    need(in_dir, "in_dir");
    need(json_out, "json_out");
    const auto recs = normsep::harness::read_records(in_dir);
    *json_out = dup_string(normsep::harness::analyze_records(recs).dump(2));
  });
}

ns_status ns_report(const char* in_dir, const char* out_dir, int* n_sources) {
  return guarded([&] {
    need(in_dir, "in_dir");
    need(out_dir, "out_dir");
    const int n = normsep::harness::write_report(in_dir, out_dir);
    if (n_sources) *n_sources = n;
  });
}

}  // extern "C"
