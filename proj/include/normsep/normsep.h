/* Copyright 2026 The normsep Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the normsep library. Every function returns an ns_status;
 * on failure ns_last_error() describes the problem for the calling thread.
 * Handles are opaque and must be released with their _free function.
 * Strings returned through char** are owned by the caller and released with
 * ns_string_free().
 */
#ifndef NORMSEP_NORMSEP_H_
#define NORMSEP_NORMSEP_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NS_API __declspec(dllexport)
#else
#define NS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ns_status {
  NS_OK = 0,
  NS_ERR_INVALID_ARGUMENT = 1,
  NS_ERR_DIMENSION_MISMATCH = 2,
  NS_ERR_NON_FINITE = 3,
  NS_ERR_PRECONDITION = 4,
  NS_ERR_INFEASIBLE = 5,
  NS_ERR_IO = 6,
  NS_ERR_DIVERGED = 7,
  NS_ERR_INTERNAL = 8
} ns_status;

typedef struct ns_config ns_config;
typedef struct ns_run ns_run;
typedef struct ns_sweep ns_sweep;

NS_API const char* ns_version(void);
/* Message for the last failing call on this thread; "" if none. */
NS_API const char* ns_last_error(void);
NS_API const char* ns_status_name(ns_status s);
NS_API void ns_string_free(char* s);

/* ---- configuration ---- */
NS_API ns_status ns_config_create(ns_config** out);
NS_API ns_status ns_config_load(const char* path, ns_config** out);
NS_API ns_status ns_config_clone(const ns_config* c, ns_config** out);
NS_API void ns_config_free(ns_config* c);
/* key is dotted ("optimizer.lambda") or a unique leaf name ("lambda"). */
NS_API ns_status ns_config_set(ns_config* c, const char* key,
                               const char* value);
NS_API ns_status ns_config_to_json(const ns_config* c, char** out);

/* ---- training ---- */
typedef struct ns_run_summary {
  int grokked;
  int64_t t_mem;      /* -1 when undefined */
  int64_t t_grok;     /* -1 when undefined */
  int64_t delay;      /* -1 when undefined */
  int64_t tau_detect; /* -1 when undefined */
  double v_init;
  double v_mem;          /* NaN when undefined */
  double v_post_at_grok; /* NaN when undefined */
  double v_final;
  int has_fit;
  double fit_a;
  double fit_rho;
  double fit_c;
  double fit_r2;
  double gamma_fit;
  size_t n_points;
} ns_run_summary;

typedef struct ns_trajectory_point {
  int64_t step;
  double train_loss;
  double val_loss;
  double train_acc;
  double val_acc;
  double v_sq_norm;
  double r_value; /* NaN when not logged */
} ns_trajectory_point;

/* Trains one model. When out_dir is non-NULL the record (and checkpoints,
 * if training.checkpoint_every > 0) are written there under run_id. */
NS_API ns_status ns_train(const ns_config* c, const char* out_dir,
                          const char* run_id, ns_run** out);
NS_API void ns_run_free(ns_run* r);
NS_API ns_status ns_run_summary_get(const ns_run* r, ns_run_summary* out);
NS_API ns_status ns_run_point(const ns_run* r, size_t i,
                              ns_trajectory_point* out);
NS_API ns_status ns_run_to_json(const ns_run* r, char** out);

typedef void (*ns_progress_fn)(const char* run_id, int ok, void* user);

/* Runs values x seeds. Failed cells are recorded, never fatal. When out_dir
 * is non-NULL records, sweep_summary.csv and sweep.json are written. */
NS_API ns_status ns_sweep_run(const ns_config* base, const char* axis,
                              const char* const* values, size_t n_values,
                              const uint64_t* seeds, size_t n_seeds, int jobs,
                              const char* out_dir, ns_progress_fn progress,
                              void* user, ns_sweep** out);
NS_API void ns_sweep_free(ns_sweep* s);
NS_API ns_status ns_sweep_to_json(const ns_sweep* s, char** out);

/* ---- closed forms and synthetic oracles ---- */
NS_API ns_status ns_predict_escape(double gamma, double v_mem, double v_post,
                                   double* out);
NS_API ns_status ns_escape_bounds(double eta, double lambda, double v0,
                                  double v_post, double sigma, double* lower,
                                  double* upper);
/* v_series must hold steps + 1 values. */
NS_API ns_status ns_simulate_on_manifold(size_t dim, double v0, double eta,
                                         double lambda, double sigma,
                                         size_t steps, uint64_t seed,
                                         double* v_series);
NS_API ns_status ns_mean_on_manifold(size_t dim, double v0, double eta,
                                     double lambda, double sigma, size_t steps,
                                     size_t n_seeds, uint64_t seed,
                                     double* mean_series);
NS_API ns_status ns_closed_form_mean_v(uint64_t t, double v0, double eta,
                                       double lambda, double sigma,
                                       double* out);
NS_API ns_status ns_detection_bounds(double delta_min, double m_bound, int p,
                                     double delta, double* gamma,
                                     double* lower, double* upper);
/* law: "constant", "bernoulli-scaled" or "clipped-gaussian". */
NS_API ns_status ns_simulate_detection(double delta_min, double m_bound, int p,
                                       double delta, const char* law, int n_mc,
                                       uint64_t seed, double* mean_tau,
                                       double* stderr_tau);

typedef struct ns_fit {
  double a;
  double rho;
  double c;
  double r2;
  double gamma_fit;
} ns_fit;

NS_API ns_status ns_fit_exponential(const double* t, const double* v, size_t n,
                                    ns_fit* out);

/* ---- record directories ---- */
NS_API ns_status ns_spectral_run(const char* run_dir, const char* run_id,
                                 const char* out_dir, int* n_written);
NS_API ns_status ns_analyze_dir(const char* in_dir, char** json_out);
NS_API ns_status ns_report(const char* in_dir, const char* out_dir,
                           int* n_sources);

#ifdef __cplusplus
}
#endif

#endif /* NORMSEP_NORMSEP_H_ */
