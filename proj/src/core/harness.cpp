// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "core/dynamics.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/spectral.hpp"

namespace normsep::harness {

namespace {

struct Data {
  models::Batch train;
  models::Batch val;
};

Data make_data(const ExperimentConfig& c) {
  const std::uint64_t data_seed = derive_seed(c.seed, 1);
  Data d;
  if (c.is_modular()) {
    const auto op =
        c.task == Task::kModAdd ? models::ModOp::kAdd : models::ModOp::kMul;
    const auto ds = models::gen_modular_dataset(c.p, op, c.train_frac, data_seed);
    require(!ds.train.empty() && !ds.val.empty(), ErrorCode::kInvalidArgument,
            "run_training: train_frac leaves an empty split");
    d.train = models::make_batch(ds.train);
    d.val = models::make_batch(ds.val);
  } else {
    const auto ds = models::gen_parity_dataset(c.n, c.num_train, c.num_val,
                                               data_seed);
    d.train = models::make_batch(ds.train);
    d.val = models::make_batch(ds.val);
  }
  return d;
}

std::size_t effective_batch(const ExperimentConfig& c, std::size_t n_train) {
  if (c.batch_size == 0) return n_train <= 512 ? n_train : 512;
  return std::min<std::size_t>(c.batch_size, n_train);
}

// Cumulative excess validation loss after t_mem, rectangle rule across the
// logging gaps, against ln(p_out / delta).
std::optional<long> detect_tau(const RunRecord& r) {
  if (!r.t_mem || r.trajectory.empty()) return std::nullopt;
  const auto& tr = r.trajectory;
  const std::size_t w =
      std::min<std::size_t>(static_cast<std::size_t>(r.config.tau_window),
                            tr.size());
  double post = 0.0;
  for (std::size_t i = tr.size() - w; i < tr.size(); ++i) post += tr[i].val_loss;
  post /= double(w);
  const double thresh =
      std::log(double(r.config.n_out()) / r.config.delta);
  double acc = 0.0;
  for (std::size_t i = 1; i < tr.size(); ++i) {
    if (tr[i].step <= *r.t_mem) continue;
    acc += (tr[i].val_loss - post) * double(tr[i].step - tr[i - 1].step);
    if (acc >= thresh) return tr[i].step;
  }
  return std::nullopt;
}

}  // namespace

double RunRecord::log_norm_ratio() const {
  if (!v_mem) return 0.0;
  if (grokked && v_post_at_grok) return std::log(*v_mem / *v_post_at_grok);
  return std::log(*v_mem / v_final);
}

double RunRecord::norm_retention() const {
  return v_init > 0.0 ? v_final / v_init : 0.0;
}

RunRecord run_training(const ExperimentConfig& config,
                       const CheckpointSink& sink) {
  config.validate();
  require(config.spectral_every == 0 || config.is_modular(),
          ErrorCode::kInvalidArgument,
          "config: spectral logging needs a modular task");
  require(config.spectral_every % config.eval_every == 0,
          ErrorCode::kInvalidArgument,
          "config: spectral_every must be a multiple of eval_every");

  RunRecord rec;
  rec.config = config;
  const Data data = make_data(config);
  models::MlpModel model = models::MlpModel::init(
      config.model_shape(), derive_seed(config.seed, 2), config.embed_scale);
  const std::size_t n_train = data.train.size();
  const std::size_t bs = effective_batch(config, n_train);
  const bool full_batch = bs == n_train;
  Rng batch_rng(derive_seed(config.seed, 3));
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  const std::size_t dim = model.param_count();
  auto adam = dynamics::AdamWState::fresh(dim, config.beta1, config.beta2,
                                          config.epsilon);
  const double sgd_decay = config.wd_convention == WdConvention::kWEqLambda
                               ? config.lambda
                               : 2.0 * config.lambda;

  std::vector<std::pair<long, spectral::SpectrumReport>> spectra;
  auto log_point = [&](long step) {
    TrajectoryPoint pt;
    pt.step = step;
    const auto tr = models::evaluate(model, data.train);
    const auto va = models::evaluate(model, data.val);
    pt.train_loss = tr.loss;
    pt.train_acc = tr.acc;
    pt.val_loss = va.loss;
    pt.val_acc = va.acc;
    pt.v_sq_norm = model.squared_norm();
    require(pt.v_sq_norm <= dynamics::kDivergenceLimit, ErrorCode::kDiverged,
            "run_training: squared norm exceeded divergence limit at step " +
                std::to_string(step));
    rec.trajectory.push_back(pt);
    if (!rec.t_mem && pt.train_acc >= config.acc_threshold) rec.t_mem = step;
    if (!rec.t_grok && pt.val_acc >= config.acc_threshold) rec.t_grok = step;
    if (config.spectral_every > 0 && step % config.spectral_every == 0) {
      spectra.emplace_back(step, spectral::model_spectrum(model));
    }
  };

  models::ForwardCache fwd;
  models::BackwardScratch scratch;
  models::Gradient g;
  long step = 0;
  for (;; ++step) {
    if (step % config.eval_every == 0) log_point(step);
    if (sink && config.checkpoint_every > 0 &&
        step % config.checkpoint_every == 0) {
      sink(step, model);
    }
    if (rec.t_grok && step >= *rec.t_grok + config.post_grok_steps) break;
    if (step >= config.max_steps) break;

    if (full_batch) {
      models::forward_into(model, data.train, fwd);
      models::backward_into(model, fwd, data.train, g, scratch);
    } else {
      for (std::size_t i = 0; i < bs; ++i) {
        std::swap(order[i], order[i + batch_rng.below(n_train - i)]);
      }
      const auto mb = models::select_rows(
          data.train, std::span<const std::size_t>(order.data(), bs));
      models::forward_into(model, mb, fwd);
      models::backward_into(model, fwd, mb, g, scratch);
    }
    if (config.optimizer == Optimizer::kAdamW) {
      dynamics::adamw_update_inplace(model.params(), g.grad, adam, config.eta,
                                     config.lambda);
    } else {
      dynamics::sgd_update_inplace(model.params(), g.grad, config.eta,
                                   sgd_decay);
      for (double x : model.params()) {
        require(std::isfinite(x), ErrorCode::kNonFinite,
                "run_training: non-finite parameter after SGD step " +
                    std::to_string(step));
      }
    }
  }
  if (rec.trajectory.back().step != step) log_point(step);

  const auto& tr = rec.trajectory;
  auto v_at = [&](long s) {
    for (const auto& p : tr) {
      if (p.step == s) return p.v_sq_norm;
    }
    fail(ErrorCode::kInternal, "run_training: step not logged");
  };
  rec.v_init = tr.front().v_sq_norm;
  rec.v_final = tr.back().v_sq_norm;
  if (rec.t_mem) rec.v_mem = v_at(*rec.t_mem);
  if (rec.t_grok) rec.v_post_at_grok = v_at(*rec.t_grok);
  rec.grokked = rec.t_grok.has_value();
  if (rec.t_mem && rec.t_grok) rec.delay = *rec.t_grok - *rec.t_mem;

  if (rec.t_mem && rec.t_grok && *rec.t_grok > *rec.t_mem) {
    std::vector<double> ts, vs;
    for (const auto& p : tr) {
      if (p.step >= *rec.t_mem && p.step <= *rec.t_grok) {
        ts.push_back(double(p.step));
        vs.push_back(p.v_sq_norm);
      }
    }
    if (ts.size() >= 8) {
      try {
        rec.fit = analysis::fit_exponential(ts, vs);
      } catch (const Error&) {
        rec.fit.reset();
      }
    }
  }
  rec.tau_detect = detect_tau(rec);

  if (!spectra.empty()) {
    std::vector<spectral::SpectrumReport> basis;
    if (rec.t_grok) {
      for (const auto& [s, sp] : spectra) {
        if (s >= *rec.t_grok) basis.push_back(sp);
      }
    }
    if (basis.empty()) basis.push_back(spectra.back().second);
    rec.support = spectral::select_support(basis, config.support_coverage);
    std::size_t j = 0;
    for (auto& [s, sp] : spectra) {
      sp.set_support(rec.support);
      while (j < rec.trajectory.size() && rec.trajectory[j].step < s) ++j;
      if (j < rec.trajectory.size() && rec.trajectory[j].step == s) {
        rec.trajectory[j].r_value = sp.r_value;
      }
    }
  }
  return rec;
}

void apply_axis(ExperimentConfig& c, const std::string& axis,
                const std::string& value) {
  if (axis == "lambda") {
    apply_override(c, "optimizer.lambda", value);
  } else if (axis == "eta") {
    apply_override(c, "optimizer.eta", value);
  } else if (axis == "p") {
    apply_override(c, "task.p", value);
  } else if (axis == "task") {
    apply_override(c, "task.name", value);
  } else if (axis == "optimizer") {
    if (value == "adamw" || value == "sgd") {
      apply_override(c, "optimizer.name", value);
    } else if (value == "sgd_w_eq_lambda" || value == "sgd_w_eq_2lambda") {
      apply_override(c, "optimizer.name", "sgd");
      apply_override(c, "optimizer.wd_convention", value.substr(4));
    } else {
      fail(ErrorCode::kInvalidArgument, "unknown optimizer axis value: " + value);
    }
  } else if (axis == "eta_x_lambda") {
    const auto colon = value.find(':');
    require(colon != std::string::npos, ErrorCode::kInvalidArgument,
            "eta_x_lambda values look like eta:lambda, got " + value);
    apply_override(c, "optimizer.eta", value.substr(0, colon));
    apply_override(c, "optimizer.lambda", value.substr(colon + 1));
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown sweep axis: " + axis);
  }
}

namespace {

std::string run_id_for(const std::string& axis, const std::string& value,
                       std::uint64_t seed) {
  std::string v = value;
  for (char& ch : v) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' ||
          ch == '-' || ch == '_')) {
      ch = '_';
    }
  }
  return axis + "_" + v + "_s" + std::to_string(seed);
}

void add_regression(SweepResult& out, const std::string& name,
                    const std::vector<double>& x, const std::vector<double>& y,
                    std::uint64_t seed) {
  if (x.size() < 3) return;
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) {
    return;
  }
  auto r = analysis::ols_fit(x, y);
  if (x.size() >= 5) {
    const auto ci = analysis::bootstrap_slope_ci(x, y, 2000, 0.05, seed);
    r.ci_low = ci.low;
    r.ci_high = ci.high;
  }
  out.regressions[name] = r;
}

}  // namespace

SweepResult summarize(std::string axis, std::vector<RunRecord> records) {
  SweepResult out;
  out.axis = std::move(axis);
  out.records = std::move(records);
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    const auto& v = out.records[i].axis_value;
    auto it = std::find_if(out.points.begin(), out.points.end(),
                           [&](const SweepPoint& p) { return p.axis_value == v; });
    if (it == out.points.end()) {
      out.points.push_back({});
      out.points.back().axis_value = v;
      it = std::prev(out.points.end());
    }
    it->runs.push_back(i);
  }

  const analysis::RegimeThresholds th =
      out.records.empty() ? analysis::RegimeThresholds{}
                          : out.records.front().config.regime;
  for (auto& pt : out.points) {
    double grok = 0.0, lr = 0.0, ret = 0.0, dsum = 0.0;
    std::size_t n = 0, nd = 0;
    for (std::size_t i : pt.runs) {
      const auto& r = out.records[i];
      if (r.failed) continue;
      ++n;
      grok += r.grokked ? 1.0 : 0.0;
      lr += r.log_norm_ratio();
      ret += r.norm_retention();
      if (r.delay) {
        dsum += double(*r.delay);
        ++nd;
      }
    }
    if (n > 0) {
      pt.grok_fraction = grok / double(n);
      pt.mean_log_norm_ratio = lr / double(n);
      pt.mean_norm_retention = ret / double(n);
    }
    if (nd > 0) pt.mean_delay = dsum / double(nd);
    pt.regime = analysis::classify_regime(
        {pt.grok_fraction, pt.mean_log_norm_ratio, pt.mean_norm_retention}, th);
    for (std::size_t i : pt.runs) {
      out.records[i].regime = analysis::to_string(pt.regime.label);
    }
  }

  std::vector<double> x, y;
  const std::uint64_t bseed = 0x5eed;
  if (out.axis == "lambda") {
    for (const auto& pt : out.points) {
      // One point per lambda value: the seed-averaged delay.
      if (pt.regime.label != analysis::Regime::kII || !pt.mean_delay) continue;
      const double lam = out.records[pt.runs.front()].config.lambda;
      if (lam > 0.0) {
        x.push_back(1.0 / lam);
        y.push_back(*pt.mean_delay);
      }
    }
    add_regression(out, "delay_vs_inv_lambda", x, y, bseed);
  } else if (out.axis == "eta") {
    for (const auto& r : out.records) {
      if (r.t_grok) {
        x.push_back(1.0 / r.config.eta);
        y.push_back(double(*r.t_grok));
      }
    }
    add_regression(out, "t_grok_vs_inv_eta", x, y, bseed);
  } else if (out.axis == "eta_x_lambda") {
    for (const auto& r : out.records) {
      if (r.delay && r.config.lambda > 0.0) {
        x.push_back(1.0 / (r.config.eta * r.config.lambda));
        y.push_back(double(*r.delay));
      }
    }
    add_regression(out, "delay_vs_inv_eta_lambda", x, y, bseed);
  }

  // Delay against the norm ratio and the delay-law prediction, pooled.
  std::vector<double> lx, ly, pred, meas;
  for (const auto& r : out.records) {
    if (!r.delay || !r.v_mem || !r.v_post_at_grok) continue;
    lx.push_back(std::log(*r.v_mem / *r.v_post_at_grok));
    ly.push_back(double(*r.delay));
    if (r.fit) {
      pred.push_back(analysis::predict_escape(r.fit->gamma_fit, *r.v_mem,
                                              *r.v_post_at_grok));
      meas.push_back(double(*r.delay));
    }
  }
  if (out.axis == "p") add_regression(out, "delay_vs_log_norm_ratio", lx, ly, bseed);
  if (pred.size() >= 3) {
    try {
      out.statistics["pearson_delay_vs_prediction"] = analysis::pearson_r(meas, pred);
    } catch (const Error&) {
    }
  }
  return out;
}

SweepResult run_sweep(const ExperimentConfig& base, const std::string& axis,
                      const std::vector<std::string>& values,
                      const std::vector<std::uint64_t>& seeds, int jobs,
                      const std::function<void(const RunRecord&)>& on_done) {
  require(!values.empty(), ErrorCode::kInvalidArgument,
          "run_sweep: values must be nonempty");
  require(!seeds.empty(), ErrorCode::kInvalidArgument,
          "run_sweep: seeds must be nonempty");
  require(jobs >= 1, ErrorCode::kInvalidArgument, "run_sweep: jobs must be >= 1");

  struct Cell {
    std::string value;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& v : values) {
    ExperimentConfig probe = base;
    apply_axis(probe, axis, v);  // reject bad values before any run starts
    for (auto s : seeds) cells.push_back({v, s});
  }

  std::vector<RunRecord> records(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex done_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const auto& cell = cells[i];
      ExperimentConfig cfg = base;
      RunRecord rec;
      try {
        apply_axis(cfg, axis, cell.value);
        cfg.seed = cell.seed;
        rec = run_training(cfg);
      } catch (const std::exception& e) {
        rec = RunRecord{};
        rec.config = cfg;
        rec.failed = true;
        rec.error = e.what();
      }
      rec.axis = axis;
      rec.axis_value = cell.value;
      rec.run_id = run_id_for(axis, cell.value, cell.seed);
      records[i] = std::move(rec);
      if (on_done) {
        std::lock_guard<std::mutex> lock(done_mu);
        on_done(records[i]);
      }
    }
  };
  const int n_threads =
      std::min<int>(jobs, static_cast<int>(cells.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return summarize(axis, std::move(records));
}

GapData gap_regression_dataset(std::span<const RunRecord> records) {
  GapData out;
  bool any_r = false;
  for (const auto& r : records) {
    if (!r.t_grok) continue;
    std::optional<double> at_grok;
    for (const auto& p : r.trajectory) {
      if (p.step == *r.t_grok) at_grok = p.val_loss;
    }
    if (!at_grok) continue;
    for (const auto& p : r.trajectory) {
      if (!p.r_value) continue;
      any_r = true;
      if (p.step < *r.t_grok && *p.r_value > 0.03) {
        out.r.push_back(*p.r_value);
        out.gap.push_back(p.val_loss - *at_grok);
      }
    }
  }
  require(any_r, ErrorCode::kPrecondition,
          "gap_regression_dataset: no record with r_value logged");
  require(!out.r.empty(), ErrorCode::kPrecondition, "no pre-grok points");
  return out;
}

}  // namespace normsep::harness
