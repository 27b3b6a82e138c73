// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace normsep::models {

const char* to_string(ModOp op) noexcept {
  return op == ModOp::kAdd ? "add" : "mul";
}

ModOp parse_mod_op(const std::string& s) {
  if (s == "add") return ModOp::kAdd;
  if (s == "mul") return ModOp::kMul;
  fail(ErrorCode::kInvalidArgument, "unknown modular op: " + s);
}

bool is_prime(int n) noexcept {
  if (n < 2) return false;
  for (int d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

int mod_label(int a, int b, int p, ModOp op) noexcept {
  return op == ModOp::kAdd ? (a + b) % p : (a * b) % p;
}

ModularDataset gen_modular_dataset(int p, ModOp op, double train_frac,
                                   std::uint64_t seed) {
  require(p >= 2 && p <= 257, ErrorCode::kInvalidArgument,
          "gen_modular_dataset: p must lie in [2, 257]");
  require(is_prime(p), ErrorCode::kInvalidArgument,
          "gen_modular_dataset: p=" + std::to_string(p) + " is not prime");
  require(train_frac > 0.0 && train_frac <= 1.0, ErrorCode::kInvalidArgument,
          "gen_modular_dataset: train_frac must lie in (0, 1]");

  const std::size_t total = static_cast<std::size_t>(p) * p;
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x6d6f64));
  for (std::size_t i = total - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(i + 1)]);
  }
  const auto n_train = std::min<std::size_t>(
      total,
      static_cast<std::size_t>(std::floor(train_frac * double(total) + 0.5)));

  ModularDataset ds;
  ds.p = p;
  ds.op = op;
  ds.train_frac = train_frac;
  ds.seed = seed;
  ds.train.reserve(n_train);
  ds.val.reserve(total - n_train);
  for (std::size_t i = 0; i < total; ++i) {
    const int a = static_cast<int>(order[i] / p);
    const int b = static_cast<int>(order[i] % p);
    ModularExample ex{a, b, mod_label(a, b, p, op)};
    (i < n_train ? ds.train : ds.val).push_back(ex);
  }
  return ds;
}

int parity_label(std::uint64_t bits,
                 const std::array<int, 3>& support) noexcept {
  int x = 0;
  for (int i : support) x ^= static_cast<int>((bits >> i) & 1U);
  return x;
}

ParityDataset gen_parity_dataset(int n, std::size_t num_train,
                                 std::size_t num_val, std::uint64_t seed) {
  require(n >= 4 && n <= 64, ErrorCode::kInvalidArgument,
          "gen_parity_dataset: n must lie in [4, 64]");
  const std::size_t want = num_train + num_val;
  require(want >= 1, ErrorCode::kInvalidArgument,
          "gen_parity_dataset: need at least one example");
  if (n < 63) {
    require(want <= (std::uint64_t{1} << n), ErrorCode::kInfeasible,
            "gen_parity_dataset: insufficient distinct examples for n=" +
                std::to_string(n));
  }

  ParityDataset ds;
  ds.n = n;
  ds.seed = seed;
  Rng rng(derive_seed(seed, 0x706172));
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < 3; ++i) {
    std::swap(idx[i], idx[i + rng.below(n - i)]);
  }
  ds.support = {idx[0], idx[1], idx[2]};
  std::sort(ds.support.begin(), ds.support.end());

  const std::uint64_t mask =
      n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  std::vector<std::uint64_t> samples;
  samples.reserve(want);
  if (n <= 20) {
    // Partial Fisher-Yates over the full cube.
    std::vector<std::uint32_t> cube(std::size_t{1} << n);
    std::iota(cube.begin(), cube.end(), 0U);
    for (std::size_t i = 0; i < want; ++i) {
      std::swap(cube[i], cube[i + rng.below(cube.size() - i)]);
      samples.push_back(cube[i]);
    }
  } else {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(want * 2);
    while (samples.size() < want) {
      const std::uint64_t x = rng() & mask;
      if (seen.insert(x).second) samples.push_back(x);
    }
  }
  for (std::size_t i = 0; i < want; ++i) {
    ParityExample ex{samples[i], parity_label(samples[i], ds.support)};
    (i < num_train ? ds.train : ds.val).push_back(ex);
  }
  return ds;
}

void write_dataset_csv(const ModularDataset& ds, std::ostream& out) {
  out << "a,b,label,split\n";
  for (const auto& e : ds.train)
    out << e.a << ',' << e.b << ',' << e.label << ",train\n";
  for (const auto& e : ds.val)
    out << e.a << ',' << e.b << ',' << e.label << ",val\n";
}

void write_dataset_csv(const ParityDataset& ds, std::ostream& out) {
  auto bits = [&](std::uint64_t x) {
    std::string s(ds.n, '0');
    for (int i = 0; i < ds.n; ++i) {
      if ((x >> i) & 1U) s[i] = '1';
    }
    return s;
  };
  out << "bits,label,split\n";
  for (const auto& e : ds.train)
    out << bits(e.bits) << ',' << e.label << ",train\n";
  for (const auto& e : ds.val) out << bits(e.bits) << ',' << e.label << ",val\n";
}

const char* to_string(Activation a) noexcept {
  return a == Activation::kRelu ? "relu" : "quadratic";
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "quadratic") return Activation::kQuadratic;
  fail(ErrorCode::kInvalidArgument, "unknown activation: " + s);
}

std::size_t MlpShape::param_count() const noexcept {
  const std::size_t emb =
      vocab > 0 ? 2 * std::size_t(d_e) * std::size_t(vocab) : 0;
  const std::size_t in = static_cast<std::size_t>(input_width());
  return emb + std::size_t(hidden) * in + hidden +
         std::size_t(n_out) * hidden + n_out;
}

void MlpShape::validate() const {
  require(vocab >= 0 && hidden >= 1 && n_out >= 2, ErrorCode::kInvalidArgument,
          "MlpShape: hidden >= 1 and n_out >= 2 required");
  if (vocab > 0) {
    require(d_e >= 1, ErrorCode::kInvalidArgument,
            "MlpShape: d_e >= 1 required with embeddings");
  } else {
    require(n_in >= 1 && n_in <= 64, ErrorCode::kInvalidArgument,
            "MlpShape: n_in must lie in [1, 64] without embeddings");
  }
}

Batch make_batch(const std::vector<ModularExample>& examples) {
  Batch b;
  b.a.reserve(examples.size());
  b.b.reserve(examples.size());
  b.target.reserve(examples.size());
  for (const auto& e : examples) {
    b.a.push_back(e.a);
    b.b.push_back(e.b);
    b.target.push_back(e.label);
  }
  return b;
}

Batch make_batch(const std::vector<ParityExample>& examples) {
  Batch b;
  b.bits.reserve(examples.size());
  b.target.reserve(examples.size());
  for (const auto& e : examples) {
    b.bits.push_back(e.bits);
    b.target.push_back(e.label);
  }
  return b;
}

Batch select_rows(const Batch& full, std::span<const std::size_t> rows) {
  Batch b;
  for (std::size_t r : rows) {
    require(r < full.size(), ErrorCode::kInvalidArgument,
            "select_rows: row out of range");
    if (!full.a.empty()) {
      b.a.push_back(full.a[r]);
      b.b.push_back(full.b[r]);
    }
    if (!full.bits.empty()) b.bits.push_back(full.bits[r]);
    b.target.push_back(full.target[r]);
  }
  return b;
}

MlpModel::MlpModel(const MlpShape& shape) : shape_(shape) {
  shape_.validate();
  compute_offsets();
  params_.assign(off_.end, 0.0);
}

MlpModel::MlpModel(const MlpModel& other)
    : shape_(other.shape_), off_(other.off_), params_(other.params_) {}

MlpModel& MlpModel::operator=(const MlpModel& other) {
  shape_ = other.shape_;
  off_ = other.off_;
  params_ = other.params_;
  return *this;
}

void MlpModel::compute_offsets() {
  const std::size_t emb =
      shape_.vocab > 0 ? std::size_t(shape_.d_e) * shape_.vocab : 0;
  const std::size_t h = shape_.hidden;
  const std::size_t in = shape_.input_width();
  off_.embed_a = 0;
  off_.embed_b = emb;
  off_.w1 = 2 * emb;
  off_.b1 = off_.w1 + h * in;
  off_.w2 = off_.b1 + h;
  off_.b2 = off_.w2 + std::size_t(shape_.n_out) * h;
  off_.end = off_.b2 + shape_.n_out;
}

MlpModel MlpModel::init(const MlpShape& shape, std::uint64_t seed,
                        double embed_scale) {
  require(embed_scale >= 0.0 && std::isfinite(embed_scale),
          ErrorCode::kInvalidArgument, "MlpModel::init: bad embed_scale");
  MlpModel m(shape);
  Rng rng(derive_seed(seed, 0x696e6974));
  auto fill = [&](std::size_t begin, std::size_t end, double std) {
    for (std::size_t i = begin; i < end; ++i) m.params_[i] = std * rng.normal();
  };
  fill(m.off_.embed_a, m.off_.embed_b, embed_scale);
  fill(m.off_.embed_b, m.off_.w1, embed_scale);
  fill(m.off_.w1, m.off_.b1, 1.0 / std::sqrt(double(shape.input_width())));
  fill(m.off_.w2, m.off_.b2, 1.0 / std::sqrt(double(shape.hidden)));
  return m;
}

void MlpModel::unflatten(std::span<const double> flat) {
  require(flat.size() == params_.size(), ErrorCode::kDimensionMismatch,
          "unflatten: expected " + std::to_string(params_.size()) +
              " values, got " + std::to_string(flat.size()));
  std::copy(flat.begin(), flat.end(), params_.begin());
}

double MlpModel::squared_norm() const noexcept {
  double s = 0.0;
  for (double x : params_) s += x * x;
  return s;
}

MlpModel::CMat MlpModel::embed_a() const {
  return CMat(params_.data() + off_.embed_a, shape_.d_e, shape_.vocab);
}
MlpModel::CMat MlpModel::embed_b() const {
  return CMat(params_.data() + off_.embed_b, shape_.d_e, shape_.vocab);
}
MlpModel::CMat MlpModel::w1() const {
  return CMat(params_.data() + off_.w1, shape_.hidden, shape_.input_width());
}
MlpModel::CVec MlpModel::b1() const {
  return CVec(params_.data() + off_.b1, shape_.hidden);
}
MlpModel::CMat MlpModel::w2() const {
  return CMat(params_.data() + off_.w2, shape_.n_out, shape_.hidden);
}
MlpModel::CVec MlpModel::b2() const {
  return CVec(params_.data() + off_.b2, shape_.n_out);
}
MlpModel::Mat MlpModel::embed_a() {
  return Mat(params_.data() + off_.embed_a, shape_.d_e, shape_.vocab);
}
MlpModel::Mat MlpModel::embed_b() {
  return Mat(params_.data() + off_.embed_b, shape_.d_e, shape_.vocab);
}
MlpModel::Mat MlpModel::w1() {
  return Mat(params_.data() + off_.w1, shape_.hidden, shape_.input_width());
}
MlpModel::Vec MlpModel::b1() {
  return Vec(params_.data() + off_.b1, shape_.hidden);
}
MlpModel::Mat MlpModel::w2() {
  return Mat(params_.data() + off_.w2, shape_.n_out, shape_.hidden);
}
MlpModel::Vec MlpModel::b2() {
  return Vec(params_.data() + off_.b2, shape_.n_out);
}

namespace {

void check_layer(const Eigen::MatrixXd& m, const char* layer) {
  if (!m.allFinite()) {
    fail(ErrorCode::kNonFinite,
         std::string("forward: non-finite activation in layer ") + layer);
  }
}

void build_input(const MlpModel& model, const Batch& batch,
                 Eigen::MatrixXd& x) {
  const MlpShape& s = model.shape();
  const auto n = static_cast<Eigen::Index>(batch.size());
  x.resize(s.input_width(), n);
  if (s.vocab > 0) {
    require(batch.a.size() == batch.size() && batch.b.size() == batch.size(),
            ErrorCode::kDimensionMismatch, "forward: modular batch malformed");
    const auto ea = model.embed_a();
    const auto eb = model.embed_b();
    for (Eigen::Index j = 0; j < n; ++j) {
      const int a = batch.a[j];
      const int b = batch.b[j];
      require(a >= 0 && a < s.vocab && b >= 0 && b < s.vocab,
              ErrorCode::kInvalidArgument, "forward: token out of range");
      x.col(j).head(s.d_e) = ea.col(a);
      x.col(j).tail(s.d_e) = eb.col(b);
    }
  } else {
    require(batch.bits.size() == batch.size(), ErrorCode::kDimensionMismatch,
            "forward: parity batch malformed");
    for (Eigen::Index j = 0; j < n; ++j) {
      const std::uint64_t bits = batch.bits[j];
      for (int i = 0; i < s.n_in; ++i) {
        x(i, j) = ((bits >> i) & 1U) ? 1.0 : -1.0;
      }
    }
  }
}

}  // namespace

ForwardCache forward(const MlpModel& model, const Batch& batch) {
  ForwardCache c;
  forward_into(model, batch, c);
  return c;
}

void forward_into(const MlpModel& model, const Batch& batch, ForwardCache& c) {
  require(batch.size() >= 1, ErrorCode::kInvalidArgument,
          "forward: empty batch");
  build_input(model, batch, c.input);
  c.pre.noalias() = model.w1() * c.input;
  c.pre.colwise() += model.b1();
  check_layer(c.pre, "hidden_pre");
  if (model.shape().activation == Activation::kQuadratic) {
    c.act = c.pre.array().square().matrix();
  } else {
    c.act = c.pre.cwiseMax(0.0);
  }
  check_layer(c.act, "hidden_act");
  c.logits.noalias() = model.w2() * c.act;
  c.logits.colwise() += model.b2();
  check_layer(c.logits, "logits");
}

LossAcc loss_and_accuracy(const Eigen::MatrixXd& logits,
                          std::span<const int> targets) {
  const auto n = logits.cols();
  require(static_cast<std::size_t>(n) == targets.size() && n >= 1,
          ErrorCode::kDimensionMismatch, "loss: targets/logits mismatch");
  double loss = 0.0;
  std::size_t correct = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto col = logits.col(j);
    const int y = targets[j];
    require(y >= 0 && y < logits.rows(), ErrorCode::kInvalidArgument,
            "loss: target out of range");
    const double mx = col.maxCoeff();
    const double lse = mx + std::log((col.array() - mx).exp().sum());
    loss += lse - col(y);
    bool ok = true;
    for (Eigen::Index c = 0; c < col.size() && ok; ++c) {
      if (c != y && !(col(c) < col(y))) ok = false;
    }
    if (ok) ++correct;
  }
  return {loss / double(n), double(correct) / double(n)};
}

Gradient backward(const MlpModel& model, const ForwardCache& cache,
                  const Batch& batch) {
  Gradient g;
  BackwardScratch scratch;
  backward_into(model, cache, batch, g, scratch);
  return g;
}

void backward_into(const MlpModel& model, const ForwardCache& cache,
                   const Batch& batch, Gradient& g, BackwardScratch& scratch) {
  const MlpShape& s = model.shape();
  const auto n = static_cast<Eigen::Index>(batch.size());
  require(cache.logits.cols() == n && cache.logits.rows() == s.n_out &&
              cache.pre.rows() == s.hidden,
          ErrorCode::kDimensionMismatch, "backward: cache does not match batch");

  const LossAcc la = loss_and_accuracy(cache.logits, batch.target);
  g.loss = la.loss;
  g.acc = la.acc;
  g.grad.assign(model.param_count(), 0.0);

  // dL/dlogits = (softmax - onehot) / n
  Eigen::MatrixXd& dz = scratch.dz;
  dz = cache.logits;
  for (Eigen::Index j = 0; j < n; ++j) {
    auto col = dz.col(j);
    const double mx = col.maxCoeff();
    col = (col.array() - mx).exp().matrix();
    col /= col.sum();
    col(batch.target[j]) -= 1.0;
  }
  dz /= double(n);

  const auto& off = model.offsets();
  double* gp = g.grad.data();
  Eigen::Map<Eigen::MatrixXd> gw2(gp + off.w2, s.n_out, s.hidden);
  Eigen::Map<Eigen::VectorXd> gb2(gp + off.b2, s.n_out);
  Eigen::Map<Eigen::MatrixXd> gw1(gp + off.w1, s.hidden, s.input_width());
  Eigen::Map<Eigen::VectorXd> gb1(gp + off.b1, s.hidden);

  gw2.noalias() = dz * cache.act.transpose();
  gb2 = dz.rowwise().sum();
  Eigen::MatrixXd& dh = scratch.dh;
  dh.noalias() = model.w2().transpose() * dz;
  if (s.activation == Activation::kQuadratic) {
    dh.array() *= 2.0 * cache.pre.array();
  } else {
    dh.array() *= (cache.pre.array() > 0.0).cast<double>();
  }
  gw1.noalias() = dh * cache.input.transpose();
  gb1 = dh.rowwise().sum();

  if (s.vocab > 0) {
    Eigen::MatrixXd& dx = scratch.dx;
    dx.noalias() = model.w1().transpose() * dh;
    Eigen::Map<Eigen::MatrixXd> gea(gp + off.embed_a, s.d_e, s.vocab);
    Eigen::Map<Eigen::MatrixXd> geb(gp + off.embed_b, s.d_e, s.vocab);
    for (Eigen::Index j = 0; j < n; ++j) {
      gea.col(batch.a[j]) += dx.col(j).head(s.d_e);
      geb.col(batch.b[j]) += dx.col(j).tail(s.d_e);
    }
  }
}

LossAcc evaluate(const MlpModel& model, const Batch& batch) {
  const ForwardCache c = forward(model, batch);
  return loss_and_accuracy(c.logits, batch.target);
}

double grad_check(const MlpModel& model, const Batch& batch, double fd_step,
                  std::size_t max_coords, std::uint64_t seed) {
  require(fd_step > 0.0, ErrorCode::kInvalidArgument,
          "grad_check: fd_step must be > 0");
  require(batch.size() >= 1, ErrorCode::kInvalidArgument,
          "grad_check: empty batch");
  const Gradient g = backward(model, forward(model, batch), batch);

  std::vector<std::size_t> coords(model.param_count());
  std::iota(coords.begin(), coords.end(), 0);
  if (coords.size() > max_coords) {
    Rng rng(seed);
    for (std::size_t i = 0; i < max_coords; ++i) {
      std::swap(coords[i], coords[i + rng.below(coords.size() - i)]);
    }
    coords.resize(max_coords);
  }

  MlpModel probe = model;
  double worst = 0.0;
  for (std::size_t i : coords) {
    const double x0 = probe.params()[i];
    probe.params()[i] = x0 + fd_step;
    const double lp = evaluate(probe, batch).loss;
    probe.params()[i] = x0 - fd_step;
    const double lm = evaluate(probe, batch).loss;
    probe.params()[i] = x0;
    const double numeric = (lp - lm) / (2.0 * fd_step);
    const double analytic = g.grad[i];
    const double denom =
        std::max({std::abs(analytic), std::abs(numeric), 1e-12});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  }
  return worst;
}

std::vector<double> logit_grid(const MlpModel& model) {
  const int p = model.shape().vocab;
  require(p >= 2 && model.shape().n_out == p, ErrorCode::kInvalidArgument,
          "logit_grid: modular model with n_out == vocab required");
  Batch b;
  for (int a = 0; a < p; ++a) {
    for (int c = 0; c < p; ++c) {
      b.a.push_back(a);
      b.b.push_back(c);
      b.target.push_back(0);
    }
  }
  const ForwardCache cache = forward(model, b);
  std::vector<double> out(std::size_t(p) * p * p);
  std::copy(cache.logits.data(), cache.logits.data() + out.size(), out.begin());
  return out;
}

}  // namespace normsep::models
