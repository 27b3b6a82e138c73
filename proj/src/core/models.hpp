// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Datasets for modular arithmetic and sparse parity, and a two-layer MLP
// with hand-derived gradients whose parameters live in one flat buffer.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace normsep::models {

enum class ModOp { kAdd, kMul };

const char* to_string(ModOp op) noexcept;
ModOp parse_mod_op(const std::string& s);

bool is_prime(int n) noexcept;
int mod_label(int a, int b, int p, ModOp op) noexcept;

struct ModularExample {
  int a = 0;
  int b = 0;
  int label = 0;
  friend bool operator==(const ModularExample&,
                         const ModularExample&) = default;
};

struct ModularDataset {
  int p = 0;
  ModOp op = ModOp::kAdd;
  double train_frac = 0.0;
  std::uint64_t seed = 0;
  std::vector<ModularExample> train;
  std::vector<ModularExample> val;
};

// Uniform random partition of all p^2 pairs. |train| = floor(frac*p^2 + 0.5).
ModularDataset gen_modular_dataset(int p, ModOp op, double train_frac,
                                   std::uint64_t seed);

struct ParityExample {
  std::uint64_t bits = 0;  // bit i is input coordinate i
  int label = 0;
};

struct ParityDataset {
  int n = 0;
  std::array<int, 3> support{};
  std::uint64_t seed = 0;
  std::vector<ParityExample> train;
  std::vector<ParityExample> val;
};

int parity_label(std::uint64_t bits, const std::array<int, 3>& support) noexcept;

// Distinct bitvectors, seed-deterministic 3-subset support. n in [4, 64].
ParityDataset gen_parity_dataset(int n, std::size_t num_train,
                                 std::size_t num_val, std::uint64_t seed);

// `a,b,label,split` and `bits,label,split` (bits as a 0/1 string, index 0
// first).
void write_dataset_csv(const ModularDataset& ds, std::ostream& out);
void write_dataset_csv(const ParityDataset& ds, std::ostream& out);

enum class Activation { kRelu, kQuadratic };

const char* to_string(Activation a) noexcept;
Activation parse_activation(const std::string& s);

// vocab > 0: modular task, two embedding tables of d_e x vocab, input width
// 2*d_e. vocab == 0: parity task, raw +-1 inputs of width n_in.
struct MlpShape {
  int vocab = 0;
  int d_e = 0;
  int n_in = 0;
  int hidden = 0;
  int n_out = 0;
  Activation activation = Activation::kQuadratic;

  int input_width() const noexcept { return vocab > 0 ? 2 * d_e : n_in; }
  std::size_t param_count() const noexcept;
  void validate() const;
  friend bool operator==(const MlpShape&, const MlpShape&) = default;
};

// One batch of inputs with integer targets. Modular batches fill a/b,
// parity batches fill bits.
struct Batch {
  std::vector<int> a;
  std::vector<int> b;
  std::vector<std::uint64_t> bits;
  std::vector<int> target;

  std::size_t size() const noexcept { return target.size(); }
};

Batch make_batch(const std::vector<ModularExample>& examples);
Batch make_batch(const std::vector<ParityExample>& examples);
// Subset of `full` at `rows`.
Batch select_rows(const Batch& full, std::span<const std::size_t> rows);

class MlpModel {
 public:
  using Mat = Eigen::Map<Eigen::MatrixXd>;
  using CMat = Eigen::Map<const Eigen::MatrixXd>;
  using Vec = Eigen::Map<Eigen::VectorXd>;
  using CVec = Eigen::Map<const Eigen::VectorXd>;

  // Zero-initialised.
  explicit MlpModel(const MlpShape& shape);

  // Gaussian init with std 1/sqrt(fan_in) for w1 and w2, std `embed_scale`
  // for the embedding tables, zero biases.
  static MlpModel init(const MlpShape& shape, std::uint64_t seed,
                       double embed_scale = 1.0);

  MlpModel(const MlpModel& other);
  MlpModel& operator=(const MlpModel& other);
  MlpModel(MlpModel&&) = default;
  MlpModel& operator=(MlpModel&&) = default;

  const MlpShape& shape() const noexcept { return shape_; }
  std::size_t param_count() const noexcept { return params_.size(); }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  std::vector<double> flatten() const { return params_; }
  void unflatten(std::span<const double> flat);

  double squared_norm() const noexcept;

  // Views into the flat buffer. Layout: embed_a, embed_b, w1, b1, w2, b2,
  // each column-major.
  CMat embed_a() const;
  CMat embed_b() const;
  CMat w1() const;
  CVec b1() const;
  CMat w2() const;
  CVec b2() const;
  Mat embed_a();
  Mat embed_b();
  Mat w1();
  Vec b1();
  Mat w2();
  Vec b2();

  struct Offsets {
    std::size_t embed_a, embed_b, w1, b1, w2, b2, end;
  };
  const Offsets& offsets() const noexcept { return off_; }

 private:
  void compute_offsets();

  MlpShape shape_;
  Offsets off_{};
  std::vector<double> params_;
};

struct ForwardCache {
  Eigen::MatrixXd input;   // input_width x B
  Eigen::MatrixXd pre;     // hidden x B
  Eigen::MatrixXd act;     // hidden x B
  Eigen::MatrixXd logits;  // n_out x B
};

ForwardCache forward(const MlpModel& model, const Batch& batch);
// Same, reusing the storage already held by cache.
void forward_into(const MlpModel& model, const Batch& batch,
                  ForwardCache& cache);

struct LossAcc {
  double loss = 0.0;
  double acc = 0.0;
};

// Mean cross-entropy and accuracy. A prediction is correct only when the
// target logit strictly exceeds every other logit.
LossAcc loss_and_accuracy(const Eigen::MatrixXd& logits,
                          std::span<const int> targets);

struct Gradient {
  std::vector<double> grad;
  double loss = 0.0;
  double acc = 0.0;
};

// Gradient of the mean cross-entropy. Weight decay is not included.
Gradient backward(const MlpModel& model, const ForwardCache& cache,
                  const Batch& batch);

// Scratch buffers for backward_into.
struct BackwardScratch {
  Eigen::MatrixXd dz;
  Eigen::MatrixXd dh;
  Eigen::MatrixXd dx;
};

// Same as backward, reusing the storage of out and scratch.
void backward_into(const MlpModel& model, const ForwardCache& cache,
                   const Batch& batch, Gradient& out, BackwardScratch& scratch);

LossAcc evaluate(const MlpModel& model, const Batch& batch);

// Max relative error between backward() and central differences. Checks
// every coordinate when param_count <= max_coords, otherwise a
// seed-deterministic sample of max_coords coordinates.
double grad_check(const MlpModel& model, const Batch& batch, double fd_step,
                  std::size_t max_coords = 10000, std::uint64_t seed = 0);

// Logits z_c(a,b) for all a, b in Z_p, laid out [(a*p + b)*p + c].
std::vector<double> logit_grid(const MlpModel& model);

}  // namespace normsep::models
