// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "core/error.hpp"
#include "core/models.hpp"
#include "core/rng.hpp"

namespace normsep::models {
namespace {

MlpShape modular_shape(int p, int d_e, int h, Activation act) {
  MlpShape s;
  s.vocab = p;
  s.d_e = d_e;
  s.hidden = h;
  s.n_out = p;
  s.activation = act;
  return s;
}

MlpShape parity_shape(int n, int h, Activation act) {
  MlpShape s;
  s.n_in = n;
  s.hidden = h;
  s.n_out = 2;
  s.activation = act;
  return s;
}

Batch modular_batch(int p, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ModularExample> ex;
  for (std::size_t i = 0; i < n; ++i) {
    const int a = static_cast<int>(rng.below(p));
    const int b = static_cast<int>(rng.below(p));
    ex.push_back({a, b, mod_label(a, b, p, ModOp::kAdd)});
  }
  return make_batch(ex);
}

TEST(ModularDataset, CountsAndRounding) {
  const auto ds = gen_modular_dataset(5, ModOp::kAdd, 0.5, 3);
  EXPECT_EQ(ds.train.size(), 13u);
  EXPECT_EQ(ds.val.size(), 12u);
  std::set<std::pair<int, int>> seen;
  for (const auto* part : {&ds.train, &ds.val}) {
    for (const auto& e : *part) {
      EXPECT_TRUE(seen.insert({e.a, e.b}).second);
      EXPECT_EQ(e.label, (e.a + e.b) % 5);
    }
  }
  EXPECT_EQ(seen.size(), 25u);
}

TEST(ModularDataset, Labels) {
  EXPECT_EQ(mod_label(2, 3, 5, ModOp::kMul), 1);
  EXPECT_EQ(mod_label(4, 4, 5, ModOp::kAdd), 3);
  const auto ds = gen_modular_dataset(7, ModOp::kMul, 0.6, 1);
  for (const auto& e : ds.train) EXPECT_EQ(e.label, (e.a * e.b) % 7);
}

TEST(ModularDataset, DeterministicSerialization) {
  std::ostringstream a, b, c;
  write_dataset_csv(gen_modular_dataset(11, ModOp::kAdd, 0.3, 42), a);
  write_dataset_csv(gen_modular_dataset(11, ModOp::kAdd, 0.3, 42), b);
  write_dataset_csv(gen_modular_dataset(11, ModOp::kAdd, 0.3, 43), c);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
  EXPECT_EQ(a.str().substr(0, 16), "a,b,label,split\n");
}

TEST(ModularDataset, RejectsNonPrime) {
  EXPECT_THROW(gen_modular_dataset(9, ModOp::kAdd, 0.5, 0), Error);
  EXPECT_THROW(gen_modular_dataset(7, ModOp::kAdd, 0.0, 0), Error);
  EXPECT_THROW(gen_modular_dataset(263, ModOp::kAdd, 0.5, 0), Error);
}

TEST(ParityDataset, LabelsAndDistinctness) {
  EXPECT_EQ(parity_label(0b101, {0, 1, 2}), 0);
  EXPECT_EQ(parity_label(0, {3, 7, 9}), 0);
  EXPECT_EQ(parity_label(0b1000, {3, 7, 9}), 1);
  const auto ds = gen_parity_dataset(20, 4096, 4096, 5);
  std::set<std::uint64_t> bits;
  for (const auto* part : {&ds.train, &ds.val}) {
    for (const auto& e : *part) {
      bits.insert(e.bits);
      EXPECT_EQ(e.label, parity_label(e.bits, ds.support));
      EXPECT_LT(e.bits, 1ull << 20);
    }
  }
  EXPECT_EQ(bits.size(), 8192u);
  EXPECT_TRUE(std::is_sorted(ds.support.begin(), ds.support.end()));
}

TEST(ParityDataset, LargeNAndInsufficient) {
  const auto ds = gen_parity_dataset(40, 200, 100, 2);
  std::set<std::uint64_t> bits;
  for (const auto& e : ds.train) bits.insert(e.bits);
  for (const auto& e : ds.val) bits.insert(e.bits);
  EXPECT_EQ(bits.size(), 300u);
  EXPECT_THROW(gen_parity_dataset(4, 10, 10, 0), Error);
}

TEST(Mlp, FlattenRoundTripAndNorm) {
  auto m = MlpModel::init(modular_shape(7, 4, 6, Activation::kQuadratic), 3);
  const auto flat = m.flatten();
  EXPECT_EQ(flat.size(), m.param_count());
  EXPECT_EQ(m.param_count(), 2u * 4 * 7 + 6 * 8 + 6 + 7 * 6 + 7);
  MlpModel other(m.shape());
  other.unflatten(flat);
  EXPECT_EQ(other.flatten(), flat);
  double v = 0;
  for (double x : flat) v += x * x;
  EXPECT_DOUBLE_EQ(m.squared_norm(), v);
  double v2 = m.embed_a().squaredNorm() + m.embed_b().squaredNorm() +
              m.w1().squaredNorm() + m.b1().squaredNorm() +
              m.w2().squaredNorm() + m.b2().squaredNorm();
  EXPECT_NEAR(m.squared_norm(), v2, 1e-12 * v);
  EXPECT_THROW(other.unflatten(std::vector<double>(3)), Error);
}

TEST(Mlp, ZeroModelUniformLoss) {
  MlpModel m(modular_shape(5, 3, 4, Activation::kQuadratic));
  const auto b = modular_batch(5, 6, 1);
  const auto c = forward(m, b);
  EXPECT_EQ(c.logits.cwiseAbs().maxCoeff(), 0.0);
  const auto g = backward(m, c, b);
  EXPECT_NEAR(g.loss, std::log(5.0), 1e-15);
  // All-tie logits: target never strictly wins.
  EXPECT_EQ(g.acc, 0.0);
}

TEST(Mlp, LargeMarginLossVanishes) {
  Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(4, 2);
  logits(1, 0) = 30.0;
  logits(3, 1) = 30.0;
  const std::vector<int> t{1, 3};
  const auto la = loss_and_accuracy(logits, t);
  EXPECT_LT(la.loss, 1e-12);
  EXPECT_EQ(la.acc, 1.0);
}

TEST(Mlp, QuadraticToyHidden) {
  MlpModel m(parity_shape(2, 2, Activation::kQuadratic));
  m.w1()(0, 0) = 1.0;
  m.w1()(1, 1) = 2.0;
  Batch b;
  b.bits = {0b11};
  b.target = {0};
  const auto c = forward(m, b);
  EXPECT_DOUBLE_EQ(c.act(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(c.act(1, 0), 4.0);
}

TEST(Mlp, BatchIndependence) {
  const auto m = MlpModel::init(modular_shape(7, 4, 8, Activation::kRelu), 5);
  const auto b = modular_batch(7, 9, 2);
  const auto full = forward(m, b);
  for (std::size_t j = 0; j < b.size(); ++j) {
    const std::size_t idx[] = {j};
    const auto single = forward(m, select_rows(b, idx));
    for (int c = 0; c < 7; ++c) {
      EXPECT_NEAR(single.logits(c, 0), full.logits(c, static_cast<long>(j)),
                  1e-12);
    }
  }
}

TEST(Mlp, NonFiniteActivationNamesLayer) {
  auto m = MlpModel::init(parity_shape(4, 3, Activation::kQuadratic), 1);
  m.w1()(0, 0) = 1e300;
  Batch b;
  b.bits = {0b1111};
  b.target = {1};
  try {
    forward(m, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
    EXPECT_NE(std::string(e.what()).find("hidden"), std::string::npos);
  }
}

// Independent finite-difference check written against evaluate() only.
TEST(Mlp, GradientMatchesFiniteDifferences) {
  for (auto act : {Activation::kQuadratic, Activation::kRelu}) {
    const auto m = MlpModel::init(modular_shape(7, 3, 5, act), 9);
    const auto b = modular_batch(7, 8, 4);
    const auto g = backward(m, forward(m, b), b);
    ASSERT_EQ(g.grad.size(), m.param_count());
    MlpModel probe = m;
    for (std::size_t i = 0; i < m.param_count(); i += 3) {
      const double x = m.params()[i];
      const double h = 1e-5;
      probe.params()[i] = x + h;
      const double lp = evaluate(probe, b).loss;
      probe.params()[i] = x - h;
      const double lm = evaluate(probe, b).loss;
      probe.params()[i] = x;
      const double num = (lp - lm) / (2 * h);
      EXPECT_NEAR(g.grad[i], num, 1e-6 * std::max(1.0, std::abs(num)))
          << "coord " << i;
    }
  }
}

TEST(Mlp, GradCheckSmallRelativeError) {
  const auto m = MlpModel::init(modular_shape(7, 4, 6, Activation::kQuadratic), 1);
  const auto b = modular_batch(7, 8, 3);
  EXPECT_LT(grad_check(m, b, 1e-4), 1e-5);
  Batch empty;
  EXPECT_THROW(grad_check(m, empty, 1e-4), Error);
  EXPECT_THROW(grad_check(m, b, 0.0), Error);
}

TEST(Mlp, GradCheckSecondOrderConvergence) {
  // Absolute central-difference error scales as h^2 for smooth activations.
  const auto m = MlpModel::init(modular_shape(5, 2, 3, Activation::kQuadratic), 2);
  const auto b = modular_batch(5, 4, 1);
  const auto g = backward(m, forward(m, b), b);
  auto err_at = [&](double h) {
    MlpModel probe = m;
    double worst = 0;
    for (std::size_t i = 0; i < m.param_count(); ++i) {
      const double x = m.params()[i];
      probe.params()[i] = x + h;
      const double lp = evaluate(probe, b).loss;
      probe.params()[i] = x - h;
      const double lm = evaluate(probe, b).loss;
      probe.params()[i] = x;
      worst = std::max(worst, std::abs((lp - lm) / (2 * h) - g.grad[i]));
    }
    return worst;
  };
  const double e1 = err_at(2e-2), e2 = err_at(4e-2);
  EXPECT_GT(e2 / e1, 3.0);
  EXPECT_LT(e2 / e1, 5.0);
}

TEST(Mlp, FirstOrderTaylorConsistency) {
  const auto m = MlpModel::init(modular_shape(7, 3, 6, Activation::kQuadratic), 4);
  const auto b = modular_batch(7, 10, 6);
  const auto g = backward(m, forward(m, b), b);
  Rng rng(7);
  std::vector<double> dir(m.param_count());
  for (double& d : dir) d = rng.normal();
  double prev = 0;
  for (double s : {1e-2, 5e-3, 2.5e-3}) {
    MlpModel moved = m;
    double lin = 0;
    for (std::size_t i = 0; i < dir.size(); ++i) {
      moved.params()[i] += s * dir[i];
      lin += g.grad[i] * s * dir[i];
    }
    const double resid = std::abs(evaluate(moved, b).loss - g.loss - lin);
    if (prev > 0) { EXPECT_LT(resid, 0.35 * prev); }
    prev = resid;
  }
}

TEST(Mlp, LogitGridLayout) {
  const auto m = MlpModel::init(modular_shape(5, 2, 3, Activation::kQuadratic), 8);
  const auto grid = logit_grid(m);
  ASSERT_EQ(grid.size(), 125u);
  const std::vector<ModularExample> ex{{3, 1, 4}};
  const auto c = forward(m, make_batch(ex));
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(grid[(3 * 5 + 1) * 5 + k], c.logits(k, 0));
  }
}

TEST(Mlp, InitDeterministicAndScaled) {
  const auto s = modular_shape(23, 32, 256, Activation::kQuadratic);
  const auto a = MlpModel::init(s, 1, 1.0);
  const auto b = MlpModel::init(s, 1, 1.0);
  EXPECT_EQ(a.flatten(), b.flatten());
  // w1 has fan_in 64: mean square ~ 1/64.
  EXPECT_NEAR(a.w1().squaredNorm() / a.w1().size(), 1.0 / 64, 0.1 / 64);
  const auto c = MlpModel::init(s, 1, 3.0);
  EXPECT_NEAR(c.embed_a().squaredNorm() / c.embed_a().size(), 9.0, 0.9);
  EXPECT_EQ(c.b1().squaredNorm(), 0.0);
}

}  // namespace
}  // namespace normsep::models
