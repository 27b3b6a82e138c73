// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "core/error.hpp"

namespace normsep::models {

namespace {

double sq(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

std::vector<double> LinearConstruction::logit_grid() const {
  const std::size_t P = p;
  const std::size_t D = d;
  const double* ea = params.data();
  const double* eb = ea + D * P;
  const double* t = eb + D * P;
  std::vector<double> out(P * P * P, 0.0);
  std::vector<double> tv(D);
  for (std::size_t c = 0; c < P; ++c) {
    const double* tc = t + c * D * D;
    for (std::size_t b = 0; b < P; ++b) {
      // tv = T_c * eb[:, b]
      for (std::size_t i = 0; i < D; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < D; ++j) s += tc[i + j * D] * eb[j + b * D];
        tv[i] = s;
      }
      for (std::size_t a = 0; a < P; ++a) {
        double s = 0.0;
        for (std::size_t i = 0; i < D; ++i) s += ea[i + a * D] * tv[i];
        out[(a * P + b) * P + c] = s;
      }
    }
  }
  return out;
}

void verify_interpolation(const LinearConstruction& c) {
  const auto z = c.logit_grid();
  const int p = c.p;
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) {
      const double* row = z.data() + (std::size_t(a) * p + b) * p;
      const int y = (a + b) % p;
      for (int k = 0; k < p; ++k) {
        if (k != y && !(row[k] < row[y] - 1e-9)) {
          fail(ErrorCode::kInfeasible,
               std::string(c.kind == ConstructionKind::kLookup
                               ? "lookup construction infeasible at p="
                               : "fourier construction argmax tie at p=") +
                   std::to_string(p) + " (a=" + std::to_string(a) +
                   ", b=" + std::to_string(b) + ")");
        }
      }
    }
  }
}

LinearConstruction build_lookup_solution(int p) {
  require(p >= 2 && p <= 64, ErrorCode::kInvalidArgument,
          "build_lookup_solution: p must lie in [2, 64]");
  LinearConstruction c;
  c.kind = ConstructionKind::kLookup;
  c.p = p;
  c.d = p;
  const std::size_t P = p;
  c.params.assign(2 * P * P + P * P * P, 0.0);
  for (std::size_t i = 0; i < P; ++i) {
    c.params[i + i * P] = 1.0;
    c.params[P * P + i + i * P] = 1.0;
  }
  // With orthonormal embeddings the bilinear system decouples per entry, so
  // the least-squares table is the indicator itself.
  double* t = c.params.data() + 2 * P * P;
  for (std::size_t a = 0; a < P; ++a) {
    for (std::size_t b = 0; b < P; ++b) {
      const std::size_t cls = (a + b) % P;
      t[cls * P * P + a + b * P] = 1.0;
    }
  }
  c.sq_norm = sq(c.params) / double(p);
  verify_interpolation(c);
  return c;
}

LinearConstruction build_fourier_solution(int p, const std::vector<int>& kappa) {
  require(p >= 2, ErrorCode::kInvalidArgument,
          "build_fourier_solution: p must be >= 2");
  require(!kappa.empty(), ErrorCode::kInvalidArgument,
          "build_fourier_solution: kappa must be nonempty");
  std::set<int> ks;
  for (int k : kappa) {
    require(k >= 0 && k < p, ErrorCode::kInvalidArgument,
            "build_fourier_solution: frequency out of range");
    ks.insert(k);
  }
  for (int k : ks) {
    require(ks.count((p - k) % p) == 1, ErrorCode::kInvalidArgument,
            "build_fourier_solution: kappa not closed under negation");
  }
  std::vector<int> pos;
  for (int k : ks) {
    if (k != 0 && k <= p - k) pos.push_back(k);
  }
  require(!pos.empty(), ErrorCode::kInvalidArgument,
          "build_fourier_solution: kappa has no nonzero frequency");

  LinearConstruction c;
  c.kind = ConstructionKind::kFourier;
  c.p = p;
  c.d = 2 * static_cast<int>(pos.size());
  c.kappa.assign(ks.begin(), ks.end());
  const std::size_t P = p;
  const std::size_t D = c.d;
  c.params.assign(2 * D * P + P * D * D, 0.0);
  double* ea = c.params.data();
  double* eb = ea + D * P;
  double* t = eb + D * P;
  const double w = 2.0 * std::numbers::pi / double(p);
  for (std::size_t j = 0; j < pos.size(); ++j) {
    const int k = pos[j];
    for (std::size_t x = 0; x < P; ++x) {
      const double ang = w * double(k) * double(x);
      ea[2 * j + x * D] = std::cos(ang);
      ea[2 * j + 1 + x * D] = std::sin(ang);
      eb[2 * j + x * D] = std::cos(ang);
      eb[2 * j + 1 + x * D] = std::sin(ang);
    }
    for (std::size_t cls = 0; cls < P; ++cls) {
      const double ang = w * double(k) * double(cls);
      double* tc = t + cls * D * D;
      const std::size_t r = 2 * j;
      tc[r + r * D] = std::cos(ang);
      tc[r + (r + 1) * D] = std::sin(ang);
      tc[(r + 1) + r * D] = std::sin(ang);
      tc[(r + 1) + (r + 1) * D] = -std::cos(ang);
    }
  }
  c.sq_norm = sq(c.params) / double(p);
  verify_interpolation(c);
  return c;
}

}  // namespace normsep::models
