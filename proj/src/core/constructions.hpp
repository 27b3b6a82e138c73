// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Explicit interpolants of the full modular-addition table. Both use a
// bilinear readout z_c(a,b) = E_a[:,a]^T T_c E_b[:,b] so lookup and Fourier
// solutions live in one parameter space and their norms are comparable.

#pragma once

#include <string>
#include <vector>

namespace normsep::models {

enum class ConstructionKind { kLookup, kFourier };

struct LinearConstruction {
  ConstructionKind kind = ConstructionKind::kLookup;
  int p = 0;
  int d = 0;
  std::vector<int> kappa;  // empty for lookup
  // Flat parameters: E_a (d x p), E_b (d x p), T (p blocks of d x d), all
  // column-major; T block c starts at offset 2*d*p + c*d*d.
  std::vector<double> params;
  // (|E_a|^2 + |E_b|^2 + |T|^2) / p
  double sq_norm = 0.0;

  // z_c(a,b) laid out [(a*p + b)*p + c].
  std::vector<double> logit_grid() const;
};

// Identity embeddings and the minimum-norm table T_c(a,b) = [c == a+b].
LinearConstruction build_lookup_solution(int p);

// Per positive frequency k in kappa a (cos, sin) embedding pair and the
// rotation-reflection block [[cos kc, sin kc], [sin kc, -cos kc]], so
// z_c(a,b) = sum_k cos(2 pi k (a+b-c) / p).
LinearConstruction build_fourier_solution(int p, const std::vector<int>& kappa);

// Throws unless argmax_c z_c(a,b) == (a+b) mod p uniquely for every pair.
void verify_interpolation(const LinearConstruction& c);

}  // namespace normsep::models
