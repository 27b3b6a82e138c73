// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Fourier analysis on Z_p: DFT, model spectra with diagonal attribution,
// support selection, the non-Fourier quadratic form, and the softmax
// Hessian floor.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "core/models.hpp"

namespace normsep::spectral {

using cplx = std::complex<double>;

// f(k) = (1/p) sum_x values[x] exp(-2 pi i k x / p). Direct O(p^2) sum.
std::vector<cplx> dft_zp(std::span<const cplx> values);
std::vector<cplx> dft_zp(std::span<const double> values);

struct SpectrumReport {
  int p = 0;
  std::vector<double> energy;  // diagonal energy at (k, k, k)
  double off_diagonal = 0.0;   // every other coefficient
  double total = 0.0;          // sum(energy) + off_diagonal
  std::vector<int> support;    // empty until selected
  double r_value = 1.0;

  // Recomputes r_value from support. Enlarging support never increases it.
  void set_support(std::vector<int> k_star);
};

// Spectrum of a logit grid laid out [(a*p + b)*p + c]. Logits are centred
// over c per (a, b), then transformed with
//   G(ka, kb, m) = p^-3 sum z_c(a,b) exp(-2 pi i (ka a + kb b - m c) / p).
// energy[k] = |G(k,k,k)|^2 and total = sum |G|^2 over all triples.
SpectrumReport grid_spectrum(std::span<const double> logits, int p);
SpectrumReport model_spectrum(const models::MlpModel& model);

// Greedy smallest set reaching `coverage` of the mean normalised diagonal
// energy. Ties go to the lower frequency.
std::vector<int> select_support(std::span<const SpectrumReport> spectra,
                                double coverage);

// CSV `k,energy` and JSON sidecar {p, support, r_value, total}.
void write_spectrum_csv(const SpectrumReport& s, std::ostream& out);
void write_spectrum_json(const SpectrumReport& s, std::ostream& out);

struct QForm {
  Eigen::MatrixXd q;
  std::vector<int> kappa;
  std::string feature_map_id;
};

// Q = sum_{k not in kappa} (Re phi_k Re phi_k^T + Im phi_k Im phi_k^T),
// phi_k = (1/p) sum_x chi_k(x) Phi(x). For f(x) = <theta, Phi(x)>,
// theta^T Q theta equals the DFT energy of f outside kappa.
QForm build_q_form(const Eigen::MatrixXd& feature_map,
                   const std::vector<int>& kappa,
                   std::string feature_map_id = "custom");

double q_form_energy(std::span<const double> theta, const QForm& q);

struct HessianFloor {
  double min_eig = 0.0;
  double floor = 0.0;
  bool ok = false;
};

// Minimum eigenvalue of diag(q) - q q^T on the complement of the ones
// vector, q = softmax(z), against exp(-2B)/p.
HessianFloor softmax_hessian_floor(std::span<const double> z, double b_bound);

}  // namespace normsep::spectral
