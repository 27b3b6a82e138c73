// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <set>

#include <json.hpp>

#include "core/error.hpp"

namespace normsep::spectral {

namespace {

// Twiddle table w[j] = exp(-2 pi i j / p).
std::vector<cplx> twiddles(std::size_t p) {
  std::vector<cplx> w(p);
  for (std::size_t j = 0; j < p; ++j) {
    const double ang = -2.0 * std::numbers::pi * double(j) / double(p);
    w[j] = {std::cos(ang), std::sin(ang)};
  }
  return w;
}

}  // namespace

std::vector<cplx> dft_zp(std::span<const cplx> values) {
  const std::size_t p = values.size();
  require(p >= 2, ErrorCode::kInvalidArgument, "dft_zp: p must be >= 2");
  const auto w = twiddles(p);
  std::vector<cplx> out(p);
  for (std::size_t k = 0; k < p; ++k) {
    cplx s = 0.0;
    for (std::size_t x = 0; x < p; ++x) s += values[x] * w[(k * x) % p];
    out[k] = s / double(p);
  }
  return out;
}

std::vector<cplx> dft_zp(std::span<const double> values) {
  std::vector<cplx> v(values.begin(), values.end());
  return dft_zp(std::span<const cplx>(v));
}

void SpectrumReport::set_support(std::vector<int> k_star) {
  std::sort(k_star.begin(), k_star.end());
  k_star.erase(std::unique(k_star.begin(), k_star.end()), k_star.end());
  double in = 0.0;
  for (int k : k_star) {
    require(k >= 0 && k < p, ErrorCode::kInvalidArgument,
            "set_support: frequency out of range");
    in += energy[k];
  }
  support = std::move(k_star);
  r_value = std::clamp((total - in) / total, 0.0, 1.0);
}

SpectrumReport grid_spectrum(std::span<const double> logits, int p) {
  require(p >= 2 && p <= 257, ErrorCode::kInvalidArgument,
          "model_spectrum: p out of range");
  const std::size_t P = p;
  require(logits.size() == P * P * P, ErrorCode::kDimensionMismatch,
          "model_spectrum: logit grid must have p^3 entries");

  // s_sum[s] = sum of centred z_c(a,b) over a + b - c = s (mod p)
  std::vector<double> s_sum(P, 0.0);
  double sq = 0.0;
  for (std::size_t a = 0; a < P; ++a) {
    for (std::size_t b = 0; b < P; ++b) {
      const double* row = logits.data() + (a * P + b) * P;
      double mean = 0.0;
      for (std::size_t c = 0; c < P; ++c) mean += row[c];
      mean /= double(P);
      for (std::size_t c = 0; c < P; ++c) {
        const double z = row[c] - mean;
        require(std::isfinite(z), ErrorCode::kNonFinite,
                "model_spectrum: non-finite logit");
        sq += z * z;
        s_sum[(a + b + P - c) % P] += z;
      }
    }
  }
  const double n3 = double(P) * double(P) * double(P);
  SpectrumReport r;
  r.p = p;
  r.total = sq / n3;
  require(r.total > 0.0, ErrorCode::kPrecondition, "degenerate spectrum");

  const auto w = twiddles(P);
  r.energy.assign(P, 0.0);
  double diag = 0.0;
  for (std::size_t k = 0; k < P; ++k) {
    cplx g = 0.0;
    for (std::size_t s = 0; s < P; ++s) g += s_sum[s] * w[(k * s) % P];
    g /= n3;
    r.energy[k] = std::norm(g);
    diag += r.energy[k];
  }
  r.off_diagonal = std::max(0.0, r.total - diag);
  r.total = diag + r.off_diagonal;
  r.r_value = 1.0;
  return r;
}

SpectrumReport model_spectrum(const models::MlpModel& model) {
  const auto grid = models::logit_grid(model);
  return grid_spectrum(grid, model.shape().vocab);
}

std::vector<int> select_support(std::span<const SpectrumReport> spectra,
                                double coverage) {
  require(!spectra.empty(), ErrorCode::kInvalidArgument,
          "select_support: empty input");
  require(coverage > 0.0 && coverage < 1.0, ErrorCode::kInvalidArgument,
          "select_support: coverage must lie in (0, 1)");
  const int p = spectra.front().p;
  std::vector<double> mean(p, 0.0);
  for (const auto& s : spectra) {
    require(s.p == p && static_cast<int>(s.energy.size()) == p,
            ErrorCode::kDimensionMismatch,
            "select_support: spectra disagree on p");
    const double sum = std::accumulate(s.energy.begin(), s.energy.end(), 0.0);
    require(sum > 0.0, ErrorCode::kPrecondition,
            "select_support: spectrum without diagonal energy");
    for (int k = 0; k < p; ++k) mean[k] += s.energy[k] / sum;
  }
  for (double& x : mean) x /= double(spectra.size());

  std::vector<int> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return mean[i] > mean[j]; });
  std::vector<int> out;
  double cum = 0.0;
  for (int k : order) {
    out.push_back(k);
    cum += mean[k];
    if (cum >= coverage - 1e-12) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_spectrum_csv(const SpectrumReport& s, std::ostream& out) {
  out << "k,energy\n";
  out.precision(17);
  for (int k = 0; k < s.p; ++k) out << k << ',' << s.energy[k] << '\n';
}

void write_spectrum_json(const SpectrumReport& s, std::ostream& out) {
  nlohmann::json j;
  j["p"] = s.p;
  j["support"] = s.support;
  j["r_value"] = s.r_value;
  j["total"] = s.total;
  j["off_diagonal"] = s.off_diagonal;
  out << j.dump(2) << '\n';
}

QForm build_q_form(const Eigen::MatrixXd& feature_map,
                   const std::vector<int>& kappa, std::string feature_map_id) {
  const auto p = feature_map.rows();
  const auto d = feature_map.cols();
  require(p >= 2 && d >= 1, ErrorCode::kInvalidArgument,
          "build_q_form: need p >= 2 rows and d >= 1 columns");
  std::set<int> in(kappa.begin(), kappa.end());
  for (int k : in) {
    require(k >= 0 && k < p, ErrorCode::kInvalidArgument,
            "build_q_form: frequency out of range");
  }
  const auto w = twiddles(static_cast<std::size_t>(p));
  QForm out;
  out.q = Eigen::MatrixXd::Zero(d, d);
  out.kappa.assign(in.begin(), in.end());
  out.feature_map_id = std::move(feature_map_id);
  Eigen::VectorXd re(d), im(d);
  for (Eigen::Index k = 0; k < p; ++k) {
    if (in.count(static_cast<int>(k))) continue;
    re.setZero();
    im.setZero();
    for (Eigen::Index x = 0; x < p; ++x) {
      const cplx chi = w[(k * x) % p];
      re += chi.real() * feature_map.row(x).transpose();
      im += chi.imag() * feature_map.row(x).transpose();
    }
    re /= double(p);
    im /= double(p);
    out.q.noalias() += re * re.transpose();
    out.q.noalias() += im * im.transpose();
  }
  out.q = 0.5 * (out.q + out.q.transpose()).eval();
  return out;
}

double q_form_energy(std::span<const double> theta, const QForm& q) {
  require(static_cast<Eigen::Index>(theta.size()) == q.q.rows(),
          ErrorCode::kDimensionMismatch, "q_form_energy: dimension mismatch");
  Eigen::Map<const Eigen::VectorXd> t(theta.data(), q.q.rows());
  return std::max(0.0, t.dot(q.q * t));
}

HessianFloor softmax_hessian_floor(std::span<const double> z, double b_bound) {
  const auto p = static_cast<Eigen::Index>(z.size());
  require(p >= 2, ErrorCode::kInvalidArgument,
          "softmax_hessian_floor: need at least two logits");
  require(b_bound >= 0.0, ErrorCode::kInvalidArgument,
          "softmax_hessian_floor: bound must be >= 0");
  for (double v : z) {
    require(std::abs(v) <= b_bound, ErrorCode::kPrecondition,
            "softmax_hessian_floor: |z|_inf exceeds bound");
  }
  Eigen::Map<const Eigen::VectorXd> zv(z.data(), p);
  Eigen::VectorXd q = (zv.array() - zv.maxCoeff()).exp().matrix();
  q /= q.sum();
  Eigen::MatrixXd h = -q * q.transpose();
  h.diagonal() += q;

  // Orthonormal Helmert basis of the ones complement.
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(p, p - 1);
  for (Eigen::Index j = 1; j < p; ++j) {
    const double s = 1.0 / std::sqrt(double(j) * double(j + 1));
    for (Eigen::Index i = 0; i < j; ++i) u(i, j - 1) = s;
    u(j, j - 1) = -double(j) * s;
  }
  const Eigen::MatrixXd r = u.transpose() * h * u;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r, Eigen::EigenvaluesOnly);
  HessianFloor out;
  out.min_eig = es.eigenvalues().minCoeff();
  out.floor = std::exp(-2.0 * b_bound) / double(p);
  out.ok = out.min_eig >= out.floor - 1e-12;
  return out;
}

}  // namespace normsep::spectral
