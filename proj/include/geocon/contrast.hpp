// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "geocon/common.hpp"

namespace geocon {

// Contrastive losses over one anchor pocket embedding h, one positive
// ligand embedding and N negative ligand embeddings:
//
//   Uni:       log(1 + (Q/N) sum_i s_i^-/s^+)            s = exp(gamma h.h')
//   Debiased:  log(1 + max((1/t^-) sum_i (e^{c_i - c+} - t+), eps))
//   Chem:      log(1 + pf * sum_i rho_i e^{c_i - c+})
//
// with c_i = h.h_i^-, c+ = h.h^+, rho_i the chemistry weights from
// chem_weights(). Ratios are evaluated as exp of dot-product differences,
// so large gamma cannot overflow the division.

struct ContrastBatch {
  std::vector<double> anchor;                 // h, unit norm
  std::vector<double> positive;               // h^+, unit norm
  std::vector<std::vector<double>> negatives; // h_i^-, unit norm each
  std::vector<double> sims;                   // Tanimoto vs the positive ligand
  double gamma = 1.0;
  double tau = 0.0;        // chem weight threshold
  double tau_plus = 0.1;   // class prior (debiased only)
  double q = 0.0;          // Q; 0 means "use N"
  double chem_prefactor = 1.0;

  std::size_t n_negatives() const { return negatives.size(); }

  void validate() const {
    require(!anchor.empty(), "ContrastBatch: empty anchor embedding");
    require(positive.size() == anchor.size(), "ContrastBatch: positive dim mismatch");
    require(!negatives.empty(), "ContrastBatch: need at least one negative");
    for (const auto& n : negatives)
      require(n.size() == anchor.size(), "ContrastBatch: negative dim mismatch");
    require(sims.empty() || sims.size() == negatives.size(),
            "ContrastBatch: sims count mismatch");
    require(std::isfinite(gamma) && gamma > 0.0, "ContrastBatch: gamma must be positive");
    require(q >= 0.0, "ContrastBatch: Q must be non-negative");
  }
};

struct LossReport {
  double loss = 0.0;
  std::vector<double> rho;                      // per-negative weights
  std::vector<double> grad_anchor;
  std::vector<double> grad_positive;
  std::vector<std::vector<double>> grad_negatives;
  bool uniform_fallback = false;  // all chem weights vanished

  void check_finite() const {
    bool ok = std::isfinite(loss);
    for (double v : grad_anchor) ok = ok && std::isfinite(v);
    for (double v : grad_positive) ok = ok && std::isfinite(v);
    for (const auto& g : grad_negatives)
      for (double v : g) ok = ok && std::isfinite(v);
    if (!ok) throw numeric_error("LossReport: non-finite loss or gradient");
  }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Exponentiated cosine similarity s = exp(gamma h.h'); the choice under
// which InfoNCE is the Q = N special case of the Uni loss.
inline double similarity(std::span<const double> h, std::span<const double> h2,
                         double gamma = 1.0) {
  return std::exp(gamma * dot(h, h2));
}

// w_i = max(1 - sim_i - tau, 0), rho_i = w_i / sum(w). When every weight
// vanishes, falls back to uniform rho = 1/N (flagged by the caller's
// LossReport).
inline std::pair<std::vector<double>, std::vector<double>> chem_weights(
    const std::vector<double>& sims, double tau) {
  std::vector<double> w(sims.size());
  double total = 0.0;
  for (std::size_t i = 0; i < sims.size(); ++i) {
    require(sims[i] >= 0.0 && sims[i] <= 1.0, "chem_weights: sim outside [0,1]");
    w[i] = std::max(1.0 - sims[i] - tau, 0.0);
    total += w[i];
  }
  std::vector<double> rho(sims.size());
  if (total > 0.0) {
    for (std::size_t i = 0; i < sims.size(); ++i) rho[i] = w[i] / total;
  } else {
    const double u = 1.0 / static_cast<double>(sims.size());
    for (double& r : rho) r = u;
  }
  return {std::move(w), std::move(rho)};
}

namespace contrast_detail {

// Shared gradient assembly: given dL/dc_i (ratio coefficients) and dL/dc+,
// push through c_i = h.h_i^-, c+ = h.h^+.
inline void assemble_grads(const ContrastBatch& b, const std::vector<double>& dl_dci,
                           double dl_dcp, LossReport& report) {
  const std::size_t dim = b.anchor.size();
  const std::size_t n = b.n_negatives();
  report.grad_anchor.assign(dim, 0.0);
  report.grad_positive.assign(dim, 0.0);
  report.grad_negatives.assign(n, std::vector<double>(dim, 0.0));
  for (std::size_t d = 0; d < dim; ++d)
    report.grad_positive[d] = dl_dcp * b.anchor[d];
  for (std::size_t i = 0; i < n; ++i) {
    const double c = dl_dci[i];
    for (std::size_t d = 0; d < dim; ++d) {
      report.grad_negatives[i][d] = c * b.anchor[d];
      report.grad_anchor[d] += c * b.negatives[i][d];
    }
  }
  for (std::size_t d = 0; d < dim; ++d)
    report.grad_anchor[d] += dl_dcp * b.positive[d];
}

}  // namespace contrast_detail

// L = log(1 + (Q/N) sum_i exp(gamma (c_i - c+))), Q defaulting to N.
inline LossReport loss_uni(const ContrastBatch& b) {
  b.validate();
  const std::size_t n = b.n_negatives();
  const double q = b.q > 0.0 ? b.q : static_cast<double>(n);
  const double scale = q / static_cast<double>(n);
  const double cp = dot(b.anchor, b.positive);

  std::vector<double> ratio(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ratio[i] = std::exp(b.gamma * (dot(b.anchor, b.negatives[i]) - cp));
    sum += ratio[i];
  }
  const double denom = 1.0 + scale * sum;

  LossReport report;
  report.loss = std::log(denom);
  report.rho.assign(n, 1.0 / static_cast<double>(n));

  std::vector<double> dl_dci(n);
  for (std::size_t i = 0; i < n; ++i)
    dl_dci[i] = b.gamma * scale * ratio[i] / denom;
  const double dl_dcp = -b.gamma * scale * sum / denom;
  contrast_detail::assemble_grads(b, dl_dci, dl_dcp, report);
  report.check_finite();
  return report;
}

// InfoNCE: the Uni loss at Q = N under exponentiated-cosine similarity.
inline LossReport loss_infonce(const ContrastBatch& b) {
  ContrastBatch copy = b;
  copy.q = static_cast<double>(b.n_negatives());
  return loss_uni(copy);
}

// Debiased InfoNCE with a uniform class prior tau_plus:
//
//   L = log(1 + (1/t^-) ((1/N) sum_i e^{c_i - c+} - t+))
//
// i.e. the prior-corrected mean over negatives, so tau_plus = 0 reduces to
// the Uni loss at Q = 1, gamma = 1 (the same point loss_chem reaches with
// uniform weights). The corrected mean is floored at eps = 1e-8 N before
// the log, so the loss stays >= log(1 + eps) and finite even when every
// negative sits far from the anchor.
inline LossReport loss_debiased(const ContrastBatch& b) {
  b.validate();
  if (!(b.tau_plus >= 0.0 && b.tau_plus < 1.0))
    throw config_error("loss_debiased: tau_plus must lie in [0, 1)");
  const std::size_t n = b.n_negatives();
  const double tau_minus = 1.0 - b.tau_plus;
  const double cp = dot(b.anchor, b.positive);

  std::vector<double> ratio(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ratio[i] = std::exp(dot(b.anchor, b.negatives[i]) - cp);
    mean += ratio[i];
  }
  mean /= static_cast<double>(n);
  const double inner = (mean - b.tau_plus) / tau_minus;

  const double eps = 1e-8 * static_cast<double>(n);
  const bool clamped = inner < eps;
  const double denom = 1.0 + (clamped ? eps : inner);

  LossReport report;
  report.loss = std::log(denom);
  report.rho.assign(n, 1.0 / static_cast<double>(n));

  std::vector<double> dl_dci(n, 0.0);
  double dl_dcp = 0.0;
  if (!clamped) {
    const double scale = 1.0 / (static_cast<double>(n) * tau_minus * denom);
    double ratio_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dl_dci[i] = ratio[i] * scale;
      ratio_sum += ratio[i];
    }
    dl_dcp = -ratio_sum * scale;
  }
  contrast_detail::assemble_grads(b, dl_dci, dl_dcp, report);
  report.check_finite();
  return report;
}

// ChemInfoNCE: L = log(1 + pf sum_i rho_i e^{c_i - c+}) with rho from the
// fingerprint similarities, treated as constants (no gradient through the
// discrete chemistry).
inline LossReport loss_chem(const ContrastBatch& b) {
  b.validate();
  require(b.sims.size() == b.n_negatives(), "loss_chem: per-negative sims required");
  require(b.tau >= 0.0 && b.tau < 1.0, "loss_chem: tau must lie in [0, 1)");
  const std::size_t n = b.n_negatives();
  auto [w, rho] = chem_weights(b.sims, b.tau);
  bool fallback = true;
  for (double wi : w) fallback = fallback && wi == 0.0;

  const double cp = dot(b.anchor, b.positive);
  std::vector<double> ratio(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ratio[i] = std::exp(dot(b.anchor, b.negatives[i]) - cp);
    sum += rho[i] * ratio[i];
  }
  const double denom = 1.0 + b.chem_prefactor * sum;

  LossReport report;
  report.loss = std::log(denom);
  report.rho = rho;
  report.uniform_fallback = fallback;

  std::vector<double> dl_dci(n);
  for (std::size_t i = 0; i < n; ++i)
    dl_dci[i] = b.chem_prefactor * rho[i] * ratio[i] / denom;
  const double dl_dcp = -b.chem_prefactor * sum / denom;
  contrast_detail::assemble_grads(b, dl_dci, dl_dcp, report);
  report.check_finite();
  return report;
}

enum class LossKind : std::uint8_t { uni = 0, infonce = 1, debiased = 2, chem = 3 };

inline const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::uni: return "uni";
    case LossKind::infonce: return "infonce";
    case LossKind::debiased: return "debiased";
    case LossKind::chem: return "chem";
  }
  return "?";
}

inline LossKind parse_loss_kind(const std::string& s) {
  if (s == "uni") return LossKind::uni;
  if (s == "infonce") return LossKind::infonce;
  if (s == "debiased") return LossKind::debiased;
  if (s == "chem") return LossKind::chem;
  throw config_error("unknown loss kind '" + s + "' (uni|infonce|debiased|chem)");
}

inline LossReport compute_loss(LossKind kind, const ContrastBatch& b) {
  switch (kind) {
    case LossKind::uni: return loss_uni(b);
    case LossKind::infonce: return loss_infonce(b);
    case LossKind::debiased: return loss_debiased(b);
    case LossKind::chem: return loss_chem(b);
  }
  throw config_error("compute_loss: bad loss kind");
}

}  // namespace geocon
