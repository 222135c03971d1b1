// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "geocon/biograph.hpp"
#include "geocon/contrast.hpp"
#include "geocon/ggmp.hpp"
#include "geocon/rigid.hpp"
#include "geocon/rng.hpp"

namespace geocon::gradcheck {

// Central finite differences against every analytic backward path in the
// library. The FD side evaluates only public forward routes, so it stays
// independent of the gradients it certifies. Shared by the check-grad CLI,
// the unit tests and the acceptance suite.

inline constexpr double kFdStep = 1e-5;

struct CheckReport {
  std::string name;
  std::size_t cases = 0;
  double max_ratio = 0.0;  // |analytic - fd| / (abs_tol + rel_tol*max(|a|,|fd|))
  double rel_tol = 0.0;
  double abs_tol = 0.0;
  bool pass() const { return max_ratio <= 1.0; }
};

namespace detail {

// Central difference of a scalar functional with respect to one slot.
inline double central_diff(double* slot, const std::function<double()>& eval,
                           double step = kFdStep) {
  const double saved = *slot;
  *slot = saved + step;
  const double hi = eval();
  *slot = saved - step;
  const double lo = eval();
  *slot = saved;
  return (hi - lo) / (2.0 * step);
}

inline void record(CheckReport& rep, double analytic, double fd) {
  const double denom = rep.abs_tol + rep.rel_tol * std::max(std::abs(analytic), std::abs(fd));
  const double ratio = std::abs(analytic - fd) / denom;
  if (ratio > rep.max_ratio) rep.max_ratio = ratio;
}

// FD over every weight/bias of an Mlp against a grads buffer.
inline void check_mlp_params(CheckReport& rep, Mlp& net, const MlpGrads& analytic,
                             const std::function<double()>& eval) {
  for (std::size_t l = 0; l < net.weights().size(); ++l) {
    DenseMatrix& w = net.weights()[l];
    for (std::size_t e = 0; e < w.size(); ++e)
      record(rep, analytic.w[l].data()[e], central_diff(w.data() + e, eval));
    DenseMatrix& b = net.biases()[l];
    for (std::size_t e = 0; e < b.size(); ++e)
      record(rep, analytic.b[l].data()[e], central_diff(b.data() + e, eval));
  }
}

inline std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm2 = 0.0;
  for (double& x : v) {
    x = rng.normal();
    norm2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

}  // namespace detail

// Random connected-ish test graph with arbitrary (non one-hot) features.
// Every undirected adjacency appears in both directions.
inline BioGraph3D random_graph(Rng& rng, std::size_t n_nodes, std::size_t node_feat,
                               std::size_t edge_feat, double extra_edge_prob = 0.4) {
  BioGraph3D g;
  g.kind = GraphKind::pocket;
  g.n = n_nodes;
  g.node_features = DenseMatrix(n_nodes, node_feat);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    g.coords.push_back({rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0),
                        rng.uniform(-4.0, 4.0)});
    for (std::size_t d = 0; d < node_feat; ++d) g.node_features(i, d) = rng.uniform(-1.0, 1.0);
  }
  std::set<std::pair<std::size_t, std::size_t>> undirected;
  for (std::size_t i = 1; i < n_nodes; ++i)
    undirected.emplace(static_cast<std::size_t>(rng.uniform_index(i)), i);  // spanning tree
  for (std::size_t i = 0; i < n_nodes; ++i)
    for (std::size_t j = i + 1; j < n_nodes; ++j)
      if (rng.uniform() < extra_edge_prob) undirected.emplace(i, j);
  for (const auto& [i, j] : undirected) {
    g.edges.push_back({i, j});
    g.edges.push_back({j, i});
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  g.build_offsets();
  g.edge_features = DenseMatrix(g.edges.size(), edge_feat);
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    for (std::size_t d = 0; d < edge_feat; ++d) g.edge_features(e, d) = rng.uniform(-1.0, 1.0);
  init_directions(g);
  return g;
}

inline BioGraph3D apply_rigid(const BioGraph3D& g, const RigidMotion& motion) {
  BioGraph3D out = g;
  for (std::size_t i = 0; i < g.n; ++i) {
    out.coords[i] = motion.apply_point(g.coords[i]);
    out.directions[i] = motion.apply_vector(g.directions[i]);
  }
  return out;
}

// --- Mlp parameter and input gradients --------------------------------------

inline CheckReport check_mlp_gradients(std::uint64_t seed, std::size_t cases = 100) {
  CheckReport rep{"mlp_backward vs finite differences", cases, 0.0, 1e-4, 1e-6};
  Rng master = Rng(seed).stream("gradcheck-mlp");
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng = master.stream("case", c);
    const std::size_t depth = 1 + rng.uniform_index(3);
    std::vector<std::size_t> widths{1 + rng.uniform_index(6)};
    for (std::size_t l = 0; l < depth; ++l) widths.push_back(1 + rng.uniform_index(7));
    const Activation hidden = rng.uniform() < 0.5 ? Activation::silu : Activation::tanh;
    Mlp net = Mlp::make(widths, hidden, Activation::identity);
    net.init_uniform(rng);

    std::vector<double> input(net.in_dim());
    for (double& v : input) v = rng.uniform(-1.5, 1.5);
    std::vector<double> coeff(net.out_dim());
    for (double& v : coeff) v = rng.uniform(-1.0, 1.0);

    auto eval = [&]() {
      const std::vector<double> out = net.forward(input);
      double s = 0.0;
      for (std::size_t d = 0; d < out.size(); ++d) s += coeff[d] * out[d];
      return s;
    };

    MlpCache cache;
    std::vector<double> out, input_grad;
    net.forward(input, cache, out);
    MlpGrads grads = net.make_grads();
    net.backward(cache, coeff, grads, input_grad);

    detail::check_mlp_params(rep, net, grads, eval);
    for (std::size_t d = 0; d < input.size(); ++d)
      detail::record(rep, input_grad[d], detail::central_diff(&input[d], eval));
  }
  return rep;
}

// --- Exact energy gradients --------------------------------------------------

inline CheckReport check_energy_gradients(std::uint64_t seed, std::size_t cases = 50) {
  CheckReport rep{"energy_grad_exact vs finite differences", cases, 0.0, 1e-5, 1e-9};
  Rng master = Rng(seed).stream("gradcheck-energy");
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng = master.stream("case", c);
    BioGraph3D g = random_graph(rng, 4 + rng.uniform_index(5), 4, 2);
    EnergyParams params = EnergyParams::make(4, 2, 8, rng);

    std::vector<Vec3> dx, dn;
    energy_grad_exact(g, params, dx, dn);
    auto eval = [&]() { return energy(g, params); };

    for (std::size_t i = 0; i < g.n; ++i) {
      double* xs[3] = {&g.coords[i].x, &g.coords[i].y, &g.coords[i].z};
      const double ax[3] = {dx[i].x, dx[i].y, dx[i].z};
      for (int d = 0; d < 3; ++d)
        detail::record(rep, ax[d], detail::central_diff(xs[d], eval));
      double* ns[3] = {&g.directions[i].x, &g.directions[i].y, &g.directions[i].z};
      const double an[3] = {dn[i].x, dn[i].y, dn[i].z};
      for (int d = 0; d < 3; ++d)
        detail::record(rep, an[d], detail::central_diff(ns[d], eval));
    }
  }
  return rep;
}

// --- Full GGMP layer backward ------------------------------------------------

inline CheckReport check_ggmp_backward(std::uint64_t seed, std::size_t cases = 25) {
  CheckReport rep{"ggmp_backward vs finite differences", cases, 0.0, 1e-4, 1e-6};
  Rng master = Rng(seed).stream("gradcheck-ggmp");
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng = master.stream("case", c);
    GgmpDims dims{4, 2, 5, 6, 8, 1};
    BioGraph3D g = random_graph(rng, 4 + rng.uniform_index(3), dims.node_feat, dims.edge_feat);
    GgmpLayer layer = GgmpLayer::make(dims, 0.2, rng);

    DenseMatrix h(g.n, dims.hidden);
    for (std::size_t i = 0; i < g.n; ++i)
      for (std::size_t d = 0; d < dims.hidden; ++d) h(i, d) = rng.uniform(-1.0, 1.0);
    std::vector<Vec3> x = g.coords;
    std::vector<Vec3> n = g.directions;

    DenseMatrix uh(g.n, dims.hidden);
    for (std::size_t i = 0; i < g.n; ++i)
      for (std::size_t d = 0; d < dims.hidden; ++d) uh(i, d) = rng.uniform(-1.0, 1.0);
    std::vector<Vec3> ux(g.n), un(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
      ux[i] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      un[i] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    }

    auto eval = [&]() {
      DenseMatrix ho;
      std::vector<Vec3> xo, no;
      ggmp_forward(layer, g, h, x, n, ho, xo, no, nullptr);
      double s = 0.0;
      for (std::size_t i = 0; i < g.n; ++i) {
        for (std::size_t d = 0; d < ho.cols(); ++d) s += uh(i, d) * ho(i, d);
        s += ux[i].dot(xo[i]) + un[i].dot(no[i]);
      }
      return s;
    };

    GgmpLayerCache cache;
    DenseMatrix ho;
    std::vector<Vec3> xo, no;
    ggmp_forward(layer, g, h, x, n, ho, xo, no, &cache);
    GgmpLayerGrads grads = make_grads(layer);
    DenseMatrix gh;
    std::vector<Vec3> gx, gn;
    ggmp_backward(layer, g, cache, uh, ux, un, grads, gh, gx, gn);

    detail::check_mlp_params(rep, layer.phi_m, grads.phi_m, eval);
    detail::check_mlp_params(rep, layer.phi_g, grads.phi_g, eval);
    detail::check_mlp_params(rep, layer.phi_h, grads.phi_h, eval);
    detail::check_mlp_params(rep, layer.u_net, grads.u_net, eval);
    detail::check_mlp_params(rep, layer.phi_x, grads.phi_x, eval);
    detail::check_mlp_params(rep, layer.phi_n, grads.phi_n, eval);
    for (std::size_t i = 0; i < g.n; ++i) {
      for (std::size_t d = 0; d < dims.hidden; ++d)
        detail::record(rep, gh(i, d), detail::central_diff(&h(i, d), eval));
      double* xs[3] = {&x[i].x, &x[i].y, &x[i].z};
      const double axs[3] = {gx[i].x, gx[i].y, gx[i].z};
      double* ns[3] = {&n[i].x, &n[i].y, &n[i].z};
      const double ans[3] = {gn[i].x, gn[i].y, gn[i].z};
      for (int d = 0; d < 3; ++d) {
        detail::record(rep, axs[d], detail::central_diff(xs[d], eval));
        detail::record(rep, ans[d], detail::central_diff(ns[d], eval));
      }
    }
  }
  return rep;
}

// --- Encoder end-to-end backward ---------------------------------------------

inline CheckReport check_encoder_backward(std::uint64_t seed, std::size_t cases = 6) {
  CheckReport rep{"encode_backward vs finite differences", cases, 0.0, 1e-4, 1e-6};
  Rng master = Rng(seed).stream("gradcheck-encoder");
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng = master.stream("case", c);
    GgmpEncoderConfig cfg;
    cfg.kind = GraphKind::pocket;
    cfg.depth = 2;
    cfg.dims = GgmpDims{4, 2, 5, 6, 8, 1};
    cfg.lambda = 0.15;
    GgmpEncoder enc = GgmpEncoder::make(cfg, rng);
    const BioGraph3D g = random_graph(rng, 5, cfg.dims.node_feat, cfg.dims.edge_feat);

    std::vector<double> coeff(enc.embedding_dim());
    for (double& v : coeff) v = rng.uniform(-1.0, 1.0);
    auto eval = [&]() {
      const std::vector<double> h = enc.encode(g);
      double s = 0.0;
      for (std::size_t d = 0; d < h.size(); ++d) s += coeff[d] * h[d];
      return s;
    };

    GgmpEncoderCache cache;
    enc.encode(g, &cache);
    GgmpEncoderGrads grads = enc.make_grads();
    enc.encode_backward(g, cache, coeff, grads);

    ParamSet params;
    enc.collect_params(grads, params);
    for (const ParamRef& p : params)
      for (std::size_t e = 0; e < p.value->size(); ++e)
        detail::record(rep, p.grad->data()[e],
                       detail::central_diff(p.value->data() + e, eval));
  }
  return rep;
}

// --- Contrastive loss gradients ----------------------------------------------

inline CheckReport check_loss_gradients(std::uint64_t seed, std::size_t cases = 200) {
  CheckReport rep{"loss gradients vs finite differences", cases, 0.0, 0.0, 1e-6};
  Rng master = Rng(seed).stream("gradcheck-loss");
  const LossKind kinds[] = {LossKind::uni, LossKind::infonce, LossKind::debiased,
                            LossKind::chem};
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng = master.stream("case", c);
    const LossKind kind = kinds[c % 4];
    const std::size_t dim = 3 + rng.uniform_index(6);
    const std::size_t n_neg = 1 + rng.uniform_index(5);

    ContrastBatch b;
    b.anchor = detail::random_unit(rng, dim);
    b.positive = detail::random_unit(rng, dim);
    for (std::size_t i = 0; i < n_neg; ++i) b.negatives.push_back(detail::random_unit(rng, dim));
    for (std::size_t i = 0; i < n_neg; ++i) b.sims.push_back(rng.uniform());
    b.gamma = rng.uniform(0.5, 2.0);
    b.tau = rng.uniform(0.0, 0.5);
    b.tau_plus = rng.uniform(0.0, 0.5);
    b.q = rng.uniform() < 0.5 ? 0.0 : rng.uniform(0.5, 4.0);

    const LossReport report = compute_loss(kind, b);
    auto eval = [&]() { return compute_loss(kind, b).loss; };

    for (std::size_t d = 0; d < dim; ++d)
      detail::record(rep, report.grad_anchor[d], detail::central_diff(&b.anchor[d], eval));
    for (std::size_t d = 0; d < dim; ++d)
      detail::record(rep, report.grad_positive[d],
                     detail::central_diff(&b.positive[d], eval));
    for (std::size_t i = 0; i < n_neg; ++i)
      for (std::size_t d = 0; d < dim; ++d)
        detail::record(rep, report.grad_negatives[i][d],
                       detail::central_diff(&b.negatives[i][d], eval));
  }
  return rep;
}

inline std::vector<CheckReport> run_gradient_suite(std::uint64_t seed) {
  return {check_mlp_gradients(seed), check_energy_gradients(seed),
          check_ggmp_backward(seed), check_encoder_backward(seed),
          check_loss_gradients(seed)};
}

inline bool all_pass(const std::vector<CheckReport>& reports) {
  for (const CheckReport& r : reports)
    if (!r.pass()) return false;
  return true;
}

inline void print_reports(const std::vector<CheckReport>& reports, std::FILE* out) {
  for (const CheckReport& r : reports)
    std::fprintf(out, "%-45s %4zu cases  max_ratio %.3e  (rel %.0e abs %.0e)  %s\n",
                 r.name.c_str(), r.cases, r.max_ratio, r.rel_tol, r.abs_tol,
                 r.pass() ? "PASS" : "FAIL");
}

}  // namespace geocon::gradcheck
