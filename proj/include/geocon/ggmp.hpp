// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "geocon/biograph.hpp"
#include "geocon/matrix.hpp"
#include "geocon/mlp.hpp"
#include "geocon/optimizer.hpp"
#include "geocon/rng.hpp"

namespace geocon {

// Gated geometric message passing. One layer jointly updates node features
// h, positions x and direction vectors n:
//
//   m_ij = phi_m(v_i, v_j, e_ij)
//   g_ij = phi_g(d_ij^2, <n_i, n_j>)
//   h_i' = phi_h(h_i, sum_j m_ij * g_ij)
//   x_i' = x_i + lambda * sum_j u(m_ij) phi_x(g_ij) (x_i - x_j)
//   n_i' = renorm( n_i + lambda * sum_j u(m_ij) phi_n(g_ij) n_j )
//
// v, e are the static layer-0 node/edge features; h is the recurrent
// stream. The n-update anchors on the node's own direction so that
// lambda = 0 is exactly the identity on x and n. Directions are
// renormalized after every layer (zero vectors pass through), keeping
// <n_i, n_j> bounded across depth.

inline constexpr double kDirectionEps = 1e-12;

struct GgmpDims {
  std::size_t node_feat = kNodeFeatureDim;
  std::size_t edge_feat = kEdgeFeatureDim;
  std::size_t hidden = 64;     // d_h
  std::size_t message = 64;    // d_m (message and gate width)
  std::size_t phi_hidden = 64; // width of phi hidden layers
  std::size_t phi_depth = 2;   // hidden layer count in each phi
};

namespace ggmp_detail {

inline std::vector<std::size_t> phi_widths(std::size_t in, std::size_t out,
                                           const GgmpDims& d) {
  std::vector<std::size_t> w;
  w.push_back(in);
  for (std::size_t l = 0; l < d.phi_depth; ++l) w.push_back(d.phi_hidden);
  w.push_back(out);
  return w;
}

}  // namespace ggmp_detail

struct GgmpLayer {
  Mlp phi_m;  // 2*node_feat + edge_feat -> d_m
  Mlp phi_g;  // [d^2, <n_i,n_j>] -> d_m
  Mlp phi_h;  // d_h + d_m -> d_h
  Mlp u_net;  // d_m -> 1
  Mlp phi_x;  // d_m -> 1
  Mlp phi_n;  // d_m -> 1
  double lambda = 0.1;

  static GgmpLayer make(const GgmpDims& d, double lambda, Rng& rng) {
    GgmpLayer layer;
    layer.phi_m = Mlp::make(ggmp_detail::phi_widths(2 * d.node_feat + d.edge_feat, d.message, d));
    layer.phi_g = Mlp::make(ggmp_detail::phi_widths(2, d.message, d));
    layer.phi_h = Mlp::make(ggmp_detail::phi_widths(d.hidden + d.message, d.hidden, d));
    layer.u_net = Mlp::make(ggmp_detail::phi_widths(d.message, 1, d));
    layer.phi_x = Mlp::make(ggmp_detail::phi_widths(d.message, 1, d));
    layer.phi_n = Mlp::make(ggmp_detail::phi_widths(d.message, 1, d));
    layer.lambda = lambda;
    layer.phi_m.init_uniform(rng);
    layer.phi_g.init_uniform(rng);
    layer.phi_h.init_uniform(rng);
    layer.u_net.init_uniform(rng);
    layer.phi_x.init_uniform(rng);
    layer.phi_n.init_uniform(rng);
    layer.validate();
    return layer;
  }

  std::size_t message_dim() const { return phi_m.out_dim(); }
  std::size_t hidden_dim() const { return phi_h.out_dim(); }

  void validate() const {
    require(phi_m.out_dim() == phi_g.out_dim(), "GgmpLayer: message/gate width mismatch");
    require(u_net.out_dim() == 1 && phi_x.out_dim() == 1 && phi_n.out_dim() == 1,
            "GgmpLayer: u/phi_x/phi_n must be scalar heads");
    require(u_net.in_dim() == phi_m.out_dim(), "GgmpLayer: u input width != d_m");
    require(phi_x.in_dim() == phi_g.out_dim(), "GgmpLayer: phi_x input width != d_m");
    require(phi_n.in_dim() == phi_g.out_dim(), "GgmpLayer: phi_n input width != d_m");
    require(phi_g.in_dim() == 2, "GgmpLayer: phi_g takes [d^2, <n_i,n_j>]");
    require(phi_h.in_dim() == phi_h.out_dim() + phi_m.out_dim(),
            "GgmpLayer: phi_h input width != d_h + d_m");
    require(lambda >= 0.0, "GgmpLayer: negative step size");
  }

  void save(std::ostream& os) const {
    serial::write_double(os, lambda);
    phi_m.save(os);
    phi_g.save(os);
    phi_h.save(os);
    u_net.save(os);
    phi_x.save(os);
    phi_n.save(os);
  }

  void load(std::istream& is) {
    lambda = serial::read_double(is);
    phi_m.load(is);
    phi_g.load(is);
    phi_h.load(is);
    u_net.load(is);
    phi_x.load(is);
    phi_n.load(is);
    validate();
  }
};

struct GgmpLayerGrads {
  MlpGrads phi_m, phi_g, phi_h, u_net, phi_x, phi_n;

  void set_zero() {
    phi_m.set_zero();
    phi_g.set_zero();
    phi_h.set_zero();
    u_net.set_zero();
    phi_x.set_zero();
    phi_n.set_zero();
  }

  void add(const GgmpLayerGrads& o) {
    phi_m.add(o.phi_m);
    phi_g.add(o.phi_g);
    phi_h.add(o.phi_h);
    u_net.add(o.u_net);
    phi_x.add(o.phi_x);
    phi_n.add(o.phi_n);
  }
};

inline GgmpLayerGrads make_grads(const GgmpLayer& layer) {
  return {layer.phi_m.make_grads(), layer.phi_g.make_grads(), layer.phi_h.make_grads(),
          layer.u_net.make_grads(), layer.phi_x.make_grads(), layer.phi_n.make_grads()};
}

struct GgmpEdgeCache {
  MlpCache m, g, u, x, n;
  std::vector<double> m_out, g_out;
  double u_out = 0.0, x_out = 0.0, n_out = 0.0;
};

struct GgmpLayerCache {
  std::vector<GgmpEdgeCache> edges;
  std::vector<MlpCache> h_node;        // phi_h caches per node
  DenseMatrix h_in;                    // layer inputs, kept for backward
  std::vector<Vec3> x_in, n_in;
  std::vector<Vec3> n_tilde;           // pre-renormalization directions
  std::vector<double> n_tilde_norm;
};

// One GGMP layer. `cache` may be null for inference-only passes.
inline void ggmp_forward(const GgmpLayer& layer, const BioGraph3D& graph,
                         const DenseMatrix& h, const std::vector<Vec3>& x,
                         const std::vector<Vec3>& n, DenseMatrix& h_out,
                         std::vector<Vec3>& x_out, std::vector<Vec3>& n_out,
                         GgmpLayerCache* cache) {
  const std::size_t nn = graph.n;
  const std::size_t ne = graph.edge_count();
  const std::size_t dm = layer.message_dim();
  const std::size_t dh = layer.hidden_dim();
  require(h.rows() == nn && h.cols() == dh, "ggmp_forward: H shape mismatch");
  require(x.size() == nn && n.size() == nn, "ggmp_forward: coordinate count mismatch");

  if (cache) {
    cache->edges.resize(ne);
    cache->h_node.resize(nn);
    cache->h_in = h;
    cache->x_in = x;
    cache->n_in = n;
    cache->n_tilde.assign(nn, Vec3{});
    cache->n_tilde_norm.assign(nn, 0.0);
  }

  h_out = DenseMatrix(nn, dh);
  x_out = x;
  n_out.assign(nn, Vec3{});

  // Per-node aggregates.
  DenseMatrix msg_sum(nn, dm);
  std::vector<Vec3> x_delta(nn, Vec3{});
  std::vector<Vec3> n_delta(nn, Vec3{});

  const std::size_t df = graph.node_features.cols();
  const std::size_t de = graph.edge_features.cols();
  std::vector<double> pair_feat(2 * df + de);
  std::vector<double> geo_feat(2);
  std::vector<double> m_out, g_out, scalar_out;
  GgmpEdgeCache scratch;

  for (std::size_t e = 0; e < ne; ++e) {
    const std::size_t i = graph.edges[e].i;
    const std::size_t j = graph.edges[e].j;
    GgmpEdgeCache& ec = cache ? cache->edges[e] : scratch;
    try {
      std::span<const double> vi = graph.node_features.row(i);
      std::span<const double> vj = graph.node_features.row(j);
      std::span<const double> ef = graph.edge_features.row(e);
      std::copy(vi.begin(), vi.end(), pair_feat.begin());
      std::copy(vj.begin(), vj.end(), pair_feat.begin() + static_cast<std::ptrdiff_t>(df));
      std::copy(ef.begin(), ef.end(), pair_feat.begin() + static_cast<std::ptrdiff_t>(2 * df));

      const Vec3 rel = x[i] - x[j];
      geo_feat[0] = rel.norm2();
      geo_feat[1] = n[i].dot(n[j]);

      layer.phi_m.forward(pair_feat, ec.m, ec.m_out);
      layer.phi_g.forward(geo_feat, ec.g, ec.g_out);
      layer.u_net.forward(ec.m_out, ec.u, scalar_out);
      ec.u_out = scalar_out[0];
      layer.phi_x.forward(ec.g_out, ec.x, scalar_out);
      ec.x_out = scalar_out[0];
      layer.phi_n.forward(ec.g_out, ec.n, scalar_out);
      ec.n_out = scalar_out[0];

      double* srow = msg_sum.row_ptr(i);
      for (std::size_t d = 0; d < dm; ++d) srow[d] += ec.m_out[d] * ec.g_out[d];
      x_delta[i] += (layer.lambda * ec.u_out * ec.x_out) * rel;
      n_delta[i] += (layer.lambda * ec.u_out * ec.n_out) * n[j];
    } catch (const numeric_error& err) {
      throw numeric_error("ggmp_forward: numerical fault at node " + std::to_string(i) +
                          " (edge " + std::to_string(i) + "->" + std::to_string(j) +
                          "): " + err.what());
    }
  }

  std::vector<double> h_feat(dh + dm);
  std::vector<double> h_new;
  MlpCache h_scratch;
  for (std::size_t i = 0; i < nn; ++i) {
    std::span<const double> hrow = h.row(i);
    std::copy(hrow.begin(), hrow.end(), h_feat.begin());
    std::span<const double> srow = msg_sum.row(i);
    std::copy(srow.begin(), srow.end(), h_feat.begin() + static_cast<std::ptrdiff_t>(dh));
    try {
      layer.phi_h.forward(h_feat, cache ? cache->h_node[i] : h_scratch, h_new);
    } catch (const numeric_error& err) {
      throw numeric_error("ggmp_forward: numerical fault at node " + std::to_string(i) +
                          ": " + err.what());
    }
    std::copy(h_new.begin(), h_new.end(), h_out.row_ptr(i));

    x_out[i] += x_delta[i];

    // Exact identity when the direction update vanishes (lambda = 0 or no
    // incident edges); otherwise renormalize with zero-vector passthrough.
    const Vec3& d = n_delta[i];
    if (d.x == 0.0 && d.y == 0.0 && d.z == 0.0) {
      n_out[i] = n[i];
      if (cache) {
        cache->n_tilde[i] = n[i];
        cache->n_tilde_norm[i] = n[i].norm();
      }
    } else {
      const Vec3 tilde = n[i] + d;
      const double norm = tilde.norm();
      if (cache) {
        cache->n_tilde[i] = tilde;
        cache->n_tilde_norm[i] = norm;
      }
      if (norm > kDirectionEps) n_out[i] = tilde * (1.0 / norm);
    }

    bool ok = x_out[i].finite() && n_out[i].finite();
    for (std::size_t dch = 0; ok && dch < dh; ++dch)
      ok = std::isfinite(h_out(i, dch));
    if (!ok)
      throw numeric_error("ggmp_forward: non-finite output at node " + std::to_string(i));
  }
}

// Reverse-mode pass for one layer. Accumulates parameter gradients into
// `grads` and writes gradients with respect to the layer inputs H, X, N.
inline void ggmp_backward(const GgmpLayer& layer, const BioGraph3D& graph,
                          const GgmpLayerCache& cache, const DenseMatrix& gh_out,
                          const std::vector<Vec3>& gx_out, const std::vector<Vec3>& gn_out,
                          GgmpLayerGrads& grads, DenseMatrix& gh_in,
                          std::vector<Vec3>& gx_in, std::vector<Vec3>& gn_in) {
  const std::size_t nn = graph.n;
  const std::size_t ne = graph.edge_count();
  const std::size_t dm = layer.message_dim();
  const std::size_t dh = layer.hidden_dim();
  if (cache.h_node.size() != nn || cache.edges.size() != ne)
    throw config_error("ggmp_backward: cache does not match graph");

  gh_in = DenseMatrix(nn, dh);
  gx_in.assign(nn, Vec3{});
  gn_in.assign(nn, Vec3{});

  // Through the renormalization: n' = ntilde / |ntilde| has Jacobian
  // (I - n'n'^T)/|ntilde|; zero vectors stay zero.
  std::vector<Vec3> g_tilde(nn, Vec3{});
  DenseMatrix gs(nn, dm);  // gradient on the gated message sums
  std::vector<double> h_up(dh), h_in_grad;
  for (std::size_t i = 0; i < nn; ++i) {
    const double norm = cache.n_tilde_norm[i];
    if (norm > kDirectionEps) {
      const Vec3 unit = cache.n_tilde[i] * (1.0 / norm);
      const Vec3& g = gn_out[i];
      g_tilde[i] = (g - unit * unit.dot(g)) * (1.0 / norm);
    }
    gn_in[i] += g_tilde[i];
    gx_in[i] += gx_out[i];

    std::span<const double> gh_row = gh_out.row(i);
    std::copy(gh_row.begin(), gh_row.end(), h_up.begin());
    layer.phi_h.backward(cache.h_node[i], h_up, grads.phi_h, h_in_grad);
    double* ghi = gh_in.row_ptr(i);
    for (std::size_t d = 0; d < dh; ++d) ghi[d] += h_in_grad[d];
    double* gsi = gs.row_ptr(i);
    for (std::size_t d = 0; d < dm; ++d) gsi[d] += h_in_grad[dh + d];
  }

  std::vector<double> gm(dm), gg(dm), one(1), head_grad;
  for (std::size_t e = 0; e < ne; ++e) {
    const std::size_t i = graph.edges[e].i;
    const std::size_t j = graph.edges[e].j;
    const GgmpEdgeCache& ec = cache.edges[e];
    const Vec3 rel = cache.x_in[i] - cache.x_in[j];
    const Vec3& nj = cache.n_in[j];
    const Vec3& ni = cache.n_in[i];

    // s_i = sum m * g
    const double* gsi = gs.row(i).data();
    for (std::size_t d = 0; d < dm; ++d) {
      gm[d] = gsi[d] * ec.g_out[d];
      gg[d] = gsi[d] * ec.m_out[d];
    }

    // x_i' += lambda * u * a * (x_i - x_j)
    const double gx_dot_rel = gx_out[i].dot(rel);
    const double gc = layer.lambda * gx_dot_rel;
    double gu = ec.x_out * gc;
    const double ga = ec.u_out * gc;
    const double cx = layer.lambda * ec.u_out * ec.x_out;
    gx_in[i] += cx * gx_out[i];
    gx_in[j] -= cx * gx_out[i];

    // ntilde_i += lambda * u * b * n_j
    const double ge = layer.lambda * g_tilde[i].dot(nj);
    gu += ec.n_out * ge;
    const double gb = ec.u_out * ge;
    const double cn = layer.lambda * ec.u_out * ec.n_out;
    gn_in[j] += cn * g_tilde[i];

    // Scalar heads, then the gate/message networks.
    one[0] = ga;
    layer.phi_x.backward(ec.x, one, grads.phi_x, head_grad);
    for (std::size_t d = 0; d < dm; ++d) gg[d] += head_grad[d];
    one[0] = gb;
    layer.phi_n.backward(ec.n, one, grads.phi_n, head_grad);
    for (std::size_t d = 0; d < dm; ++d) gg[d] += head_grad[d];
    one[0] = gu;
    layer.u_net.backward(ec.u, one, grads.u_net, head_grad);
    for (std::size_t d = 0; d < dm; ++d) gm[d] += head_grad[d];

    layer.phi_g.backward(ec.g, gg, grads.phi_g, head_grad);
    const double gd2 = head_grad[0];
    const double gdot = head_grad[1];
    layer.phi_m.backward(ec.m, gm, grads.phi_m, head_grad);  // static inputs

    gx_in[i] += (2.0 * gd2) * rel;
    gx_in[j] -= (2.0 * gd2) * rel;
    gn_in[i] += gdot * nj;
    gn_in[j] += gdot * ni;
  }
}

// ---------------------------------------------------------------------------
// Pairwise energy and its exact gradients. This is the verification path:
// u scores the chemistry of an edge, g its geometry, and the analytic
// position/direction gradients below are checked against finite
// differences of energy().

struct EnergyParams {
  Mlp u;  // [v_i, v_j, e_ij] -> scalar chemical energy
  Mlp g;  // [<n_i,n_j>, d^2] -> scalar geometric energy; must stay smooth

  static EnergyParams make(std::size_t node_feat, std::size_t edge_feat,
                           std::size_t hidden, Rng& rng) {
    EnergyParams p;
    p.u = Mlp::make({2 * node_feat + edge_feat, hidden, 1});
    p.g = Mlp::make({2, hidden, 1});
    p.u.init_uniform(rng);
    p.g.init_uniform(rng);
    p.validate();
    return p;
  }

  void validate() const {
    require(u.out_dim() == 1 && g.out_dim() == 1, "EnergyParams: scalar heads required");
    require(g.in_dim() == 2, "EnergyParams: g takes [<n_i,n_j>, d^2]");
    for (Activation a : g.activations())
      require(a != Activation::relu, "EnergyParams: g must be smooth (no relu)");
  }
};

namespace ggmp_detail {

inline void edge_pair_features(const BioGraph3D& graph, std::size_t e,
                               std::vector<double>& out) {
  const std::size_t df = graph.node_features.cols();
  const std::size_t de = graph.edge_features.cols();
  out.resize(2 * df + de);
  std::span<const double> vi = graph.node_features.row(graph.edges[e].i);
  std::span<const double> vj = graph.node_features.row(graph.edges[e].j);
  std::span<const double> ef = graph.edge_features.row(e);
  std::copy(vi.begin(), vi.end(), out.begin());
  std::copy(vj.begin(), vj.end(), out.begin() + static_cast<std::ptrdiff_t>(df));
  std::copy(ef.begin(), ef.end(), out.begin() + static_cast<std::ptrdiff_t>(2 * df));
}

}  // namespace ggmp_detail

// E = sum over directed edges of u(v_i, v_j, e_ij) * g(<n_i,n_j>, d_ij^2).
inline double energy(const BioGraph3D& graph, const EnergyParams& params) {
  params.validate();
  double total = 0.0;
  std::vector<double> pair_feat, geo(2);
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    const std::size_t i = graph.edges[e].i;
    const std::size_t j = graph.edges[e].j;
    ggmp_detail::edge_pair_features(graph, e, pair_feat);
    geo[0] = graph.directions[i].dot(graph.directions[j]);
    geo[1] = (graph.coords[i] - graph.coords[j]).norm2();
    total += params.u.forward(pair_feat)[0] * params.g.forward(geo)[0];
  }
  if (!std::isfinite(total)) throw numeric_error("energy: non-finite total");
  return total;
}

// Analytic dE/dX and dE/dN, accumulated over both orientations of every
// edge:
//   dE/dx_i += 2 u_ij (dg/dd^2) (x_i - x_j)      (and the mirror for j)
//   dE/dn_i +=   u_ij (dg/d<.,.>) n_j            (and the mirror for j)
inline void energy_grad_exact(const BioGraph3D& graph, const EnergyParams& params,
                              std::vector<Vec3>& dx, std::vector<Vec3>& dn) {
  params.validate();
  dx.assign(graph.n, Vec3{});
  dn.assign(graph.n, Vec3{});
  std::vector<double> pair_feat, geo(2), g_out, g_in_grad;
  std::vector<double> one{1.0};
  MlpCache g_cache;
  MlpGrads g_scratch = params.g.make_grads();
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    const std::size_t i = graph.edges[e].i;
    const std::size_t j = graph.edges[e].j;
    ggmp_detail::edge_pair_features(graph, e, pair_feat);
    const double u_val = params.u.forward(pair_feat)[0];
    geo[0] = graph.directions[i].dot(graph.directions[j]);
    geo[1] = (graph.coords[i] - graph.coords[j]).norm2();
    params.g.forward(geo, g_cache, g_out);
    params.g.backward(g_cache, one, g_scratch, g_in_grad);
    const double dg_ddot = g_in_grad[0];
    const double dg_dd2 = g_in_grad[1];
    const Vec3 rel = graph.coords[i] - graph.coords[j];
    dx[i] += (2.0 * u_val * dg_dd2) * rel;
    dx[j] -= (2.0 * u_val * dg_dd2) * rel;
    dn[i] += (u_val * dg_ddot) * graph.directions[j];
    dn[j] += (u_val * dg_ddot) * graph.directions[i];
  }
}

// ---------------------------------------------------------------------------
// Stacked encoder: input embedding, T GGMP layers, mean pooling, readout,
// L2 normalization. Pocket and ligand encoders share this architecture but
// never parameters.

struct GgmpEncoderConfig {
  GraphKind kind = GraphKind::pocket;
  std::size_t depth = 3;
  GgmpDims dims{};
  double lambda = 0.1;
};

struct GgmpEncoderGrads {
  MlpGrads input_embed;
  std::vector<GgmpLayerGrads> layers;
  MlpGrads readout;

  void set_zero() {
    input_embed.set_zero();
    for (auto& l : layers) l.set_zero();
    readout.set_zero();
  }

  void add(const GgmpEncoderGrads& o) {
    input_embed.add(o.input_embed);
    for (std::size_t l = 0; l < layers.size(); ++l) layers[l].add(o.layers[l]);
    readout.add(o.readout);
  }
};

struct GgmpEncoderCache {
  std::vector<MlpCache> embed_node;
  std::vector<GgmpLayerCache> layers;
  std::vector<double> pooled;
  MlpCache readout;
  std::vector<double> readout_out;
  double readout_norm = 0.0;
  std::size_t n_nodes = 0;
};

class GgmpEncoder {
 public:
  GgmpEncoder() = default;

  static GgmpEncoder make(const GgmpEncoderConfig& cfg, Rng& rng) {
    GgmpEncoder enc;
    enc.kind_ = cfg.kind;
    enc.input_embed_ = Mlp::make({cfg.dims.node_feat, cfg.dims.hidden});
    enc.input_embed_.init_uniform(rng);
    for (std::size_t t = 0; t < cfg.depth; ++t)
      enc.layers_.push_back(GgmpLayer::make(cfg.dims, cfg.lambda, rng));
    enc.readout_ = Mlp::make({cfg.dims.hidden, cfg.dims.phi_hidden, cfg.dims.hidden});
    enc.readout_.init_uniform(rng);
    return enc;
  }

  GraphKind kind() const { return kind_; }
  std::size_t depth() const { return layers_.size(); }
  std::size_t embedding_dim() const { return readout_.out_dim(); }
  std::vector<GgmpLayer>& layers() { return layers_; }
  const std::vector<GgmpLayer>& layers() const { return layers_; }
  Mlp& input_embed() { return input_embed_; }
  Mlp& readout() { return readout_; }

  // Graph-level embedding; always unit norm.
  std::vector<double> encode(const BioGraph3D& graph, GgmpEncoderCache* cache) const {
    if (graph.n == 0) throw config_error("encode: empty graph");
    if (graph.kind != kind_)
      throw config_error(std::string("encode: ") + graph_kind_name(graph.kind) +
                         " graph given to " + graph_kind_name(kind_) + " encoder");
    const std::size_t nn = graph.n;
    const std::size_t dh = input_embed_.out_dim();

    if (cache) {
      cache->embed_node.resize(nn);
      cache->layers.resize(layers_.size());
      cache->n_nodes = nn;
    }

    DenseMatrix h(nn, dh);
    std::vector<double> row;
    MlpCache scratch;
    for (std::size_t i = 0; i < nn; ++i) {
      input_embed_.forward(graph.node_features.row(i),
                           cache ? cache->embed_node[i] : scratch, row);
      std::copy(row.begin(), row.end(), h.row_ptr(i));
    }

    std::vector<Vec3> x = graph.coords;
    std::vector<Vec3> n = graph.directions;
    DenseMatrix h_next;
    std::vector<Vec3> x_next, n_next;
    for (std::size_t t = 0; t < layers_.size(); ++t) {
      ggmp_forward(layers_[t], graph, h, x, n, h_next, x_next, n_next,
                   cache ? &cache->layers[t] : nullptr);
      h = std::move(h_next);
      x = std::move(x_next);
      n = std::move(n_next);
    }

    std::vector<double> pooled(dh, 0.0);
    for (std::size_t i = 0; i < nn; ++i) {
      const double* hp = h.row(i).data();
      for (std::size_t d = 0; d < dh; ++d) pooled[d] += hp[d];
    }
    const double inv_n = 1.0 / static_cast<double>(nn);
    for (double& v : pooled) v *= inv_n;

    std::vector<double> out;
    readout_.forward(pooled, cache ? cache->readout : scratch, out);

    double norm2 = 0.0;
    for (double v : out) norm2 += v * v;
    const double norm = std::sqrt(norm2);
    if (!(norm > 1e-12)) throw numeric_error("encode: degenerate readout norm");
    if (cache) {
      cache->pooled = pooled;
      cache->readout_out = out;
      cache->readout_norm = norm;
    }
    for (double& v : out) v /= norm;
    return out;
  }

  std::vector<double> encode(const BioGraph3D& graph) const { return encode(graph, nullptr); }

  GgmpEncoderGrads make_grads() const {
    GgmpEncoderGrads g;
    g.input_embed = input_embed_.make_grads();
    for (const GgmpLayer& l : layers_) g.layers.push_back(geocon::make_grads(l));
    g.readout = readout_.make_grads();
    return g;
  }

  // Backward from an upstream gradient on the unit embedding.
  void encode_backward(const BioGraph3D& graph, const GgmpEncoderCache& cache,
                       std::span<const double> upstream, GgmpEncoderGrads& grads) const {
    const std::size_t nn = cache.n_nodes;
    const std::size_t dh = input_embed_.out_dim();
    if (nn != graph.n || cache.layers.size() != layers_.size())
      throw config_error("encode_backward: cache does not match graph/encoder");
    if (upstream.size() != embedding_dim())
      throw config_error("encode_backward: upstream dimension mismatch");

    // h = r/|r|  =>  dL/dr = (g - (h.g) h)/|r|
    const double norm = cache.readout_norm;
    std::vector<double> unit(cache.readout_out);
    for (double& v : unit) v /= norm;
    double hg = 0.0;
    for (std::size_t d = 0; d < unit.size(); ++d) hg += unit[d] * upstream[d];
    std::vector<double> g_read(unit.size());
    for (std::size_t d = 0; d < unit.size(); ++d)
      g_read[d] = (upstream[d] - hg * unit[d]) / norm;

    std::vector<double> g_pooled;
    readout_.backward(cache.readout, g_read, grads.readout, g_pooled);

    const double inv_n = 1.0 / static_cast<double>(nn);
    DenseMatrix gh(nn, dh);
    for (std::size_t i = 0; i < nn; ++i) {
      double* row = gh.row_ptr(i);
      for (std::size_t d = 0; d < dh; ++d) row[d] = g_pooled[d] * inv_n;
    }
    std::vector<Vec3> gx(nn, Vec3{});
    std::vector<Vec3> gn(nn, Vec3{});

    DenseMatrix gh_prev;
    std::vector<Vec3> gx_prev, gn_prev;
    for (std::size_t t = layers_.size(); t-- > 0;) {
      ggmp_backward(layers_[t], graph, cache.layers[t], gh, gx, gn, grads.layers[t],
                    gh_prev, gx_prev, gn_prev);
      gh = std::move(gh_prev);
      gx = std::move(gx_prev);
      gn = std::move(gn_prev);
    }

    std::vector<double> dump;
    for (std::size_t i = 0; i < nn; ++i)
      input_embed_.backward(cache.embed_node[i], gh.row(i), grads.input_embed, dump);
  }

  // Stable slot order shared by the optimizer and checkpoint streams.
  void collect_params(GgmpEncoderGrads& grads, ParamSet& out) {
    auto push_mlp = [&out](Mlp& net, MlpGrads& g) {
      for (std::size_t l = 0; l < net.weights().size(); ++l) {
        out.push_back({&net.weights()[l], &g.w[l]});
        out.push_back({&net.biases()[l], &g.b[l]});
      }
    };
    push_mlp(input_embed_, grads.input_embed);
    for (std::size_t t = 0; t < layers_.size(); ++t) {
      GgmpLayer& l = layers_[t];
      GgmpLayerGrads& g = grads.layers[t];
      push_mlp(l.phi_m, g.phi_m);
      push_mlp(l.phi_g, g.phi_g);
      push_mlp(l.phi_h, g.phi_h);
      push_mlp(l.u_net, g.u_net);
      push_mlp(l.phi_x, g.phi_x);
      push_mlp(l.phi_n, g.phi_n);
    }
    push_mlp(readout_, grads.readout);
  }

  void save(std::ostream& os) const {
    serial::write_u8(os, static_cast<std::uint8_t>(kind_));
    serial::write_u64(os, layers_.size());
    input_embed_.save(os);
    for (const GgmpLayer& l : layers_) l.save(os);
    readout_.save(os);
  }

  void load(std::istream& is) {
    kind_ = static_cast<GraphKind>(serial::read_u8(is));
    const std::uint64_t depth = serial::read_u64(is);
    input_embed_.load(is);
    layers_.assign(depth, GgmpLayer{});
    for (auto& l : layers_) l.load(is);
    readout_.load(is);
  }

 private:
  GraphKind kind_ = GraphKind::pocket;
  Mlp input_embed_;
  std::vector<GgmpLayer> layers_;
  Mlp readout_;
};

}  // namespace geocon
