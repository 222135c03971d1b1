// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "geocon/checkpoint.hpp"
#include "geocon/contrast.hpp"
#include "geocon/dataset.hpp"
#include "geocon/ggmp.hpp"
#include "geocon/parallel.hpp"

namespace geocon {

struct EpochMetrics {
  std::uint64_t epoch = 0;
  double loss = 0.0;
  double pos_cos = 0.0;
  double neg_cos = 0.0;
  double zero_weight_frac = 0.0;
  std::uint64_t wall_ms = 0;

  std::string json_line() const {
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "{\"epoch\":%llu,\"loss\":%.17g,\"pos_cos\":%.17g,"
                  "\"neg_cos\":%.17g,\"zero_weight_frac\":%.17g,\"wall_ms\":%llu}",
                  static_cast<unsigned long long>(epoch), loss, pos_cos, neg_cos,
                  zero_weight_frac, static_cast<unsigned long long>(wall_ms));
    return buf;
  }
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochMetrics> metrics;
  std::string checkpoint_path;
  std::string metrics_path;
};

namespace train_detail {

struct BatchStats {
  double loss_sum = 0.0;
  double pos_cos_sum = 0.0;
  double neg_cos_sum = 0.0;
  std::size_t anchor_count = 0;
  std::size_t neg_count = 0;
  std::size_t zero_weight_count = 0;
  std::size_t fallback_count = 0;
};

// One optimization step over a batch plan. Three phases:
//   1. embed every item (parallel, pure),
//   2. losses + embedding gradients (serial, cheap),
//   3. cached re-encode + backward per item in bounded waves, reduced into
//      the master gradients in item order.
inline BatchStats run_batch(const TrainConfig& cfg, const ComplexDataset& ds,
                            const BatchPlan& plan, const GgmpEncoder& pocket_enc,
                            const GgmpEncoder& ligand_enc,
                            GgmpEncoderGrads& pocket_grads,
                            GgmpEncoderGrads& ligand_grads, std::size_t threads) {
  const std::size_t n_pockets = plan.pocket_items.size();
  const std::size_t n_ligands = plan.ligand_items.size();
  const std::size_t n_items = n_pockets + n_ligands;

  auto item_graph = [&](std::size_t t) -> const BioGraph3D& {
    return t < n_pockets ? ds.entries[plan.pocket_items[t]].pocket
                         : ds.entries[plan.ligand_items[t - n_pockets]].ligand;
  };
  auto item_encoder = [&](std::size_t t) -> const GgmpEncoder& {
    return t < n_pockets ? pocket_enc : ligand_enc;
  };

  // Phase 1: plain forward embeddings.
  std::vector<std::vector<double>> emb(n_items);
  parallel_waves(
      n_items, threads,
      [&](std::size_t t) { emb[t] = item_encoder(t).encode(item_graph(t)); }, nullptr);

  std::unordered_map<std::size_t, std::size_t> pocket_slot, ligand_slot;
  for (std::size_t t = 0; t < n_pockets; ++t) pocket_slot[plan.pocket_items[t]] = t;
  for (std::size_t t = 0; t < n_ligands; ++t)
    ligand_slot[plan.ligand_items[t]] = n_pockets + t;

  // Phase 2: losses and gradients with respect to the unit embeddings.
  const std::size_t dirs = cfg.symmetric ? 2 : 1;
  const double scale =
      1.0 / static_cast<double>(plan.anchors.size() * dirs);
  std::vector<std::vector<double>> emb_grad(n_items);
  for (std::size_t t = 0; t < n_items; ++t) emb_grad[t].assign(emb[t].size(), 0.0);

  BatchStats stats;
  auto add_scaled = [](std::vector<double>& dst, const std::vector<double>& src,
                       double s) {
    for (std::size_t d = 0; d < dst.size(); ++d) dst[d] += s * src[d];
  };

  for (const AnchorPlan& ap : plan.anchors) {
    ContrastBatch b;
    b.gamma = cfg.gamma;
    b.tau = cfg.tau;
    b.tau_plus = cfg.tau_plus;
    b.q = cfg.q;
    b.chem_prefactor = cfg.chem_prefactor;
    b.sims = ap.sims;

    const std::size_t a_pocket = pocket_slot.at(ap.anchor);
    const std::size_t a_ligand = ligand_slot.at(ap.anchor);
    b.anchor = emb[a_pocket];
    b.positive = emb[a_ligand];
    b.negatives.clear();
    b.negatives.reserve(ap.negatives.size());
    for (std::size_t neg : ap.negatives) b.negatives.push_back(emb[ligand_slot.at(neg)]);

    LossReport report = compute_loss(cfg.loss, b);
    stats.loss_sum += report.loss;
    stats.pos_cos_sum += dot(b.anchor, b.positive);
    for (const auto& negv : b.negatives) stats.neg_cos_sum += dot(b.anchor, negv);
    ++stats.anchor_count;
    stats.neg_count += ap.negatives.size();
    for (double r : report.rho) stats.zero_weight_count += r == 0.0 ? 1 : 0;
    stats.fallback_count += report.uniform_fallback ? 1 : 0;

    add_scaled(emb_grad[a_pocket], report.grad_anchor, scale);
    add_scaled(emb_grad[a_ligand], report.grad_positive, scale);
    for (std::size_t i = 0; i < ap.negatives.size(); ++i)
      add_scaled(emb_grad[ligand_slot.at(ap.negatives[i])], report.grad_negatives[i],
                 scale);

    if (cfg.symmetric) {
      // Mirrored direction: ligand anchors contrast against pockets, with
      // the same ligand-chemistry weights standing in for pocket similarity.
      ContrastBatch rb = b;
      rb.anchor = emb[a_ligand];
      rb.positive = emb[a_pocket];
      rb.negatives.clear();
      for (std::size_t neg : ap.negatives)
        rb.negatives.push_back(emb[pocket_slot.at(neg)]);
      LossReport rrep = compute_loss(cfg.loss, rb);
      stats.loss_sum += rrep.loss;
      add_scaled(emb_grad[a_ligand], rrep.grad_anchor, scale);
      add_scaled(emb_grad[a_pocket], rrep.grad_positive, scale);
      for (std::size_t i = 0; i < ap.negatives.size(); ++i)
        add_scaled(emb_grad[pocket_slot.at(ap.negatives[i])], rrep.grad_negatives[i],
                   scale);
    }
  }

  // Phase 3: backward per item, reduced deterministically. Items within a
  // wave write distinct slots (t % width), post adds them in item order.
  const std::size_t width = std::max<std::size_t>(1, threads);
  std::vector<GgmpEncoderGrads> slot(width);
  parallel_waves(
      n_items, width,
      [&](std::size_t t) {
        GgmpEncoderGrads& g = slot[t % width];
        g = item_encoder(t).make_grads();
        bool zero = true;
        for (double v : emb_grad[t])
          if (v != 0.0) {
            zero = false;
            break;
          }
        if (zero) return;
        GgmpEncoderCache cache;
        const GgmpEncoder& enc = item_encoder(t);
        enc.encode(item_graph(t), &cache);
        enc.encode_backward(item_graph(t), cache, emb_grad[t], g);
      },
      [&](std::size_t t) {
        const GgmpEncoderGrads& g = slot[t % width];
        if (t < n_pockets)
          pocket_grads.add(g);
        else
          ligand_grads.add(g);
      });
  return stats;
}

}  // namespace train_detail

inline GgmpEncoderConfig encoder_config(const TrainConfig& cfg, GraphKind kind) {
  GgmpEncoderConfig ec;
  ec.kind = kind;
  ec.depth = cfg.depth;
  ec.dims.node_feat = kNodeFeatureDim;
  ec.dims.edge_feat = kEdgeFeatureDim;
  ec.dims.hidden = cfg.hidden_dim;
  ec.dims.message = cfg.message_dim;
  ec.dims.phi_hidden = cfg.phi_hidden;
  ec.dims.phi_depth = cfg.phi_depth;
  ec.lambda = cfg.lambda;
  return ec;
}

// Co-supervised pretraining: encode pockets and ligands, contrast bound
// pairs against in-batch negatives, step both encoders. Writes
// metrics.jsonl and checkpoint.bin under out_dir. Fixed seed + fixed
// dataset reproduces the metrics log bit-exactly (wall_ms aside) for any
// GEOCON_THREADS.
inline TrainResult train(const TrainConfig& cfg, const ComplexDataset& ds,
                         const std::string& out_dir,
                         const Checkpoint* resume = nullptr,
                         const std::function<void(const EpochMetrics&)>& on_epoch = nullptr) {
  cfg.validate();
  if (cfg.symmetric && cfg.global_negatives)
    throw config_error("train: symmetric loss requires in-batch negatives");
  if (ds.size() < cfg.batch_size)
    throw data_error("train: dataset size " + std::to_string(ds.size()) +
                     " smaller than batch size " + std::to_string(cfg.batch_size));

  TrainResult result;
  Checkpoint& ck = result.checkpoint;
  ck.config = cfg;
  if (resume) {
    if (resume->pocket_encoder.depth() != cfg.depth ||
        resume->pocket_encoder.embedding_dim() != cfg.hidden_dim)
      throw config_error("train: resume checkpoint architecture (depth " +
                         std::to_string(resume->pocket_encoder.depth()) + ", dim " +
                         std::to_string(resume->pocket_encoder.embedding_dim()) +
                         ") does not match the requested config");
    ck = *resume;
    ck.config = cfg;
  } else {
    Rng seed_rng(cfg.seed);
    Rng pocket_rng = seed_rng.stream("init-pocket");
    Rng ligand_rng = seed_rng.stream("init-ligand");
    ck.pocket_encoder = GgmpEncoder::make(encoder_config(cfg, GraphKind::pocket), pocket_rng);
    ck.ligand_encoder = GgmpEncoder::make(encoder_config(cfg, GraphKind::ligand), ligand_rng);
    ck.optimizer = Optimizer(cfg.optimizer, cfg.learning_rate);
    ck.epoch = 0;
  }

  GgmpEncoderGrads pocket_grads = ck.pocket_encoder.make_grads();
  GgmpEncoderGrads ligand_grads = ck.ligand_encoder.make_grads();
  ParamSet params;
  ck.pocket_encoder.collect_params(pocket_grads, params);
  ck.ligand_encoder.collect_params(ligand_grads, params);
  if (resume)
    ck.optimizer.attach(params);
  else
    ck.optimizer.bind(params);

  std::filesystem::create_directories(out_dir);
  result.metrics_path = (std::filesystem::path(out_dir) / "metrics.jsonl").string();
  result.checkpoint_path = (std::filesystem::path(out_dir) / "checkpoint.bin").string();
  std::ofstream metrics_os(result.metrics_path);
  if (!metrics_os) throw data_error("cannot write metrics: " + result.metrics_path);

  const std::size_t threads = worker_count();
  const std::uint64_t first_epoch = ck.epoch + 1;
  for (std::uint64_t epoch = first_epoch; epoch < first_epoch + cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<BatchPlan> plans = make_batches(ds, cfg, epoch);
    train_detail::BatchStats totals;
    for (std::size_t bi = 0; bi < plans.size(); ++bi) {
      train_detail::BatchStats s;
      try {
        s = train_detail::run_batch(cfg, ds, plans[bi], ck.pocket_encoder,
                                    ck.ligand_encoder, pocket_grads, ligand_grads,
                                    threads);
      } catch (const numeric_error& err) {
        throw numeric_error("train: numerical fault at epoch " + std::to_string(epoch) +
                            " batch " + std::to_string(bi) + ": " + err.what());
      }
      const double batch_loss =
          s.loss_sum / static_cast<double>(s.anchor_count * (cfg.symmetric ? 2 : 1));
      if (!std::isfinite(batch_loss))
        throw numeric_error("train: NaN loss at epoch " + std::to_string(epoch) +
                            " batch " + std::to_string(bi));
      ck.optimizer.step(params);
      totals.loss_sum += s.loss_sum;
      totals.pos_cos_sum += s.pos_cos_sum;
      totals.neg_cos_sum += s.neg_cos_sum;
      totals.anchor_count += s.anchor_count;
      totals.neg_count += s.neg_count;
      totals.zero_weight_count += s.zero_weight_count;
      totals.fallback_count += s.fallback_count;
    }
    if (totals.fallback_count > 0)
      std::fprintf(stderr,
                   "geocon: warning: %zu anchors fell back to uniform weights "
                   "(all chem weights zero) in epoch %llu\n",
                   totals.fallback_count, static_cast<unsigned long long>(epoch));

    EpochMetrics m;
    m.epoch = epoch;
    const double denom =
        static_cast<double>(totals.anchor_count * (cfg.symmetric ? 2 : 1));
    m.loss = totals.loss_sum / denom;
    m.pos_cos = totals.pos_cos_sum / static_cast<double>(totals.anchor_count);
    m.neg_cos = totals.neg_cos_sum / static_cast<double>(totals.neg_count);
    m.zero_weight_frac =
        static_cast<double>(totals.zero_weight_count) / static_cast<double>(totals.neg_count);
    m.wall_ms = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - t0)
            .count());
    metrics_os << m.json_line() << "\n";
    metrics_os.flush();
    result.metrics.push_back(m);
    if (on_epoch) on_epoch(m);

    ck.epoch = epoch;
    ck.last_loss = m.loss;
    ck.last_pos_cos = m.pos_cos;
    ck.last_neg_cos = m.neg_cos;
    ck.last_zero_weight_frac = m.zero_weight_frac;
    if (cfg.checkpoint_interval > 0 &&
        (epoch - first_epoch + 1) % cfg.checkpoint_interval == 0) {
      const std::string path =
          (std::filesystem::path(out_dir) / ("checkpoint_epoch" + std::to_string(epoch) + ".bin"))
              .string();
      ck.save(path);
    }
  }

  ck.save(result.checkpoint_path);
  return result;
}

// Embedding service over a trained checkpoint.
inline std::vector<double> embed_graph(const Checkpoint& ck, const BioGraph3D& graph,
                                       GraphKind kind) {
  if (graph.kind != kind)
    throw config_error(std::string("embed: ") + graph_kind_name(graph.kind) +
                       " graph does not match requested kind " + graph_kind_name(kind));
  return kind == GraphKind::pocket ? ck.pocket_encoder.encode(graph)
                                   : ck.ligand_encoder.encode(graph);
}

inline BioGraph3D load_pocket_graph(const Checkpoint& ck, const std::string& path) {
  PocketSpec spec = parse_pocket_file(path);
  spec.cut_radius = ck.config.cut_radius;
  spec.k = ck.config.knn;
  return build_pocket_graph(spec);
}

inline BioGraph3D load_ligand_graph(const std::string& path) {
  return build_ligand_graph(parse_ligand_file(path));
}

}  // namespace geocon
