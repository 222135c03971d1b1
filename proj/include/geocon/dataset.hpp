// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <set>
#include <string>
#include <vector>

#include "geocon/bio_files.hpp"
#include "geocon/biograph.hpp"
#include "geocon/config.hpp"
#include "geocon/fingerprint.hpp"
#include "geocon/rng.hpp"

namespace geocon {

struct ComplexEntry {
  BioGraph3D pocket;
  BioGraph3D ligand;
  Fingerprint fp;
  std::string id;
  std::string pocket_path;
  std::string ligand_path;
};

// Aligned pocket/ligand/fingerprint triples; ids are manifest line numbers.
struct ComplexDataset {
  std::vector<ComplexEntry> entries;

  std::size_t size() const { return entries.size(); }
};

inline ComplexDataset load_dataset(const std::string& manifest_path,
                                   const TrainConfig& cfg) {
  const std::vector<ManifestEntry> manifest = parse_pair_manifest(manifest_path);
  if (manifest.empty()) throw data_error("empty manifest: " + manifest_path);

  ComplexDataset ds;
  ds.entries.reserve(manifest.size());
  for (const ManifestEntry& m : manifest) {
    try {
      PocketSpec pspec = parse_pocket_file(m.pocket_path);
      pspec.cut_radius = cfg.cut_radius;
      pspec.k = cfg.knn;
      const LigandSpec lspec = parse_ligand_file(m.ligand_path);
      ComplexEntry e;
      e.pocket = build_pocket_graph(pspec);
      e.ligand = build_ligand_graph(lspec);
      e.fp = fingerprint(lspec, cfg.fp_radius, cfg.fp_width);
      e.id = std::to_string(m.line_no);
      e.pocket_path = m.pocket_path;
      e.ligand_path = m.ligand_path;
      ds.entries.push_back(std::move(e));
    } catch (const data_error& err) {
      throw data_error(manifest_path + ":" + std::to_string(m.line_no) + ": " +
                       err.what());
    }
  }
  return ds;
}

// One anchor with its positive (the anchor's own ligand) and the dataset
// indices of its negatives; sims are Tanimoto(positive fp, negative fp).
struct AnchorPlan {
  std::size_t anchor = 0;
  std::vector<std::size_t> negatives;
  std::vector<double> sims;
};

struct BatchPlan {
  std::vector<std::size_t> pocket_items;  // dataset indices to encode as pockets
  std::vector<std::size_t> ligand_items;  // dataset indices to encode as ligands
  std::vector<AnchorPlan> anchors;
};

// Shuffled in-batch batching: every anchor pocket uses the other batch
// ligands as negatives (uniform sampling in expectation). The trailing
// partial batch is dropped. With cfg.global_negatives, negatives are drawn
// uniformly from the whole ligand set instead.
inline std::vector<BatchPlan> make_batches(const ComplexDataset& ds,
                                           const TrainConfig& cfg,
                                           std::uint64_t epoch_index) {
  require(ds.size() >= cfg.batch_size, "make_batches: dataset smaller than batch size");
  Rng rng = Rng(cfg.seed).stream("shuffle", epoch_index);

  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  const std::size_t n_batches = ds.size() / cfg.batch_size;
  std::vector<BatchPlan> plans;
  plans.reserve(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    BatchPlan plan;
    const std::size_t base = b * cfg.batch_size;
    for (std::size_t t = 0; t < cfg.batch_size; ++t)
      plan.pocket_items.push_back(order[base + t]);
    plan.ligand_items = plan.pocket_items;

    if (cfg.global_negatives) {
      const std::size_t n_neg =
          cfg.negatives > 0 ? cfg.negatives : cfg.batch_size - 1;
      for (std::size_t a = 0; a < cfg.batch_size; ++a) {
        AnchorPlan ap;
        ap.anchor = plan.pocket_items[a];
        while (ap.negatives.size() < n_neg) {
          const std::size_t cand = rng.uniform_index(ds.size());
          if (cand == ap.anchor) continue;
          ap.negatives.push_back(cand);
        }
        plan.anchors.push_back(std::move(ap));
      }
      // Global negatives must be encoded too.
      std::set<std::size_t> extra;
      for (const AnchorPlan& ap : plan.anchors)
        for (std::size_t g : ap.negatives) extra.insert(g);
      for (std::size_t item : plan.ligand_items) extra.erase(item);
      for (std::size_t g : extra) plan.ligand_items.push_back(g);
    } else {
      for (std::size_t a = 0; a < cfg.batch_size; ++a) {
        AnchorPlan ap;
        ap.anchor = plan.pocket_items[a];
        for (std::size_t t = 0; t < cfg.batch_size; ++t)
          if (t != a) ap.negatives.push_back(plan.pocket_items[t]);
        plan.anchors.push_back(std::move(ap));
      }
    }

    for (AnchorPlan& ap : plan.anchors) {
      ap.sims.reserve(ap.negatives.size());
      for (std::size_t neg : ap.negatives)
        ap.sims.push_back(tanimoto(ds.entries[ap.anchor].fp, ds.entries[neg].fp));
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

}  // namespace geocon
