// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "geocon/common.hpp"
#include "geocon/parallel.hpp"
#include "geocon/trainer.hpp"

namespace geocon {

struct ScoredPair {
  double score = 0.0;
  bool positive = false;
};

// Scores with binary labels; needs at least one of each class for AUC.
struct ScoredPairSet {
  std::vector<ScoredPair> pairs;

  std::size_t count_positive() const {
    std::size_t c = 0;
    for (const ScoredPair& p : pairs) c += p.positive ? 1 : 0;
    return c;
  }
  std::size_t count_negative() const { return pairs.size() - count_positive(); }

  void validate() const {
    for (const ScoredPair& p : pairs)
      if (!std::isfinite(p.score)) throw data_error("ScoredPairSet: non-finite score");
    if (count_positive() == 0 || count_negative() == 0)
      throw data_error("ScoredPairSet: need both classes");
  }
};

// Mann-Whitney AUC: probability that a random positive outscores a random
// negative, ties counted half. Rank-sum form, O(n log n).
inline double roc_auc(const ScoredPairSet& set) {
  set.validate();
  const std::size_t n = set.pairs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return set.pairs[a].score < set.pairs[b].score;
  });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && set.pairs[order[j]].score == set.pairs[order[i]].score) ++j;
    // average rank of the tie group, 1-based
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t)
      if (set.pairs[order[t]].positive) rank_sum_pos += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(set.count_positive());
  const double nn = static_cast<double>(set.count_negative());
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

// RE at an FPR level: sweep thresholds from high score down, stop at the
// first threshold whose FPR reaches the level, and return TPR/FPR there.
// A level below 1/N_neg is not realizable and raises an error.
inline double re_score(const ScoredPairSet& set, double fpr_level) {
  set.validate();
  require(fpr_level > 0.0 && fpr_level < 1.0, "re_score: level must lie in (0,1)");
  const double n_neg = static_cast<double>(set.count_negative());
  const double n_pos = static_cast<double>(set.count_positive());
  if (fpr_level < 1.0 / n_neg)
    throw data_error("re_score: FPR level " + std::to_string(fpr_level) +
                     " not realizable with " + std::to_string(set.count_negative()) +
                     " negatives");

  std::vector<ScoredPair> sorted = set.pairs;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredPair& a, const ScoredPair& b) { return a.score > b.score; });

  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      if (sorted[j].positive)
        ++tp;
      else
        ++fp;
      ++j;
    }
    const double fpr = static_cast<double>(fp) / n_neg;
    if (fpr >= fpr_level) {
      const double tpr = static_cast<double>(tp) / n_pos;
      return tpr / fpr;
    }
    i = j;
  }
  throw data_error("re_score: threshold sweep never reached the FPR level");
}

inline constexpr double kScreenLevels[] = {0.005, 0.01, 0.02, 0.05};

struct ScreenResult {
  double auc = 0.0;
  std::map<double, double> re_at;  // realizable FPR levels only
};

struct MatchRecord {
  std::string pocket_a;
  std::string pocket_b;
  bool positive = false;
  double score = 0.0;
};

struct MatchResult {
  std::vector<MatchRecord> records;
  ScoredPairSet set;
  double auc = 0.0;
};

namespace eval_detail {

// Embed each distinct pocket once. Graphs are built serially so parse
// failures can name their manifest line; encoding runs in parallel.
inline std::map<std::string, std::vector<double>> embed_pockets(
    const Checkpoint& ck, const std::vector<std::pair<std::string, std::size_t>>& paths,
    const std::string& manifest) {
  std::vector<std::string> distinct;
  std::vector<BioGraph3D> graphs;
  std::map<std::string, std::size_t> index;
  for (const auto& [path, line] : paths) {
    if (!index.emplace(path, distinct.size()).second) continue;
    distinct.push_back(path);
    try {
      graphs.push_back(load_pocket_graph(ck, path));
    } catch (const data_error& err) {
      throw data_error(manifest + ":" + std::to_string(line) + ": " + err.what());
    }
  }
  std::vector<std::vector<double>> emb(distinct.size());
  parallel_waves(
      distinct.size(), worker_count(),
      [&](std::size_t t) { emb[t] = ck.pocket_encoder.encode(graphs[t]); }, nullptr);
  std::map<std::string, std::vector<double>> out;
  for (const auto& [path, idx] : index) out[path] = std::move(emb[idx]);
  return out;
}

}  // namespace eval_detail

// Pocket matching over a pair manifest `pocketA pocketB 0|1`; the score of
// a pair is the cosine of the two pocket embeddings.
inline MatchResult pocket_match(const Checkpoint& ck, const std::string& pairs_path) {
  std::ifstream is(pairs_path);
  if (!is) throw data_error("cannot open pairs manifest: " + pairs_path);
  const std::filesystem::path base = std::filesystem::path(pairs_path).parent_path();

  MatchResult result;
  std::vector<std::pair<std::string, std::size_t>> paths;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    bool blank = true;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (blank) continue;
    std::istringstream ss(line);
    std::string a, b;
    int label = -1;
    if (!(ss >> a >> b >> label) || (label != 0 && label != 1))
      throw data_error(pairs_path + ":" + std::to_string(line_no) +
                       ": expected 'pocketA pocketB 0|1'");
    MatchRecord rec;
    rec.pocket_a = (base / a).string();
    rec.pocket_b = (base / b).string();
    rec.positive = label == 1;
    paths.emplace_back(rec.pocket_a, line_no);
    paths.emplace_back(rec.pocket_b, line_no);
    result.records.push_back(std::move(rec));
  }
  if (result.records.empty()) throw data_error("empty pairs manifest: " + pairs_path);

  const std::map<std::string, std::vector<double>> emb =
      eval_detail::embed_pockets(ck, paths, pairs_path);

  for (MatchRecord& r : result.records) {
    r.score = dot(emb.at(r.pocket_a), emb.at(r.pocket_b));
    result.set.pairs.push_back({r.score, r.positive});
  }
  result.auc = roc_auc(result.set);
  return result;
}

struct ScreenRecord {
  std::string ligand_path;
  bool active = false;
  double score = 0.0;
};

struct ScreenDetail {
  ScreenResult result;
  std::vector<ScreenRecord> records;
};

// Virtual screening: rank a labelled ligand library (`ligand_path 0|1`)
// by cosine against one target pocket; reports AUC and the RE scores at
// the realizable 0.5/1/2/5% FPR levels.
inline ScreenDetail screen(const Checkpoint& ck, const std::string& pocket_path,
                           const std::string& ligands_path) {
  std::ifstream is(ligands_path);
  if (!is) throw data_error("cannot open ligand manifest: " + ligands_path);
  const std::filesystem::path base = std::filesystem::path(ligands_path).parent_path();

  ScreenDetail detail;
  std::vector<BioGraph3D> graphs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    bool blank = true;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (blank) continue;
    std::istringstream ss(line);
    std::string path;
    int label = -1;
    if (!(ss >> path >> label) || (label != 0 && label != 1))
      throw data_error(ligands_path + ":" + std::to_string(line_no) +
                       ": expected 'ligand_path 0|1' (missing label?)");
    detail.records.push_back({(base / path).string(), label == 1, 0.0});
    try {
      graphs.push_back(load_ligand_graph(detail.records.back().ligand_path));
    } catch (const data_error& err) {
      throw data_error(ligands_path + ":" + std::to_string(line_no) + ": " + err.what());
    }
  }
  if (detail.records.empty()) throw data_error("empty ligand manifest: " + ligands_path);

  const std::vector<double> pocket_emb =
      ck.pocket_encoder.encode(load_pocket_graph(ck, pocket_path));

  std::vector<std::vector<double>> lig_emb(detail.records.size());
  parallel_waves(
      detail.records.size(), worker_count(),
      [&](std::size_t t) { lig_emb[t] = ck.ligand_encoder.encode(graphs[t]); },
      nullptr);

  ScoredPairSet set;
  for (std::size_t t = 0; t < detail.records.size(); ++t) {
    detail.records[t].score = dot(pocket_emb, lig_emb[t]);
    set.pairs.push_back({detail.records[t].score, detail.records[t].active});
  }
  detail.result.auc = roc_auc(set);

  const double n_neg = static_cast<double>(set.count_negative());
  bool any = false;
  for (double level : kScreenLevels) {
    if (level < 1.0 / n_neg) continue;  // not realizable at this library size
    detail.result.re_at[level] = re_score(set, level);
    any = true;
  }
  if (!any)
    throw data_error("screen: no RE level (0.5/1/2/5%) realizable with " +
                     std::to_string(set.count_negative()) + " decoys");
  return detail;
}

}  // namespace geocon
