// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "geocon/dataset.hpp"
#include "geocon/evalkit.hpp"
#include "geocon/rng.hpp"
#include "geocon/synth.hpp"
#include "test_helpers.hpp"

using namespace geocon;

namespace {

ScoredPairSet make_set(const std::vector<double>& pos, const std::vector<double>& neg) {
  ScoredPairSet s;
  for (double v : pos) s.pairs.push_back({v, true});
  for (double v : neg) s.pairs.push_back({v, false});
  return s;
}

// O(P*N) pairwise enumeration oracle, ties counted half.
double auc_oracle(const ScoredPairSet& s) {
  double wins = 0.0;
  std::size_t np = 0, nn = 0;
  for (const ScoredPair& p : s.pairs) {
    if (!p.positive) continue;
    ++np;
    for (const ScoredPair& q : s.pairs) {
      if (q.positive) continue;
      if (p.score > q.score) wins += 1.0;
      else if (p.score == q.score) wins += 0.5;
    }
  }
  for (const ScoredPair& q : s.pairs) nn += q.positive ? 0 : 1;
  return wins / (static_cast<double>(np) * static_cast<double>(nn));
}

}  // namespace

TEST_CASE("roc_auc basics", "[evalkit]") {
  CHECK(roc_auc(make_set({1, 1, 1}, {0, 0})) == 1.0);
  CHECK(roc_auc(make_set({0.5, 0.5}, {0.5, 0.5, 0.5})) == 0.5);
  // pos {0.9, 0.4} vs neg {0.6, 0.1}: 3 wins of 4 pairings
  CHECK(roc_auc(make_set({0.9, 0.4}, {0.6, 0.1})) == 0.75);

  ScoredPairSet single;
  single.pairs.push_back({1.0, true});
  CHECK_THROWS_AS(roc_auc(single), data_error);
}

TEST_CASE("roc_auc matches pairwise enumeration on random sets", "[evalkit]") {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    ScoredPairSet s;
    const std::size_t n = 5 + rng.uniform_index(196);
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      // coarse grid scores to force plenty of ties
      const double score = std::floor(rng.uniform(0.0, 8.0)) / 8.0;
      const bool positive = rng.uniform() < 0.4;
      has_pos = has_pos || positive;
      has_neg = has_neg || !positive;
      s.pairs.push_back({score, positive});
    }
    if (!has_pos || !has_neg) continue;
    CHECK(roc_auc(s) == Catch::Approx(auc_oracle(s)).margin(1e-12));
  }
}

TEST_CASE("roc_auc is invariant under strictly increasing transforms", "[evalkit]") {
  Rng rng(43);
  ScoredPairSet s;
  for (int i = 0; i < 60; ++i) s.pairs.push_back({rng.uniform(-2, 2), rng.uniform() < 0.5});
  if (s.count_positive() == 0) s.pairs.push_back({0.0, true});
  if (s.count_negative() == 0) s.pairs.push_back({0.0, false});
  const double base = roc_auc(s);
  ScoredPairSet t = s;
  for (ScoredPair& p : t.pairs) p.score = std::exp(3.0 * p.score) + 7.0;
  CHECK(roc_auc(t) == Catch::Approx(base).margin(1e-12));
}

TEST_CASE("roc_auc complement symmetry without ties", "[evalkit]") {
  Rng rng(47);
  ScoredPairSet s;
  for (int i = 0; i < 80; ++i)
    s.pairs.push_back({rng.uniform() + i * 1e-6, rng.uniform() < 0.5});
  if (s.count_positive() == 0) s.pairs[0].positive = true;
  if (s.count_negative() == 0) s.pairs[1].positive = false;
  ScoredPairSet flipped = s;
  for (ScoredPair& p : flipped.pairs) p.positive = !p.positive;
  CHECK(roc_auc(s) == Catch::Approx(1.0 - roc_auc(flipped)).margin(1e-12));
}

TEST_CASE("re_score: perfect ranking at 5% with 100 negatives", "[evalkit]") {
  std::vector<double> pos, neg;
  for (int i = 0; i < 20; ++i) pos.push_back(10.0 + i);
  for (int i = 0; i < 100; ++i) neg.push_back(static_cast<double>(i) / 100.0);
  CHECK(re_score(make_set(pos, neg), 0.05) == Catch::Approx(20.0));
}

TEST_CASE("re_score: constructed TPR 0.5 at FPR 0.05", "[evalkit]") {
  // 10 positives, 100 negatives. Top block: 5 positives, then 5 negatives
  // (FPR hits 0.05 there with TPR 0.5), rest far below.
  std::vector<double> pos, neg;
  for (int i = 0; i < 5; ++i) pos.push_back(100.0 + i);
  for (int i = 0; i < 5; ++i) pos.push_back(-100.0 - i);
  for (int i = 0; i < 5; ++i) neg.push_back(50.0 + i);
  for (int i = 0; i < 95; ++i) neg.push_back(-200.0 - i);
  CHECK(re_score(make_set(pos, neg), 0.05) == Catch::Approx(10.0));
}

TEST_CASE("re_score: random scores hover near 1", "[evalkit]") {
  Rng rng(53);
  std::vector<double> pos, neg;
  for (int i = 0; i < 5000; ++i) pos.push_back(rng.uniform());
  for (int i = 0; i < 5000; ++i) neg.push_back(rng.uniform());
  const double re = re_score(make_set(pos, neg), 0.05);
  CHECK(re == Catch::Approx(1.0).margin(0.3));
}

TEST_CASE("re_score rejects unrealizable levels", "[evalkit]") {
  std::vector<double> pos{1, 2, 3};
  std::vector<double> neg{0.1, 0.2, 0.3, 0.4, 0.5, 0.15, 0.25, 0.35, 0.45, 0.05};
  CHECK_THROWS_AS(re_score(make_set(pos, neg), 0.005), data_error);
  CHECK_NOTHROW(re_score(make_set(pos, neg), 0.10));
}

TEST_CASE("screen errors when no RE level is realizable", "[evalkit]") {
  // 10 decoys: even the 5% level needs at least 20 negatives.
  test::TempDir tmp("screen_small");
  SynthSpec spec;
  spec.out_dir = tmp.file("d");
  spec.families = 2;
  spec.per_family = 6;
  spec.seed = 3;
  const SynthResult sr = gen_synth(spec);

  TrainConfig cfg;
  cfg.depth = 1;
  cfg.hidden_dim = 8;
  cfg.message_dim = 8;
  cfg.phi_hidden = 8;
  cfg.knn = 4;
  Rng rng(5);
  Checkpoint ck;
  ck.config = cfg;
  ck.pocket_encoder = GgmpEncoder::make(encoder_config(cfg, GraphKind::pocket), rng);
  ck.ligand_encoder = GgmpEncoder::make(encoder_config(cfg, GraphKind::ligand), rng);

  std::ofstream lm(tmp.file("d/lib.txt"));
  for (std::size_t i = 0; i < sr.entries.size(); ++i)
    lm << sr.entries[i].ligand_file << ' ' << (sr.entries[i].family == 0 ? 1 : 0) << "\n";
  lm.close();
  // 6 actives, 6 decoys -> all four levels unrealizable
  CHECK_THROWS_AS(
      screen(ck, tmp.file("d/" + sr.entries[0].pocket_file), tmp.file("d/lib.txt")),
      data_error);
}

TEST_CASE("training does not hurt pocket-matching AUC", "[evalkit]") {
  // All self-pairs positive, cross-family pairs negative: a trained model
  // must score at least as well as its own initialization.
  test::TempDir tmp("cmp");
  SynthSpec spec;
  spec.out_dir = tmp.file("d");
  spec.families = 2;
  spec.per_family = 6;
  spec.seed = 21;
  const SynthResult sr = gen_synth(spec);

  TrainConfig cfg;
  cfg.seed = 2;
  cfg.batch_size = 6;
  cfg.loss = LossKind::chem;
  cfg.depth = 1;
  cfg.hidden_dim = 12;
  cfg.message_dim = 12;
  cfg.phi_hidden = 12;
  cfg.knn = 4;
  cfg.learning_rate = 1e-3;
  const ComplexDataset ds = load_dataset(sr.manifest_path, cfg);

  std::string pairs;
  for (std::size_t i = 0; i < 6; ++i) {
    pairs += sr.entries[i].pocket_file + " " + sr.entries[i].pocket_file + " 1\n";
    pairs += sr.entries[i].pocket_file + " " + sr.entries[6 + i].pocket_file + " 0\n";
  }
  test::write_text(tmp.file("d/pairs.txt"), pairs);

  TrainConfig zero = cfg;
  zero.epochs = 0;
  const Checkpoint untrained =
      train(zero, ds, tmp.file("out0")).checkpoint;
  TrainConfig six = cfg;
  six.epochs = 6;
  const Checkpoint trained = train(six, ds, tmp.file("out6")).checkpoint;

  const double auc_untrained = pocket_match(untrained, tmp.file("d/pairs.txt")).auc;
  const double auc_trained = pocket_match(trained, tmp.file("d/pairs.txt")).auc;
  CHECK(auc_trained >= auc_untrained);
}

TEST_CASE("pocket_match: self-pairs score one, single-class errors", "[evalkit]") {
  test::TempDir tmp("match");
  SynthSpec spec;
  spec.out_dir = tmp.file("d");
  spec.families = 2;
  spec.per_family = 3;
  spec.seed = 9;
  const SynthResult sr = gen_synth(spec);

  TrainConfig cfg;
  cfg.depth = 1;
  cfg.hidden_dim = 8;
  cfg.message_dim = 8;
  cfg.phi_hidden = 8;
  cfg.knn = 4;
  Rng rng(6);
  Checkpoint ck;
  ck.config = cfg;
  ck.pocket_encoder = GgmpEncoder::make(encoder_config(cfg, GraphKind::pocket), rng);
  ck.ligand_encoder = GgmpEncoder::make(encoder_config(cfg, GraphKind::ligand), rng);

  const std::string p0 = sr.entries[0].pocket_file;
  const std::string p1 = sr.entries[3].pocket_file;
  test::write_text(tmp.file("d/pairs.txt"),
                   p0 + " " + p0 + " 1\n" + p0 + " " + p1 + " 0\n");
  const MatchResult res = pocket_match(ck, tmp.file("d/pairs.txt"));
  REQUIRE(res.records.size() == 2);
  CHECK(res.records[0].score == Catch::Approx(1.0).margin(1e-9));
  CHECK(res.auc >= 0.0);

  // single-class manifest
  test::write_text(tmp.file("d/one.txt"), p0 + " " + p1 + " 1\n");
  CHECK_THROWS_AS(pocket_match(ck, tmp.file("d/one.txt")), data_error);

  // an unreadable pocket is reported with its manifest line
  test::write_text(tmp.file("d/miss.txt"),
                   p0 + " " + p0 + " 1\nmissing.pkt " + p1 + " 0\n");
  try {
    pocket_match(ck, tmp.file("d/miss.txt"));
    FAIL("expected data_error");
  } catch (const data_error& e) {
    CHECK(std::string(e.what()).find("miss.txt:2:") != std::string::npos);
  }
}
