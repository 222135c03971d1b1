// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <set>

#include "geocon/dataset.hpp"
#include "geocon/synth.hpp"
#include "geocon/trainer.hpp"
#include "test_helpers.hpp"

using namespace geocon;

namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.seed = 3;
  cfg.epochs = 2;
  cfg.batch_size = 6;
  cfg.loss = LossKind::chem;
  cfg.depth = 1;
  cfg.hidden_dim = 12;
  cfg.message_dim = 12;
  cfg.phi_hidden = 12;
  cfg.knn = 4;
  cfg.learning_rate = 1e-3;
  return cfg;
}

std::string normalized_metrics(const std::string& path) {
  std::ifstream is(path);
  std::string line, out;
  while (std::getline(is, line)) {
    const auto p = line.find("\"wall_ms\":");
    if (p != std::string::npos) line = line.substr(0, p) + "\"wall_ms\":0}";
    out += line + "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("load_dataset: counts, errors, shared fingerprints", "[pretrain]") {
  test::TempDir tmp("dataset");
  SynthSpec spec;
  spec.out_dir = tmp.file("d");
  spec.families = 2;
  spec.per_family = 3;
  spec.seed = 1;
  const SynthResult sr = gen_synth(spec);

  const TrainConfig cfg = tiny_config();
  const ComplexDataset ds = load_dataset(sr.manifest_path, cfg);
  CHECK(ds.size() == 6);

  // empty manifest
  test::write_text(tmp.file("empty.txt"), "\n");
  CHECK_THROWS_AS(load_dataset(tmp.file("empty.txt"), cfg), data_error);

  // a failing line is named
  test::write_text(tmp.file("bad.txt"),
                   sr.entries[0].pocket_file + " " + sr.entries[0].ligand_file +
                       "\nmissing.pkt missing.lig\n");
  // paths in bad.txt resolve against tmp root, so line 1 fails
  try {
    load_dataset(tmp.file("bad.txt"), cfg);
    FAIL("expected data_error");
  } catch (const data_error& e) {
    CHECK(std::string(e.what()).find(":1:") != std::string::npos);
  }

  // duplicate ligand file -> two entries share one fingerprint value
  test::write_text(tmp.file("dup.txt"),
                   "d/" + sr.entries[0].pocket_file + " d/" + sr.entries[0].ligand_file +
                       "\n" + "d/" + sr.entries[1].pocket_file + " d/" +
                       sr.entries[0].ligand_file + "\n");
  const ComplexDataset dup = load_dataset(tmp.file("dup.txt"), cfg);
  REQUIRE(dup.size() == 2);
  CHECK(dup.entries[0].fp == dup.entries[1].fp);
  CHECK(tanimoto(dup.entries[0].fp, dup.entries[1].fp) == 1.0);
}

TEST_CASE("make_batches: shapes, determinism, in-batch negatives", "[pretrain]") {
  test::TempDir tmp("batches");
  SynthSpec spec;
  spec.out_dir = tmp.file("d");
  spec.families = 2;
  spec.per_family = 4;
  spec.seed = 2;
  const SynthResult sr = gen_synth(spec);
  TrainConfig cfg = tiny_config();
  cfg.batch_size = 2;
  const ComplexDataset ds = load_dataset(sr.manifest_path, cfg);

  const auto plans = make_batches(ds, cfg, 1);
  REQUIRE(plans.size() == 4);
  for (const BatchPlan& p : plans) {
    REQUIRE(p.anchors.size() == 2);
    for (const AnchorPlan& a : p.anchors) {
      CHECK(a.negatives.size() == 1);  // batch size 2 -> one negative
      CHECK(a.sims.size() == 1);
      CHECK(a.negatives[0] != a.anchor);
    }
  }

  // same seed -> identical sequence
  const auto again = make_batches(ds, cfg, 1);
  for (std::size_t b = 0; b < plans.size(); ++b) {
    CHECK(plans[b].pocket_items == again[b].pocket_items);
    for (std::size_t a = 0; a < plans[b].anchors.size(); ++a)
      CHECK(plans[b].anchors[a].negatives == again[b].anchors[a].negatives);
  }

  // different epoch -> different shuffle (almost surely)
  const auto other = make_batches(ds, cfg, 2);
  bool any_diff = false;
  for (std::size_t b = 0; b < plans.size(); ++b)
    any_diff = any_diff || plans[b].pocket_items != other[b].pocket_items;
  CHECK(any_diff);

  cfg.batch_size = 100;
  CHECK_THROWS_AS(make_batches(ds, cfg, 1), config_error);
}

TEST_CASE("duplicate positive in a batch is silenced under chem loss", "[pretrain]") {
  test::TempDir tmp("dupneg");
  SynthSpec spec;
  spec.out_dir = tmp.file("d");
  spec.families = 2;
  spec.per_family = 2;
  spec.seed = 4;
  const SynthResult sr = gen_synth(spec);

  // two complexes share one ligand file; force them into one batch
  test::write_text(tmp.file("m.txt"),
                   "d/" + sr.entries[0].pocket_file + " d/" + sr.entries[0].ligand_file +
                       "\n" + "d/" + sr.entries[1].pocket_file + " d/" +
                       sr.entries[0].ligand_file + "\n");
  TrainConfig cfg = tiny_config();
  cfg.batch_size = 2;
  cfg.tau = 0.0;
  const ComplexDataset ds = load_dataset(tmp.file("m.txt"), cfg);
  const auto plans = make_batches(ds, cfg, 1);
  REQUIRE(plans.size() == 1);
  for (const AnchorPlan& a : plans[0].anchors) {
    REQUIRE(a.sims.size() == 1);
    CHECK(a.sims[0] == 1.0);  // identical fingerprint
    const auto [w, rho] = chem_weights(a.sims, cfg.tau);
    CHECK(w[0] == 0.0);
  }
}

TEST_CASE("train: zero epochs produces the initialization checkpoint", "[pretrain]") {
  test::TempDir tmp("train0");
  SynthSpec spec;
  spec.out_dir = tmp.file("d");
  spec.families = 2;
  spec.per_family = 4;
  spec.seed = 5;
  const SynthResult sr = gen_synth(spec);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 0;
  const ComplexDataset ds = load_dataset(sr.manifest_path, cfg);
  const TrainResult result = train(cfg, ds, tmp.file("out"));
  CHECK(result.metrics.empty());
  CHECK(result.checkpoint.epoch == 0);

  Rng seed_rng(cfg.seed);
  Rng pocket_rng = seed_rng.stream("init-pocket");
  const GgmpEncoder fresh =
      GgmpEncoder::make(encoder_config(cfg, GraphKind::pocket), pocket_rng);
  CHECK(result.checkpoint.pocket_encoder.layers()[0].phi_m.weights()[0] ==
        fresh.layers()[0].phi_m.weights()[0]);
}

TEST_CASE("train: loss drops, metrics logged, checkpoint round-trips", "[pretrain]") {
  test::TempDir tmp("train");
  SynthSpec spec;
  spec.out_dir = tmp.file("d");
  spec.families = 2;
  spec.per_family = 6;
  spec.seed = 6;
  const SynthResult sr = gen_synth(spec);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 6;
  cfg.batch_size = 6;
  const ComplexDataset ds = load_dataset(sr.manifest_path, cfg);
  const TrainResult result = train(cfg, ds, tmp.file("out"));

  REQUIRE(result.metrics.size() == 6);
  CHECK(result.metrics.back().loss < result.metrics.front().loss);
  CHECK(result.metrics.back().pos_cos > result.metrics.back().neg_cos);

  // metrics file has one JSON object per epoch with the required keys
  std::ifstream is(result.metrics_path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(is, line)) {
    ++lines;
    for (const char* key : {"\"epoch\":", "\"loss\":", "\"pos_cos\":", "\"neg_cos\":",
                            "\"zero_weight_frac\":", "\"wall_ms\":"})
      CHECK(line.find(key) != std::string::npos);
  }
  CHECK(lines == 6);

  // checkpoint round-trip: save -> load -> save produces identical bytes
  const Checkpoint loaded = Checkpoint::load(result.checkpoint_path);
  CHECK(loaded.to_bytes() == result.checkpoint.to_bytes());
  CHECK(loaded.epoch == 6);

  // resume for 0 further epochs: parameters bit-identical
  TrainConfig zero = cfg;
  zero.epochs = 0;
  const TrainResult resumed = train(zero, ds, tmp.file("out0"), &loaded);
  CHECK(resumed.checkpoint.pocket_encoder.layers()[0].phi_m.weights()[0] ==
        loaded.pocket_encoder.layers()[0].phi_m.weights()[0]);
  CHECK(resumed.checkpoint.ligand_encoder.layers()[0].phi_h.weights()[0] ==
        loaded.ligand_encoder.layers()[0].phi_h.weights()[0]);
}

TEST_CASE("periodic checkpoints are written at the configured interval", "[pretrain]") {
  test::TempDir tmp("interval");
  SynthSpec spec;
  spec.out_dir = tmp.file("d");
  spec.families = 2;
  spec.per_family = 3;
  spec.seed = 14;
  const SynthResult sr = gen_synth(spec);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 3;
  cfg.batch_size = 3;
  cfg.checkpoint_interval = 2;
  const ComplexDataset ds = load_dataset(sr.manifest_path, cfg);
  train(cfg, ds, tmp.file("out"));
  CHECK(std::filesystem::exists(tmp.file("out/checkpoint_epoch2.bin")));
  CHECK(!std::filesystem::exists(tmp.file("out/checkpoint_epoch3.bin")));
  CHECK(std::filesystem::exists(tmp.file("out/checkpoint.bin")));
  const Checkpoint mid = Checkpoint::load(tmp.file("out/checkpoint_epoch2.bin"));
  CHECK(mid.epoch == 2);
}

TEST_CASE("config validation: fixed negatives need global sampling", "[pretrain]") {
  TrainConfig cfg = tiny_config();
  cfg.negatives = 5;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg.global_negatives = true;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("train determinism across runs and thread counts", "[pretrain]") {
  test::TempDir tmp("det");
  SynthSpec spec;
  spec.out_dir = tmp.file("d");
  spec.families = 2;
  spec.per_family = 5;
  spec.seed = 7;
  const SynthResult sr = gen_synth(spec);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 3;
  cfg.batch_size = 5;
  const ComplexDataset ds = load_dataset(sr.manifest_path, cfg);

  setenv("GEOCON_THREADS", "1", 1);
  const TrainResult a = train(cfg, ds, tmp.file("a"));
  setenv("GEOCON_THREADS", "2", 1);
  const TrainResult b = train(cfg, ds, tmp.file("b"));
  unsetenv("GEOCON_THREADS");

  CHECK(normalized_metrics(a.metrics_path) == normalized_metrics(b.metrics_path));
  CHECK(a.checkpoint.to_bytes() == b.checkpoint.to_bytes());
}

TEST_CASE("global negative sampling draws from the whole ligand set", "[pretrain]") {
  test::TempDir tmp("global");
  SynthSpec spec;
  spec.out_dir = tmp.file("d");
  spec.families = 2;
  spec.per_family = 8;
  spec.seed = 8;
  const SynthResult sr = gen_synth(spec);
  TrainConfig cfg = tiny_config();
  cfg.batch_size = 4;
  cfg.global_negatives = true;
  cfg.negatives = 6;
  const ComplexDataset ds = load_dataset(sr.manifest_path, cfg);
  const auto plans = make_batches(ds, cfg, 1);
  for (const BatchPlan& p : plans) {
    std::set<std::size_t> in_batch(p.pocket_items.begin(), p.pocket_items.end());
    for (const AnchorPlan& a : p.anchors) {
      CHECK(a.negatives.size() == 6);
      for (std::size_t n : a.negatives) {
        CHECK(n != a.anchor);
        // encoded set covers every sampled negative
        CHECK(std::find(p.ligand_items.begin(), p.ligand_items.end(), n) !=
              p.ligand_items.end());
      }
    }
  }
  // smoke: one epoch trains without error
  TrainConfig run = cfg;
  run.epochs = 1;
  CHECK_NOTHROW(train(run, ds, tmp.file("out")));
}

TEST_CASE("symmetric direction trains and rejects global negatives", "[pretrain]") {
  test::TempDir tmp("sym");
  SynthSpec spec;
  spec.out_dir = tmp.file("d");
  spec.families = 2;
  spec.per_family = 4;
  spec.seed = 13;
  const SynthResult sr = gen_synth(spec);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.symmetric = true;
  const ComplexDataset ds = load_dataset(sr.manifest_path, cfg);
  const TrainResult result = train(cfg, ds, tmp.file("out"));
  CHECK(result.metrics.size() == 2);
  CHECK(std::isfinite(result.metrics.back().loss));

  // asymmetric and symmetric runs diverge
  TrainConfig asym = cfg;
  asym.symmetric = false;
  const TrainResult other = train(asym, ds, tmp.file("out2"));
  CHECK(result.checkpoint.to_bytes() != other.checkpoint.to_bytes());

  TrainConfig bad = cfg;
  bad.global_negatives = true;
  CHECK_THROWS_AS(train(bad, ds, tmp.file("out3")), config_error);
}

TEST_CASE("embed: determinism, invariance, kind mismatch", "[pretrain]") {
  test::TempDir tmp("embed");
  SynthSpec spec;
  spec.out_dir = tmp.file("d");
  spec.families = 2;
  spec.per_family = 4;
  spec.seed = 9;
  const SynthResult sr = gen_synth(spec);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  cfg.batch_size = 4;
  const ComplexDataset ds = load_dataset(sr.manifest_path, cfg);
  const TrainResult result = train(cfg, ds, tmp.file("out"));
  const Checkpoint& ck = result.checkpoint;

  const BioGraph3D pocket = ds.entries[0].pocket;
  const auto h1 = embed_graph(ck, pocket, GraphKind::pocket);
  const auto h2 = embed_graph(ck, pocket, GraphKind::pocket);
  CHECK(h1 == h2);

  // rigidly moved graph embeds to the same vector
  Rng rng(11);
  const RigidMotion motion = random_rigid_motion(rng, true);
  PocketSpec pspec = parse_pocket_file(tmp.file("d/" + sr.entries[0].pocket_file));
  pspec.cut_radius = cfg.cut_radius;
  pspec.k = cfg.knn;
  for (auto& r : pspec.residues) r.ca = motion.apply_point(r.ca);
  for (auto& a : pspec.ligand_atoms) a = motion.apply_point(a);
  const auto h3 = embed_graph(ck, build_pocket_graph(pspec), GraphKind::pocket);
  for (std::size_t d = 0; d < h1.size(); ++d)
    CHECK(h1[d] == Catch::Approx(h3[d]).margin(1e-7));

  CHECK_THROWS_AS(embed_graph(ck, pocket, GraphKind::ligand), config_error);
}

TEST_CASE("training separates synthetic families", "[pretrain]") {
  test::TempDir tmp("sep");
  SynthSpec spec;
  spec.out_dir = tmp.file("d");
  spec.families = 2;
  spec.per_family = 8;
  spec.seed = 10;
  const SynthResult sr = gen_synth(spec);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 8;
  cfg.batch_size = 8;
  cfg.hidden_dim = 16;
  cfg.message_dim = 16;
  cfg.phi_hidden = 16;
  const ComplexDataset ds = load_dataset(sr.manifest_path, cfg);
  const TrainResult result = train(cfg, ds, tmp.file("out"));
  CHECK(result.metrics.back().pos_cos > result.metrics.back().neg_cos);
}

TEST_CASE("config file parsing and overrides", "[pretrain]") {
  test::TempDir tmp("config");
  test::write_text(tmp.file("c.cfg"),
                   "# comment\n"
                   "seed = 11\n"
                   "epochs = 4\n"
                   "loss = debiased\n"
                   "tau_plus = 0.2\n"
                   "batch_size=8\n");
  TrainConfig cfg = parse_config_file(tmp.file("c.cfg"));
  CHECK(cfg.seed == 11);
  CHECK(cfg.epochs == 4);
  CHECK(cfg.loss == LossKind::debiased);
  CHECK(cfg.tau_plus == 0.2);
  CHECK(cfg.batch_size == 8);

  apply_config_value(cfg, "lr", "0.005");
  CHECK(cfg.learning_rate == 0.005);

  test::write_text(tmp.file("bad.cfg"), "unknown_key = 3\n");
  CHECK_THROWS_AS(parse_config_file(tmp.file("bad.cfg")), config_error);
  test::write_text(tmp.file("bad2.cfg"), "epochs four\n");
  CHECK_THROWS_AS(parse_config_file(tmp.file("bad2.cfg")), config_error);

  TrainConfig invalid;
  invalid.batch_size = 1;
  CHECK_THROWS_AS(invalid.validate(), config_error);
}

TEST_CASE("gen_synth: counts, determinism, family structure", "[pretrain]") {
  test::TempDir tmp("synth");
  SynthSpec spec;
  spec.out_dir = tmp.file("a");
  spec.families = 2;
  spec.per_family = 5;
  spec.seed = 12;
  const SynthResult a = gen_synth(spec);
  CHECK(a.entries.size() == 10);
  CHECK(std::filesystem::exists(a.manifest_path));

  // same seed -> byte-identical files
  SynthSpec spec2 = spec;
  spec2.out_dir = tmp.file("b");
  const SynthResult b = gen_synth(spec2);
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(test::read_text(tmp.file("a/" + a.entries[i].pocket_file)) ==
          test::read_text(tmp.file("b/" + b.entries[i].pocket_file)));
    CHECK(test::read_text(tmp.file("a/" + a.entries[i].ligand_file)) ==
          test::read_text(tmp.file("b/" + b.entries[i].ligand_file)));
  }

  // fingerprints identical within a family, Tanimoto < 0.5 across
  TrainConfig cfg = tiny_config();
  const ComplexDataset ds = load_dataset(a.manifest_path, cfg);
  for (std::size_t i = 0; i + 1 < 5; ++i)
    CHECK(ds.entries[i].fp == ds.entries[i + 1].fp);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 5; j < 10; ++j)
      CHECK(tanimoto(ds.entries[i].fp, ds.entries[j].fp) < 0.5);
}
