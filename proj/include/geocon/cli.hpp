// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "geocon/checkpoint.hpp"
#include "geocon/config.hpp"
#include "geocon/dataset.hpp"
#include "geocon/evalkit.hpp"
#include "geocon/fingerprint.hpp"
#include "geocon/gradcheck.hpp"
#include "geocon/synth.hpp"
#include "geocon/trainer.hpp"

namespace geocon::cli {

// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical fault.

namespace cli_detail {

inline GraphKind parse_kind(const std::string& s) {
  if (s == "pocket") return GraphKind::pocket;
  if (s == "ligand") return GraphKind::ligand;
  throw config_error("kind must be 'pocket' or 'ligand', got '" + s + "'");
}

inline std::string level_key(double level) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", level);
  return buf;
}

struct TrainArgs {
  std::string manifest, config_path, out_dir, resume;
  std::vector<std::string> overrides;  // key=value
  bool has_seed = false, has_epochs = false, has_batch = false, has_loss = false,
       has_lr = false;
  std::uint64_t seed = 0;
  std::uint64_t epochs = 0;
  std::uint64_t batch = 0;
  std::string loss;
  double lr = 0.0;
};

inline TrainConfig resolve_config(const TrainArgs& a) {
  TrainConfig cfg;
  if (!a.config_path.empty()) cfg = parse_config_file(a.config_path);
  // Flag precedence: defaults < config file < --set < named flags.
  for (const std::string& kv : a.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw config_error("--set expects key=value, got '" + kv + "'");
    apply_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (a.has_seed) cfg.seed = a.seed;
  if (a.has_epochs) cfg.epochs = a.epochs;
  if (a.has_batch) cfg.batch_size = a.batch;
  if (a.has_loss) cfg.loss = parse_loss_kind(a.loss);
  if (a.has_lr) cfg.learning_rate = a.lr;
  cfg.validate();
  return cfg;
}

}  // namespace cli_detail

inline int run(int argc, const char* const* argv) {
  CLI::App app{"geocon - co-supervised 3D pocket/ligand contrastive pretraining"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "log per-epoch metrics to stderr");

  // train
  auto* train_cmd = app.add_subcommand("train", "pretrain both encoders on a pair manifest");
  cli_detail::TrainArgs ta;
  train_cmd->add_option("--manifest", ta.manifest, "pair manifest (pocket ligand per line)")
      ->required();
  train_cmd->add_option("--config", ta.config_path, "key=value config file");
  train_cmd->add_option("--out", ta.out_dir, "output directory")->required();
  train_cmd->add_option("--resume", ta.resume, "checkpoint to resume from");
  train_cmd->add_option("--set", ta.overrides, "override a config key (key=value), repeatable");
  auto* o_seed = train_cmd->add_option("--seed", ta.seed, "override seed");
  auto* o_epochs = train_cmd->add_option("--epochs", ta.epochs, "override epoch count");
  auto* o_batch = train_cmd->add_option("--batch-size", ta.batch, "override batch size");
  auto* o_loss = train_cmd->add_option("--loss", ta.loss, "uni|infonce|debiased|chem");
  auto* o_lr = train_cmd->add_option("--lr", ta.lr, "override learning rate");

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "embed one pocket or ligand file");
  std::string em_ckpt, em_input, em_kind;
  embed_cmd->add_option("--ckpt", em_ckpt, "checkpoint path")->required();
  embed_cmd->add_option("--input", em_input, "pocket or ligand file")->required();
  embed_cmd->add_option("--kind", em_kind, "pocket|ligand")->required();

  // match
  auto* match_cmd = app.add_subcommand("match", "pocket matching AUC over a pair manifest");
  std::string ma_ckpt, ma_pairs;
  match_cmd->add_option("--ckpt", ma_ckpt, "checkpoint path")->required();
  match_cmd->add_option("--pairs", ma_pairs, "manifest: pocketA pocketB 0|1")->required();

  // screen
  auto* screen_cmd = app.add_subcommand("screen", "virtual screening against one target pocket");
  std::string sc_ckpt, sc_pocket, sc_ligands;
  screen_cmd->add_option("--ckpt", sc_ckpt, "checkpoint path")->required();
  screen_cmd->add_option("--pocket", sc_pocket, "target pocket file")->required();
  screen_cmd->add_option("--ligands", sc_ligands, "manifest: ligand_path 0|1")->required();

  // check-grad
  auto* grad_cmd = app.add_subcommand("check-grad", "run the finite-difference gradient suite");
  std::uint64_t gc_seed = 7;
  grad_cmd->add_option("--seed", gc_seed, "suite seed");

  // gen-synth
  auto* synth_cmd = app.add_subcommand("gen-synth", "generate a synthetic pocket/ligand dataset");
  SynthSpec synth_spec;
  synth_cmd->add_option("--out", synth_spec.out_dir, "output directory")->required();
  synth_cmd->add_option("--families", synth_spec.families, "family count (1-6)");
  synth_cmd->add_option("--per-family", synth_spec.per_family, "complexes per family");
  synth_cmd->add_option("--seed", synth_spec.seed, "generator seed");

  // fp-dump
  auto* fp_cmd = app.add_subcommand("fp-dump", "print fingerprint bits, one line per ligand");
  std::vector<std::string> fp_paths;
  std::uint64_t fp_radius = 2, fp_width = 2048;
  fp_cmd->add_option("ligands", fp_paths, "ligand files")->required();
  fp_cmd->add_option("--radius", fp_radius, "environment radius");
  fp_cmd->add_option("--width", fp_width, "bit width");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (train_cmd->parsed()) {
      ta.has_seed = o_seed->count() > 0;
      ta.has_epochs = o_epochs->count() > 0;
      ta.has_batch = o_batch->count() > 0;
      ta.has_loss = o_loss->count() > 0;
      ta.has_lr = o_lr->count() > 0;
      const TrainConfig cfg = cli_detail::resolve_config(ta);
      const ComplexDataset ds = load_dataset(ta.manifest, cfg);
      Checkpoint resume;
      const bool resuming = !ta.resume.empty();
      if (resuming) resume = Checkpoint::load(ta.resume);
      const TrainResult result =
          train(cfg, ds, ta.out_dir, resuming ? &resume : nullptr,
                verbose ? [](const EpochMetrics& m) {
                  std::fprintf(stderr, "%s\n", m.json_line().c_str());
                } : std::function<void(const EpochMetrics&)>());
      nlohmann::json out{{"checkpoint", result.checkpoint_path},
                         {"metrics", result.metrics_path},
                         {"epochs", result.checkpoint.epoch}};
      if (!result.metrics.empty()) out["final_loss"] = result.metrics.back().loss;
      std::cout << out.dump() << "\n";
      return 0;
    }

    if (embed_cmd->parsed()) {
      const GraphKind kind = cli_detail::parse_kind(em_kind);
      const Checkpoint ck = Checkpoint::load(em_ckpt);
      const BioGraph3D graph = kind == GraphKind::pocket
                                   ? load_pocket_graph(ck, em_input)
                                   : load_ligand_graph(em_input);
      const std::vector<double> h = embed_graph(ck, graph, kind);
      nlohmann::json out{{"kind", em_kind}, {"dim", h.size()}, {"embedding", h}};
      std::cout << out.dump() << "\n";
      return 0;
    }

    if (match_cmd->parsed()) {
      const Checkpoint ck = Checkpoint::load(ma_ckpt);
      const MatchResult res = pocket_match(ck, ma_pairs);
      nlohmann::json pairs = nlohmann::json::array();
      for (const MatchRecord& r : res.records)
        pairs.push_back({{"a", r.pocket_a},
                         {"b", r.pocket_b},
                         {"label", r.positive ? 1 : 0},
                         {"score", r.score}});
      nlohmann::json out{{"auc", res.auc}, {"n_pairs", res.records.size()}, {"pairs", pairs}};
      std::cout << out.dump() << "\n";
      return 0;
    }

    if (screen_cmd->parsed()) {
      const Checkpoint ck = Checkpoint::load(sc_ckpt);
      const ScreenDetail res = screen(ck, sc_pocket, sc_ligands);
      nlohmann::json re;
      for (const auto& [level, value] : res.result.re_at)
        re[cli_detail::level_key(level)] = value;
      nlohmann::json scores = nlohmann::json::array();
      std::size_t actives = 0;
      for (const ScreenRecord& r : res.records) {
        actives += r.active ? 1 : 0;
        scores.push_back(
            {{"ligand", r.ligand_path}, {"label", r.active ? 1 : 0}, {"score", r.score}});
      }
      nlohmann::json out{{"auc", res.result.auc},
                         {"re", re},
                         {"n_actives", actives},
                         {"n_decoys", res.records.size() - actives},
                         {"scores", scores}};
      std::cout << out.dump() << "\n";
      return 0;
    }

    if (grad_cmd->parsed()) {
      const auto reports = gradcheck::run_gradient_suite(gc_seed);
      gradcheck::print_reports(reports, stdout);
      return gradcheck::all_pass(reports) ? 0 : 3;
    }

    if (synth_cmd->parsed()) {
      const SynthResult res = gen_synth(synth_spec);
      nlohmann::json out{{"manifest", res.manifest_path},
                         {"entries", res.entries.size()},
                         {"families", synth_spec.families},
                         {"per_family", synth_spec.per_family}};
      std::cout << out.dump() << "\n";
      return 0;
    }

    if (fp_cmd->parsed()) {
      for (const std::string& path : fp_paths) {
        const LigandSpec lig = parse_ligand_file(path);
        const Fingerprint fp = fingerprint(lig, fp_radius, fp_width);
        std::cout << fingerprint_dump_line(path, fp) << "\n";
      }
      return 0;
    }
  } catch (const config_error& e) {
    std::fprintf(stderr, "geocon: %s\n", e.what());
    return 1;
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "geocon: %s\n", e.what());
    return 3;
  } catch (const data_error& e) {
    std::fprintf(stderr, "geocon: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "geocon: %s\n", e.what());
    return 2;
  }
  return 1;
}

}  // namespace geocon::cli
