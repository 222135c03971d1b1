// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <iostream>
#include <sstream>

#include <json.hpp>

#include "geocon/cli.hpp"
#include "test_helpers.hpp"

using namespace geocon;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("geocon");
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream captured;
  std::streambuf* saved = std::cout.rdbuf(captured.rdbuf());
  CliResult r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(saved);
  r.out = captured.str();
  return r;
}

}  // namespace

TEST_CASE("help exits zero, unknown subcommand exits one", "[cli]") {
  CHECK(run_cli({"--help"}).code == 0);
  CHECK(run_cli({"frobnicate"}).code == 1);
  CHECK(run_cli({}).code == 1);
  CHECK(run_cli({"train"}).code == 1);  // missing required flags
}

TEST_CASE("end-to-end: gen-synth, train, embed, match, screen, fp-dump", "[cli]") {
  test::TempDir tmp("cli");
  const std::string data = tmp.file("data");
  const std::string held = tmp.file("held");

  // gen-synth
  CliResult gen = run_cli({"gen-synth", "--out", data, "--families", "2",
                           "--per-family", "12", "--seed", "3"});
  REQUIRE(gen.code == 0);
  const auto gen_json = nlohmann::json::parse(gen.out);
  CHECK(gen_json["entries"] == 24);
  REQUIRE(run_cli({"gen-synth", "--out", held, "--families", "2", "--per-family", "12",
                   "--seed", "4"})
              .code == 0);

  // train with a config file plus flag overrides
  test::write_text(tmp.file("train.cfg"),
                   "loss = chem\n"
                   "depth = 1\n"
                   "hidden_dim = 12\n"
                   "message_dim = 12\n"
                   "phi_hidden = 12\n"
                   "k = 4\n"
                   "learning_rate = 0.001\n"
                   "batch_size = 8\n");
  const std::string out_dir = tmp.file("run");
  CliResult tr = run_cli({"train", "--manifest", data + "/manifest.txt", "--config",
                          tmp.file("train.cfg"), "--out", out_dir, "--seed", "0",
                          "--epochs", "2"});
  REQUIRE(tr.code == 0);
  const auto tr_json = nlohmann::json::parse(tr.out);
  const std::string ckpt = tr_json["checkpoint"];
  CHECK(std::filesystem::exists(ckpt));
  CHECK(std::filesystem::exists(tr_json["metrics"].get<std::string>()));
  CHECK(tr_json["epochs"] == 2);

  // embed a pocket and a ligand
  CliResult emb = run_cli({"embed", "--ckpt", ckpt, "--input",
                           data + "/pocket_f0_i000.pkt", "--kind", "pocket"});
  REQUIRE(emb.code == 0);
  const auto emb_json = nlohmann::json::parse(emb.out);
  CHECK(emb_json["dim"] == 12);
  double norm2 = 0.0;
  for (double v : emb_json["embedding"]) norm2 += v * v;
  CHECK(std::abs(std::sqrt(norm2) - 1.0) < 1e-9);
  CHECK(run_cli({"embed", "--ckpt", ckpt, "--input", data + "/ligand_f0_i000.lig",
                 "--kind", "ligand"})
            .code == 0);

  // pocket file fed to the ligand parser is a data error (exit 2)
  CHECK(run_cli({"embed", "--ckpt", ckpt, "--input", data + "/pocket_f0_i000.pkt",
                 "--kind", "ligand"})
            .code == 2);

  // match over held-out pairs
  std::string pairs;
  for (int i = 0; i < 6; i += 2) {
    char a[64], b[64], c[64];
    std::snprintf(a, sizeof(a), "pocket_f0_i%03d.pkt", i);
    std::snprintf(b, sizeof(b), "pocket_f0_i%03d.pkt", i + 1);
    std::snprintf(c, sizeof(c), "pocket_f1_i%03d.pkt", i);
    pairs += std::string(a) + " " + b + " 1\n";
    pairs += std::string(a) + " " + c + " 0\n";
  }
  test::write_text(held + "/pairs.txt", pairs);
  CliResult ma = run_cli({"match", "--ckpt", ckpt, "--pairs", held + "/pairs.txt"});
  REQUIRE(ma.code == 0);
  const auto ma_json = nlohmann::json::parse(ma.out);
  CHECK(ma_json.contains("auc"));
  CHECK(ma_json["n_pairs"] == 6);

  // screen: 12 actives vs 12 decoys is too small for any RE level -> exit 2
  std::string lib;
  for (int i = 0; i < 12; ++i) {
    char a[64], b[64];
    std::snprintf(a, sizeof(a), "ligand_f0_i%03d.lig", i);
    std::snprintf(b, sizeof(b), "ligand_f1_i%03d.lig", i);
    lib += std::string(a) + " 1\n";
    lib += std::string(b) + " 0\n";
  }
  test::write_text(held + "/lib.txt", lib);
  CHECK(run_cli({"screen", "--ckpt", ckpt, "--pocket", held + "/pocket_f0_i000.pkt",
                 "--ligands", held + "/lib.txt"})
            .code == 2);

  // bigger decoy set realizes the 5% level
  CliResult sc = run_cli({"gen-synth", "--out", tmp.file("big"), "--families", "2",
                          "--per-family", "24", "--seed", "5"});
  REQUIRE(sc.code == 0);
  std::string biglib;
  for (int i = 0; i < 24; ++i) {
    char a[64], b[64];
    std::snprintf(a, sizeof(a), "ligand_f0_i%03d.lig", i);
    std::snprintf(b, sizeof(b), "ligand_f1_i%03d.lig", i);
    biglib += std::string(a) + " 1\n";
    biglib += std::string(b) + " 0\n";
  }
  test::write_text(tmp.file("big") + "/lib.txt", biglib);
  CliResult sc2 = run_cli({"screen", "--ckpt", ckpt, "--pocket",
                           tmp.file("big") + "/pocket_f0_i000.pkt", "--ligands",
                           tmp.file("big") + "/lib.txt"});
  REQUIRE(sc2.code == 0);
  const auto sc_json = nlohmann::json::parse(sc2.out);
  CHECK(sc_json.contains("auc"));
  CHECK(sc_json["re"].contains("0.05"));

  // fp-dump
  CliResult fp = run_cli({"fp-dump", data + "/ligand_f0_i000.lig"});
  REQUIRE(fp.code == 0);
  CHECK(fp.out.find("2048") != std::string::npos);

  // resume training for zero further epochs
  CliResult rs = run_cli({"train", "--manifest", data + "/manifest.txt", "--config",
                          tmp.file("train.cfg"), "--out", tmp.file("resumed"),
                          "--resume", ckpt, "--epochs", "0"});
  CHECK(rs.code == 0);
}

TEST_CASE("check-grad exits zero when the suite passes", "[cli]") {
  CHECK(run_cli({"check-grad", "--seed", "7"}).code == 0);
}

TEST_CASE("error paths map to documented exit codes", "[cli]") {
  test::TempDir tmp("clierr");
  // missing manifest -> data error
  CHECK(run_cli({"train", "--manifest", tmp.file("nope.txt"), "--out", tmp.file("o")})
            .code == 2);
  // bad config value -> usage error
  test::write_text(tmp.file("bad.cfg"), "loss = nonsense\n");
  CHECK(run_cli({"train", "--manifest", tmp.file("nope.txt"), "--config",
                 tmp.file("bad.cfg"), "--out", tmp.file("o")})
            .code == 1);
  // bad --set syntax -> usage error
  CHECK(run_cli({"train", "--manifest", tmp.file("nope.txt"), "--out", tmp.file("o"),
                 "--set", "epochs"})
            .code == 1);
  // missing checkpoint -> data error
  CHECK(run_cli({"embed", "--ckpt", tmp.file("no.bin"), "--input", tmp.file("no.lig"),
                 "--kind", "ligand"})
            .code == 2);
  // bad kind -> usage error
  test::write_text(tmp.file("x.lig"), "ATOMS 1 BONDS 0\nC 0 0 0\n");
  CHECK(run_cli({"embed", "--ckpt", tmp.file("no.bin"), "--input", tmp.file("x.lig"),
                 "--kind", "protein"})
            .code == 1);
  // gen-synth with too many families -> usage error
  CHECK(run_cli({"gen-synth", "--out", tmp.file("d"), "--families", "9"}).code == 1);
}
