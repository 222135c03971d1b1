// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "geocon/bio_files.hpp"
#include "geocon/biograph.hpp"
#include "geocon/common.hpp"
#include "geocon/rigid.hpp"
#include "geocon/rng.hpp"

namespace geocon {

// Synthetic complex families for desk-scale pretraining runs. Each family
// couples one pocket geometry template with one ligand scaffold; entries
// within a family are noisy copies (0.3 A coordinate jitter plus a random
// rigid motion), so ligand fingerprints are identical within a family.
// Scaffolds use disjoint element sets, which pins cross-family Tanimoto
// to 0. Pocket templates keep every residue within the 10 A cut of the
// ligand atoms. Cross-family pocket/ligand pairs are non-binding by
// construction.

inline constexpr std::size_t kSynthMaxFamilies = 6;
inline constexpr double kSynthJitterSigma = 0.3;

struct SynthSpec {
  std::string out_dir;
  std::size_t families = 4;
  std::size_t per_family = 50;
  std::uint64_t seed = 0;
};

struct SynthEntry {
  std::string pocket_file;  // relative to out_dir
  std::string ligand_file;
  std::size_t family = 0;
  std::size_t index = 0;
};

struct SynthResult {
  std::string manifest_path;
  std::vector<SynthEntry> entries;
};

namespace synth_detail {

// Distinct 12-residue pocket geometry per family, all within ~8 A of the
// origin where the ligand sits.
inline std::vector<Vec3> pocket_template(std::size_t family) {
  std::vector<Vec3> pts;
  const std::size_t n = 12;
  const double pi2 = 6.283185307179586476925286766559;
  switch (family % kSynthMaxFamilies) {
    case 0:  // flat ring
      for (std::size_t i = 0; i < n; ++i) {
        const double a = pi2 * static_cast<double>(i) / static_cast<double>(n);
        pts.push_back({6.0 * std::cos(a), 6.0 * std::sin(a), 0.0});
      }
      break;
    case 1:  // helix
      for (std::size_t i = 0; i < n; ++i) {
        const double a = pi2 * static_cast<double>(i) / 6.0;
        pts.push_back({5.0 * std::cos(a), 5.0 * std::sin(a),
                       -4.0 + 0.7 * static_cast<double>(i)});
      }
      break;
    case 2:  // two parallel strands
      for (std::size_t i = 0; i < n; ++i) {
        const double x = -5.0 + 2.0 * static_cast<double>(i % 6);
        pts.push_back({x, i < 6 ? 4.0 : -4.0, i < 6 ? 1.5 : -1.5});
      }
      break;
    case 3:  // zig-zag arc
      for (std::size_t i = 0; i < n; ++i) {
        const double a = pi2 * static_cast<double>(i) / 16.0;
        pts.push_back({7.0 * std::cos(a), 7.0 * std::sin(a), (i % 2 == 0) ? 2.0 : -2.0});
      }
      break;
    case 4:  // spherical spiral
      for (std::size_t i = 0; i < n; ++i) {
        const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        const double phi = std::acos(1.0 - 2.0 * t);
        const double theta = pi2 * 1.618 * static_cast<double>(i);
        pts.push_back({6.5 * std::sin(phi) * std::cos(theta),
                       6.5 * std::sin(phi) * std::sin(theta), 6.5 * std::cos(phi)});
      }
      break;
    default:  // 3 x 4 grid plane
      for (std::size_t i = 0; i < n; ++i) {
        const double x = -4.0 + 4.0 * static_cast<double>(i % 3);
        const double y = -5.0 + 3.3 * static_cast<double>(i / 3);
        pts.push_back({x, y, 3.0});
      }
      break;
  }
  return pts;
}

inline std::vector<std::string> pocket_residues(std::size_t family) {
  static const std::array<std::array<const char*, 5>, kSynthMaxFamilies> sets = {{
      {"ALA", "GLY", "SER", "THR", "VAL"},
      {"ARG", "LYS", "HIS", "ASP", "GLU"},
      {"PHE", "TYR", "TRP", "LEU", "ILE"},
      {"CYS", "MET", "PRO", "ASN", "GLN"},
      {"ALA", "ARG", "PHE", "CYS", "GLY"},
      {"VAL", "GLU", "ILE", "GLN", "THR"},
  }};
  const auto& set = sets[family % kSynthMaxFamilies];
  std::vector<std::string> out;
  for (std::size_t i = 0; i < 12; ++i) out.emplace_back(set[i % set.size()]);
  return out;
}

// Families 0-3 share a six-atom single-bond chain skeleton and differ in
// the two terminal elements: the common carbon interior keeps cross-family
// Tanimoto in (0, 0.5) while the element composition keeps the graphs
// separable. Families 4-5 use separate element sets entirely.
inline LigandSpec ligand_template(std::size_t family) {
  LigandSpec lig;
  auto chain = [&lig](const std::vector<std::string>& elems,
                      const std::vector<int>& orders) {
    for (std::size_t i = 0; i < elems.size(); ++i)
      lig.atoms.push_back({elems[i], {1.5 * static_cast<double>(i),
                                      (i % 2 == 0) ? 0.0 : 0.8, 0.0}});
    for (std::size_t i = 0; i + 1 < elems.size(); ++i)
      lig.bonds.push_back({i, i + 1, orders[i % orders.size()]});
  };
  const double pi2 = 6.283185307179586476925286766559;
  switch (family % kSynthMaxFamilies) {
    case 0:  // hexane-like chain
      chain({"C", "C", "C", "C", "C", "C"}, {1});
      break;
    case 1:  // diamine-like chain
      chain({"N", "C", "C", "C", "C", "N"}, {1});
      break;
    case 2:  // diol-like chain
      chain({"O", "C", "C", "C", "C", "O"}, {1});
      break;
    case 3:  // dithiol-like chain
      chain({"S", "C", "C", "C", "C", "S"}, {1});
      break;
    case 4:  // nitrogen ring
      for (std::size_t i = 0; i < 6; ++i) {
        const double a = pi2 * static_cast<double>(i) / 6.0;
        lig.atoms.push_back({"N", {1.4 * std::cos(a), 1.4 * std::sin(a), 0.0}});
      }
      for (std::size_t i = 0; i < 6; ++i) lig.bonds.push_back({i, (i + 1) % 6, 1});
      break;
    default:  // silicon/selenium tree
      lig.atoms.push_back({"Si", {0.0, 0.0, 0.0}});
      lig.atoms.push_back({"Si", {1.9, 0.0, 0.0}});
      lig.atoms.push_back({"Se", {-1.0, 1.6, 0.0}});
      lig.atoms.push_back({"Se", {-1.0, -1.6, 0.0}});
      lig.atoms.push_back({"Si", {3.0, 1.5, 0.5}});
      lig.bonds.push_back({0, 1, 1});
      lig.bonds.push_back({0, 2, 1});
      lig.bonds.push_back({0, 3, 2});
      lig.bonds.push_back({1, 4, 1});
      break;
  }
  return lig;
}

}  // namespace synth_detail

inline SynthResult gen_synth(const SynthSpec& spec) {
  require(spec.families >= 1 && spec.families <= kSynthMaxFamilies,
          "gen_synth: families must lie in [1, " + std::to_string(kSynthMaxFamilies) + "]");
  require(spec.per_family >= 1, "gen_synth: per-family count must be >= 1");

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(spec.out_dir, ec);
  if (ec) throw data_error("gen_synth: cannot create directory " + spec.out_dir);

  Rng data_rng = Rng(spec.seed).stream("data");
  SynthResult result;
  std::ostringstream manifest;

  for (std::size_t f = 0; f < spec.families; ++f) {
    const std::vector<Vec3> pocket_pts = synth_detail::pocket_template(f);
    const std::vector<std::string> residues = synth_detail::pocket_residues(f);
    const LigandSpec lig_template = synth_detail::ligand_template(f);

    for (std::size_t i = 0; i < spec.per_family; ++i) {
      Rng rng = data_rng.stream("entry", f * 100000 + i);
      const Rotation rot = random_rotation(rng);
      const Vec3 shift{rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0),
                       rng.uniform(-20.0, 20.0)};
      auto place = [&](const Vec3& p) {
        const Vec3 jittered{p.x + kSynthJitterSigma * rng.normal(),
                            p.y + kSynthJitterSigma * rng.normal(),
                            p.z + kSynthJitterSigma * rng.normal()};
        return rot.apply(jittered) + shift;
      };

      LigandSpec lig = lig_template;
      for (LigandAtom& a : lig.atoms) a.pos = place(a.pos);

      PocketSpec pocket;
      for (std::size_t r = 0; r < pocket_pts.size(); ++r)
        pocket.residues.push_back(
            {static_cast<int>(r), residues[r], place(pocket_pts[r])});
      for (const LigandAtom& a : lig.atoms) pocket.ligand_atoms.push_back(a.pos);

      char pname[64], lname[64];
      std::snprintf(pname, sizeof(pname), "pocket_f%zu_i%03zu.pkt", f, i);
      std::snprintf(lname, sizeof(lname), "ligand_f%zu_i%03zu.lig", f, i);
      write_pocket_file(pocket, (fs::path(spec.out_dir) / pname).string());
      write_ligand_file(lig, (fs::path(spec.out_dir) / lname).string());
      manifest << pname << ' ' << lname << "\n";
      result.entries.push_back({pname, lname, f, i});
    }
  }

  result.manifest_path = (fs::path(spec.out_dir) / "manifest.txt").string();
  std::ofstream mos(result.manifest_path);
  if (!mos) throw data_error("gen_synth: cannot write manifest");
  mos << manifest.str();
  return result;
}

}  // namespace geocon
