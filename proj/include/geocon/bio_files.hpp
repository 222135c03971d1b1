// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "geocon/biograph.hpp"
#include "geocon/common.hpp"

namespace geocon {

namespace io_detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] inline void fail(const std::string& path, std::size_t line,
                              const std::string& what) {
  throw data_error(path + ":" + std::to_string(line) + ": " + what);
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open file: " + path);
  return is;
}

struct LineReader {
  std::istream& is;
  const std::string& path;
  std::size_t line_no = 0;

  // Next non-blank line; false at EOF.
  bool next(std::string& out) {
    while (std::getline(is, out)) {
      ++line_no;
      bool blank = true;
      for (char c : out)
        if (!std::isspace(static_cast<unsigned char>(c))) {
          blank = false;
          break;
        }
      if (!blank) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    io_detail::fail(path, line_no, what);
  }
};

inline double parse_double(LineReader& r, std::istringstream& ss, const char* what) {
  double v;
  if (!(ss >> v)) r.fail(std::string("expected number for ") + what);
  if (!std::isfinite(v)) r.fail(std::string("non-finite value for ") + what);
  return v;
}

inline long parse_long(LineReader& r, std::istringstream& ss, const char* what) {
  long v;
  if (!(ss >> v)) r.fail(std::string("expected integer for ") + what);
  return v;
}

inline void expect_end(LineReader& r, std::istringstream& ss) {
  std::string rest;
  if (ss >> rest) r.fail("unexpected trailing token '" + rest + "'");
}

}  // namespace io_detail

// Ligand file format (line oriented):
//   ATOMS n BONDS m
//   element x y z [charge]     (n lines)
//   i j order                  (m lines, 0-indexed into the atom list)
// Hydrogens and their bonds are dropped at parse time; bond indices are
// remapped onto the surviving heavy atoms.
inline LigandSpec parse_ligand_file(const std::string& path) {
  std::ifstream is = io_detail::open_input(path);
  io_detail::LineReader r{is, path};
  std::string line;
  if (!r.next(line)) r.fail("empty ligand file");

  std::istringstream head(line);
  std::string kw_atoms, kw_bonds;
  long n_atoms = 0, n_bonds = 0;
  head >> kw_atoms >> n_atoms >> kw_bonds >> n_bonds;
  if (kw_atoms != "ATOMS" || kw_bonds != "BONDS" || !head || n_atoms < 0 || n_bonds < 0)
    r.fail("expected header 'ATOMS n BONDS m'");
  io_detail::expect_end(r, head);

  std::vector<LigandAtom> raw_atoms;
  std::vector<long> heavy_index(static_cast<std::size_t>(n_atoms), -1);
  LigandSpec spec;
  for (long a = 0; a < n_atoms; ++a) {
    if (!r.next(line)) r.fail("unexpected end of file in atom block");
    std::istringstream ss(line);
    LigandAtom atom;
    if (!(ss >> atom.element)) r.fail("expected element symbol");
    if (!is_known_element(atom.element))
      r.fail("unknown element '" + atom.element + "'");
    atom.pos.x = io_detail::parse_double(r, ss, "x");
    atom.pos.y = io_detail::parse_double(r, ss, "y");
    atom.pos.z = io_detail::parse_double(r, ss, "z");
    long charge = 0;
    if (ss >> charge) atom.charge = static_cast<int>(charge);
    io_detail::expect_end(r, ss);
    if (atom.element != "H") {
      heavy_index[static_cast<std::size_t>(a)] =
          static_cast<long>(spec.atoms.size());
      spec.atoms.push_back(atom);
    }
  }

  for (long b = 0; b < n_bonds; ++b) {
    if (!r.next(line)) r.fail("unexpected end of file in bond block");
    std::istringstream ss(line);
    const long i = io_detail::parse_long(r, ss, "bond atom i");
    const long j = io_detail::parse_long(r, ss, "bond atom j");
    const long order = io_detail::parse_long(r, ss, "bond order");
    io_detail::expect_end(r, ss);
    if (i < 0 || j < 0 || i >= n_atoms || j >= n_atoms)
      r.fail("bond references missing atom");
    const long hi = heavy_index[static_cast<std::size_t>(i)];
    const long hj = heavy_index[static_cast<std::size_t>(j)];
    if (hi < 0 || hj < 0) continue;  // bond to a dropped hydrogen
    spec.bonds.push_back({static_cast<std::size_t>(hi), static_cast<std::size_t>(hj),
                          static_cast<int>(order)});
  }
  if (r.next(line)) r.fail("unexpected content after bond block");
  return spec;
}

inline void write_ligand_file(const LigandSpec& spec, std::ostream& os) {
  os << "ATOMS " << spec.atoms.size() << " BONDS " << spec.bonds.size() << "\n";
  bool any_charge = false;
  for (const LigandAtom& a : spec.atoms) any_charge = any_charge || a.charge != 0;
  for (const LigandAtom& a : spec.atoms) {
    os << a.element << ' ' << io_detail::fmt_double(a.pos.x) << ' '
       << io_detail::fmt_double(a.pos.y) << ' ' << io_detail::fmt_double(a.pos.z);
    if (any_charge) os << ' ' << a.charge;
    os << "\n";
  }
  for (const LigandBond& b : spec.bonds)
    os << b.i << ' ' << b.j << ' ' << b.order << "\n";
}

inline void write_ligand_file(const LigandSpec& spec, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw data_error("cannot write file: " + path);
  write_ligand_file(spec, os);
}

// Pocket file format:
//   RESIDUES n LIGATOMS m
//   aa3 x y z      (n lines)
//   x y z          (m lines, ligand atoms used only for the distance cut)
inline PocketSpec parse_pocket_file(const std::string& path) {
  std::ifstream is = io_detail::open_input(path);
  io_detail::LineReader r{is, path};
  std::string line;
  if (!r.next(line)) r.fail("empty pocket file");

  std::istringstream head(line);
  std::string kw_res, kw_lig;
  long n_res = 0, n_lig = 0;
  head >> kw_res >> n_res >> kw_lig >> n_lig;
  if (kw_res != "RESIDUES" || kw_lig != "LIGATOMS" || !head || n_res < 0 || n_lig < 0)
    r.fail("expected header 'RESIDUES n LIGATOMS m'");
  io_detail::expect_end(r, head);

  PocketSpec spec;
  for (long i = 0; i < n_res; ++i) {
    if (!r.next(line)) r.fail("unexpected end of file in residue block");
    std::istringstream ss(line);
    ResidueRecord res;
    res.id = static_cast<int>(i);
    if (!(ss >> res.aa3)) r.fail("expected residue type");
    if (amino_acid_index(res.aa3) < 0) r.fail("unknown amino acid '" + res.aa3 + "'");
    res.ca.x = io_detail::parse_double(r, ss, "x");
    res.ca.y = io_detail::parse_double(r, ss, "y");
    res.ca.z = io_detail::parse_double(r, ss, "z");
    io_detail::expect_end(r, ss);
    spec.residues.push_back(std::move(res));
  }
  for (long i = 0; i < n_lig; ++i) {
    if (!r.next(line)) r.fail("unexpected end of file in ligand-atom block");
    std::istringstream ss(line);
    Vec3 p;
    p.x = io_detail::parse_double(r, ss, "x");
    p.y = io_detail::parse_double(r, ss, "y");
    p.z = io_detail::parse_double(r, ss, "z");
    io_detail::expect_end(r, ss);
    spec.ligand_atoms.push_back(p);
  }
  if (r.next(line)) r.fail("unexpected content after ligand-atom block");
  return spec;
}

inline void write_pocket_file(const PocketSpec& spec, std::ostream& os) {
  os << "RESIDUES " << spec.residues.size() << " LIGATOMS " << spec.ligand_atoms.size()
     << "\n";
  for (const ResidueRecord& res : spec.residues)
    os << res.aa3 << ' ' << io_detail::fmt_double(res.ca.x) << ' '
       << io_detail::fmt_double(res.ca.y) << ' ' << io_detail::fmt_double(res.ca.z)
       << "\n";
  for (const Vec3& p : spec.ligand_atoms)
    os << io_detail::fmt_double(p.x) << ' ' << io_detail::fmt_double(p.y) << ' '
       << io_detail::fmt_double(p.z) << "\n";
}

inline void write_pocket_file(const PocketSpec& spec, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw data_error("cannot write file: " + path);
  write_pocket_file(spec, os);
}

// Pair manifest for pretraining: one `pocket_path ligand_path` per line.
// Line order defines complex identity. Paths resolve against the manifest
// directory.
struct ManifestEntry {
  std::string pocket_path;
  std::string ligand_path;
  std::size_t line_no = 0;
};

inline std::vector<ManifestEntry> parse_pair_manifest(const std::string& path) {
  std::ifstream is = io_detail::open_input(path);
  io_detail::LineReader r{is, path};
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  while (r.next(line)) {
    std::istringstream ss(line);
    std::string pocket, ligand;
    if (!(ss >> pocket >> ligand)) r.fail("expected 'pocket_path ligand_path'");
    io_detail::expect_end(r, ss);
    entries.push_back({(base / pocket).string(), (base / ligand).string(), r.line_no});
  }
  return entries;
}

}  // namespace geocon
