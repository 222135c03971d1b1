// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "geocon/common.hpp"
#include "geocon/matrix.hpp"

namespace geocon {

enum class GraphKind : std::uint8_t { pocket = 0, ligand = 1 };

inline const char* graph_kind_name(GraphKind k) {
  return k == GraphKind::pocket ? "pocket" : "ligand";
}

// Directed edge: node `i` aggregates from neighbor `j`. Builders emit both
// orientations of every undirected adjacency.
struct GraphEdge {
  std::size_t i = 0;
  std::size_t j = 0;
};

// One-hot vocabularies. Pocket nodes use the 20 standard amino acids;
// ligand nodes a 16-element heavy-atom vocabulary plus "other". Both are
// zero-padded to a common feature width so one encoder body serves either
// kind.
inline constexpr std::array<std::string_view, 20> kAminoAcids = {
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE",
    "LEU", "LYS", "MET", "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL"};

inline constexpr std::array<std::string_view, 16> kElementVocab = {
    "C", "N", "O", "S", "P", "F", "Cl", "Br", "I", "B",
    "Si", "Se", "Fe", "Zn", "Mg", "Ca"};

// Symbols the ligand parser accepts beyond the featurized vocabulary
// (bucketed into "other"). Anything else is a format error.
inline constexpr std::array<std::string_view, 10> kExtraElements = {
    "Na", "K", "Li", "Al", "Cu", "Mn", "Co", "Ni", "As", "Sn"};

inline constexpr std::size_t kNodeFeatureDim = 20;  // max(20 AA, 16+1 elements)
inline constexpr std::size_t kEdgeFeatureDim = 3;   // max(1 distance, 3 bond orders)
inline constexpr std::size_t kMaxBondOrder = 3;

inline int amino_acid_index(std::string_view aa3) {
  for (std::size_t i = 0; i < kAminoAcids.size(); ++i)
    if (kAminoAcids[i] == aa3) return static_cast<int>(i);
  return -1;
}

// -1 unknown, kElementVocab.size() = "other" bucket.
inline int element_feature_index(std::string_view symbol) {
  for (std::size_t i = 0; i < kElementVocab.size(); ++i)
    if (kElementVocab[i] == symbol) return static_cast<int>(i);
  for (std::string_view e : kExtraElements)
    if (e == symbol) return static_cast<int>(kElementVocab.size());
  return -1;
}

inline bool is_known_element(std::string_view symbol) {
  return symbol == "H" || element_feature_index(symbol) >= 0;
}

// Shared 3D graph for pockets and ligands: coordinates X, node features V,
// directed edges with features E, and per-node direction vectors N.
// Immutable after construction; safe to share read-only across threads.
struct BioGraph3D {
  GraphKind kind = GraphKind::pocket;
  std::size_t n = 0;
  std::vector<Vec3> coords;
  DenseMatrix node_features;  // n x kNodeFeatureDim
  std::vector<GraphEdge> edges;
  DenseMatrix edge_features;  // edges.size() x kEdgeFeatureDim
  std::vector<Vec3> directions;

  // CSR-style slices: edges are sorted by (i, j); edge_offset[i]..edge_offset[i+1]
  // are node i's incident directed edges. Fixed iteration order keeps every
  // aggregation deterministic.
  std::vector<std::size_t> edge_offset;

  std::size_t edge_count() const { return edges.size(); }

  void build_offsets() {
    edge_offset.assign(n + 1, 0);
    for (const GraphEdge& e : edges) ++edge_offset[e.i + 1];
    for (std::size_t i = 0; i < n; ++i) edge_offset[i + 1] += edge_offset[i];
  }
};

struct ResidueRecord {
  int id = 0;
  std::string aa3;
  Vec3 ca;
};

struct PocketSpec {
  std::vector<ResidueRecord> residues;
  std::vector<Vec3> ligand_atoms;  // used only for the distance cut
  double cut_radius = 10.0;
  std::size_t k = 8;
};

struct LigandAtom {
  std::string element;
  Vec3 pos;
  int charge = 0;
};

struct LigandBond {
  std::size_t i = 0;
  std::size_t j = 0;
  int order = 1;
};

// Heavy-atom molecule; hydrogens are removed at ingestion time.
struct LigandSpec {
  std::vector<LigandAtom> atoms;
  std::vector<LigandBond> bonds;
};

// n_i = unit vector from x_i toward the centroid of its neighbors.
// Zero vector for isolated nodes or when the centroid coincides with x_i.
inline void init_directions(BioGraph3D& g) {
  g.directions.assign(g.n, Vec3{});
  for (std::size_t i = 0; i < g.n; ++i) {
    const std::size_t lo = g.edge_offset[i];
    const std::size_t hi = g.edge_offset[i + 1];
    if (hi == lo) continue;
    Vec3 centroid{};
    for (std::size_t e = lo; e < hi; ++e) centroid += g.coords[g.edges[e].j];
    const double inv = 1.0 / static_cast<double>(hi - lo);
    Vec3 v = centroid * inv - g.coords[i];
    const double norm = v.norm();
    if (norm > 1e-9) g.directions[i] = v * (1.0 / norm);
  }
}

namespace detail {

inline void finalize_edges(BioGraph3D& g, const std::set<std::pair<std::size_t, std::size_t>>& dir_edges) {
  g.edges.clear();
  g.edges.reserve(dir_edges.size());
  for (const auto& [i, j] : dir_edges) g.edges.push_back({i, j});
  g.build_offsets();
}

}  // namespace detail

// Pocket graph: residues whose C-alpha lies within the cut radius of any
// ligand atom, kNN edges over C-alpha distances (union-symmetrized, ties
// broken by smaller node index), one-hot amino-acid features, and the
// Euclidean distance as edge feature.
inline BioGraph3D build_pocket_graph(const PocketSpec& spec) {
  require(spec.cut_radius > 0.0, "build_pocket_graph: cut radius must be positive");
  require(spec.k >= 1, "build_pocket_graph: k must be >= 1");

  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < spec.residues.size(); ++r) {
    const Vec3& ca = spec.residues[r].ca;
    if (!ca.finite()) throw data_error("build_pocket_graph: non-finite coordinate");
    for (const Vec3& la : spec.ligand_atoms) {
      if ((ca - la).norm() <= spec.cut_radius) {
        kept.push_back(r);
        break;
      }
    }
  }
  if (kept.empty())
    throw data_error("build_pocket_graph: no residue within " +
                     std::to_string(spec.cut_radius) + " A of any ligand atom");

  BioGraph3D g;
  g.kind = GraphKind::pocket;
  g.n = kept.size();
  g.coords.reserve(g.n);
  g.node_features = DenseMatrix(g.n, kNodeFeatureDim);
  for (std::size_t i = 0; i < g.n; ++i) {
    const ResidueRecord& res = spec.residues[kept[i]];
    const int aa = amino_acid_index(res.aa3);
    if (aa < 0)
      throw data_error("build_pocket_graph: unknown amino acid '" + res.aa3 + "'");
    g.coords.push_back(res.ca);
    g.node_features(i, static_cast<std::size_t>(aa)) = 1.0;
  }

  // kNN over C-alpha distances, brute-force oracle semantics: sort every
  // candidate by (distance, index), keep the first k.
  std::set<std::pair<std::size_t, std::size_t>> dir_edges;
  for (std::size_t i = 0; i < g.n; ++i) {
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(g.n - 1);
    for (std::size_t j = 0; j < g.n; ++j) {
      if (j == i) continue;
      cand.emplace_back((g.coords[i] - g.coords[j]).norm2(), j);
    }
    std::sort(cand.begin(), cand.end());
    const std::size_t take = std::min(spec.k, cand.size());
    for (std::size_t t = 0; t < take; ++t) {
      dir_edges.emplace(i, cand[t].second);
      dir_edges.emplace(cand[t].second, i);
    }
  }
  detail::finalize_edges(g, dir_edges);

  g.edge_features = DenseMatrix(g.edges.size(), kEdgeFeatureDim);
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    g.edge_features(e, 0) = (g.coords[g.edges[e].i] - g.coords[g.edges[e].j]).norm();

  init_directions(g);
  return g;
}

// Ligand graph: heavy atoms with element one-hot features, covalent bonds
// in both directions with a bond-order one-hot edge feature.
inline BioGraph3D build_ligand_graph(const LigandSpec& spec) {
  if (spec.atoms.empty()) throw data_error("build_ligand_graph: empty molecule");

  BioGraph3D g;
  g.kind = GraphKind::ligand;
  g.n = spec.atoms.size();
  g.coords.reserve(g.n);
  g.node_features = DenseMatrix(g.n, kNodeFeatureDim);
  for (std::size_t i = 0; i < g.n; ++i) {
    const LigandAtom& a = spec.atoms[i];
    if (a.element == "H")
      throw data_error("build_ligand_graph: hydrogen atoms must be removed first");
    const int idx = element_feature_index(a.element);
    if (idx < 0)
      throw data_error("build_ligand_graph: unknown element '" + a.element + "'");
    if (!a.pos.finite()) throw data_error("build_ligand_graph: non-finite coordinate");
    g.coords.push_back(a.pos);
    g.node_features(i, static_cast<std::size_t>(idx)) = 1.0;
  }

  std::set<std::pair<std::size_t, std::size_t>> dir_edges;
  std::vector<int> order_of;
  std::vector<std::pair<std::size_t, std::size_t>> pair_of;
  for (const LigandBond& b : spec.bonds) {
    if (b.i >= g.n || b.j >= g.n || b.i == b.j)
      throw data_error("build_ligand_graph: bond references invalid atom");
    if (b.order < 1 || b.order > static_cast<int>(kMaxBondOrder))
      throw data_error("build_ligand_graph: unsupported bond order " +
                       std::to_string(b.order));
    dir_edges.emplace(b.i, b.j);
    dir_edges.emplace(b.j, b.i);
  }
  detail::finalize_edges(g, dir_edges);

  g.edge_features = DenseMatrix(g.edges.size(), kEdgeFeatureDim);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const GraphEdge& ge = g.edges[e];
    int order = 0;
    for (const LigandBond& b : spec.bonds)
      if ((b.i == ge.i && b.j == ge.j) || (b.i == ge.j && b.j == ge.i)) order = b.order;
    g.edge_features(e, static_cast<std::size_t>(order - 1)) = 1.0;
  }

  init_directions(g);
  return g;
}

}  // namespace geocon
