// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geocon/biograph.hpp"
#include "geocon/common.hpp"

namespace geocon {

// Hashed circular-substructure bit set for a ligand. Deterministic for a
// fixed LigandSpec regardless of atom ordering.
struct Fingerprint {
  std::size_t width = 2048;
  std::size_t radius = 2;
  std::vector<std::uint32_t> bits;  // sorted, unique, all < width

  bool operator==(const Fingerprint& o) const {
    return width == o.width && radius == o.radius && bits == o.bits;
  }
};

namespace fp_detail {

// Fixed, seedless FNV-1a so bit indices are stable across platforms.
inline std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string atom_invariant(const LigandAtom& a) {
  std::string s = a.element;
  if (a.charge != 0) {
    s += a.charge > 0 ? '+' : '-';
    s += std::to_string(std::abs(a.charge));
  }
  return s;
}

// Canonical string of the depth-r environment around `atom`: the atom
// invariant followed by the neighbor expansions, each prefixed with the
// bond order and sorted lexicographically. Independent of input atom order.
inline std::string environment(const std::vector<LigandAtom>& atoms,
                               const std::vector<std::vector<std::pair<std::size_t, int>>>& adj,
                               std::size_t atom, std::size_t depth) {
  std::string s = atom_invariant(atoms[atom]);
  if (depth == 0 || adj[atom].empty()) return s;
  std::vector<std::string> parts;
  parts.reserve(adj[atom].size());
  for (const auto& [nb, order] : adj[atom])
    parts.push_back(std::to_string(order) + "~" + environment(atoms, adj, nb, depth - 1));
  std::sort(parts.begin(), parts.end());
  s += '(';
  for (std::size_t p = 0; p < parts.size(); ++p) {
    if (p) s += ',';
    s += parts[p];
  }
  s += ')';
  return s;
}

}  // namespace fp_detail

// Circular fingerprint: for each atom and each radius r <= `radius`, the
// canonical environment string is hashed onto a bit. Radii whose ball no
// longer grows are skipped, so an isolated atom contributes exactly its
// r=0 environment.
inline Fingerprint fingerprint(const LigandSpec& ligand, std::size_t radius = 2,
                               std::size_t width = 2048) {
  if (ligand.atoms.empty()) throw data_error("fingerprint: empty ligand");
  require(width > 0, "fingerprint: width must be positive");

  const std::size_t n = ligand.atoms.size();
  std::vector<std::vector<std::pair<std::size_t, int>>> adj(n);
  for (const LigandBond& b : ligand.bonds) {
    if (b.i >= n || b.j >= n) throw data_error("fingerprint: bond references missing atom");
    adj[b.i].emplace_back(b.j, b.order);
    adj[b.j].emplace_back(b.i, b.order);
  }

  std::set<std::uint32_t> bits;
  std::vector<char> in_ball(n);
  for (std::size_t a = 0; a < n; ++a) {
    // Grow the BFS ball one shell at a time; stop once it stops growing.
    std::fill(in_ball.begin(), in_ball.end(), 0);
    in_ball[a] = 1;
    std::vector<std::size_t> frontier{a};
    std::size_t ball_size = 1;
    for (std::size_t r = 0; r <= radius; ++r) {
      if (r > 0) {
        std::vector<std::size_t> next;
        for (std::size_t u : frontier)
          for (const auto& [v, order] : adj[u])
            if (!in_ball[v]) {
              in_ball[v] = 1;
              next.push_back(v);
            }
        if (next.empty()) break;  // environment stopped growing
        ball_size += next.size();
        frontier = std::move(next);
      }
      const std::string env = fp_detail::environment(ligand.atoms, adj, a, r);
      bits.insert(static_cast<std::uint32_t>(fp_detail::hash_string(env) % width));
    }
    (void)ball_size;
  }

  Fingerprint fp;
  fp.width = width;
  fp.radius = radius;
  fp.bits.assign(bits.begin(), bits.end());
  return fp;
}

// |a n b| / |a u b| over bit sets; 1.0 when both are empty.
inline double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.width != b.width)
    throw config_error("tanimoto: fingerprint width mismatch (" +
                       std::to_string(a.width) + " vs " + std::to_string(b.width) + ")");
  if (a.bits.empty() && b.bits.empty()) return 1.0;
  std::size_t inter = 0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.bits.size() && ib < b.bits.size()) {
    if (a.bits[ia] == b.bits[ib]) {
      ++inter;
      ++ia;
      ++ib;
    } else if (a.bits[ia] < b.bits[ib]) {
      ++ia;
    } else {
      ++ib;
    }
  }
  const std::size_t uni = a.bits.size() + b.bits.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

// Dump line: `id width b1 b2 ...` with sorted bit indices.
inline std::string fingerprint_dump_line(const std::string& id, const Fingerprint& fp) {
  std::ostringstream os;
  os << id << ' ' << fp.width;
  for (std::uint32_t b : fp.bits) os << ' ' << b;
  return os.str();
}

}  // namespace geocon
