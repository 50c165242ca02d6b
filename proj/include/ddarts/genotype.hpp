#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "ddarts/ops.hpp"

namespace ddarts {

enum class CellKind { normal, reduction };

std::string_view cell_kind_name(CellKind k);

// One intra-cell connection. `selected` is a binary vector over the active
// search space's operations, ordinal order; at most two bits may be set.
struct EdgeSpec {
  int from_node = 0;
  int to_node = 0;
  std::vector<uint8_t> selected;

  int popcount() const;
  bool operator==(const EdgeSpec&) const = default;
};

// A cell DAG: nodes 0 and 1 are the two cell inputs, nodes 2..steps+1 are the
// intermediate nodes. Edges are stored in canonical (to_node, from_node) order
// and cover every admissible pair.
struct CellSpec {
  int steps = 4;
  CellKind kind = CellKind::normal;
  std::vector<EdgeSpec> edges;

  bool operator==(const CellSpec&) const = default;
};

struct Genotype {
  SearchSpace space = SearchSpace::S;
  std::vector<CellSpec> cells;
  std::vector<size_t> reduction_positions;          // sorted, unique
  std::vector<std::vector<size_t>> share_groups;    // partition of cell indices

  size_t cell_count() const { return cells.size(); }
  int steps() const { return cells.empty() ? 0 : cells.front().steps; }

  bool operator==(const Genotype&) const = default;
};

// Canonical edge enumeration for a cell with `steps` intermediate nodes:
// for each to_node in [2, steps+1], every from_node < to_node.
std::vector<std::pair<int, int>> edge_list(int steps);
int edge_count(int steps);
// Index of (from,to) within edge_list(steps); -1 when not admissible.
int edge_index(int steps, int from_node, int to_node);

// Number of intermediate nodes feeding a given edge index etc. are derivable
// from edge_list; no further helpers needed.

// Reduction cells sit at the 1/3 and 2/3 depth positions by default.
std::vector<size_t> default_reduction_positions(size_t n_cells);

// Builds an empty-selection cell with canonical edges.
CellSpec make_cell(int steps, CellKind kind, SearchSpace space);

// Groups cell indices by structural equality of their CellSpec, preserving
// first-occurrence order.
std::vector<std::vector<size_t>> share_groups_by_equality(const std::vector<CellSpec>& cells);

// Throws Error(Errc::invariant_violation) with a location string on the first
// violated genotype invariant.
void validate(const Genotype& g);

// True when every cell's per-edge selections coincide (layout metadata aside).
bool same_selections(const Genotype& a, const Genotype& b);

}  // namespace ddarts
