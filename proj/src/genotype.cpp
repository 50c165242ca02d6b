#include "ddarts/genotype.hpp"

#include <algorithm>
#include <map>

namespace ddarts {

std::string_view cell_kind_name(CellKind k) { return k == CellKind::normal ? "normal" : "reduction"; }

int EdgeSpec::popcount() const {
  int n = 0;
  for (uint8_t b : selected) n += (b != 0);
  return n;
}

std::vector<std::pair<int, int>> edge_list(int steps) {
  std::vector<std::pair<int, int>> edges;
  for (int to = 2; to < steps + 2; ++to) {
    for (int from = 0; from < to; ++from) edges.emplace_back(from, to);
  }
  return edges;
}

int edge_count(int steps) {
  // sum_{k=0}^{steps-1} (k+2)
  return steps * (steps + 3) / 2;
}

int edge_index(int steps, int from_node, int to_node) {
  if (to_node < 2 || to_node >= steps + 2) return -1;
  if (from_node < 0 || from_node >= to_node) return -1;
  int base = 0;
  for (int to = 2; to < to_node; ++to) base += to;
  return base + from_node;
}

std::vector<size_t> default_reduction_positions(size_t n_cells) {
  std::vector<size_t> pos;
  size_t a = n_cells / 3;
  size_t b = 2 * n_cells / 3;
  pos.push_back(a);
  if (b != a) pos.push_back(b);
  return pos;
}

CellSpec make_cell(int steps, CellKind kind, SearchSpace space) {
  CellSpec cell;
  cell.steps = steps;
  cell.kind = kind;
  for (auto [from, to] : edge_list(steps)) {
    EdgeSpec e;
    e.from_node = from;
    e.to_node = to;
    e.selected.assign(static_cast<size_t>(op_count(space)), 0);
    cell.edges.push_back(std::move(e));
  }
  return cell;
}

std::vector<std::vector<size_t>> share_groups_by_equality(const std::vector<CellSpec>& cells) {
  std::vector<std::vector<size_t>> groups;
  std::vector<const CellSpec*> reps;
  for (size_t i = 0; i < cells.size(); ++i) {
    bool placed = false;
    for (size_t g = 0; g < reps.size(); ++g) {
      if (*reps[g] == cells[i]) {
        groups[g].push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) {
      groups.push_back({i});
      reps.push_back(&cells[i]);
    }
  }
  return groups;
}

namespace {

std::string cell_loc(size_t i) { return "cell " + std::to_string(i); }

}  // namespace

void validate(const Genotype& g) {
  if (g.cells.empty()) {
    throw Error(Errc::invariant_violation, "genotype has no cells");
  }
  const int K = op_count(g.space);
  const int steps = g.cells.front().steps;
  for (size_t ci = 0; ci < g.cells.size(); ++ci) {
    const CellSpec& cell = g.cells[ci];
    if (cell.steps != steps) {
      throw Error(Errc::invariant_violation, "cells disagree on step count", cell_loc(ci));
    }
    if (cell.steps < 1) {
      throw Error(Errc::invariant_violation, "cell must have at least one step", cell_loc(ci));
    }
    auto canonical = edge_list(cell.steps);
    if (cell.edges.size() != canonical.size()) {
      throw Error(Errc::invariant_violation,
                  "edge list must cover every admissible (from,to) pair once", cell_loc(ci));
    }
    for (size_t ei = 0; ei < cell.edges.size(); ++ei) {
      const EdgeSpec& e = cell.edges[ei];
      std::string loc = cell_loc(ci) + " edge (" + std::to_string(e.from_node) + "," +
                        std::to_string(e.to_node) + ")";
      if (e.from_node != canonical[ei].first || e.to_node != canonical[ei].second) {
        throw Error(Errc::invariant_violation, "edges out of canonical order or missing",
                    cell_loc(ci) + " edge slot " + std::to_string(ei));
      }
      if (e.from_node >= e.to_node) {
        throw Error(Errc::invariant_violation, "edge must run from a lower to a higher node", loc);
      }
      if (e.selected.size() != static_cast<size_t>(K)) {
        throw Error(Errc::invariant_violation, "selection vector length must equal the op count",
                    loc);
      }
      if (e.popcount() > 2) {
        throw Error(Errc::invariant_violation, "at most 2 operations may be selected per edge", loc);
      }
    }
  }

  std::set<size_t> reductions(g.reduction_positions.begin(), g.reduction_positions.end());
  if (reductions.size() != g.reduction_positions.size() ||
      !std::is_sorted(g.reduction_positions.begin(), g.reduction_positions.end())) {
    throw Error(Errc::invariant_violation, "reduction positions must be sorted and unique");
  }
  for (size_t p : reductions) {
    if (p >= g.cells.size()) {
      throw Error(Errc::invariant_violation, "reduction position out of range",
                  "position " + std::to_string(p));
    }
  }
  for (size_t ci = 0; ci < g.cells.size(); ++ci) {
    bool should_reduce = reductions.count(ci) > 0;
    bool is_reduce = g.cells[ci].kind == CellKind::reduction;
    if (should_reduce != is_reduce) {
      throw Error(Errc::invariant_violation, "cell kind disagrees with reduction positions",
                  cell_loc(ci));
    }
  }

  // share_groups: non-empty disjoint cover with identical members.
  std::vector<int> seen(g.cells.size(), 0);
  for (size_t gi = 0; gi < g.share_groups.size(); ++gi) {
    const auto& group = g.share_groups[gi];
    std::string loc = "share group " + std::to_string(gi);
    if (group.empty()) throw Error(Errc::invariant_violation, "share group is empty", loc);
    for (size_t member : group) {
      if (member >= g.cells.size()) {
        throw Error(Errc::invariant_violation, "share group member out of range", loc);
      }
      if (seen[member]++) {
        throw Error(Errc::invariant_violation, "cell appears in more than one share group", loc);
      }
      if (!(g.cells[member] == g.cells[group.front()])) {
        throw Error(Errc::invariant_violation, "cells in a share group must be identical", loc);
      }
    }
  }
  for (size_t ci = 0; ci < seen.size(); ++ci) {
    if (!seen[ci]) {
      throw Error(Errc::invariant_violation, "cell missing from share groups", cell_loc(ci));
    }
  }
}

bool same_selections(const Genotype& a, const Genotype& b) {
  if (a.cells.size() != b.cells.size()) return false;
  for (size_t ci = 0; ci < a.cells.size(); ++ci) {
    if (a.cells[ci].edges.size() != b.cells[ci].edges.size()) return false;
    for (size_t ei = 0; ei < a.cells[ci].edges.size(); ++ei) {
      if (a.cells[ci].edges[ei].selected != b.cells[ci].edges[ei].selected) return false;
    }
  }
  return true;
}

}  // namespace ddarts
