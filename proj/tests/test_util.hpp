#pragma once

#include "ddarts/genotype.hpp"
#include "ddarts/rng.hpp"

namespace ddarts::testutil {

// Random genotype with per-edge popcount drawn from {0, 1, 2}.
inline Genotype random_genotype(Rng& rng, SearchSpace space, size_t cells, int steps) {
  Genotype g;
  g.space = space;
  g.reduction_positions = default_reduction_positions(cells);
  const size_t K = static_cast<size_t>(op_count(space));
  for (size_t ci = 0; ci < cells; ++ci) {
    bool reduce = false;
    for (size_t p : g.reduction_positions) reduce |= (p == ci);
    CellSpec cell = make_cell(steps, reduce ? CellKind::reduction : CellKind::normal, space);
    for (EdgeSpec& e : cell.edges) {
      size_t n_ops = rng.below(3);
      while (e.popcount() < static_cast<int>(n_ops)) {
        e.selected[rng.below(K)] = 1;
      }
    }
    g.cells.push_back(std::move(cell));
  }
  g.share_groups = share_groups_by_equality(g.cells);
  return g;
}

}  // namespace ddarts::testutil
