#include "ddarts/alpha.hpp"

#include <cmath>

namespace ddarts {

size_t AlphaTable::logit_count() const {
  size_t n = 0;
  for (const auto& block : logits) {
    for (const auto& edge : block) n += edge.size();
  }
  return n;
}

AlphaTable blank_alpha(SearchSpace space, int steps, size_t n_cells,
                       const std::vector<size_t>& reduction_positions, double fill) {
  AlphaTable a;
  a.space = space;
  a.steps = steps;
  a.n_cells = n_cells;
  a.reduction_positions = reduction_positions;
  a.cell_group.resize(n_cells);
  const size_t edges = static_cast<size_t>(edge_count(steps));
  const size_t K = static_cast<size_t>(op_count(space));
  for (size_t c = 0; c < n_cells; ++c) {
    a.share_groups.push_back({c});
    a.cell_group[c] = c;
    a.logits.emplace_back(edges, std::vector<double>(K, fill));
  }
  return a;
}

void validate(const AlphaTable& a) {
  if (a.n_cells == 0) throw Error(Errc::shape_mismatch, "alpha table covers no cells");
  if (a.cell_group.size() != a.n_cells) {
    throw Error(Errc::shape_mismatch, "cell->group map size disagrees with cell count");
  }
  const size_t edges = static_cast<size_t>(edge_count(a.steps));
  const size_t K = static_cast<size_t>(op_count(a.space));
  for (size_t c = 0; c < a.n_cells; ++c) {
    if (a.cell_group[c] >= a.logits.size()) {
      throw Error(Errc::shape_mismatch, "cell mapped to a missing group",
                  "cell " + std::to_string(c));
    }
  }
  for (size_t g = 0; g < a.logits.size(); ++g) {
    if (a.logits[g].size() != edges) {
      throw Error(Errc::shape_mismatch, "alpha edge set mismatches the cell DAG",
                  "group " + std::to_string(g));
    }
    for (const auto& edge : a.logits[g]) {
      if (edge.size() != K) {
        throw Error(Errc::shape_mismatch, "alpha op vector length mismatches the search space",
                    "group " + std::to_string(g));
      }
      for (double v : edge) {
        if (!std::isfinite(v)) {
          throw Error(Errc::shape_mismatch, "alpha logits must be finite",
                      "group " + std::to_string(g));
        }
      }
    }
  }
  if (a.share_groups.size() != a.logits.size()) {
    throw Error(Errc::shape_mismatch, "share group list disagrees with logit blocks");
  }
}

AlphaTable genotype_to_alpha(const Genotype& g, double hot, double cold) {
  if (!(hot > cold)) {
    throw Error(Errc::invalid_argument, "genotype_to_alpha requires hot > cold");
  }
  validate(g);
  AlphaTable a;
  a.space = g.space;
  a.steps = g.steps();
  a.n_cells = g.cell_count();
  a.reduction_positions = g.reduction_positions;
  a.share_groups = g.share_groups;
  a.cell_group.assign(a.n_cells, 0);
  for (size_t gi = 0; gi < g.share_groups.size(); ++gi) {
    for (size_t member : g.share_groups[gi]) a.cell_group[member] = gi;
  }
  const size_t K = static_cast<size_t>(op_count(g.space));
  for (size_t gi = 0; gi < g.share_groups.size(); ++gi) {
    const CellSpec& cell = g.cells[g.share_groups[gi].front()];
    std::vector<std::vector<double>> block;
    block.reserve(cell.edges.size());
    for (const EdgeSpec& e : cell.edges) {
      std::vector<double> row(K, cold);
      for (size_t k = 0; k < K; ++k) {
        if (e.selected[k]) row[k] = hot;
      }
      block.push_back(std::move(row));
    }
    a.logits.push_back(std::move(block));
  }
  return a;
}

std::pair<double, double> dominant_fraction(const AlphaTable& a) {
  size_t above = 0, below = 0, total = 0;
  for (const auto& block : a.logits) {
    for (const auto& edge : block) {
      for (double v : edge) {
        double s = sigmoid(v);
        above += s > 0.9;
        below += s < 0.1;
        ++total;
      }
    }
  }
  if (total == 0) return {0.0, 0.0};
  return {static_cast<double>(above) / total, static_cast<double>(below) / total};
}

}  // namespace ddarts
