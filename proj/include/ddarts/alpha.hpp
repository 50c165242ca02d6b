#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "ddarts/genotype.hpp"

namespace ddarts {

// Continuous architecture parameters. Cells belonging to the same share group
// reference one shared logit block, so the table stores one (edge x K) matrix
// per group plus the cell->group mapping.
struct AlphaTable {
  SearchSpace space = SearchSpace::S;
  int steps = 4;
  size_t n_cells = 0;
  std::vector<size_t> reduction_positions;
  std::vector<std::vector<size_t>> share_groups;
  std::vector<size_t> cell_group;                         // cell index -> group index
  std::vector<std::vector<std::vector<double>>> logits;   // group -> edge -> op

  const std::vector<std::vector<double>>& cell_logits(size_t cell) const {
    return logits[cell_group[cell]];
  }
  size_t group_count() const { return logits.size(); }

  // Total number of stored logits (each shared block counted once).
  size_t logit_count() const;
};

// Blank table: one group per cell, every logit = `fill`.
AlphaTable blank_alpha(SearchSpace space, int steps, size_t n_cells,
                       const std::vector<size_t>& reduction_positions, double fill = 0.0);

// Checks internal consistency; throws Error(Errc::shape_mismatch) otherwise.
void validate(const AlphaTable& a);

// hot where the genotype selects an operation, cold elsewhere. Requires
// hot > cold. Share groups carry over from the genotype.
AlphaTable genotype_to_alpha(const Genotype& g, double hot, double cold);

// Fraction of logits with sigmoid above 0.9 / below 0.1; shared blocks are
// counted once.
std::pair<double, double> dominant_fraction(const AlphaTable& a);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace ddarts
