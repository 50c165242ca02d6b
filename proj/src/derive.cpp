#include "ddarts/derive.hpp"

#include <algorithm>

namespace ddarts {

std::vector<size_t> derive_indices(size_t c_count, size_t n) {
  if (c_count == 0 || n == 0) {
    throw Error(Errc::invalid_argument, "derive_indices requires c_count >= 1 and n >= 1");
  }
  std::vector<size_t> out;
  out.reserve(n);
  if (n <= c_count) {
    for (size_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }

  const size_t m = c_count / 3;
  const size_t m2 = 2 * c_count / 3;
  if (c_count < 3) {
    throw Error(Errc::underivable_source,
                "source must have at least 3 cells to be expanded");
  }
  const size_t mid_mod = m2 - 1 - m;       // repetition span between the reductions
  const size_t tail_mod = c_count - 1 - m2;  // repetition span after the second reduction
  if (mid_mod == 0 || tail_mod == 0) {
    throw Error(Errc::underivable_source,
                "no normal cells to repeat between or after the reduction slots (|C| = " +
                    std::to_string(c_count) + ")");
  }

  const size_t first_slot = n / 3;
  const size_t second_slot = 2 * n / 3;
  for (size_t i = 0; i < n; ++i) {
    size_t c;
    if (i < first_slot) {
      c = i % m;
    } else if (i == first_slot) {
      c = m;
    } else if (i < second_slot) {
      c = i % mid_mod + m + 1;
    } else if (i == second_slot) {
      c = m2;
    } else {
      c = i % tail_mod + m2 + 1;
    }
    out.push_back(c);
  }
  return out;
}

Genotype derive_genotype(const DeriveRequest& req) {
  validate(req.source);
  const size_t c_count = req.source.cell_count();

  if (req.n > c_count) {
    auto expected = default_reduction_positions(c_count);
    if (req.source.reduction_positions != expected) {
      throw Error(Errc::underivable_source,
                  "expansion requires the source's reduction cells at the default 1/3 and 2/3 "
                  "positions");
    }
    if (expected.size() != 2) {
      throw Error(Errc::underivable_source,
                  "expansion requires exactly two reduction positions in the source");
    }
  }

  const auto indices = derive_indices(c_count, req.n);

  Genotype g;
  g.space = req.source.space;
  g.cells.reserve(req.n);
  std::vector<std::vector<size_t>> groups(c_count);
  for (size_t j = 0; j < indices.size(); ++j) {
    const CellSpec& src = req.source.cells[indices[j]];
    g.cells.push_back(src);
    groups[indices[j]].push_back(j);
    if (src.kind == CellKind::reduction) g.reduction_positions.push_back(j);
  }
  for (auto& grp : groups) {
    if (!grp.empty()) g.share_groups.push_back(std::move(grp));
  }
  validate(g);
  return g;
}

}  // namespace ddarts
