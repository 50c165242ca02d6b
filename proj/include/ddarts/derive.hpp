#pragma once

#include <cstddef>
#include <vector>

#include "ddarts/genotype.hpp"

namespace ddarts {

struct DeriveRequest {
  Genotype source;
  size_t n = 0;  // desired number of cells
};

// Source-cell index for each of the n output slots. For n <= c_count this is
// the prefix [0..n-1]; otherwise the searched normal-cell runs are repeated
// between the relocated reduction slots at floor(n/3) and floor(2n/3), which
// receive source cells m = floor(c_count/3) and m2 = floor(2*c_count/3).
// Throws Error(Errc::underivable_source) when a repetition modulus degenerates
// to zero (c_count = 3 or 4 with n > c_count).
std::vector<size_t> derive_indices(size_t c_count, size_t n);

// Expands the source genotype to n cells. Cells are copies of the source
// cells chosen by derive_indices; share groups collect all copies of one
// source cell. For n > |C| the source must keep its reduction cells at the
// default 1/3 and 2/3 slots.
Genotype derive_genotype(const DeriveRequest& req);

}  // namespace ddarts
