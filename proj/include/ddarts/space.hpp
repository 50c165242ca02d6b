#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace ddarts {

using BigInt = boost::multiprecision::cpp_int;

// Number of distinct single-cell configurations with K candidate operations
// per edge and N intermediate nodes: prod_{i=1}^{N} ((i+1)i/2) K^2, exact.
BigInt search_space_size(unsigned K, unsigned N);

// Search-space size of a c-cell network with individual cells:
// search_space_size(K,N)^c.
BigInt total_space_size(unsigned K, unsigned N, unsigned cells);

// floor(log10(v)) for v >= 1; the "decimal magnitude" of a count.
int decimal_magnitude(const BigInt& v);

}  // namespace ddarts
