#include "ddarts/space.hpp"

#include "ddarts/error.hpp"

namespace ddarts {

BigInt search_space_size(unsigned K, unsigned N) {
  if (K == 0 || N == 0) {
    throw Error(Errc::invalid_argument, "search_space_size requires K >= 1 and N >= 1");
  }
  BigInt size = 1;
  BigInt k2 = BigInt(K) * K;
  for (unsigned i = 1; i <= N; ++i) {
    size *= BigInt((i + 1) * i / 2) * k2;
  }
  return size;
}

BigInt total_space_size(unsigned K, unsigned N, unsigned cells) {
  if (cells == 0) {
    throw Error(Errc::invalid_argument, "total_space_size requires at least one cell");
  }
  BigInt base = search_space_size(K, N);
  BigInt total = 1;
  for (unsigned i = 0; i < cells; ++i) total *= base;
  return total;
}

int decimal_magnitude(const BigInt& v) {
  if (v < 1) {
    throw Error(Errc::invalid_argument, "decimal_magnitude requires a positive count");
  }
  return static_cast<int>(v.str().size()) - 1;
}

}  // namespace ddarts
