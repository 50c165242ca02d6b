#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ddarts/error.hpp"

namespace ddarts {

// The 12 primitive operations. The first 7 form the original search space S;
// all 12 form the extended space So. The ordinal index of an operation is its
// position in every per-edge vector, so the ordering here is load-bearing.
enum class OpKind : int {
  skip_connect = 0,
  max_pool_3x3,
  avg_pool_3x3,
  sep_conv_3x3,
  sep_conv_5x5,
  dil_conv_3x3,
  dil_conv_5x5,
  conv_3x1_1x3,
  conv_7x1_1x7,
  simple_conv_1x1,
  simple_conv_3x3,
  bottleneck_1x3x1,
};

inline constexpr int kNumOpsS = 7;
inline constexpr int kNumOpsSo = 12;

enum class SearchSpace { S, So };

inline int op_count(SearchSpace s) { return s == SearchSpace::S ? kNumOpsS : kNumOpsSo; }

std::string_view op_name(OpKind k);
std::optional<OpKind> op_from_name(std::string_view name);

std::string_view search_space_name(SearchSpace s);
std::optional<SearchSpace> search_space_from_name(std::string_view name);

// Benchmark score per operation as a fraction in (0,1). These constants are
// frozen inputs of the distance metric, not something the library recomputes.
class OpScoreTable {
 public:
  OpScoreTable() = default;
  explicit OpScoreTable(const std::array<double, kNumOpsSo>& scores);

  double score(OpKind k) const { return scores_[static_cast<size_t>(k)]; }
  const std::array<double, kNumOpsSo>& raw() const { return scores_; }

 private:
  std::array<double, kNumOpsSo> scores_{};
};

// The published benchmark scores (percentages / 100).
const OpScoreTable& default_op_scores();

// Per-index Hamming weights for the active search space: the first K
// operation scores in ordinal order.
std::vector<double> hamming_weights(SearchSpace space, const OpScoreTable& table = default_op_scores());

}  // namespace ddarts
