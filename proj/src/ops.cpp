#include "ddarts/ops.hpp"

namespace ddarts {

namespace {

constexpr std::array<std::string_view, kNumOpsSo> kOpNames = {
    "skip_connect",   "max_pool_3x3",   "avg_pool_3x3",    "sep_conv_3x3",
    "sep_conv_5x5",   "dil_conv_3x3",   "dil_conv_5x5",    "conv_3x1_1x3",
    "conv_7x1_1x7",   "simple_conv_1x1", "simple_conv_3x3", "bottleneck_1x3x1",
};

// Score table, percentages / 100, indexed by OpKind ordinal.
constexpr std::array<double, kNumOpsSo> kDefaultScores = {
    0.8215,  // skip_connect
    0.8296,  // max_pool_3x3
    0.8251,  // avg_pool_3x3
    0.8319,  // sep_conv_3x3
    0.8487,  // sep_conv_5x5
    0.8296,  // dil_conv_3x3
    0.8299,  // dil_conv_5x5
    0.8276,  // conv_3x1_1x3
    0.8272,  // conv_7x1_1x7
    0.8227,  // simple_conv_1x1
    0.8312,  // simple_conv_3x3
    0.8306,  // bottleneck_1x3x1
};

}  // namespace

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::document_malformed: return "document_malformed";
    case Errc::unknown_op: return "unknown_op";
    case Errc::invariant_violation: return "invariant_violation";
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::underivable_source: return "underivable_source";
    case Errc::divergence: return "divergence";
    case Errc::io: return "io";
    case Errc::config: return "config";
  }
  return "unknown";
}

std::string_view op_name(OpKind k) { return kOpNames[static_cast<size_t>(k)]; }

std::optional<OpKind> op_from_name(std::string_view name) {
  for (size_t i = 0; i < kOpNames.size(); ++i) {
    if (kOpNames[i] == name) return static_cast<OpKind>(i);
  }
  return std::nullopt;
}

std::string_view search_space_name(SearchSpace s) { return s == SearchSpace::S ? "S" : "So"; }

std::optional<SearchSpace> search_space_from_name(std::string_view name) {
  if (name == "S") return SearchSpace::S;
  if (name == "So") return SearchSpace::So;
  return std::nullopt;
}

OpScoreTable::OpScoreTable(const std::array<double, kNumOpsSo>& scores) : scores_(scores) {
  for (size_t i = 0; i < scores_.size(); ++i) {
    if (!(scores_[i] > 0.0 && scores_[i] < 1.0)) {
      throw Error(Errc::invalid_argument,
                  "operation score must lie strictly in (0,1)",
                  std::string(op_name(static_cast<OpKind>(i))));
    }
  }
}

const OpScoreTable& default_op_scores() {
  static const OpScoreTable table(kDefaultScores);
  return table;
}

std::vector<double> hamming_weights(SearchSpace space, const OpScoreTable& table) {
  std::vector<double> w(static_cast<size_t>(op_count(space)));
  for (size_t i = 0; i < w.size(); ++i) w[i] = table.score(static_cast<OpKind>(i));
  return w;
}

}  // namespace ddarts
