#pragma once

#include <optional>
#include <string_view>

#include "ddarts/alpha.hpp"
#include "ddarts/genotype.hpp"

namespace ddarts {

// Discretization rules mapping logits to per-edge selections:
//   darts  - per intermediate node, keep the 2 strongest incoming edges
//            (strength = max softmax weight across the edge's op vector) and
//            the single strongest op on each kept edge; other edges end empty.
//   edge   - per edge, every op with sigmoid(logit) > threshold, capped at the
//            top 2; when nothing clears the threshold the single argmax op is
//            kept, unless the edge's logits are all equal (an edge with no
//            signal stays empty, which keeps warm-started encodings intact).
//   sparse - per edge, the single argmax op.
// Ties are broken by lower op ordinal, then lower from_node.
enum class ParseMethod { darts, edge, sparse };

std::string_view parse_method_name(ParseMethod m);
std::optional<ParseMethod> parse_method_from_name(std::string_view name);

Genotype parse_alpha(const AlphaTable& alpha, ParseMethod method, double threshold);

}  // namespace ddarts
