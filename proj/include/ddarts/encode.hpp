#pragma once

#include <optional>
#include <string_view>

#include "ddarts/genotype.hpp"

namespace ddarts {

enum class HandcraftedName { resnet18, resnet50, xception };

std::string_view handcrafted_name(HandcraftedName n);
std::optional<HandcraftedName> handcrafted_from_name(std::string_view name);

// Frozen encodings of handcrafted networks in the extended search space So.
// The mappings are canonical constants of this library: they use only So ops
// and mirror each block's published topology at cell granularity.
Genotype encode_handcrafted(HandcraftedName name);

// Small residual-block proxy used by the operation-scoring protocol: the
// resnet18 cell repeated 3 times with reductions at the 1/3 and 2/3 slots.
Genotype residual_proxy_3cell();

}  // namespace ddarts
