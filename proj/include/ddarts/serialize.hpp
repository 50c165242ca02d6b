#pragma once

#include <filesystem>
#include <string>

#include "ddarts/genotype.hpp"

namespace ddarts {

// Genotype document, a structured JSON text:
//   {
//     "search_space": "S" | "So",
//     "steps": <int>,
//     "reduction_positions": [<int>...],
//     "share_groups": [[<int>...]...],
//     "cells": [{"kind": "normal"|"reduction",
//                "edges": [{"from": <int>, "to": <int>, "ops": ["..."]}...]}...]
//   }
// serialize(deserialize(doc)) and deserialize(serialize(g)) are identities on
// their valid domains.
std::string serialize(const Genotype& g);
Genotype deserialize(const std::string& document);

void save_genotype(const Genotype& g, const std::filesystem::path& path);
Genotype load_genotype(const std::filesystem::path& path);

}  // namespace ddarts
