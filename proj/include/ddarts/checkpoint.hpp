#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ddarts/alpha.hpp"
#include "ddarts/supernet.hpp"

namespace ddarts {

// Binary weight blob: versioned header, a JSON metadata chunk, then a shape
// table of named tensors with 64-bit little-endian float payloads. Statistic
// buffers are stored as tensors alongside the parameters.
struct Checkpoint {
  std::string meta_json;
  struct Entry {
    std::vector<int> shape;
    std::vector<double> data;
  };
  std::map<std::string, Entry> tensors;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Captures the supernet's parameters, buffers and alpha blocks plus the
// layout metadata needed to interpret them.
Checkpoint checkpoint_from_supernet(Supernet& net);

// Rebuilds the alpha table of a search checkpoint (written by a non-discrete
// supernet).
AlphaTable alpha_from_checkpoint(const Checkpoint& ckpt);

}  // namespace ddarts
