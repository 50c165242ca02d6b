#include "ddarts/checkpoint.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace ddarts {

namespace {

constexpr uint32_t kMagic = 0x4B434444;  // "DDCK"
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(Errc::io, std::string("checkpoint truncated while reading ") + what);
  return v;
}

void write_string(std::ofstream& out, const std::string& s) {
  write_pod(out, static_cast<uint64_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& in, const char* what) {
  const uint64_t n = read_pod<uint64_t>(in, what);
  if (n > (1ULL << 32)) throw Error(Errc::document_malformed, "checkpoint string length corrupt");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw Error(Errc::io, std::string("checkpoint truncated while reading ") + what);
  return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open for writing: " + path.string());
  write_pod(out, kMagic);
  write_pod(out, kVersion);
  write_string(out, ckpt.meta_json);
  write_pod(out, static_cast<uint64_t>(ckpt.tensors.size()));
  for (const auto& [name, entry] : ckpt.tensors) {
    write_string(out, name);
    write_pod(out, static_cast<uint32_t>(entry.shape.size()));
    size_t numel = 1;
    for (int d : entry.shape) {
      write_pod(out, static_cast<uint32_t>(d));
      numel *= static_cast<size_t>(d);
    }
    if (numel != entry.data.size()) {
      throw Error(Errc::shape_mismatch, "tensor payload disagrees with its shape: " + name);
    }
    out.write(reinterpret_cast<const char*>(entry.data.data()),
              static_cast<std::streamsize>(entry.data.size() * sizeof(double)));
  }
  if (!out) throw Error(Errc::io, "write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open for reading: " + path.string());
  if (read_pod<uint32_t>(in, "magic") != kMagic) {
    throw Error(Errc::document_malformed, "not a checkpoint file: " + path.string());
  }
  const uint32_t version = read_pod<uint32_t>(in, "version");
  if (version != kVersion) {
    throw Error(Errc::document_malformed,
                "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.meta_json = read_string(in, "metadata");
  const uint64_t count = read_pod<uint64_t>(in, "tensor count");
  for (uint64_t i = 0; i < count; ++i) {
    std::string name = read_string(in, "tensor name");
    const uint32_t ndim = read_pod<uint32_t>(in, "rank");
    Checkpoint::Entry entry;
    size_t numel = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      const uint32_t extent = read_pod<uint32_t>(in, "shape");
      entry.shape.push_back(static_cast<int>(extent));
      numel *= extent;
    }
    entry.data.resize(numel);
    in.read(reinterpret_cast<char*>(entry.data.data()),
            static_cast<std::streamsize>(numel * sizeof(double)));
    if (!in) throw Error(Errc::io, "checkpoint truncated while reading tensor data");
    ckpt.tensors.emplace(std::move(name), std::move(entry));
  }
  return ckpt;
}

Checkpoint checkpoint_from_supernet(Supernet& net) {
  Checkpoint ckpt;
  const SupernetConfig& cfg = net.config();
  nlohmann::ordered_json meta;
  meta["format"] = "supernet";
  meta["search_space"] = std::string(search_space_name(cfg.space));
  meta["cells"] = cfg.cells;
  meta["steps"] = cfg.steps;
  meta["channels"] = cfg.channels;
  meta["in_channels"] = cfg.in_channels;
  meta["classes"] = cfg.classes;
  meta["reduction_positions"] = cfg.reduction_positions;
  meta["share_groups"] = cfg.share_groups;
  meta["mix"] = cfg.mix == MixMode::sigmoid   ? "sigmoid"
                : cfg.mix == MixMode::softmax ? "softmax"
                                              : "discrete";
  ckpt.meta_json = meta.dump();

  net.visit_params([&](const std::string& name, Tensor& t) {
    ckpt.tensors[name] = {t.shape(), t.values()};
  });
  net.visit_buffers([&](const std::string& name, std::vector<double>& b) {
    ckpt.tensors["buf." + name] = {{static_cast<int>(b.size())}, b};
  });
  return ckpt;
}

AlphaTable alpha_from_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ckpt.meta_json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::document_malformed, std::string("checkpoint metadata: ") + e.what());
  }
  auto space = search_space_from_name(meta.value("search_space", ""));
  if (!space) throw Error(Errc::document_malformed, "checkpoint metadata lacks the search space");
  if (meta.value("mix", "") == "discrete") {
    throw Error(Errc::invalid_argument, "discrete checkpoints carry no alpha table");
  }

  AlphaTable a;
  a.space = *space;
  a.steps = meta.value("steps", 0);
  a.n_cells = meta.value("cells", 0);
  a.reduction_positions = meta.value("reduction_positions", std::vector<size_t>{});
  a.share_groups = meta.value("share_groups", std::vector<std::vector<size_t>>{});
  a.cell_group.assign(a.n_cells, 0);
  for (size_t gi = 0; gi < a.share_groups.size(); ++gi) {
    for (size_t member : a.share_groups[gi]) {
      if (member >= a.n_cells) {
        throw Error(Errc::document_malformed, "checkpoint share group member out of range");
      }
      a.cell_group[member] = gi;
    }
  }
  const size_t edges = static_cast<size_t>(edge_count(a.steps));
  for (size_t gi = 0; gi < a.share_groups.size(); ++gi) {
    std::vector<std::vector<double>> block;
    for (size_t ei = 0; ei < edges; ++ei) {
      const std::string name = "alpha.g" + std::to_string(gi) + ".e" + std::to_string(ei);
      auto it = ckpt.tensors.find(name);
      if (it == ckpt.tensors.end()) {
        throw Error(Errc::document_malformed, "checkpoint missing tensor " + name);
      }
      block.push_back(it->second.data);
    }
    a.logits.push_back(std::move(block));
  }
  validate(a);
  return a;
}

}  // namespace ddarts
