#include "ddarts/data.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace ddarts {

static_assert(std::endian::native == std::endian::little,
              "raster and checkpoint formats assume a little-endian host");

Dataset synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.count < 1 || spec.classes < 2 || spec.channels < 1 || spec.hw < 2) {
    throw Error(Errc::config, "synthetic dataset needs count >= 1, classes >= 2, hw >= 2");
  }
  Dataset d;
  d.count = spec.count;
  d.classes = spec.classes;
  d.channels = spec.channels;
  d.height = spec.hw;
  d.width = spec.hw;
  d.pixels.resize(static_cast<size_t>(spec.count) * spec.channels * spec.hw * spec.hw);
  d.labels.resize(static_cast<size_t>(spec.count));

  Rng rng(mix_seed(spec.seed, "synthetic"));
  const double freq = 2.0 * M_PI * 2.0 / spec.hw;  // two cycles across the map
  size_t px = 0;
  for (int n = 0; n < spec.count; ++n) {
    const int label = n % spec.classes;
    d.labels[static_cast<size_t>(n)] = label;
    const double theta = M_PI * label / spec.classes;
    const double fx = freq * std::cos(theta);
    const double fy = freq * std::sin(theta);
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    for (int c = 0; c < spec.channels; ++c) {
      const double channel_shift = 0.7 * c;
      for (int y = 0; y < spec.hw; ++y) {
        for (int x = 0; x < spec.hw; ++x, ++px) {
          d.pixels[px] = std::sin(fx * x + fy * y + phase + channel_shift) +
                         spec.noise * rng.normal();
        }
      }
    }
  }
  return d;
}

namespace {

constexpr uint32_t kRasterMagic = 0x53524444;  // "DDRS"

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(Errc::io, std::string("raster file truncated while reading ") + what);
  return v;
}

}  // namespace

void save_raster(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open for writing: " + path.string());
  write_pod(out, kRasterMagic);
  write_pod(out, static_cast<int32_t>(d.count));
  write_pod(out, static_cast<int32_t>(d.classes));
  write_pod(out, static_cast<int32_t>(d.channels));
  write_pod(out, static_cast<int32_t>(d.height));
  write_pod(out, static_cast<int32_t>(d.width));
  out.write(reinterpret_cast<const char*>(d.pixels.data()),
            static_cast<std::streamsize>(d.pixels.size() * sizeof(double)));
  for (int label : d.labels) write_pod(out, static_cast<int32_t>(label));
  if (!out) throw Error(Errc::io, "write failed: " + path.string());
}

Dataset load_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open for reading: " + path.string());
  if (read_pod<uint32_t>(in, "magic") != kRasterMagic) {
    throw Error(Errc::document_malformed, "not a raster dataset file: " + path.string());
  }
  Dataset d;
  d.count = read_pod<int32_t>(in, "count");
  d.classes = read_pod<int32_t>(in, "classes");
  d.channels = read_pod<int32_t>(in, "channels");
  d.height = read_pod<int32_t>(in, "height");
  d.width = read_pod<int32_t>(in, "width");
  if (d.count < 1 || d.classes < 1 || d.channels < 1 || d.height < 1 || d.width < 1) {
    throw Error(Errc::document_malformed, "raster header fields must be positive");
  }
  const size_t n_px =
      static_cast<size_t>(d.count) * d.channels * d.height * d.width;
  d.pixels.resize(n_px);
  in.read(reinterpret_cast<char*>(d.pixels.data()),
          static_cast<std::streamsize>(n_px * sizeof(double)));
  if (!in) throw Error(Errc::io, "raster file truncated while reading pixels");
  d.labels.resize(static_cast<size_t>(d.count));
  for (int i = 0; i < d.count; ++i) {
    int32_t label = read_pod<int32_t>(in, "labels");
    if (label < 0 || label >= d.classes) {
      throw Error(Errc::document_malformed, "raster label out of range");
    }
    d.labels[static_cast<size_t>(i)] = label;
  }
  return d;
}

Tensor batch_images(const Dataset& d, const std::vector<int>& indices) {
  if (indices.empty()) throw Error(Errc::invalid_argument, "empty batch");
  const size_t sample = static_cast<size_t>(d.channels) * d.height * d.width;
  Tensor t = Tensor::zeros({static_cast<int>(indices.size()), d.channels, d.height, d.width});
  for (size_t b = 0; b < indices.size(); ++b) {
    const int idx = indices[b];
    if (idx < 0 || idx >= d.count) throw Error(Errc::invalid_argument, "batch index out of range");
    std::memcpy(t.values().data() + b * sample, d.pixels.data() + static_cast<size_t>(idx) * sample,
                sample * sizeof(double));
  }
  return t;
}

std::vector<int> batch_labels(const Dataset& d, const std::vector<int>& indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (int idx : indices) out.push_back(d.labels[static_cast<size_t>(idx)]);
  return out;
}

}  // namespace ddarts
