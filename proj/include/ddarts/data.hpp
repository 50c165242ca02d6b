#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ddarts/tensor.hpp"

namespace ddarts {

// In-memory labeled raster dataset, (count, channels, height, width) pixels
// in sample-major order. The first half is the training split, the second
// half the validation split.
struct Dataset {
  int count = 0;
  int classes = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> pixels;
  std::vector<int> labels;

  int train_count() const { return count / 2; }
  int val_count() const { return count - count / 2; }
};

struct SyntheticSpec {
  int count = 512;
  int classes = 2;
  int channels = 3;
  int hw = 16;
  double noise = 0.1;
  uint64_t seed = 1;
};

// Class-dependent oriented sinusoidal textures with per-sample random phase.
// Labels cycle 0..classes-1, so both halves stay class balanced whenever
// count is a multiple of 2 * classes.
Dataset synthetic_dataset(const SyntheticSpec& spec);

// Binary raster file: magic, count, classes, channels, height, width as
// little-endian 32-bit integers, then count*channels*h*w doubles and count
// 32-bit labels.
void save_raster(const Dataset& d, const std::filesystem::path& path);
Dataset load_raster(const std::filesystem::path& path);

// Batch extraction: images as a (B, C, H, W) tensor plus the label list.
Tensor batch_images(const Dataset& d, const std::vector<int>& indices);
std::vector<int> batch_labels(const Dataset& d, const std::vector<int>& indices);

}  // namespace ddarts
