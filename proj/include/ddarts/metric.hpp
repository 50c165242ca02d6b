#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ddarts/genotype.hpp"

namespace ddarts {

// Weighted Hamming distance between two binary vectors: the mean over all
// positions of (W[k] when U[k] != V[k], else 0).
double hamming(const std::vector<uint8_t>& u, const std::vector<uint8_t>& v,
               const std::vector<double>& w);

// sup over X's edge vectors of the distance to the nearest edge vector of Y.
double directed_hausdorff(const CellSpec& x, const CellSpec& y, const std::vector<double>& w);

// Symmetric Hausdorff distance between two cells: points are the cells'
// per-edge selection vectors.
double hausdorff_cell(const CellSpec& x, const CellSpec& y, const std::vector<double>& w);

// Architecture distance: mean over cell positions of the symmetrized cell
// Hausdorff distance. Requires equal cell counts, step counts and search
// spaces; cells are compared position-wise only.
double metric_m(const Genotype& a, const Genotype& b, const std::vector<double>& w);

// Per-epoch distance between the starting genotype and the current parse.
struct DistanceTrace {
  std::vector<int> epochs;     // strictly increasing
  std::vector<double> values;  // >= 0, in distance units

  void append(int epoch, double value);
  size_t size() const { return epochs.size(); }

  std::string to_csv() const;  // "epoch,distance_du"
};

// First epoch e whose trailing `window` consecutive epochs, none earlier than
// start_epoch, span at most `tolerance`; nullopt when the trace never
// settles. The earliest possible stop is start_epoch + window - 1.
std::optional<int> plateau_stop(const DistanceTrace& trace, int window, int start_epoch,
                                double tolerance);

struct PairwiseMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;  // symmetric, zero diagonal

  std::string to_csv() const;  // header row of labels
};

PairwiseMatrix pairwise_matrix(const std::vector<Genotype>& genotypes,
                               const std::vector<std::string>& labels,
                               const std::vector<double>& w);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace ddarts
