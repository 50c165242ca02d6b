#pragma once

#include <cstdint>
#include <optional>

#include "ddarts/alpha.hpp"
#include "ddarts/genotype.hpp"
#include "ddarts/nn.hpp"

namespace ddarts {

enum class MixMode { sigmoid, softmax, discrete };

struct SupernetConfig {
  SearchSpace space = SearchSpace::S;
  int cells = 4;
  int steps = 4;
  int channels = 8;      // per-node channel count C; every cell carries steps*C
  int in_channels = 3;
  int classes = 2;
  std::vector<size_t> reduction_positions;        // empty -> default 1/3, 2/3
  std::vector<std::vector<size_t>> share_groups;  // empty -> one group per cell
  MixMode mix = MixMode::sigmoid;
  uint64_t seed = 1;
};

// The proxy network containing every candidate operation: a stem convolution,
// a chain of cells (each consuming the two preceding outputs through 1x1 or
// factorized-reduce preprocessing), and a global-average-pool linear
// classifier. Cell output is the concatenation of its intermediate nodes, so
// every cell input and output carries steps*channels channels.
class Supernet {
 public:
  explicit Supernet(const SupernetConfig& cfg);

  // Discrete network realizing a genotype: only selected operations are
  // instantiated, each contributing with weight 1.
  Supernet(const Genotype& genotype, int channels, int in_channels, int classes, uint64_t seed);

  // bypass_cell >= 0 replaces that cell by its principal input (the previous
  // cell's output), spatially halved by a parameter-free 2x average at
  // reduction positions.
  Tensor forward(const Tensor& images, bool update_stats = false, int bypass_cell = -1);

  const SupernetConfig& config() const { return cfg_; }
  size_t cell_count() const { return static_cast<size_t>(cfg_.cells); }

  std::vector<Tensor>& weights() { return weights_; }
  // One logit tensor per (share group, edge); empty in discrete mode.
  std::vector<std::vector<Tensor>>& alpha_groups() { return alpha_groups_; }
  size_t group_of_cell(size_t cell) const { return cell_group_[cell]; }

  AlphaTable alpha_snapshot() const;
  void load_alpha(const AlphaTable& table);

  void visit_params(const ParamVisitor& v);   // weights, then alpha blocks
  void visit_buffers(const BufferVisitor& v);

  // FNV-1a over every parameter, alpha logit and statistic buffer; used to
  // prove evaluation passes leave the state untouched.
  uint64_t state_hash() const;

 private:
  struct Preprocess {
    bool reduce = false;
    ConvUnit conv;           // when !reduce
    FactorizedReduce fr;     // when reduce
    Tensor forward(const Tensor& x, bool update_stats);
  };
  struct Edge {
    std::vector<int> op_index;        // ordinal of each instantiated op
    std::vector<PrimitiveOp> ops;
  };
  struct Cell {
    CellKind kind = CellKind::normal;
    Preprocess pre0, pre1;
    std::vector<Edge> edges;
  };

  void build(uint64_t seed, const Genotype* genotype);
  Tensor cell_forward(size_t k, const Tensor& s0, const Tensor& s1, bool update_stats);

  SupernetConfig cfg_;
  ConvUnit stem_;
  std::vector<Cell> cells_;
  Tensor classifier_w_, classifier_b_;
  std::vector<std::vector<Tensor>> alpha_groups_;  // group -> edge -> (K)
  std::vector<size_t> cell_group_;
  std::vector<Tensor> weights_;
};

}  // namespace ddarts
