#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ddarts/ops.hpp"
#include "ddarts/tensor.hpp"

namespace ddarts {

// Named access to learnable tensors and statistic buffers, used by the
// optimizers and the checkpoint writer.
using ParamVisitor = std::function<void(const std::string&, Tensor&)>;
using BufferVisitor = std::function<void(const std::string&, std::vector<double>&)>;

// Per-channel affine normalization against running statistics. The statistics
// are buffers, not graph nodes: normalization always uses the current running
// values, and update_stats folds the batch statistics in afterwards. They stay
// frozen during evaluation and architecture steps.
struct ChannelNorm {
  Tensor gamma, beta;
  std::vector<double> running_mean, running_var;
  double eps = 1e-5;
  double momentum = 0.1;

  static ChannelNorm create(int channels);
  Tensor forward(const Tensor& x, bool update_stats);
  void visit_params(const std::string& prefix, const ParamVisitor& v);
  void visit_buffers(const std::string& prefix, const BufferVisitor& v);
};

// conv -> channel norm -> relu, the uniform convolution unit across all
// operation kinds.
struct ConvUnit {
  Tensor w;
  Conv2dSpec spec;
  ChannelNorm norm;

  static ConvUnit create(int cin, int cout, int kh, int kw, Conv2dSpec spec, Rng& rng);
  Tensor forward(const Tensor& x, bool update_stats);
  void visit_params(const std::string& prefix, const ParamVisitor& v);
  void visit_buffers(const std::string& prefix, const BufferVisitor& v);
};

// Stride-2 spatial reduction that splits channels across the even- and
// odd-offset pixel grids: concat(conv1x1s2(x), conv1x1s2(x[1:,1:])) -> norm ->
// relu. Requires even input extents.
struct FactorizedReduce {
  Tensor w_even, w_odd;
  ChannelNorm norm;

  static FactorizedReduce create(int cin, int cout, Rng& rng);
  Tensor forward(const Tensor& x, bool update_stats);
  void visit_params(const std::string& prefix, const ParamVisitor& v);
  void visit_buffers(const std::string& prefix, const BufferVisitor& v);
};

// One candidate operation instance on an edge: channels -> channels, spatial
// size preserved (stride 1) or halved (stride 2).
class PrimitiveOp {
 public:
  static PrimitiveOp create(OpKind kind, int channels, int stride, Rng& rng);

  Tensor forward(const Tensor& x, bool update_stats = false);
  OpKind kind() const { return kind_; }
  int stride() const { return stride_; }

  void visit_params(const std::string& prefix, const ParamVisitor& v);
  void visit_buffers(const std::string& prefix, const BufferVisitor& v);

 private:
  OpKind kind_ = OpKind::skip_connect;
  int stride_ = 1;
  int channels_ = 0;
  std::vector<ConvUnit> units_;          // applied in sequence
  std::vector<FactorizedReduce> reduce_; // skip_connect stride 2 only
};

// sum_k sigmoid(alpha[k]) * ops[k](x); gradients flow to alpha and to every
// op's parameters.
Tensor mixed_edge(const Tensor& x, std::vector<PrimitiveOp>& ops, const Tensor& alpha,
                  bool update_stats = false);

// Softmax-weighted variant for comparison runs in the original mixing mode.
Tensor mixed_edge_softmax(const Tensor& x, std::vector<PrimitiveOp>& ops, const Tensor& alpha,
                          bool update_stats = false);

// He-style fan-in uniform initialization bound.
double he_bound(int fan_in);

}  // namespace ddarts
