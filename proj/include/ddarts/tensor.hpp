#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "ddarts/error.hpp"
#include "ddarts/rng.hpp"

namespace ddarts {

namespace detail {

struct TensorNode {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized lazily on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  size_t numel() const { return value.size(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

}  // namespace detail

// Dense 64-bit tensor with reverse-mode gradient accumulation. Handles share
// the underlying node, so copies are cheap and graph edges stay alive as long
// as some downstream tensor does. Gradients accumulate additively: using a
// tensor in two places yields the sum of both paths' contributions.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor constant(std::vector<int> shape, double v, bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  size_t numel() const { return node_->value.size(); }
  std::vector<double>& values() { return node_->value; }
  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  bool requires_grad() const { return node_->requires_grad; }
  double item() const;

  // Runs reverse-mode accumulation from this scalar, seeding with `seed`.
  // Leaf gradients accumulate across calls until zero_grad().
  void backward(double seed = 1.0) const;
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

  std::shared_ptr<detail::TensorNode> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// While alive, newly built ops record no graph (values only). Used for
// evaluation passes; nesting is supported.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// ---- elementwise and reduction ops ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_const(const Tensor& a, double c);
Tensor square(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid_t(const Tensor& a);
Tensor softmax_vector(const Tensor& a);  // 1-D only

// Concatenation of 1-D tensors.
Tensor concat_flat(const std::vector<Tensor>& xs);

// ---- feature-map ops (B, C, H, W) ----
struct Conv2dSpec {
  int stride = 1;
  int pad_h = 0;
  int pad_w = 0;
  int dil_h = 1;
  int dil_w = 1;
  int groups = 1;
};

// x: (B, Ci, H, W); w: (Co, Ci/groups, kh, kw) -> (B, Co, Ho, Wo).
Tensor conv2d(const Tensor& x, const Tensor& w, const Conv2dSpec& spec);

Tensor max_pool2d(const Tensor& x, int k, int stride, int pad);
// Average pooling whose divisor counts only in-bounds positions, so a
// constant map stays constant.
Tensor avg_pool2d(const Tensor& x, int k, int stride, int pad);

// Per-channel affine normalization against fixed statistics:
// y = (x - mean[c]) * invstd[c] * gamma[c] + beta[c].
Tensor channel_affine(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                      const std::vector<double>& mean, const std::vector<double>& invstd);

Tensor concat_channels(const std::vector<Tensor>& xs);
// Crops rows/cols from (r0, c0) to the end.
Tensor slice_spatial(const Tensor& x, int r0, int c0);
Tensor global_avg_pool(const Tensor& x);  // (B,C,H,W) -> (B,C)

// x: (B, F); w: (F, O); b: (O) -> (B, O).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Mean over the batch of -log softmax(logits)[target].
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets);

// Weighted sum of same-shape tensors: sum_k weights[k] * xs[k]; weights is a
// 1-D tensor of matching length. Gradients flow to both the inputs and the
// weight vector.
Tensor mix(const std::vector<Tensor>& xs, const Tensor& weights);

// Top-1 accuracy of logits (B, C) against targets; ties resolve to the lower
// class index. Not differentiable, plain helper.
double top1_accuracy(const Tensor& logits, const std::vector<int>& targets);

}  // namespace ddarts
