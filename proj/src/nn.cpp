#include "ddarts/nn.hpp"

#include <cmath>

namespace ddarts {

double he_bound(int fan_in) { return std::sqrt(6.0 / static_cast<double>(fan_in)); }

namespace {

Tensor he_uniform(std::vector<int> shape, int fan_in, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape), /*requires_grad=*/true);
  const double b = he_bound(fan_in);
  for (double& v : t.values()) v = rng.uniform(-b, b);
  return t;
}

}  // namespace

ChannelNorm ChannelNorm::create(int channels) {
  ChannelNorm n;
  n.gamma = Tensor::constant({channels}, 1.0, /*requires_grad=*/true);
  n.beta = Tensor::zeros({channels}, /*requires_grad=*/true);
  n.running_mean.assign(static_cast<size_t>(channels), 0.0);
  n.running_var.assign(static_cast<size_t>(channels), 1.0);
  return n;
}

Tensor ChannelNorm::forward(const Tensor& x, bool update_stats) {
  const int C = x.shape()[1];
  std::vector<double> invstd(static_cast<size_t>(C));
  for (int c = 0; c < C; ++c) invstd[c] = 1.0 / std::sqrt(running_var[c] + eps);
  Tensor y = channel_affine(x, gamma, beta, running_mean, invstd);
  if (update_stats) {
    const int B = x.shape()[0], H = x.shape()[2], W = x.shape()[3];
    const size_t hw = static_cast<size_t>(H) * W;
    const double inv_n = 1.0 / (static_cast<double>(B) * hw);
    const auto& xv = x.values();
    for (int c = 0; c < C; ++c) {
      double mean = 0.0, sq = 0.0;
      for (int b = 0; b < B; ++b) {
        const size_t base = (static_cast<size_t>(b) * C + c) * hw;
        for (size_t i = 0; i < hw; ++i) {
          mean += xv[base + i];
          sq += xv[base + i] * xv[base + i];
        }
      }
      mean *= inv_n;
      double var = sq * inv_n - mean * mean;
      if (var < 0.0) var = 0.0;
      running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mean;
      running_var[c] = (1.0 - momentum) * running_var[c] + momentum * var;
    }
  }
  return y;
}

void ChannelNorm::visit_params(const std::string& prefix, const ParamVisitor& v) {
  v(prefix + ".gamma", gamma);
  v(prefix + ".beta", beta);
}

void ChannelNorm::visit_buffers(const std::string& prefix, const BufferVisitor& v) {
  v(prefix + ".running_mean", running_mean);
  v(prefix + ".running_var", running_var);
}

ConvUnit ConvUnit::create(int cin, int cout, int kh, int kw, Conv2dSpec spec, Rng& rng) {
  ConvUnit u;
  const int cig = cin / spec.groups;
  u.w = he_uniform({cout, cig, kh, kw}, cig * kh * kw, rng);
  u.spec = spec;
  u.norm = ChannelNorm::create(cout);
  return u;
}

Tensor ConvUnit::forward(const Tensor& x, bool update_stats) {
  Tensor y = conv2d(x, w, spec);
  y = norm.forward(y, update_stats);
  return relu(y);
}

void ConvUnit::visit_params(const std::string& prefix, const ParamVisitor& v) {
  v(prefix + ".w", w);
  norm.visit_params(prefix + ".norm", v);
}

void ConvUnit::visit_buffers(const std::string& prefix, const BufferVisitor& v) {
  norm.visit_buffers(prefix + ".norm", v);
}

FactorizedReduce FactorizedReduce::create(int cin, int cout, Rng& rng) {
  FactorizedReduce f;
  const int ca = cout - cout / 2;
  const int cb = cout / 2;
  f.w_even = he_uniform({ca, cin, 1, 1}, cin, rng);
  f.w_odd = he_uniform({cb, cin, 1, 1}, cin, rng);
  f.norm = ChannelNorm::create(cout);
  return f;
}

Tensor FactorizedReduce::forward(const Tensor& x, bool update_stats) {
  if (x.shape()[2] % 2 != 0 || x.shape()[3] % 2 != 0) {
    throw Error(Errc::shape_mismatch, "factorized reduction requires even spatial extents");
  }
  Conv2dSpec s2;
  s2.stride = 2;
  Tensor even = conv2d(x, w_even, s2);
  Tensor odd = conv2d(slice_spatial(x, 1, 1), w_odd, s2);
  Tensor y = concat_channels({even, odd});
  y = norm.forward(y, update_stats);
  return relu(y);
}

void FactorizedReduce::visit_params(const std::string& prefix, const ParamVisitor& v) {
  v(prefix + ".w_even", w_even);
  v(prefix + ".w_odd", w_odd);
  norm.visit_params(prefix + ".norm", v);
}

void FactorizedReduce::visit_buffers(const std::string& prefix, const BufferVisitor& v) {
  norm.visit_buffers(prefix + ".norm", v);
}

PrimitiveOp PrimitiveOp::create(OpKind kind, int channels, int stride, Rng& rng) {
  if (stride != 1 && stride != 2) {
    throw Error(Errc::invalid_argument, "primitive stride must be 1 or 2");
  }
  if (channels < 1) throw Error(Errc::invalid_argument, "primitive needs at least one channel");
  PrimitiveOp op;
  op.kind_ = kind;
  op.stride_ = stride;
  op.channels_ = channels;
  const int C = channels;

  auto conv = [&](int cin, int cout, int kh, int kw, int s, int pad_h, int pad_w, int dil,
                  int groups) {
    Conv2dSpec spec;
    spec.stride = s;
    spec.pad_h = pad_h;
    spec.pad_w = pad_w;
    spec.dil_h = dil;
    spec.dil_w = dil;
    spec.groups = groups;
    op.units_.push_back(ConvUnit::create(cin, cout, kh, kw, spec, rng));
  };

  switch (kind) {
    case OpKind::skip_connect:
      if (stride == 2) op.reduce_.push_back(FactorizedReduce::create(C, C, rng));
      break;
    case OpKind::max_pool_3x3:
    case OpKind::avg_pool_3x3:
      break;  // parameter free
    case OpKind::sep_conv_3x3:
    case OpKind::sep_conv_5x5: {
      const int k = kind == OpKind::sep_conv_3x3 ? 3 : 5;
      const int p = k / 2;
      conv(C, C, k, k, stride, p, p, 1, C);  // depthwise, strided
      conv(C, C, 1, 1, 1, 0, 0, 1, 1);       // pointwise
      conv(C, C, k, k, 1, p, p, 1, C);       // depthwise again
      conv(C, C, 1, 1, 1, 0, 0, 1, 1);
      break;
    }
    case OpKind::dil_conv_3x3:
    case OpKind::dil_conv_5x5: {
      const int k = kind == OpKind::dil_conv_3x3 ? 3 : 5;
      const int p = (k - 1);  // dilation 2 keeps the receptive field centered
      conv(C, C, k, k, stride, p, p, 2, C);
      conv(C, C, 1, 1, 1, 0, 0, 1, 1);
      break;
    }
    case OpKind::conv_3x1_1x3:
      conv(C, C, 3, 1, stride, 1, 0, 1, 1);
      conv(C, C, 1, 3, 1, 0, 1, 1, 1);
      break;
    case OpKind::conv_7x1_1x7:
      conv(C, C, 7, 1, stride, 3, 0, 1, 1);
      conv(C, C, 1, 7, 1, 0, 3, 1, 1);
      break;
    case OpKind::simple_conv_1x1:
      conv(C, C, 1, 1, stride, 0, 0, 1, 1);
      break;
    case OpKind::simple_conv_3x3:
      conv(C, C, 3, 3, stride, 1, 1, 1, 1);
      break;
    case OpKind::bottleneck_1x3x1: {
      const int mid = std::max(1, C / 4);
      conv(C, mid, 1, 1, stride, 0, 0, 1, 1);
      conv(mid, mid, 3, 3, 1, 1, 1, 1, 1);
      conv(mid, C, 1, 1, 1, 0, 0, 1, 1);
      break;
    }
  }
  return op;
}

Tensor PrimitiveOp::forward(const Tensor& x, bool update_stats) {
  if (x.shape().size() != 4 || x.shape()[1] != channels_) {
    throw Error(Errc::shape_mismatch, "input channel count does not match the primitive");
  }
  switch (kind_) {
    case OpKind::skip_connect:
      if (stride_ == 1) return x;
      return reduce_[0].forward(x, update_stats);
    case OpKind::max_pool_3x3:
      return max_pool2d(x, 3, stride_, 1);
    case OpKind::avg_pool_3x3:
      return avg_pool2d(x, 3, stride_, 1);
    default: {
      Tensor y = x;
      for (ConvUnit& u : units_) y = u.forward(y, update_stats);
      return y;
    }
  }
}

void PrimitiveOp::visit_params(const std::string& prefix, const ParamVisitor& v) {
  for (size_t i = 0; i < units_.size(); ++i) {
    units_[i].visit_params(prefix + ".u" + std::to_string(i), v);
  }
  for (size_t i = 0; i < reduce_.size(); ++i) {
    reduce_[i].visit_params(prefix + ".fr" + std::to_string(i), v);
  }
}

void PrimitiveOp::visit_buffers(const std::string& prefix, const BufferVisitor& v) {
  for (size_t i = 0; i < units_.size(); ++i) {
    units_[i].visit_buffers(prefix + ".u" + std::to_string(i), v);
  }
  for (size_t i = 0; i < reduce_.size(); ++i) {
    reduce_[i].visit_buffers(prefix + ".fr" + std::to_string(i), v);
  }
}

namespace {

Tensor mixed_edge_impl(const Tensor& x, std::vector<PrimitiveOp>& ops, const Tensor& alpha,
                       bool update_stats, bool use_sigmoid) {
  if (ops.empty()) throw Error(Errc::invalid_argument, "mixed edge requires operations");
  if (alpha.shape().size() != 1 || alpha.numel() != ops.size()) {
    throw Error(Errc::shape_mismatch, "one logit per operation required");
  }
  Tensor weights = use_sigmoid ? sigmoid_t(alpha) : softmax_vector(alpha);
  std::vector<Tensor> outs;
  outs.reserve(ops.size());
  for (PrimitiveOp& op : ops) outs.push_back(op.forward(x, update_stats));
  return mix(outs, weights);
}

}  // namespace

Tensor mixed_edge(const Tensor& x, std::vector<PrimitiveOp>& ops, const Tensor& alpha,
                  bool update_stats) {
  return mixed_edge_impl(x, ops, alpha, update_stats, /*use_sigmoid=*/true);
}

Tensor mixed_edge_softmax(const Tensor& x, std::vector<PrimitiveOp>& ops, const Tensor& alpha,
                          bool update_stats) {
  return mixed_edge_impl(x, ops, alpha, update_stats, /*use_sigmoid=*/false);
}

}  // namespace ddarts
