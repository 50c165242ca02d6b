#include "ddarts/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace ddarts {

namespace {

using Node = detail::TensorNode;
using NodePtr = std::shared_ptr<Node>;

thread_local bool g_grad_enabled = true;

size_t shape_numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw Error(Errc::shape_mismatch, "tensor dimensions must be positive");
    n *= static_cast<size_t>(d);
  }
  return n;
}

NodePtr make_node(std::vector<int> shape) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value.assign(shape_numel(node->shape), 0.0);
  return node;
}

bool track(const std::initializer_list<const Tensor*>& parents) {
  if (!g_grad_enabled) return false;
  for (const Tensor* t : parents) {
    if (t->node() && t->node()->requires_grad) return true;
  }
  return false;
}

void attach(const NodePtr& out, std::vector<NodePtr> parents,
            std::function<void(Node&)> backward_fn) {
  out->requires_grad = true;
  out->parents = std::move(parents);
  out->backward_fn = std::move(backward_fn);
}

void accumulate(Node& dst, size_t index, double v) {
  if (!dst.requires_grad) return;
  dst.ensure_grad();
  dst.grad[index] += v;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw Error(Errc::shape_mismatch, std::string(what) + " requires equal shapes");
  }
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  auto node = make_node(std::move(shape));
  node->requires_grad = requires_grad;
  return Tensor(node);
}

Tensor Tensor::constant(std::vector<int> shape, double v, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.values().begin(), t.values().end(), v);
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
  auto node = make_node(std::move(shape));
  if (values.size() != node->value.size()) {
    throw Error(Errc::shape_mismatch, "value count disagrees with shape");
  }
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(node);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from({1}, {v}, requires_grad);
}

double Tensor::item() const {
  if (!node_ || node_->value.size() != 1) {
    throw Error(Errc::shape_mismatch, "item() requires a scalar tensor");
  }
  return node_->value[0];
}

void Tensor::backward(double seed) const {
  if (!node_ || node_->value.size() != 1) {
    throw Error(Errc::shape_mismatch, "backward() starts from a scalar");
  }
  if (!node_->requires_grad) return;

  // Reverse post-order DFS over the recorded graph; deterministic because it
  // follows the stored parent order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      Node* p = n->parents[idx].get();
      ++idx;
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad();
  node_->grad[0] += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) {
      n->ensure_grad();
      n->backward_fn(*n);
    }
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

// ---------------------------------------------------------------------------
// elementwise / reductions
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  auto out = make_node(a.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] + bv[i];
  if (track({&a, &b})) {
    attach(out, {a.node(), b.node()}, [pa = a.node(), pb = b.node()](Node& self) {
      for (size_t i = 0; i < self.grad.size(); ++i) {
        accumulate(*pa, i, self.grad[i]);
        accumulate(*pb, i, self.grad[i]);
      }
    });
  }
  return Tensor(out);
}

Tensor scale(const Tensor& a, double s) {
  auto out = make_node(a.shape());
  const auto& av = a.values();
  for (size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] * s;
  if (track({&a})) {
    attach(out, {a.node()}, [pa = a.node(), s](Node& self) {
      for (size_t i = 0; i < self.grad.size(); ++i) accumulate(*pa, i, self.grad[i] * s);
    });
  }
  return Tensor(out);
}

Tensor add_const(const Tensor& a, double c) {
  auto out = make_node(a.shape());
  const auto& av = a.values();
  for (size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] + c;
  if (track({&a})) {
    attach(out, {a.node()}, [pa = a.node()](Node& self) {
      for (size_t i = 0; i < self.grad.size(); ++i) accumulate(*pa, i, self.grad[i]);
    });
  }
  return Tensor(out);
}

Tensor square(const Tensor& a) {
  auto out = make_node(a.shape());
  const auto& av = a.values();
  for (size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] * av[i];
  if (track({&a})) {
    attach(out, {a.node()}, [pa = a.node()](Node& self) {
      for (size_t i = 0; i < self.grad.size(); ++i) {
        accumulate(*pa, i, self.grad[i] * 2.0 * pa->value[i]);
      }
    });
  }
  return Tensor(out);
}

Tensor mean_all(const Tensor& a) {
  auto out = make_node({1});
  const auto& av = a.values();
  double sum = 0.0;
  for (double v : av) sum += v;
  const double inv = 1.0 / static_cast<double>(av.size());
  out->value[0] = sum * inv;
  if (track({&a})) {
    attach(out, {a.node()}, [pa = a.node(), inv](Node& self) {
      for (size_t i = 0; i < pa->value.size(); ++i) accumulate(*pa, i, self.grad[0] * inv);
    });
  }
  return Tensor(out);
}

Tensor relu(const Tensor& a) {
  auto out = make_node(a.shape());
  const auto& av = a.values();
  for (size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] > 0.0 ? av[i] : 0.0;
  if (track({&a})) {
    attach(out, {a.node()}, [pa = a.node()](Node& self) {
      for (size_t i = 0; i < self.grad.size(); ++i) {
        if (pa->value[i] > 0.0) accumulate(*pa, i, self.grad[i]);
      }
    });
  }
  return Tensor(out);
}

Tensor sigmoid_t(const Tensor& a) {
  auto out = make_node(a.shape());
  const auto& av = a.values();
  for (size_t i = 0; i < av.size(); ++i) out->value[i] = 1.0 / (1.0 + std::exp(-av[i]));
  if (track({&a})) {
    attach(out, {a.node()}, [pa = a.node()](Node& self) {
      for (size_t i = 0; i < self.grad.size(); ++i) {
        double s = self.value[i];
        accumulate(*pa, i, self.grad[i] * s * (1.0 - s));
      }
    });
  }
  return Tensor(out);
}

Tensor softmax_vector(const Tensor& a) {
  if (a.shape().size() != 1) {
    throw Error(Errc::shape_mismatch, "softmax_vector expects a 1-D tensor");
  }
  auto out = make_node(a.shape());
  const auto& av = a.values();
  double m = *std::max_element(av.begin(), av.end());
  double sum = 0.0;
  for (size_t i = 0; i < av.size(); ++i) {
    out->value[i] = std::exp(av[i] - m);
    sum += out->value[i];
  }
  for (double& v : out->value) v /= sum;
  if (track({&a})) {
    attach(out, {a.node()}, [pa = a.node()](Node& self) {
      double dot = 0.0;
      for (size_t i = 0; i < self.grad.size(); ++i) dot += self.grad[i] * self.value[i];
      for (size_t i = 0; i < self.grad.size(); ++i) {
        accumulate(*pa, i, self.value[i] * (self.grad[i] - dot));
      }
    });
  }
  return Tensor(out);
}

Tensor concat_flat(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw Error(Errc::invalid_argument, "concat_flat requires inputs");
  int total = 0;
  for (const Tensor& t : xs) {
    if (t.shape().size() != 1) {
      throw Error(Errc::shape_mismatch, "concat_flat expects 1-D tensors");
    }
    total += t.shape()[0];
  }
  auto out = make_node({total});
  size_t off = 0;
  for (const Tensor& t : xs) {
    std::copy(t.values().begin(), t.values().end(), out->value.begin() + off);
    off += t.numel();
  }
  bool need = false;
  for (const Tensor& t : xs) need = need || (g_grad_enabled && t.requires_grad());
  if (need) {
    std::vector<NodePtr> parents;
    for (const Tensor& t : xs) parents.push_back(t.node());
    attach(out, parents, [parents](Node& self) {
      size_t off2 = 0;
      for (const NodePtr& p : parents) {
        for (size_t i = 0; i < p->value.size(); ++i) accumulate(*p, i, self.grad[off2 + i]);
        off2 += p->value.size();
      }
    });
  }
  return Tensor(out);
}

// ---------------------------------------------------------------------------
// feature maps
// ---------------------------------------------------------------------------

namespace {

void expect_4d(const Tensor& x, const char* what) {
  if (x.shape().size() != 4) {
    throw Error(Errc::shape_mismatch, std::string(what) + " expects a (B,C,H,W) tensor");
  }
}

int pooled_extent(int in, int k, int stride, int pad) {
  int out = (in + 2 * pad - k) / stride + 1;
  if (out <= 0) throw Error(Errc::shape_mismatch, "pooling window exceeds the padded input");
  return out;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Conv2dSpec& spec) {
  expect_4d(x, "conv2d");
  if (w.shape().size() != 4) {
    throw Error(Errc::shape_mismatch, "conv2d weight must be (Co, Ci/groups, kh, kw)");
  }
  const int B = x.shape()[0], Ci = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  const int Co = w.shape()[0], Cig = w.shape()[1], kh = w.shape()[2], kw = w.shape()[3];
  if (spec.groups < 1 || Ci % spec.groups != 0 || Co % spec.groups != 0) {
    throw Error(Errc::shape_mismatch, "channel counts must divide by groups");
  }
  if (Cig != Ci / spec.groups) {
    throw Error(Errc::shape_mismatch, "weight input-channel extent disagrees with groups");
  }
  const int Ho = (H + 2 * spec.pad_h - spec.dil_h * (kh - 1) - 1) / spec.stride + 1;
  const int Wo = (W + 2 * spec.pad_w - spec.dil_w * (kw - 1) - 1) / spec.stride + 1;
  if (Ho <= 0 || Wo <= 0) throw Error(Errc::shape_mismatch, "convolution output would be empty");
  const int Cpg = Co / spec.groups;

  auto out = make_node({B, Co, Ho, Wo});
  const auto& xv = x.values();
  const auto& wv = w.values();
  auto x_at = [Ci, H, W](int b, int c, int h, int ww) {
    return (static_cast<size_t>(b) * Ci + c) * H * W + static_cast<size_t>(h) * W + ww;
  };
  auto w_at = [Cig, kh, kw](int co, int cig, int i, int j) {
    return ((static_cast<size_t>(co) * Cig + cig) * kh + i) * kw + j;
  };
  for (int b = 0; b < B; ++b) {
    for (int co = 0; co < Co; ++co) {
      const int g = co / Cpg;
      for (int ho = 0; ho < Ho; ++ho) {
        for (int wo = 0; wo < Wo; ++wo) {
          double acc = 0.0;
          for (int cig = 0; cig < Cig; ++cig) {
            const int ci = g * Cig + cig;
            for (int i = 0; i < kh; ++i) {
              const int hi = ho * spec.stride - spec.pad_h + i * spec.dil_h;
              if (hi < 0 || hi >= H) continue;
              for (int j = 0; j < kw; ++j) {
                const int wi = wo * spec.stride - spec.pad_w + j * spec.dil_w;
                if (wi < 0 || wi >= W) continue;
                acc += xv[x_at(b, ci, hi, wi)] * wv[w_at(co, cig, i, j)];
              }
            }
          }
          out->value[(static_cast<size_t>(b) * Co + co) * Ho * Wo +
                     static_cast<size_t>(ho) * Wo + wo] = acc;
        }
      }
    }
  }

  if (track({&x, &w})) {
    attach(out, {x.node(), w.node()},
           [px = x.node(), pw = w.node(), spec, B, Ci, H, W, Co, Cig, kh, kw, Ho, Wo, Cpg, x_at,
            w_at](Node& self) {
             const bool xreq = px->requires_grad;
             const bool wreq = pw->requires_grad;
             if (xreq) px->ensure_grad();
             if (wreq) pw->ensure_grad();
             for (int b = 0; b < B; ++b) {
               for (int co = 0; co < Co; ++co) {
                 const int g = co / Cpg;
                 for (int ho = 0; ho < Ho; ++ho) {
                   for (int wo = 0; wo < Wo; ++wo) {
                     const double gout = self.grad[(static_cast<size_t>(b) * Co + co) * Ho * Wo +
                                                   static_cast<size_t>(ho) * Wo + wo];
                     if (gout == 0.0) continue;
                     for (int cig = 0; cig < Cig; ++cig) {
                       const int ci = g * Cig + cig;
                       for (int i = 0; i < kh; ++i) {
                         const int hi = ho * spec.stride - spec.pad_h + i * spec.dil_h;
                         if (hi < 0 || hi >= H) continue;
                         for (int j = 0; j < kw; ++j) {
                           const int wi = wo * spec.stride - spec.pad_w + j * spec.dil_w;
                           if (wi < 0 || wi >= W) continue;
                           if (wreq) {
                             pw->grad[w_at(co, cig, i, j)] += gout * px->value[x_at(b, ci, hi, wi)];
                           }
                           if (xreq) {
                             px->grad[x_at(b, ci, hi, wi)] += gout * pw->value[w_at(co, cig, i, j)];
                           }
                         }
                       }
                     }
                   }
                 }
               }
             }
           });
  }
  return Tensor(out);
}

Tensor max_pool2d(const Tensor& x, int k, int stride, int pad) {
  expect_4d(x, "max_pool2d");
  const int B = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  const int Ho = pooled_extent(H, k, stride, pad);
  const int Wo = pooled_extent(W, k, stride, pad);
  auto out = make_node({B, C, Ho, Wo});
  const auto& xv = x.values();
  std::vector<long> argmax(out->value.size(), -1);
  size_t oi = 0;
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      const size_t plane = (static_cast<size_t>(b) * C + c) * H * W;
      for (int ho = 0; ho < Ho; ++ho) {
        for (int wo = 0; wo < Wo; ++wo, ++oi) {
          double best = -std::numeric_limits<double>::infinity();
          long best_idx = -1;
          for (int i = 0; i < k; ++i) {
            const int hi = ho * stride - pad + i;
            if (hi < 0 || hi >= H) continue;
            for (int j = 0; j < k; ++j) {
              const int wi = wo * stride - pad + j;
              if (wi < 0 || wi >= W) continue;
              const size_t idx = plane + static_cast<size_t>(hi) * W + wi;
              if (xv[idx] > best) {
                best = xv[idx];
                best_idx = static_cast<long>(idx);
              }
            }
          }
          out->value[oi] = best_idx >= 0 ? best : 0.0;
          argmax[oi] = best_idx;
        }
      }
    }
  }
  if (track({&x})) {
    attach(out, {x.node()}, [px = x.node(), argmax = std::move(argmax)](Node& self) {
      for (size_t i = 0; i < self.grad.size(); ++i) {
        if (argmax[i] >= 0) accumulate(*px, static_cast<size_t>(argmax[i]), self.grad[i]);
      }
    });
  }
  return Tensor(out);
}

Tensor avg_pool2d(const Tensor& x, int k, int stride, int pad) {
  expect_4d(x, "avg_pool2d");
  const int B = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  const int Ho = pooled_extent(H, k, stride, pad);
  const int Wo = pooled_extent(W, k, stride, pad);
  auto out = make_node({B, C, Ho, Wo});
  const auto& xv = x.values();
  size_t oi = 0;
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      const size_t plane = (static_cast<size_t>(b) * C + c) * H * W;
      for (int ho = 0; ho < Ho; ++ho) {
        for (int wo = 0; wo < Wo; ++wo, ++oi) {
          double sum = 0.0;
          int count = 0;
          for (int i = 0; i < k; ++i) {
            const int hi = ho * stride - pad + i;
            if (hi < 0 || hi >= H) continue;
            for (int j = 0; j < k; ++j) {
              const int wi = wo * stride - pad + j;
              if (wi < 0 || wi >= W) continue;
              sum += xv[plane + static_cast<size_t>(hi) * W + wi];
              ++count;
            }
          }
          out->value[oi] = count > 0 ? sum / count : 0.0;
        }
      }
    }
  }
  if (track({&x})) {
    attach(out, {x.node()}, [px = x.node(), B, C, H, W, Ho, Wo, k, stride, pad](Node& self) {
      px->ensure_grad();
      size_t oi2 = 0;
      for (int b = 0; b < B; ++b) {
        for (int c = 0; c < C; ++c) {
          const size_t plane = (static_cast<size_t>(b) * C + c) * H * W;
          for (int ho = 0; ho < Ho; ++ho) {
            for (int wo = 0; wo < Wo; ++wo, ++oi2) {
              int count = 0;
              for (int i = 0; i < k; ++i) {
                const int hi = ho * stride - pad + i;
                if (hi < 0 || hi >= H) continue;
                for (int j = 0; j < k; ++j) {
                  const int wi = wo * stride - pad + j;
                  if (wi < 0 || wi >= W) continue;
                  ++count;
                }
              }
              if (count == 0) continue;
              const double g = self.grad[oi2] / count;
              for (int i = 0; i < k; ++i) {
                const int hi = ho * stride - pad + i;
                if (hi < 0 || hi >= H) continue;
                for (int j = 0; j < k; ++j) {
                  const int wi = wo * stride - pad + j;
                  if (wi < 0 || wi >= W) continue;
                  px->grad[plane + static_cast<size_t>(hi) * W + wi] += g;
                }
              }
            }
          }
        }
      }
    });
  }
  return Tensor(out);
}

Tensor channel_affine(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                      const std::vector<double>& mean, const std::vector<double>& invstd) {
  expect_4d(x, "channel_affine");
  const int B = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  if (gamma.numel() != static_cast<size_t>(C) || beta.numel() != static_cast<size_t>(C) ||
      mean.size() != static_cast<size_t>(C) || invstd.size() != static_cast<size_t>(C)) {
    throw Error(Errc::shape_mismatch, "channel_affine parameter extents must equal C");
  }
  auto out = make_node(x.shape());
  const auto& xv = x.values();
  const auto& gv = gamma.values();
  const auto& bv = beta.values();
  const size_t hw = static_cast<size_t>(H) * W;
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      const size_t base = (static_cast<size_t>(b) * C + c) * hw;
      const double m = mean[c], is = invstd[c], g = gv[c], beta_c = bv[c];
      for (size_t i = 0; i < hw; ++i) {
        out->value[base + i] = (xv[base + i] - m) * is * g + beta_c;
      }
    }
  }
  if (track({&x, &gamma, &beta})) {
    attach(out, {x.node(), gamma.node(), beta.node()},
           [px = x.node(), pg = gamma.node(), pb = beta.node(), mean, invstd, B, C, hw](Node& self) {
             for (int b = 0; b < B; ++b) {
               for (int c = 0; c < C; ++c) {
                 const size_t base = (static_cast<size_t>(b) * C + c) * hw;
                 const double m = mean[c], is = invstd[c], g = pg->value[c];
                 for (size_t i = 0; i < hw; ++i) {
                   const double gout = self.grad[base + i];
                   if (gout == 0.0) continue;
                   accumulate(*px, base + i, gout * is * g);
                   accumulate(*pg, static_cast<size_t>(c), gout * (px->value[base + i] - m) * is);
                   accumulate(*pb, static_cast<size_t>(c), gout);
                 }
               }
             }
           });
  }
  return Tensor(out);
}

Tensor concat_channels(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw Error(Errc::invalid_argument, "concat_channels requires inputs");
  expect_4d(xs.front(), "concat_channels");
  const int B = xs[0].shape()[0], H = xs[0].shape()[2], W = xs[0].shape()[3];
  int C = 0;
  for (const Tensor& t : xs) {
    expect_4d(t, "concat_channels");
    if (t.shape()[0] != B || t.shape()[2] != H || t.shape()[3] != W) {
      throw Error(Errc::shape_mismatch, "concat_channels inputs must agree on B, H, W");
    }
    C += t.shape()[1];
  }
  auto out = make_node({B, C, H, W});
  const size_t hw = static_cast<size_t>(H) * W;
  size_t c_off = 0;
  for (const Tensor& t : xs) {
    const int Ct = t.shape()[1];
    for (int b = 0; b < B; ++b) {
      for (int c = 0; c < Ct; ++c) {
        const size_t src = (static_cast<size_t>(b) * Ct + c) * hw;
        const size_t dst = (static_cast<size_t>(b) * C + c_off + c) * hw;
        std::copy(t.values().begin() + src, t.values().begin() + src + hw,
                  out->value.begin() + dst);
      }
    }
    c_off += static_cast<size_t>(Ct);
  }
  bool need = false;
  for (const Tensor& t : xs) need = need || (g_grad_enabled && t.requires_grad());
  if (need) {
    std::vector<NodePtr> parents;
    for (const Tensor& t : xs) parents.push_back(t.node());
    attach(out, parents, [parents, B, C, hw](Node& self) {
      size_t c_off2 = 0;
      for (const NodePtr& p : parents) {
        const int Ct = p->shape[1];
        if (p->requires_grad) {
          p->ensure_grad();
          for (int b = 0; b < B; ++b) {
            for (int c = 0; c < Ct; ++c) {
              const size_t src = (static_cast<size_t>(b) * C + c_off2 + c) * hw;
              const size_t dst = (static_cast<size_t>(b) * Ct + c) * hw;
              for (size_t i = 0; i < hw; ++i) p->grad[dst + i] += self.grad[src + i];
            }
          }
        }
        c_off2 += static_cast<size_t>(Ct);
      }
    });
  }
  return Tensor(out);
}

Tensor slice_spatial(const Tensor& x, int r0, int c0) {
  expect_4d(x, "slice_spatial");
  const int B = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  if (r0 < 0 || c0 < 0 || r0 >= H || c0 >= W) {
    throw Error(Errc::shape_mismatch, "slice offsets out of range");
  }
  const int Ho = H - r0, Wo = W - c0;
  auto out = make_node({B, C, Ho, Wo});
  const auto& xv = x.values();
  size_t oi = 0;
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      const size_t plane = (static_cast<size_t>(b) * C + c) * H * W;
      for (int h = 0; h < Ho; ++h) {
        for (int w = 0; w < Wo; ++w, ++oi) {
          out->value[oi] = xv[plane + static_cast<size_t>(h + r0) * W + (w + c0)];
        }
      }
    }
  }
  if (track({&x})) {
    attach(out, {x.node()}, [px = x.node(), B, C, H, W, Ho, Wo, r0, c0](Node& self) {
      px->ensure_grad();
      size_t oi2 = 0;
      for (int b = 0; b < B; ++b) {
        for (int c = 0; c < C; ++c) {
          const size_t plane = (static_cast<size_t>(b) * C + c) * H * W;
          for (int h = 0; h < Ho; ++h) {
            for (int w = 0; w < Wo; ++w, ++oi2) {
              px->grad[plane + static_cast<size_t>(h + r0) * W + (w + c0)] += self.grad[oi2];
            }
          }
        }
      }
    });
  }
  return Tensor(out);
}

Tensor global_avg_pool(const Tensor& x) {
  expect_4d(x, "global_avg_pool");
  const int B = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  auto out = make_node({B, C});
  const auto& xv = x.values();
  const size_t hw = static_cast<size_t>(H) * W;
  const double inv = 1.0 / static_cast<double>(hw);
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      const size_t base = (static_cast<size_t>(b) * C + c) * hw;
      double sum = 0.0;
      for (size_t i = 0; i < hw; ++i) sum += xv[base + i];
      out->value[static_cast<size_t>(b) * C + c] = sum * inv;
    }
  }
  if (track({&x})) {
    attach(out, {x.node()}, [px = x.node(), B, C, hw, inv](Node& self) {
      px->ensure_grad();
      for (int b = 0; b < B; ++b) {
        for (int c = 0; c < C; ++c) {
          const size_t base = (static_cast<size_t>(b) * C + c) * hw;
          const double g = self.grad[static_cast<size_t>(b) * C + c] * inv;
          for (size_t i = 0; i < hw; ++i) px->grad[base + i] += g;
        }
      }
    });
  }
  return Tensor(out);
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.shape().size() != 2 || w.shape().size() != 2 || b.shape().size() != 1) {
    throw Error(Errc::shape_mismatch, "linear expects x:(B,F), w:(F,O), b:(O)");
  }
  const int B = x.shape()[0], F = x.shape()[1], O = w.shape()[1];
  if (w.shape()[0] != F || b.shape()[0] != O) {
    throw Error(Errc::shape_mismatch, "linear parameter extents disagree");
  }
  auto out = make_node({B, O});
  const auto& xv = x.values();
  const auto& wv = w.values();
  const auto& bv = b.values();
  for (int bi = 0; bi < B; ++bi) {
    for (int o = 0; o < O; ++o) {
      double acc = bv[o];
      for (int f = 0; f < F; ++f) acc += xv[static_cast<size_t>(bi) * F + f] * wv[static_cast<size_t>(f) * O + o];
      out->value[static_cast<size_t>(bi) * O + o] = acc;
    }
  }
  if (track({&x, &w, &b})) {
    attach(out, {x.node(), w.node(), b.node()},
           [px = x.node(), pw = w.node(), pb = b.node(), B, F, O](Node& self) {
             for (int bi = 0; bi < B; ++bi) {
               for (int o = 0; o < O; ++o) {
                 const double g = self.grad[static_cast<size_t>(bi) * O + o];
                 if (g == 0.0) continue;
                 accumulate(*pb, static_cast<size_t>(o), g);
                 for (int f = 0; f < F; ++f) {
                   accumulate(*pw, static_cast<size_t>(f) * O + o,
                              g * px->value[static_cast<size_t>(bi) * F + f]);
                   accumulate(*px, static_cast<size_t>(bi) * F + f,
                              g * pw->value[static_cast<size_t>(f) * O + o]);
                 }
               }
             }
           });
  }
  return Tensor(out);
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets) {
  if (logits.shape().size() != 2) {
    throw Error(Errc::shape_mismatch, "cross_entropy expects logits of shape (B, classes)");
  }
  const int B = logits.shape()[0], C = logits.shape()[1];
  if (targets.size() != static_cast<size_t>(B)) {
    throw Error(Errc::shape_mismatch, "one target per batch row required");
  }
  for (int t : targets) {
    if (t < 0 || t >= C) {
      throw Error(Errc::invalid_argument, "target class out of range: " + std::to_string(t));
    }
  }
  auto out = make_node({1});
  const auto& lv = logits.values();
  // softmax probabilities retained for the backward pass
  std::vector<double> probs(lv.size());
  double loss = 0.0;
  for (int b = 0; b < B; ++b) {
    const size_t base = static_cast<size_t>(b) * C;
    double m = lv[base];
    for (int c = 1; c < C; ++c) m = std::max(m, lv[base + c]);
    double sum = 0.0;
    for (int c = 0; c < C; ++c) {
      probs[base + c] = std::exp(lv[base + c] - m);
      sum += probs[base + c];
    }
    for (int c = 0; c < C; ++c) probs[base + c] /= sum;
    loss -= std::log(probs[base + targets[static_cast<size_t>(b)]]);
  }
  out->value[0] = loss / B;
  if (track({&logits})) {
    attach(out, {logits.node()},
           [pl = logits.node(), probs = std::move(probs), targets, B, C](Node& self) {
             pl->ensure_grad();
             const double g = self.grad[0] / B;
             for (int b = 0; b < B; ++b) {
               const size_t base = static_cast<size_t>(b) * C;
               for (int c = 0; c < C; ++c) {
                 double delta = c == targets[static_cast<size_t>(b)] ? 1.0 : 0.0;
                 pl->grad[base + c] += g * (probs[base + c] - delta);
               }
             }
           });
  }
  return Tensor(out);
}

Tensor mix(const std::vector<Tensor>& xs, const Tensor& weights) {
  if (xs.empty()) throw Error(Errc::invalid_argument, "mix requires at least one input");
  if (weights.shape().size() != 1 || weights.numel() != xs.size()) {
    throw Error(Errc::shape_mismatch, "mix requires one weight per input");
  }
  for (const Tensor& t : xs) check_same_shape(xs.front(), t, "mix");
  auto out = make_node(xs.front().shape());
  const auto& wv = weights.values();
  for (size_t k = 0; k < xs.size(); ++k) {
    const auto& v = xs[k].values();
    const double w = wv[k];
    for (size_t i = 0; i < v.size(); ++i) out->value[i] += w * v[i];
  }
  bool need = g_grad_enabled && weights.requires_grad();
  for (const Tensor& t : xs) need = need || (g_grad_enabled && t.requires_grad());
  if (need) {
    std::vector<NodePtr> parents;
    for (const Tensor& t : xs) parents.push_back(t.node());
    parents.push_back(weights.node());
    attach(out, parents, [parents](Node& self) {
      const NodePtr& pw = parents.back();
      for (size_t k = 0; k + 1 < parents.size(); ++k) {
        const NodePtr& px = parents[k];
        const double w = pw->value[k];
        if (px->requires_grad) {
          px->ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i) px->grad[i] += w * self.grad[i];
        }
        if (pw->requires_grad) {
          double dot = 0.0;
          for (size_t i = 0; i < self.grad.size(); ++i) dot += self.grad[i] * px->value[i];
          accumulate(*pw, k, dot);
        }
      }
    });
  }
  return Tensor(out);
}

double top1_accuracy(const Tensor& logits, const std::vector<int>& targets) {
  const int B = logits.shape()[0], C = logits.shape()[1];
  if (targets.size() != static_cast<size_t>(B)) {
    throw Error(Errc::shape_mismatch, "one target per batch row required");
  }
  int hits = 0;
  const auto& lv = logits.values();
  for (int b = 0; b < B; ++b) {
    const size_t base = static_cast<size_t>(b) * C;
    int best = 0;
    for (int c = 1; c < C; ++c) {
      if (lv[base + c] > lv[base + best]) best = c;
    }
    hits += best == targets[static_cast<size_t>(b)];
  }
  return static_cast<double>(hits) / B;
}

}  // namespace ddarts
