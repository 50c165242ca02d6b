#include <doctest.h>

#include <cmath>

#include "ddarts/error.hpp"
#include "ddarts/tensor.hpp"
#include "gradcheck.hpp"

using namespace ddarts;
using testutil::max_grad_rel_error;

namespace {

Tensor random_leaf(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape), /*requires_grad=*/true);
  for (double& v : t.values()) v = rng.normal(0.0, scale);
  return t;
}

}  // namespace

TEST_CASE("tensor construction and access") {
  Tensor t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.numel() == 6);
  CHECK(t.shape() == std::vector<int>{2, 3});
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1.0}), Error);
  CHECK_THROWS_AS(Tensor::zeros({0, 3}), Error);
  CHECK_THROWS_AS(t.item(), Error);
  CHECK(Tensor::scalar(4.5).item() == 4.5);
}

TEST_CASE("gradient accumulation across uses") {
  Tensor x = Tensor::scalar(3.0, true);
  Tensor y = add(x, x);  // dy/dx = 2
  y.backward();
  CHECK(x.grad()[0] == 2.0);
  // A second backward on a fresh graph accumulates on top.
  Tensor z = scale(x, 5.0);
  z.backward();
  CHECK(x.grad()[0] == 7.0);
  x.zero_grad();
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("no-grad guard skips graph recording") {
  Tensor x = Tensor::scalar(2.0, true);
  {
    NoGradGuard guard;
    CHECK(!grad_enabled());
    Tensor y = square(x);
    CHECK(y.values()[0] == 4.0);
    CHECK(!y.requires_grad());
  }
  CHECK(grad_enabled());
}

TEST_CASE("elementwise and reduction gradients") {
  Rng rng(101);
  for (int iter = 0; iter < 5; ++iter) {
    Tensor x = random_leaf({3, 4}, rng);
    CHECK(max_grad_rel_error([&] { return mean_all(square(relu(x))); }, {x}) < 1e-4);
    CHECK(max_grad_rel_error([&] { return mean_all(sigmoid_t(x)); }, {x}) < 1e-4);
    CHECK(max_grad_rel_error([&] { return mean_all(add_const(scale(x, 1.7), 0.3)); }, {x}) < 1e-4);

    Tensor a = random_leaf({2, 5}, rng);
    Tensor b = random_leaf({2, 5}, rng);
    CHECK(max_grad_rel_error([&] { return mean_all(square(add(a, b))); }, {a, b}) < 1e-4);

    Tensor v = random_leaf({6}, rng);
    CHECK(max_grad_rel_error([&] { return mean_all(square(softmax_vector(v))); }, {v}) < 1e-4);
  }
}

TEST_CASE("softmax vector values") {
  Tensor v = Tensor::from({4}, {1.0, 1.0, 1.0, 1.0}, true);
  Tensor s = softmax_vector(v);
  for (double x : s.values()) CHECK(x == doctest::Approx(0.25));
  Rng rng(55);
  Tensor r = random_leaf({7}, rng);
  Tensor sm = softmax_vector(r);
  double sum = 0.0;
  for (double x : sm.values()) sum += x;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("conv2d shapes and gradients") {
  Rng rng(2211);

  SUBCASE("plain 3x3 stride 1") {
    Tensor x = random_leaf({2, 3, 5, 5}, rng);
    Tensor w = random_leaf({4, 3, 3, 3}, rng, 0.4);
    Conv2dSpec spec;
    spec.pad_h = spec.pad_w = 1;
    Tensor y = conv2d(x, w, spec);
    CHECK(y.shape() == std::vector<int>{2, 4, 5, 5});
    CHECK(max_grad_rel_error([&] { return mean_all(square(conv2d(x, w, spec))); }, {x, w}) < 1e-4);
  }
  SUBCASE("stride 2") {
    Tensor x = random_leaf({1, 2, 6, 6}, rng);
    Tensor w = random_leaf({2, 2, 3, 3}, rng, 0.4);
    Conv2dSpec spec;
    spec.stride = 2;
    spec.pad_h = spec.pad_w = 1;
    Tensor y = conv2d(x, w, spec);
    CHECK(y.shape() == std::vector<int>{1, 2, 3, 3});
    CHECK(max_grad_rel_error([&] { return mean_all(square(conv2d(x, w, spec))); }, {x, w}) < 1e-4);
  }
  SUBCASE("depthwise dilated") {
    Tensor x = random_leaf({1, 4, 7, 7}, rng);
    Tensor w = random_leaf({4, 1, 3, 3}, rng, 0.4);
    Conv2dSpec spec;
    spec.pad_h = spec.pad_w = 2;
    spec.dil_h = spec.dil_w = 2;
    spec.groups = 4;
    Tensor y = conv2d(x, w, spec);
    CHECK(y.shape() == std::vector<int>{1, 4, 7, 7});
    CHECK(max_grad_rel_error([&] { return mean_all(square(conv2d(x, w, spec))); }, {x, w}) < 1e-4);
  }
  SUBCASE("asymmetric kernels") {
    Tensor x = random_leaf({1, 2, 6, 6}, rng);
    Tensor w = random_leaf({2, 2, 3, 1}, rng, 0.4);
    Conv2dSpec spec;
    spec.pad_h = 1;
    Tensor y = conv2d(x, w, spec);
    CHECK(y.shape() == std::vector<int>{1, 2, 6, 6});
    CHECK(max_grad_rel_error([&] { return mean_all(square(conv2d(x, w, spec))); }, {x, w}) < 1e-4);
  }
  SUBCASE("shape validation") {
    Tensor x = random_leaf({1, 3, 4, 4}, rng);
    Tensor w = random_leaf({2, 2, 3, 3}, rng);
    CHECK_THROWS_AS(conv2d(x, w, {}), Error);
  }
}

TEST_CASE("pooling") {
  Rng rng(17);
  SUBCASE("max pool picks the max and routes gradient to it") {
    Tensor x = Tensor::from({1, 1, 2, 2}, {1.0, 5.0, 2.0, 3.0}, true);
    Tensor y = max_pool2d(x, 3, 1, 1);
    CHECK(y.shape() == std::vector<int>{1, 1, 2, 2});
    for (double v : y.values()) CHECK(v == 5.0);
    mean_all(y).backward();
    CHECK(x.grad()[1] == 1.0);
    CHECK(x.grad()[0] == 0.0);
  }
  SUBCASE("avg pool keeps constants constant") {
    Tensor x = Tensor::constant({2, 3, 4, 4}, 2.5);
    for (int stride : {1, 2}) {
      Tensor y = avg_pool2d(x, 3, stride, 1);
      for (double v : y.values()) CHECK(v == doctest::Approx(2.5).epsilon(1e-15));
    }
  }
  SUBCASE("avg pool gradient") {
    Tensor x = random_leaf({1, 2, 5, 5}, rng);
    CHECK(max_grad_rel_error([&] { return mean_all(square(avg_pool2d(x, 3, 2, 1))); }, {x}) < 1e-4);
  }
  SUBCASE("max pool gradient") {
    Tensor x = random_leaf({1, 2, 5, 5}, rng);
    CHECK(max_grad_rel_error([&] { return mean_all(square(max_pool2d(x, 3, 1, 1))); }, {x}) < 1e-4);
  }
}

TEST_CASE("channel affine / concat / slice / gap") {
  Rng rng(23);
  Tensor x = random_leaf({2, 3, 4, 4}, rng);
  Tensor gamma = random_leaf({3}, rng, 0.5);
  Tensor beta = random_leaf({3}, rng, 0.5);
  std::vector<double> mean = {0.1, -0.2, 0.3};
  std::vector<double> invstd = {1.0, 0.8, 1.2};
  CHECK(max_grad_rel_error([&] { return mean_all(square(channel_affine(x, gamma, beta, mean, invstd))); },
                           {x, gamma, beta}) < 1e-4);

  Tensor a = random_leaf({2, 2, 3, 3}, rng);
  Tensor b = random_leaf({2, 1, 3, 3}, rng);
  Tensor cat = concat_channels({a, b});
  CHECK(cat.shape() == std::vector<int>{2, 3, 3, 3});
  CHECK(max_grad_rel_error([&] { return mean_all(square(concat_channels({a, b}))); }, {a, b}) < 1e-4);

  Tensor s = slice_spatial(x, 1, 1);
  CHECK(s.shape() == std::vector<int>{2, 3, 3, 3});
  CHECK(max_grad_rel_error([&] { return mean_all(square(slice_spatial(x, 1, 1))); }, {x}) < 1e-4);

  Tensor g = global_avg_pool(x);
  CHECK(g.shape() == std::vector<int>{2, 3});
  CHECK(max_grad_rel_error([&] { return mean_all(square(global_avg_pool(x))); }, {x}) < 1e-4);
}

TEST_CASE("linear") {
  Rng rng(31);
  Tensor x = random_leaf({3, 4}, rng);
  Tensor w = random_leaf({4, 2}, rng, 0.5);
  Tensor b = random_leaf({2}, rng, 0.5);
  Tensor y = linear(x, w, b);
  CHECK(y.shape() == std::vector<int>{3, 2});
  CHECK(max_grad_rel_error([&] { return mean_all(square(linear(x, w, b))); }, {x, w, b}) < 1e-4);
}

TEST_CASE("cross entropy") {
  SUBCASE("uniform logits over 10 classes") {
    Tensor logits = Tensor::zeros({2, 10});
    Tensor loss = cross_entropy(logits, {3, 7});
    CHECK(loss.item() == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  }
  SUBCASE("saturated logit vanishes") {
    Tensor logits = Tensor::zeros({1, 4});
    logits.values()[2] = 1e4;
    Tensor loss = cross_entropy(logits, {2});
    CHECK(loss.item() == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("gradient equals softmax minus one-hot") {
    Rng rng(47);
    Tensor logits = random_leaf({3, 5}, rng);
    std::vector<int> targets = {1, 4, 0};
    Tensor loss = cross_entropy(logits, targets);
    loss.backward();
    const auto& lv = logits.values();
    for (int b = 0; b < 3; ++b) {
      double m = -1e300, sum = 0.0;
      for (int c = 0; c < 5; ++c) m = std::max(m, lv[b * 5 + c]);
      for (int c = 0; c < 5; ++c) sum += std::exp(lv[b * 5 + c] - m);
      for (int c = 0; c < 5; ++c) {
        double p = std::exp(lv[b * 5 + c] - m) / sum;
        double want = (p - (targets[b] == c ? 1.0 : 0.0)) / 3.0;
        CHECK(logits.grad()[b * 5 + c] == doctest::Approx(want).epsilon(1e-10));
      }
    }
    CHECK(max_grad_rel_error([&] { return cross_entropy(logits, targets); }, {logits}) < 1e-4);
  }
  SUBCASE("out of range target") {
    Tensor logits = Tensor::zeros({1, 3});
    CHECK_THROWS_AS(cross_entropy(logits, {3}), Error);
    CHECK_THROWS_AS(cross_entropy(logits, {-1}), Error);
  }
}

TEST_CASE("mix") {
  Rng rng(59);
  std::vector<Tensor> xs = {random_leaf({2, 2, 3, 3}, rng), random_leaf({2, 2, 3, 3}, rng),
                            random_leaf({2, 2, 3, 3}, rng)};
  Tensor w = random_leaf({3}, rng);
  CHECK(max_grad_rel_error([&] { return mean_all(square(mix(xs, w))); }, {xs[0], xs[1], xs[2], w}) <
        1e-4);
  Tensor wrong = random_leaf({2}, rng);
  CHECK_THROWS_AS(mix(xs, wrong), Error);
}

TEST_CASE("top1 accuracy") {
  Tensor logits = Tensor::from({3, 3}, {1, 0, 0, 0, 2, 0, 0, 0, 3});
  CHECK(top1_accuracy(logits, {0, 1, 2}) == 1.0);
  CHECK(top1_accuracy(logits, {1, 1, 1}) == doctest::Approx(1.0 / 3.0));
  // Ties resolve to the lower class.
  Tensor tie = Tensor::zeros({1, 4});
  CHECK(top1_accuracy(tie, {0}) == 1.0);
  CHECK(top1_accuracy(tie, {1}) == 0.0);
}

TEST_CASE("determinism of forward and backward") {
  auto run = [] {
    Rng rng(777);
    Tensor x = random_leaf({2, 3, 6, 6}, rng);
    Tensor w = random_leaf({3, 3, 3, 3}, rng, 0.3);
    Conv2dSpec spec;
    spec.pad_h = spec.pad_w = 1;
    Tensor loss = mean_all(square(conv2d(x, w, spec)));
    loss.backward();
    std::vector<double> out = loss.values();
    out.insert(out.end(), x.grad().begin(), x.grad().end());
    out.insert(out.end(), w.grad().begin(), w.grad().end());
    return out;
  };
  CHECK(run() == run());
}
