#include <doctest.h>

#include <cmath>

#include "ddarts/losses.hpp"
#include "ddarts/nn.hpp"
#include "gradcheck.hpp"

using namespace ddarts;
using testutil::max_grad_rel_error;

namespace {

Tensor random_input(std::vector<int> shape, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape), /*requires_grad=*/true);
  for (double& v : t.values()) v = rng.normal(0.0, 1.0);
  return t;
}

std::vector<Tensor> collect_params(PrimitiveOp& op) {
  std::vector<Tensor> out;
  op.visit_params("p", [&](const std::string&, Tensor& t) { out.push_back(t); });
  return out;
}

const OpKind kAllOps[] = {
    OpKind::skip_connect,  OpKind::max_pool_3x3,   OpKind::avg_pool_3x3,
    OpKind::sep_conv_3x3,  OpKind::sep_conv_5x5,   OpKind::dil_conv_3x3,
    OpKind::dil_conv_5x5,  OpKind::conv_3x1_1x3,   OpKind::conv_7x1_1x7,
    OpKind::simple_conv_1x1, OpKind::simple_conv_3x3, OpKind::bottleneck_1x3x1,
};

}  // namespace

TEST_CASE("primitive shape contracts") {
  Rng rng(808);
  for (OpKind kind : kAllOps) {
    for (int stride : {1, 2}) {
      PrimitiveOp op = PrimitiveOp::create(kind, 4, stride, rng);
      Tensor x = random_input({2, 4, 8, 8}, rng);
      Tensor y = op.forward(x);
      const int expect = stride == 1 ? 8 : 4;
      CHECK(y.shape() == std::vector<int>{2, 4, expect, expect});
    }
  }
}

TEST_CASE("skip connect stride 1 is exact identity") {
  Rng rng(1);
  PrimitiveOp op = PrimitiveOp::create(OpKind::skip_connect, 3, 1, rng);
  Tensor x = random_input({1, 3, 5, 5}, rng);
  Tensor y = op.forward(x);
  CHECK(y.values() == x.values());
}

TEST_CASE("avg pool primitive keeps constant maps constant") {
  Rng rng(2);
  PrimitiveOp op = PrimitiveOp::create(OpKind::avg_pool_3x3, 2, 1, rng);
  Tensor x = Tensor::constant({1, 2, 6, 6}, -1.25);
  Tensor y = op.forward(x);
  for (double v : y.values()) CHECK(v == doctest::Approx(-1.25).epsilon(1e-15));
}

TEST_CASE("every primitive passes a finite-difference gradient check") {
  Rng rng(31415);
  for (OpKind kind : kAllOps) {
    for (int stride : {1, 2}) {
      for (int cfg = 0; cfg < 2; ++cfg) {
        const int C = cfg == 0 ? 2 : 4;
        const int H = cfg == 0 ? 6 : 8;
        PrimitiveOp op = PrimitiveOp::create(kind, C, stride, rng);
        Tensor x = random_input({1, C, H, H}, rng);
        // Calibrate normalization statistics at the input, then check
        // gradients at that operating point with the statistics frozen.
        // Several passes let the running averages settle through the chain.
        {
          NoGradGuard eval;
          for (int pass = 0; pass < 30; ++pass) (void)op.forward(x, /*update_stats=*/true);
        }
        std::vector<Tensor> leaves = collect_params(op);
        leaves.push_back(x);
        double err = max_grad_rel_error(
            [&] { return mean_all(square(op.forward(x))); }, leaves);
        INFO("op=" << op_name(kind) << " stride=" << stride << " cfg=" << cfg);
        CHECK(err < 1e-4);
      }
    }
  }
}

TEST_CASE("mixed edge with sigmoid weights") {
  Rng rng(99);
  std::vector<PrimitiveOp> ops;
  ops.push_back(PrimitiveOp::create(OpKind::skip_connect, 2, 1, rng));
  ops.push_back(PrimitiveOp::create(OpKind::avg_pool_3x3, 2, 1, rng));
  Tensor x = random_input({1, 2, 4, 4}, rng);

  SUBCASE("zero logits halve every contribution") {
    Tensor alpha = Tensor::zeros({2}, true);
    Tensor y = mixed_edge(x, ops, alpha);
    Tensor skip_out = ops[0].forward(x);
    Tensor pool_out = ops[1].forward(x);
    for (size_t i = 0; i < y.numel(); ++i) {
      CHECK(y.values()[i] ==
            doctest::Approx(0.5 * (skip_out.values()[i] + pool_out.values()[i])).epsilon(1e-12));
    }
  }
  SUBCASE("saturated single op dominates") {
    std::vector<PrimitiveOp> one;
    one.push_back(PrimitiveOp::create(OpKind::skip_connect, 2, 1, rng));
    Tensor alpha = Tensor::constant({1}, 40.0, true);
    Tensor y = mixed_edge(x, one, alpha);
    for (size_t i = 0; i < y.numel(); ++i) {
      CHECK(y.values()[i] == doctest::Approx(x.values()[i]).epsilon(1e-12));
    }
  }
  SUBCASE("gradient w.r.t. alpha and input") {
    Tensor alpha = Tensor::from({2}, {0.3, -0.8}, true);
    CHECK(max_grad_rel_error([&] { return mean_all(square(mixed_edge(x, ops, alpha))); },
                             {alpha, x}) < 1e-4);
  }
  SUBCASE("length mismatch rejected") {
    Tensor alpha = Tensor::zeros({3}, true);
    CHECK_THROWS_AS(mixed_edge(x, ops, alpha), Error);
  }
}

TEST_CASE("mixed edge with softmax weights") {
  Rng rng(100);
  std::vector<PrimitiveOp> ops;
  ops.push_back(PrimitiveOp::create(OpKind::skip_connect, 2, 1, rng));
  ops.push_back(PrimitiveOp::create(OpKind::max_pool_3x3, 2, 1, rng));
  ops.push_back(PrimitiveOp::create(OpKind::avg_pool_3x3, 2, 1, rng));
  Tensor x = random_input({1, 2, 4, 4}, rng);

  SUBCASE("equal logits give uniform weights") {
    Tensor alpha = Tensor::constant({3}, 1.7, true);
    Tensor y = mixed_edge_softmax(x, ops, alpha);
    Tensor manual = Tensor::zeros({1, 2, 4, 4});
    for (auto& op : ops) {
      Tensor o = op.forward(x);
      for (size_t i = 0; i < manual.numel(); ++i) manual.values()[i] += o.values()[i] / 3.0;
    }
    for (size_t i = 0; i < y.numel(); ++i) {
      CHECK(y.values()[i] == doctest::Approx(manual.values()[i]).epsilon(1e-12));
    }
  }
  SUBCASE("gradient check") {
    Tensor alpha = Tensor::from({3}, {0.2, -0.4, 0.9}, true);
    CHECK(max_grad_rel_error([&] { return mean_all(square(mixed_edge_softmax(x, ops, alpha))); },
                             {alpha, x}) < 1e-4);
  }
}

TEST_CASE("channel norm statistics") {
  Rng rng(4);
  ChannelNorm norm = ChannelNorm::create(2);
  Tensor x = random_input({4, 2, 3, 3}, rng);

  SUBCASE("frozen stats leave buffers untouched") {
    auto mean_before = norm.running_mean;
    auto var_before = norm.running_var;
    (void)norm.forward(x, /*update_stats=*/false);
    CHECK(norm.running_mean == mean_before);
    CHECK(norm.running_var == var_before);
  }
  SUBCASE("training mode folds batch statistics in") {
    (void)norm.forward(x, /*update_stats=*/true);
    CHECK(norm.running_mean != std::vector<double>{0.0, 0.0});
  }
  SUBCASE("normalization uses pre-update statistics") {
    Tensor frozen = norm.forward(x, false);
    ChannelNorm other = ChannelNorm::create(2);
    Tensor updating = other.forward(x, true);
    CHECK(frozen.values() == updating.values());
  }
}

TEST_CASE("determinism of primitive construction and forward") {
  auto run = [] {
    Rng rng(31337);
    PrimitiveOp op = PrimitiveOp::create(OpKind::sep_conv_3x3, 3, 1, rng);
    Tensor x = Tensor::zeros({1, 3, 5, 5}, true);
    Rng data(7);
    for (double& v : x.values()) v = data.normal();
    Tensor loss = mean_all(square(op.forward(x)));
    loss.backward();
    std::vector<double> out = loss.values();
    out.insert(out.end(), x.grad().begin(), x.grad().end());
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("zero-one loss") {
  SUBCASE("all logits zero gives the maximum 0") {
    std::vector<std::vector<double>> block = {{0, 0, 0}, {0, 0}};
    CHECK(zero_one_loss(block) == 0.0);
  }
  SUBCASE("saturation approaches -0.25") {
    std::vector<std::vector<double>> block = {{50, -50, 50}, {-50, 50}};
    CHECK(zero_one_loss(block) == doctest::Approx(-0.25).epsilon(1e-9));
  }
  SUBCASE("mixed table matches a brute-force recomputation") {
    Rng rng(606);
    std::vector<std::vector<double>> block(3);
    double sum = 0.0;
    size_t n = 0;
    for (auto& edge : block) {
      edge.resize(7);
      for (double& v : edge) {
        v = rng.normal(0.0, 2.0);
        double d = 1.0 / (1.0 + std::exp(-v)) - 0.5;
        sum += d * d;
        ++n;
      }
    }
    CHECK(zero_one_loss(block) == doctest::Approx(-sum / n).epsilon(1e-12));
  }
  SUBCASE("tensor variant agrees and differentiates") {
    Rng rng(607);
    std::vector<Tensor> edges = {Tensor::zeros({4}, true), Tensor::zeros({4}, true)};
    std::vector<std::vector<double>> block(2, std::vector<double>(4));
    for (size_t e = 0; e < 2; ++e) {
      for (size_t k = 0; k < 4; ++k) {
        double v = rng.normal(0.0, 1.5);
        edges[e].values()[k] = v;
        block[e][k] = v;
      }
    }
    CHECK(zero_one_loss_t(edges).item() == doctest::Approx(zero_one_loss(block)).epsilon(1e-12));
    CHECK(max_grad_rel_error([&] { return zero_one_loss_t(edges); }, edges) < 1e-4);
  }
}

TEST_CASE("fair, ablation and total losses") {
  AlphaTable a = blank_alpha(SearchSpace::S, 2, 1, {});
  LossConfig cfg;
  cfg.w01 = 8.0;
  CHECK(fair_loss(2.0, a, cfg) == doctest::Approx(2.0).epsilon(1e-12));  // L01(0) = 0

  // ce=2.0, L01=-0.2, w01=8 -> 0.4: solve for logits giving L01 = -0.2.
  // (sigma - 0.5)^2 = 0.2 -> sigma = 0.5 + sqrt(0.2).
  double target_sig = 0.5 + std::sqrt(0.2);
  double logit = std::log(target_sig / (1.0 - target_sig));
  for (auto& edge : a.logits[0]) {
    for (double& v : edge) v = logit;
  }
  CHECK(zero_one_loss(a) == doctest::Approx(-0.2).epsilon(1e-12));
  CHECK(fair_loss(2.0, a, cfg) == doctest::Approx(0.4).epsilon(1e-9));

  MarginalContributions mc;
  mc.values = {0.2, 0.1, 0.3};
  CHECK(ablation_loss(mc, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ablation_loss(mc, 1) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(ablation_loss(mc, 2) == doctest::Approx(0.5).epsilon(1e-12));

  MarginalContributions zero_mean;
  zero_mean.values = {0.5, -0.5};
  CHECK(ablation_loss(zero_mean, 0) == 0.0);
  CHECK(ablation_loss(zero_mean, 1) == 0.0);

  SUBCASE("equal contributions vanish for every cell") {
    MarginalContributions eq;
    eq.values = {0.7, 0.7, 0.7, 0.7};
    for (size_t i = 0; i < 4; ++i) CHECK(ablation_loss(eq, i) == doctest::Approx(0.0));
  }

  SUBCASE("total loss arithmetic") {
    // cfg = (w01=8, w_abl=0.5), ce=2.0, L01=-0.2, L_AB=0.5 -> 0.65.
    LossConfig tc;
    tc.w01 = 8.0;
    tc.w_abl = 0.5;
    CHECK(total_loss(2.0, a.logits[0], mc, 2, tc) == doctest::Approx(0.65).epsilon(1e-9));
    // w_abl = 0 reduces to the fair loss.
    tc.w_abl = 0.0;
    CHECK(total_loss(2.0, a.logits[0], mc, 2, tc) == doctest::Approx(fair_loss(2.0, a, tc)));
  }
}
