#include <doctest.h>

#include <cmath>
#include <limits>

#include "ddarts/encode.hpp"
#include "ddarts/error.hpp"
#include "ddarts/metric.hpp"
#include "test_util.hpp"

using namespace ddarts;

namespace {

// Plain double sup-inf evaluation, kept deliberately independent of the
// library implementation.
double brute_force_hausdorff(const CellSpec& x, const CellSpec& y, const std::vector<double>& w) {
  auto dist = [&](const EdgeSpec& a, const EdgeSpec& b) {
    double s = 0.0;
    for (size_t k = 0; k < w.size(); ++k) {
      if ((a.selected[k] != 0) != (b.selected[k] != 0)) s += w[k];
    }
    return s / static_cast<double>(w.size());
  };
  double sup_x = 0.0;
  for (const auto& a : x.edges) {
    double inf = std::numeric_limits<double>::infinity();
    for (const auto& b : y.edges) inf = std::min(inf, dist(a, b));
    sup_x = std::max(sup_x, inf);
  }
  double sup_y = 0.0;
  for (const auto& b : y.edges) {
    double inf = std::numeric_limits<double>::infinity();
    for (const auto& a : x.edges) inf = std::min(inf, dist(a, b));
    sup_y = std::max(sup_y, inf);
  }
  return std::max(sup_x, sup_y);
}

}  // namespace

TEST_CASE("hamming basics") {
  auto w = hamming_weights(SearchSpace::So);
  std::vector<uint8_t> u(12, 0), v(12, 0);
  CHECK(hamming(u, v, w) == 0.0);

  u[static_cast<size_t>(OpKind::conv_3x1_1x3)] = 1;
  v[static_cast<size_t>(OpKind::conv_7x1_1x7)] = 1;
  CHECK(hamming(u, v, w) == doctest::Approx((0.8276 + 0.8272) / 12.0).epsilon(1e-12));

  std::vector<uint8_t> ones(12, 1), zeros(12, 0);
  double mean_w = 0.0;
  for (double x : w) mean_w += x;
  mean_w /= 12.0;
  CHECK(hamming(ones, zeros, w) == doctest::Approx(mean_w).epsilon(1e-12));

  std::vector<uint8_t> short_vec(7, 0);
  CHECK_THROWS_AS(hamming(short_vec, v, w), Error);
}

TEST_CASE("hamming upper bound") {
  Rng rng(11);
  auto w = hamming_weights(SearchSpace::So);
  double mean_w = 0.0;
  for (double x : w) mean_w += x;
  mean_w /= static_cast<double>(w.size());
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<uint8_t> u(12), v(12);
    for (auto& b : u) b = rng.below(2);
    for (auto& b : v) b = rng.below(2);
    CHECK(hamming(u, v, w) <= mean_w + 1e-15);
  }
}

TEST_CASE("hausdorff matches brute force") {
  Rng rng(2024);
  auto w = hamming_weights(SearchSpace::So);
  for (int iter = 0; iter < 100; ++iter) {
    Genotype a = testutil::random_genotype(rng, SearchSpace::So, 1, 4);
    Genotype b = testutil::random_genotype(rng, SearchSpace::So, 1, 4);
    double got = hausdorff_cell(a.cells[0], b.cells[0], w);
    double want = brute_force_hausdorff(a.cells[0], b.cells[0], w);
    CHECK(got == doctest::Approx(want).epsilon(1e-15));
  }
}

TEST_CASE("hausdorff identical and asymmetric cases") {
  auto w = hamming_weights(SearchSpace::So);
  Rng rng(77);
  Genotype g = testutil::random_genotype(rng, SearchSpace::So, 1, 4);
  CHECK(hausdorff_cell(g.cells[0], g.cells[0], w) == 0.0);

  // Directed distances can differ; the symmetrized value is their max.
  // X has a point (an edge selecting sep_conv_5x5) far from every point of Y,
  // while every point of Y sits inside X's point set.
  CellSpec x = make_cell(1, CellKind::normal, SearchSpace::So);
  CellSpec y = make_cell(1, CellKind::normal, SearchSpace::So);
  x.edges[0].selected[static_cast<size_t>(OpKind::sep_conv_5x5)] = 1;
  // x edge 1 and both y edges stay empty.
  double fwd = directed_hausdorff(x, y, w);
  double bwd = directed_hausdorff(y, x, w);
  CHECK(fwd > bwd);
  CHECK(bwd == 0.0);
  CHECK(hausdorff_cell(x, y, w) == doctest::Approx(std::max(fwd, bwd)));
  CHECK(hausdorff_cell(x, y, w) == doctest::Approx(0.8487 / 12.0));

  CellSpec other_steps = make_cell(2, CellKind::normal, SearchSpace::So);
  CHECK_THROWS_AS(hausdorff_cell(x, other_steps, w), Error);
}

TEST_CASE("metric axioms on sampled triples") {
  Rng rng(90210);
  auto w = hamming_weights(SearchSpace::So);
  for (int iter = 0; iter < 300; ++iter) {
    Genotype a = testutil::random_genotype(rng, SearchSpace::So, 3, 3);
    Genotype b = testutil::random_genotype(rng, SearchSpace::So, 3, 3);
    Genotype c = testutil::random_genotype(rng, SearchSpace::So, 3, 3);
    double ab = metric_m(a, b, w);
    double ba = metric_m(b, a, w);
    double ac = metric_m(a, c, w);
    double cb = metric_m(c, b, w);
    CHECK(ab == ba);                       // exact symmetry
    CHECK(metric_m(a, a, w) == 0.0);       // identity
    CHECK(ab <= ac + cb + 1e-12);          // triangle inequality
    if (!same_selections(a, b)) CHECK(ab > 0.0);
  }
}

TEST_CASE("metric rejects shape mismatches") {
  Rng rng(3);
  auto w = hamming_weights(SearchSpace::So);
  Genotype a = testutil::random_genotype(rng, SearchSpace::So, 3, 3);
  Genotype b = testutil::random_genotype(rng, SearchSpace::So, 4, 3);
  CHECK_THROWS_AS(metric_m(a, b, w), Error);
  Genotype c = testutil::random_genotype(rng, SearchSpace::So, 3, 2);
  CHECK_THROWS_AS(metric_m(a, c, w), Error);
}

TEST_CASE("encoded residual networks are close relative to random pairs") {
  auto w = hamming_weights(SearchSpace::So);
  Genotype r18 = encode_handcrafted(HandcraftedName::resnet18);
  Genotype r50 = encode_handcrafted(HandcraftedName::resnet50);
  double d = metric_m(r18, r50, w);
  CHECK(d > 0.0);

  Rng rng(515);
  Genotype a = testutil::random_genotype(rng, SearchSpace::So, 4, 4);
  Genotype b = testutil::random_genotype(rng, SearchSpace::So, 4, 4);
  CHECK(d < metric_m(a, b, w));
}

TEST_CASE("plateau detection") {
  SUBCASE("constant from epoch 10 stops at 14") {
    DistanceTrace t;
    for (int e = 0; e <= 9; ++e) t.append(e, 0.01 * e);
    for (int e = 10; e <= 20; ++e) t.append(e, 0.084);
    auto stop = plateau_stop(t, 5, 10, 1e-3);
    REQUIRE(stop.has_value());
    CHECK(*stop == 14);
  }
  SUBCASE("strictly increasing never stops") {
    DistanceTrace t;
    for (int e = 0; e < 40; ++e) t.append(e, 0.01 * e);
    CHECK(!plateau_stop(t, 5, 10, 1e-3).has_value());
  }
  SUBCASE("infinite tolerance stops at the earliest admissible epoch") {
    DistanceTrace t;
    for (int e = 0; e < 20; ++e) t.append(e, 0.5 * e * e);
    auto stop = plateau_stop(t, 5, 10, std::numeric_limits<double>::infinity());
    REQUIRE(stop.has_value());
    CHECK(*stop == 14);  // the window must lie entirely at epochs >= 10
  }
  SUBCASE("identically constant trace also stops at start_epoch + window - 1") {
    DistanceTrace t;
    for (int e = 0; e < 20; ++e) t.append(e, 0.0);
    auto stop = plateau_stop(t, 5, 10, 1e-3);
    REQUIRE(stop.has_value());
    CHECK(*stop == 14);
  }
  SUBCASE("monotone in tolerance") {
    Rng rng(8);
    DistanceTrace t;
    double v = 0.0;
    for (int e = 0; e < 30; ++e) {
      v += rng.uniform(0.0, 0.02);
      t.append(e, v);
    }
    double tols[] = {1e-4, 1e-3, 1e-2, 0.05, 0.2, 1.0};
    int last = std::numeric_limits<int>::max();
    for (double tol : tols) {
      auto stop = plateau_stop(t, 5, 10, tol);
      int when = stop ? *stop : std::numeric_limits<int>::max();
      CHECK(when <= last);
      last = when;
    }
  }
  SUBCASE("trace validation") {
    DistanceTrace t;
    t.append(3, 0.1);
    CHECK_THROWS_AS(t.append(3, 0.2), Error);
    CHECK_THROWS_AS(t.append(4, -0.1), Error);
    CHECK_THROWS_AS(plateau_stop(t, 0, 0, 1.0), Error);
  }
}

TEST_CASE("pairwise matrix") {
  auto w = hamming_weights(SearchSpace::So);
  Genotype r18 = encode_handcrafted(HandcraftedName::resnet18);
  Genotype r50 = encode_handcrafted(HandcraftedName::resnet50);

  SUBCASE("single genotype") {
    auto m = pairwise_matrix({r18}, {"r18"}, w);
    CHECK(m.values.size() == 1);
    CHECK(m.values[0][0] == 0.0);
  }
  SUBCASE("duplicate rows") {
    auto m = pairwise_matrix({r18, r18, r50}, {"a", "b", "c"}, w);
    CHECK(m.values[0] == m.values[1]);
    CHECK(m.values[0][1] == 0.0);
    CHECK(m.values[0][2] > 0.0);
    CHECK(m.values[0][2] == m.values[2][0]);
  }
  SUBCASE("csv shape") {
    auto m = pairwise_matrix({r18, r50}, {"r18", "r50"}, w);
    std::string csv = m.to_csv();
    CHECK(csv.rfind("label,r18,r50\n", 0) == 0);
    size_t lines = 0;
    for (char ch : csv) lines += ch == '\n';
    CHECK(lines == 3);
  }
  SUBCASE("mixed cell counts rejected") {
    Genotype xc = encode_handcrafted(HandcraftedName::xception);
    CHECK_THROWS_AS(pairwise_matrix({r18, xc}, {"a", "b"}, w), Error);
  }
}

TEST_CASE("trace csv") {
  DistanceTrace t;
  t.append(0, 0.0);
  t.append(1, 0.5);
  CHECK(t.to_csv() == "epoch,distance_du\n0,0.000000000\n1,0.500000000\n");
}
