#include <doctest.h>

#include <cmath>

#include "ddarts/encode.hpp"
#include "ddarts/optim.hpp"
#include "ddarts/search.hpp"

using namespace ddarts;

namespace {

Dataset tiny_data(int count = 32, int classes = 2, int hw = 8, uint64_t seed = 5) {
  SyntheticSpec spec;
  spec.count = count;
  spec.classes = classes;
  spec.channels = 2;
  spec.hw = hw;
  spec.noise = 0.1;
  spec.seed = seed;
  return synthetic_dataset(spec);
}

SearchConfig tiny_search(SearchMode mode) {
  SearchConfig cfg;
  cfg.mode = mode;
  cfg.space = SearchSpace::S;
  cfg.cells = 2;
  cfg.steps = 1;
  cfg.channels = 2;
  cfg.epochs = 2;
  cfg.batch = 4;
  cfg.seed = 11;
  return cfg;
}

// 3-cell warm-start genotype in S with two steps; small enough for fast
// dartopti runs.
Genotype small_warm_genotype() {
  Genotype g;
  g.space = SearchSpace::S;
  g.reduction_positions = {1, 2};
  for (int i = 0; i < 3; ++i) {
    CellSpec cell = make_cell(2, i == 0 ? CellKind::normal : CellKind::reduction, SearchSpace::S);
    cell.edges[static_cast<size_t>(edge_index(2, 1, 2))]
        .selected[static_cast<size_t>(OpKind::sep_conv_3x3)] = 1;
    cell.edges[static_cast<size_t>(edge_index(2, 1, 3))]
        .selected[static_cast<size_t>(OpKind::skip_connect)] = 1;
    g.cells.push_back(std::move(cell));
  }
  g.share_groups = share_groups_by_equality(g.cells);
  validate(g);
  return g;
}

}  // namespace

TEST_CASE("marginal contributions match explicit re-evaluation and keep state intact") {
  Dataset data = tiny_data();
  SupernetConfig cfg;
  cfg.space = SearchSpace::S;
  cfg.cells = 2;
  cfg.steps = 2;
  cfg.channels = 2;
  cfg.in_channels = 2;
  cfg.classes = 2;
  cfg.reduction_positions = {1};
  cfg.seed = 3;
  Supernet net(cfg);

  std::vector<int> idx = {0, 1, 2, 3};
  Tensor x = batch_images(data, idx);
  std::vector<int> y = batch_labels(data, idx);

  SUBCASE("untrained network has identically zero contributions") {
    // The zero-initialized classifier maps every input to identical logits,
    // so ablation cannot move the loss.
    MarginalContributions mc = marginal_contributions(net, x, y);
    for (double v : mc.values) CHECK(v == 0.0);
  }

  SUBCASE("trained network matches the re-evaluation oracle") {
    // A couple of weight steps so the classifier differentiates cells.
    SgdMomentum sgd(0.9);
    for (int step = 0; step < 4; ++step) {
      for (Tensor& t : net.weights()) t.zero_grad();
      Tensor ce = cross_entropy(net.forward(x, true), y);
      ce.backward();
      sgd.step(net.weights(), 0.05);
    }
    const uint64_t before = net.state_hash();
    MarginalContributions mc = marginal_contributions(net, x, y);
    CHECK(net.state_hash() == before);

    NoGradGuard eval;
    const double full = cross_entropy(net.forward(x), y).item();
    for (size_t i = 0; i < net.cell_count(); ++i) {
      const double ablated =
          cross_entropy(net.forward(x, false, static_cast<int>(i)), y).item();
      CHECK(mc.values[i] == doctest::Approx(full - ablated).epsilon(1e-12));
    }
    // Something actually changed when cells were removed.
    bool any_nonzero = false;
    for (double v : mc.values) any_nonzero |= v != 0.0;
    CHECK(any_nonzero);
  }
}

TEST_CASE("alpha step isolation per share group") {
  SupernetConfig cfg;
  cfg.space = SearchSpace::S;
  cfg.cells = 3;
  cfg.steps = 1;
  cfg.channels = 2;
  cfg.in_channels = 2;
  cfg.classes = 2;
  cfg.reduction_positions = {1};
  cfg.seed = 17;
  Supernet net(cfg);
  Dataset data = tiny_data();
  Tensor x = batch_images(data, {0, 1, 2, 3});
  std::vector<int> y = batch_labels(data, {0, 1, 2, 3});

  // Train the classifier away from its zero initialization first; before
  // that no gradient reaches the logits.
  SgdMomentum warmup(0.9);
  for (int step = 0; step < 2; ++step) {
    for (Tensor& t : net.weights()) t.zero_grad();
    cross_entropy(net.forward(x, true), y).backward();
    warmup.step(net.weights(), 0.05);
  }

  for (Tensor& t : net.weights()) t.zero_grad();
  for (auto& block : net.alpha_groups()) {
    for (Tensor& t : block) t.zero_grad();
  }
  cross_entropy(net.forward(x), y).backward();

  std::vector<std::vector<std::vector<double>>> before;
  for (auto& block : net.alpha_groups()) {
    std::vector<std::vector<double>> rows;
    for (Tensor& t : block) rows.push_back(t.values());
    before.push_back(rows);
  }

  Adam adam(0.01);
  adam.step(net.alpha_groups()[0]);

  for (size_t gi = 0; gi < net.alpha_groups().size(); ++gi) {
    for (size_t ei = 0; ei < net.alpha_groups()[gi].size(); ++ei) {
      if (gi == 0) continue;
      CHECK(net.alpha_groups()[gi][ei].values() == before[gi][ei]);  // bit identical
    }
  }
  CHECK(net.alpha_groups()[0][0].values() != before[0][0]);
}

TEST_CASE("search runs, emits metrics and a valid genotype") {
  Dataset data = tiny_data();
  SearchConfig cfg = tiny_search(SearchMode::ddarts);
  SearchResult res = run_search(data, cfg);

  CHECK(res.epochs_run == cfg.epochs);
  CHECK(res.metrics.size() == static_cast<size_t>(cfg.epochs));
  CHECK(res.trace.size() == static_cast<size_t>(cfg.epochs));
  CHECK_NOTHROW(validate(res.genotype));
  for (double v : res.trace.values) {
    CHECK(v >= 0.0);
    CHECK(std::isfinite(v));
  }
  for (const auto& row : res.metrics) {
    CHECK(std::isfinite(row.train_loss));
    CHECK(std::isfinite(row.val_loss));
    CHECK(row.val_top1 >= 0.0);
    CHECK(row.val_top1 <= 1.0);
  }
  // The checkpoint snapshot carries the alpha blocks.
  AlphaTable from_ckpt = alpha_from_checkpoint(res.checkpoint);
  CHECK(from_ckpt.logits == res.final_alpha.logits);
}

TEST_CASE("identical seeds reproduce identical runs") {
  Dataset data = tiny_data();
  SearchConfig cfg = tiny_search(SearchMode::ddarts);
  SearchResult a = run_search(data, cfg);
  SearchResult b = run_search(data, cfg);
  CHECK(a.final_alpha.logits == b.final_alpha.logits);
  CHECK(a.genotype == b.genotype);
  CHECK(metrics_csv(a.metrics, false) == metrics_csv(b.metrics, false));
}

TEST_CASE("ddarts with zero ablation weight degenerates to fairdarts") {
  Dataset data = tiny_data();
  SearchConfig dd = tiny_search(SearchMode::ddarts);
  dd.loss.w_abl = 0.0;
  SearchConfig fair = tiny_search(SearchMode::fairdarts);
  fair.loss.w_abl = 0.0;

  SearchResult a = run_search(data, dd);
  SearchResult b = run_search(data, fair);
  CHECK(a.final_alpha.logits == b.final_alpha.logits);  // same update values
  CHECK(a.genotype == b.genotype);
}

TEST_CASE("darts mode searches with softmax mixing") {
  Dataset data = tiny_data();
  SearchConfig cfg = tiny_search(SearchMode::darts);
  cfg.parse = ParseMethod::darts;
  SearchResult res = run_search(data, cfg);
  CHECK_NOTHROW(validate(res.genotype));
  // darts parsing keeps at most 2 incoming edges per node, each single-op.
  for (const auto& cell : res.genotype.cells) {
    for (const auto& e : cell.edges) CHECK(e.popcount() <= 1);
  }
}

TEST_CASE("dartopti with frozen logits keeps a zero trace and stops early") {
  Dataset data = tiny_data(48, 2, 8, 21);
  Genotype start = small_warm_genotype();

  SearchConfig cfg;
  cfg.mode = SearchMode::dartopti;
  cfg.channels = 2;
  cfg.epochs = 30;
  cfg.batch = 4;
  cfg.seed = 9;
  cfg.alpha_lr = 0.0;  // freeze the architecture
  cfg.pretrain_epochs = 5;
  SearchResult res = run_search(data, cfg, start);

  CHECK(res.start_genotype == start);  // warm start round-trips through parsing
  CHECK(res.stopped_early);
  CHECK(res.epochs_run == 15);  // plateau at epoch 14, epochs 0..14
  for (double v : res.trace.values) CHECK(v == 0.0);
  CHECK(res.genotype == start);
}

TEST_CASE("dartopti requires a starting genotype") {
  Dataset data = tiny_data();
  SearchConfig cfg = tiny_search(SearchMode::dartopti);
  CHECK_THROWS_AS(run_search(data, cfg), Error);
}

TEST_CASE("search rejects oversized batches and empty datasets") {
  Dataset data = tiny_data(8);
  SearchConfig cfg = tiny_search(SearchMode::ddarts);
  cfg.batch = 100;
  CHECK_THROWS_AS(run_search(data, cfg), Error);
  Dataset empty;
  cfg.batch = 2;
  CHECK_THROWS_AS(run_search(empty, cfg), Error);
}

TEST_CASE("metrics csv formatting") {
  EpochMetrics row;
  row.epoch = 3;
  row.train_loss = 0.5;
  row.val_loss = 0.25;
  row.val_top1 = 0.875;
  row.l01 = -0.125;
  row.mean_mc = 0.03125;
  row.distance_du = 0.0625;
  row.epoch_seconds = 12.345;
  std::string with_timing = metrics_csv({row}, true);
  std::string without = metrics_csv({row}, false);
  CHECK(with_timing.find("12.345") != std::string::npos);
  CHECK(without.find("12.345") == std::string::npos);
  CHECK(without.find(",0.000\n") != std::string::npos);
  CHECK(without.rfind("epoch,train_loss,val_loss,val_top1,l01,mean_mc,distance_du,epoch_seconds\n",
                      0) == 0);
}

TEST_CASE("discrete training learns the separable toy task") {
  Dataset data = tiny_data(64, 2, 8, 33);
  Genotype g = small_warm_genotype();
  TrainResult tr = train_discrete(g, data, 10, 8, 0.05, 0.9, 4, 77);
  CHECK(tr.best_val_top1 > 0.8);
}

TEST_CASE("op score benchmark") {
  Genotype proxy = residual_proxy_3cell();
  Dataset data = tiny_data(32, 2, 8, 41);

  OpScoreConfig oc;
  oc.runs = 1;
  oc.epochs = 0;
  oc.batch = 4;
  oc.channels = 2;
  oc.seed = 13;

  SUBCASE("untrained proxies score exactly chance accuracy") {
    auto scores = op_score_benchmark(proxy, data, oc);
    CHECK(scores.size() == 12);
    for (const auto& [op, score] : scores) {
      CHECK(score == doctest::Approx(0.5).epsilon(1e-12));  // balanced 2-class halves
    }
  }
  SUBCASE("deterministic across repeats and thread counts") {
    oc.epochs = 1;
    auto a = op_score_benchmark(proxy, data, oc);
    auto b = op_score_benchmark(proxy, data, oc);
    CHECK(a == b);
    oc.threads = 2;
    auto c = op_score_benchmark(proxy, data, oc);
    CHECK(a == c);
  }
  SUBCASE("scores populate a valid table") {
    oc.epochs = 1;
    auto scores = op_score_benchmark(proxy, data, oc);
    OpScoreTable table = scores_to_table(scores);
    for (const auto& [op, score] : scores) {
      CHECK(score >= 0.0);
      CHECK(score <= 1.0);
      CHECK(table.score(op) > 0.0);
      CHECK(table.score(op) < 1.0);
    }
    std::string csv = op_scores_csv(scores);
    CHECK(csv.rfind("op,score\n", 0) == 0);
  }
}
