#include "ddarts/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include "ddarts/optim.hpp"

namespace ddarts {

std::string_view search_mode_name(SearchMode m) {
  switch (m) {
    case SearchMode::ddarts: return "ddarts";
    case SearchMode::dartopti: return "dartopti";
    case SearchMode::darts: return "darts";
    case SearchMode::fairdarts: return "fairdarts";
  }
  return "?";
}

std::optional<SearchMode> search_mode_from_name(std::string_view name) {
  if (name == "ddarts") return SearchMode::ddarts;
  if (name == "dartopti") return SearchMode::dartopti;
  if (name == "darts") return SearchMode::darts;
  if (name == "fairdarts") return SearchMode::fairdarts;
  return std::nullopt;
}

namespace {

void check_finite(double v, const char* what, int epoch, int step) {
  if (!std::isfinite(v)) {
    throw Error(Errc::divergence, std::string(what) + " became non-finite at epoch " +
                                      std::to_string(epoch) + ", step " + std::to_string(step));
  }
}

// Full pass over [first, first+count) in evaluation mode.
double eval_pass(Supernet& net, const Dataset& data, int first, int count, int batch,
                 double* loss_out) {
  NoGradGuard eval;
  double loss_sum = 0.0;
  int hits = 0;
  for (int pos = 0; pos < count; pos += batch) {
    const int b = std::min(batch, count - pos);
    std::vector<int> idx(static_cast<size_t>(b));
    std::iota(idx.begin(), idx.end(), first + pos);
    Tensor x = batch_images(data, idx);
    std::vector<int> y = batch_labels(data, idx);
    Tensor logits = net.forward(x);
    loss_sum += cross_entropy(logits, y).item() * b;
    hits += static_cast<int>(std::lround(top1_accuracy(logits, y) * b));
  }
  if (loss_out) *loss_out = loss_sum / count;
  return static_cast<double>(hits) / count;
}

}  // namespace

MarginalContributions marginal_contributions(Supernet& net, const Tensor& images,
                                             const std::vector<int>& targets) {
  NoGradGuard eval;
  const double full = cross_entropy(net.forward(images), targets).item();
  MarginalContributions mc;
  mc.values.reserve(net.cell_count());
  for (size_t i = 0; i < net.cell_count(); ++i) {
    const double ablated =
        cross_entropy(net.forward(images, false, static_cast<int>(i)), targets).item();
    mc.values.push_back(full - ablated);
  }
  return mc;
}

std::string metrics_csv(const std::vector<EpochMetrics>& rows, bool include_timing) {
  std::string out = "epoch,train_loss,val_loss,val_top1,l01,mean_mc,distance_du,epoch_seconds\n";
  char buf[256];
  for (const EpochMetrics& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.9f,%.3f\n", r.epoch,
                  r.train_loss, r.val_loss, r.val_top1, r.l01, r.mean_mc, r.distance_du,
                  include_timing ? r.epoch_seconds : 0.0);
    out += buf;
  }
  return out;
}

SearchResult run_search(const Dataset& data, const SearchConfig& cfg,
                        const std::optional<Genotype>& start) {
  if (data.count < 2) throw Error(Errc::config, "dataset is empty or too small to split");
  if (cfg.epochs < 1) throw Error(Errc::config, "search needs at least one epoch");
  if (cfg.batch < 1 || cfg.batch > data.train_count()) {
    throw Error(Errc::config, "batch size must fit inside the training half");
  }

  SupernetConfig net_cfg;
  net_cfg.in_channels = data.channels;
  net_cfg.classes = data.classes;
  net_cfg.channels = cfg.channels;
  net_cfg.seed = cfg.seed;
  const bool warm = cfg.mode == SearchMode::dartopti;
  if (warm) {
    if (!start) throw Error(Errc::config, "dartopti requires a starting genotype");
    validate(*start);
    net_cfg.space = start->space;
    net_cfg.cells = static_cast<int>(start->cell_count());
    net_cfg.steps = start->steps();
    net_cfg.reduction_positions = start->reduction_positions;
    net_cfg.share_groups = start->share_groups;
  } else {
    net_cfg.space = cfg.space;
    net_cfg.cells = cfg.cells;
    net_cfg.steps = cfg.steps;
  }
  net_cfg.mix = cfg.mode == SearchMode::darts ? MixMode::softmax : MixMode::sigmoid;

  Supernet net(net_cfg);
  if (warm) net.load_alpha(genotype_to_alpha(*start, cfg.hot, cfg.cold));

  const std::vector<double> metric_w = hamming_weights(net_cfg.space);
  const Genotype start_parse = parse_alpha(net.alpha_snapshot(), cfg.parse, cfg.threshold);

  SgdMomentum sgd(cfg.weight_momentum);
  std::vector<Adam> adam;
  adam.reserve(net.alpha_groups().size());
  for (size_t gi = 0; gi < net.alpha_groups().size(); ++gi) adam.emplace_back(cfg.alpha_lr);

  Rng shuffle_rng(mix_seed(cfg.seed, "shuffle"));
  const int train_n = data.train_count();
  const int val_n = data.val_count();
  const int val_base = train_n;
  const int steps_per_epoch = train_n / cfg.batch;

  std::vector<int> train_order(static_cast<size_t>(train_n));
  std::iota(train_order.begin(), train_order.end(), 0);
  int val_pos = 0;

  const bool uses_ablation = cfg.mode == SearchMode::ddarts || cfg.mode == SearchMode::dartopti;
  const bool uses_l01 = cfg.mode != SearchMode::darts;

  auto zero_all = [&net] {
    for (Tensor& t : net.weights()) t.zero_grad();
    for (auto& block : net.alpha_groups()) {
      for (Tensor& t : block) t.zero_grad();
    }
  };

  SearchResult res;
  res.start_genotype = start_parse;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto tick = std::chrono::steady_clock::now();
    const bool pretraining = warm && epoch < cfg.pretrain_epochs;

    for (int i = train_n - 1; i > 0; --i) {
      std::swap(train_order[static_cast<size_t>(i)],
                train_order[shuffle_rng.below(static_cast<uint64_t>(i) + 1)]);
    }

    double train_loss_sum = 0.0;
    double mc_sum = 0.0;
    int mc_n = 0;
    for (int s = 0; s < steps_per_epoch; ++s) {
      // Weight phase on a training batch.
      std::vector<int> bidx(train_order.begin() + static_cast<size_t>(s) * cfg.batch,
                            train_order.begin() + static_cast<size_t>(s + 1) * cfg.batch);
      Tensor x = batch_images(data, bidx);
      std::vector<int> y = batch_labels(data, bidx);
      zero_all();
      Tensor ce = cross_entropy(net.forward(x, /*update_stats=*/true), y);
      check_finite(ce.item(), "training loss", epoch, s);
      ce.backward();
      sgd.step(net.weights(), cosine_lr(cfg.weight_lr, epoch, cfg.epochs));
      train_loss_sum += ce.item();

      if (pretraining) continue;

      // Architecture phase on a validation batch.
      std::vector<int> vidx(static_cast<size_t>(cfg.batch));
      for (int t = 0; t < cfg.batch; ++t) vidx[static_cast<size_t>(t)] = val_base + (val_pos + t) % val_n;
      val_pos = (val_pos + cfg.batch) % val_n;
      Tensor xv = batch_images(data, vidx);
      std::vector<int> yv = batch_labels(data, vidx);
      zero_all();
      Tensor cev = cross_entropy(net.forward(xv, /*update_stats=*/false), yv);
      check_finite(cev.item(), "validation loss", epoch, s);
      if (uses_ablation) {
        MarginalContributions mc = marginal_contributions(net, xv, yv);
        mc_sum += mc.mean();
        ++mc_n;
      }
      cev.backward();
      if (uses_l01) {
        for (auto& block : net.alpha_groups()) {
          // One zero-one term per shared table, seeded on top of the
          // cross-entropy gradients already accumulated on the logits.
          scale(zero_one_loss_t(block), cfg.loss.w01).backward();
        }
      }
      for (size_t gi = 0; gi < net.alpha_groups().size(); ++gi) {
        adam[gi].step(net.alpha_groups()[gi]);
      }
    }

    double val_loss = 0.0;
    const double val_top1 = eval_pass(net, data, val_base, val_n, cfg.batch, &val_loss);
    AlphaTable snap = net.alpha_snapshot();
    const Genotype current = parse_alpha(snap, cfg.parse, cfg.threshold);
    const double du = metric_m(start_parse, current, metric_w);
    res.trace.append(epoch, du);

    EpochMetrics row;
    row.epoch = epoch;
    row.train_loss = steps_per_epoch > 0 ? train_loss_sum / steps_per_epoch : 0.0;
    row.val_loss = val_loss;
    row.val_top1 = val_top1;
    row.l01 = zero_one_loss(snap);
    row.mean_mc = mc_n > 0 ? mc_sum / mc_n : 0.0;
    row.distance_du = du;
    row.epoch_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tick).count();
    res.metrics.push_back(row);
    res.epochs_run = epoch + 1;

    if (warm && cfg.early_stop) {
      auto stop = plateau_stop(res.trace, cfg.plateau_window, cfg.plateau_start,
                               cfg.plateau_tolerance);
      if (stop.has_value()) {
        res.stopped_early = true;
        break;
      }
    }
  }

  res.final_alpha = net.alpha_snapshot();
  res.genotype = parse_alpha(res.final_alpha, cfg.parse, cfg.threshold);
  res.checkpoint = checkpoint_from_supernet(net);
  return res;
}

TrainResult train_discrete(const Genotype& g, const Dataset& data, int epochs, int batch,
                           double lr, double momentum, int channels, uint64_t seed) {
  validate(g);
  if (data.count < 2) throw Error(Errc::config, "dataset is empty or too small to split");
  if (batch < 1 || (epochs > 0 && batch > data.train_count())) {
    throw Error(Errc::config, "batch size must fit inside the training half");
  }
  Supernet net(g, channels, data.channels, data.classes, seed);
  SgdMomentum sgd(momentum);
  Rng shuffle_rng(mix_seed(seed, "shuffle"));

  const int train_n = data.train_count();
  const int val_n = data.val_count();
  const int steps_per_epoch = train_n / batch;
  std::vector<int> train_order(static_cast<size_t>(train_n));
  std::iota(train_order.begin(), train_order.end(), 0);

  TrainResult out;
  out.best_val_top1 = eval_pass(net, data, train_n, val_n, batch, nullptr);
  out.final_val_top1 = out.best_val_top1;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    const auto tick = std::chrono::steady_clock::now();
    for (int i = train_n - 1; i > 0; --i) {
      std::swap(train_order[static_cast<size_t>(i)],
                train_order[shuffle_rng.below(static_cast<uint64_t>(i) + 1)]);
    }
    double train_loss_sum = 0.0;
    for (int s = 0; s < steps_per_epoch; ++s) {
      std::vector<int> bidx(train_order.begin() + static_cast<size_t>(s) * batch,
                            train_order.begin() + static_cast<size_t>(s + 1) * batch);
      Tensor x = batch_images(data, bidx);
      std::vector<int> y = batch_labels(data, bidx);
      for (Tensor& t : net.weights()) t.zero_grad();
      Tensor ce = cross_entropy(net.forward(x, /*update_stats=*/true), y);
      check_finite(ce.item(), "training loss", epoch, s);
      ce.backward();
      sgd.step(net.weights(), cosine_lr(lr, epoch, epochs));
      train_loss_sum += ce.item();
    }
    double val_loss = 0.0;
    const double top1 = eval_pass(net, data, train_n, val_n, batch, &val_loss);
    out.best_val_top1 = std::max(out.best_val_top1, top1);
    out.final_val_top1 = top1;

    EpochMetrics row;
    row.epoch = epoch;
    row.train_loss = steps_per_epoch > 0 ? train_loss_sum / steps_per_epoch : 0.0;
    row.val_loss = val_loss;
    row.val_top1 = top1;
    row.epoch_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tick).count();
    out.metrics.push_back(row);
  }
  return out;
}

std::map<OpKind, double> op_score_benchmark(const Genotype& proxy, const Dataset& data,
                                            const OpScoreConfig& cfg) {
  validate(proxy);
  if (cfg.runs < 1) throw Error(Errc::config, "op scoring needs at least one run");
  const int K = op_count(proxy.space);
  const size_t edges_per_cell = proxy.cells.front().edges.size();

  struct Task {
    int op;
    size_t cell, edge;
  };
  std::vector<Task> tasks;
  for (int op = 0; op < K; ++op) {
    for (size_t c = 0; c < proxy.cell_count(); ++c) {
      for (size_t e = 0; e < edges_per_cell; ++e) tasks.push_back({op, c, e});
    }
  }

  std::vector<double> best(tasks.size(), 0.0);
  std::atomic<size_t> cursor{0};
  auto worker = [&] {
    for (;;) {
      const size_t t = cursor.fetch_add(1);
      if (t >= tasks.size()) return;
      const Task& task = tasks[t];
      Genotype mod = proxy;
      EdgeSpec& edge = mod.cells[task.cell].edges[task.edge];
      std::fill(edge.selected.begin(), edge.selected.end(), 0);
      edge.selected[static_cast<size_t>(task.op)] = 1;
      mod.share_groups = share_groups_by_equality(mod.cells);
      double score = 0.0;
      for (int r = 0; r < cfg.runs; ++r) {
        const uint64_t run_seed = mix_seed(
            cfg.seed, "opscore:" + std::to_string(task.op) + ":" + std::to_string(task.cell) +
                          ":" + std::to_string(task.edge) + ":" + std::to_string(r));
        TrainResult tr = train_discrete(mod, data, cfg.epochs, cfg.batch, cfg.lr, 0.9,
                                        cfg.channels, run_seed);
        score = std::max(score, tr.best_val_top1);
      }
      best[t] = score;
    }
  };

  const int n_threads = std::max(1, cfg.threads);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::map<OpKind, double> scores;
  const size_t slots = proxy.cell_count() * edges_per_cell;
  for (int op = 0; op < K; ++op) {
    std::vector<double> per_edge(best.begin() + static_cast<long>(op * slots),
                                 best.begin() + static_cast<long>((op + 1) * slots));
    std::sort(per_edge.begin(), per_edge.end());
    const size_t n = per_edge.size();
    const double median =
        n % 2 ? per_edge[n / 2] : 0.5 * (per_edge[n / 2 - 1] + per_edge[n / 2]);
    scores[static_cast<OpKind>(op)] = median;
  }
  return scores;
}

OpScoreTable scores_to_table(const std::map<OpKind, double>& scores) {
  std::array<double, kNumOpsSo> raw = default_op_scores().raw();
  for (const auto& [op, score] : scores) {
    raw[static_cast<size_t>(op)] = std::clamp(score, 1e-6, 1.0 - 1e-6);
  }
  return OpScoreTable(raw);
}

std::string op_scores_csv(const std::map<OpKind, double>& scores) {
  std::string out = "op,score\n";
  char buf[96];
  for (const auto& [op, score] : scores) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f\n", std::string(op_name(op)).c_str(), score);
    out += buf;
  }
  return out;
}

}  // namespace ddarts
