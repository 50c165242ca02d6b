#pragma once

#include <map>
#include <optional>
#include <string>

#include "ddarts/checkpoint.hpp"
#include "ddarts/data.hpp"
#include "ddarts/losses.hpp"
#include "ddarts/metric.hpp"
#include "ddarts/parse.hpp"
#include "ddarts/supernet.hpp"

namespace ddarts {

enum class SearchMode { ddarts, dartopti, darts, fairdarts };

std::string_view search_mode_name(SearchMode m);
std::optional<SearchMode> search_mode_from_name(std::string_view name);

struct SearchConfig {
  SearchMode mode = SearchMode::ddarts;
  SearchSpace space = SearchSpace::S;
  int cells = 8;
  int steps = 4;
  int channels = 8;
  int epochs = 30;
  int batch = 8;
  uint64_t seed = 1;
  LossConfig loss;                       // w01 default 7, w_abl default 0.5
  double alpha_lr = 3e-4;
  double weight_lr = 0.025;
  double weight_momentum = 0.9;
  ParseMethod parse = ParseMethod::edge;
  double threshold = 0.85;
  int pretrain_epochs = 5;               // weights-only warmup (dartopti)
  bool early_stop = true;                // plateau stop (dartopti)
  int plateau_window = 5;
  int plateau_start = 10;
  double plateau_tolerance = 1e-3;
  double hot = 3.0;                      // warm-start logits
  double cold = -3.0;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_top1 = 0.0;
  double l01 = 0.0;
  double mean_mc = 0.0;
  double distance_du = 0.0;
  double epoch_seconds = 0.0;
};

// "epoch,train_loss,val_loss,val_top1,l01,mean_mc,distance_du,epoch_seconds".
// Timing is written as 0.000 unless include_timing is set, keeping the file
// byte-stable across runs with equal seeds.
std::string metrics_csv(const std::vector<EpochMetrics>& rows, bool include_timing);

struct SearchResult {
  Genotype genotype;
  Genotype start_genotype;        // parse of the initial logits
  DistanceTrace trace;            // metric vs. the starting genotype, per epoch
  std::vector<EpochMetrics> metrics;
  AlphaTable final_alpha;
  Checkpoint checkpoint;          // final weights, buffers and logits
  bool stopped_early = false;
  int epochs_run = 0;
};

// Bi-level search over the dataset's train/val halves. dartopti requires a
// starting genotype; the other modes ignore it.
SearchResult run_search(const Dataset& data, const SearchConfig& cfg,
                        const std::optional<Genotype>& start = std::nullopt);

// Full-network loss minus the loss with each cell bypassed, on one batch,
// in evaluation mode. Leaves the network state bit-identical.
MarginalContributions marginal_contributions(Supernet& net, const Tensor& images,
                                             const std::vector<int>& targets);

struct TrainResult {
  double best_val_top1 = 0.0;
  double final_val_top1 = 0.0;
  std::vector<EpochMetrics> metrics;
};

// Weights-only training of the discrete network a genotype describes.
TrainResult train_discrete(const Genotype& g, const Dataset& data, int epochs, int batch,
                           double lr, double momentum, int channels, uint64_t seed);

struct OpScoreConfig {
  int runs = 4;
  int epochs = 10;
  int batch = 8;
  double lr = 0.025;
  int channels = 4;
  uint64_t seed = 1;
  int threads = 1;
};

// Scores every operation of the proxy's search space: each edge slot in turn
// carries only the benchmarked op, the proxy is retrained, and the op's score
// is the median across edge slots of the best validation accuracy (max over
// runs). Deterministic for a fixed seed regardless of thread count.
std::map<OpKind, double> op_score_benchmark(const Genotype& proxy, const Dataset& data,
                                            const OpScoreConfig& cfg);

// Clamps benchmark results into (0,1) and fills an OpScoreTable; ops outside
// the scored space keep the published constants.
OpScoreTable scores_to_table(const std::map<OpKind, double>& scores);

std::string op_scores_csv(const std::map<OpKind, double>& scores);

}  // namespace ddarts
