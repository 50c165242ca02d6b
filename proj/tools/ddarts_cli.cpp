#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include "ddarts/checkpoint.hpp"
#include "ddarts/config.hpp"
#include "ddarts/derive.hpp"
#include "ddarts/encode.hpp"
#include "ddarts/search.hpp"
#include "ddarts/serialize.hpp"
#include "ddarts/space.hpp"

namespace fs = std::filesystem;
using namespace ddarts;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::config:
    case Errc::invalid_argument:
      return kExitConfig;
    case Errc::divergence:
      return kExitDivergence;
    default:
      return kExitError;
  }
}

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "flat key=value configuration file");
  cmd->add_option("--set", o.sets, "override a config key, e.g. --set epochs=20")
      ->take_all();
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "output directory");
}

RunConfig resolve_config(const CommonOpts& o) {
  RunConfig cfg;
  if (!o.config_path.empty()) cfg = parse_config_file(o.config_path, cfg);
  for (const std::string& kv : o.sets) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::config, "--set expects key=value, got '" + kv + "'");
    }
    apply_key_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out = *o.out;
  return cfg;
}

void note_darts_on_extended_space(ParseMethod method, SearchSpace space) {
  if (method == ParseMethod::darts && space == SearchSpace::So) {
    std::cerr << "note: darts parsing applied to the extended 12-op space\n";
  }
}

std::vector<std::pair<std::string, Genotype>> load_genotype_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(Errc::config, "not a directory: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(Errc::config, "no .json genotype documents in " + dir.string());
  std::vector<std::pair<std::string, Genotype>> out;
  for (const fs::path& f : files) {
    std::string label = f.stem().string();
    if (label.size() > 9 && label.substr(label.size() - 9) == ".genotype") {
      label = label.substr(0, label.size() - 9);
    }
    out.emplace_back(label, load_genotype(f));
  }
  return out;
}

PairwiseMatrix matrix_for(const std::vector<std::pair<std::string, Genotype>>& entries) {
  std::vector<Genotype> genotypes;
  std::vector<std::string> labels;
  for (const auto& [label, g] : entries) {
    labels.push_back(label);
    genotypes.push_back(g);
  }
  return pairwise_matrix(genotypes, labels, hamming_weights(genotypes.front().space));
}

int cmd_search(const CommonOpts& common) {
  RunConfig cfg = resolve_config(common);
  SearchConfig sc = cfg.to_search_config();
  Dataset data = cfg.make_dataset();

  std::optional<Genotype> start;
  if (sc.mode == SearchMode::dartopti) {
    if (cfg.start_genotype.empty()) {
      throw Error(Errc::config, "dartopti needs start_genotype = <document path>");
    }
    start = load_genotype(cfg.start_genotype);
  }
  note_darts_on_extended_space(sc.parse, sc.mode == SearchMode::dartopti ? start->space
                                                                         : sc.space);

  const fs::path run_dir = fs::path(cfg.out) / cfg.resolved_run_name();
  fs::create_directories(run_dir);
  write_text_file(run_dir / "config.txt", cfg.serialize());

  SearchResult res = run_search(data, sc, start);

  save_genotype(res.genotype, run_dir / "genotype.json");
  write_text_file(run_dir / "metrics.csv", metrics_csv(res.metrics, cfg.log_timing));
  write_text_file(run_dir / "distance.csv", res.trace.to_csv());
  save_checkpoint(res.checkpoint, run_dir / "checkpoint.bin");

  const EpochMetrics& last = res.metrics.back();
  std::printf("mode=%s epochs_run=%d%s val_top1=%.4f distance_du=%.6f\n",
              std::string(search_mode_name(sc.mode)).c_str(), res.epochs_run,
              res.stopped_early ? " (early stop)" : "", last.val_top1, last.distance_du);
  std::printf("artifacts: %s{genotype.json, metrics.csv, distance.csv, checkpoint.bin, config.txt}\n",
              (run_dir.string() + "/").c_str());
  return kExitOk;
}

int cmd_derive(const std::string& in, size_t n, const std::string& out_path) {
  Genotype src = load_genotype(in);
  auto indices = derive_indices(src.cell_count(), n);
  std::string seq = "[";
  for (size_t i = 0; i < indices.size(); ++i) {
    seq += (i ? "," : "") + std::to_string(indices[i]);
  }
  seq += "]";
  std::printf("%s\n", seq.c_str());
  Genotype derived = derive_genotype({src, n});
  save_genotype(derived, out_path);
  std::printf("wrote %s (%zu cells)\n", out_path.c_str(), derived.cell_count());
  return kExitOk;
}

int cmd_distance(const std::string& a, const std::string& b, const std::string& dir,
                 const std::string& out_path) {
  if (!dir.empty()) {
    auto entries = load_genotype_dir(dir);
    PairwiseMatrix m = matrix_for(entries);
    std::string csv = m.to_csv();
    if (out_path.empty()) {
      std::fputs(csv.c_str(), stdout);
    } else {
      write_text_file(out_path, csv);
      std::printf("wrote %zux%zu matrix to %s\n", m.labels.size(), m.labels.size(),
                  out_path.c_str());
    }
    return kExitOk;
  }
  if (a.empty() || b.empty()) {
    throw Error(Errc::config, "distance needs either --dir or both --a and --b");
  }
  Genotype ga = load_genotype(a);
  Genotype gb = load_genotype(b);
  double d = metric_m(ga, gb, hamming_weights(ga.space));
  std::printf("%.9f\n", d);
  return kExitOk;
}

int cmd_encode(const std::string& name, std::string out_path) {
  auto which = handcrafted_from_name(name);
  if (!which) {
    throw Error(Errc::config, "unknown architecture '" + name +
                                  "' (expected resnet18, resnet50 or xception)");
  }
  if (out_path.empty()) out_path = name + ".genotype.json";
  Genotype g = encode_handcrafted(*which);
  save_genotype(g, out_path);
  std::printf("wrote %s (%zu cells, %zu share groups)\n", out_path.c_str(), g.cell_count(),
              g.share_groups.size());
  return kExitOk;
}

int cmd_parse(const std::string& ckpt_path, const std::string& method, double threshold,
              const std::string& out_path) {
  auto pm = parse_method_from_name(method);
  if (!pm) throw Error(Errc::config, "unknown parse method '" + method + "'");
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  AlphaTable alpha = alpha_from_checkpoint(ckpt);
  note_darts_on_extended_space(*pm, alpha.space);
  Genotype g = parse_alpha(alpha, *pm, threshold);
  save_genotype(g, out_path);
  std::printf("wrote %s (%zu cells)\n", out_path.c_str(), g.cell_count());
  return kExitOk;
}

int cmd_gendata(const CommonOpts& common, const std::string& out_path) {
  RunConfig cfg = resolve_config(common);
  SyntheticSpec spec;
  spec.count = cfg.data_count;
  spec.classes = cfg.classes;
  spec.channels = cfg.data_channels;
  spec.hw = cfg.data_hw;
  spec.noise = cfg.data_noise;
  spec.seed = mix_seed(cfg.seed, "data");
  Dataset d = synthetic_dataset(spec);
  save_raster(d, out_path);
  std::printf("wrote %s (%d samples, %d classes, %dx%dx%d)\n", out_path.c_str(), d.count,
              d.classes, d.channels, d.height, d.width);
  return kExitOk;
}

int cmd_opscore(const CommonOpts& common, const std::string& out_path,
                const std::string& proxy_path) {
  RunConfig cfg = resolve_config(common);
  Genotype proxy = proxy_path.empty() ? residual_proxy_3cell() : load_genotype(proxy_path);
  Dataset data = cfg.make_dataset();
  OpScoreConfig oc;
  oc.runs = cfg.opscore_runs;
  oc.epochs = cfg.opscore_epochs;
  oc.batch = cfg.batch;
  oc.lr = cfg.weight_lr;
  oc.channels = cfg.opscore_channels;
  oc.seed = cfg.seed;
  oc.threads = cfg.opscore_threads;
  auto scores = op_score_benchmark(proxy, data, oc);
  std::string csv = op_scores_csv(scores);
  if (out_path.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    write_text_file(out_path, csv);
    std::printf("wrote %s\n", out_path.c_str());
  }
  return kExitOk;
}

int cmd_stats(const std::string& dir, const std::string& out_path) {
  auto entries = load_genotype_dir(dir);
  PairwiseMatrix m = matrix_for(entries);
  const size_t n = m.labels.size();
  if (!out_path.empty()) write_text_file(out_path, m.to_csv());

  std::printf("genotypes: %zu (space %s, %zu cells each)\n", n,
              std::string(search_space_name(entries.front().second.space)).c_str(),
              entries.front().second.cell_count());
  if (n < 2) return kExitOk;
  double sum = 0.0, mn = 1e300, mx = -1.0;
  size_t mn_i = 0, mn_j = 1, mx_i = 0, mx_j = 1;
  size_t pairs = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const double d = m.values[i][j];
      sum += d;
      ++pairs;
      if (d < mn) { mn = d; mn_i = i; mn_j = j; }
      if (d > mx) { mx = d; mx_i = i; mx_j = j; }
    }
  }
  std::printf("pairs: %zu  mean=%.6f DU  min=%.6f (%s, %s)  max=%.6f (%s, %s)\n", pairs,
              sum / pairs, mn, m.labels[mn_i].c_str(), m.labels[mn_j].c_str(), mx,
              m.labels[mx_i].c_str(), m.labels[mx_j].c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed differentiable architecture search toolkit"};
  app.require_subcommand(1);
  int rc = kExitOk;

  CommonOpts search_opts;
  auto* search = app.add_subcommand("search", "run an architecture search");
  add_common(search, search_opts);
  search->callback([&] { rc = cmd_search(search_opts); });

  std::string derive_in, derive_out = "derived.genotype.json";
  size_t derive_n = 0;
  auto* derive = app.add_subcommand("derive", "expand a genotype to more cells");
  derive->add_option("--in", derive_in, "source genotype document")->required();
  derive->add_option("--n", derive_n, "desired number of cells")->required();
  derive->add_option("--out", derive_out, "output genotype document");
  derive->callback([&] {
    if (derive_n == 0) throw Error(Errc::config, "--n must be >= 1");
    rc = cmd_derive(derive_in, derive_n, derive_out);
  });

  std::string dist_a, dist_b, dist_dir, dist_out;
  auto* distance = app.add_subcommand("distance", "architecture distance in DU");
  distance->add_option("--a", dist_a, "first genotype document");
  distance->add_option("--b", dist_b, "second genotype document");
  distance->add_option("--dir", dist_dir, "directory of genotype documents (pairwise matrix)");
  distance->add_option("--out", dist_out, "matrix CSV path");
  distance->callback([&] { rc = cmd_distance(dist_a, dist_b, dist_dir, dist_out); });

  std::string enc_name, enc_out;
  auto* encode = app.add_subcommand("encode", "emit a handcrafted-architecture genotype");
  encode->add_option("--name", enc_name, "resnet18 | resnet50 | xception")->required();
  encode->add_option("--out", enc_out, "output genotype document");
  encode->callback([&] { rc = cmd_encode(enc_name, enc_out); });

  std::string parse_ckpt, parse_method = "edge", parse_out = "parsed.genotype.json";
  double parse_threshold = 0.85;
  auto* parse = app.add_subcommand("parse", "discretize a checkpoint's logits");
  parse->add_option("--checkpoint", parse_ckpt, "search checkpoint")->required();
  parse->add_option("--method", parse_method, "darts | edge | sparse");
  parse->add_option("--threshold", parse_threshold, "sigmoid threshold");
  parse->add_option("--out", parse_out, "output genotype document");
  parse->callback([&] { rc = cmd_parse(parse_ckpt, parse_method, parse_threshold, parse_out); });

  CommonOpts gen_opts;
  std::string gen_out = "dataset.bin";
  auto* gendata = app.add_subcommand("gendata", "write a synthetic raster dataset");
  add_common(gendata, gen_opts);
  gendata->add_option("--file", gen_out, "output raster path");
  gendata->callback([&] { rc = cmd_gendata(gen_opts, gen_out); });

  CommonOpts ops_opts;
  std::string ops_out, ops_proxy;
  auto* opscore = app.add_subcommand("opscore", "benchmark operation scores on a proxy");
  add_common(opscore, ops_opts);
  opscore->add_option("--scores", ops_out, "output CSV path");
  opscore->add_option("--proxy", ops_proxy, "proxy genotype document (default: 3-cell residual)");
  opscore->callback([&] { rc = cmd_opscore(ops_opts, ops_out, ops_proxy); });

  std::string stats_dir, stats_out;
  auto* stats = app.add_subcommand("stats", "pairwise distance statistics over genotypes");
  stats->add_option("--dir", stats_dir, "directory of genotype documents")->required();
  stats->add_option("--out", stats_out, "matrix CSV path");
  stats->callback([&] { rc = cmd_stats(stats_dir, stats_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error (" << errc_name(e.code()) << "): " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return rc;
}
