#pragma once

#include <filesystem>
#include <string>

#include "ddarts/search.hpp"

namespace ddarts {

// Flat key=value run configuration. Precedence: command line > config file >
// defaults. The resolved form is written next to every run's artifacts.
struct RunConfig {
  // search
  std::string mode = "ddarts";
  std::string space = "S";
  int cells = 8;
  int steps = 4;
  int channels = 8;
  int epochs = 30;
  int batch = 8;
  uint64_t seed = 1;
  double w01 = 7.0;
  double wabl = 0.5;
  double alpha_lr = 3e-4;
  double weight_lr = 0.025;
  double weight_momentum = 0.9;
  std::string parse_method;  // empty -> "darts" in darts mode, "edge" otherwise
  double threshold = 0.85;
  int pretrain_epochs = 5;
  bool early_stop = true;
  int plateau_window = 5;
  int plateau_start = 10;
  double plateau_tolerance = 1e-3;
  double hot = 3.0;
  double cold = -3.0;
  std::string start_genotype;  // dartopti warm start document

  // dataset
  std::string data = "synthetic";  // or a raster file path
  int data_count = 512;
  int classes = 4;
  int data_channels = 3;
  int data_hw = 16;
  double data_noise = 0.1;

  // operation scoring
  int opscore_runs = 4;
  int opscore_epochs = 10;
  int opscore_threads = 1;
  int opscore_channels = 4;

  // output
  std::string out = "runs";
  std::string run_name;  // empty -> "<mode>-s<seed>"
  bool log_timing = false;

  std::string resolved_run_name() const;
  SearchConfig to_search_config() const;  // throws Errc::config on bad fields
  Dataset make_dataset() const;
  std::string serialize() const;
};

// Parses `key = value` lines ('#' comments); unknown keys are config errors.
RunConfig parse_config_file(const std::filesystem::path& path, RunConfig base = {});
void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace ddarts
