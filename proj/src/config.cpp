#include "ddarts/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ddarts {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw Error(Errc::config, "'" + key + "' expects an integer, got '" + v + "'");
  }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    unsigned long long out = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw Error(Errc::config, "'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw Error(Errc::config, "'" + key + "' expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(Errc::config, "'" + key + "' expects a boolean, got '" + v + "'");
}

}  // namespace

void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "mode") cfg.mode = value;
  else if (key == "space") cfg.space = value;
  else if (key == "cells") cfg.cells = to_int(key, value);
  else if (key == "steps") cfg.steps = to_int(key, value);
  else if (key == "channels") cfg.channels = to_int(key, value);
  else if (key == "epochs") cfg.epochs = to_int(key, value);
  else if (key == "batch") cfg.batch = to_int(key, value);
  else if (key == "seed") cfg.seed = to_u64(key, value);
  else if (key == "w01") cfg.w01 = to_double(key, value);
  else if (key == "wabl") cfg.wabl = to_double(key, value);
  else if (key == "alpha_lr") cfg.alpha_lr = to_double(key, value);
  else if (key == "weight_lr") cfg.weight_lr = to_double(key, value);
  else if (key == "weight_momentum") cfg.weight_momentum = to_double(key, value);
  else if (key == "parse_method") cfg.parse_method = value;
  else if (key == "threshold") cfg.threshold = to_double(key, value);
  else if (key == "pretrain_epochs") cfg.pretrain_epochs = to_int(key, value);
  else if (key == "early_stop") cfg.early_stop = to_bool(key, value);
  else if (key == "plateau_window") cfg.plateau_window = to_int(key, value);
  else if (key == "plateau_start") cfg.plateau_start = to_int(key, value);
  else if (key == "plateau_tolerance") cfg.plateau_tolerance = to_double(key, value);
  else if (key == "hot") cfg.hot = to_double(key, value);
  else if (key == "cold") cfg.cold = to_double(key, value);
  else if (key == "start_genotype") cfg.start_genotype = value;
  else if (key == "data") cfg.data = value;
  else if (key == "data_count") cfg.data_count = to_int(key, value);
  else if (key == "classes") cfg.classes = to_int(key, value);
  else if (key == "data_channels") cfg.data_channels = to_int(key, value);
  else if (key == "data_hw") cfg.data_hw = to_int(key, value);
  else if (key == "data_noise") cfg.data_noise = to_double(key, value);
  else if (key == "opscore_runs") cfg.opscore_runs = to_int(key, value);
  else if (key == "opscore_epochs") cfg.opscore_epochs = to_int(key, value);
  else if (key == "opscore_threads") cfg.opscore_threads = to_int(key, value);
  else if (key == "opscore_channels") cfg.opscore_channels = to_int(key, value);
  else if (key == "out") cfg.out = value;
  else if (key == "run_name") cfg.run_name = value;
  else if (key == "log_timing") cfg.log_timing = to_bool(key, value);
  else throw Error(Errc::config, "unknown configuration key '" + key + "'");
}

RunConfig parse_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::config, "cannot open config file: " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::config, "expected 'key = value'",
                  path.string() + ":" + std::to_string(lineno));
    }
    apply_key_value(base, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  return base;
}

std::string RunConfig::resolved_run_name() const {
  if (!run_name.empty()) return run_name;
  return mode + "-s" + std::to_string(seed);
}

SearchConfig RunConfig::to_search_config() const {
  SearchConfig sc;
  auto m = search_mode_from_name(mode);
  if (!m) throw Error(Errc::config, "unknown mode '" + mode + "'");
  sc.mode = *m;
  auto sp = search_space_from_name(space);
  if (!sp) throw Error(Errc::config, "unknown search space '" + space + "' (use S or So)");
  sc.space = *sp;
  if (cells < 1 || steps < 1 || channels < 1 || epochs < 1 || batch < 1) {
    throw Error(Errc::config, "cells, steps, channels, epochs and batch must be positive");
  }
  sc.cells = cells;
  sc.steps = steps;
  sc.channels = channels;
  sc.epochs = epochs;
  sc.batch = batch;
  sc.seed = seed;
  if (w01 < 0.0 || wabl < 0.0) throw Error(Errc::config, "loss weights must be >= 0");
  sc.loss.w01 = w01;
  sc.loss.w_abl = wabl;
  sc.alpha_lr = alpha_lr;
  sc.weight_lr = weight_lr;
  sc.weight_momentum = weight_momentum;
  std::string pm = parse_method.empty() ? (sc.mode == SearchMode::darts ? "darts" : "edge")
                                        : parse_method;
  auto p = parse_method_from_name(pm);
  if (!p) throw Error(Errc::config, "unknown parse method '" + pm + "'");
  sc.parse = *p;
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(Errc::config, "threshold must lie strictly in (0,1)");
  }
  sc.threshold = threshold;
  if (pretrain_epochs < 0) throw Error(Errc::config, "pretrain_epochs must be >= 0");
  sc.pretrain_epochs = pretrain_epochs;
  sc.early_stop = early_stop;
  if (plateau_window < 1) throw Error(Errc::config, "plateau_window must be >= 1");
  sc.plateau_window = plateau_window;
  sc.plateau_start = plateau_start;
  sc.plateau_tolerance = plateau_tolerance;
  if (!(hot > cold)) throw Error(Errc::config, "hot must exceed cold");
  sc.hot = hot;
  sc.cold = cold;
  return sc;
}

Dataset RunConfig::make_dataset() const {
  if (data == "synthetic") {
    SyntheticSpec spec;
    spec.count = data_count;
    spec.classes = classes;
    spec.channels = data_channels;
    spec.hw = data_hw;
    spec.noise = data_noise;
    spec.seed = mix_seed(seed, "data");
    return synthetic_dataset(spec);
  }
  return load_raster(data);
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
  };
  os << "mode = " << mode << "\n";
  os << "space = " << space << "\n";
  os << "cells = " << cells << "\n";
  os << "steps = " << steps << "\n";
  os << "channels = " << channels << "\n";
  os << "epochs = " << epochs << "\n";
  os << "batch = " << batch << "\n";
  os << "seed = " << seed << "\n";
  os << "w01 = " << num(w01) << "\n";
  os << "wabl = " << num(wabl) << "\n";
  os << "alpha_lr = " << num(alpha_lr) << "\n";
  os << "weight_lr = " << num(weight_lr) << "\n";
  os << "weight_momentum = " << num(weight_momentum) << "\n";
  os << "parse_method = "
     << (parse_method.empty() ? (mode == "darts" ? "darts" : "edge") : parse_method) << "\n";
  os << "threshold = " << num(threshold) << "\n";
  os << "pretrain_epochs = " << pretrain_epochs << "\n";
  os << "early_stop = " << (early_stop ? "true" : "false") << "\n";
  os << "plateau_window = " << plateau_window << "\n";
  os << "plateau_start = " << plateau_start << "\n";
  os << "plateau_tolerance = " << num(plateau_tolerance) << "\n";
  os << "hot = " << num(hot) << "\n";
  os << "cold = " << num(cold) << "\n";
  if (!start_genotype.empty()) os << "start_genotype = " << start_genotype << "\n";
  os << "data = " << data << "\n";
  os << "data_count = " << data_count << "\n";
  os << "classes = " << classes << "\n";
  os << "data_channels = " << data_channels << "\n";
  os << "data_hw = " << data_hw << "\n";
  os << "data_noise = " << num(data_noise) << "\n";
  os << "opscore_runs = " << opscore_runs << "\n";
  os << "opscore_epochs = " << opscore_epochs << "\n";
  os << "opscore_threads = " << opscore_threads << "\n";
  os << "opscore_channels = " << opscore_channels << "\n";
  os << "out = " << out << "\n";
  os << "run_name = " << resolved_run_name() << "\n";
  os << "log_timing = " << (log_timing ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace ddarts
