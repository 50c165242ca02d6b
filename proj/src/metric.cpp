#include "ddarts/metric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "ddarts/error.hpp"

namespace ddarts {

double hamming(const std::vector<uint8_t>& u, const std::vector<uint8_t>& v,
               const std::vector<double>& w) {
  if (u.size() != v.size() || u.size() != w.size()) {
    throw Error(Errc::shape_mismatch, "hamming requires |U| = |V| = |W|");
  }
  if (u.empty()) throw Error(Errc::invalid_argument, "hamming requires non-empty vectors");
  double sum = 0.0;
  for (size_t k = 0; k < u.size(); ++k) {
    if ((u[k] != 0) != (v[k] != 0)) sum += w[k];
  }
  return sum / static_cast<double>(u.size());
}

namespace {

void check_cell_pair(const CellSpec& x, const CellSpec& y) {
  if (x.steps != y.steps) {
    throw Error(Errc::shape_mismatch, "cells must share the same step count");
  }
}

}  // namespace

double directed_hausdorff(const CellSpec& x, const CellSpec& y, const std::vector<double>& w) {
  check_cell_pair(x, y);
  double sup = 0.0;
  for (const EdgeSpec& ex : x.edges) {
    double inf = std::numeric_limits<double>::infinity();
    for (const EdgeSpec& ey : y.edges) {
      inf = std::min(inf, hamming(ex.selected, ey.selected, w));
    }
    sup = std::max(sup, inf);
  }
  return sup;
}

double hausdorff_cell(const CellSpec& x, const CellSpec& y, const std::vector<double>& w) {
  return std::max(directed_hausdorff(x, y, w), directed_hausdorff(y, x, w));
}

double metric_m(const Genotype& a, const Genotype& b, const std::vector<double>& w) {
  if (a.cell_count() != b.cell_count()) {
    throw Error(Errc::shape_mismatch, "architectures must have equal cell counts");
  }
  if (a.steps() != b.steps()) {
    throw Error(Errc::shape_mismatch, "architectures must have equal step counts");
  }
  if (a.space != b.space) {
    throw Error(Errc::shape_mismatch, "architectures must live in the same search space");
  }
  double sum = 0.0;
  for (size_t i = 0; i < a.cells.size(); ++i) {
    double fwd = directed_hausdorff(a.cells[i], b.cells[i], w);
    double bwd = directed_hausdorff(b.cells[i], a.cells[i], w);
    sum += std::max(fwd, bwd);
  }
  return sum / static_cast<double>(a.cells.size());
}

void DistanceTrace::append(int epoch, double value) {
  if (!epochs.empty() && epoch <= epochs.back()) {
    throw Error(Errc::invalid_argument, "trace epochs must be strictly increasing");
  }
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw Error(Errc::invalid_argument, "trace values must be finite and >= 0");
  }
  epochs.push_back(epoch);
  values.push_back(value);
}

std::string DistanceTrace::to_csv() const {
  std::string out = "epoch,distance_du\n";
  char buf[64];
  for (size_t i = 0; i < epochs.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d,%.9f\n", epochs[i], values[i]);
    out += buf;
  }
  return out;
}

std::optional<int> plateau_stop(const DistanceTrace& trace, int window, int start_epoch,
                                double tolerance) {
  if (window < 1) throw Error(Errc::invalid_argument, "plateau window must be >= 1");
  const size_t n = trace.size();
  for (size_t i = 0; i + 1 <= n; ++i) {
    if (i + 1 < static_cast<size_t>(window)) continue;
    size_t lo = i + 1 - static_cast<size_t>(window);
    // Only epochs from start_epoch onward count toward stability, so the
    // earliest admissible stop is start_epoch + window - 1.
    if (trace.epochs[lo] < start_epoch) continue;
    if (trace.epochs[i] - trace.epochs[lo] != window - 1) continue;  // window must be gapless
    double mn = trace.values[lo], mx = trace.values[lo];
    for (size_t j = lo; j <= i; ++j) {
      mn = std::min(mn, trace.values[j]);
      mx = std::max(mx, trace.values[j]);
    }
    if (mx - mn <= tolerance) return trace.epochs[i];
  }
  return std::nullopt;
}

PairwiseMatrix pairwise_matrix(const std::vector<Genotype>& genotypes,
                               const std::vector<std::string>& labels,
                               const std::vector<double>& w) {
  if (genotypes.empty()) {
    throw Error(Errc::invalid_argument, "pairwise_matrix requires at least one genotype");
  }
  if (labels.size() != genotypes.size()) {
    throw Error(Errc::invalid_argument, "one label per genotype required");
  }
  PairwiseMatrix m;
  m.labels = labels;
  const size_t n = genotypes.size();
  m.values.assign(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      double d = metric_m(genotypes[i], genotypes[j], w);
      m.values[i][j] = d;
      m.values[j][i] = d;
    }
  }
  return m;
}

std::string PairwiseMatrix::to_csv() const {
  std::string out = "label";
  for (const auto& l : labels) out += "," + l;
  out += "\n";
  char buf[64];
  for (size_t i = 0; i < labels.size(); ++i) {
    out += labels[i];
    for (size_t j = 0; j < labels.size(); ++j) {
      std::snprintf(buf, sizeof(buf), ",%.9f", values[i][j]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open for writing: " + path.string());
  out << text;
  if (!out) throw Error(Errc::io, "write failed: " + path.string());
}

}  // namespace ddarts
