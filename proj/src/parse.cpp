#include "ddarts/parse.hpp"

#include <algorithm>
#include <cmath>

namespace ddarts {

std::string_view parse_method_name(ParseMethod m) {
  switch (m) {
    case ParseMethod::darts: return "darts";
    case ParseMethod::edge: return "edge";
    case ParseMethod::sparse: return "sparse";
  }
  return "?";
}

std::optional<ParseMethod> parse_method_from_name(std::string_view name) {
  if (name == "darts") return ParseMethod::darts;
  if (name == "edge") return ParseMethod::edge;
  if (name == "sparse") return ParseMethod::sparse;
  return std::nullopt;
}

namespace {

size_t argmax_low_tie(const std::vector<double>& v) {
  size_t best = 0;
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

std::vector<double> softmax(const std::vector<double>& v) {
  double m = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - m);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

void parse_edge_sigmoid(const std::vector<double>& logits, double threshold,
                        std::vector<uint8_t>& selected) {
  std::vector<size_t> over;
  for (size_t k = 0; k < logits.size(); ++k) {
    if (sigmoid(logits[k]) > threshold) over.push_back(k);
  }
  if (over.empty()) {
    bool all_equal =
        std::all_of(logits.begin(), logits.end(), [&](double v) { return v == logits.front(); });
    if (!all_equal) selected[argmax_low_tie(logits)] = 1;
    return;
  }
  if (over.size() > 2) {
    // Top 2 by value; stable ordering keeps the lower ordinal on ties.
    std::stable_sort(over.begin(), over.end(),
                     [&](size_t a, size_t b) { return logits[a] > logits[b]; });
    over.resize(2);
  }
  for (size_t k : over) selected[k] = 1;
}

}  // namespace

Genotype parse_alpha(const AlphaTable& alpha, ParseMethod method, double threshold) {
  validate(alpha);
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(Errc::invalid_argument, "parse threshold must lie strictly in (0,1)");
  }

  Genotype g;
  g.space = alpha.space;
  g.reduction_positions = alpha.reduction_positions;
  g.share_groups = alpha.share_groups;

  const auto edges = edge_list(alpha.steps);
  const size_t K = static_cast<size_t>(op_count(alpha.space));

  // Selections are computed once per shared block, then stamped on members.
  std::vector<std::vector<std::vector<uint8_t>>> block_sel(alpha.group_count());
  for (size_t gi = 0; gi < alpha.group_count(); ++gi) {
    const auto& block = alpha.logits[gi];
    auto& sel = block_sel[gi];
    sel.assign(edges.size(), std::vector<uint8_t>(K, 0));

    if (method == ParseMethod::sparse) {
      for (size_t ei = 0; ei < edges.size(); ++ei) sel[ei][argmax_low_tie(block[ei])] = 1;
    } else if (method == ParseMethod::edge) {
      for (size_t ei = 0; ei < edges.size(); ++ei) {
        parse_edge_sigmoid(block[ei], threshold, sel[ei]);
      }
    } else {
      // darts: rank incoming edges per node by their best softmax weight.
      for (int node = 2; node < alpha.steps + 2; ++node) {
        std::vector<std::pair<size_t, double>> incoming;  // (edge index, strength)
        for (int from = 0; from < node; ++from) {
          size_t ei = static_cast<size_t>(edge_index(alpha.steps, from, node));
          auto w = softmax(block[ei]);
          incoming.emplace_back(ei, w[argmax_low_tie(w)]);
        }
        std::stable_sort(incoming.begin(), incoming.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        size_t keep = std::min<size_t>(2, incoming.size());
        for (size_t r = 0; r < keep; ++r) {
          size_t ei = incoming[r].first;
          auto w = softmax(block[ei]);
          sel[ei][argmax_low_tie(w)] = 1;
        }
      }
    }
  }

  g.cells.resize(alpha.n_cells);
  for (size_t ci = 0; ci < alpha.n_cells; ++ci) {
    CellKind kind = std::count(alpha.reduction_positions.begin(), alpha.reduction_positions.end(),
                               ci) > 0
                        ? CellKind::reduction
                        : CellKind::normal;
    CellSpec cell = make_cell(alpha.steps, kind, alpha.space);
    const auto& sel = block_sel[alpha.cell_group[ci]];
    for (size_t ei = 0; ei < cell.edges.size(); ++ei) cell.edges[ei].selected = sel[ei];
    g.cells[ci] = std::move(cell);
  }
  validate(g);
  return g;
}

}  // namespace ddarts
