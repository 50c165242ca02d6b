#include "ddarts/supernet.hpp"

#include <algorithm>
#include <cstring>

namespace ddarts {

namespace {

std::vector<std::vector<size_t>> singleton_groups(size_t n) {
  std::vector<std::vector<size_t>> g;
  for (size_t i = 0; i < n; ++i) g.push_back({i});
  return g;
}

}  // namespace

Tensor Supernet::Preprocess::forward(const Tensor& x, bool update_stats) {
  return reduce ? fr.forward(x, update_stats) : conv.forward(x, update_stats);
}

Supernet::Supernet(const SupernetConfig& cfg) : cfg_(cfg) {
  if (cfg_.cells < 1 || cfg_.steps < 1 || cfg_.channels < 1 || cfg_.classes < 2) {
    throw Error(Errc::config, "supernet needs cells >= 1, steps >= 1, channels >= 1, classes >= 2");
  }
  if (cfg_.reduction_positions.empty()) {
    cfg_.reduction_positions = default_reduction_positions(static_cast<size_t>(cfg_.cells));
  }
  if (cfg_.share_groups.empty()) {
    cfg_.share_groups = singleton_groups(static_cast<size_t>(cfg_.cells));
  }
  build(cfg_.seed, nullptr);
}

Supernet::Supernet(const Genotype& genotype, int channels, int in_channels, int classes,
                   uint64_t seed) {
  validate(genotype);
  cfg_.space = genotype.space;
  cfg_.cells = static_cast<int>(genotype.cell_count());
  cfg_.steps = genotype.steps();
  cfg_.channels = channels;
  cfg_.in_channels = in_channels;
  cfg_.classes = classes;
  cfg_.reduction_positions = genotype.reduction_positions;
  cfg_.share_groups = genotype.share_groups;
  cfg_.mix = MixMode::discrete;
  cfg_.seed = seed;
  build(seed, &genotype);
}

void Supernet::build(uint64_t seed, const Genotype* genotype) {
  const int C = cfg_.channels;
  const int wide = cfg_.steps * C;  // channel width carried between cells
  const int K = op_count(cfg_.space);
  Rng rng(mix_seed(seed, "net"));

  cell_group_.assign(static_cast<size_t>(cfg_.cells), 0);
  for (size_t gi = 0; gi < cfg_.share_groups.size(); ++gi) {
    for (size_t member : cfg_.share_groups[gi]) {
      if (member >= cell_group_.size()) {
        throw Error(Errc::config, "share group member out of range");
      }
      cell_group_[member] = gi;
    }
  }

  Conv2dSpec stem_spec;
  stem_spec.pad_h = stem_spec.pad_w = 1;
  stem_ = ConvUnit::create(cfg_.in_channels, wide, 3, 3, stem_spec, rng);

  const auto edges = edge_list(cfg_.steps);
  auto is_reduction = [&](size_t k) {
    return std::count(cfg_.reduction_positions.begin(), cfg_.reduction_positions.end(), k) > 0;
  };

  for (size_t k = 0; k < static_cast<size_t>(cfg_.cells); ++k) {
    Cell cell;
    cell.kind = is_reduction(k) ? CellKind::reduction : CellKind::normal;
    // The first preprocess must also halve when the previous cell reduced,
    // because s0 still carries the unreduced spatial size.
    const bool prev_reduced = k >= 1 && is_reduction(k - 1);
    cell.pre0.reduce = prev_reduced;
    if (prev_reduced) {
      cell.pre0.fr = FactorizedReduce::create(wide, C, rng);
    } else {
      cell.pre0.conv = ConvUnit::create(wide, C, 1, 1, {}, rng);
    }
    cell.pre1.reduce = false;
    cell.pre1.conv = ConvUnit::create(wide, C, 1, 1, {}, rng);

    for (size_t ei = 0; ei < edges.size(); ++ei) {
      Edge edge;
      const int stride = cell.kind == CellKind::reduction && edges[ei].first < 2 ? 2 : 1;
      if (genotype) {
        const EdgeSpec& spec = genotype->cells[k].edges[ei];
        for (int op = 0; op < K; ++op) {
          if (spec.selected[static_cast<size_t>(op)]) {
            edge.op_index.push_back(op);
            edge.ops.push_back(PrimitiveOp::create(static_cast<OpKind>(op), C, stride, rng));
          }
        }
      } else {
        for (int op = 0; op < K; ++op) {
          edge.op_index.push_back(op);
          edge.ops.push_back(PrimitiveOp::create(static_cast<OpKind>(op), C, stride, rng));
        }
      }
      cell.edges.push_back(std::move(edge));
    }
    cells_.push_back(std::move(cell));
  }

  // Zero-initialized classifier: an untrained network predicts class 0.
  classifier_w_ = Tensor::zeros({wide, cfg_.classes}, /*requires_grad=*/true);
  classifier_b_ = Tensor::zeros({cfg_.classes}, /*requires_grad=*/true);

  if (cfg_.mix != MixMode::discrete) {
    Rng arng(mix_seed(seed, "alpha"));
    for (size_t gi = 0; gi < cfg_.share_groups.size(); ++gi) {
      std::vector<Tensor> block;
      for (size_t ei = 0; ei < edges.size(); ++ei) {
        Tensor t = Tensor::zeros({K}, /*requires_grad=*/true);
        for (double& v : t.values()) v = 1e-3 * arng.normal();
        block.push_back(std::move(t));
      }
      alpha_groups_.push_back(std::move(block));
    }
  }

  visit_params([this](const std::string& name, Tensor& t) {
    if (name.rfind("alpha.", 0) != 0) weights_.push_back(t);
  });
}

Tensor Supernet::cell_forward(size_t k, const Tensor& s0, const Tensor& s1, bool update_stats) {
  Cell& cell = cells_[k];
  Tensor p0 = cell.pre0.forward(s0, update_stats);
  Tensor p1 = cell.pre1.forward(s1, update_stats);
  const bool reduce = cell.kind == CellKind::reduction;
  if (reduce && (p1.shape()[2] % 2 != 0 || p1.shape()[3] % 2 != 0)) {
    throw Error(Errc::shape_mismatch,
                "reduction cell requires even spatial extents; pick an input size divisible by "
                "2^(number of reductions)");
  }
  std::vector<Tensor> nodes = {p0, p1};
  for (int j = 2; j < cfg_.steps + 2; ++j) {
    Tensor acc;
    for (int i = 0; i < j; ++i) {
      const size_t ei = static_cast<size_t>(edge_index(cfg_.steps, i, j));
      Edge& edge = cell.edges[ei];
      Tensor out;
      if (cfg_.mix == MixMode::discrete) {
        if (edge.ops.empty()) continue;  // empty selection contributes nothing
        for (PrimitiveOp& op : edge.ops) {
          Tensor o = op.forward(nodes[static_cast<size_t>(i)], update_stats);
          out = out.defined() ? add(out, o) : o;
        }
      } else {
        Tensor& alpha = alpha_groups_[cell_group_[k]][ei];
        out = cfg_.mix == MixMode::sigmoid
                  ? mixed_edge(nodes[static_cast<size_t>(i)], edge.ops, alpha, update_stats)
                  : mixed_edge_softmax(nodes[static_cast<size_t>(i)], edge.ops, alpha,
                                       update_stats);
      }
      acc = acc.defined() ? add(acc, out) : out;
    }
    if (!acc.defined()) {
      const int h = reduce ? p1.shape()[2] / 2 : p1.shape()[2];
      const int w = reduce ? p1.shape()[3] / 2 : p1.shape()[3];
      acc = Tensor::zeros({p1.shape()[0], cfg_.channels, h, w});
    }
    nodes.push_back(std::move(acc));
  }
  return concat_channels({nodes.begin() + 2, nodes.end()});
}

Tensor Supernet::forward(const Tensor& images, bool update_stats, int bypass_cell) {
  if (images.shape().size() != 4 || images.shape()[1] != cfg_.in_channels) {
    throw Error(Errc::shape_mismatch, "input must be (B, in_channels, H, W)");
  }
  Tensor stem_out = stem_.forward(images, update_stats);
  Tensor s0 = stem_out, s1 = stem_out;
  for (size_t k = 0; k < cells_.size(); ++k) {
    Tensor out;
    if (static_cast<int>(k) == bypass_cell) {
      // Principal-input bypass; parameter free.
      out = cells_[k].kind == CellKind::reduction ? avg_pool2d(s1, 2, 2, 0) : s1;
    } else {
      out = cell_forward(k, s0, s1, update_stats);
    }
    s0 = s1;
    s1 = out;
  }
  Tensor pooled = global_avg_pool(s1);
  return linear(pooled, classifier_w_, classifier_b_);
}

AlphaTable Supernet::alpha_snapshot() const {
  if (cfg_.mix == MixMode::discrete) {
    throw Error(Errc::invalid_argument, "discrete networks carry no alpha table");
  }
  AlphaTable a;
  a.space = cfg_.space;
  a.steps = cfg_.steps;
  a.n_cells = static_cast<size_t>(cfg_.cells);
  a.reduction_positions = cfg_.reduction_positions;
  a.share_groups = cfg_.share_groups;
  a.cell_group = cell_group_;
  for (const auto& block : alpha_groups_) {
    std::vector<std::vector<double>> rows;
    for (const Tensor& t : block) rows.push_back(t.values());
    a.logits.push_back(std::move(rows));
  }
  return a;
}

void Supernet::load_alpha(const AlphaTable& table) {
  validate(table);
  if (table.space != cfg_.space || table.steps != cfg_.steps ||
      table.n_cells != static_cast<size_t>(cfg_.cells) ||
      table.logits.size() != alpha_groups_.size()) {
    throw Error(Errc::shape_mismatch, "alpha table does not match the supernet layout");
  }
  for (size_t gi = 0; gi < alpha_groups_.size(); ++gi) {
    for (size_t ei = 0; ei < alpha_groups_[gi].size(); ++ei) {
      alpha_groups_[gi][ei].values() = table.logits[gi][ei];
    }
  }
}

void Supernet::visit_params(const ParamVisitor& v) {
  stem_.visit_params("stem", v);
  for (size_t k = 0; k < cells_.size(); ++k) {
    const std::string base = "cell" + std::to_string(k);
    if (cells_[k].pre0.reduce) {
      cells_[k].pre0.fr.visit_params(base + ".pre0", v);
    } else {
      cells_[k].pre0.conv.visit_params(base + ".pre0", v);
    }
    cells_[k].pre1.conv.visit_params(base + ".pre1", v);
    for (size_t ei = 0; ei < cells_[k].edges.size(); ++ei) {
      Edge& e = cells_[k].edges[ei];
      for (size_t oi = 0; oi < e.ops.size(); ++oi) {
        e.ops[oi].visit_params(
            base + ".e" + std::to_string(ei) + ".op" + std::to_string(e.op_index[oi]), v);
      }
    }
  }
  v("classifier.w", classifier_w_);
  v("classifier.b", classifier_b_);
  for (size_t gi = 0; gi < alpha_groups_.size(); ++gi) {
    for (size_t ei = 0; ei < alpha_groups_[gi].size(); ++ei) {
      v("alpha.g" + std::to_string(gi) + ".e" + std::to_string(ei), alpha_groups_[gi][ei]);
    }
  }
}

void Supernet::visit_buffers(const BufferVisitor& v) {
  stem_.visit_buffers("stem", v);
  for (size_t k = 0; k < cells_.size(); ++k) {
    const std::string base = "cell" + std::to_string(k);
    if (cells_[k].pre0.reduce) {
      cells_[k].pre0.fr.visit_buffers(base + ".pre0", v);
    } else {
      cells_[k].pre0.conv.visit_buffers(base + ".pre0", v);
    }
    cells_[k].pre1.conv.visit_buffers(base + ".pre1", v);
    for (size_t ei = 0; ei < cells_[k].edges.size(); ++ei) {
      Edge& e = cells_[k].edges[ei];
      for (size_t oi = 0; oi < e.ops.size(); ++oi) {
        e.ops[oi].visit_buffers(
            base + ".e" + std::to_string(ei) + ".op" + std::to_string(e.op_index[oi]), v);
      }
    }
  }
}

uint64_t Supernet::state_hash() const {
  uint64_t h = 1469598103934665603ULL;
  auto fold = [&h](const double* data, size_t n) {
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  auto* self = const_cast<Supernet*>(this);
  self->visit_params([&](const std::string&, Tensor& t) { fold(t.values().data(), t.numel()); });
  self->visit_buffers(
      [&](const std::string&, std::vector<double>& b) { fold(b.data(), b.size()); });
  return h;
}

}  // namespace ddarts
