#include "ddarts/encode.hpp"

#include <map>

namespace ddarts {

std::string_view handcrafted_name(HandcraftedName n) {
  switch (n) {
    case HandcraftedName::resnet18: return "resnet18";
    case HandcraftedName::resnet50: return "resnet50";
    case HandcraftedName::xception: return "xception";
  }
  return "?";
}

std::optional<HandcraftedName> handcrafted_from_name(std::string_view name) {
  if (name == "resnet18") return HandcraftedName::resnet18;
  if (name == "resnet50") return HandcraftedName::resnet50;
  if (name == "xception") return HandcraftedName::xception;
  return std::nullopt;
}

namespace {

constexpr int kSteps = 4;  // shared by all encodings so they live in one metric space

void select(CellSpec& cell, int from, int to, OpKind op) {
  int ei = edge_index(cell.steps, from, to);
  cell.edges[static_cast<size_t>(ei)].selected[static_cast<size_t>(op)] = 1;
}

// Basic residual block: two 3x3 convolutions on the principal input with an
// identity shortcut around them.
CellSpec residual_basic_cell(CellKind kind) {
  CellSpec cell = make_cell(kSteps, kind, SearchSpace::So);
  select(cell, 1, 2, OpKind::simple_conv_3x3);
  select(cell, 2, 3, OpKind::simple_conv_3x3);
  select(cell, 1, 3, OpKind::skip_connect);
  return cell;
}

// Bottleneck residual block: a 1x1/3x3/1x1 stack plus the identity shortcut,
// both on the same edge.
CellSpec residual_bottleneck_cell(CellKind kind) {
  CellSpec cell = make_cell(kSteps, kind, SearchSpace::So);
  select(cell, 1, 2, OpKind::bottleneck_1x3x1);
  select(cell, 1, 2, OpKind::skip_connect);
  return cell;
}

Genotype four_cell_residual(const CellSpec& normal_proto, const CellSpec& reduce_proto) {
  Genotype g;
  g.space = SearchSpace::So;
  g.reduction_positions = default_reduction_positions(4);  // {1, 2}
  g.cells = {normal_proto, reduce_proto, reduce_proto, normal_proto};
  g.share_groups = share_groups_by_equality(g.cells);
  validate(g);
  return g;
}

Genotype encode_xception() {
  // 13 cells, 5 distinct specs: the channel-widening entry block, the two
  // remaining entry blocks, the 8 identical middle-flow blocks, the
  // downsampling exit block, and the final separable pair.
  auto entry_first = [] {
    CellSpec c = make_cell(kSteps, CellKind::reduction, SearchSpace::So);
    select(c, 1, 2, OpKind::sep_conv_3x3);
    select(c, 2, 3, OpKind::sep_conv_3x3);
    select(c, 3, 4, OpKind::max_pool_3x3);
    select(c, 1, 4, OpKind::simple_conv_1x1);  // projection shortcut
    return c;
  }();
  auto entry_rest = [] {
    CellSpec c = make_cell(kSteps, CellKind::reduction, SearchSpace::So);
    select(c, 1, 2, OpKind::sep_conv_3x3);
    select(c, 2, 3, OpKind::sep_conv_3x3);
    select(c, 3, 4, OpKind::max_pool_3x3);
    select(c, 1, 4, OpKind::skip_connect);
    return c;
  }();
  auto middle = [] {
    CellSpec c = make_cell(kSteps, CellKind::normal, SearchSpace::So);
    select(c, 1, 2, OpKind::sep_conv_3x3);
    select(c, 2, 3, OpKind::sep_conv_3x3);
    select(c, 3, 4, OpKind::sep_conv_3x3);
    select(c, 1, 4, OpKind::skip_connect);
    return c;
  }();
  auto exit_block = [] {
    CellSpec c = make_cell(kSteps, CellKind::reduction, SearchSpace::So);
    select(c, 1, 2, OpKind::sep_conv_3x3);
    select(c, 2, 3, OpKind::sep_conv_5x5);
    select(c, 3, 4, OpKind::max_pool_3x3);
    select(c, 1, 4, OpKind::skip_connect);
    return c;
  }();
  auto exit_tail = [] {
    CellSpec c = make_cell(kSteps, CellKind::normal, SearchSpace::So);
    select(c, 1, 2, OpKind::sep_conv_3x3);
    select(c, 2, 3, OpKind::sep_conv_3x3);
    return c;
  }();

  Genotype g;
  g.space = SearchSpace::So;
  g.cells.push_back(entry_first);
  g.cells.push_back(entry_rest);
  g.cells.push_back(entry_rest);
  for (int i = 0; i < 8; ++i) g.cells.push_back(middle);
  g.cells.push_back(exit_block);
  g.cells.push_back(exit_tail);
  g.reduction_positions = {0, 1, 2, 11};
  g.share_groups = share_groups_by_equality(g.cells);
  validate(g);
  return g;
}

}  // namespace

Genotype encode_handcrafted(HandcraftedName name) {
  switch (name) {
    case HandcraftedName::resnet18:
      return four_cell_residual(residual_basic_cell(CellKind::normal),
                                residual_basic_cell(CellKind::reduction));
    case HandcraftedName::resnet50:
      return four_cell_residual(residual_bottleneck_cell(CellKind::normal),
                                residual_bottleneck_cell(CellKind::reduction));
    case HandcraftedName::xception:
      return encode_xception();
  }
  throw Error(Errc::invalid_argument, "unknown handcrafted architecture name");
}

Genotype residual_proxy_3cell() {
  Genotype g;
  g.space = SearchSpace::So;
  g.reduction_positions = default_reduction_positions(3);  // {1, 2}
  g.cells = {residual_basic_cell(CellKind::normal), residual_basic_cell(CellKind::reduction),
             residual_basic_cell(CellKind::reduction)};
  g.share_groups = share_groups_by_equality(g.cells);
  validate(g);
  return g;
}

}  // namespace ddarts
