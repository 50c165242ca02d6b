#include "ddarts/serialize.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace ddarts {

namespace {

using ordered_json = nlohmann::ordered_json;

const nlohmann::json& require(const nlohmann::json& j, const char* key, const std::string& loc) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw Error(Errc::document_malformed, std::string("missing field '") + key + "'", loc);
  }
  return *it;
}

int require_int(const nlohmann::json& j, const char* key, const std::string& loc) {
  const auto& v = require(j, key, loc);
  if (!v.is_number_integer()) {
    throw Error(Errc::document_malformed, std::string("field '") + key + "' must be an integer",
                loc);
  }
  return v.get<int>();
}

}  // namespace

std::string serialize(const Genotype& g) {
  validate(g);
  ordered_json doc;
  doc["search_space"] = std::string(search_space_name(g.space));
  doc["steps"] = g.steps();
  doc["reduction_positions"] = g.reduction_positions;
  doc["share_groups"] = g.share_groups;
  ordered_json cells = ordered_json::array();
  for (const CellSpec& cell : g.cells) {
    ordered_json jc;
    jc["kind"] = std::string(cell_kind_name(cell.kind));
    ordered_json edges = ordered_json::array();
    for (const EdgeSpec& e : cell.edges) {
      ordered_json je;
      je["from"] = e.from_node;
      je["to"] = e.to_node;
      ordered_json ops = ordered_json::array();
      for (size_t k = 0; k < e.selected.size(); ++k) {
        if (e.selected[k]) ops.push_back(std::string(op_name(static_cast<OpKind>(k))));
      }
      je["ops"] = std::move(ops);
      edges.push_back(std::move(je));
    }
    jc["edges"] = std::move(edges);
    cells.push_back(std::move(jc));
  }
  doc["cells"] = std::move(cells);
  return doc.dump(2) + "\n";
}

Genotype deserialize(const std::string& document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::document_malformed, std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::document_malformed, "top level must be an object");

  Genotype g;
  const auto& space = require(doc, "search_space", "top level");
  if (!space.is_string()) {
    throw Error(Errc::document_malformed, "'search_space' must be \"S\" or \"So\"");
  }
  auto sp = search_space_from_name(space.get<std::string>());
  if (!sp) {
    throw Error(Errc::document_malformed, "'search_space' must be \"S\" or \"So\"");
  }
  g.space = *sp;
  const int steps = require_int(doc, "steps", "top level");
  if (steps < 1) throw Error(Errc::document_malformed, "'steps' must be >= 1");

  const auto& red = require(doc, "reduction_positions", "top level");
  if (!red.is_array()) throw Error(Errc::document_malformed, "'reduction_positions' must be a list");
  for (const auto& p : red) {
    if (!p.is_number_integer() || p.get<long long>() < 0) {
      throw Error(Errc::document_malformed, "reduction positions must be non-negative integers");
    }
    g.reduction_positions.push_back(p.get<size_t>());
  }

  const auto& groups = require(doc, "share_groups", "top level");
  if (!groups.is_array()) throw Error(Errc::document_malformed, "'share_groups' must be a list");
  for (const auto& grp : groups) {
    if (!grp.is_array()) {
      throw Error(Errc::document_malformed, "each share group must be a list of cell indices");
    }
    std::vector<size_t> members;
    for (const auto& m : grp) {
      if (!m.is_number_integer() || m.get<long long>() < 0) {
        throw Error(Errc::document_malformed, "share group members must be non-negative integers");
      }
      members.push_back(m.get<size_t>());
    }
    g.share_groups.push_back(std::move(members));
  }

  const auto& cells = require(doc, "cells", "top level");
  if (!cells.is_array() || cells.empty()) {
    throw Error(Errc::document_malformed, "'cells' must be a non-empty list");
  }
  const size_t K = static_cast<size_t>(op_count(g.space));
  size_t ci = 0;
  for (const auto& jc : cells) {
    std::string loc = "cell " + std::to_string(ci);
    if (!jc.is_object()) throw Error(Errc::document_malformed, "cell must be an object", loc);
    const auto& kind = require(jc, "kind", loc);
    CellKind ck;
    if (kind == "normal") {
      ck = CellKind::normal;
    } else if (kind == "reduction") {
      ck = CellKind::reduction;
    } else {
      throw Error(Errc::document_malformed, "cell kind must be \"normal\" or \"reduction\"", loc);
    }
    CellSpec cell = make_cell(steps, ck, g.space);
    const auto& edges = require(jc, "edges", loc);
    if (!edges.is_array()) throw Error(Errc::document_malformed, "'edges' must be a list", loc);
    std::vector<int> filled(cell.edges.size(), 0);
    for (const auto& je : edges) {
      if (!je.is_object()) throw Error(Errc::document_malformed, "edge must be an object", loc);
      int from = require_int(je, "from", loc);
      int to = require_int(je, "to", loc);
      std::string eloc = loc + " edge (" + std::to_string(from) + "," + std::to_string(to) + ")";
      int ei = edge_index(steps, from, to);
      if (ei < 0) {
        throw Error(Errc::invariant_violation, "edge does not belong to the cell DAG", eloc);
      }
      if (filled[static_cast<size_t>(ei)]++) {
        throw Error(Errc::document_malformed, "duplicate edge", eloc);
      }
      const auto& ops = require(je, "ops", eloc);
      if (!ops.is_array()) throw Error(Errc::document_malformed, "'ops' must be a list", eloc);
      EdgeSpec& edge = cell.edges[static_cast<size_t>(ei)];
      for (const auto& name : ops) {
        if (!name.is_string()) {
          throw Error(Errc::document_malformed, "op names must be strings", eloc);
        }
        auto op = op_from_name(name.get<std::string>());
        if (!op) {
          throw Error(Errc::unknown_op, "unknown operation '" + name.get<std::string>() + "'",
                      eloc);
        }
        size_t k = static_cast<size_t>(*op);
        if (k >= K) {
          throw Error(Errc::invariant_violation,
                      "operation '" + name.get<std::string>() + "' is outside search space " +
                          std::string(search_space_name(g.space)),
                      eloc);
        }
        if (edge.selected[k]) {
          throw Error(Errc::document_malformed, "operation listed twice", eloc);
        }
        edge.selected[k] = 1;
      }
    }
    for (size_t ei = 0; ei < filled.size(); ++ei) {
      if (!filled[ei]) {
        throw Error(Errc::invariant_violation,
                    "edge list must cover every admissible (from,to) pair", loc);
      }
    }
    g.cells.push_back(std::move(cell));
    ++ci;
  }

  validate(g);
  return g;
}

void save_genotype(const Genotype& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open for writing: " + path.string());
  out << serialize(g);
  if (!out) throw Error(Errc::io, "write failed: " + path.string());
}

Genotype load_genotype(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open for reading: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(text);
}

}  // namespace ddarts
