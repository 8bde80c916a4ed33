#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "error.hpp"
#include "mesh.hpp"

namespace coexbal {

// Canonical partition-mesh text format:
//   pmesh 1 <n_elements>
//   <id> <tet|pyr|pri|hex> <cx> <cy> <cz> <weight>     (n_elements lines)
// Reals use the shortest round-trip decimal, so write/read is the identity.
inline void write_mesh(std::ostream& os, const Mesh& mesh) {
  os << "pmesh 1 " << mesh.size() << '\n';
  for (const auto& e : mesh.elements()) {
    os << e.id << ' ' << kind_tag(e.kind);
    for (double c : e.centroid) os << ' ' << detail::format_double(c);
    os << ' ' << detail::format_double(e.weight) << '\n';
  }
}

inline Mesh read_mesh(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("missing pmesh header", 1);
  const auto header = detail::split_ws(line);
  std::size_t n = 0;
  if (header.size() != 3 || header[0] != "pmesh" || header[1] != "1" || !detail::parse_number(header[2], n))
    throw ParseError("bad pmesh header", 1);

  std::vector<PartitionElement> elements;
  elements.reserve(n);
  std::unordered_set<ElementId> seen;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lineno = i + 2;
    if (!std::getline(is, line)) throw ParseError("truncated file: expected " + std::to_string(n) + " elements", lineno);
    const auto tok = detail::split_ws(line);
    if (tok.size() != 6) throw ParseError("expected 6 fields", lineno);
    PartitionElement e;
    if (!detail::parse_number(tok[0], e.id)) throw ParseError("bad element id", lineno);
    auto kind = kind_from_tag(tok[1]);
    if (!kind) throw ParseError("unknown kind tag '" + std::string(tok[1]) + "'", lineno);
    e.kind = *kind;
    for (int a = 0; a < 3; ++a)
      if (!detail::parse_number(tok[2 + a], e.centroid[a]) || !std::isfinite(e.centroid[a]))
        throw ParseError("bad centroid coordinate", lineno);
    if (!detail::parse_number(tok[5], e.weight) || !std::isfinite(e.weight))
      throw ParseError("bad weight", lineno);
    if (!(e.weight > 0.0)) throw ParseError("weight must be positive", lineno);
    if (!seen.insert(e.id).second) throw ParseError("duplicate element id " + std::to_string(e.id), lineno);
    elements.push_back(e);
  }
  std::size_t lineno = n + 2;
  while (std::getline(is, line)) {
    if (!detail::split_ws(line).empty()) throw ParseError("trailing data after last element", lineno);
    ++lineno;
  }
  return Mesh(std::move(elements));
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

inline Mesh load_mesh(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_mesh(in);
}

inline void store_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_mesh(out, mesh);
  if (!out) throw IoError("write failed: " + path.string());
}

// FullMesh JSON: {"nodes": [[x,y,z], ...], "elements": [{"kind", "conn", "rule"}, ...]}
inline nlohmann::json full_mesh_to_json(const FullMesh& mesh) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& p : mesh.nodes) nodes.push_back({p[0], p[1], p[2]});
  nlohmann::json elements = nlohmann::json::array();
  for (const auto& e : mesh.elements)
    elements.push_back({{"kind", kind_tag(e.kind)}, {"conn", e.conn}, {"rule", rule_info(e.rule).tag}});
  return {{"nodes", std::move(nodes)}, {"elements", std::move(elements)}};
}

inline FullMesh full_mesh_from_json(const nlohmann::json& doc) {
  FullMesh mesh;
  if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("elements"))
    throw ParseError("full mesh: expected object with 'nodes' and 'elements'");
  const auto& nodes = doc.at("nodes");
  const auto& elements = doc.at("elements");
  if (!nodes.is_array() || !elements.is_array()) throw ParseError("full mesh: 'nodes' and 'elements' must be arrays");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& p = nodes[i];
    if (!p.is_array() || p.size() != 3) throw ParseError("full mesh: node must be [x,y,z]", i + 1);
    Vec3 v{};
    for (int a = 0; a < 3; ++a) {
      if (!p[a].is_number()) throw ParseError("full mesh: non-numeric node coordinate", i + 1);
      v[a] = p[a].get<double>();
    }
    mesh.nodes.push_back(v);
  }
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const auto& e = elements[i];
    try {
      FullElement el;
      auto kind = kind_from_tag(e.at("kind").get<std::string>());
      if (!kind) throw ParseError("full mesh: unknown kind", i + 1);
      el.kind = *kind;
      el.conn = e.at("conn").get<std::vector<std::int64_t>>();
      auto rule = rule_from_tag(e.at("rule").get<std::string>());
      if (!rule) throw ParseError("full mesh: unknown rule id", i + 1);
      el.rule = *rule;
      mesh.elements.push_back(std::move(el));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(std::string("full mesh: malformed element: ") + ex.what(), i + 1);
    }
  }
  try {
    validate_full_mesh(mesh);
  } catch (const InvalidArgument& ex) {
    throw ParseError(std::string("full mesh: ") + ex.what());
  }
  return mesh;
}

inline FullMesh load_full_mesh(const std::filesystem::path& path) {
  auto in = open_input(path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& ex) {
    throw ParseError(std::string("full mesh: invalid JSON: ") + ex.what());
  }
  return full_mesh_from_json(doc);
}

inline void store_full_mesh(const FullMesh& mesh, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << full_mesh_to_json(mesh).dump() << '\n';
}

}  // namespace coexbal
