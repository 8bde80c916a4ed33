#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_set>
#include <utility>
#include <vector>

#include "error.hpp"
#include "random.hpp"

namespace coexbal {

using Vec3 = std::array<double, 3>;
using ElementId = std::int64_t;

enum class ElementKind : std::uint8_t { Tetrahedron, Pyramid, Prism, Hexahedron };

inline constexpr std::array<ElementKind, 4> kAllKinds = {
    ElementKind::Tetrahedron, ElementKind::Pyramid, ElementKind::Prism, ElementKind::Hexahedron};

constexpr int node_count(ElementKind k) {
  switch (k) {
    case ElementKind::Tetrahedron: return 4;
    case ElementKind::Pyramid: return 5;
    case ElementKind::Prism: return 6;
    case ElementKind::Hexahedron: return 8;
  }
  return 0;
}

constexpr std::string_view kind_tag(ElementKind k) {
  switch (k) {
    case ElementKind::Tetrahedron: return "tet";
    case ElementKind::Pyramid: return "pyr";
    case ElementKind::Prism: return "pri";
    case ElementKind::Hexahedron: return "hex";
  }
  return "?";
}

inline std::optional<ElementKind> kind_from_tag(std::string_view tag) {
  for (auto k : kAllKinds)
    if (kind_tag(k) == tag) return k;
  return std::nullopt;
}

// Integration rules known to the mesh layer. A rule fixes the element kind
// and the number of Gauss points; the partitioning weight of an element is
// the Gauss-point count of its rule.
enum class RuleId : std::uint8_t { Tet1, Tet4, Pyr5, Pri6, Hex8 };

struct RuleInfo {
  RuleId id;
  std::string_view tag;
  ElementKind kind;
  int gauss_points;
};

inline constexpr std::array<RuleInfo, 5> kRules = {{
    {RuleId::Tet1, "tet1", ElementKind::Tetrahedron, 1},
    {RuleId::Tet4, "tet4", ElementKind::Tetrahedron, 4},
    {RuleId::Pyr5, "pyr5", ElementKind::Pyramid, 5},
    {RuleId::Pri6, "pri6", ElementKind::Prism, 6},
    {RuleId::Hex8, "hex8", ElementKind::Hexahedron, 8},
}};

constexpr const RuleInfo& rule_info(RuleId id) { return kRules[static_cast<std::size_t>(id)]; }

inline std::optional<RuleId> rule_from_tag(std::string_view tag) {
  for (const auto& r : kRules)
    if (r.tag == tag) return r.id;
  return std::nullopt;
}

// One rule per kind; the synthetic generator weights elements with these.
constexpr RuleId default_rule(ElementKind k) {
  switch (k) {
    case ElementKind::Tetrahedron: return RuleId::Tet4;
    case ElementKind::Pyramid: return RuleId::Pyr5;
    case ElementKind::Prism: return RuleId::Pri6;
    case ElementKind::Hexahedron: return RuleId::Hex8;
  }
  return RuleId::Tet4;
}

struct PartitionElement {
  ElementId id = 0;
  ElementKind kind = ElementKind::Tetrahedron;
  Vec3 centroid{};
  double weight = 1.0;

  friend bool operator==(const PartitionElement&, const PartitionElement&) = default;
};

struct BoundingBox {
  Vec3 lo{};
  Vec3 hi{};

  double extent(int axis) const { return hi[axis] - lo[axis]; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Partitioning-level mesh: element centroids and weights. Immutable once
// built; the constructor enforces unique ids and positive finite weights.
class Mesh {
public:
  Mesh() = default;

  explicit Mesh(std::vector<PartitionElement> elements) : elements_(std::move(elements)) {
    std::unordered_set<ElementId> seen;
    seen.reserve(elements_.size());
    for (std::size_t i = 0; i < elements_.size(); ++i) {
      const auto& e = elements_[i];
      if (!(e.weight > 0.0) || !std::isfinite(e.weight))
        throw InvalidArgument("element " + std::to_string(e.id) + ": weight must be positive and finite");
      for (double c : e.centroid)
        if (!std::isfinite(c))
          throw InvalidArgument("element " + std::to_string(e.id) + ": non-finite centroid");
      if (!seen.insert(e.id).second)
        throw InvalidArgument("duplicate element id " + std::to_string(e.id));
      total_weight_ += e.weight;
    }
  }

  std::span<const PartitionElement> elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }
  bool empty() const { return elements_.empty(); }
  double total_weight() const { return total_weight_; }

  friend bool operator==(const Mesh& a, const Mesh& b) { return a.elements_ == b.elements_; }

private:
  std::vector<PartitionElement> elements_;
  double total_weight_ = 0.0;
};

// Tight min/max over centroids, widened by a relative margin of 1e-9 of the
// largest extent on each side. Flat axes get extent max(1e-9, 1e-9*max_extent)
// so that quantization onto a grid always has positive cell size.
inline BoundingBox compute_bounding_box(const Mesh& mesh) {
  if (mesh.empty()) throw InvalidArgument("bounding box of an empty mesh");
  BoundingBox box;
  box.lo.fill(std::numeric_limits<double>::infinity());
  box.hi.fill(-std::numeric_limits<double>::infinity());
  for (const auto& e : mesh.elements())
    for (int a = 0; a < 3; ++a) {
      box.lo[a] = std::min(box.lo[a], e.centroid[a]);
      box.hi[a] = std::max(box.hi[a], e.centroid[a]);
    }
  double max_extent = 0.0;
  for (int a = 0; a < 3; ++a) max_extent = std::max(max_extent, box.extent(a));
  constexpr double eps = 1e-9;
  for (int a = 0; a < 3; ++a) {
    const double ext = box.extent(a);
    if (ext > 0.0) {
      box.lo[a] -= eps * ext;
      box.hi[a] += eps * ext;
    } else {
      const double half = 0.5 * std::max(eps, eps * max_extent);
      box.lo[a] -= half;
      box.hi[a] += half;
    }
    // Margins below one ulp of large coordinates would vanish.
    if (!(box.lo[a] < box.hi[a])) {
      box.lo[a] = std::nextafter(box.lo[a], -std::numeric_limits<double>::infinity());
      box.hi[a] = std::nextafter(box.hi[a], std::numeric_limits<double>::infinity());
    }
  }
  return box;
}

enum class SpatialProfile { Uniform, Clustered };

// Proportions per kind, in ElementKind order (tet, pyr, pri, hex).
using KindMix = std::array<double, 4>;

inline constexpr KindMix kAllTets = {1.0, 0.0, 0.0, 0.0};

inline void validate_kind_mix(const KindMix& mix) {
  double sum = 0.0;
  for (double p : mix) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidArgument("kind proportions must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("kind proportions must sum to 1");
}

// Deterministic synthetic partitioning mesh in the unit cube. Clustered
// places each element in the octant [0,0.5)^3 with probability 0.8 and in
// one of the other seven octants otherwise.
inline Mesh generate_synthetic_mesh(std::size_t n_elements, const KindMix& mix, std::uint64_t seed,
                                    SpatialProfile profile = SpatialProfile::Uniform) {
  if (n_elements < 1) throw InvalidArgument("n_elements must be >= 1");
  validate_kind_mix(mix);
  std::mt19937_64 eng(seed);
  std::vector<PartitionElement> out;
  out.reserve(n_elements);
  for (std::size_t i = 0; i < n_elements; ++i) {
    PartitionElement e;
    e.id = static_cast<ElementId>(i);
    const double u = uniform01(eng);
    double acc = 0.0;
    e.kind = ElementKind::Hexahedron;
    for (std::size_t k = 0; k < mix.size(); ++k) {
      if (mix[k] <= 0.0) continue;
      acc += mix[k];
      e.kind = kAllKinds[k];
      if (u < acc) break;
    }
    e.weight = rule_info(default_rule(e.kind)).gauss_points;
    if (profile == SpatialProfile::Uniform) {
      for (auto& c : e.centroid) c = uniform01(eng);
    } else if (uniform01(eng) < 0.8) {
      for (auto& c : e.centroid) c = 0.5 * uniform01(eng);
    } else {
      do {
        for (auto& c : e.centroid) c = uniform01(eng);
      } while (e.centroid[0] < 0.5 && e.centroid[1] < 0.5 && e.centroid[2] < 0.5);
    }
    out.push_back(e);
  }
  return Mesh(std::move(out));
}

// Node/connectivity mesh used by the assembly workload.
struct FullElement {
  ElementKind kind = ElementKind::Tetrahedron;
  std::vector<std::int64_t> conn;
  RuleId rule = RuleId::Tet4;

  friend bool operator==(const FullElement&, const FullElement&) = default;
};

struct FullMesh {
  std::vector<Vec3> nodes;
  std::vector<FullElement> elements;  // element id == index

  friend bool operator==(const FullMesh&, const FullMesh&) = default;
};

inline void validate_full_mesh(const FullMesh& mesh) {
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& el = mesh.elements[e];
    if (static_cast<int>(el.conn.size()) != node_count(el.kind))
      throw InvalidArgument("element " + std::to_string(e) + ": connectivity length does not match kind");
    if (rule_info(el.rule).kind != el.kind)
      throw InvalidArgument("element " + std::to_string(e) + ": rule does not match kind");
    for (auto n : el.conn)
      if (n < 0 || static_cast<std::size_t>(n) >= mesh.nodes.size())
        throw InvalidArgument("element " + std::to_string(e) + ": node index out of range");
  }
}

// Partitioning view of a full mesh: centroid = mean of the element's nodes,
// weight = Gauss points of its rule, id = element index.
inline Mesh to_partition_mesh(const FullMesh& mesh) {
  std::vector<PartitionElement> out;
  out.reserve(mesh.elements.size());
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& el = mesh.elements[e];
    PartitionElement pe;
    pe.id = static_cast<ElementId>(e);
    pe.kind = el.kind;
    for (auto n : el.conn)
      for (int a = 0; a < 3; ++a) pe.centroid[a] += mesh.nodes[static_cast<std::size_t>(n)][a];
    for (auto& c : pe.centroid) c /= static_cast<double>(el.conn.size());
    pe.weight = rule_info(el.rule).gauss_points;
    out.push_back(pe);
  }
  return Mesh(std::move(out));
}

struct GridMeshOptions {
  std::array<int, 3> cells{4, 4, 4};
  double hex_fraction = 0.5;   // probability a cell is one hexahedron
  double tet1_fraction = 0.0;  // probability a tetrahedral cell uses the 1-point rule
  double jitter = 0.0;         // interior node perturbation, fraction of the cell size
  std::uint64_t seed = 0;
};

// Structured grid over the unit cube. Each cell is either a trilinear hex or
// six tets sharing the cell's main diagonal. With jitter == 0 the mesh is
// conforming and its volume is exactly 1.
inline FullMesh generate_grid_mesh(const GridMeshOptions& opt) {
  for (int c : opt.cells) detail::require(c >= 1, "grid needs at least one cell per axis");
  detail::require(opt.jitter >= 0.0 && opt.jitter < 0.25, "jitter must lie in [0, 0.25)");
  std::mt19937_64 eng(opt.seed);
  const auto [nx, ny, nz] = opt.cells;
  FullMesh mesh;
  auto node_index = [&](int i, int j, int k) {
    return static_cast<std::int64_t>((k * (ny + 1) + j) * (nx + 1) + i);
  };
  const Vec3 h{1.0 / nx, 1.0 / ny, 1.0 / nz};
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) {
        Vec3 p{i * h[0], j * h[1], k * h[2]};
        const bool interior = i > 0 && i < nx && j > 0 && j < ny && k > 0 && k < nz;
        for (int a = 0; a < 3; ++a) {
          const double d = (2.0 * uniform01(eng) - 1.0) * opt.jitter * h[a];
          if (interior) p[a] += d;
        }
        mesh.nodes.push_back(p);
      }
  // Cube corner (dx,dy,dz) -> node
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        auto v = [&](int dx, int dy, int dz) { return node_index(i + dx, j + dy, k + dz); };
        if (uniform01(eng) < opt.hex_fraction) {
          mesh.elements.push_back({ElementKind::Hexahedron,
                                   {v(0, 0, 0), v(1, 0, 0), v(1, 1, 0), v(0, 1, 0), v(0, 0, 1),
                                    v(1, 0, 1), v(1, 1, 1), v(0, 1, 1)},
                                   RuleId::Hex8});
          continue;
        }
        static constexpr std::array<std::array<int, 3>, 6> perms = {
            {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
        for (const auto& perm : perms) {
          std::array<int, 3> d{0, 0, 0};
          std::vector<std::int64_t> conn{v(0, 0, 0)};
          for (int step : perm) {
            d[step] = 1;
            conn.push_back(v(d[0], d[1], d[2]));
          }
          const RuleId rule = uniform01(eng) < opt.tet1_fraction ? RuleId::Tet1 : RuleId::Tet4;
          mesh.elements.push_back({ElementKind::Tetrahedron, std::move(conn), rule});
        }
      }
  return mesh;
}

namespace detail {

// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
bool parse_number(std::string_view tok, T& out) {
  if (tok.empty()) return false;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc{} && res.ptr == tok.data() + tok.size();
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace detail
}  // namespace coexbal
