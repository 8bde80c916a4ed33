#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "mesh.hpp"
#include "parallel.hpp"

namespace coexbal {

// Reference-element data of one integration rule: Gauss weights, shape
// functions N[i][g] and their reference gradients.
struct ReferenceRule {
  RuleId rule{};
  ElementKind kind{};
  int nnode = 0;
  int ngaus = 0;
  std::vector<double> weights;              // [ngaus]
  std::vector<double> shape;                // [nnode * ngaus], shape[i * ngaus + g]
  std::vector<std::array<double, 3>> grad;  // [nnode * ngaus]

  double N(int i, int g) const { return shape[static_cast<std::size_t>(i * ngaus + g)]; }
  const std::array<double, 3>& dN(int i, int g) const { return grad[static_cast<std::size_t>(i * ngaus + g)]; }
};

namespace detail {

inline ReferenceRule make_tet_rule(RuleId id, const std::vector<std::array<double, 3>>& points, double weight) {
  ReferenceRule r;
  r.rule = id;
  r.kind = ElementKind::Tetrahedron;
  r.nnode = 4;
  r.ngaus = static_cast<int>(points.size());
  r.weights.assign(points.size(), weight);
  r.shape.resize(static_cast<std::size_t>(r.nnode * r.ngaus));
  r.grad.resize(r.shape.size());
  for (int g = 0; g < r.ngaus; ++g) {
    const auto [x, y, z] = points[static_cast<std::size_t>(g)];
    const std::array<double, 4> n = {1.0 - x - y - z, x, y, z};
    const std::array<std::array<double, 3>, 4> d = {{{-1, -1, -1}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    for (int i = 0; i < 4; ++i) {
      r.shape[static_cast<std::size_t>(i * r.ngaus + g)] = n[static_cast<std::size_t>(i)];
      r.grad[static_cast<std::size_t>(i * r.ngaus + g)] = d[static_cast<std::size_t>(i)];
    }
  }
  return r;
}

inline ReferenceRule make_hex8_rule() {
  // Node order: bottom face (-1,-1,-1) (1,-1,-1) (1,1,-1) (-1,1,-1), then top face.
  static constexpr std::array<std::array<int, 3>, 8> corner = {
      {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1}, {-1, -1, 1}, {1, -1, 1}, {1, 1, 1}, {-1, 1, 1}}};
  const double a = 1.0 / std::sqrt(3.0);
  ReferenceRule r;
  r.rule = RuleId::Hex8;
  r.kind = ElementKind::Hexahedron;
  r.nnode = 8;
  r.ngaus = 8;
  r.weights.assign(8, 1.0);
  r.shape.resize(64);
  r.grad.resize(64);
  for (int g = 0; g < 8; ++g) {
    const std::array<double, 3> q = {corner[static_cast<std::size_t>(g)][0] * a,
                                     corner[static_cast<std::size_t>(g)][1] * a,
                                     corner[static_cast<std::size_t>(g)][2] * a};
    for (int i = 0; i < 8; ++i) {
      const auto& c = corner[static_cast<std::size_t>(i)];
      const double fx = 1.0 + c[0] * q[0], fy = 1.0 + c[1] * q[1], fz = 1.0 + c[2] * q[2];
      const auto k = static_cast<std::size_t>(i * 8 + g);
      r.shape[k] = 0.125 * fx * fy * fz;
      r.grad[k] = {0.125 * c[0] * fy * fz, 0.125 * fx * c[1] * fz, 0.125 * fx * fy * c[2]};
    }
  }
  return r;
}

}  // namespace detail

inline bool has_reference_rule(RuleId id) {
  return id == RuleId::Tet1 || id == RuleId::Tet4 || id == RuleId::Hex8;
}

// P1 tetrahedra (1- and 4-point rules) and trilinear hexahedra (2x2x2 Gauss).
inline const ReferenceRule& reference_rule(RuleId id) {
  static const ReferenceRule tet1 = detail::make_tet_rule(RuleId::Tet1, {{0.25, 0.25, 0.25}}, 1.0 / 6.0);
  static const ReferenceRule tet4 = [] {
    const double a = (5.0 + 3.0 * std::sqrt(5.0)) / 20.0;
    const double b = (5.0 - std::sqrt(5.0)) / 20.0;
    return detail::make_tet_rule(RuleId::Tet4, {{b, b, b}, {a, b, b}, {b, a, b}, {b, b, a}}, 1.0 / 24.0);
  }();
  static const ReferenceRule hex8 = detail::make_hex8_rule();
  switch (id) {
    case RuleId::Tet1: return tet1;
    case RuleId::Tet4: return tet4;
    case RuleId::Hex8: return hex8;
    default: break;
  }
  throw InvalidArgument("no shape functions for integration rule '" + std::string(rule_info(id).tag) + "'");
}

// |det J| of the element map at Gauss point g.
inline double jacobian_det(const FullMesh& mesh, const FullElement& el, const ReferenceRule& ref, int g) {
  double j[3][3] = {};
  for (int i = 0; i < ref.nnode; ++i) {
    const Vec3& x = mesh.nodes[static_cast<std::size_t>(el.conn[static_cast<std::size_t>(i)])];
    const auto& d = ref.dN(i, g);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) j[a][b] += x[a] * d[b];
  }
  const double det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) -
                     j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0]) +
                     j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
  return std::abs(det);
}

struct Category {
  ElementKind kind{};
  RuleId rule{};
  int nnode = 0;
  int ngaus = 0;

  friend bool operator==(const Category&, const Category&) = default;
};

inline Category category_of(RuleId rule) {
  const auto& ref = reference_rule(rule);
  return {ref.kind, rule, ref.nnode, ref.ngaus};
}

// pack_size same-category elements stored lane-contiguously. Lanes at and
// beyond valid_count are padding and hold zero Jacobians.
struct Pack {
  Category category;
  int pack_size = 1;
  int valid_count = 0;
  std::vector<ElementId> element_ids;  // valid_count entries
  std::vector<double> jacobian;        // [ngaus * pack_size], jacobian[g * pack_size + lane]

  double J(int lane, int g) const { return jacobian[static_cast<std::size_t>(g * pack_size + lane)]; }

  friend bool operator==(const Pack&, const Pack&) = default;
};

struct PackSet {
  std::vector<Pack> packs;  // by category (rule id), then ascending element id
  std::size_t n_elements = 0;
  int pack_size = 1;

  friend bool operator==(const PackSet&, const PackSet&) = default;
};

// Gather step: group by category, chunk into packs, precompute |det J| at
// the Gauss points.
inline PackSet build_packs(const FullMesh& mesh, int pack_size) {
  if (pack_size < 1) throw InvalidArgument("pack size must be >= 1");
  validate_full_mesh(mesh);
  std::array<std::vector<ElementId>, kRules.size()> by_rule;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const RuleId rule = mesh.elements[e].rule;
    if (!has_reference_rule(rule))
      throw InvalidArgument("unknown rule id '" + std::string(rule_info(rule).tag) + "' for assembly");
    by_rule[static_cast<std::size_t>(rule)].push_back(static_cast<ElementId>(e));
  }
  PackSet set;
  set.n_elements = mesh.elements.size();
  set.pack_size = pack_size;
  const auto ps = static_cast<std::size_t>(pack_size);
  for (std::size_t r = 0; r < by_rule.size(); ++r) {
    const auto& ids = by_rule[r];
    if (ids.empty()) continue;
    const auto& ref = reference_rule(static_cast<RuleId>(r));
    const Category cat = category_of(static_cast<RuleId>(r));
    for (std::size_t start = 0; start < ids.size(); start += ps) {
      Pack p;
      p.category = cat;
      p.pack_size = pack_size;
      p.valid_count = static_cast<int>(std::min(ps, ids.size() - start));
      p.element_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(start),
                           ids.begin() + static_cast<std::ptrdiff_t>(start + static_cast<std::size_t>(p.valid_count)));
      p.jacobian.assign(static_cast<std::size_t>(cat.ngaus) * ps, 0.0);
      for (int lane = 0; lane < p.valid_count; ++lane) {
        const auto& el = mesh.elements[static_cast<std::size_t>(p.element_ids[static_cast<std::size_t>(lane)])];
        for (int g = 0; g < cat.ngaus; ++g)
          p.jacobian[static_cast<std::size_t>(g * pack_size + lane)] = jacobian_det(mesh, el, ref, g);
      }
      set.packs.push_back(std::move(p));
    }
  }
  return set;
}

struct ElementMatrix {
  int nnode = 0;
  std::vector<double> values;  // row-major nnode x nnode

  double operator()(int i, int j) const { return values[static_cast<std::size_t>(i * nnode + j)]; }
  friend bool operator==(const ElementMatrix&, const ElementMatrix&) = default;
};

// Indexed by element id.
using ElementMatrices = std::vector<ElementMatrix>;

namespace detail {

// Ae[i][j][lane] = sum_g J[g][lane] * w[g] * N[i][g] * N[j][g], upper
// triangle computed and mirrored. Gauss points are summed in ascending
// order so every lane sees the same operation sequence as the scalar loop.
template <int FixedSize>
void mass_kernel(const Pack& pack, const ReferenceRule& ref, std::vector<double>& ae) {
  const int ps = FixedSize > 0 ? FixedSize : pack.pack_size;
  const int nn = ref.nnode;
  ae.assign(static_cast<std::size_t>(nn * nn * ps), 0.0);
  std::vector<double> jw(static_cast<std::size_t>(ps));
  for (int g = 0; g < ref.ngaus; ++g) {
    const double wg = ref.weights[static_cast<std::size_t>(g)];
    const double* jac = pack.jacobian.data() + static_cast<std::ptrdiff_t>(g) * ps;
    for (int lane = 0; lane < ps; ++lane) jw[static_cast<std::size_t>(lane)] = jac[lane] * wg;
    for (int i = 0; i < nn; ++i) {
      const double ni = ref.N(i, g);
      for (int j = i; j < nn; ++j) {
        const double nj = ref.N(j, g);
        double* out = ae.data() + static_cast<std::ptrdiff_t>(i * nn + j) * ps;
        for (int lane = 0; lane < ps; ++lane) out[lane] += jw[static_cast<std::size_t>(lane)] * ni * nj;
      }
    }
  }
}

}  // namespace detail

// Compute + scatter-to-slot over every pack. Packs are independent and each
// element owns its output slot, so the result does not depend on threads.
inline ElementMatrices assemble_packs(const PackSet& set, std::size_t threads = max_threads()) {
  ElementMatrices out(set.n_elements);
  parallel_for(
      set.packs.size(),
      [&](std::size_t lo, std::size_t hi) {
        std::vector<double> ae;
        for (std::size_t p = lo; p < hi; ++p) {
          const Pack& pack = set.packs[p];
          const auto& ref = reference_rule(pack.category.rule);
          switch (pack.pack_size) {
            case 16: detail::mass_kernel<16>(pack, ref, ae); break;
            case 32: detail::mass_kernel<32>(pack, ref, ae); break;
            default: detail::mass_kernel<0>(pack, ref, ae); break;
          }
          const int nn = ref.nnode;
          for (int lane = 0; lane < pack.valid_count; ++lane) {
            ElementMatrix m;
            m.nnode = nn;
            m.values.resize(static_cast<std::size_t>(nn * nn));
            for (int i = 0; i < nn; ++i)
              for (int j = i; j < nn; ++j) {
                const double v = ae[static_cast<std::size_t>((i * nn + j) * pack.pack_size + lane)];
                m.values[static_cast<std::size_t>(i * nn + j)] = v;
                m.values[static_cast<std::size_t>(j * nn + i)] = v;
              }
            out[static_cast<std::size_t>(pack.element_ids[static_cast<std::size_t>(lane)])] = std::move(m);
          }
        }
      },
      threads);
  return out;
}

// Classical element-by-element loop; ground truth for the packed kernel.
inline ElementMatrices assemble_reference(const FullMesh& mesh) {
  validate_full_mesh(mesh);
  ElementMatrices out;
  out.reserve(mesh.elements.size());
  for (const auto& el : mesh.elements) {
    const auto& ref = reference_rule(el.rule);
    const int nn = ref.nnode;
    ElementMatrix m;
    m.nnode = nn;
    m.values.assign(static_cast<std::size_t>(nn * nn), 0.0);
    for (int g = 0; g < ref.ngaus; ++g) {
      const double jw = jacobian_det(mesh, el, ref, g) * ref.weights[static_cast<std::size_t>(g)];
      for (int i = 0; i < nn; ++i)
        for (int j = i; j < nn; ++j) m.values[static_cast<std::size_t>(i * nn + j)] += jw * ref.N(i, g) * ref.N(j, g);
    }
    for (int i = 0; i < nn; ++i)
      for (int j = 0; j < i; ++j) m.values[static_cast<std::size_t>(i * nn + j)] = m.values[static_cast<std::size_t>(j * nn + i)];
    out.push_back(std::move(m));
  }
  return out;
}

struct SparseEntry {
  std::int64_t row = 0;
  std::int64_t col = 0;
  double value = 0.0;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Coordinate-list global matrix, entries sorted by (row, col).
struct SparseMatrix {
  std::size_t n = 0;
  std::vector<SparseEntry> entries;

  double total() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.value;
    return s;
  }
};

// Element contributions are accumulated per (row, col) in ascending element id.
inline SparseMatrix scatter_global(const ElementMatrices& matrices, const FullMesh& mesh) {
  if (matrices.size() != mesh.elements.size()) throw InvalidArgument("one element matrix per element expected");
  std::vector<SparseEntry> raw;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& conn = mesh.elements[e].conn;
    const auto& m = matrices[e];
    if (static_cast<std::size_t>(m.nnode) != conn.size()) throw InvalidArgument("element matrix size mismatch");
    for (int i = 0; i < m.nnode; ++i)
      for (int j = 0; j < m.nnode; ++j)
        raw.push_back({conn[static_cast<std::size_t>(i)], conn[static_cast<std::size_t>(j)], m(i, j)});
  }
  std::stable_sort(raw.begin(), raw.end(), [](const SparseEntry& a, const SparseEntry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix out;
  out.n = mesh.nodes.size();
  for (const auto& e : raw) {
    if (!out.entries.empty() && out.entries.back().row == e.row && out.entries.back().col == e.col)
      out.entries.back().value += e.value;
    else
      out.entries.push_back(e);
  }
  return out;
}

struct SweepRow {
  int pack_size = 1;
  double median_seconds = 0.0;
  double speedup = 1.0;
};

// Median wall time of assemble_packs per pack size (pack building excluded,
// one warm-up run discarded), with speedup relative to pack size 1. The
// size-1 row is always present and comes first.
inline std::vector<SweepRow> sweep_pack_size(const FullMesh& mesh, std::span<const int> sizes, int reps,
                                             std::size_t threads = max_threads()) {
  if (reps < 3) throw InvalidArgument("sweep needs at least 3 repetitions");
  std::vector<int> order{1};
  for (int s : sizes) {
    if (s < 1) throw InvalidArgument("pack size must be >= 1");
    if (std::find(order.begin(), order.end(), s) == order.end()) order.push_back(s);
  }
  std::vector<SweepRow> rows;
  for (int s : order) {
    const PackSet packs = build_packs(mesh, s);
    (void)assemble_packs(packs, threads);
    std::vector<double> t;
    for (int r = 0; r < reps; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto result = assemble_packs(packs, threads);
      const auto t1 = std::chrono::steady_clock::now();
      (void)result;
      t.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(t.begin(), t.end());
    const double med = t.size() % 2 ? t[t.size() / 2] : 0.5 * (t[t.size() / 2 - 1] + t[t.size() / 2]);
    rows.push_back({s, std::max(med, 1e-12), 1.0});
  }
  for (auto& row : rows) row.speedup = rows.front().median_seconds / row.median_seconds;
  rows.front().speedup = 1.0;
  return rows;
}

}  // namespace coexbal
