#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "mesh.hpp"
#include "parallel.hpp"

namespace coexbal {

struct SfcConfig {
  int level = 8;  // bits per axis

  void validate() const {
    if (level < 1 || level > 20) throw InvalidArgument("SFC level must lie in [1, 20]");
  }
};

using Cell = std::array<std::uint32_t, 3>;
using SfcKey = std::uint64_t;

namespace detail {

// Skilling's transpose form: in-place conversion between axis coordinates
// and the "transposed" Hilbert index (bit j of the index spread over X[0..2]).
inline void axes_to_transpose(Cell& x, int bits) {
  const std::uint32_t m = 1u << (bits - 1);
  for (std::uint32_t q = m; q > 1; q >>= 1) {
    const std::uint32_t p = q - 1;
    for (int i = 0; i < 3; ++i) {
      if (x[i] & q) {
        x[0] ^= p;
      } else {
        const std::uint32_t t = (x[0] ^ x[i]) & p;
        x[0] ^= t;
        x[i] ^= t;
      }
    }
  }
  for (int i = 1; i < 3; ++i) x[i] ^= x[i - 1];
  std::uint32_t t = 0;
  for (std::uint32_t q = m; q > 1; q >>= 1)
    if (x[2] & q) t ^= q - 1;
  for (auto& v : x) v ^= t;
}

inline void transpose_to_axes(Cell& x, int bits) {
  const std::uint32_t n = 2u << (bits - 1);
  std::uint32_t t = x[2] >> 1;
  for (int i = 2; i > 0; --i) x[i] ^= x[i - 1];
  x[0] ^= t;
  for (std::uint32_t q = 2; q != n; q <<= 1) {
    const std::uint32_t p = q - 1;
    for (int i = 2; i >= 0; --i) {
      if (x[i] & q) {
        x[0] ^= p;
      } else {
        t = (x[0] ^ x[i]) & p;
        x[0] ^= t;
        x[i] ^= t;
      }
    }
  }
}

}  // namespace detail

// Hilbert index of a lattice cell; a bijection of [0,2^L)^3 onto [0,2^{3L})
// whose consecutive keys are face-adjacent cells. The origin maps to 0.
inline SfcKey hilbert_key(Cell cell, int level) {
  SfcConfig{level}.validate();
  for (auto c : cell)
    if (c >> level) throw InvalidArgument("cell coordinate out of range for SFC level");
  detail::axes_to_transpose(cell, level);
  SfcKey key = 0;
  for (int b = level - 1; b >= 0; --b)
    for (int i = 0; i < 3; ++i) key = (key << 1) | ((cell[i] >> b) & 1u);
  return key;
}

inline Cell hilbert_decode(SfcKey key, int level) {
  SfcConfig{level}.validate();
  if (key >> (3 * level)) throw InvalidArgument("SFC key out of range for level");
  Cell x{0, 0, 0};
  for (int b = level - 1; b >= 0; --b)
    for (int i = 0; i < 3; ++i) {
      const int shift = 3 * b + (2 - i);
      x[i] |= static_cast<std::uint32_t>((key >> shift) & 1u) << b;
    }
  detail::transpose_to_axes(x, level);
  return x;
}

struct Bin {
  SfcKey key = 0;
  double weight = 0.0;
  std::vector<ElementId> element_ids;  // ascending

  friend bool operator==(const Bin&, const Bin&) = default;
};

// Key-sorted sparse bins. Alongside the double weights the sequence keeps a
// fixed-point copy (scaled by 2^shift) so that prefix sums are exact integers
// and therefore independent of how the scan is split across chunks.
class BinSequence {
public:
  using Fixed = __int128;

  BinSequence() = default;

  explicit BinSequence(std::vector<Bin> bins) : bins_(std::move(bins)) {
    double max_w = 0.0;
    for (std::size_t i = 0; i < bins_.size(); ++i) {
      const double w = bins_[i].weight;
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("bin weight must be finite and >= 0");
      if (i > 0 && !(bins_[i - 1].key < bins_[i].key)) throw InvalidArgument("bin keys must be strictly increasing");
      max_w = std::max(max_w, w);
    }
    shift_ = max_w > 0.0 ? 52 - std::ilogb(max_w) : 0;
    fixed_.reserve(bins_.size());
    Fixed total = 0;
    for (const auto& b : bins_) {
      fixed_.push_back(static_cast<std::int64_t>(std::llround(std::ldexp(b.weight, shift_))));
      total += fixed_.back();
    }
    fixed_total_ = total;
    total_weight_ = to_real(total);
  }

  // Convenience for tests and tools: consecutive keys 0..n-1, no element ids.
  static BinSequence from_weights(std::span<const double> weights) {
    std::vector<Bin> bins;
    bins.reserve(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) bins.push_back({static_cast<SfcKey>(i), weights[i], {}});
    return BinSequence(std::move(bins));
  }

  std::span<const Bin> bins() const { return bins_; }
  std::size_t size() const { return bins_.size(); }
  double total_weight() const { return total_weight_; }

  std::int64_t fixed_weight(std::size_t i) const { return fixed_[i]; }
  Fixed fixed_total() const { return fixed_total_; }
  double to_real(Fixed v) const { return static_cast<double>(std::ldexp(static_cast<long double>(v), -shift_)); }

private:
  std::vector<Bin> bins_;
  std::vector<std::int64_t> fixed_;
  Fixed fixed_total_ = 0;
  int shift_ = 0;
  double total_weight_ = 0.0;
};

// Quantize centroids onto the 2^L grid over the bounding box, key each cell,
// and group elements per key. Output is independent of element input order.
inline BinSequence project_to_bins(const Mesh& mesh, const SfcConfig& cfg) {
  cfg.validate();
  const BoundingBox box = compute_bounding_box(mesh);
  const std::uint32_t cells = 1u << cfg.level;
  struct Keyed {
    SfcKey key;
    ElementId id;
    double weight;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(mesh.size());
  for (const auto& e : mesh.elements()) {
    Cell c{};
    for (int a = 0; a < 3; ++a) {
      const double t = (e.centroid[a] - box.lo[a]) / box.extent(a) * cells;
      const double f = std::floor(t);
      c[a] = f <= 0.0 ? 0u : static_cast<std::uint32_t>(std::min<double>(f, cells - 1));
    }
    keyed.push_back({hilbert_key(c, cfg.level), e.id, e.weight});
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const Keyed& a, const Keyed& b) { return a.key != b.key ? a.key < b.key : a.id < b.id; });
  std::vector<Bin> bins;
  for (const auto& k : keyed) {
    if (bins.empty() || bins.back().key != k.key) bins.push_back({k.key, 0.0, {}});
    bins.back().weight += k.weight;
    bins.back().element_ids.push_back(k.id);
  }
  return BinSequence(std::move(bins));
}

struct Partition {
  int n_parts = 0;
  // cut_bins[i] = number of bins before splitting point i+1; strictly increasing.
  std::vector<std::size_t> cut_bins;
  // Sorted element ids and their 0-based subdomain (parallel arrays).
  std::vector<ElementId> element_ids;
  std::vector<int> assignment;
  std::vector<double> subdomain_weights;

  int subdomain_of(ElementId id) const {
    auto it = std::lower_bound(element_ids.begin(), element_ids.end(), id);
    if (it == element_ids.end() || *it != id) throw InvalidArgument("unknown element id " + std::to_string(id));
    return assignment[static_cast<std::size_t>(it - element_ids.begin())];
  }

  friend bool operator==(const Partition&, const Partition&) = default;
};

namespace detail {

inline std::vector<double> cumulative_targets(std::span<const double> coeffs, int n_parts) {
  if (n_parts < 1) throw InvalidArgument("number of parts must be >= 1");
  if (coeffs.size() != static_cast<std::size_t>(n_parts))
    throw InvalidArgument("need one correction coefficient per part");
  double sum = 0.0;
  std::vector<double> cumulative(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (!(coeffs[i] > 0.0) || !std::isfinite(coeffs[i])) throw InvalidArgument("correction coefficients must be > 0");
    sum += coeffs[i];
    cumulative[i] = sum;
  }
  if (std::abs(sum - n_parts) > 1e-9 * n_parts) throw InvalidArgument("correction coefficients must sum to the number of parts");
  return cumulative;
}

struct Candidate {
  std::size_t boundary = 0;
  long double distance = 0.0L;
  bool valid = false;

  void offer(std::size_t b, long double d) {
    if (!valid || d < distance || (d == distance && b < boundary)) {
      boundary = b;
      distance = d;
      valid = true;
    }
  }
};

}  // namespace detail

// Weighted 1D split with per-part targets lambda_i * W / P. Each splitting
// point goes to the bin boundary whose cumulative weight is closest to the
// cumulative target (earlier boundary on ties), subject to every part keeping
// at least one bin. The scan runs over `n_chunks` contiguous bin ranges:
// chunk totals are exchanged as exact prefix offsets, each chunk proposes
// its closest local boundary, and proposals are merged. Because prefix sums
// are exact, the result does not depend on n_chunks.
inline Partition split_1d_chunked(const BinSequence& seq, int n_parts, std::span<const double> coeffs,
                                  std::size_t n_chunks) {
  using Fixed = BinSequence::Fixed;
  const auto cumulative = detail::cumulative_targets(coeffs, n_parts);
  const std::size_t nb = seq.size();
  const auto parts = static_cast<std::size_t>(n_parts);
  if (parts > nb)
    throw InvalidArgument("insufficient granularity: " + std::to_string(n_parts) + " parts but " +
                          std::to_string(nb) + " bins");
  if (n_chunks < 1) throw InvalidArgument("n_chunks must be >= 1");
  n_chunks = std::min(n_chunks, nb);

  const long double total = static_cast<long double>(seq.fixed_total());
  std::vector<long double> targets(parts - 1);
  for (std::size_t i = 0; i + 1 < parts; ++i)
    targets[i] = static_cast<long double>(cumulative[i]) * total / static_cast<long double>(n_parts);

  // Chunk c owns bins [begin[c], begin[c+1]).
  std::vector<std::size_t> begin(n_chunks + 1);
  for (std::size_t c = 0; c <= n_chunks; ++c) begin[c] = c * nb / n_chunks;

  std::vector<Fixed> chunk_total(n_chunks, 0);
  parallel_for(n_chunks, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t c = lo; c < hi; ++c)
      for (std::size_t b = begin[c]; b < begin[c + 1]; ++b) chunk_total[c] += seq.fixed_weight(b);
  });
  std::vector<Fixed> offset(n_chunks, 0);
  for (std::size_t c = 1; c < n_chunks; ++c) offset[c] = offset[c - 1] + chunk_total[c - 1];

  // prefix[b] = weight of bins [0, b); boundaries b in [1, nb-1] are cuttable.
  std::vector<Fixed> prefix(nb + 1, 0);
  std::vector<std::vector<detail::Candidate>> proposals(n_chunks, std::vector<detail::Candidate>(parts - 1));
  parallel_for(n_chunks, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t c = lo; c < hi; ++c) {
      Fixed run = offset[c];
      for (std::size_t b = begin[c]; b < begin[c + 1]; ++b) {
        run += seq.fixed_weight(b);
        prefix[b + 1] = run;
      }
      const std::size_t first = std::max<std::size_t>(begin[c] + 1, 1);
      const std::size_t last = std::min(begin[c + 1], nb - 1);
      if (first > last) continue;
      for (std::size_t i = 0; i + 1 < parts; ++i) {
        const long double t = targets[i];
        auto it = std::lower_bound(prefix.begin() + static_cast<std::ptrdiff_t>(first),
                                   prefix.begin() + static_cast<std::ptrdiff_t>(last) + 1, t,
                                   [](Fixed v, long double x) { return static_cast<long double>(v) < x; });
        const auto b = static_cast<std::size_t>(it - prefix.begin());
        auto& cand = proposals[c][i];
        if (b > first) cand.offer(b - 1, std::abs(static_cast<long double>(prefix[b - 1]) - t));
        if (b <= last) cand.offer(b, std::abs(static_cast<long double>(prefix[b]) - t));
      }
    }
  });

  Partition out;
  out.n_parts = n_parts;
  out.cut_bins.reserve(parts - 1);
  std::size_t prev = 0;
  for (std::size_t i = 0; i + 1 < parts; ++i) {
    detail::Candidate best;
    for (std::size_t c = 0; c < n_chunks; ++c)
      if (proposals[c][i].valid) best.offer(proposals[c][i].boundary, proposals[c][i].distance);
    // |prefix - target| is unimodal along monotone prefixes, so the closest
    // admissible boundary is the clamp of the unconstrained one.
    const std::size_t lo = prev + 1;
    const std::size_t hi = nb - (parts - 1 - i);
    std::size_t b = std::clamp(best.valid ? best.boundary : lo, lo, hi);
    if (best.valid && best.boundary > hi)
      while (b > lo && prefix[b - 1] == prefix[b]) --b;  // earliest of an equal-distance plateau
    out.cut_bins.push_back(b);
    prev = b;
  }

  std::vector<std::size_t> edges{0};
  edges.insert(edges.end(), out.cut_bins.begin(), out.cut_bins.end());
  edges.push_back(nb);
  out.subdomain_weights.resize(parts);
  std::vector<std::pair<ElementId, int>> assign;
  for (std::size_t p = 0; p < parts; ++p) {
    out.subdomain_weights[p] = seq.to_real(prefix[edges[p + 1]] - prefix[edges[p]]);
    for (std::size_t b = edges[p]; b < edges[p + 1]; ++b)
      for (auto id : seq.bins()[b].element_ids) assign.emplace_back(id, static_cast<int>(p));
  }
  std::sort(assign.begin(), assign.end());
  out.element_ids.reserve(assign.size());
  out.assignment.reserve(assign.size());
  for (const auto& [id, p] : assign) {
    out.element_ids.push_back(id);
    out.assignment.push_back(p);
  }
  return out;
}

inline Partition split_1d(const BinSequence& seq, int n_parts, std::span<const double> coeffs) {
  return split_1d_chunked(seq, n_parts, coeffs, 1);
}

inline Partition partition_chunked(const Mesh& mesh, const SfcConfig& cfg, int n_parts, std::span<const double> coeffs,
                                   std::size_t n_chunks) {
  return split_1d_chunked(project_to_bins(mesh, cfg), n_parts, coeffs, n_chunks);
}

inline std::vector<double> unit_coefficients(int n_parts) {
  return std::vector<double>(static_cast<std::size_t>(std::max(n_parts, 0)), 1.0);
}

// Partition export:  "part 1 <P> <n_elements>" then "<element_id> <subdomain>"
// with 1-based subdomains, ascending element id.
inline void write_partition(std::ostream& os, const Partition& p) {
  os << "part 1 " << p.n_parts << ' ' << p.element_ids.size() << '\n';
  for (std::size_t i = 0; i < p.element_ids.size(); ++i) os << p.element_ids[i] << ' ' << p.assignment[i] + 1 << '\n';
}

inline nlohmann::json partition_sidecar(const Partition& p) {
  return {{"cut_bins", p.cut_bins}, {"subdomain_weights", p.subdomain_weights}};
}

}  // namespace coexbal
