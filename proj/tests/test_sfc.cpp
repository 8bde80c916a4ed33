#include <gtest/gtest.h>

#include <coexbal/mesh.hpp>
#include <coexbal/sfc.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

using namespace coexbal;

namespace {

int manhattan(const Cell& a, const Cell& b) {
  int d = 0;
  for (int i = 0; i < 3; ++i) d += std::abs(static_cast<int>(a[i]) - static_cast<int>(b[i]));
  return d;
}

// Independent oracle: for each splitting point, scan every admissible
// boundary and keep the one with the smallest |prefix - target|, earliest on
// ties. Weights are dyadic so prefix sums and targets are exact in double.
std::vector<std::size_t> brute_force_cuts(const std::vector<double>& w, const std::vector<double>& lambda) {
  const std::size_t nb = w.size(), P = lambda.size();
  std::vector<double> prefix(nb + 1, 0.0);
  for (std::size_t b = 0; b < nb; ++b) prefix[b + 1] = prefix[b] + w[b];
  const double W = prefix[nb];
  std::vector<std::size_t> cuts;
  std::size_t prev = 0;
  double lam = 0.0;
  for (std::size_t i = 0; i + 1 < P; ++i) {
    lam += lambda[i];
    const double target = lam * W / static_cast<double>(P);
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t b = prev + 1; b <= nb - (P - 1 - i); ++b) {
      const double d = std::abs(prefix[b] - target);
      if (d < best_d) {
        best_d = d;
        best = b;
      }
    }
    cuts.push_back(best);
    prev = best;
  }
  return cuts;
}

std::vector<double> weights_of(const Partition& p, const std::vector<double>& w) {
  std::vector<double> out;
  std::size_t lo = 0;
  for (std::size_t i = 0; i <= p.cut_bins.size(); ++i) {
    const std::size_t hi = i < p.cut_bins.size() ? p.cut_bins[i] : w.size();
    out.push_back(std::accumulate(w.begin() + static_cast<std::ptrdiff_t>(lo), w.begin() + static_cast<std::ptrdiff_t>(hi), 0.0));
    lo = hi;
  }
  return out;
}

std::vector<double> random_lambda(std::mt19937_64& eng, std::size_t P) {
  std::vector<double> lam(P);
  for (auto& l : lam) l = 0.25 + 2.0 * uniform01(eng);
  const double s = std::accumulate(lam.begin(), lam.end(), 0.0);
  for (auto& l : lam) l *= static_cast<double>(P) / s;
  return lam;
}

}  // namespace

TEST(SfcConfig, LevelRange) {
  EXPECT_THROW(SfcConfig{0}.validate(), InvalidArgument);
  EXPECT_THROW(SfcConfig{21}.validate(), InvalidArgument);
  EXPECT_NO_THROW(SfcConfig{20}.validate());
  EXPECT_EQ(SfcConfig{}.level, 8);
}

TEST(Hilbert, OriginIsKeyZero) {
  for (int L = 1; L <= 20; ++L) EXPECT_EQ(hilbert_key({0, 0, 0}, L), 0u);
}

TEST(Hilbert, ExhaustiveBijectionAndContinuity) {
  for (int L = 1; L <= 3; ++L) {
    const std::uint32_t n = 1u << L;
    std::vector<int> hits(std::size_t{1} << (3 * L), 0);
    for (std::uint32_t x = 0; x < n; ++x)
      for (std::uint32_t y = 0; y < n; ++y)
        for (std::uint32_t z = 0; z < n; ++z) {
          const Cell c{x, y, z};
          const SfcKey k = hilbert_key(c, L);
          ASSERT_LT(k, hits.size());
          ++hits[k];
          EXPECT_EQ(hilbert_decode(k, L), c);
        }
    for (int h : hits) EXPECT_EQ(h, 1);
    for (SfcKey k = 0; k + 1 < hits.size(); ++k)
      EXPECT_EQ(manhattan(hilbert_decode(k, L), hilbert_decode(k + 1, L)), 1) << "L=" << L << " key " << k;
  }
}

TEST(Hilbert, LevelOnePathTable) {
  // The 8 octants in curve order form a Hamiltonian path on the cube graph.
  std::set<Cell> visited;
  for (SfcKey k = 0; k < 8; ++k) {
    visited.insert(hilbert_decode(k, 1));
    if (k) {
      EXPECT_EQ(manhattan(hilbert_decode(k - 1, 1), hilbert_decode(k, 1)), 1);
    }
  }
  EXPECT_EQ(visited.size(), 8u);
  // A Hilbert path starts and ends on adjacent corners, so the opposite
  // corner sits inside the path.
  EXPECT_EQ(manhattan(hilbert_decode(0, 1), hilbert_decode(7, 1)), 1);
  EXPECT_EQ(hilbert_key({1, 1, 1}, 1), 5u);
}

TEST(Hilbert, RejectsOutOfRange) {
  EXPECT_THROW(hilbert_key({4, 0, 0}, 2), InvalidArgument);
  EXPECT_THROW(hilbert_decode(64, 2), InvalidArgument);
  EXPECT_THROW(hilbert_key({0, 0, 0}, 0), InvalidArgument);
}

TEST(Hilbert, HighLevelRoundTrip) {
  std::mt19937_64 eng(5);
  for (int L : {8, 13, 20}) {
    for (int t = 0; t < 2000; ++t) {
      Cell c{};
      for (auto& v : c) v = static_cast<std::uint32_t>(eng() & ((1u << L) - 1));
      EXPECT_EQ(hilbert_decode(hilbert_key(c, L), L), c);
    }
  }
}

TEST(Hilbert, LocalityBeatsRowMajor) {
  constexpr int L = 4;
  constexpr std::uint32_t n = 1u << L;
  std::mt19937_64 eng(2024);
  std::set<Cell> cells;
  while (cells.size() < 800) cells.insert({static_cast<std::uint32_t>(eng() % n), static_cast<std::uint32_t>(eng() % n),
                                           static_cast<std::uint32_t>(eng() % n)});
  auto mean_step = [](const std::vector<Cell>& order) {
    double s = 0.0;
    for (std::size_t i = 1; i < order.size(); ++i) {
      double d2 = 0.0;
      for (int a = 0; a < 3; ++a) {
        const double d = static_cast<double>(order[i][a]) - static_cast<double>(order[i - 1][a]);
        d2 += d * d;
      }
      s += std::sqrt(d2);
    }
    return s / static_cast<double>(order.size() - 1);
  };
  std::vector<Cell> hilbert(cells.begin(), cells.end());
  std::sort(hilbert.begin(), hilbert.end(),
            [](const Cell& a, const Cell& b) { return hilbert_key(a, L) < hilbert_key(b, L); });
  std::vector<Cell> row_major(cells.begin(), cells.end());
  std::sort(row_major.begin(), row_major.end(), [](const Cell& a, const Cell& b) {
    return std::tie(a[2], a[1], a[0]) < std::tie(b[2], b[1], b[0]);
  });
  EXPECT_LE(mean_step(hilbert), mean_step(row_major));
}

TEST(ProjectToBins, OppositeCornersAtLevelOne) {
  const Mesh m({{0, ElementKind::Tetrahedron, {0, 0, 0}, 4}, {1, ElementKind::Hexahedron, {1, 1, 1}, 8}});
  const auto seq = project_to_bins(m, SfcConfig{1});
  ASSERT_EQ(seq.size(), 2u);
  EXPECT_EQ(seq.bins()[0].key, 0u);
  EXPECT_EQ(seq.bins()[1].key, hilbert_key({1, 1, 1}, 1));
  EXPECT_EQ(seq.bins()[1].element_ids, std::vector<ElementId>{1});
}

TEST(ProjectToBins, SingleCell) {
  std::vector<PartitionElement> els;
  for (int i = 0; i < 5; ++i) els.push_back({i, ElementKind::Prism, {0.3, 0.3, 0.3}, 6});
  const Mesh m(els);
  const auto seq = project_to_bins(m, SfcConfig{});
  ASSERT_EQ(seq.size(), 1u);
  EXPECT_EQ(seq.bins()[0].weight, m.total_weight());
  EXPECT_EQ(seq.bins()[0].element_ids.size(), 5u);
}

TEST(ProjectToBins, PermutationInvariant) {
  const Mesh m = generate_synthetic_mesh(3000, {0.4, 0.2, 0.2, 0.2}, 17, SpatialProfile::Clustered);
  std::vector<PartitionElement> shuffled(m.elements().begin(), m.elements().end());
  std::mt19937_64 eng(1);
  std::shuffle(shuffled.begin(), shuffled.end(), eng);
  const auto a = project_to_bins(m, SfcConfig{6});
  const auto b = project_to_bins(Mesh(shuffled), SfcConfig{6});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.bins()[i], b.bins()[i]);
}

TEST(ProjectToBins, KeysIncreaseAndWeightsSum) {
  const Mesh m = generate_synthetic_mesh(4000, {0.4, 0.2, 0.2, 0.2}, 2);
  const auto seq = project_to_bins(m, SfcConfig{3});
  double w = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) {
      EXPECT_LT(seq.bins()[i - 1].key, seq.bins()[i].key);
    }
    EXPECT_TRUE(std::is_sorted(seq.bins()[i].element_ids.begin(), seq.bins()[i].element_ids.end()));
    w += seq.bins()[i].weight;
    n += seq.bins()[i].element_ids.size();
  }
  EXPECT_EQ(n, m.size());
  EXPECT_NEAR(seq.total_weight(), m.total_weight(), 1e-12 * m.total_weight());
  EXPECT_NEAR(w, m.total_weight(), 1e-12 * m.total_weight());
}

TEST(Split, EvenHalving) {
  const std::vector<double> w{1, 1, 1, 1};
  const auto p = split_1d(BinSequence::from_weights(w), 2, std::vector<double>{1, 1});
  EXPECT_EQ(p.cut_bins, std::vector<std::size_t>{2});
  EXPECT_EQ(p.subdomain_weights, (std::vector<double>{2, 2}));
}

TEST(Split, ExactTargetHit) {
  const std::vector<double> w{3, 1, 1, 1};
  const auto p = split_1d(BinSequence::from_weights(w), 2, std::vector<double>{1, 1});
  EXPECT_EQ(p.cut_bins, std::vector<std::size_t>{1});
  EXPECT_EQ(p.subdomain_weights, (std::vector<double>{3, 3}));
}

TEST(Split, SkewedCoefficients) {
  const std::vector<double> w(8, 1.0);
  const auto p = split_1d(BinSequence::from_weights(w), 2, std::vector<double>{0.5, 1.5});
  EXPECT_EQ(p.cut_bins, std::vector<std::size_t>{2});
  EXPECT_EQ(p.subdomain_weights, (std::vector<double>{2, 6}));
}

TEST(Split, TieGoesToEarlierBoundary) {
  const std::vector<double> w{1, 2, 1};
  const auto p = split_1d(BinSequence::from_weights(w), 2, std::vector<double>{1, 1});
  EXPECT_EQ(p.cut_bins, std::vector<std::size_t>{1});
}

TEST(Split, Errors) {
  const std::vector<double> w{1, 1, 1};
  const auto seq = BinSequence::from_weights(w);
  EXPECT_THROW(split_1d(seq, 4, unit_coefficients(4)), InvalidArgument);
  EXPECT_THROW(split_1d(seq, 2, std::vector<double>{0.0, 2.0}), InvalidArgument);
  EXPECT_THROW(split_1d(seq, 2, std::vector<double>{-1.0, 3.0}), InvalidArgument);
  EXPECT_THROW(split_1d(seq, 2, std::vector<double>{1.0, 1.5}), InvalidArgument);
  EXPECT_THROW(split_1d(seq, 2, std::vector<double>{2.0}), InvalidArgument);
  try {
    split_1d(seq, 4, unit_coefficients(4));
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient granularity"), std::string::npos);
  }
}

TEST(Split, MatchesBruteForceOracle) {
  std::mt19937_64 eng(77);
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t nb = 2 + eng() % 99;
    const std::size_t P = 1 + eng() % std::min<std::size_t>(8, nb);
    std::vector<double> w(nb);
    for (auto& x : w) x = static_cast<double>(1 + eng() % 64) / 8.0;
    // Dyadic coefficients keep the targets exact.
    std::vector<double> lam(P, 1.0);
    if (P > 1 && inst % 2) {
      for (std::size_t i = 0; i + 1 < P; i += 2) {
        lam[i] = 0.5;
        lam[i + 1] = 1.5;
      }
    }
    const auto p = split_1d(BinSequence::from_weights(w), static_cast<int>(P), lam);
    EXPECT_EQ(p.cut_bins, brute_force_cuts(w, lam)) << "instance " << inst;
    EXPECT_EQ(p.subdomain_weights, weights_of(p, w));
  }
}

TEST(Split, NearOptimalForArbitraryReals) {
  std::mt19937_64 eng(4);
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t nb = 10 + eng() % 91;
    const std::size_t P = 2 + eng() % 7;
    std::vector<double> w(nb);
    for (auto& x : w) x = 0.1 + 9.9 * uniform01(eng);
    const auto lam = random_lambda(eng, P);
    const auto p = split_1d(BinSequence::from_weights(w), static_cast<int>(P), lam);
    const auto oracle = brute_force_cuts(w, lam);
    std::vector<double> prefix(nb + 1, 0.0);
    for (std::size_t b = 0; b < nb; ++b) prefix[b + 1] = prefix[b] + w[b];
    double lsum = 0.0;
    for (std::size_t i = 0; i + 1 < P; ++i) {
      lsum += lam[i];
      const double t = lsum * prefix[nb] / static_cast<double>(P);
      if (p.cut_bins[i] == oracle[i]) continue;
      // Only a rounding-level tie may differ.
      EXPECT_NEAR(std::abs(prefix[p.cut_bins[i]] - t), std::abs(prefix[oracle[i]] - t), 1e-9 * prefix[nb]);
    }
  }
}

TEST(Split, ConservationAtomicityAndNonEmptyParts) {
  const Mesh m = generate_synthetic_mesh(10000, {0.4, 0.2, 0.2, 0.2}, 42, SpatialProfile::Clustered);
  const auto seq = project_to_bins(m, SfcConfig{});
  std::mt19937_64 eng(3);
  for (int P : {1, 2, 7, 40, 256}) {
    const auto lam = random_lambda(eng, static_cast<std::size_t>(P));
    const auto p = split_1d(seq, P, lam);
    ASSERT_EQ(p.subdomain_weights.size(), static_cast<std::size_t>(P));
    ASSERT_EQ(p.cut_bins.size(), static_cast<std::size_t>(P - 1));
    EXPECT_TRUE(std::adjacent_find(p.cut_bins.begin(), p.cut_bins.end(), std::greater_equal<>()) == p.cut_bins.end());
    const double total = std::accumulate(p.subdomain_weights.begin(), p.subdomain_weights.end(), 0.0);
    EXPECT_NEAR(total, m.total_weight(), 1e-12 * m.total_weight());
    for (double w : p.subdomain_weights) EXPECT_GT(w, 0.0);
    for (std::size_t b = 0; b < seq.size(); ++b) {
      const auto& ids = seq.bins()[b].element_ids;
      const int owner = p.subdomain_of(ids.front());
      for (auto id : ids) EXPECT_EQ(p.subdomain_of(id), owner);
    }
    ASSERT_EQ(p.element_ids.size(), m.size());
  }
}

TEST(Split, UnitCoefficientBalanceBound) {
  for (int level : {3, 5, 8}) {
    const Mesh m = generate_synthetic_mesh(6000, kAllTets, static_cast<std::uint64_t>(level));
    const auto seq = project_to_bins(m, SfcConfig{level});
    double max_bin = 0.0;
    for (const auto& b : seq.bins()) max_bin = std::max(max_bin, b.weight);
    for (int P : {2, 8, 33}) {
      const auto p = split_1d(seq, P, unit_coefficients(P));
      const auto [lo, hi] = std::minmax_element(p.subdomain_weights.begin(), p.subdomain_weights.end());
      EXPECT_LE(*hi - *lo, max_bin) << "level " << level << " P " << P;
    }
  }
}

TEST(PartitionChunked, ChunkCountInvariance) {
  const Mesh m = generate_synthetic_mesh(10000, {0.4, 0.2, 0.2, 0.2}, 42);
  std::mt19937_64 eng(9);
  for (int P : {3, 40, 128}) {
    const auto lam = random_lambda(eng, static_cast<std::size_t>(P));
    const auto ref = partition_chunked(m, SfcConfig{}, P, lam, 1);
    for (std::size_t chunks : {2u, 3u, 8u, 31u, 1000u}) EXPECT_EQ(partition_chunked(m, SfcConfig{}, P, lam, chunks), ref);
  }
}

TEST(PartitionChunked, MoreChunksThanBins) {
  const std::vector<double> w{1, 2, 3, 4, 5};
  const auto seq = BinSequence::from_weights(w);
  EXPECT_EQ(split_1d_chunked(seq, 3, unit_coefficients(3), 50), split_1d_chunked(seq, 3, unit_coefficients(3), 5));
  EXPECT_THROW(split_1d_chunked(seq, 3, unit_coefficients(3), 0), InvalidArgument);
}

TEST(PartitionChunked, SingleBinSinglePart) {
  const Mesh m({{4, ElementKind::Hexahedron, {0.2, 0.2, 0.2}, 8}});
  const auto p = partition_chunked(m, SfcConfig{}, 1, unit_coefficients(1), 8);
  EXPECT_TRUE(p.cut_bins.empty());
  EXPECT_EQ(p.subdomain_weights, std::vector<double>{8});
  EXPECT_EQ(p.subdomain_of(4), 0);
}

TEST(PartitionChunked, ExactAtExtremeWeightRanges) {
  // Weights spanning many orders of magnitude: the fixed-point prefix sums
  // keep chunked scans identical.
  std::mt19937_64 eng(31);
  std::vector<double> w(500);
  for (auto& x : w) x = std::ldexp(1.0 + uniform01(eng), static_cast<int>(eng() % 40) - 20);
  const auto seq = BinSequence::from_weights(w);
  const auto lam = random_lambda(eng, 17);
  const auto ref = split_1d(seq, 17, lam);
  for (std::size_t c : {2u, 7u, 64u}) EXPECT_EQ(split_1d_chunked(seq, 17, lam, c), ref);
}

TEST(PartitionExport, TextAndSidecar) {
  const std::vector<double> w{1, 1, 1, 1};
  std::vector<Bin> bins;
  for (std::size_t i = 0; i < w.size(); ++i) bins.push_back({i * 3, w[i], {static_cast<ElementId>(10 - i)}});
  const auto p = split_1d(BinSequence(bins), 2, unit_coefficients(2));
  std::ostringstream os;
  write_partition(os, p);
  EXPECT_EQ(os.str(), "part 1 2 4\n7 2\n8 2\n9 1\n10 1\n");
  const auto j = partition_sidecar(p);
  EXPECT_EQ(j.at("cut_bins"), nlohmann::json::array({2}));
  EXPECT_EQ(j.at("subdomain_weights"), nlohmann::json::array({2.0, 2.0}));
}
