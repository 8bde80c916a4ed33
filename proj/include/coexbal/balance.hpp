#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "mesh.hpp"
#include "sfc.hpp"

namespace coexbal {

enum class Phase { ElementAssembly, BoundaryAssembly, Solver };

constexpr std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::ElementAssembly: return "element_assembly";
    case Phase::BoundaryAssembly: return "boundary_assembly";
    case Phase::Solver: return "solver";
  }
  return "?";
}

struct TimingSample {
  int iteration = 1;
  std::vector<double> times;  // seconds, one per rank
  Phase phase = Phase::ElementAssembly;

  void validate() const {
    if (times.empty()) throw InvalidArgument("timing sample has no ranks");
    for (double t : times)
      if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("rank times must be positive and finite");
  }
};

struct BalanceMetrics {
  double mean = 0.0;             // arithmetic mean of rank times
  double imbalance = 1.0;        // max / mean
  double lb = 1.0;               // mean / max
  double max_deviation = 0.0;    // max |t_k - mean|
  std::vector<double> per_rank;  // t_k / mean
  std::vector<double> deviations;
};

inline BalanceMetrics compute_metrics(const TimingSample& sample) {
  sample.validate();
  BalanceMetrics m;
  const double n = static_cast<double>(sample.times.size());
  m.mean = std::accumulate(sample.times.begin(), sample.times.end(), 0.0) / n;
  const double max_t = *std::max_element(sample.times.begin(), sample.times.end());
  m.imbalance = max_t / m.mean;
  m.lb = m.mean / max_t;
  m.per_rank.reserve(sample.times.size());
  m.deviations.reserve(sample.times.size());
  for (double t : sample.times) {
    m.per_rank.push_back(t / m.mean);
    m.deviations.push_back(std::abs(t - m.mean));
    m.max_deviation = std::max(m.max_deviation, m.deviations.back());
  }
  return m;
}

enum class RegressionMode { SLR, WLR };

constexpr std::string_view regression_name(RegressionMode m) { return m == RegressionMode::SLR ? "slr" : "wlr"; }

// One observation at a splitting point: cumulative coefficient (x) against
// normalized cumulative time (y).
struct Observation {
  double cumulative_coeff = 0.0;
  double normalized_time = 0.0;
};

struct RegressionFit {
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t n_obs = 0;
  bool degenerate = false;
};

// Weighted least-squares line through the observations plus an anchor at
// (0, 0) of weight 1. Under WLR, observation k (1-based, oldest first) has
// weight growth^(k-1); SLR weighs everything 1.
inline RegressionFit fit(std::span<const Observation> history, RegressionMode mode, double wlr_growth = 1.5) {
  if (history.empty()) throw InvalidArgument("regression needs at least one observation");
  double sw = 1.0, sx = 0.0, sy = 0.0;
  double w = 1.0;
  for (const auto& o : history) {
    sw += w;
    sx += w * o.cumulative_coeff;
    sy += w * o.normalized_time;
    if (mode == RegressionMode::WLR) w *= wlr_growth;
  }
  const double mx = sx / sw, my = sy / sw;
  // Centered second moments; the anchor contributes (0 - mx), (0 - my).
  double sxx = mx * mx, sxy = mx * my;
  w = 1.0;
  for (const auto& o : history) {
    const double dx = o.cumulative_coeff - mx;
    sxx += w * dx * dx;
    sxy += w * dx * (o.normalized_time - my);
    if (mode == RegressionMode::WLR) w *= wlr_growth;
  }
  RegressionFit f;
  f.n_obs = history.size();
  if (sxx / sw < 1e-12) {
    f.degenerate = true;
    return f;
  }
  f.beta = sxy / sxx;
  f.alpha = my - f.beta * mx;
  return f;
}

// Per-splitting-point observation history and the current coefficients.
struct CorrectionState {
  int n_parts = 1;
  std::vector<std::vector<Observation>> history;  // index i-1 for splitting point i
  std::vector<double> cumulative;                 // size P+1, front 0, back P
  RegressionMode mode = RegressionMode::WLR;
  double wlr_growth = 1.5;
  std::vector<int> frozen_points;  // splitting points that kept their value at the last update

  static CorrectionState initial(int n_parts, RegressionMode mode = RegressionMode::WLR, double wlr_growth = 1.5) {
    if (n_parts < 1) throw InvalidArgument("number of parts must be >= 1");
    if (!(wlr_growth > 0.0)) throw InvalidArgument("WLR growth must be positive");
    CorrectionState s;
    s.n_parts = n_parts;
    s.history.resize(static_cast<std::size_t>(n_parts - 1));
    s.cumulative.resize(static_cast<std::size_t>(n_parts) + 1);
    std::iota(s.cumulative.begin(), s.cumulative.end(), 0.0);
    s.mode = mode;
    s.wlr_growth = wlr_growth;
    return s;
  }

  std::vector<double> coefficients() const {
    std::vector<double> lambda(static_cast<std::size_t>(n_parts));
    for (std::size_t i = 0; i < lambda.size(); ++i) lambda[i] = cumulative[i + 1] - cumulative[i];
    return lambda;
  }
};

inline constexpr double kMinCoefficientGap = 0.01;
inline constexpr double kMinSlope = 1e-9;

inline CorrectionState observe(CorrectionState state, const TimingSample& sample) {
  sample.validate();
  if (sample.times.size() != static_cast<std::size_t>(state.n_parts))
    throw InvalidArgument("timing sample size does not match the number of parts");
  const double mean = std::accumulate(sample.times.begin(), sample.times.end(), 0.0) / state.n_parts;
  double running = 0.0;
  for (int i = 1; i < state.n_parts; ++i) {
    running += sample.times[static_cast<std::size_t>(i - 1)];
    state.history[static_cast<std::size_t>(i - 1)].push_back(
        {state.cumulative[static_cast<std::size_t>(i)], running / mean});
  }
  return state;
}

// Forward then backward clamp so that 0 = L_0 < L_1 < ... < L_P = P with
// every gap >= min_gap. Requires P * min_gap <= P.
inline void project_monotone(std::vector<double>& cumulative, double min_gap = kMinCoefficientGap) {
  const std::size_t n = cumulative.size() - 1;
  cumulative.front() = 0.0;
  cumulative.back() = static_cast<double>(n);
  for (std::size_t i = 1; i < n; ++i) cumulative[i] = std::max(cumulative[i], cumulative[i - 1] + min_gap);
  for (std::size_t i = n - 1; i >= 1; --i) cumulative[i] = std::min(cumulative[i], cumulative[i + 1] - min_gap);
}

// New cumulative coefficients from each splitting point's regression line
// cut with y = i. Points with a degenerate or non-increasing fit keep their
// previous value and are listed in frozen_points.
inline CorrectionState update_coefficients(CorrectionState state) {
  state.frozen_points.clear();
  std::vector<double> next = state.cumulative;
  for (int i = 1; i < state.n_parts; ++i) {
    const auto& hist = state.history[static_cast<std::size_t>(i - 1)];
    if (hist.empty()) throw InvalidArgument("splitting point has no observations");
    const RegressionFit f = fit(hist, state.mode, state.wlr_growth);
    const double proposal = (i - f.alpha) / f.beta;
    if (f.degenerate || !(f.beta > kMinSlope) || !std::isfinite(proposal)) {
      state.frozen_points.push_back(i);
      continue;
    }
    next[static_cast<std::size_t>(i)] = proposal;
  }
  project_monotone(next);
  state.cumulative = std::move(next);
  return state;
}

struct IterationRecord {
  int k = 0;
  std::vector<double> lambda;
  TimingSample sample;
  BalanceMetrics metrics;
  Partition partition;
};

struct BalanceReport {
  std::vector<IterationRecord> iterations;
  bool converged = false;
  RegressionMode mode = RegressionMode::WLR;
  double tol = 0.02;

  const IterationRecord& final_iteration() const { return iterations.back(); }
};

struct BalanceOptions {
  RegressionMode mode = RegressionMode::WLR;
  double tol = 0.02;
  int max_iters = 20;
  double wlr_growth = 1.5;
  std::size_t n_chunks = 1;
};

// Partition -> time -> observe -> update until imbalance - 1 <= tol or
// max_iters partitions have been evaluated. The first partition uses unit
// coefficients. `timer(partition, k)` returns the element-assembly sample of
// iteration k.
template <class Timer>
BalanceReport run_balancing_loop(const Mesh& mesh, const SfcConfig& cfg, int n_parts, Timer&& timer,
                                 const BalanceOptions& opt = {}) {
  if (opt.max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (!(opt.tol >= 0.0)) throw InvalidArgument("tolerance must be >= 0");
  const BinSequence seq = project_to_bins(mesh, cfg);
  CorrectionState state = CorrectionState::initial(n_parts, opt.mode, opt.wlr_growth);
  BalanceReport report;
  report.mode = opt.mode;
  report.tol = opt.tol;
  for (int k = 1; k <= opt.max_iters; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.lambda = state.coefficients();
    rec.partition = split_1d_chunked(seq, n_parts, rec.lambda, opt.n_chunks);
    rec.sample = timer(static_cast<const Partition&>(rec.partition), k);
    if (rec.sample.phase != Phase::ElementAssembly)
      throw InvalidArgument("balancing keys on element-assembly timings");
    rec.sample.iteration = k;
    rec.metrics = compute_metrics(rec.sample);
    const bool done = rec.metrics.imbalance - 1.0 <= opt.tol;
    const TimingSample sample = rec.sample;
    report.iterations.push_back(std::move(rec));
    if (done) {
      report.converged = true;
      break;
    }
    if (k == opt.max_iters) break;
    state = update_coefficients(observe(std::move(state), sample));
  }
  return report;
}

}  // namespace coexbal
