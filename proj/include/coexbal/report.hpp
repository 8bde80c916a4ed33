#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "assembly.hpp"
#include "balance.hpp"
#include "mesh.hpp"

namespace coexbal {

inline constexpr std::string_view kVersion = "1.0.0";

// Resolved parameters of one run. No timestamps or host data, so reruns with
// the same flags serialize identically.
inline nlohmann::json make_manifest(std::string_view command, nlohmann::json parameters) {
  return {{"tool", "coexbal"}, {"version", kVersion}, {"command", command}, {"parameters", std::move(parameters)}};
}

struct ReportExtras {
  std::vector<std::vector<double>> solver_times;  // per iteration, optional
  std::optional<std::string> final_partition_file;
};

inline nlohmann::json balance_report_json(const BalanceReport& report, const nlohmann::json& manifest,
                                          const ReportExtras& extras = {}) {
  nlohmann::json iterations = nlohmann::json::array();
  for (std::size_t n = 0; n < report.iterations.size(); ++n) {
    const auto& it = report.iterations[n];
    nlohmann::json rec = {{"k", it.k},
                          {"lambda", it.lambda},
                          {"times", it.sample.times},
                          {"mean", it.metrics.mean},
                          {"imbalance", it.metrics.imbalance},
                          {"lb", it.metrics.lb},
                          {"max_dev", it.metrics.max_deviation},
                          {"subdomain_weights", it.partition.subdomain_weights}};
    if (n < extras.solver_times.size()) rec["solver_times"] = extras.solver_times[n];
    iterations.push_back(std::move(rec));
  }
  nlohmann::json final_ref = nullptr;
  if (!report.iterations.empty()) {
    final_ref = {{"k", report.final_iteration().k}};
    final_ref["file"] = extras.final_partition_file ? nlohmann::json(*extras.final_partition_file) : nlohmann::json(nullptr);
  }
  return {{"manifest", manifest},
          {"regression", regression_name(report.mode)},
          {"tol", report.tol},
          {"iterations", std::move(iterations)},
          {"converged", report.converged},
          {"final_partition_ref", std::move(final_ref)}};
}

// Flat convergence table: k,rank,time,I_k (rank is 1-based).
inline void write_convergence_csv(std::ostream& os, const BalanceReport& report) {
  os << "k,rank,time,I_k\n";
  for (const auto& it : report.iterations)
    for (std::size_t r = 0; r < it.sample.times.size(); ++r)
      os << it.k << ',' << r + 1 << ',' << detail::format_double(it.sample.times[r]) << ','
         << detail::format_double(it.metrics.per_rank[r]) << '\n';
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "pack_size,median_seconds,speedup\n";
  for (const auto& r : rows)
    os << r.pack_size << ',' << detail::format_double(r.median_seconds) << ',' << detail::format_double(r.speedup)
       << '\n';
}

}  // namespace coexbal
