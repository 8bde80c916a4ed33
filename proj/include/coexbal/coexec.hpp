#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "balance.hpp"
#include "error.hpp"
#include "random.hpp"
#include "sfc.hpp"

namespace coexbal {

enum class DeviceClass { CpuCore, Gpu };

constexpr std::string_view device_class_name(DeviceClass c) { return c == DeviceClass::Gpu ? "gpu" : "cpu"; }

// Throughput model of one device. With saturation_half > 0 the effective
// throughput grows with the load, theta * load / (load + h).
struct DeviceProfile {
  int id = 0;
  DeviceClass device_class = DeviceClass::CpuCore;
  double throughput = 1.0;  // weight units per second
  double fixed_cost = 0.0;  // seconds
  double saturation_half = 0.0;
  int node_id = 0;
  double noise_sigma = 0.0;
  int gpu_index = -1;  // node-local GPU for GPU ranks, -1 otherwise

  void validate() const {
    if (!(throughput > 0.0) || !std::isfinite(throughput)) throw InvalidArgument("device throughput must be positive");
    if (!(fixed_cost >= 0.0) || !(saturation_half >= 0.0) || !(noise_sigma >= 0.0))
      throw InvalidArgument("device cost parameters must be non-negative");
  }

  double effective_throughput(double load) const {
    if (saturation_half > 0.0) return load > 0.0 ? throughput * load / (load + saturation_half) : 0.0;
    return throughput;
  }

  // Noise-free time to process `load`.
  double time_for(double load) const {
    if (load <= 0.0) return fixed_cost;
    return load / effective_throughput(load) + fixed_cost;
  }
};

// Rank -> device mapping. gpus_per_node records the physical GPUs so that
// the solver-phase model knows which ranks share a GPU.
struct ExecutionPlan {
  std::vector<DeviceProfile> ranks;
  std::vector<int> gpus_per_node;
  int cores_per_gpu_rank = 2;

  std::size_t size() const { return ranks.size(); }

  void validate() const {
    if (ranks.empty()) throw InvalidArgument("execution plan has no ranks");
    if (cores_per_gpu_rank != 1 && cores_per_gpu_rank != 2) throw InvalidArgument("cores_per_gpu_rank must be 1 or 2");
    std::vector<int> gpu_ranks(gpus_per_node.size(), 0);
    for (const auto& r : ranks) {
      r.validate();
      if (r.node_id < 0 || static_cast<std::size_t>(r.node_id) >= gpus_per_node.size())
        throw InvalidArgument("rank mapped to unknown node");
      if (r.device_class == DeviceClass::Gpu) {
        if (r.gpu_index < 0 || r.gpu_index >= gpus_per_node[static_cast<std::size_t>(r.node_id)])
          throw InvalidArgument("GPU rank mapped to a nonexistent GPU");
        ++gpu_ranks[static_cast<std::size_t>(r.node_id)];
      }
    }
    for (std::size_t n = 0; n < gpus_per_node.size(); ++n)
      if (gpu_ranks[n] > gpus_per_node[n]) throw InvalidArgument("more GPU ranks than GPUs on a node");
  }
};

// Rank times for a partition: t_i = load_i / theta_eff(load_i) + c_i, times
// exp(g * sigma_i) where g is the standard normal draw for (seed, iteration, rank).
inline TimingSample simulate_times(const Partition& partition, const ExecutionPlan& plan, std::uint64_t seed,
                                   int iteration = 1) {
  if (static_cast<std::size_t>(partition.n_parts) != plan.size() || partition.subdomain_weights.size() != plan.size())
    throw InvalidArgument("partition size does not match the execution plan");
  TimingSample s;
  s.iteration = iteration;
  s.phase = Phase::ElementAssembly;
  s.times.resize(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& dev = plan.ranks[i];
    double t = dev.time_for(partition.subdomain_weights[i]);
    if (dev.noise_sigma > 0.0)
      t *= std::exp(dev.noise_sigma * counter_normal(seed, static_cast<std::uint64_t>(iteration), i));
    s.times[i] = t;
  }
  return s;
}

// Solver phase: every rank solves on a GPU of its node. CPU ranks are spread
// round-robin over the node's GPUs; the time reported for a rank is the
// summed load of the group sharing its GPU over the GPU throughput. Nodes
// without GPUs solve on the cores.
inline TimingSample simulate_solver_times(const Partition& partition, const ExecutionPlan& plan) {
  if (partition.subdomain_weights.size() != plan.size())
    throw InvalidArgument("partition size does not match the execution plan");
  const std::size_t n_nodes = plan.gpus_per_node.size();
  std::vector<int> gpu_of(plan.size(), -1);
  std::vector<int> next_gpu(n_nodes, 0);
  std::vector<std::vector<double>> group_load(n_nodes);
  std::vector<std::vector<double>> group_theta(n_nodes);
  for (std::size_t n = 0; n < n_nodes; ++n) {
    group_load[n].assign(static_cast<std::size_t>(plan.gpus_per_node[n]), 0.0);
    group_theta[n].assign(static_cast<std::size_t>(plan.gpus_per_node[n]), 0.0);
  }
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& r = plan.ranks[i];
    const auto node = static_cast<std::size_t>(r.node_id);
    if (plan.gpus_per_node[node] == 0) continue;
    int g = r.gpu_index;
    if (g < 0) g = next_gpu[node]++ % plan.gpus_per_node[node];
    gpu_of[i] = g;
    group_load[node][static_cast<std::size_t>(g)] += partition.subdomain_weights[i];
    if (r.device_class == DeviceClass::Gpu) group_theta[node][static_cast<std::size_t>(g)] = r.throughput;
  }
  TimingSample s;
  s.phase = Phase::Solver;
  s.times.resize(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& r = plan.ranks[i];
    const auto node = static_cast<std::size_t>(r.node_id);
    if (gpu_of[i] < 0) {
      s.times[i] = r.time_for(partition.subdomain_weights[i]);
      continue;
    }
    const auto g = static_cast<std::size_t>(gpu_of[i]);
    // GPUs without an assembly rank of their own run at the node's fastest GPU throughput.
    double theta = group_theta[node][g];
    if (theta <= 0.0)
      for (double t : group_theta[node]) theta = std::max(theta, t);
    if (theta <= 0.0) theta = r.throughput;
    s.times[i] = group_load[node][g] / theta;
  }
  return s;
}

struct NodeSpec {
  int cores = 20;
  int gpus = 0;
  int gpu_ranks = 0;
  int cores_per_gpu_rank = 2;
  double theta_core = 1.0;
  double theta_gpu = 20.0;
  double scale = 1.0;
  double noise_sigma = 0.0;
  double saturation_half = 0.0;
  double fixed_cost = 0.0;
};

// Ranks are laid out node by node, CPU ranks first. A node hosts
// cores - cores_per_gpu_rank * gpu_ranks CPU ranks plus gpu_ranks GPU ranks;
// every throughput on the node is multiplied by its scale.
inline ExecutionPlan build_plan(std::span<const NodeSpec> nodes) {
  if (nodes.empty()) throw InvalidArgument("plan needs at least one node");
  ExecutionPlan plan;
  plan.cores_per_gpu_rank = nodes.front().cores_per_gpu_rank;
  int id = 0;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const auto& node = nodes[n];
    if (node.cores < 0 || node.gpus < 0 || node.gpu_ranks < 0) throw InvalidArgument("node counts must be non-negative");
    if (node.gpu_ranks > node.gpus) throw InvalidArgument("gpu_ranks exceeds gpus on a node");
    if (node.cores_per_gpu_rank != plan.cores_per_gpu_rank)
      throw InvalidArgument("cores_per_gpu_rank must be the same on every node");
    if (!(node.scale > 0.0)) throw InvalidArgument("node scale must be positive");
    const int cpu_ranks = node.cores - node.cores_per_gpu_rank * node.gpu_ranks;
    if (cpu_ranks < 0) throw InvalidArgument("negative CPU rank count on node " + std::to_string(n));
    plan.gpus_per_node.push_back(node.gpus);
    auto add = [&](DeviceClass cls, double theta, int gpu_index) {
      DeviceProfile d;
      d.id = id++;
      d.device_class = cls;
      d.throughput = theta * node.scale;
      d.fixed_cost = node.fixed_cost;
      d.saturation_half = node.saturation_half;
      d.node_id = static_cast<int>(n);
      d.noise_sigma = node.noise_sigma;
      d.gpu_index = gpu_index;
      plan.ranks.push_back(d);
    };
    for (int c = 0; c < cpu_ranks; ++c) add(DeviceClass::CpuCore, node.theta_core, -1);
    for (int g = 0; g < node.gpu_ranks; ++g) add(DeviceClass::Gpu, node.theta_gpu, g);
  }
  plan.validate();
  return plan;
}

// Uniform nodes with per-node throughput scales.
inline ExecutionPlan build_plan(int n_nodes, int cores_per_node, int gpus_per_node, int gpu_ranks_per_node,
                                int cores_per_gpu_rank, double theta_core, double theta_gpu,
                                std::span<const double> per_node_scale) {
  if (n_nodes < 1) throw InvalidArgument("plan needs at least one node");
  if (!per_node_scale.empty() && per_node_scale.size() != static_cast<std::size_t>(n_nodes))
    throw InvalidArgument("one throughput scale per node expected");
  std::vector<NodeSpec> nodes(static_cast<std::size_t>(n_nodes));
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    nodes[n] = {cores_per_node, gpus_per_node, gpu_ranks_per_node, cores_per_gpu_rank,
                theta_core,     theta_gpu,     per_node_scale.empty() ? 1.0 : per_node_scale[n]};
  }
  return build_plan(nodes);
}

// Plan config: {"nodes": [{cores, gpus, gpu_ranks, cores_per_gpu_rank, theta_core,
// theta_gpu, scale, noise_sigma, saturation_half, fixed_cost}, ...]}. Missing
// fields take the NodeSpec defaults.
inline ExecutionPlan plan_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("nodes") || !doc.at("nodes").is_array())
    throw ParseError("plan: expected object with a 'nodes' array");
  static constexpr std::array<std::string_view, 10> known = {
      "cores", "gpus", "gpu_ranks", "cores_per_gpu_rank", "theta_core",
      "theta_gpu", "scale", "noise_sigma", "saturation_half", "fixed_cost"};
  std::vector<NodeSpec> nodes;
  const auto& arr = doc.at("nodes");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& n = arr[i];
    if (!n.is_object()) throw ParseError("plan: node entry must be an object", i + 1);
    for (const auto& [key, _] : n.items())
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw ParseError("plan: unknown node field '" + key + "'", i + 1);
    NodeSpec s;
    try {
      s.cores = n.value("cores", s.cores);
      s.gpus = n.value("gpus", s.gpus);
      s.gpu_ranks = n.value("gpu_ranks", s.gpu_ranks);
      s.cores_per_gpu_rank = n.value("cores_per_gpu_rank", s.cores_per_gpu_rank);
      s.theta_core = n.value("theta_core", s.theta_core);
      s.theta_gpu = n.value("theta_gpu", s.theta_gpu);
      s.scale = n.value("scale", s.scale);
      s.noise_sigma = n.value("noise_sigma", s.noise_sigma);
      s.saturation_half = n.value("saturation_half", s.saturation_half);
      s.fixed_cost = n.value("fixed_cost", s.fixed_cost);
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(std::string("plan: bad field type: ") + ex.what(), i + 1);
    }
    nodes.push_back(s);
  }
  return build_plan(nodes);
}

// ---------------------------------------------------------------------------
// Closed-form efficiency of a perfectly balanced kernel on n_core cores and
// n_gpu GPUs, one GPU being worth s cores.

struct EfficiencyParams {
  double n_core = 1.0;
  double n_gpu = 0.0;
  double s = 1.0;
  double r = 0.0;  // n_gpu / n_core

  static EfficiencyParams from_counts(int n_core, int n_gpu, double speedup) {
    if (n_core < 1 || n_gpu < 0) throw InvalidArgument("need n_core >= 1 and n_gpu >= 0");
    return from_ratio(speedup, static_cast<double>(n_gpu) / n_core, n_core);
  }

  static EfficiencyParams from_ratio(double speedup, double ratio, double n_core = 1.0) {
    if (!(speedup > 0.0)) throw InvalidArgument("speedup must be positive");
    if (!(ratio >= 0.0)) throw InvalidArgument("GPU-per-core ratio must be non-negative");
    return {n_core, ratio * n_core, speedup, ratio};
  }
};

namespace detail {
inline void check(const EfficiencyParams& p) {
  if (!(p.r >= 0.0)) throw InvalidArgument("GPU-per-core ratio must be non-negative");
  if (!(p.s > 0.0)) throw InvalidArgument("speedup must be positive");
}
}  // namespace detail

inline double eff_gpu(const EfficiencyParams& p) {
  detail::check(p);
  return p.s * p.r / (1.0 + p.s * p.r);
}

inline double eff_core(const EfficiencyParams& p) {
  detail::check(p);
  return 1.0 / (1.0 + p.s * p.r);
}

// One host core idles per GPU.
inline double eff_coex1(const EfficiencyParams& p) {
  detail::check(p);
  return (1.0 + (p.s - 1.0) * p.r) / (1.0 + p.s * p.r);
}

// Two host cores idle per GPU. Only meaningful for s >= 2.
inline double eff_coex2(const EfficiencyParams& p) {
  detail::check(p);
  return (1.0 + (p.s - 2.0) * p.r) / (1.0 + p.s * p.r);
}

inline bool coex2_meaningful(const EfficiencyParams& p) { return p.s >= 2.0; }

inline double eff_coex(const EfficiencyParams& p, int cores_per_gpu) {
  if (cores_per_gpu == 1) return eff_coex1(p);
  if (cores_per_gpu == 2) return eff_coex2(p);
  throw InvalidArgument("cores per GPU must be 1 or 2");
}

// Relative elapsed-time reduction of co-execution against GPU-only runs,
// with time inversely proportional to efficiency.
inline double predicted_time_reduction(const EfficiencyParams& p, int cores_per_gpu) {
  const double coex = eff_coex(p, cores_per_gpu);
  if (!(coex > 0.0)) throw InvalidArgument("co-execution efficiency is not positive");
  return 1.0 - eff_gpu(p) / coex;
}

}  // namespace coexbal
