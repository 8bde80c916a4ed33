// coexbal command-line front end.
//
// Exit codes: 0 ok, 1 internal error, 2 usage, 3 I/O, 4 malformed input,
// 5 precondition violated. Errors are printed to stderr as one line:
//   error code=<n> kind=<usage|io|parse|invalid|internal> msg="<text>"

#include <CLI11.hpp>
#include <json.hpp>

#include <coexbal/coexbal.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace coexbal;

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kIo = 3, kParse = 4, kInvalid = 5 };

bool g_verbose = false;

void log_info(const std::string& msg) {
  if (g_verbose) std::cerr << "info: " << msg << '\n';
}

int fail(ExitCode code, std::string_view kind, std::string msg) {
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  std::string quoted;
  for (char c : msg) {
    if (c == '"' || c == '\\') quoted += '\\';
    quoted += c;
  }
  std::cerr << "error code=" << code << " kind=" << kind << " msg=\"" << quoted << "\"\n";
  return code;
}

std::vector<double> parse_real_list(const std::string& text, std::string_view what) {
  std::vector<double> out;
  std::string s = text;
  for (char& c : s)
    if (c == ',' || c == '\n') c = ' ';
  for (auto tok : detail::split_ws(s)) {
    double v = 0.0;
    if (!detail::parse_number(tok, v)) throw InvalidArgument(std::string(what) + ": bad number '" + std::string(tok) + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text, std::string_view what) {
  std::vector<int> out;
  std::string s = text;
  for (char& c : s)
    if (c == ',' || c == '\n') c = ' ';
  for (auto tok : detail::split_ws(s)) {
    int v = 0;
    if (!detail::parse_number(tok, v)) throw InvalidArgument(std::string(what) + ": bad integer '" + std::string(tok) + "'");
    out.push_back(v);
  }
  return out;
}

std::string read_text(const fs::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

fs::path with_suffix(const fs::path& p, std::string_view suffix) { return fs::path(p.string() + std::string(suffix)); }

// Coefficient file: whitespace- or comma-separated reals, or a JSON array.
std::vector<double> load_coefficients(const fs::path& path) {
  const std::string text = read_text(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    try {
      return json::parse(text).get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": bad coefficient array: " + e.what());
    }
  }
  try {
    return parse_real_list(text, "coefficients");
  } catch (const InvalidArgument& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

struct GenMeshArgs {
  std::size_t n = 1000;
  std::string mix = "1,0,0,0";
  std::uint64_t seed = 0;
  std::string profile = "uniform";
  bool full = false;
  std::string cells = "4,4,4";
  double hex_fraction = 0.5;
  double tet1_fraction = 0.0;
  double jitter = 0.0;
  std::string out;
};

int cmd_gen_mesh(const GenMeshArgs& a) {
  json params;
  if (a.full) {
    const auto cells = parse_int_list(a.cells, "--cells");
    if (cells.size() != 3) throw InvalidArgument("--cells needs three integers");
    GridMeshOptions opt;
    opt.cells = {cells[0], cells[1], cells[2]};
    opt.hex_fraction = a.hex_fraction;
    opt.tet1_fraction = a.tet1_fraction;
    opt.jitter = a.jitter;
    opt.seed = a.seed;
    const FullMesh mesh = generate_grid_mesh(opt);
    store_full_mesh(mesh, a.out);
    params = {{"full", true},          {"cells", cells},   {"hex_fraction", a.hex_fraction},
              {"tet1_fraction", a.tet1_fraction}, {"jitter", a.jitter}, {"seed", a.seed},
              {"out", a.out},          {"n_elements", mesh.elements.size()}, {"n_nodes", mesh.nodes.size()}};
  } else {
    const auto mix_values = parse_real_list(a.mix, "--mix");
    if (mix_values.size() != 4) throw InvalidArgument("--mix needs four proportions (tet,pyr,pri,hex)");
    KindMix mix{mix_values[0], mix_values[1], mix_values[2], mix_values[3]};
    const SpatialProfile profile = a.profile == "clustered" ? SpatialProfile::Clustered : SpatialProfile::Uniform;
    const Mesh mesh = generate_synthetic_mesh(a.n, mix, a.seed, profile);
    store_mesh(mesh, a.out);
    params = {{"full", false}, {"n", a.n}, {"mix", mix_values}, {"seed", a.seed}, {"profile", a.profile},
              {"out", a.out},  {"total_weight", mesh.total_weight()}};
  }
  write_text(with_suffix(a.out, ".manifest.json"), dump(make_manifest("gen-mesh", params)));
  log_info("wrote " + a.out);
  return kOk;
}

// ---------------------------------------------------------------------------

struct PartitionArgs {
  std::string mesh;
  int parts = 2;
  std::string coeffs;
  int level = SfcConfig{}.level;
  std::size_t chunks = 1;
  std::string out;
};

int cmd_partition(const PartitionArgs& a) {
  const Mesh mesh = load_mesh(a.mesh);
  const auto coeffs = a.coeffs.empty() ? unit_coefficients(a.parts) : load_coefficients(a.coeffs);
  const Partition p = partition_chunked(mesh, SfcConfig{a.level}, a.parts, coeffs, a.chunks);
  std::ostringstream os;
  write_partition(os, p);
  write_text(a.out, os.str());
  json sidecar = partition_sidecar(p);
  sidecar["manifest"] = make_manifest("partition", {{"mesh", a.mesh},
                                                    {"parts", a.parts},
                                                    {"coeffs", a.coeffs.empty() ? json(nullptr) : json(a.coeffs)},
                                                    {"lambda", coeffs},
                                                    {"level", a.level},
                                                    {"chunks", a.chunks},
                                                    {"out", a.out}});
  write_text(with_suffix(a.out, ".json"), dump(sidecar));
  log_info("wrote " + a.out);
  return kOk;
}

// ---------------------------------------------------------------------------

struct BalanceArgs {
  std::string mesh;
  std::string full_mesh;
  std::string plan;
  int parts = 0;
  std::string regression = "wlr";
  double tol = 0.02;
  int max_iters = 20;
  double wlr_growth = 1.5;
  std::uint64_t seed = 0;
  int level = SfcConfig{}.level;
  std::size_t chunks = 1;
  std::string timer = "sim";
  int pack_size = 32;
  int reps = 3;
  std::string out;
};

// Real timer: per rank, the packed mass-matrix assembly of its elements,
// median over `reps` runs, divided by the rank's relative throughput.
class BenchTimer {
public:
  BenchTimer(const FullMesh& mesh, const ExecutionPlan* plan, int pack_size, int reps)
      : mesh_(mesh), plan_(plan), pack_size_(pack_size), reps_(reps) {}

  TimingSample operator()(const Partition& p, int k) const {
    TimingSample s;
    s.iteration = k;
    s.times.resize(static_cast<std::size_t>(p.n_parts));
    std::vector<FullMesh> sub(static_cast<std::size_t>(p.n_parts));
    for (auto& m : sub) m.nodes = mesh_.nodes;
    for (std::size_t i = 0; i < p.element_ids.size(); ++i)
      sub[static_cast<std::size_t>(p.assignment[i])].elements.push_back(
          mesh_.elements[static_cast<std::size_t>(p.element_ids[i])]);
    for (std::size_t r = 0; r < sub.size(); ++r) {
      const PackSet packs = build_packs(sub[r], pack_size_);
      std::vector<double> t;
      for (int rep = 0; rep < reps_; ++rep) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto result = assemble_packs(packs, 1);
        const auto t1 = std::chrono::steady_clock::now();
        (void)result;
        t.push_back(std::chrono::duration<double>(t1 - t0).count());
      }
      std::sort(t.begin(), t.end());
      double med = std::max(t[t.size() / 2], 1e-9);
      if (plan_) med /= plan_->ranks[r].throughput;
      s.times[r] = med;
    }
    return s;
  }

private:
  const FullMesh& mesh_;
  const ExecutionPlan* plan_;
  int pack_size_;
  int reps_;
};

int cmd_balance(const BalanceArgs& a) {
  if (a.timer != "sim" && a.timer != "bench") throw InvalidArgument("--timer must be sim or bench");
  std::optional<ExecutionPlan> plan;
  if (!a.plan.empty()) plan = plan_from_json(read_json(a.plan));
  if (a.timer == "sim" && !plan) throw InvalidArgument("--timer sim needs --plan");
  int parts = plan ? static_cast<int>(plan->size()) : a.parts;
  if (plan && a.parts && a.parts != parts) throw InvalidArgument("--parts does not match the plan's rank count");
  if (parts < 1) throw InvalidArgument("need --plan or --parts");

  std::optional<FullMesh> full;
  Mesh mesh;
  if (a.timer == "bench") {
    if (a.full_mesh.empty()) throw InvalidArgument("--timer bench needs --full-mesh");
    full = load_full_mesh(a.full_mesh);
    mesh = to_partition_mesh(*full);
  } else {
    if (a.mesh.empty()) throw InvalidArgument("--timer sim needs --mesh");
    mesh = load_mesh(a.mesh);
  }

  BalanceOptions opt;
  opt.mode = a.regression == "slr" ? RegressionMode::SLR : RegressionMode::WLR;
  opt.tol = a.tol;
  opt.max_iters = a.max_iters;
  opt.wlr_growth = a.wlr_growth;
  opt.n_chunks = a.chunks;

  ReportExtras extras;
  BalanceReport report;
  if (a.timer == "sim") {
    auto timer = [&](const Partition& p, int k) {
      extras.solver_times.push_back(simulate_solver_times(p, *plan).times);
      auto s = simulate_times(p, *plan, a.seed, k);
      log_info("iteration " + std::to_string(k) + ": imbalance " + detail::format_double(compute_metrics(s).imbalance));
      return s;
    };
    report = run_balancing_loop(mesh, SfcConfig{a.level}, parts, timer, opt);
  } else {
    BenchTimer timer(*full, plan ? &*plan : nullptr, a.pack_size, a.reps);
    report = run_balancing_loop(mesh, SfcConfig{a.level}, parts, timer, opt);
  }

  const fs::path out = a.out;
  const fs::path part_path = with_suffix(out, ".part");
  extras.final_partition_file = part_path.filename().string();
  json params = {{"mesh", a.mesh.empty() ? json(nullptr) : json(a.mesh)},
                 {"full_mesh", a.full_mesh.empty() ? json(nullptr) : json(a.full_mesh)},
                 {"plan", a.plan.empty() ? json(nullptr) : json(a.plan)},
                 {"parts", parts},
                 {"regression", a.regression},
                 {"tol", a.tol},
                 {"max_iters", a.max_iters},
                 {"wlr_growth", a.wlr_growth},
                 {"seed", a.seed},
                 {"level", a.level},
                 {"chunks", a.chunks},
                 {"timer", a.timer},
                 {"out", a.out}};
  if (a.timer == "bench") {
    params["pack_size"] = a.pack_size;
    params["reps"] = a.reps;
  }
  write_text(with_suffix(out, ".json"), dump(balance_report_json(report, make_manifest("balance", params), extras)));
  std::ostringstream csv;
  write_convergence_csv(csv, report);
  write_text(with_suffix(out, ".csv"), csv.str());
  std::ostringstream part;
  write_partition(part, report.final_iteration().partition);
  write_text(part_path, part.str());
  std::cout << "converged=" << (report.converged ? "true" : "false") << " iterations=" << report.iterations.size()
            << " imbalance=" << detail::format_double(report.final_iteration().metrics.imbalance) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct EfficiencyArgs {
  double speedup = 0.0;
  std::optional<double> ratio;
  std::optional<int> cores;
  std::optional<int> gpus;
  int cores_per_gpu = 2;
  std::string sweep;
  bool as_json = false;
  std::string out;
};

json efficiency_row(const EfficiencyParams& p, int cores_per_gpu) {
  return {{"s", p.s},
          {"r", p.r},
          {"eff_core", eff_core(p)},
          {"eff_gpu", eff_gpu(p)},
          {"eff_coex1", eff_coex1(p)},
          {"eff_coex2", eff_coex2(p)},
          {"coex2_meaningful", coex2_meaningful(p)},
          {"reduction", predicted_time_reduction(p, cores_per_gpu)}};
}

// "--sweep s=1..100" or "s=1..100:0.5"
std::vector<double> sweep_values(const std::string& text) {
  const auto eq = text.find('=');
  const auto dots = text.find("..");
  if (text.rfind("s=", 0) != 0 || eq == std::string::npos || dots == std::string::npos)
    throw InvalidArgument("--sweep expects s=<lo>..<hi>[:<step>]");
  const auto colon = text.find(':', dots);
  double lo = 0, hi = 0, step = 1;
  const bool ok = detail::parse_number(std::string_view(text).substr(eq + 1, dots - eq - 1), lo) &&
                  detail::parse_number(std::string_view(text).substr(dots + 2, colon == std::string::npos ? std::string::npos : colon - dots - 2), hi) &&
                  (colon == std::string::npos || detail::parse_number(std::string_view(text).substr(colon + 1), step));
  if (!ok || !(step > 0) || !(lo > 0) || hi < lo) throw InvalidArgument("--sweep expects s=<lo>..<hi>[:<step>] with 0 < lo <= hi");
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

int cmd_efficiency(const EfficiencyArgs& a) {
  if (a.cores_per_gpu != 1 && a.cores_per_gpu != 2) throw InvalidArgument("--cores-per-gpu must be 1 or 2");
  EfficiencyParams base;
  json params = {{"cores_per_gpu", a.cores_per_gpu}};
  const double s0 = a.sweep.empty() ? a.speedup : 1.0;
  if (a.ratio) {
    if (a.cores || a.gpus) throw InvalidArgument("give either --ratio or --cores/--gpus");
    base = EfficiencyParams::from_ratio(s0, *a.ratio);
    params["ratio"] = *a.ratio;
  } else if (a.cores && a.gpus) {
    base = EfficiencyParams::from_counts(*a.cores, *a.gpus, s0);
    params["cores"] = *a.cores;
    params["gpus"] = *a.gpus;
  } else {
    throw InvalidArgument("need --ratio or both --cores and --gpus");
  }

  std::ostringstream os;
  if (!a.sweep.empty()) {
    params["sweep"] = a.sweep;
    os << "# manifest " << make_manifest("efficiency", params).dump() << '\n';
    os << "s,r,eff_core,eff_gpu,eff_coex1,eff_coex2,reduction\n";
    for (double s : sweep_values(a.sweep)) {
      EfficiencyParams p = base;
      p.s = s;
      os << detail::format_double(s) << ',' << detail::format_double(p.r) << ',' << detail::format_double(eff_core(p))
         << ',' << detail::format_double(eff_gpu(p)) << ',' << detail::format_double(eff_coex1(p)) << ','
         << detail::format_double(eff_coex2(p)) << ','
         << detail::format_double(predicted_time_reduction(p, a.cores_per_gpu)) << '\n';
    }
  } else {
    if (!(a.speedup > 0.0)) throw InvalidArgument("--speedup must be positive");
    params["speedup"] = a.speedup;
    const json row = efficiency_row(base, a.cores_per_gpu);
    if (a.as_json) {
      os << dump({{"manifest", make_manifest("efficiency", params)}, {"result", row}});
    } else {
      os << "# manifest " << make_manifest("efficiency", params).dump() << '\n';
      for (const char* key : {"s", "r", "eff_core", "eff_gpu", "eff_coex1", "eff_coex2"})
        os << key << " = " << detail::format_double(row.at(key).get<double>()) << '\n';
      os << "coex2_meaningful = " << (row.at("coex2_meaningful").get<bool>() ? "true" : "false") << '\n';
      os << "reduction = " << detail::format_double(row.at("reduction").get<double>()) << '\n';
    }
  }
  if (a.out.empty())
    std::cout << os.str();
  else
    write_text(a.out, os.str());
  return kOk;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string full_mesh;
  std::string sizes = "1,2,4,8,16,32,64";
  int reps = 5;
  std::string out;
};

int cmd_bench_assembly(const BenchArgs& a) {
  const FullMesh mesh = load_full_mesh(a.full_mesh);
  const auto sizes = parse_int_list(a.sizes, "--sizes");
  if (sizes.empty()) throw InvalidArgument("--sizes is empty");
  const auto rows = sweep_pack_size(mesh, sizes, a.reps);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  const json manifest = make_manifest("bench-assembly", {{"full_mesh", a.full_mesh},
                                                         {"sizes", sizes},
                                                         {"reps", a.reps},
                                                         {"threads", max_threads()},
                                                         {"n_elements", mesh.elements.size()},
                                                         {"out", a.out.empty() ? json(nullptr) : json(a.out)}});
  if (a.out.empty()) {
    std::cout << "# manifest " << manifest.dump() << '\n' << csv.str();
  } else {
    write_text(a.out, csv.str());
    write_text(with_suffix(a.out, ".manifest.json"), dump(manifest));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SFC partitioning with runtime correction coefficients, co-execution model and assembly bench"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  std::string log_level = "quiet";
  app.add_option("--log-level", log_level, "quiet or info (progress on stderr)")
      ->check(CLI::IsMember({"quiet", "info"}));

  GenMeshArgs gm;
  auto* gen = app.add_subcommand("gen-mesh", "Generate a synthetic partition mesh or a full (node/connectivity) mesh");
  gen->add_option("--n", gm.n, "Number of elements")->check(CLI::PositiveNumber);
  gen->add_option("--mix", gm.mix, "Kind proportions tet,pyr,pri,hex");
  gen->add_option("--seed", gm.seed, "Random seed");
  gen->add_option("--profile", gm.profile, "Spatial profile")->check(CLI::IsMember({"uniform", "clustered"}));
  gen->add_flag("--full", gm.full, "Write a full mesh (JSON) on a jittered grid instead");
  gen->add_option("--cells", gm.cells, "Full mesh: cells per axis nx,ny,nz");
  gen->add_option("--hex-fraction", gm.hex_fraction, "Full mesh: probability that a cell is a hexahedron");
  gen->add_option("--tet1-fraction", gm.tet1_fraction, "Full mesh: probability that a tet uses the 1-point rule");
  gen->add_option("--jitter", gm.jitter, "Full mesh: interior node jitter as a fraction of the cell size");
  gen->add_option("--out", gm.out, "Output file")->required();

  PartitionArgs pa;
  auto* part = app.add_subcommand("partition", "Partition a mesh along the Hilbert curve");
  part->add_option("--mesh", pa.mesh, "Partition mesh file")->required();
  part->add_option("--parts", pa.parts, "Number of subdomains")->required()->check(CLI::PositiveNumber);
  part->add_option("--coeffs", pa.coeffs, "Correction coefficients file (default: all 1)");
  part->add_option("--level", pa.level, "Bits per axis of the bin grid")->check(CLI::Range(1, 20));
  part->add_option("--chunks", pa.chunks, "Number of key-range chunks")->check(CLI::PositiveNumber);
  part->add_option("--out", pa.out, "Partition file; the JSON sidecar is <out>.json")->required();

  BalanceArgs ba;
  auto* bal = app.add_subcommand("balance", "Run the iterative correction-coefficient balancing loop");
  bal->add_option("--mesh", ba.mesh, "Partition mesh file (simulated timer)");
  bal->add_option("--full-mesh", ba.full_mesh, "Full mesh JSON (bench timer)");
  bal->add_option("--plan", ba.plan, "Execution plan JSON");
  bal->add_option("--parts", ba.parts, "Number of ranks when no plan is given")->check(CLI::PositiveNumber);
  bal->add_option("--regression", ba.regression, "slr or wlr")->check(CLI::IsMember({"slr", "wlr"}));
  bal->add_option("--tol", ba.tol, "Stop when imbalance - 1 <= tol")->check(CLI::NonNegativeNumber);
  bal->add_option("--max-iters", ba.max_iters, "Maximum number of partitions evaluated")->check(CLI::PositiveNumber);
  bal->add_option("--wlr-growth", ba.wlr_growth, "WLR weight growth per iteration")->check(CLI::PositiveNumber);
  bal->add_option("--seed", ba.seed, "Noise seed of the simulated timer");
  bal->add_option("--level", ba.level, "Bits per axis of the bin grid")->check(CLI::Range(1, 20));
  bal->add_option("--chunks", ba.chunks, "Number of key-range chunks")->check(CLI::PositiveNumber);
  bal->add_option("--timer", ba.timer, "sim or bench")->check(CLI::IsMember({"sim", "bench"}));
  bal->add_option("--pack-size", ba.pack_size, "Bench timer: pack size")->check(CLI::PositiveNumber);
  bal->add_option("--reps", ba.reps, "Bench timer: repetitions per rank")->check(CLI::PositiveNumber);
  bal->add_option("--out", ba.out, "Output prefix: <out>.json, <out>.csv, <out>.part")->required();

  EfficiencyArgs ea;
  auto* eff = app.add_subcommand("efficiency", "Closed-form co-execution efficiency model");
  eff->add_option("--speedup", ea.speedup, "GPU speedup s with respect to one core");
  eff->add_option("--ratio", ea.ratio, "GPUs per core r");
  eff->add_option("--cores", ea.cores, "Number of cores")->check(CLI::PositiveNumber);
  eff->add_option("--gpus", ea.gpus, "Number of GPUs")->check(CLI::NonNegativeNumber);
  eff->add_option("--cores-per-gpu", ea.cores_per_gpu, "Host cores idled per GPU (1 or 2)");
  eff->add_option("--sweep", ea.sweep, "CSV curves over s, e.g. s=1..100");
  eff->add_flag("--json", ea.as_json, "JSON report instead of text");
  eff->add_option("--out", ea.out, "Output file (default: stdout)");

  BenchArgs bn;
  auto* bench = app.add_subcommand("bench-assembly", "Pack-size sweep of the mass-matrix kernel");
  bench->add_option("--full-mesh", bn.full_mesh, "Full mesh JSON")->required();
  bench->add_option("--sizes", bn.sizes, "Pack sizes, comma-separated");
  bench->add_option("--reps", bn.reps, "Timed repetitions per size (>= 3)");
  bench->add_option("--out", bn.out, "CSV output (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }
  g_verbose = log_level == "info";

  try {
    if (*gen) return cmd_gen_mesh(gm);
    if (*part) return cmd_partition(pa);
    if (*bal) return cmd_balance(ba);
    if (*eff) return cmd_efficiency(ea);
    if (*bench) return cmd_bench_assembly(bn);
  } catch (const IoError& e) {
    return fail(kIo, "io", e.what());
  } catch (const ParseError& e) {
    return fail(kParse, "parse", e.what());
  } catch (const InvalidArgument& e) {
    return fail(kInvalid, "invalid", e.what());
  } catch (const std::exception& e) {
    return fail(kInternal, "internal", e.what());
  }
  return kInternal;
}
