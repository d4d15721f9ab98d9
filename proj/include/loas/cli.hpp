#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "loas/baselines.hpp"
#include "loas/config_file.hpp"
#include "loas/engine.hpp"
#include "loas/report.hpp"
#include "loas/workload.hpp"

namespace loas {

// ---------------------------------------------------------------------------
// Command-line front end.
//
//   gen      generate a workload file from a preset or explicit parameters
//   run      run one engine (or the oracle) and write a report
//   verify   run the oracle plus engines, compare outputs bit-exactly
//   compare  run all four engines, emit normalized comparison tables
//
// Exit codes: 0 success, 1 verification failure, 2 usage/config error,
// 3 I/O or file-format error.
// ---------------------------------------------------------------------------

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

namespace cli_detail {

inline const std::vector<std::string>& engine_names() {
  static const std::vector<std::string> names = {"ftp", "ip-seq", "op-seq",
                                                 "gust-seq"};
  return names;
}

inline SimReport run_engine(const std::string& engine, const Workload& w,
                            const SimConfig& cfg, const EnergyTable* energy) {
  if (engine == "ftp")
    return run_ftp(w.spikes, w.weights, w.lif, cfg.hw, energy);
  if (engine == "ip-seq")
    return run_baseline(w.spikes, w.weights, w.lif,
                        cfg.baseline_for(BaselineKind::kIpSeq), energy);
  if (engine == "op-seq")
    return run_baseline(w.spikes, w.weights, w.lif,
                        cfg.baseline_for(BaselineKind::kOpSeq), energy);
  if (engine == "gust-seq")
    return run_baseline(w.spikes, w.weights, w.lif,
                        cfg.baseline_for(BaselineKind::kGustSeq), energy);
  if (engine == "oracle") {
    SimReport rep;
    rep.engine = "oracle";
    rep.config_hash = hex64(fnv1a(std::string("oracle")));
    rep.output = reference_layer(w.spikes, w.weights, w.lif);
    return rep;
  }
  throw ConfigError("unknown engine: " + engine);
}

inline int max_concurrency() {
  if (const char* env = std::getenv("LOAS_SIM_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(std::min(hc, 4u));
}

/// Runs one job per engine with at most max_concurrency() in flight.
inline std::vector<SimReport> run_parallel(const std::vector<std::string>& engines,
                                           const Workload& w, const SimConfig& cfg,
                                           const EnergyTable* energy) {
  std::vector<SimReport> reports(engines.size());
  std::vector<std::string> errors(engines.size());
  std::atomic<std::size_t> next{0};
  int threads = std::min<int>(max_concurrency(), static_cast<int>(engines.size()));
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= engines.size()) return;
      try {
        reports[i] = run_engine(engines[i], w, cfg, energy);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < engines.size(); ++i)
    if (!errors[i].empty())
      throw Error(engines[i] + " failed: " + errors[i]);
  return reports;
}

struct GenArgs {
  std::string preset_name;
  std::string out;
  std::uint64_t seed = 1;
  int m = 16, n = 16, k = 128, t = 4;
  double origin = 0.8, silent = 0.6, wsparsity = 0.9;
  std::int32_t v_th = 3;
  int tau_log2 = 1;
  std::int32_t u_init = 0;
  bool explicit_shape = false;
};

inline int cmd_gen(const GenArgs& g) {
  WorkloadSpec spec;
  if (!g.preset_name.empty()) {
    spec = preset(g.preset_name);
  } else {
    spec.name = "custom";
    spec.M = g.m; spec.N = g.n; spec.K = g.k; spec.T = g.t;
    spec.origin_sparsity = g.origin;
    spec.silent_fraction = g.silent;
    spec.weight_sparsity = g.wsparsity;
    spec.lif.v_th = g.v_th;
    spec.lif.tau_log2 = static_cast<std::uint8_t>(g.tau_log2);
    spec.lif.u_init = g.u_init;
  }
  spec.seed = g.seed;
  spec.validate();
  SpikeTensor a = gen_spikes(spec);
  WeightMatrix b = gen_weights(spec.K, spec.N, spec.weight_sparsity, spec.seed);
  save_workload(a, b, spec.lif, g.out);
  std::printf("wrote %s: M=%d N=%d K=%d T=%d seed=%llu\n", g.out.c_str(), spec.M,
              spec.N, spec.K, spec.T,
              static_cast<unsigned long long>(spec.seed));
  return kExitOk;
}

struct RunArgs {
  std::string engine;
  std::string workload;
  std::string hw;
  std::string energy;
  std::string out;
  std::string format = "json";
  std::uint64_t seed = 0;
};

inline int cmd_run(const RunArgs& r) {
  if (r.engine != "oracle" && r.hw.empty())
    throw ConfigError("--hw is required for engine " + r.engine);
  std::vector<std::uint8_t> wbytes = read_file(r.workload);
  Workload w = parse_workload(wbytes);
  SimConfig cfg;
  if (!r.hw.empty()) {
    std::vector<std::uint8_t> t = read_file(r.hw);
    cfg = parse_hw_config(std::string(t.begin(), t.end()));
  }
  std::optional<EnergyTable> energy;
  if (!r.energy.empty()) {
    std::vector<std::uint8_t> t = read_file(r.energy);
    energy = parse_energy_table(std::string(t.begin(), t.end()));
  }
  SimReport rep =
      run_engine(r.engine, w, cfg, energy ? &*energy : nullptr);
  rep.workload_id = hex64(fnv1a(wbytes.data(), wbytes.size()));
  std::string text;
  if (r.format == "json")
    text = report_to_json(rep, r.seed).dump(2) + "\n";
  else if (r.format == "csv")
    text = report_to_csv(rep, r.seed);
  else
    throw ConfigError("unknown report format: " + r.format);
  write_file(r.out, std::vector<std::uint8_t>(text.begin(), text.end()));
  return kExitOk;
}

struct VerifyArgs {
  std::string workload;
  std::string hw;
  std::vector<std::string> engines;
  std::string corrupt;  // test hook: flip one output bit of this engine
};

inline int cmd_verify(const VerifyArgs& v) {
  std::vector<std::uint8_t> wbytes = read_file(v.workload);
  Workload w = parse_workload(wbytes);
  SimConfig cfg;
  if (!v.hw.empty()) {
    std::vector<std::uint8_t> t = read_file(v.hw);
    cfg = parse_hw_config(std::string(t.begin(), t.end()));
  }
  std::vector<std::string> engines =
      v.engines.empty() ? engine_names() : v.engines;
  OutputSpikes golden = reference_layer(w.spikes, w.weights, w.lif);

  bool all_pass = true;
  for (const auto& name : engines) {
    SimReport rep = run_engine(name, w, cfg, nullptr);
    if (name == v.corrupt && !rep.output.data.empty())
      rep.output.data[0] ^= 1;
    bool pass = rep.output == golden;
    if (pass) {
      std::printf("%-10s PASS\n", name.c_str());
      continue;
    }
    all_pass = false;
    for (int m = 0; m < golden.M && !pass; ++m)
      for (int n = 0; n < golden.N; ++n) {
        bool done = false;
        for (int t = 0; t < golden.T; ++t)
          if (rep.output.at(m, n, t) != golden.at(m, n, t)) {
            std::printf("%-10s FAIL first mismatch at (m=%d, n=%d, t=%d)\n",
                        name.c_str(), m, n, t);
            done = true;
            break;
          }
        if (done) { pass = true; break; }  // reported, stop scanning
      }
  }
  return all_pass ? kExitOk : kExitVerifyFail;
}

struct CompareArgs {
  std::string workload;
  std::string hw;
  std::string energy;
  std::string out_dir;
  std::uint64_t seed = 0;
};

inline int cmd_compare(const CompareArgs& c) {
  std::vector<std::uint8_t> wbytes = read_file(c.workload);
  Workload w = parse_workload(wbytes);
  std::vector<std::uint8_t> t = read_file(c.hw);
  SimConfig cfg = parse_hw_config(std::string(t.begin(), t.end()));
  std::optional<EnergyTable> energy;
  if (!c.energy.empty()) {
    std::vector<std::uint8_t> e = read_file(c.energy);
    energy = parse_energy_table(std::string(e.begin(), e.end()));
  }
  std::string workload_id = hex64(fnv1a(wbytes.data(), wbytes.size()));

  const auto& engines = engine_names();
  std::vector<SimReport> reports =
      run_parallel(engines, w, cfg, energy ? &*energy : nullptr);
  for (auto& rep : reports) rep.workload_id = workload_id;

  std::uint64_t ip_cycles = 0;
  for (const auto& rep : reports)
    if (rep.engine == "ip-seq") ip_cycles = rep.total_cycles;

  Json j;
  j["schema"] = kReportSchemaVersion;
  j["workload_id"] = workload_id;
  j["seed"] = c.seed;
  Json rows = Json::array();
  std::string csv =
      "engine,cycles,speedup_vs_ip_seq,dram_total_bytes,sram_total_accesses,"
      "cache_miss_rate";
  for (int cat = 0; cat < kNumTrafficCategories; ++cat)
    csv += std::string(",dram_") + traffic_name(cat);
  for (int cat = 0; cat < kNumTrafficCategories; ++cat)
    csv += std::string(",sram_") + traffic_name(cat);
  csv += ",energy_total_pj\n";
  for (const auto& rep : reports) {
    double speedup = rep.total_cycles == 0
                         ? 0.0
                         : static_cast<double>(ip_cycles) / rep.total_cycles;
    Json row;
    row["engine"] = rep.engine;
    row["cycles"] = rep.total_cycles;
    row["speedup_vs_ip_seq"] = format_double(speedup);
    row["dram_total_bytes"] = rep.traffic.total_dram_bytes();
    row["sram_total_accesses"] = rep.traffic.total_sram_accesses();
    row["cache_miss_rate"] = format_double(rep.cache_miss_rate);
    Json dram, sram;
    for (int cat = 0; cat < kNumTrafficCategories; ++cat) {
      dram[traffic_name(cat)] = rep.traffic.dram_bytes[cat];
      sram[traffic_name(cat)] = rep.traffic.sram_accesses[cat];
    }
    row["dram_bytes"] = dram;
    row["sram_accesses"] = sram;
    if (rep.energy) row["energy_total_pj"] = format_double(rep.energy->total_pj);
    rows.push_back(row);

    csv += rep.engine + "," + std::to_string(rep.total_cycles) + "," +
           format_double(speedup) + "," +
           std::to_string(rep.traffic.total_dram_bytes()) + "," +
           std::to_string(rep.traffic.total_sram_accesses()) + "," +
           format_double(rep.cache_miss_rate);
    for (int cat = 0; cat < kNumTrafficCategories; ++cat)
      csv += "," + std::to_string(rep.traffic.dram_bytes[cat]);
    for (int cat = 0; cat < kNumTrafficCategories; ++cat)
      csv += "," + std::to_string(rep.traffic.sram_accesses[cat]);
    csv += ",";
    if (rep.energy) csv += format_double(rep.energy->total_pj);
    csv += "\n";
  }
  j["engines"] = rows;

  std::filesystem::create_directories(c.out_dir);
  std::string jpath = c.out_dir + "/compare.json";
  std::string cpath = c.out_dir + "/compare.csv";
  std::string jtext = j.dump(2) + "\n";
  write_file(jpath, std::vector<std::uint8_t>(jtext.begin(), jtext.end()));
  write_file(cpath, std::vector<std::uint8_t>(csv.begin(), csv.end()));
  std::printf("wrote %s and %s\n", jpath.c_str(), cpath.c_str());
  return kExitOk;
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"cycle-level simulator for dual-sparse SNN spMspM engines"};
  app.require_subcommand(1);

  cli_detail::GenArgs gen;
  CLI::App* cgen = app.add_subcommand("gen", "generate a workload file");
  cgen->add_option("--preset", gen.preset_name,
                   "preset name (A-L4, V-L8, R-L19, T-HFF, *-ft)");
  cgen->add_option("--m", gen.m, "rows of A");
  cgen->add_option("--n", gen.n, "columns of B");
  cgen->add_option("--k", gen.k, "inner dimension");
  cgen->add_option("--t", gen.t, "timesteps");
  cgen->add_option("--origin-sparsity", gen.origin, "zero fraction of spike bits");
  cgen->add_option("--silent-fraction", gen.silent, "all-zero packed word fraction");
  cgen->add_option("--weight-sparsity", gen.wsparsity, "zero fraction of weights");
  cgen->add_option("--vth", gen.v_th, "firing threshold");
  cgen->add_option("--tau-log2", gen.tau_log2, "leak shift, tau = 2^-x");
  cgen->add_option("--u-init", gen.u_init, "initial membrane potential");
  cgen->add_option("--seed", gen.seed, "generator seed");
  cgen->add_option("--out", gen.out, "output workload path")->required();

  cli_detail::RunArgs run;
  CLI::App* crun = app.add_subcommand("run", "run one engine, write a report");
  crun->add_option("--engine", run.engine,
                   "ftp | ip-seq | op-seq | gust-seq | oracle")
      ->required()
      ->check(CLI::IsMember({"ftp", "ip-seq", "op-seq", "gust-seq", "oracle"}));
  crun->add_option("--workload", run.workload, "workload file")->required();
  crun->add_option("--hw", run.hw, "hardware config file");
  crun->add_option("--energy", run.energy, "energy table file");
  crun->add_option("--out", run.out, "report output path")->required();
  crun->add_option("--format", run.format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}));
  crun->add_option("--seed", run.seed, "seed recorded in the report");

  cli_detail::VerifyArgs verify;
  CLI::App* cverify =
      app.add_subcommand("verify", "compare engines against the oracle");
  cverify->add_option("--workload", verify.workload, "workload file")->required();
  cverify->add_option("--hw", verify.hw, "hardware config file");
  cverify->add_option("--engines", verify.engines, "engines to verify")
      ->delimiter(',');
  cverify->add_option("--corrupt", verify.corrupt,
                      "test hook: corrupt this engine's output");

  cli_detail::CompareArgs compare;
  CLI::App* ccompare =
      app.add_subcommand("compare", "run all engines, emit comparison tables");
  ccompare->add_option("--workload", compare.workload, "workload file")->required();
  ccompare->add_option("--hw", compare.hw, "hardware config file")->required();
  ccompare->add_option("--energy", compare.energy, "energy table file");
  ccompare->add_option("--out", compare.out_dir, "output directory")->required();
  ccompare->add_option("--seed", compare.seed, "seed recorded in the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (cgen->parsed()) return cli_detail::cmd_gen(gen);
    if (crun->parsed()) return cli_detail::cmd_run(run);
    if (cverify->parsed()) return cli_detail::cmd_verify(verify);
    if (ccompare->parsed()) return cli_detail::cmd_compare(compare);
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace loas
