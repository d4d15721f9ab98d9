#pragma once

#include <cstdio>
#include <string>

#include <json.hpp>

#include "loas/engine.hpp"
#include "loas/memory.hpp"

namespace loas {

// ---------------------------------------------------------------------------
// SimReport serialization. JSON uses ordered keys and CSV has a fixed column
// set so identical runs produce byte-identical report files.
// ---------------------------------------------------------------------------

using Json = nlohmann::ordered_json;

constexpr int kReportSchemaVersion = 1;

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline Json report_to_json(const SimReport& rep, std::uint64_t seed) {
  Json j;
  j["schema"] = kReportSchemaVersion;
  j["engine"] = rep.engine;
  j["workload_id"] = rep.workload_id;
  j["config_hash"] = rep.config_hash;
  j["seed"] = seed;
  Json out;
  out["m"] = rep.output.M;
  out["n"] = rep.output.N;
  out["t"] = rep.output.T;
  out["hash"] = hex64(rep.output_hash());
  j["output"] = out;
  if (rep.engine == "oracle") return j;

  j["cycles"] = rep.total_cycles;
  Json dram, sram;
  for (int c = 0; c < kNumTrafficCategories; ++c) {
    dram[traffic_name(c)] = rep.traffic.dram_bytes[c];
    sram[traffic_name(c)] = rep.traffic.sram_accesses[c];
  }
  dram["total"] = rep.traffic.total_dram_bytes();
  sram["total"] = rep.traffic.total_sram_accesses();
  j["dram_bytes"] = dram;
  j["sram_accesses"] = sram;
  Json cache;
  cache["hits"] = rep.cache_hits;
  cache["misses"] = rep.cache_misses;
  cache["miss_rate"] = format_double(rep.cache_miss_rate);
  j["cache"] = cache;
  Json ops;
  ops["joins"] = rep.ops.join_invocations;
  ops["matches"] = rep.ops.matches;
  ops["accumulates"] = rep.ops.accumulates;
  ops["corrections"] = rep.ops.corrections;
  ops["lif_ops"] = rep.ops.lif_ops;
  ops["fast_prefix"] = rep.ops.fast_prefix_invocations;
  ops["laggy_prefix"] = rep.ops.laggy_prefix_invocations;
  ops["idle_cycles"] = rep.ops.idle_cycles;
  j["ops"] = ops;
  j["stall_cycles"] = rep.stall_cycles;
  j["a_fiber_fetches"] = rep.a_fiber_fetches;
  if (rep.energy) {
    Json e;
    e["dram_pj"] = format_double(rep.energy->dram_pj);
    e["sram_pj"] = format_double(rep.energy->sram_pj);
    e["accumulate_pj"] = format_double(rep.energy->accumulate_pj);
    e["prefix_pj"] = format_double(rep.energy->prefix_pj);
    e["lif_pj"] = format_double(rep.energy->lif_pj);
    e["total_pj"] = format_double(rep.energy->total_pj);
    j["energy"] = e;
  }
  return j;
}

inline std::string report_to_csv(const SimReport& rep, std::uint64_t seed) {
  std::string s =
      "record,engine,workload_id,config_hash,seed,category,dram_bytes,"
      "sram_accesses,cycles,cache_miss_rate,output_hash,energy_total_pj\n";
  auto prefix = [&](const char* record, const std::string& category) {
    return std::string(record) + "," + rep.engine + "," + rep.workload_id +
           "," + rep.config_hash + "," + std::to_string(seed) + "," + category;
  };
  if (rep.engine != "oracle") {
    for (int c = 0; c < kNumTrafficCategories; ++c) {
      s += prefix("traffic", traffic_name(c)) + "," +
           std::to_string(rep.traffic.dram_bytes[c]) + "," +
           std::to_string(rep.traffic.sram_accesses[c]) + ",,,,\n";
    }
  }
  s += prefix("summary", "all") + "," +
       (rep.engine == "oracle" ? "" : std::to_string(rep.traffic.total_dram_bytes())) +
       "," +
       (rep.engine == "oracle" ? ""
                               : std::to_string(rep.traffic.total_sram_accesses())) +
       "," +
       (rep.engine == "oracle" ? "" : std::to_string(rep.total_cycles)) + "," +
       (rep.engine == "oracle" ? "" : format_double(rep.cache_miss_rate)) + "," +
       hex64(rep.output_hash()) + "," +
       (rep.energy ? format_double(rep.energy->total_pj) : "") + "\n";
  return s;
}

}  // namespace loas
