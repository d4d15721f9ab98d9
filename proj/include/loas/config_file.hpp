#pragma once

#include <map>
#include <string>

#include "loas/baselines.hpp"
#include "loas/engine.hpp"
#include "loas/memory.hpp"

namespace loas {

// ---------------------------------------------------------------------------
// Flat key=value configuration files. '#' starts a comment. Unknown keys are
// rejected. Hardware keys all have defaults; energy table keys are mandatory.
// ---------------------------------------------------------------------------

namespace detail {

inline std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      std::size_t b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      std::size_t e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key or value");
    if (!kv.emplace(key, value).second)
      throw ConfigError("duplicate config key: " + key);
  }
  return kv;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw ConfigError("");
    return x;
  } catch (...) {
    throw ConfigError("config key " + key + ": bad integer '" + v + "'");
  }
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw ConfigError("");
    return x;
  } catch (...) {
    throw ConfigError("config key " + key + ": bad number '" + v + "'");
  }
}

}  // namespace detail

/// Hardware configuration for both the FTP engine and the baselines; the
/// cache and DRAM sections are shared.
struct SimConfig {
  HwConfig hw;
  BaselineConfig baseline;

  BaselineConfig baseline_for(BaselineKind kind) const {
    BaselineConfig c = baseline;
    c.engine = kind;
    c.cache = hw.cache;
    c.dram = hw.dram;
    return c;
  }
};

inline SimConfig parse_hw_config(const std::string& text) {
  auto kv = detail::parse_kv(text);
  SimConfig cfg;
  for (const auto& entry : kv) {
    const std::string& key = entry.first;
    const std::string& value = entry.second;
    auto u = [&] { return detail::to_u64(key, value); };
    if (key == "num_tppes") cfg.hw.num_tppes = static_cast<int>(u());
    else if (key == "laggy_adders") cfg.hw.tppe.laggy_adders = static_cast<int>(u());
    else if (key == "fifo_depth") cfg.hw.tppe.fifo_depth = static_cast<int>(u());
    else if (key == "weight_buffer_bytes")
      cfg.hw.tppe.weight_buffer_bytes = static_cast<int>(u());
    else if (key == "pseudo_acc_bits")
      cfg.hw.tppe.pseudo_acc_bits = static_cast<int>(u());
    else if (key == "corr_acc_bits")
      cfg.hw.tppe.corr_acc_bits = static_cast<int>(u());
    else if (key == "bit_accurate") cfg.hw.tppe.bit_accurate = u() != 0;
    else if (key == "cache_capacity_bytes") cfg.hw.cache.capacity_bytes = u();
    else if (key == "cache_banks") cfg.hw.cache.banks = static_cast<int>(u());
    else if (key == "cache_associativity")
      cfg.hw.cache.associativity = static_cast<int>(u());
    else if (key == "cache_line_bytes")
      cfg.hw.cache.line_bytes = static_cast<int>(u());
    else if (key == "dram_bandwidth_bytes_per_cycle")
      cfg.hw.dram.bandwidth_bytes_per_cycle = u();
    else if (key == "broadcast_latency_cycles")
      cfg.hw.broadcast_latency_cycles = static_cast<int>(u());
    else if (key == "num_pes") cfg.baseline.num_pes = static_cast<int>(u());
    else if (key == "join_setup_cycles")
      cfg.baseline.join_setup_cycles = static_cast<int>(u());
    else if (key == "psum_buffer_bytes") cfg.baseline.psum_buffer_bytes = u();
    else if (key == "merger_ways") cfg.baseline.merger_ways = static_cast<int>(u());
    else
      throw ConfigError("unknown hardware config key: " + key);
  }
  cfg.hw.validate();
  cfg.baseline.cache = cfg.hw.cache;
  cfg.baseline.dram = cfg.hw.dram;
  cfg.baseline.validate();
  return cfg;
}

inline EnergyTable parse_energy_table(const std::string& text) {
  auto kv = detail::parse_kv(text);
  EnergyTable t;
  bool seen[6] = {};
  for (const auto& [key, value] : kv) {
    double v = detail::to_double(key, value);
    if (key == "dram_byte_pj") { t.dram_byte_pj = v; seen[0] = true; }
    else if (key == "sram_access_pj") { t.sram_access_pj = v; seen[1] = true; }
    else if (key == "accumulate_pj") { t.accumulate_pj = v; seen[2] = true; }
    else if (key == "fast_prefix_pj") { t.fast_prefix_pj = v; seen[3] = true; }
    else if (key == "laggy_prefix_pj") { t.laggy_prefix_pj = v; seen[4] = true; }
    else if (key == "lif_op_pj") { t.lif_op_pj = v; seen[5] = true; }
    else
      throw ConfigError("unknown energy table key: " + key);
  }
  static const char* names[6] = {"dram_byte_pj",   "sram_access_pj",
                                 "accumulate_pj",  "fast_prefix_pj",
                                 "laggy_prefix_pj", "lif_op_pj"};
  for (int i = 0; i < 6; ++i)
    if (!seen[i]) throw ConfigError(std::string("missing energy table key: ") + names[i]);
  t.validate();
  return t;
}

}  // namespace loas
