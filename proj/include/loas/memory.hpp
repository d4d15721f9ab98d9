#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "loas/common.hpp"

namespace loas {

// ---------------------------------------------------------------------------
// Banked set-associative fiber cache with pin-aware LRU, a bandwidth-only
// DRAM model, categorized traffic counters, and a parameterized energy model.
// ---------------------------------------------------------------------------

enum class Traffic : int {
  kAPayload = 0,
  kAMetadata,
  kBPayload,
  kBMetadata,
  kPsum,
  kOutput,
};
constexpr int kNumTrafficCategories = 6;

inline const char* traffic_name(int cat) {
  static const char* names[kNumTrafficCategories] = {
      "a_payload", "a_metadata", "b_payload", "b_metadata", "psum", "output"};
  return names[cat];
}

struct TrafficCounters {
  std::array<std::uint64_t, kNumTrafficCategories> dram_bytes{};
  std::array<std::uint64_t, kNumTrafficCategories> sram_accesses{};

  std::uint64_t& dram(Traffic c) { return dram_bytes[static_cast<int>(c)]; }
  std::uint64_t dram(Traffic c) const { return dram_bytes[static_cast<int>(c)]; }
  std::uint64_t& sram(Traffic c) { return sram_accesses[static_cast<int>(c)]; }
  std::uint64_t sram(Traffic c) const { return sram_accesses[static_cast<int>(c)]; }

  std::uint64_t total_dram_bytes() const {
    std::uint64_t s = 0;
    for (auto v : dram_bytes) s += v;
    return s;
  }
  std::uint64_t total_sram_accesses() const {
    std::uint64_t s = 0;
    for (auto v : sram_accesses) s += v;
    return s;
  }
};

struct CacheConfig {
  std::uint64_t capacity_bytes = 262144;
  int banks = 16;
  int associativity = 16;
  int line_bytes = 64;

  void validate() const {
    std::uint64_t unit = static_cast<std::uint64_t>(banks) * associativity * line_bytes;
    if (unit == 0 || capacity_bytes % unit != 0)
      throw ConfigError("cache capacity must divide banks*associativity*line_bytes");
  }

  std::uint64_t num_lines() const { return capacity_bytes / line_bytes; }
  std::uint64_t num_sets() const { return num_lines() / associativity; }
};

struct DramConfig {
  std::uint64_t bandwidth_bytes_per_cycle = 160;

  void validate() const {
    if (bandwidth_bytes_per_cycle == 0) throw ConfigError("DRAM bandwidth must be > 0");
  }
};

inline std::uint64_t dram_cycles(std::uint64_t bytes, const DramConfig& cfg) {
  cfg.validate();
  return ceil_div(bytes, cfg.bandwidth_bytes_per_cycle);
}

struct CacheAccessResult {
  std::uint64_t hit_bytes = 0;
  std::uint64_t miss_bytes = 0;
};

class FiberCache {
public:
  explicit FiberCache(const CacheConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    sets_.resize(cfg_.num_sets());
    for (auto& s : sets_) s.resize(cfg_.associativity);
  }

  const CacheConfig& config() const { return cfg_; }

  /// Reserves a contiguous byte region in the simulated address space.
  std::uint64_t alloc(std::uint64_t bytes, std::uint64_t align = 1) {
    if (align > 1) next_addr_ = ceil_div(next_addr_, align) * align;
    std::uint64_t base = next_addr_;
    next_addr_ += bytes;
    return base;
  }

  std::uint64_t footprint_bytes() const { return next_addr_; }

  void pin(std::uint64_t addr, std::uint64_t bytes) {
    for (std::uint64_t line = addr / cfg_.line_bytes;
         line <= (addr + bytes - 1) / cfg_.line_bytes; ++line)
      ++pins_[line];
  }

  void unpin(std::uint64_t addr, std::uint64_t bytes) {
    for (std::uint64_t line = addr / cfg_.line_bytes;
         line <= (addr + bytes - 1) / cfg_.line_bytes; ++line) {
      auto it = pins_.find(line);
      if (it == pins_.end()) continue;
      if (--it->second == 0) pins_.erase(it);
    }
  }

  /// Touches [addr, addr+bytes). Each line touched costs one SRAM access in
  /// the category unless sram_units overrides the count (engines that touch
  /// operands element-by-element, like a multi-way merger, charge one access
  /// per operand). Missing lines charge line_bytes of DRAM traffic and are
  /// installed under pin-aware LRU. Writes allocate without a fill read and
  /// mark the line dirty; a dirty eviction charges writeback DRAM bytes to
  /// the category the line was written under.
  CacheAccessResult access(std::uint64_t addr, std::uint64_t bytes, Traffic cat,
                           TrafficCounters& counters, bool is_write = false,
                           std::uint64_t sram_units = 0) {
    CacheAccessResult res;
    if (bytes == 0) return res;
    if (sram_units > 0) counters.sram_accesses[static_cast<int>(cat)] += sram_units;
    std::uint64_t first = addr / cfg_.line_bytes;
    std::uint64_t last = (addr + bytes - 1) / cfg_.line_bytes;
    for (std::uint64_t line = first; line <= last; ++line) {
      if (sram_units == 0) ++counters.sram_accesses[static_cast<int>(cat)];
      ++tick_;
      Way* way = lookup(line);
      if (way) {
        ++hits_;
        way->last_use = tick_;
        if (is_write) {
          way->dirty = true;
          way->dirty_cat = cat;
        }
        res.hit_bytes += cfg_.line_bytes;
        continue;
      }
      ++misses_;
      res.miss_bytes += cfg_.line_bytes;
      if (!is_write) {
        counters.dram_bytes[static_cast<int>(cat)] += cfg_.line_bytes;
        ++line_fetches_[line];
      }
      install(line, is_write, cat, counters);
    }
    return res;
  }

  /// Drops [addr, addr+bytes) without writeback: the data is dead (consumed
  /// partials). Present lines become clean and first in line for eviction.
  void discard(std::uint64_t addr, std::uint64_t bytes) {
    if (bytes == 0) return;
    for (std::uint64_t line = addr / cfg_.line_bytes;
         line <= (addr + bytes - 1) / cfg_.line_bytes; ++line) {
      Way* way = lookup(line);
      if (!way) continue;
      way->dirty = false;
      way->last_use = 0;
    }
  }

  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }
  double miss_rate() const {
    std::uint64_t total = hits_ + misses_;
    return total == 0 ? 0.0 : static_cast<double>(misses_) / total;
  }

  /// How often each line address was filled from DRAM (read path).
  const std::unordered_map<std::uint64_t, std::uint32_t>& line_fetches() const {
    return line_fetches_;
  }

private:
  struct Way {
    bool valid = false;
    bool dirty = false;
    Traffic dirty_cat = Traffic::kPsum;
    std::uint64_t line = 0;
    std::uint64_t last_use = 0;
  };

  Way* lookup(std::uint64_t line) {
    auto& set = sets_[line % sets_.size()];
    for (auto& w : set)
      if (w.valid && w.line == line) return &w;
    return nullptr;
  }

  void install(std::uint64_t line, bool is_write, Traffic cat,
               TrafficCounters& counters) {
    auto& set = sets_[line % sets_.size()];
    Way* victim = nullptr;
    for (auto& w : set) {
      if (!w.valid) {
        victim = &w;
        break;
      }
    }
    if (!victim) {
      for (auto& w : set) {
        if (pins_.count(w.line)) continue;
        if (!victim || w.last_use < victim->last_use) victim = &w;
      }
      if (!victim) return;  // every way pinned: bypass installation
      if (victim->dirty)
        counters.dram_bytes[static_cast<int>(victim->dirty_cat)] += cfg_.line_bytes;
    }
    victim->valid = true;
    victim->line = line;
    victim->last_use = tick_;
    victim->dirty = is_write;
    victim->dirty_cat = cat;
  }

  CacheConfig cfg_;
  std::vector<std::vector<Way>> sets_;
  std::unordered_map<std::uint64_t, std::uint32_t> pins_;
  std::unordered_map<std::uint64_t, std::uint32_t> line_fetches_;
  std::uint64_t next_addr_ = 0;
  std::uint64_t tick_ = 0;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

// ---------------------------------------------------------------------------
// Energy model: a dot product of counters with user-supplied unit costs.
// ---------------------------------------------------------------------------

struct EnergyTable {
  double dram_byte_pj = 0.0;
  double sram_access_pj = 0.0;
  double accumulate_pj = 0.0;
  double fast_prefix_pj = 0.0;
  double laggy_prefix_pj = 0.0;
  double lif_op_pj = 0.0;

  void validate() const {
    for (double v : {dram_byte_pj, sram_access_pj, accumulate_pj,
                     fast_prefix_pj, laggy_prefix_pj, lif_op_pj})
      if (v < 0) throw ConfigError("energy costs must be non-negative");
  }
};

struct OpCounts {
  std::uint64_t matches = 0;
  std::uint64_t accumulates = 0;  // pseudo adds + correction writes + psum ops
  std::uint64_t corrections = 0;
  std::uint64_t lif_ops = 0;
  std::uint64_t fast_prefix_invocations = 0;
  std::uint64_t laggy_prefix_invocations = 0;
  std::uint64_t join_invocations = 0;
  std::uint64_t idle_cycles = 0;
};

struct EnergyReport {
  double dram_pj = 0.0;
  double sram_pj = 0.0;
  double accumulate_pj = 0.0;
  double prefix_pj = 0.0;
  double lif_pj = 0.0;
  double total_pj = 0.0;
};

inline EnergyReport energy_report(const TrafficCounters& counters,
                                  const OpCounts& ops, const EnergyTable& table) {
  table.validate();
  EnergyReport r;
  r.dram_pj = static_cast<double>(counters.total_dram_bytes()) * table.dram_byte_pj;
  r.sram_pj = static_cast<double>(counters.total_sram_accesses()) * table.sram_access_pj;
  r.accumulate_pj = static_cast<double>(ops.accumulates) * table.accumulate_pj;
  r.prefix_pj =
      static_cast<double>(ops.fast_prefix_invocations) * table.fast_prefix_pj +
      static_cast<double>(ops.laggy_prefix_invocations) * table.laggy_prefix_pj;
  r.lif_pj = static_cast<double>(ops.lif_ops) * table.lif_op_pj;
  r.total_pj = r.dram_pj + r.sram_pj + r.accumulate_pj + r.prefix_pj + r.lif_pj;
  return r;
}

}  // namespace loas
