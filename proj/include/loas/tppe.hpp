#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "loas/common.hpp"
#include "loas/compress.hpp"
#include "loas/tensor.hpp"

namespace loas {

// ---------------------------------------------------------------------------
// Functional and timing model of one temporal-parallel processing element.
//
// A join between an A-fiber (packed spike words) and a B-fiber (weights)
// works on the AND of the two bitmasks. The fast prefix-sum path produces one
// matched B offset per cycle and optimistically adds the weight to the pseudo
// accumulator, as if the spike word were all ones. Matched positions and
// weights are buffered in FIFOs until the laggy prefix-sum circuit has the
// A-side offsets; entries whose spike word is all ones are then discarded,
// the rest send their weight to the correction accumulator of every timestep
// whose spike bit is zero. The final per-timestep sum is pseudo - corr[t].
//
// Timing rules:
//   - fast path: one match per cycle, stalled while the FIFOs are full
//   - laggy ready signal: ceil(bitmask_width / adders) cycles after start
//   - FIFO drain: all-ones discards are free; one correction commit per cycle
//   - chunk completes when the last match has issued, the laggy circuit is
//     done, and the last correction has committed
// ---------------------------------------------------------------------------

struct TppeConfig {
  int bitmask_width = 128;
  int laggy_adders = 16;
  int fifo_depth = 8;
  int weight_buffer_bytes = 128;
  int pseudo_acc_bits = 12;
  int corr_acc_bits = 10;
  bool bit_accurate = false;

  void validate() const {
    if (laggy_adders < 1 || bitmask_width % laggy_adders != 0)
      throw ConfigError("laggy_adders must divide bitmask_width");
    if (fifo_depth < 1) throw ConfigError("fifo_depth must be >= 1");
    if (weight_buffer_bytes < 1)
      throw ConfigError("weight_buffer_bytes must be >= 1");
  }
};

struct JoinResult {
  std::vector<std::int64_t> sums;  // per timestep, pseudo - corr[t]
  std::uint64_t cycles = 0;
  std::uint64_t fast_path_cycles = 0;  // last match issue (incl. stalls)
  std::uint64_t stall_cycles = 0;
  std::uint64_t matches = 0;
  std::uint64_t corrections = 0;       // correction commit events
  std::uint64_t correction_writes = 0; // per-timestep accumulator adds
};

/// Positions where both masks have a 1, ascending.
inline std::vector<int> and_match(const Bitmask128& bm_a,
                                  const Bitmask128& bm_b) {
  return (bm_a & bm_b).positions();
}

/// Payload offset of a set position: the number of 1s in front of it.
inline int prefix_offset(const Bitmask128& bm, int pos) {
  if (!bm.test(pos)) throw ContractError("prefix_offset: bit not set");
  return bm.popcount_below(pos);
}

inline std::uint64_t laggy_latency(const TppeConfig& cfg) {
  cfg.validate();
  return ceil_div(cfg.bitmask_width, cfg.laggy_adders);
}

namespace detail {

inline void check_acc_width(std::int64_t value, int bits, const char* what) {
  std::int64_t lo = -(std::int64_t{1} << (bits - 1));
  std::int64_t hi = (std::int64_t{1} << (bits - 1)) - 1;
  if (value < lo || value > hi)
    throw OverflowError(std::string(what) + " exceeded " +
                        std::to_string(bits) + "-bit range");
}

}  // namespace detail

inline JoinResult tppe_join_chunk(const Fiber<std::uint64_t>& fiber_a,
                                  const Fiber<std::int8_t>& fiber_b, int T,
                                  const TppeConfig& cfg) {
  cfg.validate();
  JoinResult r;
  r.sums.assign(T, 0);

  std::vector<int> matched = and_match(fiber_a.bitmask, fiber_b.bitmask);
  r.matches = matched.size();
  if (matched.empty()) return r;

  const std::uint64_t all_ones =
      (T == 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << T) - 1);

  struct Entry {
    std::uint64_t word;
    std::int64_t weight;
  };
  std::vector<Entry> entries;
  entries.reserve(matched.size());
  std::int64_t pseudo = 0;
  for (int pos : matched) {
    std::uint64_t word = fiber_a.payload[prefix_offset(fiber_a.bitmask, pos)];
    std::int64_t weight = fiber_b.payload[prefix_offset(fiber_b.bitmask, pos)];
    entries.push_back({word, weight});
  }

  std::vector<std::int64_t> corr(T, 0);
  const std::uint64_t ready = laggy_latency(cfg);

  std::deque<std::size_t> fifo;  // indices into entries
  std::size_t next_issue = 0;
  std::size_t next_check = 0;  // first entry not yet checked against fiber-A
  std::uint64_t cycle = 0;
  std::uint64_t last_commit = 0;

  while (next_check < entries.size()) {
    ++cycle;
    // Drain stage: after the laggy offsets are ready, discard all-ones heads
    // for free and commit at most one correction per cycle.
    if (cycle > ready) {
      while (!fifo.empty()) {
        const Entry& e = entries[fifo.front()];
        if (e.word == all_ones) {
          fifo.pop_front();
          ++next_check;
          continue;
        }
        for (int t = 0; t < T; ++t) {
          if (((e.word >> (T - 1 - t)) & 1u) == 0) {
            corr[t] += e.weight;
            ++r.correction_writes;
            if (cfg.bit_accurate)
              detail::check_acc_width(corr[t], cfg.corr_acc_bits,
                                      "correction accumulator");
          }
        }
        ++r.corrections;
        fifo.pop_front();
        ++next_check;
        last_commit = cycle;
        break;
      }
    }
    // Fast path: issue one match unless the FIFO is full.
    if (next_issue < entries.size()) {
      if (fifo.size() < static_cast<std::size_t>(cfg.fifo_depth)) {
        pseudo += entries[next_issue].weight;
        if (cfg.bit_accurate)
          detail::check_acc_width(pseudo, cfg.pseudo_acc_bits,
                                  "pseudo accumulator");
        fifo.push_back(next_issue);
        ++next_issue;
        r.fast_path_cycles = cycle;
      } else {
        ++r.stall_cycles;
      }
    }
  }

  r.cycles = std::max({r.fast_path_cycles, ready, last_commit});
  for (int t = 0; t < T; ++t) r.sums[t] = pseudo - corr[t];
  return r;
}

/// Fires the parallel LIF unit for one neuron once its K reduction is done.
/// Returns the T output spikes as a packed word (timestep 0 in the MSB of the
/// T used bits). Timing is a fixed single cycle; the sequential dependence
/// across t is functional only.
inline std::uint64_t plif_fire(const std::vector<std::int64_t>& full_sums,
                               const LifParams& p) {
  int T = static_cast<int>(full_sums.size());
  int frac = membrane_frac_bits(p, T);
  MembraneValue u = static_cast<MembraneValue>(p.u_init) << frac;
  std::uint64_t word = 0;
  for (int t = 0; t < T; ++t) {
    MembraneValue x = (static_cast<MembraneValue>(full_sums[t]) << frac) + u;
    std::uint8_t spike = lif_scalar(x, p, frac, &u);
    word |= static_cast<std::uint64_t>(spike) << (T - 1 - t);
  }
  return word;
}

}  // namespace loas
