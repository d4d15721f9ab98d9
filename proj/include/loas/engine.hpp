#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "loas/common.hpp"
#include "loas/compress.hpp"
#include "loas/memory.hpp"
#include "loas/tensor.hpp"
#include "loas/tppe.hpp"

namespace loas {

// ---------------------------------------------------------------------------
// Fully temporal-parallel engine: 16 TPPEs each own one output row of the
// current m-group and produce the full sums of one output neuron across all
// timesteps. For every output column the B-fiber chunks are broadcast, each
// TPPE joins its resident A-row chunk against them, and after the last chunk
// the P-LIF units fire all T output spikes at once.
//
// Timing model. A chunk step costs the broadcast plus the slowest TPPE's
// fast-path cycles; laggy prefix-sum and correction drains overlap the next
// chunk's work and only the final chunk's drain is exposed before P-LIF.
// Fiber fetches are double-buffered: DRAM serves steps in order and a step's
// compute starts once both the previous compute and its own data are done.
// ---------------------------------------------------------------------------

struct HwConfig {
  int num_tppes = 16;
  TppeConfig tppe;
  CacheConfig cache;
  DramConfig dram;
  int broadcast_latency_cycles = 1;

  void validate() const {
    if (num_tppes < 1) throw ConfigError("num_tppes must be >= 1");
    tppe.validate();
    cache.validate();
    dram.validate();
    if (broadcast_latency_cycles < 0)
      throw ConfigError("broadcast latency must be >= 0");
  }

  std::string canonical_string() const {
    return "num_tppes=" + std::to_string(num_tppes) +
           ";laggy_adders=" + std::to_string(tppe.laggy_adders) +
           ";fifo_depth=" + std::to_string(tppe.fifo_depth) +
           ";weight_buffer_bytes=" + std::to_string(tppe.weight_buffer_bytes) +
           ";pseudo_acc_bits=" + std::to_string(tppe.pseudo_acc_bits) +
           ";corr_acc_bits=" + std::to_string(tppe.corr_acc_bits) +
           ";bit_accurate=" + std::to_string(tppe.bit_accurate ? 1 : 0) +
           ";cache_capacity=" + std::to_string(cache.capacity_bytes) +
           ";cache_banks=" + std::to_string(cache.banks) +
           ";cache_assoc=" + std::to_string(cache.associativity) +
           ";cache_line=" + std::to_string(cache.line_bytes) +
           ";dram_bw=" + std::to_string(dram.bandwidth_bytes_per_cycle) +
           ";broadcast=" + std::to_string(broadcast_latency_cycles);
  }
};

struct SimReport {
  std::string engine;
  std::string workload_id;
  std::string config_hash;
  std::uint64_t total_cycles = 0;
  TrafficCounters traffic;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  double cache_miss_rate = 0.0;
  OpCounts ops;
  std::uint64_t stall_cycles = 0;
  std::uint64_t a_fiber_fetches = 0;  // distinct A fibers pulled from DRAM
  std::optional<EnergyReport> energy;
  OutputSpikes output;

  std::uint64_t output_hash() const {
    std::uint64_t h = fnv1a(output.data.data(), output.data.size());
    h = fnv1a(&output.M, sizeof(output.M), h);
    h = fnv1a(&output.N, sizeof(output.N), h);
    h = fnv1a(&output.T, sizeof(output.T), h);
    return h;
  }
};

struct TileStep {
  int m_begin = 0;
  int m_end = 0;  // exclusive
  int n = 0;
  int chunk = 0;
};

/// Deterministic work order: m-groups of at most num_tppes rows, then output
/// columns, then k-chunks. Covers every (m-group, n, chunk) exactly once.
inline std::vector<TileStep> schedule_tiles(int M, int N, int K, int num_tppes) {
  if (M < 1 || N < 1 || K < 1 || num_tppes < 1)
    throw ConfigError("schedule dims must be >= 1");
  int chunks = static_cast<int>(ceil_div(K, kChunkSize));
  std::vector<TileStep> steps;
  steps.reserve(static_cast<std::size_t>(ceil_div(M, num_tppes)) * N * chunks);
  for (int m0 = 0; m0 < M; m0 += num_tppes) {
    int m1 = std::min(M, m0 + num_tppes);
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < chunks; ++c) steps.push_back({m0, m1, n, c});
  }
  return steps;
}

struct OutputCompression {
  std::uint64_t stored_words = 0;
  std::uint64_t dropped_words = 0;
  std::uint64_t payload_bytes = 0;
  std::uint64_t metadata_bytes = 0;
};

/// Output compressor accounting for one fired tile. Neurons with zero or one
/// spike across all timesteps are dropped from the stored payload; the
/// 1-bit-per-neuron coordinate mask is charged as metadata.
inline OutputCompression compress_outputs(const std::vector<std::uint64_t>& tile,
                                          int T) {
  OutputCompression oc;
  for (std::uint64_t w : tile) {
    if (__builtin_popcountll(w) >= 2)
      ++oc.stored_words;
    else
      ++oc.dropped_words;
  }
  oc.payload_bytes = ceil_div(oc.stored_words * T, 8);
  oc.metadata_bytes = ceil_div(tile.size(), 8);
  return oc;
}

namespace detail {

/// Fetch/compute overlap: DRAM serves step fetches in order; a step's compute
/// starts when the previous compute and its own fetch are both done.
struct PipelineClock {
  std::uint64_t fetch_ready = 0;
  std::uint64_t compute_end = 0;
  std::uint64_t dram_busy = 0;

  void step(std::uint64_t fetch_bytes, std::uint64_t compute_cycles,
            const DramConfig& dram) {
    fetch_ready = std::max(fetch_ready, dram_busy) + dram_cycles(fetch_bytes, dram);
    dram_busy = fetch_ready;
    std::uint64_t start = std::max(compute_end, fetch_ready);
    compute_end = start + compute_cycles;
  }
};

/// DRAM image of one compressed matrix: per major (row or column) a chain of
/// chunk fibers, with all chunk metadata blocks packed first and the payload
/// slices packed behind them. Chains start on fresh cache lines.
template <typename Payload>
struct FiberImage {
  struct Chain {
    std::uint64_t base = 0;
    std::uint64_t payload_off = 0;          // from base
    std::vector<std::uint64_t> slice_off;   // payload slice per chunk, from base
    std::vector<std::uint64_t> slice_bytes;
    std::uint64_t total_bytes = 0;
  };
  std::vector<Chain> chains;

  FiberImage(const CompressedMatrix<Payload>& c, FiberCache& cache) {
    chains.resize(c.majors);
    int nchunks = c.chunks();
    std::uint64_t line = cache.config().line_bytes;
    for (int major = 0; major < c.majors; ++major) {
      Chain& ch = chains[major];
      // Metadata blocks are padded to a line boundary so metadata and
      // payload traffic never share a line; metadata charges are then
      // independent of the payload word width.
      ch.payload_off =
          ceil_div(static_cast<std::uint64_t>(nchunks) * kFiberMetaBytes, line) *
          line;
      std::uint64_t off = ch.payload_off;
      ch.slice_off.resize(nchunks);
      ch.slice_bytes.resize(nchunks);
      for (int k = 0; k < nchunks; ++k) {
        ch.slice_off[k] = off;
        ch.slice_bytes[k] =
            fiber_payload_bytes(c.fiber(major, k).payload.size(), c.word_bits);
        off += ch.slice_bytes[k];
      }
      ch.total_bytes = off;
      ch.base = cache.alloc(off, cache.config().line_bytes);
    }
  }

  std::uint64_t meta_addr(int major, int chunk) const {
    return chains[major].base + static_cast<std::uint64_t>(chunk) * kFiberMetaBytes;
  }
  std::uint64_t payload_addr(int major, int chunk) const {
    return chains[major].base + chains[major].slice_off[chunk];
  }
  /// Byte range of one payload entry inside a chunk slice.
  std::pair<std::uint64_t, std::uint64_t> entry_range(int major, int chunk,
                                                      int entry_idx,
                                                      int word_bits) const {
    std::uint64_t first_bit = static_cast<std::uint64_t>(entry_idx) * word_bits;
    std::uint64_t last_bit = first_bit + word_bits - 1;
    std::uint64_t lo = payload_addr(major, chunk) + first_bit / 8;
    std::uint64_t hi = payload_addr(major, chunk) + last_bit / 8;
    return {lo, hi - lo + 1};
  }
};

}  // namespace detail

inline SimReport run_ftp(const SpikeTensor& a, const WeightMatrix& b,
                         const LifParams& p, const HwConfig& hw,
                         const EnergyTable* energy = nullptr) {
  hw.validate();
  if (a.K != b.K) throw ShapeError("A.K != B.K");
  int frac_guard = membrane_frac_bits(p, a.T);
  (void)frac_guard;

  SimReport rep;
  rep.engine = "ftp";
  rep.config_hash = hex64(fnv1a(hw.canonical_string()));
  rep.output = OutputSpikes(a.M, b.N, a.T);

  PackedSpikeMatrix packed = pack_spikes(a);
  CompressedSpikes ca = compress_rows(packed);
  CompressedWeights cb = compress_weights(b);

  FiberCache cache(hw.cache);
  detail::FiberImage<std::uint64_t> image_a(ca, cache);
  detail::FiberImage<std::int8_t> image_b(cb, cache);

  int chunks = ca.chunks();
  int T = a.T;
  std::vector<char> a_fiber_fetched(ca.fibers.size(), 0);

  detail::PipelineClock clock;
  std::vector<std::vector<std::int64_t>> sums;  // per TPPE, per timestep
  std::vector<std::uint64_t> tile_words;

  for (int m0 = 0; m0 < a.M; m0 += hw.num_tppes) {
    int m1 = std::min(a.M, m0 + hw.num_tppes);
    // A rows of the in-flight group stay pinned for maximum reuse.
    for (int m = m0; m < m1; ++m)
      cache.pin(image_a.chains[m].base, image_a.chains[m].total_bytes);

    for (int n = 0; n < b.N; ++n) {
      cache.pin(image_b.chains[n].base, image_b.chains[n].total_bytes);
      sums.assign(m1 - m0, std::vector<std::int64_t>(T, 0));
      std::uint64_t exposed_tail = 0;

      for (int c = 0; c < chunks; ++c) {
        std::uint64_t fetch_bytes = 0;
        const Fiber<std::int8_t>& fb = cb.fiber(n, c);
        // Broadcast of bm-B and the chunk's non-zero weights. A chunk whose
        // payload exceeds the TPPE weight buffer needs one broadcast round
        // per buffer fill.
        std::uint64_t b_slice = image_b.chains[n].slice_bytes[c];
        std::uint64_t broadcasts =
            std::max<std::uint64_t>(1, ceil_div(b_slice, hw.tppe.weight_buffer_bytes));
        fetch_bytes += cache
                           .access(image_b.meta_addr(n, c), kFiberMetaBytes,
                                   Traffic::kBMetadata, rep.traffic)
                           .miss_bytes;
        if (!fb.payload.empty())
          fetch_bytes += cache
                             .access(image_b.payload_addr(n, c), b_slice,
                                     Traffic::kBPayload, rep.traffic)
                             .miss_bytes;

        std::uint64_t max_fast = 0;
        std::uint64_t sum_fast = 0;
        std::uint64_t last_chunk_tail = 0;
        for (int m = m0; m < m1; ++m) {
          const Fiber<std::uint64_t>& fa = ca.fiber(m, c);
          std::size_t fiber_idx = static_cast<std::size_t>(m) * chunks + c;
          auto meta = cache.access(image_a.meta_addr(m, c), kFiberMetaBytes,
                                   Traffic::kAMetadata, rep.traffic);
          fetch_bytes += meta.miss_bytes;
          if (meta.miss_bytes > 0 && !a_fiber_fetched[fiber_idx]) {
            a_fiber_fetched[fiber_idx] = 1;
            ++rep.a_fiber_fetches;
          }

          JoinResult jr = tppe_join_chunk(fa, fb, T, hw.tppe);
          ++rep.ops.join_invocations;
          if (jr.matches > 0) ++rep.ops.laggy_prefix_invocations;
          rep.ops.matches += jr.matches;
          rep.ops.fast_prefix_invocations += jr.matches;
          rep.ops.corrections += jr.corrections;
          rep.ops.accumulates += jr.matches + jr.correction_writes;
          rep.stall_cycles += jr.stall_cycles;

          // Matched spike words are fetched lazily from the payload slice.
          std::vector<int> matched = and_match(fa.bitmask, fb.bitmask);
          for (int pos : matched) {
            int idx = prefix_offset(fa.bitmask, pos);
            auto [addr, len] = image_a.entry_range(m, c, idx, T);
            fetch_bytes +=
                cache.access(addr, len, Traffic::kAPayload, rep.traffic).miss_bytes;
          }

          for (int t = 0; t < T; ++t) sums[m - m0][t] += jr.sums[t];
          max_fast = std::max(max_fast, jr.fast_path_cycles);
          sum_fast += jr.fast_path_cycles;
          if (c == chunks - 1)
            last_chunk_tail = std::max(
                last_chunk_tail,
                jr.cycles > jr.fast_path_cycles ? jr.cycles - jr.fast_path_cycles : 0);
        }
        rep.ops.idle_cycles += static_cast<std::uint64_t>(m1 - m0) * max_fast - sum_fast;
        if (c == chunks - 1) exposed_tail = last_chunk_tail;

        std::uint64_t compute =
            static_cast<std::uint64_t>(hw.broadcast_latency_cycles) * broadcasts +
            max_fast;
        if (c == chunks - 1) compute += exposed_tail + 1;  // drain + P-LIF
        clock.step(fetch_bytes, compute, hw.dram);
      }

      // Fire the P-LIF units and compress the finished output tile.
      tile_words.assign(m1 - m0, 0);
      for (int m = m0; m < m1; ++m) {
        std::uint64_t word = plif_fire(sums[m - m0], p);
        tile_words[m - m0] = word;
        rep.ops.lif_ops += T;
        for (int t = 0; t < T; ++t)
          rep.output.set(m, n, t,
                         static_cast<std::uint8_t>((word >> (T - 1 - t)) & 1u));
      }
      OutputCompression oc = compress_outputs(tile_words, T);
      rep.traffic.dram(Traffic::kOutput) += oc.payload_bytes + oc.metadata_bytes;
      rep.traffic.sram(Traffic::kOutput) += oc.stored_words + 1;
      // Row-fiber pointer for every completed 128-column output chunk.
      if ((n + 1) % kChunkSize == 0 || n == b.N - 1)
        rep.traffic.dram(Traffic::kOutput) += 4 * (m1 - m0);

      cache.unpin(image_b.chains[n].base, image_b.chains[n].total_bytes);
    }
    for (int m = m0; m < m1; ++m)
      cache.unpin(image_a.chains[m].base, image_a.chains[m].total_bytes);
  }

  rep.total_cycles = clock.compute_end;
  rep.cache_hits = cache.hits();
  rep.cache_misses = cache.misses();
  rep.cache_miss_rate = cache.miss_rate();
  if (energy) rep.energy = energy_report(rep.traffic, rep.ops, *energy);
  return rep;
}

}  // namespace loas
