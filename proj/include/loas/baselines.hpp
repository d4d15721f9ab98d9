#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "loas/common.hpp"
#include "loas/compress.hpp"
#include "loas/engine.hpp"
#include "loas/memory.hpp"
#include "loas/tensor.hpp"

namespace loas {

// ---------------------------------------------------------------------------
// Sequential-timestep baselines. All three share the fiber cache and DRAM
// model, process the timestep dimension at the innermost sequential level,
// and are idealized in the baseline's favor: one match/merge/accumulate per
// cycle per PE with no pipeline stalls beyond DRAM bandwidth.
//
//   ip-seq   inner-product with per-timestep bitmask joins; the spike train
//            doubles as the bitmask, so A is fetched dense.
//   op-seq   outer-product per timestep; partial-sum cells beyond the on-chip
//            psum buffer spill to DRAM (write + later read back).
//   gust-seq row-wise Gustavson per timestep; B rows selected by A's row
//            nonzeros are merged through a multi-way merger, intermediate
//            partial rows live in the cache and evict as psum traffic.
// ---------------------------------------------------------------------------

enum class BaselineKind { kIpSeq, kOpSeq, kGustSeq };

struct BaselineConfig {
  BaselineKind engine = BaselineKind::kIpSeq;
  int num_pes = 16;
  // Per-join overhead of the sequential loop: bitmask load plus AND/encode.
  int join_setup_cycles = 2;
  std::uint64_t psum_buffer_bytes = 32768;  // op-seq
  int merger_ways = 16;                     // gust-seq
  CacheConfig cache;
  DramConfig dram;

  void validate() const {
    if (num_pes < 1) throw ConfigError("num_pes must be >= 1");
    if (join_setup_cycles < 0) throw ConfigError("join_setup_cycles must be >= 0");
    if (merger_ways < 2) throw ConfigError("merger_ways must be >= 2");
    cache.validate();
    dram.validate();
  }

  std::string canonical_string(const char* name) const {
    return std::string(name) + ";num_pes=" + std::to_string(num_pes) +
           ";join_setup=" + std::to_string(join_setup_cycles) +
           ";psum_buffer=" + std::to_string(psum_buffer_bytes) +
           ";merger_ways=" + std::to_string(merger_ways) +
           ";cache_capacity=" + std::to_string(cache.capacity_bytes) +
           ";cache_assoc=" + std::to_string(cache.associativity) +
           ";cache_line=" + std::to_string(cache.line_bytes) +
           ";dram_bw=" + std::to_string(dram.bandwidth_bytes_per_cycle);
  }
};

namespace detail {

inline void finish_report(SimReport& rep, const FiberCache& cache,
                          const EnergyTable* energy) {
  rep.cache_hits = cache.hits();
  rep.cache_misses = cache.misses();
  rep.cache_miss_rate = cache.miss_rate();
  if (energy) rep.energy = energy_report(rep.traffic, rep.ops, *energy);
}

/// Per-timestep coordinate bitmasks of the dense spike tensor.
inline std::vector<Bitmask128> slice_bitmasks(const SpikeTensor& a, int chunks) {
  std::vector<Bitmask128> bm(static_cast<std::size_t>(a.M) * a.T * chunks);
  for (int m = 0; m < a.M; ++m)
    for (int k = 0; k < a.K; ++k) {
      const std::uint8_t* cell = &a.data[(static_cast<std::size_t>(m) * a.K + k) * a.T];
      int c = k / kChunkSize, pos = k % kChunkSize;
      for (int t = 0; t < a.T; ++t)
        if (cell[t])
          bm[(static_cast<std::size_t>(m) * a.T + t) * chunks + c].set(pos);
    }
  return bm;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ip-seq
// ---------------------------------------------------------------------------

inline SimReport run_ip_seq(const SpikeTensor& a, const WeightMatrix& b,
                            const LifParams& p, const BaselineConfig& cfg,
                            const EnergyTable* energy = nullptr) {
  cfg.validate();
  if (a.K != b.K) throw ShapeError("A.K != B.K");
  int frac = membrane_frac_bits(p, a.T);

  SimReport rep;
  rep.engine = "ip-seq";
  rep.config_hash = hex64(fnv1a(cfg.canonical_string("ip-seq")));
  rep.output = OutputSpikes(a.M, b.N, a.T);

  CompressedWeights cb = compress_weights(b);
  FiberCache cache(cfg.cache);
  detail::FiberImage<std::int8_t> image_b(cb, cache);

  // Dense spike slices, timestep-major; rows pack contiguously.
  std::uint64_t row_bytes = ceil_div(a.K, 8);
  std::uint64_t a_base =
      cache.alloc(static_cast<std::uint64_t>(a.M) * a.T * row_bytes,
                  cfg.cache.line_bytes);

  int chunks = static_cast<int>(ceil_div(a.K, kChunkSize));
  std::vector<Bitmask128> bm = detail::slice_bitmasks(a, chunks);

  detail::PipelineClock clock;
  std::vector<MembraneValue> u;
  std::vector<std::int64_t> x;

  for (int m0 = 0; m0 < a.M; m0 += cfg.num_pes) {
    int m1 = std::min(a.M, m0 + cfg.num_pes);
    for (int n = 0; n < b.N; ++n) {
      u.assign(m1 - m0, static_cast<MembraneValue>(p.u_init) << frac);
      for (int t = 0; t < a.T; ++t) {
        x.assign(m1 - m0, 0);
        for (int c = 0; c < chunks; ++c) {
          std::uint64_t fetch_bytes = 0;
          const Fiber<std::int8_t>& fb = cb.fiber(n, c);
          fetch_bytes += cache
                             .access(image_b.meta_addr(n, c), kFiberMetaBytes,
                                     Traffic::kBMetadata, rep.traffic)
                             .miss_bytes;
          std::uint64_t chunk_bytes =
              ceil_div(std::min(a.K - c * kChunkSize, kChunkSize), 8);
          std::uint64_t max_matches = 0;
          for (int m = m0; m < m1; ++m) {
            // The spike train itself is the bitmask: fetched whole, spikes
            // or not.
            std::uint64_t slice_addr =
                a_base + (static_cast<std::uint64_t>(t) * a.M + m) * row_bytes +
                static_cast<std::uint64_t>(c) * (kChunkSize / 8);
            fetch_bytes += cache
                               .access(slice_addr, chunk_bytes,
                                       Traffic::kAPayload, rep.traffic)
                               .miss_bytes;

            const Bitmask128& bma =
                bm[(static_cast<std::size_t>(m) * a.T + t) * chunks + c];
            ++rep.ops.join_invocations;
            std::uint64_t matches = 0;
            std::int64_t sum = 0;
            for (int pos : and_match(bma, fb.bitmask)) {
              std::int8_t w = fb.payload[prefix_offset(fb.bitmask, pos)];
              auto [addr, len] = image_b.entry_range(n, c,
                  prefix_offset(fb.bitmask, pos), 8);
              fetch_bytes += cache
                                 .access(addr, len, Traffic::kBPayload,
                                         rep.traffic)
                                 .miss_bytes;
              sum += w;
              ++matches;
            }
            x[m - m0] += sum;
            rep.ops.matches += matches;
            rep.ops.accumulates += matches;
            rep.ops.fast_prefix_invocations += matches;
            max_matches = std::max(max_matches, matches);
          }
          clock.step(fetch_bytes, cfg.join_setup_cycles + max_matches, cfg.dram);
        }
        // Sequential LIF for this timestep.
        for (int m = m0; m < m1; ++m) {
          MembraneValue xx =
              (static_cast<MembraneValue>(x[m - m0]) << frac) + u[m - m0];
          std::uint8_t spike = lif_scalar(xx, p, frac, &u[m - m0]);
          rep.output.set(m, n, t, spike);
        }
        rep.ops.lif_ops += m1 - m0;
        rep.traffic.sram(Traffic::kOutput) += m1 - m0;
        clock.step(0, 1, cfg.dram);
      }
    }
  }

  // Raw spike-train output, one bit per (m, n, t).
  rep.traffic.dram(Traffic::kOutput) +=
      ceil_div(static_cast<std::uint64_t>(a.M) * b.N * a.T, 8);
  rep.total_cycles = clock.compute_end;
  detail::finish_report(rep, cache, energy);
  return rep;
}

// ---------------------------------------------------------------------------
// op-seq
// ---------------------------------------------------------------------------

inline SimReport run_op_seq(const SpikeTensor& a, const WeightMatrix& b,
                            const LifParams& p, const BaselineConfig& cfg,
                            const EnergyTable* energy = nullptr) {
  cfg.validate();
  if (a.K != b.K) throw ShapeError("A.K != B.K");
  int frac = membrane_frac_bits(p, a.T);

  SimReport rep;
  rep.engine = "op-seq";
  rep.config_hash = hex64(fnv1a(cfg.canonical_string("op-seq")));
  rep.output = OutputSpikes(a.M, b.N, a.T);

  FiberCache cache(cfg.cache);

  // B rows as CSR: per row a 4-byte pointer plus 2-byte coords, then values.
  struct BRow {
    std::vector<std::pair<int, std::int8_t>> nz;
    std::uint64_t meta_addr = 0, meta_bytes = 0;
    std::uint64_t val_addr = 0, val_bytes = 0;
    std::uint64_t slice_max = 0;  // largest PE output-slice share
  };
  std::vector<BRow> brows(a.K);
  int slice_width = static_cast<int>(ceil_div(b.N, cfg.num_pes));
  for (int k = 0; k < a.K; ++k) {
    std::vector<std::uint64_t> slice_count(cfg.num_pes, 0);
    for (int n = 0; n < b.N; ++n) {
      std::int8_t w = b.at(k, n);
      if (w == 0) continue;
      brows[k].nz.emplace_back(n, w);
      ++slice_count[n / slice_width];
    }
    for (auto c : slice_count) brows[k].slice_max = std::max(brows[k].slice_max, c);
    brows[k].meta_bytes = 4 + 2 * brows[k].nz.size();
    brows[k].val_bytes = brows[k].nz.size();
  }
  for (int k = 0; k < a.K; ++k) {
    brows[k].meta_addr = cache.alloc(brows[k].meta_bytes);
    brows[k].val_addr = cache.alloc(brows[k].val_bytes);
  }

  // A columns as per-timestep CSC coordinate lists.
  struct ACol {
    std::vector<int> rows;
    std::uint64_t addr = 0, bytes = 0;
  };
  std::vector<ACol> acols(static_cast<std::size_t>(a.T) * a.K);
  for (int m = 0; m < a.M; ++m)
    for (int k = 0; k < a.K; ++k)
      for (int t = 0; t < a.T; ++t)
        if (a.at(m, k, t))
          acols[static_cast<std::size_t>(t) * a.K + k].rows.push_back(m);
  for (auto& col : acols) {
    col.bytes = 4 + 2 * col.rows.size();
    col.addr = cache.alloc(col.bytes);
  }

  std::size_t cells = static_cast<std::size_t>(a.M) * b.N;
  std::uint64_t resident_cells = cfg.psum_buffer_bytes / 4;
  std::vector<std::int64_t> psum(cells);
  std::vector<std::uint32_t> touch_rank(cells);
  MembraneMatrix u(a.M, b.N, frac, p.u_init);
  detail::PipelineClock clock;

  for (int t = 0; t < a.T; ++t) {
    std::fill(psum.begin(), psum.end(), 0);
    std::fill(touch_rank.begin(), touch_rank.end(), 0xffffffffu);
    std::uint32_t touched = 0;

    for (int k = 0; k < a.K; ++k) {
      const ACol& col = acols[static_cast<std::size_t>(t) * a.K + k];
      std::uint64_t fetch_bytes = 0;
      fetch_bytes += cache
                         .access(col.addr, col.bytes, Traffic::kAMetadata,
                                 rep.traffic)
                         .miss_bytes;
      if (col.rows.empty()) {
        clock.step(fetch_bytes, 0, cfg.dram);
        continue;
      }
      const BRow& row = brows[k];
      fetch_bytes += cache
                         .access(row.meta_addr, row.meta_bytes,
                                 Traffic::kBMetadata, rep.traffic)
                         .miss_bytes;
      if (!row.nz.empty())
        fetch_bytes += cache
                           .access(row.val_addr, row.val_bytes,
                                   Traffic::kBPayload, rep.traffic)
                           .miss_bytes;

      std::uint64_t spilled_updates = 0;
      for (int m : col.rows) {
        std::size_t base = static_cast<std::size_t>(m) * b.N;
        for (const auto& [n, w] : row.nz) {
          std::size_t cell = base + n;
          if (touch_rank[cell] == 0xffffffffu) touch_rank[cell] = touched++;
          psum[cell] += w;
          if (touch_rank[cell] >= resident_cells) ++spilled_updates;
        }
      }
      std::uint64_t updates =
          static_cast<std::uint64_t>(col.rows.size()) * row.nz.size();
      rep.ops.matches += updates;
      rep.ops.accumulates += updates;
      rep.traffic.sram(Traffic::kPsum) += updates;
      // Spilled partials are written off-chip and read back once for merge.
      std::uint64_t psum_bytes = 8 * spilled_updates;
      rep.traffic.dram(Traffic::kPsum) += psum_bytes;
      ++rep.ops.join_invocations;

      // One broadcast round per spiking input; each round is gated by the
      // fullest PE output slice.
      std::uint64_t compute =
          static_cast<std::uint64_t>(col.rows.size()) * (1 + row.slice_max);
      clock.step(fetch_bytes + psum_bytes, compute, cfg.dram);
    }

    // Stream the timestep's psums through the LIF units.
    for (int m = 0; m < a.M; ++m)
      for (int n = 0; n < b.N; ++n) {
        MembraneValue x =
            (static_cast<MembraneValue>(psum[static_cast<std::size_t>(m) * b.N + n])
             << frac) +
            u.at(m, n);
        rep.output.set(m, n, t, lif_scalar(x, p, frac, &u.at(m, n)));
      }
    rep.ops.lif_ops += cells;
    rep.traffic.sram(Traffic::kOutput) += cells;
    clock.step(0, ceil_div(cells, cfg.num_pes), cfg.dram);
  }

  rep.traffic.dram(Traffic::kOutput) +=
      ceil_div(static_cast<std::uint64_t>(a.M) * b.N * a.T, 8);
  rep.total_cycles = clock.compute_end;
  detail::finish_report(rep, cache, energy);
  return rep;
}

// ---------------------------------------------------------------------------
// gust-seq
// ---------------------------------------------------------------------------

inline SimReport run_gust_seq(const SpikeTensor& a, const WeightMatrix& b,
                              const LifParams& p, const BaselineConfig& cfg,
                              const EnergyTable* energy = nullptr) {
  cfg.validate();
  if (a.K != b.K) throw ShapeError("A.K != B.K");
  int frac = membrane_frac_bits(p, a.T);

  SimReport rep;
  rep.engine = "gust-seq";
  rep.config_hash = hex64(fnv1a(cfg.canonical_string("gust-seq")));
  rep.output = OutputSpikes(a.M, b.N, a.T);

  FiberCache cache(cfg.cache);

  // B rows with coordinate bitmasks per 128-column chunk.
  struct BRow {
    std::vector<std::pair<int, std::int8_t>> nz;
    std::uint64_t meta_addr = 0, meta_bytes = 0;
    std::uint64_t val_addr = 0, val_bytes = 0;
  };
  int nchunks = static_cast<int>(ceil_div(b.N, kChunkSize));
  std::vector<BRow> brows(a.K);
  for (int k = 0; k < a.K; ++k) {
    for (int n = 0; n < b.N; ++n) {
      std::int8_t w = b.at(k, n);
      if (w != 0) brows[k].nz.emplace_back(n, w);
    }
    brows[k].meta_bytes = static_cast<std::uint64_t>(nchunks) * kFiberMetaBytes;
    brows[k].val_bytes = brows[k].nz.size();
  }
  for (int k = 0; k < a.K; ++k) {
    brows[k].meta_addr = cache.alloc(brows[k].meta_bytes);
    brows[k].val_addr = cache.alloc(brows[k].val_bytes);
  }

  // A rows as per-timestep coordinate lists.
  struct ARow {
    std::vector<int> cols;
    std::uint64_t addr = 0, bytes = 0;
  };
  std::vector<ARow> arows(static_cast<std::size_t>(a.T) * a.M);
  for (int m = 0; m < a.M; ++m)
    for (int k = 0; k < a.K; ++k)
      for (int t = 0; t < a.T; ++t)
        if (a.at(m, k, t))
          arows[static_cast<std::size_t>(t) * a.M + m].cols.push_back(k);
  for (auto& row : arows) {
    row.bytes = 4 + 2 * row.cols.size();
    row.addr = cache.alloc(row.bytes);
  }

  // Scratch ring for intermediate partial rows; entries are 6 bytes
  // (2-byte coordinate + 4-byte value). Reused across merges, so capacity
  // pressure against B rows shows up as psum evictions.
  const std::uint64_t scratch_bytes = 1u << 20;
  std::uint64_t scratch_base = cache.alloc(scratch_bytes, cfg.cache.line_bytes);
  std::uint64_t scratch_cursor = 0;
  auto scratch_alloc = [&](std::uint64_t bytes) {
    if (scratch_cursor + bytes > scratch_bytes) scratch_cursor = 0;
    std::uint64_t addr = scratch_base + scratch_cursor;
    scratch_cursor += bytes;
    return addr;
  };

  MembraneMatrix u(a.M, b.N, frac, p.u_init);
  std::vector<std::int64_t> acc(b.N);
  detail::PipelineClock clock;
  std::vector<std::uint64_t> pe_cycles(cfg.num_pes);

  struct Run {  // a sorted partial row in the merge tree
    std::vector<int> coords;
    std::uint64_t addr = 0;
    bool in_scratch = false;
  };

  for (int t = 0; t < a.T; ++t) {
    std::fill(pe_cycles.begin(), pe_cycles.end(), 0);
    std::uint64_t fetch_bytes_t = 0;

    for (int m = 0; m < a.M; ++m) {
      const ARow& arow = arows[static_cast<std::size_t>(t) * a.M + m];
      fetch_bytes_t += cache
                           .access(arow.addr, arow.bytes, Traffic::kAMetadata,
                                   rep.traffic)
                           .miss_bytes;
      std::fill(acc.begin(), acc.end(), 0);
      std::uint64_t cycles = 0;
      if (!arow.cols.empty()) ++rep.ops.join_invocations;

      // Round 1 operands: the selected B rows, streamed from the cache.
      std::vector<Run> runs;
      runs.reserve(arow.cols.size());
      for (int k : arow.cols) {
        const BRow& row = brows[k];
        fetch_bytes_t += cache
                             .access(row.meta_addr, row.meta_bytes,
                                     Traffic::kBMetadata, rep.traffic)
                             .miss_bytes;
        if (row.nz.empty()) continue;
        // The merger touches operands one element per cycle.
        fetch_bytes_t += cache
                             .access(row.val_addr, row.val_bytes,
                                     Traffic::kBPayload, rep.traffic,
                                     /*is_write=*/false,
                                     /*sram_units=*/row.nz.size())
                             .miss_bytes;
        Run r;
        r.coords.reserve(row.nz.size());
        for (const auto& [n, w] : row.nz) {
          r.coords.push_back(n);
          acc[n] += w;  // scaling by a unary spike is the accumulation itself
        }
        rep.ops.accumulates += row.nz.size();
        runs.push_back(std::move(r));
      }

      // Merge tree: up to merger_ways runs combine per group; the merger
      // reads every operand element and emits every output element.
      if (runs.size() == 1) {
        cycles += 1 + runs[0].coords.size();  // direct row copy, no merging
        rep.ops.matches += runs[0].coords.size();
      }
      while (runs.size() > 1) {
        std::vector<Run> next;
        for (std::size_t g = 0; g < runs.size(); g += cfg.merger_ways) {
          std::size_t end = std::min(runs.size(), g + cfg.merger_ways);
          std::vector<int> merged;
          for (std::size_t i = g; i < end; ++i) {
            const Run& r = runs[i];
            cycles += 1 + r.coords.size();  // header + element reads
            rep.ops.matches += r.coords.size();
            if (r.in_scratch) {
              std::uint64_t bytes = 6 * r.coords.size();
              fetch_bytes_t += cache
                                   .access(r.addr, bytes, Traffic::kPsum,
                                           rep.traffic, /*is_write=*/false,
                                           /*sram_units=*/r.coords.size())
                                   .miss_bytes;
              // Consumed partial rows are dead; only pre-consumption
              // evictions count as psum spills.
              cache.discard(r.addr, bytes);
            }
            std::vector<int> tmp;
            tmp.reserve(merged.size() + r.coords.size());
            std::set_union(merged.begin(), merged.end(), r.coords.begin(),
                           r.coords.end(), std::back_inserter(tmp));
            merged.swap(tmp);
          }
          cycles += merged.size();  // emitted elements
          bool is_final = (end - g) == runs.size() && next.empty();
          Run out;
          out.coords = std::move(merged);
          if (!is_final && !out.coords.empty()) {
            std::uint64_t bytes = 6 * out.coords.size();
            out.addr = scratch_alloc(bytes);
            out.in_scratch = true;
            cache.access(out.addr, bytes, Traffic::kPsum, rep.traffic,
                         /*is_write=*/true, /*sram_units=*/out.coords.size());
          }
          next.push_back(std::move(out));
        }
        runs.swap(next);
      }

      // Fire the row through the LIF units; leak applies even when no input
      // spiked this timestep.
      std::size_t final_size = runs.empty() ? 0 : runs[0].coords.size();
      for (int n = 0; n < b.N; ++n) {
        MembraneValue x =
            (static_cast<MembraneValue>(acc[n]) << frac) + u.at(m, n);
        rep.output.set(m, n, t, lif_scalar(x, p, frac, &u.at(m, n)));
      }
      rep.ops.lif_ops += b.N;
      rep.traffic.sram(Traffic::kOutput) += 1 + final_size;
      pe_cycles[m % cfg.num_pes] += cycles;
    }

    std::uint64_t compute_t = 0;
    for (auto c : pe_cycles) compute_t = std::max(compute_t, c);
    clock.step(fetch_bytes_t, compute_t, cfg.dram);
  }

  rep.traffic.dram(Traffic::kOutput) +=
      ceil_div(static_cast<std::uint64_t>(a.M) * b.N * a.T, 8);
  rep.total_cycles = clock.compute_end;
  detail::finish_report(rep, cache, energy);
  return rep;
}

inline SimReport run_baseline(const SpikeTensor& a, const WeightMatrix& b,
                              const LifParams& p, const BaselineConfig& cfg,
                              const EnergyTable* energy = nullptr) {
  switch (cfg.engine) {
    case BaselineKind::kIpSeq: return run_ip_seq(a, b, p, cfg, energy);
    case BaselineKind::kOpSeq: return run_op_seq(a, b, p, cfg, energy);
    case BaselineKind::kGustSeq: return run_gust_seq(a, b, p, cfg, energy);
  }
  throw ConfigError("unknown baseline engine");
}

}  // namespace loas
