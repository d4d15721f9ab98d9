#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "loas/common.hpp"
#include "loas/compress.hpp"
#include "loas/tensor.hpp"

namespace loas {

// ---------------------------------------------------------------------------
// Synthetic workload generation with simultaneous control of the original
// (per-bit) spike sparsity and the silent-neuron fraction, plus the LOASW1
// on-disk container.
//
// Generation is two-stage: first the silent mask is sampled at the exact
// target count, then every non-silent neuron receives one guaranteed spike
// and the remaining spike budget fills the other slots at the residual rate.
// ---------------------------------------------------------------------------

struct WorkloadSpec {
  std::string name = "custom";
  int T = 4, M = 16, N = 16, K = 128;
  double origin_sparsity = 0.8;   // fraction of zero (m,k,t) bits
  double silent_fraction = 0.6;   // fraction of all-zero packed words
  double weight_sparsity = 0.9;   // fraction of zero weights
  LifParams lif;
  std::uint64_t seed = 1;

  void validate() const {
    if (T < 1 || T > kMaxTimesteps || M < 1 || N < 1 || K < 1)
      throw ConfigError("workload dims out of range");
    if (origin_sparsity < 0 || origin_sparsity > 1 || silent_fraction < 0 ||
        silent_fraction > 1 || weight_sparsity < 0 || weight_sparsity > 1)
      throw ConfigError("sparsities must be in [0, 1]");
    // Silent neurons contribute T zeros each, and non-silent neurons fire at
    // least once, so the zero-bit fraction is pinned between these bounds.
    if (origin_sparsity + 1e-9 < silent_fraction)
      throw ConfigError("origin sparsity below silent fraction is infeasible");
    double max_origin = 1.0 - (1.0 - silent_fraction) / T;
    if (origin_sparsity > max_origin + 1e-9)
      throw ConfigError("origin sparsity too high: non-silent neurons must spike");
    lif.validate();
  }
};

inline SpikeTensor gen_spikes(const WorkloadSpec& spec) {
  spec.validate();
  Rng rng(spec.seed * 0x9e3779b97f4a7c15ull + 1);
  std::size_t cells = static_cast<std::size_t>(spec.M) * spec.K;
  std::size_t silent_count = static_cast<std::size_t>(
      std::llround(spec.silent_fraction * static_cast<double>(cells)));

  std::vector<std::uint32_t> order(cells);
  for (std::size_t i = 0; i < cells; ++i) order[i] = static_cast<std::uint32_t>(i);
  for (std::size_t i = cells - 1; i > 0; --i)
    std::swap(order[i], order[rng.below(i + 1)]);

  std::vector<std::uint8_t> silent(cells, 0);
  for (std::size_t i = 0; i < silent_count; ++i) silent[order[i]] = 1;

  SpikeTensor a(spec.M, spec.K, spec.T);
  std::size_t nonsilent = cells - silent_count;
  double total_bits = static_cast<double>(cells) * spec.T;
  double target_spikes = (1.0 - spec.origin_sparsity) * total_bits;
  double extra = target_spikes - static_cast<double>(nonsilent);
  double fill_rate =
      (spec.T > 1 && nonsilent > 0)
          ? extra / (static_cast<double>(nonsilent) * (spec.T - 1))
          : 0.0;
  if (fill_rate < 0) fill_rate = 0;
  if (fill_rate > 1) fill_rate = 1;

  for (std::size_t cell = 0; cell < cells; ++cell) {
    if (silent[cell]) continue;
    int m = static_cast<int>(cell / spec.K);
    int k = static_cast<int>(cell % spec.K);
    int first = static_cast<int>(rng.below(spec.T));
    a.set(m, k, first, 1);
    for (int t = 0; t < spec.T; ++t) {
      if (t == first) continue;
      if (rng.unit() < fill_rate) a.set(m, k, t, 1);
    }
  }
  return a;
}

inline WeightMatrix gen_weights(int K, int N, double sparsity,
                                std::uint64_t seed) {
  if (sparsity < 0 || sparsity > 1) throw ConfigError("weight sparsity in [0,1]");
  Rng rng(seed * 0x2545f4914f6cdd1dull + 7);
  std::size_t cells = static_cast<std::size_t>(K) * N;
  std::size_t zero_count = static_cast<std::size_t>(
      std::llround(sparsity * static_cast<double>(cells)));

  std::vector<std::uint32_t> order(cells);
  for (std::size_t i = 0; i < cells; ++i) order[i] = static_cast<std::uint32_t>(i);
  for (std::size_t i = cells - 1; i > 0; --i)
    std::swap(order[i], order[rng.below(i + 1)]);

  WeightMatrix b(K, N);
  for (std::size_t i = zero_count; i < cells; ++i) {
    std::size_t cell = order[i];
    std::uint64_t r = rng.below(255);  // [-128, 127] minus zero
    std::int8_t v = (r < 128) ? static_cast<std::int8_t>(static_cast<int>(r) - 128)
                              : static_cast<std::int8_t>(static_cast<int>(r) - 127);
    b.data[cell] = v;
  }
  return b;
}

inline WorkloadSpec preset(const std::string& name) {
  WorkloadSpec s;
  s.name = name;
  s.lif.v_th = 32;
  s.lif.tau_log2 = 1;
  if (name == "A-L4") {
    s.T = 4; s.M = 64; s.N = 256; s.K = 3456;
    s.origin_sparsity = 0.758; s.silent_fraction = 0.632; s.weight_sparsity = 0.989;
  } else if (name == "A-L4-ft") {
    s.T = 4; s.M = 64; s.N = 256; s.K = 3456;
    s.origin_sparsity = 0.775; s.silent_fraction = 0.697; s.weight_sparsity = 0.989;
  } else if (name == "V-L8") {
    s.T = 4; s.M = 16; s.N = 512; s.K = 2304;
    s.origin_sparsity = 0.881; s.silent_fraction = 0.765; s.weight_sparsity = 0.968;
  } else if (name == "V-L8-ft") {
    s.T = 4; s.M = 16; s.N = 512; s.K = 2304;
    s.origin_sparsity = 0.900; s.silent_fraction = 0.868; s.weight_sparsity = 0.968;
  } else if (name == "R-L19") {
    s.T = 4; s.M = 16; s.N = 512; s.K = 2304;
    s.origin_sparsity = 0.579; s.silent_fraction = 0.514; s.weight_sparsity = 0.991;
  } else if (name == "R-L19-ft") {
    s.T = 4; s.M = 16; s.N = 512; s.K = 2304;
    s.origin_sparsity = 0.600; s.silent_fraction = 0.557; s.weight_sparsity = 0.991;
  } else if (name == "T-HFF") {
    // No per-bit sparsity target exists for this layer; chosen so non-silent
    // neurons average two spikes.
    s.T = 4; s.M = 784; s.N = 3072; s.K = 3072;
    s.origin_sparsity = 0.934; s.silent_fraction = 0.868; s.weight_sparsity = 0.968;
  } else {
    throw ConfigError("unknown preset: " + name);
  }
  return s;
}

struct Workload {
  SpikeTensor spikes;
  WeightMatrix weights;
  LifParams lif;
};

constexpr char kWorkloadMagic[6] = {'L', 'O', 'A', 'S', 'W', '1'};

inline std::vector<std::uint8_t> workload_bytes(const SpikeTensor& a,
                                                const WeightMatrix& b,
                                                const LifParams& p) {
  if (a.K != b.K) throw ShapeError("A.K != B.K");
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kWorkloadMagic, kWorkloadMagic + 6);
  detail::put_u16(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(a.M));
  detail::put_u32(out, static_cast<std::uint32_t>(a.K));
  detail::put_u32(out, static_cast<std::uint32_t>(b.N));
  detail::put_u32(out, static_cast<std::uint32_t>(a.T));
  detail::put_u32(out, static_cast<std::uint32_t>(p.v_th));
  out.push_back(p.tau_log2);
  detail::put_u32(out, static_cast<std::uint32_t>(p.u_init));
  int word_bytes = static_cast<int>(ceil_div(a.T, 8));
  for (int m = 0; m < a.M; ++m)
    for (int k = 0; k < a.K; ++k) {
      std::uint64_t w = spike_word(a, m, k);
      for (int i = 0; i < word_bytes; ++i)
        out.push_back(static_cast<std::uint8_t>(w >> (8 * i)));
    }
  for (std::size_t i = 0; i < b.data.size(); ++i)
    out.push_back(static_cast<std::uint8_t>(b.data[i]));
  return out;
}

inline void write_file(const std::string& path,
                       const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed: " + path);
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw IoError("cannot open: " + path);
  std::streamsize size = f.tellg();
  f.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  if (size > 0) f.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!f) throw IoError("read failed: " + path);
  return bytes;
}

inline void save_workload(const SpikeTensor& a, const WeightMatrix& b,
                          const LifParams& p, const std::string& path) {
  write_file(path, workload_bytes(a, b, p));
}

inline Workload parse_workload(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes.data(), bytes.size());
  const std::uint8_t* magic = r.take(6);
  if (std::memcmp(magic, kWorkloadMagic, 6) != 0)
    throw FormatError("bad workload magic at offset 0");
  std::uint16_t version = r.u16();
  if (version != 1)
    throw FormatError("unsupported workload version " + std::to_string(version));
  std::uint32_t M = r.u32(), K = r.u32(), N = r.u32(), T = r.u32();
  if (M < 1 || K < 1 || N < 1 || T < 1)
    throw FormatError("workload dims must be >= 1");
  if (T > static_cast<std::uint32_t>(kMaxTimesteps))
    throw FormatError("workload T exceeds packed word width (64)");
  Workload w;
  w.lif.v_th = static_cast<std::int32_t>(r.u32());
  w.lif.tau_log2 = r.u8();
  w.lif.u_init = static_cast<std::int32_t>(r.u32());
  w.lif.validate();

  w.spikes = SpikeTensor(static_cast<int>(M), static_cast<int>(K),
                         static_cast<int>(T));
  int word_bytes = static_cast<int>(ceil_div(T, 8));
  for (std::uint32_t m = 0; m < M; ++m)
    for (std::uint32_t k = 0; k < K; ++k) {
      const std::uint8_t* p = r.take(word_bytes);
      std::uint64_t word = 0;
      for (int i = 0; i < word_bytes; ++i)
        word |= static_cast<std::uint64_t>(p[i]) << (8 * i);
      if (T < 64 && (word >> T) != 0)
        throw FormatError("spike word has bits above T at offset " +
                          std::to_string(r.offset() - word_bytes));
      for (std::uint32_t t = 0; t < T; ++t)
        w.spikes.set(m, k, t,
                     static_cast<std::uint8_t>((word >> (T - 1 - t)) & 1u));
    }
  w.weights = WeightMatrix(static_cast<int>(K), static_cast<int>(N));
  const std::uint8_t* bdata = r.take(w.weights.data.size());
  std::memcpy(w.weights.data.data(), bdata, w.weights.data.size());
  if (!r.done())
    throw FormatError("trailing bytes at offset " + std::to_string(r.offset()));
  return w;
}

inline Workload load_workload(const std::string& path) {
  return parse_workload(read_file(path));
}

}  // namespace loas
