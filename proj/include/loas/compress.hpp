#pragma once

#include <cstdint>
#include <cstring>
#include <vector>

#include "loas/common.hpp"
#include "loas/tensor.hpp"

namespace loas {

// ---------------------------------------------------------------------------
// Spike packing and bitmask-fiber compression.
//
// Packed word convention: the most significant of the T used bits is
// timestep 0, so a neuron firing at t0 and t2 with T=4 packs to 0b1010.
// A word of zero marks a silent neuron; silent neurons are dropped from
// fiber payloads entirely.
//
// Rows of A (and columns of B) are split into 128-coordinate chunks, one
// fiber per (row-or-column, chunk). Payloads store non-zero entries in
// coordinate order: T-bit packed words for A, 8-bit weights for B.
// ---------------------------------------------------------------------------

constexpr int kChunkSize = 128;
constexpr int kFiberPointerBits = 32;
constexpr std::uint32_t kNullFiberPtr = 0xffffffffu;
// Metadata block per fiber: 16-byte bitmask + 4-byte continuation pointer.
constexpr int kFiberMetaBytes = 20;

inline std::uint64_t spike_word(const SpikeTensor& a, int m, int k) {
  std::uint64_t w = 0;
  for (int t = 0; t < a.T; ++t)
    w |= static_cast<std::uint64_t>(a.at(m, k, t)) << (a.T - 1 - t);
  return w;
}

struct PackedSpikeMatrix {
  int M = 0, K = 0, T = 0;
  std::vector<std::uint64_t> words;  // m*K + k

  PackedSpikeMatrix() = default;
  PackedSpikeMatrix(int m, int k, int t) : M(m), K(k), T(t) {
    words.assign(static_cast<std::size_t>(m) * k, 0);
  }

  std::uint64_t at(int m, int k) const {
    return words[static_cast<std::size_t>(m) * K + k];
  }
  void set(int m, int k, std::uint64_t w) {
    words[static_cast<std::size_t>(m) * K + k] = w;
  }

  bool operator==(const PackedSpikeMatrix& o) const {
    return M == o.M && K == o.K && T == o.T && words == o.words;
  }
};

inline PackedSpikeMatrix pack_spikes(const SpikeTensor& a) {
  if (a.T > kMaxTimesteps) throw ConfigError("T exceeds packed word width");
  PackedSpikeMatrix p(a.M, a.K, a.T);
  for (int m = 0; m < a.M; ++m)
    for (int k = 0; k < a.K; ++k) p.set(m, k, spike_word(a, m, k));
  return p;
}

inline SpikeTensor unpack_spikes(const PackedSpikeMatrix& p) {
  SpikeTensor a(p.M, p.K, p.T);
  for (int m = 0; m < p.M; ++m)
    for (int k = 0; k < p.K; ++k) {
      std::uint64_t w = p.at(m, k);
      for (int t = 0; t < p.T; ++t)
        a.set(m, k, t, static_cast<std::uint8_t>((w >> (p.T - 1 - t)) & 1u));
    }
  return a;
}

template <typename Payload>
struct Fiber {
  Bitmask128 bitmask;
  std::vector<Payload> payload;           // non-zero entries, coordinate order
  std::uint32_t next_ptr = kNullFiberPtr; // continuation line, storage layout

  void validate() const {
    if (bitmask.popcount() != static_cast<int>(payload.size()))
      throw FormatError("fiber bitmask popcount != payload length");
    for (const auto& v : payload)
      if (v == Payload{0}) throw FormatError("fiber payload contains zero");
  }
};

enum class Orientation : std::uint8_t { kRowWise = 0, kColumnWise = 1 };

template <typename Payload>
struct CompressedMatrix {
  Orientation orientation = Orientation::kRowWise;
  int majors = 0;     // M for row-wise A, N for column-wise B
  int K = 0;          // coordinate dimension, chunked by 128
  int word_bits = 0;  // payload entry width: T for A fibers, 8 for B fibers
  std::vector<Fiber<Payload>> fibers;  // major-major order: [major][chunk]

  int chunks() const { return static_cast<int>(ceil_div(K, kChunkSize)); }

  const Fiber<Payload>& fiber(int major, int chunk) const {
    return fibers[static_cast<std::size_t>(major) * chunks() + chunk];
  }
  Fiber<Payload>& fiber(int major, int chunk) {
    return fibers[static_cast<std::size_t>(major) * chunks() + chunk];
  }

  std::size_t payload_entries() const {
    std::size_t n = 0;
    for (const auto& f : fibers) n += f.payload.size();
    return n;
  }
};

using CompressedSpikes = CompressedMatrix<std::uint64_t>;
using CompressedWeights = CompressedMatrix<std::int8_t>;

/// Payload bytes of one fiber under tight bit packing.
inline std::size_t fiber_payload_bytes(std::size_t entries, int word_bits) {
  return static_cast<std::size_t>(ceil_div(entries * word_bits, 8));
}

inline CompressedSpikes compress_rows(const PackedSpikeMatrix& p) {
  CompressedSpikes c;
  c.orientation = Orientation::kRowWise;
  c.majors = p.M;
  c.K = p.K;
  c.word_bits = p.T;
  c.fibers.resize(static_cast<std::size_t>(p.M) * c.chunks());
  for (int m = 0; m < p.M; ++m) {
    for (int ch = 0; ch < c.chunks(); ++ch) {
      Fiber<std::uint64_t>& f = c.fiber(m, ch);
      int base = ch * kChunkSize;
      int end = std::min(p.K, base + kChunkSize);
      for (int k = base; k < end; ++k) {
        std::uint64_t w = p.at(m, k);
        if (w == 0) continue;  // silent neuron, not stored
        f.bitmask.set(k - base);
        f.payload.push_back(w);
      }
    }
  }
  return c;
}

inline CompressedWeights compress_weights(const WeightMatrix& b) {
  CompressedWeights c;
  c.orientation = Orientation::kColumnWise;
  c.majors = b.N;
  c.K = b.K;
  c.word_bits = 8;
  c.fibers.resize(static_cast<std::size_t>(b.N) * c.chunks());
  for (int n = 0; n < b.N; ++n) {
    for (int ch = 0; ch < c.chunks(); ++ch) {
      Fiber<std::int8_t>& f = c.fiber(n, ch);
      int base = ch * kChunkSize;
      int end = std::min(b.K, base + kChunkSize);
      for (int k = base; k < end; ++k) {
        std::int8_t w = b.at(k, n);
        if (w == 0) continue;
        f.bitmask.set(k - base);
        f.payload.push_back(w);
      }
    }
  }
  return c;
}

inline PackedSpikeMatrix decompress(const CompressedSpikes& c) {
  if (c.orientation != Orientation::kRowWise)
    throw FormatError("spike matrix must be row-wise");
  PackedSpikeMatrix p(c.majors, c.K, c.word_bits);
  for (int m = 0; m < c.majors; ++m) {
    for (int ch = 0; ch < c.chunks(); ++ch) {
      const auto& f = c.fiber(m, ch);
      f.validate();
      std::size_t idx = 0;
      for (int pos : f.bitmask.positions()) {
        int k = ch * kChunkSize + pos;
        if (k >= c.K) throw FormatError("fiber bit beyond matrix dimension");
        p.set(m, k, f.payload[idx++]);
      }
    }
  }
  return p;
}

inline WeightMatrix decompress(const CompressedWeights& c) {
  if (c.orientation != Orientation::kColumnWise)
    throw FormatError("weight matrix must be column-wise");
  WeightMatrix b(c.K, c.majors);
  for (int n = 0; n < c.majors; ++n) {
    for (int ch = 0; ch < c.chunks(); ++ch) {
      const auto& f = c.fiber(n, ch);
      f.validate();
      std::size_t idx = 0;
      for (int pos : f.bitmask.positions()) {
        int k = ch * kChunkSize + pos;
        if (k >= c.K) throw FormatError("fiber bit beyond matrix dimension");
        b.set(k, n, f.payload[idx++]);
      }
    }
  }
  return b;
}

/// Zeroes every neuron whose total spike count is <= max_spikes.
inline SpikeTensor mask_low_activity(const SpikeTensor& a, int max_spikes = 1) {
  if (max_spikes < 0) throw ConfigError("max_spikes must be >= 0");
  SpikeTensor out = a;
  for (int m = 0; m < a.M; ++m)
    for (int k = 0; k < a.K; ++k) {
      int count = 0;
      for (int t = 0; t < a.T; ++t) count += a.at(m, k, t);
      if (count <= max_spikes)
        for (int t = 0; t < a.T; ++t) out.set(m, k, t, 0);
    }
  return out;
}

struct CompressionStats {
  double silent_fraction = 0.0;
  std::uint64_t stored_bits = 0;
  std::uint64_t raw_bits = 0;
  std::uint64_t metadata_bits = 0;
};

template <typename Payload>
inline CompressionStats compression_stats(const CompressedMatrix<Payload>& c) {
  CompressionStats s;
  std::uint64_t entries = c.payload_entries();
  std::uint64_t cells = static_cast<std::uint64_t>(c.majors) * c.K;
  s.silent_fraction = 1.0 - static_cast<double>(entries) / cells;
  s.stored_bits = entries * c.word_bits;
  s.raw_bits = cells * c.word_bits;
  s.metadata_bits = static_cast<std::uint64_t>(c.fibers.size()) *
                    (kChunkSize + kFiberPointerBits);
  return s;
}

// ---------------------------------------------------------------------------
// Binary serialization of a compressed matrix. Fibers are stored chunk-major;
// each record is a 16-byte big-endian bitmask, a 32-bit little-endian
// continuation pointer, and the payload entries tightly bit-packed at their
// natural width (LSB-first within the byte stream), padded to a whole byte.
// The pointer is null when metadata plus payload fit one 64-byte storage
// line, otherwise it holds the record offset of the continuation line.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteReader {
public:
  ByteReader(const std::uint8_t* data, std::size_t size)
      : data_(data), size_(size) {}

  std::size_t offset() const { return off_; }

  const std::uint8_t* take(std::size_t n) {
    if (off_ + n > size_)
      throw FormatError("truncated data at offset " + std::to_string(off_));
    const std::uint8_t* p = data_ + off_;
    off_ += n;
    return p;
  }

  std::uint8_t u8() { return *take(1); }
  std::uint16_t u16() {
    const std::uint8_t* p = take(2);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t u32() {
    const std::uint8_t* p = take(4);
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
  }
  bool done() const { return off_ == size_; }

private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t off_ = 0;
};

/// Appends the low `width` bits of each value to a LSB-first bit stream.
inline void pack_bits(std::vector<std::uint8_t>& out, std::uint64_t value,
                      int width, int& bitpos) {
  for (int i = 0; i < width; ++i) {
    if (bitpos == 0) out.push_back(0);
    if ((value >> i) & 1u) out.back() |= static_cast<std::uint8_t>(1u << bitpos);
    bitpos = (bitpos + 1) & 7;
  }
}

inline std::uint64_t unpack_bits(const std::uint8_t* bytes, std::size_t bit_off,
                                 int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) {
    std::size_t b = bit_off + i;
    if ((bytes[b >> 3] >> (b & 7)) & 1u) v |= std::uint64_t{1} << i;
  }
  return v;
}

}  // namespace detail

constexpr char kFiberFileMagic[6] = {'L', 'O', 'A', 'S', 'F', '1'};

template <typename Payload>
inline std::vector<std::uint8_t> serialize(const CompressedMatrix<Payload>& c) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kFiberFileMagic, kFiberFileMagic + 6);
  detail::put_u16(out, 1);
  out.push_back(static_cast<std::uint8_t>(c.orientation));
  out.push_back(static_cast<std::uint8_t>(c.word_bits));
  detail::put_u32(out, static_cast<std::uint32_t>(c.majors));
  detail::put_u32(out, static_cast<std::uint32_t>(c.K));
  std::size_t section_start = out.size();
  for (int ch = 0; ch < c.chunks(); ++ch) {
    for (int major = 0; major < c.majors; ++major) {
      const auto& f = c.fiber(major, ch);
      std::uint32_t record_off = static_cast<std::uint32_t>(out.size() - section_start);
      auto bm = f.bitmask.to_bytes_be();
      out.insert(out.end(), bm.begin(), bm.end());
      std::size_t pbytes = fiber_payload_bytes(f.payload.size(), c.word_bits);
      std::uint32_t ptr = (kFiberMetaBytes + pbytes <= 64)
                              ? kNullFiberPtr
                              : record_off + 64;
      detail::put_u32(out, ptr);
      int bitpos = 0;
      for (const auto& v : f.payload)
        detail::pack_bits(out, static_cast<std::uint64_t>(v) &
                                   ((c.word_bits == 64)
                                        ? ~std::uint64_t{0}
                                        : ((std::uint64_t{1} << c.word_bits) - 1)),
                          c.word_bits, bitpos);
    }
  }
  return out;
}

template <typename Payload>
inline CompressedMatrix<Payload> deserialize_fibers(
    const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes.data(), bytes.size());
  const std::uint8_t* magic = r.take(6);
  if (std::memcmp(magic, kFiberFileMagic, 6) != 0)
    throw FormatError("bad fiber file magic at offset 0");
  if (r.u16() != 1) throw FormatError("unsupported fiber file version");
  CompressedMatrix<Payload> c;
  c.orientation = static_cast<Orientation>(r.u8());
  c.word_bits = r.u8();
  c.majors = static_cast<int>(r.u32());
  c.K = static_cast<int>(r.u32());
  if (c.majors < 1 || c.K < 1 || c.word_bits < 1 || c.word_bits > 64)
    throw FormatError("bad fiber file header");
  c.fibers.resize(static_cast<std::size_t>(c.majors) * c.chunks());
  std::size_t section_start = r.offset();
  for (int ch = 0; ch < c.chunks(); ++ch) {
    for (int major = 0; major < c.majors; ++major) {
      std::size_t record_off = r.offset() - section_start;
      Fiber<Payload>& f = c.fiber(major, ch);
      f.bitmask = Bitmask128::from_bytes_be(r.take(16));
      f.next_ptr = r.u32();
      std::size_t entries = static_cast<std::size_t>(f.bitmask.popcount());
      std::size_t pbytes = fiber_payload_bytes(entries, c.word_bits);
      std::uint32_t expect_ptr =
          (kFiberMetaBytes + pbytes <= 64)
              ? kNullFiberPtr
              : static_cast<std::uint32_t>(record_off) + 64;
      if (f.next_ptr != expect_ptr)
        throw FormatError("bad continuation pointer at offset " +
                          std::to_string(r.offset() - 4));
      const std::uint8_t* pdata = r.take(pbytes);
      f.payload.reserve(entries);
      for (std::size_t i = 0; i < entries; ++i)
        f.payload.push_back(static_cast<Payload>(
            detail::unpack_bits(pdata, i * c.word_bits, c.word_bits)));
      f.validate();
    }
  }
  if (!r.done()) throw FormatError("trailing bytes after last fiber");
  return c;
}

}  // namespace loas
