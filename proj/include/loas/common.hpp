#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace loas {

// ---------------------------------------------------------------------------
// Error hierarchy. The CLI maps these onto stable exit codes, so engines and
// file parsers must throw the matching category.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid tensor/matrix dimensions for an operation.
class ShapeError : public Error {
public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

/// Bad configuration value (hardware config, LIF params, workload spec).
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Malformed or truncated on-disk data.
class FormatError : public Error {
public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

/// Filesystem-level failure (open/read/write).
class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

/// Caller violated an operation precondition.
class ContractError : public Error {
public:
  explicit ContractError(const std::string& msg) : Error(msg) {}
};

/// Bit-accurate accumulator exceeded its configured width.
class OverflowError : public Error {
public:
  explicit OverflowError(const std::string& msg) : Error(msg) {}
};

// ---------------------------------------------------------------------------
// 128-bit coordinate bitmask. Position 0 is the first coordinate of a chunk.
// Serialization is big-endian so that position 0 lands in the MSB of byte 0,
// matching the textual convention where "1001..." means positions 0 and 3.
// ---------------------------------------------------------------------------

class Bitmask128 {
public:
  Bitmask128() : w_{0, 0} {}

  static constexpr int kBits = 128;

  bool test(int pos) const { return (w_[word(pos)] >> shift(pos)) & 1u; }

  void set(int pos) { w_[word(pos)] |= (std::uint64_t{1} << shift(pos)); }

  void clear(int pos) { w_[word(pos)] &= ~(std::uint64_t{1} << shift(pos)); }

  int popcount() const {
    return __builtin_popcountll(w_[0]) + __builtin_popcountll(w_[1]);
  }

  bool any() const { return (w_[0] | w_[1]) != 0; }

  /// Number of set bits at positions strictly below `pos`.
  int popcount_below(int pos) const {
    int wi = word(pos);
    int count = 0;
    for (int i = 0; i < wi; ++i) count += __builtin_popcountll(w_[i]);
    int bit = pos % 64;
    if (bit > 0) count += __builtin_popcountll(w_[wi] >> (64 - bit));
    return count;
  }

  Bitmask128 operator&(const Bitmask128& o) const {
    Bitmask128 r;
    r.w_[0] = w_[0] & o.w_[0];
    r.w_[1] = w_[1] & o.w_[1];
    return r;
  }

  bool operator==(const Bitmask128& o) const { return w_ == o.w_; }

  /// Set positions in ascending order.
  std::vector<int> positions() const {
    std::vector<int> out;
    out.reserve(popcount());
    for (int wi = 0; wi < 2; ++wi) {
      std::uint64_t v = w_[wi];
      while (v) {
        int lead = __builtin_clzll(v);
        out.push_back(wi * 64 + lead);
        v &= ~(std::uint64_t{1} << (63 - lead));
      }
    }
    return out;
  }

  std::array<std::uint8_t, 16> to_bytes_be() const {
    std::array<std::uint8_t, 16> b{};
    for (int i = 0; i < 8; ++i) {
      b[i] = static_cast<std::uint8_t>(w_[0] >> (56 - 8 * i));
      b[8 + i] = static_cast<std::uint8_t>(w_[1] >> (56 - 8 * i));
    }
    return b;
  }

  static Bitmask128 from_bytes_be(const std::uint8_t* b) {
    Bitmask128 m;
    for (int i = 0; i < 8; ++i) {
      m.w_[0] = (m.w_[0] << 8) | b[i];
      m.w_[1] = (m.w_[1] << 8) | b[8 + i];
    }
    return m;
  }

private:
  static int word(int pos) { return pos >> 6; }
  static int shift(int pos) { return 63 - (pos & 63); }

  std::array<std::uint64_t, 2> w_;
};

// ---------------------------------------------------------------------------
// Small deterministic PRNG (splitmix64). Used instead of std::uniform_*
// distributions so generated workloads are identical across standard
// libraries.
// ---------------------------------------------------------------------------

class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, bound). bound must be nonzero.
  std::uint64_t below(std::uint64_t bound) {
    // Rejection sampling keeps the distribution exact.
    std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
  std::uint64_t state_;
};

/// FNV-1a over arbitrary bytes; used for config hashes and output digests.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a(s.data(), s.size(), h);
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) {
  return (a + b - 1) / b;
}

}  // namespace loas
