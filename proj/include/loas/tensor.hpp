#pragma once

#include <cstdint>
#include <vector>

#include "loas/common.hpp"

namespace loas {

// ---------------------------------------------------------------------------
// Dense tensor types for one SNN layer and the exact reference evaluation
// every simulated engine is verified against.
//
// The layer computes, per timestep t:
//   O[m,n,t] = sum_k A[m,k,t] * B[k,n]
//   X = O + U_prev;  C = (X > v_th);  U = (X >> tau_log2) where C == 0,
//   else U = 0 (hard reset).
//
// Membrane potentials are exact fixed point: a layer running T timesteps with
// leak shift tau_log2 needs at most tau_log2*T fractional bits, so values are
// kept as 128-bit integers scaled by 2^(tau_log2*T). All arithmetic is then
// integral and engines match the reference bit for bit.
// ---------------------------------------------------------------------------

using MembraneValue = __int128;

constexpr int kMaxTimesteps = 64;
// Fractional bits plus worst-case integer magnitude must fit MembraneValue.
constexpr int kMaxMembraneFracBits = 88;

struct LifParams {
  std::int32_t v_th = 0;
  std::uint8_t tau_log2 = 0;  // leak factor is 2^-tau_log2
  std::int32_t u_init = 0;

  void validate() const {
    if (tau_log2 > 8) throw ConfigError("tau_log2 must be in [0, 8]");
  }
};

struct SpikeTensor {
  int M = 0, K = 0, T = 0;
  std::vector<std::uint8_t> data;  // (m*K + k)*T + t, values 0/1

  SpikeTensor() = default;
  SpikeTensor(int m, int k, int t) : M(m), K(k), T(t) {
    if (m < 1 || k < 1 || t < 1) throw ShapeError("SpikeTensor dims must be >= 1");
    if (t > kMaxTimesteps) throw ConfigError("T exceeds packed word width (64)");
    data.assign(static_cast<std::size_t>(m) * k * t, 0);
  }

  std::uint8_t at(int m, int k, int t) const {
    return data[(static_cast<std::size_t>(m) * K + k) * T + t];
  }
  void set(int m, int k, int t, std::uint8_t v) {
    data[(static_cast<std::size_t>(m) * K + k) * T + t] = v;
  }
};

struct WeightMatrix {
  int K = 0, N = 0;
  std::vector<std::int8_t> data;  // k*N + n

  WeightMatrix() = default;
  WeightMatrix(int k, int n) : K(k), N(n) {
    if (k < 1 || n < 1) throw ShapeError("WeightMatrix dims must be >= 1");
    data.assign(static_cast<std::size_t>(k) * n, 0);
  }

  std::int8_t at(int k, int n) const {
    return data[static_cast<std::size_t>(k) * N + n];
  }
  void set(int k, int n, std::int8_t v) {
    data[static_cast<std::size_t>(k) * N + n] = v;
  }
};

struct OutputSpikes {
  int M = 0, N = 0, T = 0;
  std::vector<std::uint8_t> data;  // (m*N + n)*T + t

  OutputSpikes() = default;
  OutputSpikes(int m, int n, int t) : M(m), N(n), T(t) {
    data.assign(static_cast<std::size_t>(m) * n * t, 0);
  }

  std::uint8_t at(int m, int n, int t) const {
    return data[(static_cast<std::size_t>(m) * N + n) * T + t];
  }
  void set(int m, int n, int t, std::uint8_t v) {
    data[(static_cast<std::size_t>(m) * N + n) * T + t] = v;
  }

  bool operator==(const OutputSpikes& o) const {
    return M == o.M && N == o.N && T == o.T && data == o.data;
  }
};

/// Accumulator matrix for one timestep, M x N.
struct SumMatrix {
  int M = 0, N = 0;
  std::vector<std::int64_t> data;

  SumMatrix() = default;
  SumMatrix(int m, int n) : M(m), N(n) {
    data.assign(static_cast<std::size_t>(m) * n, 0);
  }

  std::int64_t at(int m, int n) const {
    return data[static_cast<std::size_t>(m) * N + n];
  }
  std::int64_t& at(int m, int n) {
    return data[static_cast<std::size_t>(m) * N + n];
  }
};

/// Fixed-point membrane potentials, scaled by 2^frac_bits.
struct MembraneMatrix {
  int M = 0, N = 0;
  int frac_bits = 0;
  std::vector<MembraneValue> data;

  MembraneMatrix() = default;
  MembraneMatrix(int m, int n, int frac, std::int32_t init_value)
      : M(m), N(n), frac_bits(frac) {
    data.assign(static_cast<std::size_t>(m) * n,
                static_cast<MembraneValue>(init_value) << frac);
  }

  MembraneValue at(int m, int n) const {
    return data[static_cast<std::size_t>(m) * N + n];
  }
  MembraneValue& at(int m, int n) {
    return data[static_cast<std::size_t>(m) * N + n];
  }
};

/// Fractional bits needed so every leak shift over the run is exact.
inline int membrane_frac_bits(const LifParams& p, int timesteps) {
  p.validate();
  int frac = static_cast<int>(p.tau_log2) * timesteps;
  if (frac > kMaxMembraneFracBits)
    throw ConfigError("tau_log2 * T exceeds exact fixed-point capacity");
  return frac;
}

/// One LIF update on a single neuron. x is the fixed-point X = O + U_prev.
/// Returns the spike bit and writes the next membrane value.
inline std::uint8_t lif_scalar(MembraneValue x, const LifParams& p,
                               int frac_bits, MembraneValue* u_next) {
  MembraneValue vth = static_cast<MembraneValue>(p.v_th) << frac_bits;
  if (x > vth) {
    *u_next = 0;  // hard reset
    return 1;
  }
  *u_next = x >> p.tau_log2;
  return 0;
}

/// O_t[m,n] = sum_k A[m,k,t] * B[k,n], exact wide accumulation.
inline SumMatrix dense_spmm_timestep(const SpikeTensor& a, int t,
                                     const WeightMatrix& b) {
  if (a.K != b.K) throw ShapeError("A.K != B.K");
  if (t < 0 || t >= a.T) throw ShapeError("timestep out of range");
  SumMatrix out(a.M, b.N);
  for (int m = 0; m < a.M; ++m) {
    for (int k = 0; k < a.K; ++k) {
      if (!a.at(m, k, t)) continue;
      const std::int8_t* brow = &b.data[static_cast<std::size_t>(k) * b.N];
      std::int64_t* orow = &out.data[static_cast<std::size_t>(m) * b.N];
      for (int n = 0; n < b.N; ++n) orow[n] += brow[n];
    }
  }
  return out;
}

struct LifStepResult {
  std::vector<std::uint8_t> spikes;  // M x N, row-major
  MembraneMatrix membrane;
};

/// Applies one LIF firing + membrane update step to a whole matrix.
inline LifStepResult lif_step(const SumMatrix& o, const MembraneMatrix& u_prev,
                              const LifParams& p) {
  if (o.M != u_prev.M || o.N != u_prev.N)
    throw ShapeError("lif_step shape mismatch");
  LifStepResult r;
  r.spikes.assign(o.data.size(), 0);
  r.membrane = u_prev;
  int frac = u_prev.frac_bits;
  for (std::size_t i = 0; i < o.data.size(); ++i) {
    MembraneValue x =
        (static_cast<MembraneValue>(o.data[i]) << frac) + u_prev.data[i];
    r.spikes[i] = lif_scalar(x, p, frac, &r.membrane.data[i]);
  }
  return r;
}

/// Full reference layer: the oracle every engine must match exactly.
inline OutputSpikes reference_layer(const SpikeTensor& a, const WeightMatrix& b,
                                    const LifParams& p) {
  if (a.K != b.K) throw ShapeError("A.K != B.K");
  int frac = membrane_frac_bits(p, a.T);
  OutputSpikes c(a.M, b.N, a.T);
  MembraneMatrix u(a.M, b.N, frac, p.u_init);
  for (int t = 0; t < a.T; ++t) {
    SumMatrix o = dense_spmm_timestep(a, t, b);
    LifStepResult step = lif_step(o, u, p);
    u = std::move(step.membrane);
    for (int m = 0; m < a.M; ++m)
      for (int n = 0; n < b.N; ++n)
        c.set(m, n, t, step.spikes[static_cast<std::size_t>(m) * b.N + n]);
  }
  return c;
}

}  // namespace loas
