#include <catch2/catch_amalgamated.hpp>

#include <boost/multiprecision/cpp_int.hpp>

#include "loas/tensor.hpp"

using namespace loas;

namespace {

// Independent evaluator, straight from the layer equations, using exact
// rational arithmetic instead of the implementation's fixed-point integers.
using Rational = boost::multiprecision::cpp_rational;

OutputSpikes rational_oracle(const SpikeTensor& a, const WeightMatrix& b,
                             const LifParams& p) {
  Rational tau(1, std::int64_t{1} << p.tau_log2);
  OutputSpikes c(a.M, b.N, a.T);
  std::vector<Rational> u(static_cast<std::size_t>(a.M) * b.N, Rational(p.u_init));
  for (int t = 0; t < a.T; ++t) {
    for (int m = 0; m < a.M; ++m)
      for (int n = 0; n < b.N; ++n) {
        long long o = 0;
        for (int k = 0; k < a.K; ++k)
          if (a.at(m, k, t)) o += b.at(k, n);
        Rational& mem = u[static_cast<std::size_t>(m) * b.N + n];
        Rational x = Rational(o) + mem;
        if (x > Rational(p.v_th)) {
          c.set(m, n, t, 1);
          mem = 0;
        } else {
          mem = tau * x;
        }
      }
  }
  return c;
}

SpikeTensor random_spikes(int M, int K, int T, double density, Rng& rng) {
  SpikeTensor a(M, K, T);
  for (auto& v : a.data) v = rng.unit() < density ? 1 : 0;
  return a;
}

WeightMatrix random_weights(int K, int N, double density, Rng& rng) {
  WeightMatrix b(K, N);
  for (auto& v : b.data) {
    if (rng.unit() >= density) continue;
    std::uint64_t r = rng.below(255);
    v = (r < 128) ? static_cast<std::int8_t>(static_cast<int>(r) - 128)
                  : static_cast<std::int8_t>(static_cast<int>(r) - 127);
  }
  return b;
}

}  // namespace

TEST_CASE("dense_spmm_timestep basics") {
  SECTION("all-zero A annihilates") {
    SpikeTensor a(3, 4, 2);
    WeightMatrix b(4, 5);
    Rng rng(1);
    b = random_weights(4, 5, 1.0, rng);
    SumMatrix o = dense_spmm_timestep(a, 0, b);
    for (auto v : o.data) CHECK(v == 0);
  }
  SECTION("1x1 identity case") {
    SpikeTensor a(1, 1, 2);
    a.set(0, 0, 1, 1);
    WeightMatrix b(1, 1);
    b.set(0, 0, 5);
    CHECK(dense_spmm_timestep(a, 1, b).at(0, 0) == 5);
    CHECK(dense_spmm_timestep(a, 0, b).at(0, 0) == 0);
  }
  SECTION("matches brute-force triple loop") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
      SpikeTensor a = random_spikes(2, 2, 3, 0.5, rng);
      WeightMatrix b = random_weights(2, 2, 1.0, rng);
      for (int t = 0; t < 3; ++t) {
        SumMatrix o = dense_spmm_timestep(a, t, b);
        for (int n = 0; n < 2; ++n)
          for (int m = 0; m < 2; ++m) {
            long long expect = 0;
            for (int k = 0; k < 2; ++k)
              expect += static_cast<long long>(a.at(m, k, t)) * b.at(k, n);
            CHECK(o.at(m, n) == expect);
          }
      }
    }
  }
  SECTION("shape errors") {
    SpikeTensor a(2, 3, 1);
    WeightMatrix b(4, 2);
    CHECK_THROWS_AS(dense_spmm_timestep(a, 0, b), ShapeError);
    WeightMatrix b2(3, 2);
    CHECK_THROWS_AS(dense_spmm_timestep(a, 1, b2), ShapeError);
  }
}

TEST_CASE("lif_step worked examples") {
  LifParams p;
  p.v_th = 3;
  p.tau_log2 = 1;
  int frac = membrane_frac_bits(p, 4);

  SumMatrix o(1, 1);
  MembraneMatrix u(1, 1, frac, 0);

  SECTION("zero fixed point") {
    LifParams q;  // any params
    q.v_th = 7;
    q.tau_log2 = 2;
    auto r = lif_step(o, MembraneMatrix(1, 1, membrane_frac_bits(q, 4), 0), q);
    CHECK(r.spikes[0] == 0);
    CHECK(r.membrane.data[0] == 0);
  }
  SECTION("fires and hard-resets") {
    o.at(0, 0) = 5;
    auto r = lif_step(o, u, p);
    CHECK(r.spikes[0] == 1);
    CHECK(r.membrane.data[0] == 0);
  }
  SECTION("leaks below threshold") {
    o.at(0, 0) = 2;
    auto r = lif_step(o, u, p);
    CHECK(r.spikes[0] == 0);
    // tau * X = 2 >> 1 = 1 exactly, in fixed point.
    CHECK(r.membrane.data[0] == (MembraneValue{1} << frac));
  }
  SECTION("shape mismatch") {
    SumMatrix bad(2, 1);
    CHECK_THROWS_AS(lif_step(bad, u, p), ShapeError);
  }
}

TEST_CASE("reference_layer degenerate and reduced cases") {
  Rng rng(7);
  LifParams p;
  p.v_th = 1;
  p.tau_log2 = 1;

  SECTION("T=1 equals one spmm+lif step") {
    SpikeTensor a = random_spikes(4, 6, 1, 0.5, rng);
    WeightMatrix b = random_weights(6, 3, 0.8, rng);
    OutputSpikes c = reference_layer(a, b, p);
    SumMatrix o = dense_spmm_timestep(a, 0, b);
    auto step = lif_step(o, MembraneMatrix(4, 3, membrane_frac_bits(p, 1), 0), p);
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 3; ++n)
        CHECK(c.at(m, n, 0) == step.spikes[static_cast<std::size_t>(m) * 3 + n]);
  }
  SECTION("an all-silent row contributes nothing") {
    SpikeTensor a = random_spikes(5, 6, 3, 0.4, rng);
    for (int k = 0; k < 6; ++k)
      for (int t = 0; t < 3; ++t) a.set(2, k, t, 0);
    WeightMatrix b = random_weights(6, 4, 0.9, rng);
    OutputSpikes c = reference_layer(a, b, p);
    for (int n = 0; n < 4; ++n)
      for (int t = 0; t < 3; ++t) CHECK(c.at(2, n, t) == 0);

    // Removing the silent row leaves every other row's output unchanged.
    SpikeTensor reduced(4, 6, 3);
    for (int m = 0, mm = 0; m < 5; ++m) {
      if (m == 2) continue;
      for (int k = 0; k < 6; ++k)
        for (int t = 0; t < 3; ++t) reduced.set(mm, k, t, a.at(m, k, t));
      ++mm;
    }
    OutputSpikes cr = reference_layer(reduced, b, p);
    for (int m = 0, mm = 0; m < 5; ++m) {
      if (m == 2) continue;
      for (int n = 0; n < 4; ++n)
        for (int t = 0; t < 3; ++t) CHECK(c.at(m, n, t) == cr.at(mm, n, t));
      ++mm;
    }
  }
}

TEST_CASE("reference_layer matches the independent rational oracle") {
  Rng rng(1234);
  for (int trial = 0; trial < 30; ++trial) {
    int M = 8, N = 8, K = 16, T = 4;
    LifParams p;
    static const std::int32_t vths[] = {-1, 0, 3, 100};
    p.v_th = vths[rng.below(4)];
    p.tau_log2 = static_cast<std::uint8_t>(rng.below(3));
    p.u_init = static_cast<std::int32_t>(rng.below(5));
    SpikeTensor a = random_spikes(M, K, T, 0.3 + 0.4 * rng.unit(), rng);
    WeightMatrix b = random_weights(K, N, 0.5, rng);
    OutputSpikes got = reference_layer(a, b, p);
    OutputSpikes want = rational_oracle(a, b, p);
    REQUIRE(got == want);
  }
}

TEST_CASE("layer invariants") {
  Rng rng(99);
  LifParams p;
  p.v_th = 2;
  p.tau_log2 = 1;

  SECTION("spikes are binary and hard reset zeroes the membrane") {
    SpikeTensor a = random_spikes(6, 10, 4, 0.5, rng);
    WeightMatrix b = random_weights(10, 5, 0.7, rng);
    int frac = membrane_frac_bits(p, a.T);
    MembraneMatrix u(6, 5, frac, 0);
    for (int t = 0; t < a.T; ++t) {
      auto step = lif_step(dense_spmm_timestep(a, t, b), u, p);
      for (std::size_t i = 0; i < step.spikes.size(); ++i) {
        CHECK((step.spikes[i] == 0 || step.spikes[i] == 1));
        if (step.spikes[i] == 1) CHECK(step.membrane.data[i] == 0);
      }
      u = std::move(step.membrane);
    }
  }
  SECTION("raising v_th never adds a first-timestep spike") {
    for (int trial = 0; trial < 20; ++trial) {
      SpikeTensor a = random_spikes(4, 8, 2, 0.6, rng);
      WeightMatrix b = random_weights(8, 4, 0.8, rng);
      LifParams lo = p, hi = p;
      lo.v_th = 1;
      hi.v_th = 4;
      OutputSpikes clo = reference_layer(a, b, lo);
      OutputSpikes chi = reference_layer(a, b, hi);
      for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n)
          if (chi.at(m, n, 0) == 1) CHECK(clo.at(m, n, 0) == 1);
    }
  }
  SECTION("spmm is linear in B") {
    SpikeTensor a = random_spikes(3, 5, 2, 0.5, rng);
    WeightMatrix b1 = random_weights(5, 4, 0.9, rng);
    WeightMatrix b2(5, 4);
    for (std::size_t i = 0; i < b2.data.size(); ++i) {
      // keep the sum within int8 so b1+b2 is a valid weight matrix
      b2.data[i] = static_cast<std::int8_t>(rng.below(3)) ;
      if (b1.data[i] > 100) b2.data[i] = 0;
    }
    WeightMatrix sum(5, 4);
    for (std::size_t i = 0; i < sum.data.size(); ++i)
      sum.data[i] = static_cast<std::int8_t>(b1.data[i] + b2.data[i]);
    for (int t = 0; t < 2; ++t) {
      SumMatrix o1 = dense_spmm_timestep(a, t, b1);
      SumMatrix o2 = dense_spmm_timestep(a, t, b2);
      SumMatrix os = dense_spmm_timestep(a, t, sum);
      for (std::size_t i = 0; i < os.data.size(); ++i)
        CHECK(os.data[i] == o1.data[i] + o2.data[i]);
    }
  }
  SECTION("fixed-point capacity guard") {
    LifParams big;
    big.tau_log2 = 8;
    CHECK_THROWS_AS(membrane_frac_bits(big, 64), ConfigError);
    CHECK_NOTHROW(membrane_frac_bits(big, 8));
    LifParams bad;
    bad.tau_log2 = 9;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }
}
