// SPDX-License-Identifier: Apache-2.0
#include "accq/bounds.hpp"
#include "accq/error.hpp"
#include "accq/intsim.hpp"
#include "accq/quantizers.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

using namespace accq;

namespace {

ChannelWeights channel(std::vector<double> v, double g, double s) {
  ChannelWeights ch;
  ch.v = std::move(v);
  ch.t = std::log2(g);
  ch.d = std::log2(s);
  return ch;
}

ChannelWeights random_channel(std::mt19937_64 &rng, std::size_t k) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> exps(-3.0, 4.0);
  ChannelWeights ch;
  for (std::size_t i = 0; i < k; ++i) ch.v.push_back(n01(rng));
  ch.t = exps(rng);
  ch.d = exps(rng) - 2.0;
  return ch;
}

double l1(const std::vector<double> &x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

}  // namespace

TEST_CASE("quantize_standard rounds half to even and clips") {
  ActQuantSpec spec{4, true, 1.0, 0};
  auto r = quantize_standard(std::vector<double>{5.7}, spec);
  CHECK(r.q == std::vector<std::int64_t>{6});
  CHECK(r.qw == std::vector<double>{6.0});

  r = quantize_standard(std::vector<double>{100.0}, spec);
  CHECK(r.q == std::vector<std::int64_t>{7});

  spec.bits = 8;
  r = quantize_standard(std::vector<double>{2.5, 3.5}, spec);
  CHECK(r.q == std::vector<std::int64_t>{2, 4});

  CHECK_THROWS_AS(quantize_standard(std::vector<double>{std::nan("")}, spec), Error);
}

TEST_CASE("quantize_standard with a zero point") {
  ActQuantSpec spec{4, false, 0.5, 3};
  // w/s = 3 -> round 3 + z = 6 -> code 3.
  auto r = quantize_standard(std::vector<double>{1.5}, spec);
  CHECK(r.q == std::vector<std::int64_t>{3});
  CHECK(r.qw[0] == doctest::Approx(1.5));
  // Below range: -10 + 3 clips at 0 -> code -3.
  r = quantize_standard(std::vector<double>{-5.0}, spec);
  CHECK(r.q == std::vector<std::int64_t>{-3});
}

TEST_CASE("round_to_zero truncates") {
  CHECK(round_to_zero(std::vector<double>{2.9, -2.9}) == std::vector<std::int64_t>{2, -2});
  CHECK(round_to_zero(std::vector<double>{0.999, -0.001}) == std::vector<std::int64_t>{0, 0});
  CHECK(round_to_zero(std::vector<double>{-7.0}) == std::vector<std::int64_t>{-7});
  CHECK_THROWS_AS(round_to_zero(std::vector<double>{std::numeric_limits<double>::infinity()}), Error);
}

TEST_CASE("quantize_a2q examples") {
  const BitWidths bits{4, 4, 8, false};
  auto r = quantize_a2q(channel({1.0, -1.0}, 10.0, 1.0), bits);
  // T = 127/16, w = +-T/2.
  CHECK(r.w[0] == doctest::Approx(127.0 / 32.0));
  CHECK(r.q == std::vector<std::int64_t>{3, -3});
  CHECK(r.l1_codes == 6);
  CHECK(r.bound_satisfied);

  r = quantize_a2q(channel({1.0, -1.0}, 2.0, 1.0), bits);
  CHECK(r.q == std::vector<std::int64_t>{1, -1});

  r = quantize_a2q(channel({0.0, 0.0}, 2.0, 1.0), bits);
  CHECK(r.q == std::vector<std::int64_t>{0, 0});
  CHECK(r.degenerate);
}

TEST_CASE("quantize_a2q_plus examples") {
  BitWidths bits{4, 4, 8, false};
  auto r = quantize_a2q_plus(channel({1.0, 2.0, 3.0}, 2.0, 1.0), bits);
  CHECK(r.q == std::vector<std::int64_t>{-1, 0, 1});
  CHECK(r.weight_sum == doctest::Approx(0.0));

  bits.weight_bits = 8;
  r = quantize_a2q_plus(channel({1.0, 2.0, 3.0}, 100.0, 1.0), bits);
  CHECK(r.w[0] == doctest::Approx(-127.0 / 15.0));
  CHECK(r.w[2] == doctest::Approx(127.0 / 15.0));
  CHECK(r.q == std::vector<std::int64_t>{-8, 0, 8});
  CHECK(r.l1_scaled == doctest::Approx(254.0 / 15.0));
  CHECK(r.bound_satisfied);

  r = quantize_a2q_plus(channel({5.0, 5.0}, 3.0, 1.0), bits);
  CHECK(r.q == std::vector<std::int64_t>{0, 0});
  CHECK(r.degenerate);
}

TEST_CASE("a2q+ falls back to a2q for single-element channels") {
  const BitWidths bits{4, 4, 8, false};
  auto r = quantize_a2q_plus(channel({2.0}, 3.0, 1.0), bits);
  CHECK(r.fell_back);
  CHECK(r.variant == Variant::A2Q);
  CHECK(r.q == std::vector<std::int64_t>{3});
}

TEST_CASE("parse_variant round trip") {
  for (Variant v : {Variant::Standard, Variant::A2Q, Variant::A2QPlus}) CHECK(parse_variant(to_string(v)) == v);
  CHECK(parse_variant("a2qplus") == Variant::A2QPlus);
  CHECK_THROWS_AS(parse_variant("bogus"), Error);
}

TEST_CASE("round-to-zero domination and budget invariants on random channels") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t k = 1 + trial % 17;
    const BitWidths bits{2 + trial % 7, 1 + trial % 8, 6 + trial % 14, trial % 3 == 0};
    const auto ch = random_channel(rng, k);
    for (Variant var : {Variant::A2Q, Variant::A2QPlus}) {
      const auto r = quantize(ch, var, bits);
      CHECK(verify_prop2(r.w, r.s, r.q));
      const auto range = int_range(bits.weight_bits, true);
      for (auto qi : r.q) {
        CHECK(qi >= range.lo);
        CHECK(qi <= range.hi);
      }
      for (std::size_t i = 0; i < k; ++i) CHECK(r.qw[i] == r.s * static_cast<double>(r.q[i]));
      if (r.variant == Variant::A2Q) {
        CHECK(a2q_limit(bits).admits(l1_norm(r.q)));
      } else {
        const double tol = static_cast<double>(k) * 1e-12 * std::max(1.0, l1(r.w));
        CHECK(std::abs(r.weight_sum) <= tol);
        CHECK(r.l1_scaled <= a2q_plus_limit(bits).to_double() * (1.0 + 1e-12));
      }
    }
  }
}

TEST_CASE("standard quantizer is idempotent") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01(0.0, 3.0);
  const ActQuantSpec spec{5, true, 0.25, 0};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w(9);
    for (auto &x : w) x = n01(rng);
    const auto first = quantize_standard(w, spec);
    const auto second = quantize_standard(first.qw, spec);
    CHECK(first.q == second.q);
  }
}

TEST_CASE("a2q is idempotent on exactly representable inputs") {
  const BitWidths bits{4, 4, 12, false};
  // q = [3, -1, 2], s = 0.5: v = qw, g = ||qw||_1 = 3, all exact in binary.
  const auto once = quantize_a2q(channel({1.5, -0.5, 1.0}, 3.0, 0.5), bits);
  CHECK(once.q == std::vector<std::int64_t>{3, -1, 2});
  const auto twice = quantize_a2q(channel(once.qw, 3.0, 0.5), bits);
  CHECK(twice.q == once.q);
}

TEST_CASE("scale equivariance of codes") {
  const BitWidths bits{8, 4, 16, false};
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto ch = random_channel(rng, 6);
    ch.t = std::min(ch.t, 0.0);  // keep g below both budgets
    ch.d = -4.0;
    const auto base = quantize_a2q(ch, bits);
    ch.d += 1.0;
    const auto doubled = quantize_a2q(ch, bits);
    CHECK(doubled.w == base.w);
    std::vector<double> half(base.w.size());
    for (std::size_t i = 0; i < half.size(); ++i) half[i] = base.w[i] / base.s / 2.0;
    CHECK(doubled.q == round_to_zero(half));
  }
}

TEST_CASE("quantized channels never overflow under exhaustive enumeration") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t k = 1 + trial % 5;
    const int n = 1 + trial % 4;
    const int p = 4 + trial % 9;
    const BitWidths bits{4 + trial % 5, n, p, trial % 2 == 1};
    if (enumeration_size(k, n) > (1u << 16)) continue;
    auto ch = random_channel(rng, k);
    ch.t = 10.0;  // force the gate shut so the budget binds
    const AccumulatorSpec acc(p);
    for (Variant var : {Variant::A2Q, Variant::A2QPlus}) {
      if (var == Variant::A2QPlus && bits.act_signed) continue;
      const auto r = quantize(ch, var, bits);
      CHECK_FALSE(exhaustive_check(r.q, n, bits.act_signed, acc).overflowed);
    }
  }
}

TEST_CASE("layer quantization matches the serial reference") {
  std::mt19937_64 rng(23);
  std::vector<ChannelWeights> layer;
  for (int o = 0; o < 64; ++o) layer.push_back(random_channel(rng, 33));
  const BitWidths bits{4, 4, 14, false};
  for (Variant var : {Variant::Standard, Variant::A2Q, Variant::A2QPlus}) {
    const auto par = quantize_layer(layer, var, bits);
    const auto ser = quantize_layer_serial(layer, var, bits);
    REQUIRE(par.size() == ser.size());
    for (std::size_t o = 0; o < par.size(); ++o) {
      CHECK(par[o].q == ser[o].q);
      CHECK(par[o].qw == ser[o].qw);
    }
  }
}

TEST_CASE("closed min gate gives zero gradient for t") {
  const BitWidths bits{8, 4, 8, false};
  const auto ch = channel({1.0, 2.0, 3.0}, 100.0, 1.0);
  for (Variant var : {Variant::A2Q, Variant::A2QPlus}) {
    const auto fw = forward_weights(ch, var, bits);
    CHECK_FALSE(fw.tape.gate_open);
    const auto grad = backward_weights(fw.tape, std::vector<double>{0.3, -1.0, 0.7});
    CHECK(grad.t == 0.0);
  }
}

TEST_CASE("STE backward equals the smooth backward when nothing rounds or clips") {
  // Integer-valued w with g below the budget: the quantizer is the identity.
  const BitWidths bits{8, 8, 24, false};
  const auto ch = channel({2.0, -1.0, 1.0}, 4.0, 1.0);
  const std::vector<double> up{0.5, -0.25, 2.0};
  const auto q = forward_weights(ch, Variant::A2Q, bits);
  const auto smooth = forward_weights(ch, Variant::A2Q, bits, true);
  CHECK(q.result.qw == smooth.result.qw);
  const auto gq = backward_weights(q.tape, up);
  const auto gs = backward_weights(smooth.tape, up);
  for (std::size_t i = 0; i < 3; ++i) CHECK(gq.v[i] == doctest::Approx(gs.v[i]).epsilon(1e-12));
  CHECK(gq.t == doctest::Approx(gs.t).epsilon(1e-12));
}

TEST_CASE("identity-mode backward matches central finite differences") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> n01(0.0, 1.0);
  const double h = 1e-4;
  for (int trial = 0; trial < 40; ++trial) {
    const BitWidths bits{4, 4, 10 + trial % 6, false};
    auto ch = random_channel(rng, 2 + trial % 6);
    std::vector<double> c(ch.size());
    for (auto &x : c) x = n01(rng);
    for (Variant var : {Variant::A2Q, Variant::A2QPlus}) {
      auto loss = [&](const ChannelWeights &x) {
        const auto r = forward_weights(x, var, bits, true).result;
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * r.qw[i];
        return s;
      };
      const auto fw = forward_weights(ch, var, bits, true);
      const auto grad = backward_weights(fw.tape, c);
      auto fd = [&](auto &&bump) {
        auto up = ch, dn = ch;
        bump(up, h);
        bump(dn, -h);
        return (loss(up) - loss(dn)) / (2.0 * h);
      };
      auto close = [](double a, double b) {
        const double m = std::max(std::abs(a), std::abs(b));
        return m < 1e-7 ? std::abs(a - b) < 1e-7 : std::abs(a - b) / m < 1e-5;
      };
      for (std::size_t i = 0; i < ch.size(); ++i)
        CHECK(close(grad.v[i], fd([i](ChannelWeights &x, double e) { x.v[i] += e; })));
      CHECK(close(grad.t, fd([](ChannelWeights &x, double e) { x.t += e; })));
      CHECK(close(grad.d, fd([](ChannelWeights &x, double e) { x.d += e; })));
    }
  }
}
