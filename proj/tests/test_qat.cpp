// SPDX-License-Identifier: Apache-2.0
#include "accq/qat.hpp"
#include "accq/sweep.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

using namespace accq;

namespace {

TrainConfig tiny_config(Variant variant, int acc_bits, std::uint64_t seed) {
  TrainConfig c;
  c.variant = variant;
  c.bits = BitWidths{4, 4, acc_bits, false};
  c.seed = seed;
  c.data.input_dim = 12;
  c.data.teacher_hidden = {8};
  c.data.train_samples = 256;
  c.data.test_samples = 256;
  c.hidden_widths = {6, 6};
  c.pretrain_epochs = 3;
  c.epochs = 2;
  return c;
}

QuantResult codes(std::vector<std::int64_t> q) {
  QuantResult r;
  r.q = std::move(q);
  return r;
}

}  // namespace

TEST_CASE("reg_penalty") {
  // A2Q budget (2^3 - 1) / 2^0 = 7 at P = 4, N = 1 signed.
  const BitWidths bits{4, 1, 4, true};
  ChannelWeights ch;
  ch.v = {1.0, -1.0};
  ch.d = 0.0;
  ch.t = std::log2(5.0);
  CHECK(reg_penalty(ch, bits, Variant::A2Q) == 0.0);
  ch.t = std::log2(10.0);
  CHECK(reg_penalty(ch, bits, Variant::A2Q) == doctest::Approx(3.0));

  // d/dt at g > T is g ln2.
  const double h = 1e-6;
  auto up = ch, dn = ch;
  up.t += h;
  dn.t -= h;
  const double fd = (reg_penalty(up, bits, Variant::A2Q) - reg_penalty(dn, bits, Variant::A2Q)) / (2 * h);
  CHECK(fd == doctest::Approx(10.0 * std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("measure_sparsity") {
  std::vector<QuantResult> layer{codes({0, 0}), codes({0, 0, 0})};
  CHECK(measure_sparsity(layer) == 1.0);
  layer = {codes({1, -2}), codes({3})};
  CHECK(measure_sparsity(layer) == 0.0);
  layer = {codes({0, 1}), codes({-1, 0})};
  CHECK(measure_sparsity(layer) == 0.5);
}

TEST_CASE("channel_cdf") {
  const BitWidths bits{4, 4, 32, false};
  const std::vector<int> ps{8, 10, 11, 12, 13, 16};
  auto cdf = channel_cdf({{0.0, 0.0}, {0.0}}, bits, ps);
  for (const auto &pt : cdf) CHECK(pt.fraction == 1.0);

  // s = 7 / 7 = 1 and ||w / s||_1 = 14 * 7 + 2 = 100.
  std::vector<double> w(14, 7.0);
  w.push_back(2.0);
  cdf = channel_cdf({w}, bits, ps);
  for (const auto &pt : cdf) CHECK(pt.fraction == (pt.acc_bits >= 12 ? 1.0 : 0.0));

  Rng rng(4);
  std::vector<std::vector<double>> many(50, std::vector<double>(40));
  for (auto &ch : many)
    for (auto &x : ch) x = rng.normal();
  std::vector<int> all(24);
  std::iota(all.begin(), all.end(), 6);
  cdf = channel_cdf(many, bits, all);
  for (std::size_t i = 1; i < cdf.size(); ++i) CHECK(cdf[i].fraction >= cdf[i - 1].fraction);
}

TEST_CASE("rng is reproducible") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
    const auto k = a.integer(-3, 3);
    CHECK(k == b.integer(-3, 3));
    CHECK(k >= -3);
    CHECK(k <= 3);
  }
}

TEST_CASE("teacher-student data snaps inputs to the grid") {
  DatasetSpec spec;
  spec.input_dim = 5;
  spec.train_samples = 64;
  spec.test_samples = 32;
  const auto d = make_teacher_student(spec, 1);
  CHECK(d.train.size() == 64);
  CHECK(d.test.size() == 32);
  for (double x : d.train.x) {
    const double level = x / spec.input_step;
    CHECK(level == std::round(level));
    CHECK(level >= 0.0);
    CHECK(level <= spec.input_levels - 1);
  }
}

TEST_CASE("identity-mode network gradient matches finite differences") {
  for (Variant variant : {Variant::A2Q, Variant::A2QPlus}) {
    auto config = tiny_config(variant, 10, 5);
    const auto data = make_teacher_student(config.data, config.seed);
    Rng rng(config.seed);
    std::vector<int> topo{config.data.input_dim};
    topo.insert(topo.end(), config.hidden_widths.begin(), config.hidden_widths.end());
    topo.push_back(1);
    auto fnet = init_float_network(topo, rng);
    auto net = build_quantized_network(fnet, config, data.train);
    // EP-init leaves g exactly at T and zeros in v, both kinks for central
    // differences. Move every channel off them.
    for (auto &layer : net.layers) {
      for (std::size_t o = 0; o < layer.channels.size(); ++o) {
        layer.channels[o].t += o % 2 == 0 ? 0.25 : -0.25;
        for (double &x : layer.channels[o].v) x += 0.01 * rng.normal();
      }
    }
    std::vector<std::size_t> rows(32);
    std::iota(rows.begin(), rows.end(), 0);
    const LossOptions opts{true, 1e-3};
    NetworkGrad grad;
    network_loss(net, data.train, rows, opts, &grad);
    const double h = 1e-4;
    auto fd = [&](double &param) {
      const double keep = param;
      param = keep + h;
      const double up = network_loss(net, data.train, rows, opts, nullptr);
      param = keep - h;
      const double dn = network_loss(net, data.train, rows, opts, nullptr);
      param = keep;
      return (up - dn) / (2 * h);
    };
    auto close = [](double a, double b) {
      const double m = std::max(std::abs(a), std::abs(b));
      return m < 1e-7 ? std::abs(a - b) < 1e-9 : std::abs(a - b) / m < 1e-5;
    };
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      auto &layer = net.layers[l];
      for (std::size_t o = 0; o < layer.channels.size(); ++o) {
        auto &ch = layer.channels[o];
        const auto &g = grad.channels[l][o];
        for (std::size_t i = 0; i < ch.v.size(); i += 3) CHECK(close(g.v[i], fd(ch.v[i])));
        CHECK(close(g.t, fd(ch.t)));
        CHECK(close(g.d, fd(ch.d)));
        CHECK(close(grad.bias[l][o], fd(layer.bias[o])));
      }
    }
  }
}

TEST_CASE("training is deterministic and overflow-free") {
  const auto config = tiny_config(Variant::A2QPlus, 9, 3);
  const auto a = train(config);
  const auto b = train(config);
  CHECK(to_csv_row(a) == to_csv_row(b));
  CHECK(a.overflow_free);
  CHECK(a.min_slack >= 0);
  CHECK(a.step_violations == 0);
  CHECK(a.sparsity >= 0.0);
  CHECK(a.sparsity <= 1.0);
  CHECK(std::isfinite(a.final_loss));

  const auto plain = train(tiny_config(Variant::A2Q, 9, 3));
  CHECK(plain.overflow_free);
  CHECK(plain.min_slack >= 0);
}

TEST_CASE("trained codes respect the budget at every width") {
  for (int p : {8, 10, 12}) {
    const auto result = train_full(tiny_config(Variant::A2Q, p, 1));
    const auto hidden = quantize_hidden(result.net);
    const auto limit = a2q_limit(BitWidths{4, 4, p, false});
    for (const auto &layer : hidden)
      for (const auto &r : layer) CHECK(limit.admits(r.l1_codes));
    CHECK(a2q_limit(BitWidths{4, 4, p - 1, false}) < limit);
  }
}
