// SPDX-License-Identifier: Apache-2.0
#include "accq/epinit.hpp"
#include "accq/error.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace accq;

namespace {

double l1(const std::vector<double> &x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

double dist2(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Best point of a 2-D grid over the l1 ball; independent of the threshold search.
double grid_best_2d(const std::vector<double> &w, double radius, double step) {
  double best = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(std::ceil(radius / step));
  for (int i = -n; i <= n; ++i) {
    const double a = i * step;
    if (std::abs(a) > radius) continue;
    const double rest = radius - std::abs(a);
    // for fixed u_0 the best u_1 is w_1 clamped into [-rest, rest]
    const double b = std::clamp(w[1], -rest, rest);
    best = std::min(best, dist2({a, b}, w));
  }
  return best;
}

}  // namespace

TEST_CASE("project_l1_ball examples") {
  auto r = project_l1_ball(std::vector<double>{3.0, 1.0}, 2.0);
  CHECK(r.active);
  CHECK(r.theta == doctest::Approx(1.0));
  CHECK(r.v_star[0] == doctest::Approx(2.0));
  CHECK(r.v_star[1] == doctest::Approx(0.0));
  CHECK(dist2(r.v_star, {3.0, 1.0}) <= grid_best_2d({3.0, 1.0}, 2.0, 1e-3) + 1e-9);

  r = project_l1_ball(std::vector<double>{1.0, -1.0}, 4.0);
  CHECK_FALSE(r.active);
  CHECK(r.v_star == std::vector<double>{1.0, -1.0});

  r = project_l1_ball(std::vector<double>{2.0, -2.0}, 2.0);
  CHECK(r.theta == doctest::Approx(1.0));
  CHECK(r.v_star[0] == doctest::Approx(1.0));
  CHECK(r.v_star[1] == doctest::Approx(-1.0));
  CHECK(l1(r.v_star) == doctest::Approx(2.0));
}

TEST_CASE("project_l1_ball errors") {
  CHECK_THROWS_AS(project_l1_ball(std::vector<double>{1.0}, 0.0), Error);
  CHECK_THROWS_AS(project_l1_ball(std::vector<double>{1.0}, -1.0), Error);
  CHECK_THROWS_AS(project_l1_ball(std::vector<double>{std::nan("")}, 1.0), Error);
}

TEST_CASE("projection invariants on random inputs") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01(0.0, 2.0);
  std::uniform_real_distribution<double> frac(0.05, 1.5);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> w(1 + trial % 40);
    for (auto &x : w) x = n01(rng);
    const double radius = frac(rng) * std::max(l1(w), 1e-3);
    const auto r = project_l1_ball(w, radius);
    CHECK(l1(r.v_star) <= radius * (1.0 + 1e-9) + 1e-12);
    if (l1(w) > radius) CHECK(std::abs(l1(r.v_star) - radius) <= 1e-9 * std::max(1.0, radius));
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(std::abs(r.v_star[i]) <= std::abs(w[i]));
      CHECK((r.v_star[i] == 0.0 || std::signbit(r.v_star[i]) == std::signbit(w[i])));
    }
    // Projecting again is a no-op up to the boundary tolerance.
    const auto again = project_l1_ball(r.v_star, radius);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(again.v_star[i] == doctest::Approx(r.v_star[i]).epsilon(1e-9));
  }
}

TEST_CASE("projection is optimal against a 2-D grid") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01(0.0, 1.5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<double> w{n01(rng), n01(rng)};
    const double radius = 0.1 + 0.8 * l1(w) * (trial % 5 + 1) / 5.0;
    const auto r = project_l1_ball(w, radius);
    CHECK(dist2(r.v_star, w) <= grid_best_2d(w, radius, 1e-2) + 1e-6);
  }
}

TEST_CASE("init_scale") {
  CHECK(init_scale(std::vector<double>{-3.0, 1.0}, 4) == doctest::Approx(3.0 / 7.0));
  CHECK(init_scale(std::vector<double>{1.0}, 2) == 1.0);
  CHECK(init_scale(std::vector<double>{0.0, 0.0}, 8) == kZeroChannelScale);
  CHECK_THROWS_AS(init_scale(std::vector<double>{1.0}, 1), Error);
}

TEST_CASE("ep_init") {
  // Feasible checkpoint: nothing to project.
  const BitWidths wide{8, 4, 24, false};
  const std::vector<double> small{0.3, -0.2, 0.1};
  auto ch = ep_init(small, wide, Variant::A2Q);
  CHECK(ch.v == small);
  CHECK(ch.g() == doctest::Approx(0.6));
  CHECK(ch.s() == doctest::Approx(0.3 / 127.0));

  // w = [3, 1], s = 3/7, integer budget 2 -> radius 6/7.
  ch = ep_init_with_limit(std::vector<double>{3.0, 1.0}, 4, RationalBound(2, 1));
  CHECK(ch.s() == doctest::Approx(3.0 / 7.0));
  CHECK(ch.g() == doctest::Approx(6.0 / 7.0));
  CHECK(dist2(ch.v, {3.0, 1.0}) <= grid_best_2d({3.0, 1.0}, 6.0 / 7.0, 1e-4) + 1e-9);

  // A2Q+ uses the A2Q radius.
  const BitWidths tight{4, 4, 8, false};
  const std::vector<double> w{2.0, -1.0, 0.5, 1.5};
  const auto a = ep_init(w, tight, Variant::A2Q);
  const auto p = ep_init(w, tight, Variant::A2QPlus);
  CHECK(a.v == p.v);
  CHECK(a.t == p.t);

  ch = ep_init(std::vector<double>{0.0, 0.0}, wide, Variant::A2Q);
  CHECK(ch.t == kZeroNormExponent);
  CHECK(ch.v == std::vector<double>{0.0, 0.0});
}

TEST_CASE("weight_quant_error") {
  const std::vector<double> w{1.5, 0.5};
  CHECK(weight_quant_error(w, w, false) == 0.0);
  CHECK(weight_quant_error(std::vector<double>{0.0, 0.0}, w, true) == doctest::Approx(1.0));
  CHECK(weight_quant_error(std::vector<double>{1.0, 0.0}, w, false) == doctest::Approx(0.25));
  CHECK(weight_quant_error(std::vector<double>{0.0}, std::vector<double>{0.0}, true) == 0.0);
  CHECK_THROWS_AS(weight_quant_error(std::vector<double>{0.0}, w, false), Error);
}

TEST_CASE("ep-init weights are at least as close as naive init before rounding") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> w(16);
    for (auto &x : w) x = n01(rng);
    const BitWidths bits{4, 4, 7 + trial % 4, false};
    // Naive init clips g to T, which lands on the same ball the projection
    // minimizes over.
    const auto ep = quantize(ep_init(w, bits, Variant::A2Q), Variant::A2Q, bits);
    const auto naive = quantize(naive_init(w, 4), Variant::A2Q, bits);
    CHECK(weight_quant_error(ep.w, w, false) <= weight_quant_error(naive.w, w, false) + 1e-12);
  }
}
