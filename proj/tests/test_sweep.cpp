// SPDX-License-Identifier: Apache-2.0
#include "accq/error.hpp"
#include "accq/sweep.hpp"

#include <doctest.h>

#include <set>
#include <string>
#include <vector>

using namespace accq;

namespace {

SweepRecord record(Variant v, int m, int n, int p, std::uint64_t seed, double loss) {
  SweepRecord r;
  r.variant = v;
  r.weight_bits = m;
  r.act_bits = n;
  r.acc_bits = p;
  r.seed = seed;
  r.final_loss = loss;
  r.sparsity = 0.25;
  r.min_slack = Rational(3, 16);
  return r;
}

}  // namespace

TEST_CASE("format helpers") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_rational(Rational(6, 4)) == "3/2");
  CHECK(format_rational(Rational(5)) == "5");
  CHECK(parse_rational("3/2") == Rational(3, 2));
  CHECK(parse_rational("7") == Rational(7));
  CHECK_THROWS_AS(parse_rational("x/2"), Error);
}

TEST_CASE("csv round trip") {
  std::vector<SweepRecord> recs{record(Variant::A2Q, 4, 4, 12, 0, 0.5),
                                record(Variant::A2QPlus, 4, 4, 12, 1, 1.0 / 3.0)};
  const std::string text = to_csv(recs);
  CHECK(text.rfind(kSweepCsvHeader, 0) == 0);
  const auto back = parse_csv(text);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) CHECK(to_csv_row(back[i]) == to_csv_row(recs[i]));
  CHECK(back[1].final_loss == 1.0 / 3.0);
  CHECK(back[0].min_slack == Rational(3, 16));
}

TEST_CASE("csv errors") {
  CHECK_THROWS_AS(parse_csv(""), Error);
  CHECK_THROWS_AS(parse_csv(std::string(kSweepCsvHeader) + "\n"), Error);
  CHECK_THROWS_AS(parse_csv("a,b,c\n1,2,3\n"), Error);
  CHECK_THROWS_AS(parse_csv(std::string(kSweepCsvHeader) + "\na2q,4,4,x,0,0.1,0,0\n"), Error);
}

TEST_CASE("pareto frontier") {
  auto single = pareto_frontier({record(Variant::A2Q, 4, 4, 12, 0, 0.7)});
  REQUIRE(single.size() == 1);
  CHECK(single[0].final_loss == 0.7);

  auto two = pareto_frontier({record(Variant::A2Q, 4, 4, 12, 0, 0.5), record(Variant::A2Q, 3, 4, 12, 1, 0.3)});
  REQUIRE(two.size() == 1);
  CHECK(two[0].final_loss == 0.3);
  CHECK(two[0].weight_bits == 3);

  auto mixed = pareto_frontier({record(Variant::A2QPlus, 4, 4, 16, 0, 0.2), record(Variant::A2Q, 4, 4, 12, 0, 0.4),
                                record(Variant::A2QPlus, 4, 4, 12, 0, 0.3)});
  REQUIRE(mixed.size() == 3);
  CHECK(mixed[0].acc_bits == 12);
  CHECK(mixed[1].acc_bits == 12);
  CHECK(mixed[2].acc_bits == 16);
  CHECK_THROWS_AS(pareto_frontier({}), Error);
}

TEST_CASE("sort_records orders by variant, M, N, P, seed") {
  std::vector<SweepRecord> recs{record(Variant::A2QPlus, 4, 4, 12, 0, 0), record(Variant::A2Q, 4, 4, 12, 1, 0),
                                record(Variant::A2Q, 4, 4, 12, 0, 0), record(Variant::A2Q, 3, 4, 14, 0, 0)};
  sort_records(recs);
  CHECK(recs[0].weight_bits == 3);
  CHECK(recs[1].seed == 0);
  CHECK(recs[2].seed == 1);
  CHECK(recs[3].variant == Variant::A2QPlus);
}

TEST_CASE("grid expansion") {
  TrainConfig base;
  SweepGrid grid{{4}, {4}, {}, {Variant::A2Q}, {0, 1}};
  const auto k = max_dot_size(base);
  CHECK(k == 128);
  const auto configs = grid.expand(base, k);
  const int p_star = min_acc_width(k, BitWidths{4, 4, 32, false});
  CHECK(configs.size() == 2 * (kAutoAccReduction + 1));
  std::set<int> ps;
  for (const auto &c : configs) ps.insert(c.bits.acc_bits);
  CHECK(*ps.rbegin() == p_star);
  CHECK(*ps.begin() == p_star - kAutoAccReduction);

  grid.acc_bits = {10, 12};
  CHECK(grid.expand(base, k).size() == 4);
}
