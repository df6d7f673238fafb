// SPDX-License-Identifier: Apache-2.0
#include "accq/verify_props.hpp"

#include "accq/error.hpp"
#include "accq/qat.hpp"
#include "accq/quantizers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace accq {
namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }
int sign_of(std::int64_t v) { return (v > 0) - (v < 0); }

// Splits total into parts non-negative integers (uniform cut points).
std::vector<std::int64_t> random_composition(std::int64_t total, std::size_t parts, Rng &rng) {
  std::vector<std::int64_t> cuts(parts - 1);
  for (auto &c : cuts) c = rng.integer(0, total);
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::int64_t> out(parts);
  std::int64_t prev = 0;
  for (std::size_t i = 0; i + 1 < parts; ++i) {
    out[i] = cuts[i] - prev;
    prev = cuts[i];
  }
  out[parts - 1] = total - prev;
  return out;
}

bool overflows(std::span<const std::int64_t> q, int act_bits, bool act_signed, const AccumulatorSpec &spec,
               AccumWitness *out = nullptr) {
  const std::uint64_t budget = enum_budget_from_env();
  AccumWitness w = enumeration_size(q.size(), act_bits) <= budget
                       ? exhaustive_check(q, act_bits, act_signed, spec, budget)
                       : check_accumulator(q, act_bits, act_signed, spec);
  const bool res = w.overflowed;
  if (out) *out = std::move(w);
  return res;
}

std::int64_t sum_of(std::span<const std::int64_t> q) { return std::accumulate(q.begin(), q.end(), std::int64_t{0}); }

bool visit_rec(std::vector<std::int64_t> &buf, std::size_t i, std::int64_t rem,
               const std::function<bool(std::span<const std::int64_t>)> &visit) {
  if (i + 1 == buf.size()) {
    buf[i] = -rem;
    if (visit(buf)) return true;
    if (rem == 0) return false;
    buf[i] = rem;
    return visit(buf);
  }
  for (std::int64_t v = -rem; v <= rem; ++v) {
    buf[i] = v;
    if (visit_rec(buf, i + 1, rem - (v < 0 ? -v : v), visit)) return true;
  }
  return false;
}

PropCheck make_check(std::string name, bool ok, std::string detail) { return {std::move(name), ok, std::move(detail)}; }

}  // namespace

ZeroSumVector ZeroSumVector::from(std::vector<std::int64_t> q) {
  ZeroSumVector z;
  for (auto v : q) {
    if (v > 0) z.alpha += v;
    else z.beta += v;
  }
  z.q = std::move(q);
  return z;
}

ZeroSumVector gen_zero_sum(std::size_t k, std::int64_t l1_budget, std::uint64_t seed) {
  if (k == 0) throw Error(ErrorKind::EmptyInput, "gen_zero_sum: K must be positive");
  if (l1_budget < 0) throw Error(ErrorKind::NonPositiveRadius, "gen_zero_sum: negative l1 budget");
  if (k == 1) {
    if (l1_budget > 0) throw Error(ErrorKind::Infeasible, "gen_zero_sum: K = 1 forces q = [0]");
    return ZeroSumVector::from({0});
  }
  Rng rng(seed);
  const std::int64_t half = rng.integer(0, l1_budget / 2);
  std::vector<std::int64_t> q(k, 0);
  if (half > 0) {
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = k; i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(i - 1)));
      std::swap(idx[i - 1], idx[j]);
    }
    const auto n_pos = static_cast<std::size_t>(rng.integer(1, static_cast<std::int64_t>(k - 1)));
    const auto pos = random_composition(half, n_pos, rng);
    const auto neg = random_composition(half, k - n_pos, rng);
    for (std::size_t i = 0; i < n_pos; ++i) q[idx[i]] = pos[i];
    for (std::size_t i = n_pos; i < k; ++i) q[idx[i]] = -neg[i - n_pos];
  }
  return ZeroSumVector::from(std::move(q));
}

Prop1Report check_prop1_derivations(const ZeroSumVector &z, int act_bits, bool act_signed, int acc_bits) {
  BitWidths bw{2, act_bits, acc_bits, act_signed};
  bw.validate();
  const auto range = int_range(act_bits, act_signed);
  const BigInt width = BigInt(range.hi) - BigInt(range.lo);  // d - c
  const BigInt l1 = l1_norm(z.q);
  const auto mu = extremal_max_input(z.q, act_bits, act_signed);
  const auto nu = extremal_min_input(z.q, act_bits, act_signed);
  const BigInt f = exact_dot(mu, z.q);
  const BigInt e = exact_dot(nu, z.q);

  Prop1Report r;
  r.alpha_identity = z.alpha == -z.beta && 2 * z.alpha == l1;
  r.max_identity = f == z.alpha * width;
  r.min_identity = -e == z.alpha * width;
  r.span_identity = f - e == width * l1;
  r.sign_identity = true;
  for (std::size_t i = 0; i < z.q.size(); ++i) {
    if (z.q[i] == 0) continue;
    if (BigInt(mu[i]) - BigInt(nu[i]) != width * sign_of(z.q[i])) r.sign_identity = false;
  }

  const BigInt two_p = BigInt(1) << acc_bits;
  const BigInt den = (BigInt(1) << act_bits) - 1;
  const Rational budget_f(two_p - 2, den);
  const Rational budget_span(two_p - 1, den);
  const Rational budget_e(two_p, den);
  r.budgets_ordered = budget_f <= budget_span && budget_span <= budget_e;
  r.within_budget = Rational(l1) <= budget_f;
  const AccumulatorSpec spec(acc_bits);
  r.upper_ok = f <= spec.hi();
  r.lower_ok = -e <= -spec.lo();
  r.span_ok = f - e <= two_p - 1;
  return r;
}

bool check_lemma1(std::span<const double> x, std::span<const double> w, std::span<const double> q) {
  if (x.size() != w.size() || w.size() != q.size()) throw Error(ErrorKind::LengthMismatch, "check_lemma1: length mismatch");
  double xq = 0.0;
  double xw = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(w[i]) || !std::isfinite(q[i]))
      throw Error(ErrorKind::NonFiniteInput, "check_lemma1: non-finite input");
    if (std::abs(q[i]) > std::abs(w[i]))
      throw Error(ErrorKind::HypothesisViolation, "check_lemma1: |q_i| > |w_i| at index " + std::to_string(i));
    if (x[i] != 0.0) {
      const int sw = sign_of(w[i]);
      const int sq = sign_of(q[i]);
      if (sign_of(x[i]) != sw || (sq != 0 && sq != sw))
        throw Error(ErrorKind::HypothesisViolation, "check_lemma1: sign mismatch at index " + std::to_string(i));
    }
    xq += x[i] * q[i];
    xw += x[i] * w[i];
  }
  return xq <= xw;
}

bool for_each_with_l1(std::size_t k, std::int64_t l1, const std::function<bool(std::span<const std::int64_t>)> &visit) {
  if (k == 0 || l1 < 0) return false;
  std::vector<std::int64_t> buf(k, 0);
  return visit_rec(buf, 0, l1, visit);
}

StrictnessWitnesses find_strictness_witnesses(int acc_bits, int act_bits, bool act_signed, std::size_t max_k) {
  StrictnessWitnesses out;
  out.acc_bits = acc_bits;
  out.act_bits = act_bits;
  out.act_signed = act_signed;
  const BitWidths bw{2, act_bits, acc_bits, act_signed};
  bw.validate();
  out.bound = a2q_plus_limit(bw);
  out.budget_floor = static_cast<std::int64_t>(out.bound.floor());
  const AccumulatorSpec spec(acc_bits);
  const std::int64_t even_floor = out.budget_floor - (out.budget_floor % 2);

  // (a) zero-sum vectors need an even l1-norm, so the tightest one sits at
  // the largest even value not above the bound.
  for (std::size_t k = 2; k <= max_k && !out.at_budget; ++k) {
    for_each_with_l1(k, even_floor, [&](std::span<const std::int64_t> q) {
      if (sum_of(q) != 0) return false;
      AccumWitness w;
      if (overflows(q, act_bits, act_signed, spec, &w)) return false;
      out.at_budget.emplace(q.begin(), q.end());
      out.at_budget_witness = std::move(w);
      return true;
    });
  }

  // (b) one past the bound; near-zero-sum candidates first, limited to K <= 2
  // to keep the search cheap.
  const std::int64_t over = out.budget_floor + 1;
  for (std::size_t k = 2; k <= std::min<std::size_t>(max_k, 2) && !out.over_budget; ++k) {
    for_each_with_l1(k, over, [&](std::span<const std::int64_t> q) {
      const auto s = sum_of(q);
      if (s < -1 || s > 1 || !overflows(q, act_bits, act_signed, spec)) return false;
      out.over_budget.emplace(q.begin(), q.end());
      return true;
    });
  }
  for (std::size_t k = 1; k <= max_k && !out.over_budget; ++k) {
    for_each_with_l1(k, over, [&](std::span<const std::int64_t> q) {
      if (!overflows(q, act_bits, act_signed, spec)) return false;
      out.over_budget.emplace(q.begin(), q.end());
      return true;
    });
  }

  for (std::size_t k = 2; k <= max_k && !out.zero_sum_over_budget; ++k) {
    for_each_with_l1(k, even_floor + 2, [&](std::span<const std::int64_t> q) {
      if (sum_of(q) != 0 || !overflows(q, act_bits, act_signed, spec)) return false;
      out.zero_sum_over_budget.emplace(q.begin(), q.end());
      return true;
    });
  }

  // (c) dropping the zero-sum condition breaks the bound.
  if (out.budget_floor > 0) {
    out.non_centered_searched = true;
    for (std::size_t k = 1; k <= std::min<std::size_t>(max_k, 3) && !out.non_centered; ++k) {
      for (std::int64_t l1 = out.budget_floor; l1 > 0 && !out.non_centered; --l1) {
        for_each_with_l1(k, l1, [&](std::span<const std::int64_t> q) {
          if (sum_of(q) == 0 || !overflows(q, act_bits, act_signed, spec)) return false;
          out.non_centered.emplace(q.begin(), q.end());
          return true;
        });
      }
    }
  }
  return out;
}

std::vector<PropCheck> run_property_suite(std::uint64_t seed, int trials) {
  std::vector<PropCheck> checks;
  Rng rng(seed);

  {
    int bad = 0;
    for (int t = 0; t < trials; ++t) {
      const auto k = static_cast<std::size_t>(rng.integer(2, 16));
      const int n = static_cast<int>(rng.integer(1, 8));
      const bool sgn = rng.integer(0, 1) == 1;
      const int p = static_cast<int>(rng.integer(n + 2, 24));
      const auto budget = static_cast<std::int64_t>(a2q_plus_limit({2, n, p, sgn}).floor());
      const auto z = gen_zero_sum(k, budget, rng.next());
      const auto r = check_prop1_derivations(z, n, sgn, p);
      if (!r.identities_hold() || !r.within_budget || !r.implication_holds() || !r.budgets_ordered) ++bad;
    }
    checks.push_back(make_check("zero-sum identities and implication", bad == 0,
                                std::to_string(trials - bad) + "/" + std::to_string(trials)));
  }

  {
    int bad = 0;
    for (int t = 0; t < trials; ++t) {
      const auto k = static_cast<std::size_t>(rng.integer(1, 4));
      const int n = static_cast<int>(rng.integer(1, 3));
      const bool sgn = rng.integer(0, 1) == 1;
      const AccumulatorSpec spec(static_cast<int>(rng.integer(4, 10)));
      std::vector<std::int64_t> q(k);
      for (auto &v : q) v = rng.integer(-7, 7);
      const auto a = check_accumulator(q, n, sgn, spec);
      const auto b = exhaustive_check(q, n, sgn, spec);
      if (a.true_max != b.true_max || a.true_min != b.true_min || a.overflowed != b.overflowed) ++bad;
    }
    checks.push_back(make_check("extremal inputs match exhaustive search", bad == 0,
                                std::to_string(trials - bad) + "/" + std::to_string(trials)));
  }

  {
    int bad = 0;
    for (int t = 0; t < trials; ++t) {
      const auto k = static_cast<std::size_t>(rng.integer(1, 32));
      const double s = std::ldexp(1.0, static_cast<int>(rng.integer(-8, 2)));
      std::vector<double> w(k), ws(k), q(k), x(k);
      for (std::size_t i = 0; i < k; ++i) {
        w[i] = rng.normal();
        ws[i] = w[i] / s;
      }
      const auto codes = round_to_zero(ws);
      if (!verify_prop2(w, s, codes)) ++bad;
      for (std::size_t i = 0; i < k; ++i) {
        q[i] = static_cast<double>(codes[i]) * s;
        x[i] = rng.integer(0, 1) == 1 ? sign_of(w[i]) * static_cast<double>(rng.integer(1, 255)) : 0.0;
      }
      if (!check_lemma1(x, w, q)) ++bad;
    }
    checks.push_back(make_check("round-to-zero keeps sign and magnitude", bad == 0,
                                std::to_string(trials - bad) + "/" + std::to_string(trials)));
  }

  {
    int bad = 0;
    for (int t = 0; t < trials; ++t) {
      const auto k = static_cast<std::size_t>(rng.integer(1, 4));
      const int n = static_cast<int>(rng.integer(1, 3));
      const bool sgn = rng.integer(0, 1) == 1;
      const int p = static_cast<int>(rng.integer(4, 12));
      const auto budget = static_cast<std::int64_t>(a2q_limit({2, n, p, sgn}).floor());
      std::vector<std::int64_t> q(k, 0);
      std::int64_t left = budget;
      for (auto &v : q) {
        const auto mag = rng.integer(0, left);
        left -= mag;
        v = rng.integer(0, 1) == 1 ? mag : -mag;
      }
      if (exhaustive_check(q, n, sgn, AccumulatorSpec(p)).overflowed) ++bad;
    }
    checks.push_back(make_check("l1 within the A2Q budget never overflows", bad == 0,
                                std::to_string(trials - bad) + "/" + std::to_string(trials)));
  }

  {
    struct Cfg {
      int p, n;
      bool sgn;
    };
    const Cfg cfgs[] = {{6, 2, false}, {8, 2, true}, {7, 3, false}, {8, 3, true}};
    int ok = 0;
    std::string detail;
    for (const auto &c : cfgs) {
      const auto s = find_strictness_witnesses(c.p, c.n, c.sgn, 4);
      const bool pass = s.at_budget && s.over_budget && s.zero_sum_over_budget &&
                        (!s.non_centered_searched || s.non_centered);
      ok += pass ? 1 : 0;
    }
    detail = std::to_string(ok) + "/" + std::to_string(std::size(cfgs));
    checks.push_back(make_check("zero-centered bound is tight", ok == static_cast<int>(std::size(cfgs)), detail));
  }
  return checks;
}

}  // namespace accq
