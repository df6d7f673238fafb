// SPDX-License-Identifier: Apache-2.0
#include "accq/intsim.hpp"

#include "accq/error.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

namespace accq {

namespace {

void require_widths(int act_bits, bool act_signed) {
  if (act_bits < 1 || act_bits > 62) {
    throw Error(ErrorKind::InvalidBitWidth, "activation width must be in [1, 62] for simulation");
  }
  (void)act_signed;
}

std::int64_t abs_or_max(std::int64_t v) {
  if (v == std::numeric_limits<std::int64_t>::min()) return std::numeric_limits<std::int64_t>::max();
  return v < 0 ? -v : v;
}

// Extremes over one block [begin, end) of the enumeration. Digit i of index
// idx is (idx / R^i) % R and maps to x_i = c + digit.
template <typename Acc>
struct BlockExtremes {
  Acc max_value{};
  Acc min_value{};
  std::uint64_t max_index = 0;
  std::uint64_t min_index = 0;
  bool empty = true;
};

template <typename Acc>
BlockExtremes<Acc> scan_block(std::span<const std::int64_t> q, std::int64_t c, std::uint64_t radix,
                              std::uint64_t begin, std::uint64_t end) {
  BlockExtremes<Acc> out;
  if (begin >= end) return out;
  const std::size_t k = q.size();
  std::vector<std::uint64_t> digits(k, 0);
  std::uint64_t rest = begin;
  Acc dot = 0;
  for (std::size_t i = 0; i < k; ++i) {
    digits[i] = rest % radix;
    rest /= radix;
    dot += Acc(c + static_cast<std::int64_t>(digits[i])) * Acc(q[i]);
  }
  const auto span = static_cast<std::int64_t>(radix - 1);
  for (std::uint64_t idx = begin;;) {
    if (out.empty || dot > out.max_value) {
      out.max_value = dot;
      out.max_index = idx;
    }
    if (out.empty || dot < out.min_value) {
      out.min_value = dot;
      out.min_index = idx;
    }
    out.empty = false;
    if (++idx >= end) break;
    // odometer increment with incremental dot update
    for (std::size_t i = 0; i < k; ++i) {
      if (digits[i] + 1 < radix) {
        ++digits[i];
        dot += Acc(q[i]);
        break;
      }
      digits[i] = 0;
      dot -= Acc(q[i]) * Acc(span);
    }
  }
  return out;
}

std::vector<std::int64_t> decode_input(std::uint64_t idx, std::size_t k, std::int64_t c, std::uint64_t radix) {
  std::vector<std::int64_t> x(k);
  for (std::size_t i = 0; i < k; ++i) {
    x[i] = c + static_cast<std::int64_t>(idx % radix);
    idx /= radix;
  }
  return x;
}

void fill_verdict(AccumWitness &w, const AccumulatorSpec &spec) {
  const BigInt b = spec.hi();
  w.upper_ok = w.true_max <= b;
  w.lower_ok = -w.true_min <= b + 1;
  w.span_ok = w.true_max - w.true_min <= 2 * b + 1;
  w.overflowed = !spec.contains(w.true_max) || !spec.contains(w.true_min);
  w.wrapped_max = wrap_to_accumulator(w.true_max, spec);
  w.wrapped_min = wrap_to_accumulator(w.true_min, spec);
}

// Whether every partial sum of the enumeration fits comfortably in int64.
bool fits_int64(std::span<const std::int64_t> q, std::int64_t c, std::int64_t d) {
  const BigInt mag = std::max(BigInt(abs_or_max(c)), BigInt(abs_or_max(d)));
  const BigInt bound = l1_norm(q) * mag * 2;
  return bound < (BigInt(1) << 62);
}

template <bool Parallel>
AccumWitness exhaustive_impl(std::span<const std::int64_t> q, int act_bits, bool act_signed,
                             const AccumulatorSpec &spec, std::uint64_t budget) {
  require_widths(act_bits, act_signed);
  const std::uint64_t total = enumeration_size(q.size(), act_bits);
  if (total > budget) {
    throw Error(ErrorKind::BudgetExceeded, "exhaustive enumeration of " + std::to_string(total) +
                                               " inputs exceeds budget " + std::to_string(budget));
  }
  const IntRange range = int_range(act_bits, act_signed);
  const std::uint64_t radix = std::uint64_t{1} << act_bits;

  auto run = [&]<typename Acc>() {
    BlockExtremes<Acc> best;
    if constexpr (Parallel) {
      const std::uint64_t blocks = std::min<std::uint64_t>(total, 256);
      std::vector<BlockExtremes<Acc>> parts(blocks);
      const auto nblocks = static_cast<std::int64_t>(blocks);
#pragma omp parallel for schedule(dynamic)
      for (std::int64_t b = 0; b < nblocks; ++b) {
        const auto ub = static_cast<std::uint64_t>(b);
        const std::uint64_t begin = total / blocks * ub + std::min(ub, total % blocks);
        const std::uint64_t end = begin + total / blocks + (ub < total % blocks ? 1 : 0);
        parts[ub] = scan_block<Acc>(q, range.lo, radix, begin, end);
      }
      // blocks are in index order; strict comparisons keep the first extreme
      for (const auto &p : parts) {
        if (p.empty) continue;
        if (best.empty || p.max_value > best.max_value) {
          best.max_value = p.max_value;
          best.max_index = p.max_index;
        }
        if (best.empty || p.min_value < best.min_value) {
          best.min_value = p.min_value;
          best.min_index = p.min_index;
        }
        best.empty = false;
      }
    } else {
      best = scan_block<Acc>(q, range.lo, radix, 0, total);
    }
    AccumWitness w;
    w.true_max = BigInt(best.max_value);
    w.true_min = BigInt(best.min_value);
    w.witness_x_max = decode_input(best.max_index, q.size(), range.lo, radix);
    w.witness_x_min = decode_input(best.min_index, q.size(), range.lo, radix);
    fill_verdict(w, spec);
    return w;
  };

  if (fits_int64(q, range.lo, range.hi)) return run.template operator()<std::int64_t>();
  return run.template operator()<BigInt>();
}

}  // namespace

std::uint64_t enum_budget_from_env() {
  if (const char *env = std::getenv("ACCQ_ENUM_BUDGET")) {
    char *end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::uint64_t>(v);
  }
  return kDefaultEnumBudget;
}

AccumulatorSpec::AccumulatorSpec(int acc_bits) : bits_(acc_bits) {
  if (acc_bits < 2 || acc_bits > 64) {
    throw Error(ErrorKind::InvalidBitWidth, "accumulator width must be in [2, 64]");
  }
  hi_ = (BigInt(1) << (acc_bits - 1)) - 1;
  lo_ = -(BigInt(1) << (acc_bits - 1));
}

std::vector<std::int64_t> extremal_max_input(std::span<const std::int64_t> q, int act_bits, bool act_signed) {
  require_widths(act_bits, act_signed);
  const IntRange r = int_range(act_bits, act_signed);
  std::vector<std::int64_t> mu(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) mu[i] = q[i] >= 0 ? r.hi : r.lo;
  return mu;
}

std::vector<std::int64_t> extremal_min_input(std::span<const std::int64_t> q, int act_bits, bool act_signed) {
  require_widths(act_bits, act_signed);
  const IntRange r = int_range(act_bits, act_signed);
  std::vector<std::int64_t> nu(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) nu[i] = q[i] >= 0 ? r.lo : r.hi;
  return nu;
}

BigInt exact_dot(std::span<const std::int64_t> x, std::span<const std::int64_t> q) {
  if (x.size() != q.size()) throw Error(ErrorKind::LengthMismatch, "x and q differ in length");
  BigInt total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) total += BigInt(x[i]) * q[i];
  return total;
}

std::int64_t wrap_to_accumulator(const BigInt &value, const AccumulatorSpec &spec) {
  const BigInt modulus = BigInt(1) << spec.bits();
  BigInt r = value % modulus;  // sign follows value
  if (r < 0) r += modulus;
  if (r > spec.hi()) r -= modulus;
  return r.convert_to<std::int64_t>();
}

AccumWitness check_accumulator(std::span<const std::int64_t> q, int act_bits, bool act_signed,
                               const AccumulatorSpec &spec) {
  AccumWitness w;
  w.witness_x_max = extremal_max_input(q, act_bits, act_signed);
  w.witness_x_min = extremal_min_input(q, act_bits, act_signed);
  w.true_max = exact_dot(w.witness_x_max, q);
  w.true_min = exact_dot(w.witness_x_min, q);
  fill_verdict(w, spec);
  return w;
}

WrapResult wrapping_dot(std::span<const std::int64_t> x, std::span<const std::int64_t> q,
                        const AccumulatorSpec &spec) {
  const BigInt exact = exact_dot(x, q);
  WrapResult out;
  out.wrapped = wrap_to_accumulator(exact, spec);
  out.overflowed = BigInt(out.wrapped) != exact;
  return out;
}

std::uint64_t enumeration_size(std::size_t k, int act_bits) {
  const auto bits = static_cast<std::uint64_t>(act_bits) * k;
  if (bits >= 64) return std::numeric_limits<std::uint64_t>::max();
  return std::uint64_t{1} << bits;
}

AccumWitness exhaustive_check(std::span<const std::int64_t> q, int act_bits, bool act_signed,
                              const AccumulatorSpec &spec, std::uint64_t budget) {
  return exhaustive_impl<true>(q, act_bits, act_signed, spec, budget);
}

AccumWitness exhaustive_check_serial(std::span<const std::int64_t> q, int act_bits, bool act_signed,
                                     const AccumulatorSpec &spec, std::uint64_t budget) {
  return exhaustive_impl<false>(q, act_bits, act_signed, spec, budget);
}

bool verify_prop2(std::span<const double> w, double s, std::span<const std::int64_t> q) {
  if (w.size() != q.size()) throw Error(ErrorKind::LengthMismatch, "w and q differ in length");
  if (!(s > 0.0)) throw Error(ErrorKind::NonFiniteInput, "scale must be strictly positive");
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (q[i] == 0) continue;
    const double qi = static_cast<double>(q[i]);
    if ((qi > 0.0) != (w[i] > 0.0) || w[i] == 0.0) return false;
    // |s q_i| <= |w_i| with the exact sign of s * q_i - w_i
    const double excess = std::fma(s, qi, -w[i]);
    if (qi > 0.0 ? excess > 0.0 : excess < 0.0) return false;
  }
  return true;
}

}  // namespace accq
