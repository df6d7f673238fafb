// SPDX-License-Identifier: Apache-2.0
/**
 * @file  intsim.hpp
 * @brief Exact integer dot-product simulation against a P-bit two's-complement
 *        accumulator.
 *
 * Dot products are evaluated exactly (arbitrary precision where needed); the
 * P-bit behavior is a final modular reduction into [-2^(P-1), 2^(P-1) - 1].
 */
#pragma once

#include "accq/bounds.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace accq {

inline constexpr std::uint64_t kDefaultEnumBudget = std::uint64_t{1} << 24;

/// Enumeration budget: ACCQ_ENUM_BUDGET if set to a positive integer, else 2^24.
std::uint64_t enum_budget_from_env();

class AccumulatorSpec {
 public:
  explicit AccumulatorSpec(int acc_bits);

  int bits() const noexcept { return bits_; }
  /// a = -2^(P-1)
  const BigInt &lo() const noexcept { return lo_; }
  /// b = 2^(P-1) - 1
  const BigInt &hi() const noexcept { return hi_; }
  bool contains(const BigInt &x) const { return x >= lo_ && x <= hi_; }

 private:
  int bits_;
  BigInt lo_;
  BigInt hi_;
};

struct AccumWitness {
  BigInt true_max = 0;  // f
  BigInt true_min = 0;  // e
  bool overflowed = false;
  std::int64_t wrapped_max = 0;
  std::int64_t wrapped_min = 0;
  std::vector<std::int64_t> witness_x_max;
  std::vector<std::int64_t> witness_x_min;
  bool upper_ok = true;  // f <= 2^(P-1) - 1
  bool lower_ok = true;  // -e <= 2^(P-1)
  bool span_ok = true;   // f - e <= 2^P - 1
};

/// mu_i = d where q_i >= 0, c where q_i < 0, for the N-bit input range [c, d].
std::vector<std::int64_t> extremal_max_input(std::span<const std::int64_t> q, int act_bits, bool act_signed);
/// nu_i = c where q_i >= 0, d where q_i < 0.
std::vector<std::int64_t> extremal_min_input(std::span<const std::int64_t> q, int act_bits, bool act_signed);

/// Exact x^T q.
BigInt exact_dot(std::span<const std::int64_t> x, std::span<const std::int64_t> q);

/// Reduce an exact value modulo 2^P into [a, b].
std::int64_t wrap_to_accumulator(const BigInt &value, const AccumulatorSpec &spec);

/// Worst-case accumulator check through the extremal inputs.
AccumWitness check_accumulator(std::span<const std::int64_t> q, int act_bits, bool act_signed,
                               const AccumulatorSpec &spec);

struct WrapResult {
  std::int64_t wrapped = 0;
  bool overflowed = false;
};

/// Exact dot product followed by two's-complement wraparound.
WrapResult wrapping_dot(std::span<const std::int64_t> x, std::span<const std::int64_t> q,
                        const AccumulatorSpec &spec);

/// Enumerate every x in Z_N^K. Throws BudgetExceeded when (2^N)^K > budget.
/// OpenMP-parallel over contiguous blocks of the enumeration; ties resolve to
/// the smallest enumeration index, so results match the serial version.
AccumWitness exhaustive_check(std::span<const std::int64_t> q, int act_bits, bool act_signed,
                              const AccumulatorSpec &spec, std::uint64_t budget = enum_budget_from_env());
/// Serial reference for exhaustive_check.
AccumWitness exhaustive_check_serial(std::span<const std::int64_t> q, int act_bits, bool act_signed,
                                     const AccumulatorSpec &spec, std::uint64_t budget = enum_budget_from_env());

/// (2^N)^K, saturating at UINT64_MAX.
std::uint64_t enumeration_size(std::size_t k, int act_bits);

/// True iff for every i: q_i == 0 or sign(s q_i) == sign(w_i), and |s q_i| <= |w_i|.
bool verify_prop2(std::span<const double> w, double s, std::span<const std::int64_t> q);

}  // namespace accq
