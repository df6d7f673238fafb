// SPDX-License-Identifier: Apache-2.0
/**
 * @file  verify_props.hpp
 * @brief Numerical re-derivations of the overflow-avoidance proofs: zero-sum
 *        identities, the extremal-vector chains, the round-to-zero lemma, and
 *        exhaustive strictness witnesses for the zero-centered bound.
 */
#pragma once

#include "accq/bounds.hpp"
#include "accq/intsim.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace accq {

/// Integer vector with sum 0. alpha is the sum of the positive entries and
/// beta the sum of the negative ones, so alpha = -beta = ||q||_1 / 2.
struct ZeroSumVector {
  std::vector<std::int64_t> q;
  BigInt alpha = 0;
  BigInt beta = 0;

  static ZeroSumVector from(std::vector<std::int64_t> q);
};

/// Random zero-sum vector with ||q||_1 <= l1_budget. K = 1 admits only [0]
/// and throws Infeasible for a positive budget.
ZeroSumVector gen_zero_sum(std::size_t k, std::int64_t l1_budget, std::uint64_t seed);

struct Prop1Report {
  bool alpha_identity = false;   // alpha = -beta = ||q||_1 / 2
  bool max_identity = false;     // mu^T q = alpha (d - c)
  bool min_identity = false;     // -nu^T q = alpha (d - c)
  bool span_identity = false;    // (mu - nu)^T q = (d - c) ||q||_1
  bool sign_identity = false;    // mu_i - nu_i = (d - c) sign(q_i) where q_i != 0
  bool within_budget = false;    // ||q||_1 <= (2^P - 2) / (2^N - 1)
  bool upper_ok = false;         // mu^T q <= 2^(P-1) - 1
  bool lower_ok = false;         // -nu^T q <= 2^(P-1)
  bool span_ok = false;          // (mu - nu)^T q <= 2^P - 1
  bool budgets_ordered = false;  // (2^P-2)/(2^N-1) <= (2^P-1)/(2^N-1) <= 2^P/(2^N-1)

  bool identities_hold() const {
    return alpha_identity && max_identity && min_identity && span_identity && sign_identity;
  }
  /// within_budget implies all three accumulator conditions.
  bool implication_holds() const { return !within_budget || (upper_ok && lower_ok && span_ok); }
};

Prop1Report check_prop1_derivations(const ZeroSumVector &q, int act_bits, bool act_signed, int acc_bits);

/// x^T q <= x^T w. Throws HypothesisViolation unless, for every nonzero x_i,
/// sign(x_i) = sign(w_i) and sign(q_i) is 0 or sign(w_i), and |q_i| <= |w_i|.
bool check_lemma1(std::span<const double> x, std::span<const double> w, std::span<const double> q);

/// Calls visit(q) for every integer vector of length k with ||q||_1 == l1,
/// in a fixed order, until visit returns true. Returns whether it stopped.
bool for_each_with_l1(std::size_t k, std::int64_t l1, const std::function<bool(std::span<const std::int64_t>)> &visit);

struct StrictnessWitnesses {
  int acc_bits = 0;
  int act_bits = 0;
  bool act_signed = false;
  RationalBound bound;  // (2^P - 2) / (2^N - 1)
  std::int64_t budget_floor = 0;
  /// zero-sum q with ||q||_1 = budget_floor and no overflow
  std::optional<std::vector<std::int64_t>> at_budget;
  AccumWitness at_budget_witness;
  /// q with ||q||_1 = budget_floor + 1 that overflows (|sum q| <= 1 preferred)
  std::optional<std::vector<std::int64_t>> over_budget;
  /// zero-sum q with ||q||_1 = budget_floor + 2 that overflows
  std::optional<std::vector<std::int64_t>> zero_sum_over_budget;
  /// q with sum != 0 and ||q||_1 <= budget_floor that overflows;
  /// not searched when budget_floor == 0
  std::optional<std::vector<std::int64_t>> non_centered;
  bool non_centered_searched = false;
};

/// Exhaustive witness search over vectors of length <= max_k (non-centered
/// search stops at min(max_k, 3)). Overflow is decided by exhaustive_check.
StrictnessWitnesses find_strictness_witnesses(int acc_bits, int act_bits, bool act_signed, std::size_t max_k = 4);

struct PropCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick randomized + exhaustive smoke run of the proof checks.
std::vector<PropCheck> run_property_suite(std::uint64_t seed, int trials);

}  // namespace accq
