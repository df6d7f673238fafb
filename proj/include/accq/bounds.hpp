// SPDX-License-Identifier: Apache-2.0
/**
 * @file  bounds.hpp
 * @brief Closed-form accumulator bounds on the l1-norm of integer weights.
 *
 * Every bound that gates overflow safety is returned as an exact rational so
 * that comparisons against integer l1-norms never go through floating point.
 */
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <span>
#include <string>

namespace accq {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Bit widths of one quantized dot product: M-bit weights, N-bit inputs,
/// P-bit two's-complement accumulator.
struct BitWidths {
  int weight_bits = 8;  // M
  int act_bits = 8;     // N
  int acc_bits = 32;    // P
  bool act_signed = false;

  /// Throws InvalidBitWidth unless all widths are in [1, 64], M >= 2, P >= 2.
  void validate() const;
};

/// Two's-complement or unsigned integer range [lo, hi] of a b-bit value.
struct IntRange {
  std::int64_t lo;
  std::int64_t hi;
};

IntRange int_range(int bits, bool is_signed);

/// Exact non-negative rational bound, always in lowest terms.
class RationalBound {
 public:
  RationalBound() = default;
  explicit RationalBound(Rational value);
  RationalBound(const BigInt &num, const BigInt &den);

  const Rational &value() const noexcept { return value_; }
  BigInt numerator() const;
  BigInt denominator() const;
  double to_double() const;
  /// "num/den", or just "num" when the denominator is 1.
  std::string to_string() const;

  /// Exact check that an integer l1-norm fits the bound.
  bool admits(const BigInt &l1) const { return Rational(l1) <= value_; }
  /// Largest integer not exceeding the bound.
  BigInt floor() const;

  friend bool operator==(const RationalBound &, const RationalBound &) = default;
  friend auto operator<=>(const RationalBound &a, const RationalBound &b) {
    return a.value_ < b.value_ ? std::strong_ordering::less
           : b.value_ < a.value_ ? std::strong_ordering::greater
                                 : std::strong_ordering::equal;
  }

 private:
  Rational value_{0};
};

/// Exact rational value of a finite double (every double is dyadic).
Rational exact_rational(double x);

/// (2^(P-1) - 1) / 2^(N - signed): the A2Q integer l1 budget.
RationalBound a2q_limit(const BitWidths &bits);

/// (2^P - 2) / (2^N - 1): the zero-centered (A2Q+) integer l1 budget.
RationalBound a2q_plus_limit(const BitWidths &bits);

/// 2^(N + 1 - signed) / (2^N - 1) = a2q_plus_limit / a2q_limit for any P.
RationalBound bound_ratio(int act_bits, bool act_signed);

/// Conservative accumulator width P* = ceil(alpha + log2(1 + 2^-alpha) + 1),
/// alpha = log2(K*) + N + M - 1 - signed. Values within 1e-9 of an integer
/// are bumped to the next integer.
int min_acc_width(std::int64_t k_star, const BitWidths &bits);

/// Sum of |q_i| as an exact integer.
BigInt l1_norm(std::span<const std::int64_t> q);

}  // namespace accq
