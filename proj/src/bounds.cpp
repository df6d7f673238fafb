// SPDX-License-Identifier: Apache-2.0
#include "accq/bounds.hpp"

#include "accq/error.hpp"

#include <cmath>
#include <limits>

namespace accq {

namespace {

void check_width(int bits, int min_bits, const char *name) {
  if (bits < min_bits || bits > 64) {
    throw Error(ErrorKind::InvalidBitWidth,
                std::string(name) + "=" + std::to_string(bits) + " outside [" +
                    std::to_string(min_bits) + ", 64]");
  }
}

BigInt pow2(int e) { return BigInt(1) << e; }

}  // namespace

void BitWidths::validate() const {
  check_width(weight_bits, 2, "M");
  check_width(act_bits, 1, "N");
  check_width(acc_bits, 2, "P");
}

IntRange int_range(int bits, bool is_signed) {
  if (bits < 1 || bits > 64 || (!is_signed && bits > 63)) {
    throw Error(ErrorKind::InvalidBitWidth,
                "range of " + std::to_string(bits) + "-bit " +
                    (is_signed ? "signed" : "unsigned") + " value not representable");
  }
  if (is_signed) {
    if (bits == 64) {
      return {std::numeric_limits<std::int64_t>::min(), std::numeric_limits<std::int64_t>::max()};
    }
    const std::int64_t half = std::int64_t{1} << (bits - 1);
    return {-half, half - 1};
  }
  return {0, (std::int64_t{1} << bits) - 1};
}

RationalBound::RationalBound(Rational value) : value_(std::move(value)) {}

RationalBound::RationalBound(const BigInt &num, const BigInt &den) {
  if (den <= 0) {
    throw std::invalid_argument("RationalBound denominator must be positive");
  }
  value_ = Rational(num, den);
}

BigInt RationalBound::numerator() const { return boost::multiprecision::numerator(value_); }
BigInt RationalBound::denominator() const { return boost::multiprecision::denominator(value_); }

double RationalBound::to_double() const { return value_.convert_to<double>(); }

std::string RationalBound::to_string() const {
  const BigInt den = denominator();
  if (den == 1) return numerator().str();
  return numerator().str() + "/" + den.str();
}

BigInt RationalBound::floor() const {
  const BigInt num = numerator();
  const BigInt den = denominator();
  BigInt q = num / den;  // truncates toward zero
  if (num < 0 && q * den != num) q -= 1;
  return q;
}

Rational exact_rational(double x) {
  if (!std::isfinite(x)) {
    throw Error(ErrorKind::NonFiniteInput, "cannot convert non-finite double to rational");
  }
  if (x == 0.0) return Rational(0);
  int exp = 0;
  const double mant = std::frexp(x, &exp);  // x = mant * 2^exp, 0.5 <= |mant| < 1
  const auto scaled = static_cast<std::int64_t>(std::ldexp(mant, 53));
  exp -= 53;
  BigInt num(scaled);
  if (exp >= 0) return Rational(num << exp);
  return Rational(num, pow2(-exp));
}

RationalBound a2q_limit(const BitWidths &bits) {
  bits.validate();
  const int shift = bits.act_bits - (bits.act_signed ? 1 : 0);
  return RationalBound(pow2(bits.acc_bits - 1) - 1, pow2(shift));
}

RationalBound a2q_plus_limit(const BitWidths &bits) {
  bits.validate();
  return RationalBound(pow2(bits.acc_bits) - 2, pow2(bits.act_bits) - 1);
}

RationalBound bound_ratio(int act_bits, bool act_signed) {
  check_width(act_bits, 1, "N");
  return RationalBound(pow2(act_bits + 1 - (act_signed ? 1 : 0)), pow2(act_bits) - 1);
}

int min_acc_width(std::int64_t k_star, const BitWidths &bits) {
  if (k_star < 1) {
    throw Error(ErrorKind::NonPositiveK, "K* must be >= 1, got " + std::to_string(k_star));
  }
  check_width(bits.weight_bits, 2, "M");
  check_width(bits.act_bits, 1, "N");
  const double alpha = std::log2(static_cast<double>(k_star)) + bits.act_bits +
                       bits.weight_bits - 1 - (bits.act_signed ? 1 : 0);
  const double phi = std::log2(1.0 + std::exp2(-alpha));
  const double x = alpha + phi + 1.0;
  const double nearest = std::round(x);
  if (std::abs(x - nearest) < 1e-9) return static_cast<int>(nearest) + 1;
  return static_cast<int>(std::ceil(x));
}

BigInt l1_norm(std::span<const std::int64_t> q) {
  BigInt total = 0;
  for (std::int64_t v : q) {
    total += v < 0 ? -BigInt(v) : BigInt(v);
  }
  return total;
}

}  // namespace accq
