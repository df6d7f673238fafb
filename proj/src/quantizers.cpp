// SPDX-License-Identifier: Apache-2.0
#include "accq/quantizers.hpp"

#include "accq/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace accq {

namespace {

constexpr double kLn2 = std::numbers::ln2;

// Relative slack allowed on ||w/s||_1 per element for floating normalization.
constexpr double kCenterTolerance = 1e-12;

enum class Rounding { TowardZero, HalfEven };

void require_finite(std::span<const double> x, const char *what) {
  for (double xi : x) {
    if (!std::isfinite(xi)) throw Error(ErrorKind::NonFiniteInput, std::string(what) + " has a non-finite entry");
  }
}

std::int64_t clamp_to_code(double x, const IntRange &range) {
  // Clamp in the double domain first; the rounded value may not fit int64.
  if (x <= static_cast<double>(range.lo)) return range.lo;
  if (x >= static_cast<double>(range.hi)) return range.hi;
  return static_cast<std::int64_t>(x);
}

// trunc(w / s), stepped toward zero if the rounded quotient made |s * r| exceed |w|.
// fma gives the exact sign of s * r - w.
double truncate_dominated(double w, double s) {
  double r = std::trunc(w / s);
  if (r > 0.0 && std::fma(s, r, -w) > 0.0) r -= 1.0;
  if (r < 0.0 && std::fma(s, r, -w) < 0.0) r += 1.0;
  return r;
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

struct Constraint {
  RationalBound limit;
  double limit_value;
};

ForwardOutput forward_impl(const ChannelWeights &ch, Variant applied, const std::optional<Constraint> &constraint,
                           int weight_bits, bool center, bool identity, Rounding rounding) {
  const std::size_t k = ch.size();
  if (k == 0) throw Error(ErrorKind::LengthMismatch, "channel has no weights");
  require_finite(ch.v, "v");
  if (!std::isfinite(ch.t) || !std::isfinite(ch.d)) {
    throw Error(ErrorKind::NonFiniteInput, "t or d is not finite");
  }
  const IntRange codes = int_range(weight_bits, true);

  ForwardOutput out;
  QuantResult &res = out.result;
  BackwardTape &tape = out.tape;
  res.variant = applied;
  res.s = ch.s();
  res.q.assign(k, 0);
  res.qw.assign(k, 0.0);
  res.w.assign(k, 0.0);
  if (constraint) res.bound = constraint->limit;

  tape.variant = applied;
  tape.identity = identity;
  tape.centered = center;
  tape.g = ch.g();
  tape.s = res.s;
  tape.limit = constraint ? constraint->limit_value : std::numeric_limits<double>::infinity();
  tape.c = ch.v;
  if (center) {
    double mean = 0.0;
    for (double x : ch.v) mean += x;
    mean /= static_cast<double>(k);
    for (double &x : tape.c) x -= mean;
    // Second pass: when v is nearly constant the rounding of the mean is
    // large next to the centered entries.
    double drift = 0.0;
    for (double x : tape.c) drift += x;
    drift /= static_cast<double>(k);
    for (double &x : tape.c) x -= drift;
  }
  double norm = 0.0;
  for (double x : tape.c) norm += std::abs(x);
  tape.norm = norm;
  tape.residual.assign(k, 0.0);

  if (norm == 0.0) {
    res.degenerate = true;
    tape.degenerate = true;
    return out;
  }

  const double cap = res.s * tape.limit;
  tape.gate_open = tape.g <= cap;
  const double magnitude = tape.gate_open ? tape.g : cap;
  tape.gamma = magnitude / norm;

  double l1_scaled = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double wi = tape.gamma * tape.c[i];
    const double scaled = wi / res.s;
    const double rounded = rounding == Rounding::TowardZero ? truncate_dominated(wi, res.s) : round_half_even(scaled);
    res.w[i] = wi;
    res.q[i] = clamp_to_code(rounded, codes);
    if (identity) {
      res.qw[i] = wi;
    } else {
      res.qw[i] = res.s * static_cast<double>(res.q[i]);
      // d(s * clip(x)) / ds is q where the code clipped, q - w/s elsewhere
      const bool clipped = static_cast<double>(res.q[i]) != rounded;
      tape.residual[i] = clipped ? static_cast<double>(res.q[i]) : static_cast<double>(res.q[i]) - scaled;
    }
    l1_scaled += std::abs(scaled);
    sum += wi;
  }
  res.l1_scaled = l1_scaled;
  res.weight_sum = sum;
  res.l1_codes = l1_norm(res.q);
  if (constraint) {
    bool ok = constraint->limit.admits(res.l1_codes);
    if (center) {
      ok = ok && l1_scaled <= constraint->limit_value * (1.0 + static_cast<double>(k) * kCenterTolerance);
    }
    res.bound_satisfied = ok;
  }
  return out;
}

Constraint make_constraint(const RationalBound &limit) { return {limit, limit.to_double()}; }

ForwardOutput forward_dispatch(const ChannelWeights &ch, Variant variant, const BitWidths &bits, bool identity) {
  bits.validate();
  switch (variant) {
    case Variant::Standard:
      return forward_impl(ch, Variant::Standard, std::nullopt, bits.weight_bits, false, identity,
                          Rounding::HalfEven);
    case Variant::A2Q:
      return forward_impl(ch, Variant::A2Q, make_constraint(a2q_limit(bits)), bits.weight_bits, false, identity,
                          Rounding::TowardZero);
    case Variant::A2QPlus:
      if (ch.size() < kMinCenterK) {
        auto out = forward_impl(ch, Variant::A2Q, make_constraint(a2q_limit(bits)), bits.weight_bits, false,
                                identity, Rounding::TowardZero);
        out.result.fell_back = true;
        return out;
      }
      return forward_impl(ch, Variant::A2QPlus, make_constraint(a2q_plus_limit(bits)), bits.weight_bits, true,
                          identity, Rounding::TowardZero);
  }
  throw std::invalid_argument("unknown variant");
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Standard: return "standard";
    case Variant::A2Q: return "a2q";
    case Variant::A2QPlus: return "a2q+";
  }
  return "?";
}

Variant parse_variant(const std::string &name) {
  if (name == "standard") return Variant::Standard;
  if (name == "a2q") return Variant::A2Q;
  if (name == "a2q+" || name == "a2qplus" || name == "a2q_plus") return Variant::A2QPlus;
  throw Error(ErrorKind::ParseError, "unknown variant '" + name + "'");
}

double ChannelWeights::g() const { return std::exp2(t); }
double ChannelWeights::s() const { return std::exp2(d); }

double norm_exponent(double g) { return g > 0.0 ? std::log2(g) : kZeroNormExponent; }

double round_half_even(double x) { return std::nearbyint(x); }

std::vector<std::int64_t> round_to_zero(std::span<const double> x) {
  require_finite(x, "input");
  std::vector<std::int64_t> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = std::trunc(x[i]);
    if (std::abs(r) >= 0x1p63) throw Error(ErrorKind::NonFiniteInput, "value does not fit a 64-bit code");
    out[i] = static_cast<std::int64_t>(r);
  }
  return out;
}

std::vector<std::int64_t> round_clip_codes(std::span<const double> w, double s, int weight_bits) {
  require_finite(w, "w");
  const IntRange codes = int_range(weight_bits, true);
  std::vector<std::int64_t> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = clamp_to_code(truncate_dominated(w[i], s), codes);
  return out;
}

QuantResult quantize_standard(std::span<const double> w, const ActQuantSpec &spec) {
  if (!(spec.scale > 0.0) || !std::isfinite(spec.scale)) {
    throw Error(ErrorKind::NonFiniteInput, "quantizer scale must be positive and finite");
  }
  require_finite(w, "w");
  const IntRange range = int_range(spec.bits, spec.is_signed);
  if (spec.zero_point < range.lo || spec.zero_point > range.hi) {
    throw Error(ErrorKind::InvalidBitWidth, "zero point outside the representable range");
  }
  QuantResult res;
  res.variant = Variant::Standard;
  res.s = spec.scale;
  res.w.assign(w.begin(), w.end());
  res.q.resize(w.size());
  res.qw.resize(w.size());
  double l1_scaled = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double shifted = round_half_even(w[i] / spec.scale) + static_cast<double>(spec.zero_point);
    const std::int64_t clipped = clamp_to_code(shifted, range);
    res.q[i] = clipped - spec.zero_point;
    res.qw[i] = spec.scale * static_cast<double>(res.q[i]);
    l1_scaled += std::abs(w[i] / spec.scale);
    sum += w[i];
  }
  res.l1_scaled = l1_scaled;
  res.weight_sum = sum;
  res.l1_codes = l1_norm(res.q);
  return res;
}

QuantResult quantize_a2q(const ChannelWeights &ch, const BitWidths &bits) {
  return forward_dispatch(ch, Variant::A2Q, bits, false).result;
}

QuantResult quantize_a2q_plus(const ChannelWeights &ch, const BitWidths &bits) {
  return forward_dispatch(ch, Variant::A2QPlus, bits, false).result;
}

QuantResult quantize_with_limit(const ChannelWeights &ch, const RationalBound &limit, int weight_bits,
                                bool zero_center) {
  return forward_impl(ch, zero_center ? Variant::A2QPlus : Variant::A2Q, make_constraint(limit), weight_bits,
                      zero_center, false, Rounding::TowardZero)
      .result;
}

QuantResult quantize(const ChannelWeights &ch, Variant variant, const BitWidths &bits) {
  return forward_dispatch(ch, variant, bits, false).result;
}

RationalBound variant_limit(Variant variant, const BitWidths &bits) {
  switch (variant) {
    case Variant::A2Q: return a2q_limit(bits);
    case Variant::A2QPlus: return a2q_plus_limit(bits);
    case Variant::Standard: break;
  }
  throw std::invalid_argument("the standard quantizer has no l1 budget");
}

ForwardOutput forward_weights(const ChannelWeights &ch, Variant variant, const BitWidths &bits, bool identity) {
  return forward_dispatch(ch, variant, bits, identity);
}

ChannelGrad backward_weights(const BackwardTape &tape, std::span<const double> grad_qw) {
  const std::size_t k = tape.c.size();
  if (grad_qw.size() != k) throw Error(ErrorKind::LengthMismatch, "gradient length differs from channel size");
  ChannelGrad grad;
  grad.v.assign(k, 0.0);
  if (tape.degenerate) return grad;

  // STE: d(qw_i)/d(w_i) = 1 and d(qw_i)/ds = q_i - w_i / s.
  double grad_s = 0.0;
  double dot_gc = 0.0;  // sum_i G_i c_i
  for (std::size_t i = 0; i < k; ++i) {
    grad_s += grad_qw[i] * tape.residual[i];
    dot_gc += grad_qw[i] * tape.c[i];
  }
  const double grad_magnitude = dot_gc / tape.norm;

  // w = m * c / ||c||_1
  const double coef = tape.gamma;
  const double proj = dot_gc / tape.norm;
  for (std::size_t j = 0; j < k; ++j) {
    grad.v[j] = coef * (grad_qw[j] - sign_of(tape.c[j]) * proj);
  }
  if (tape.centered) {
    double mean = 0.0;
    for (double x : grad.v) mean += x;
    mean /= static_cast<double>(k);
    for (double &x : grad.v) x -= mean;
  }

  double grad_g = 0.0;
  if (tape.gate_open) {
    grad_g = grad_magnitude;
  } else {
    grad_s += grad_magnitude * tape.limit;
  }
  grad.t = grad_g * tape.g * kLn2;
  grad.d = grad_s * tape.s * kLn2;
  return grad;
}

std::vector<QuantResult> quantize_layer(std::span<const ChannelWeights> channels, Variant variant,
                                        const BitWidths &bits) {
  bits.validate();
  std::vector<QuantResult> out(channels.size());
  const auto n = static_cast<std::int64_t>(channels.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = quantize(channels[static_cast<std::size_t>(i)], variant, bits);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<QuantResult> quantize_layer_serial(std::span<const ChannelWeights> channels, Variant variant,
                                               const BitWidths &bits) {
  std::vector<QuantResult> out;
  out.reserve(channels.size());
  for (const auto &ch : channels) out.push_back(quantize(ch, variant, bits));
  return out;
}

}  // namespace accq
