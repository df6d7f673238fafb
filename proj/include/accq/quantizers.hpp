// SPDX-License-Identifier: Apache-2.0
/**
 * @file  quantizers.hpp
 * @brief Per-channel weight quantizers: standard affine, A2Q and A2Q+.
 *
 * A2Q and A2Q+ learn weights through a weight-normalization style
 * reparameterization w = min(g, T) * u, with u the l1-normalized direction of
 * v (zero-centered first for A2Q+), g = 2^t and scale s = 2^d. Scaled weights
 * are rounded toward zero so |s * q_i| <= |w_i|, which keeps the integer
 * l1-norm inside the accumulator budget.
 */
#pragma once

#include "accq/bounds.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace accq {

enum class Variant { Standard, A2Q, A2QPlus };

std::string to_string(Variant v);
/// Accepts "standard", "a2q", "a2q+" / "a2qplus".
Variant parse_variant(const std::string &name);

/// Channels shorter than this cannot be zero-centered usefully (K = 1 forces
/// w = 0) and fall back to A2Q.
inline constexpr std::size_t kMinCenterK = 2;

/// Norm exponent used for a zero l1-norm.
inline constexpr double kZeroNormExponent = -30.0;

/// One output channel in reparameterized form.
struct ChannelWeights {
  std::vector<double> v;
  double t = 0.0;  // g = 2^t
  double d = 0.0;  // s = 2^d

  std::size_t size() const noexcept { return v.size(); }
  double g() const;
  double s() const;
};

/// log2(g), or kZeroNormExponent when g == 0.
double norm_exponent(double g);

struct ActQuantSpec {
  int bits = 8;
  bool is_signed = false;
  double scale = 1.0;
  std::int64_t zero_point = 0;
};

struct QuantResult {
  std::vector<std::int64_t> q;  // integer codes
  std::vector<double> qw;       // s * q
  std::vector<double> w;        // constrained real weights before rounding
  double s = 1.0;
  BigInt l1_codes = 0;          // ||q||_1, exact
  double l1_scaled = 0.0;       // ||w / s||_1
  double weight_sum = 0.0;      // sum_i w_i
  RationalBound bound;          // integer-domain budget of the variant actually applied
  Variant variant = Variant::A2Q;
  bool bound_satisfied = true;  // certificate for the applied variant
  bool fell_back = false;       // A2Q+ request served by A2Q because K < kMinCenterK
  bool degenerate = false;      // zero direction: all-zero channel

  double l1_codes_double() const { return l1_codes.convert_to<double>(); }
};

/// Round half to even. Centralized so the tie rule can be swapped.
double round_half_even(double x);

/// Elementwise truncation toward zero.
std::vector<std::int64_t> round_to_zero(std::span<const double> x);

/// clip(rtz(w / s); n, p) with M-bit signed codes.
std::vector<std::int64_t> round_clip_codes(std::span<const double> w, double s, int weight_bits);

/// Affine quantizer: s * (clip(round(w / s) + z; n, p) - z).
QuantResult quantize_standard(std::span<const double> w, const ActQuantSpec &spec);

QuantResult quantize_a2q(const ChannelWeights &ch, const BitWidths &bits);
QuantResult quantize_a2q_plus(const ChannelWeights &ch, const BitWidths &bits);

/// Constrained quantizer with an explicit integer-domain l1 budget. The budget
/// is applied as T = s * limit to clip g.
QuantResult quantize_with_limit(const ChannelWeights &ch, const RationalBound &limit,
                                int weight_bits, bool zero_center);

/// Dispatch on variant. Standard here means weight-normalized and unclipped
/// with round-half-even codes.
QuantResult quantize(const ChannelWeights &ch, Variant variant, const BitWidths &bits);

/// Integer budget of a variant (Standard has none and throws).
RationalBound variant_limit(Variant variant, const BitWidths &bits);

/// Everything the STE backward pass needs from one channel's forward pass.
struct BackwardTape {
  Variant variant = Variant::A2Q;
  bool identity = false;  // rounding and clipping bypassed
  bool centered = false;
  bool degenerate = false;
  bool gate_open = true;  // min(g, T) selected g
  double g = 0.0;
  double s = 1.0;
  double limit = 0.0;     // integer budget as double, T = s * limit
  double norm = 0.0;      // ||c||_1 of the (centered) direction
  double gamma = 0.0;     // min(g, T) / norm
  std::vector<double> c;  // (centered) direction before normalization
  std::vector<double> residual;  // d(qw_i)/ds: q_i - w_i / s, or q_i where clipped (0 in identity mode)
};

struct ChannelGrad {
  std::vector<double> v;
  double t = 0.0;
  double d = 0.0;
};

struct ForwardOutput {
  QuantResult result;
  BackwardTape tape;
};

/// Forward pass with a tape. With identity = true the output is the smooth
/// reparameterized w (qw = w), used for gradient checking.
ForwardOutput forward_weights(const ChannelWeights &ch, Variant variant, const BitWidths &bits,
                              bool identity = false);

/// Straight-through backward pass: d(qw_i)/d(w_i) = 1, clip included.
ChannelGrad backward_weights(const BackwardTape &tape, std::span<const double> grad_qw);

/// Quantize every channel of a layer. OpenMP-parallel over channels.
std::vector<QuantResult> quantize_layer(std::span<const ChannelWeights> channels, Variant variant,
                                        const BitWidths &bits);
/// Serial reference for quantize_layer.
std::vector<QuantResult> quantize_layer_serial(std::span<const ChannelWeights> channels,
                                               Variant variant, const BitWidths &bits);

}  // namespace accq
