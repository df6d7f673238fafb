// SPDX-License-Identifier: Apache-2.0
/**
 * @file  epinit.hpp
 * @brief Euclidean-projection initialization of reparameterized weights from
 *        a float checkpoint, plus scale initialization and error metrics.
 */
#pragma once

#include "accq/bounds.hpp"
#include "accq/quantizers.hpp"

#include <span>
#include <vector>

namespace accq {

/// Scale returned for an all-zero channel.
inline constexpr double kZeroChannelScale = 0x1p-30;

struct ProjectionResult {
  std::vector<double> v_star;
  double theta = 0.0;
  bool active = false;  // false when the input already lies in the ball
};

/// Euclidean projection onto {v : ||v||_1 <= radius} by soft-thresholding.
/// theta comes from the sort-based threshold search.
ProjectionResult project_l1_ball(std::span<const double> w, double radius);

/// max_i |w_i| / (2^(M-1) - 1); kZeroChannelScale for an all-zero channel.
double init_scale(std::span<const double> w, int weight_bits);

/// Initialize (v, t, d) so that w starts at the projection of w_float onto the
/// A2Q ball of radius s * a2q_limit. A2Q+ uses the same A2Q radius.
ChannelWeights ep_init(std::span<const double> w_float, const BitWidths &bits, Variant variant);

/// Same as ep_init but with an explicit integer-domain budget.
ChannelWeights ep_init_with_limit(std::span<const double> w_float, int weight_bits, const RationalBound &limit);

/// v = w_float, g = ||w_float||_1, s from init_scale.
ChannelWeights naive_init(std::span<const double> w_float, int weight_bits);

/// 0.5 * ||qw - w_float||^2, optionally divided by 0.5 * ||w_float||^2 (0/0 = 0).
double weight_quant_error(std::span<const double> qw, std::span<const double> w_float, bool normalized);

}  // namespace accq
