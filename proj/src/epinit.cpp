// SPDX-License-Identifier: Apache-2.0
#include "accq/epinit.hpp"

#include "accq/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace accq {

namespace {

double l1(std::span<const double> x) {
  double total = 0.0;
  for (double xi : x) total += std::abs(xi);
  return total;
}

void require_finite(std::span<const double> x) {
  for (double xi : x) {
    if (!std::isfinite(xi)) throw Error(ErrorKind::NonFiniteInput, "weights contain a non-finite value");
  }
}

}  // namespace

ProjectionResult project_l1_ball(std::span<const double> w, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorKind::NonPositiveRadius, "projection radius must be positive and finite");
  }
  require_finite(w);
  ProjectionResult out;
  if (l1(w) <= radius) {
    out.v_star.assign(w.begin(), w.end());
    return out;
  }

  std::vector<double> mags(w.size());
  std::transform(w.begin(), w.end(), mags.begin(), [](double x) { return std::abs(x); });
  std::sort(mags.begin(), mags.end(), std::greater<>());

  // rho = max{ j : mu_j - (sum_{r<=j} mu_r - T) / j > 0 }
  double prefix = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < mags.size(); ++j) {
    prefix += mags[j];
    const double candidate = (prefix - radius) / static_cast<double>(j + 1);
    if (mags[j] - candidate > 0.0) theta = candidate;
  }

  out.active = true;
  out.theta = theta;
  out.v_star.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double shrunk = std::max(std::abs(w[i]) - theta, 0.0);
    out.v_star[i] = std::copysign(shrunk, w[i]);
    if (shrunk == 0.0) out.v_star[i] = 0.0;
  }
  return out;
}

double init_scale(std::span<const double> w, int weight_bits) {
  if (weight_bits < 2 || weight_bits > 64) {
    throw Error(ErrorKind::InvalidBitWidth, "weight bit width must be in [2, 64]");
  }
  require_finite(w);
  double peak = 0.0;
  for (double x : w) peak = std::max(peak, std::abs(x));
  if (peak == 0.0) return kZeroChannelScale;
  return peak / (std::exp2(weight_bits - 1) - 1.0);
}

ChannelWeights ep_init_with_limit(std::span<const double> w_float, int weight_bits, const RationalBound &limit) {
  const double s = init_scale(w_float, weight_bits);
  ChannelWeights ch;
  ch.d = std::log2(s);
  const double radius = s * limit.to_double();
  if (radius > 0.0) {
    ch.v = project_l1_ball(w_float, radius).v_star;
  } else {
    ch.v.assign(w_float.size(), 0.0);
  }
  ch.t = norm_exponent(l1(ch.v));
  return ch;
}

ChannelWeights ep_init(std::span<const double> w_float, const BitWidths &bits, Variant variant) {
  (void)variant;  // A2Q+ channels start from the A2Q projection as well
  bits.validate();
  return ep_init_with_limit(w_float, bits.weight_bits, a2q_limit(bits));
}

ChannelWeights naive_init(std::span<const double> w_float, int weight_bits) {
  const double s = init_scale(w_float, weight_bits);
  ChannelWeights ch;
  ch.v.assign(w_float.begin(), w_float.end());
  ch.t = norm_exponent(l1(w_float));
  ch.d = std::log2(s);
  return ch;
}

double weight_quant_error(std::span<const double> qw, std::span<const double> w_float, bool normalized) {
  if (qw.size() != w_float.size()) throw Error(ErrorKind::LengthMismatch, "qw and w_float differ in length");
  double err = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < qw.size(); ++i) {
    const double diff = qw[i] - w_float[i];
    err += diff * diff;
    ref += w_float[i] * w_float[i];
  }
  err *= 0.5;
  if (!normalized) return err;
  ref *= 0.5;
  if (ref == 0.0) return err == 0.0 ? 0.0 : err / ref;
  return err / ref;
}

}  // namespace accq
