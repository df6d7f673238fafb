// SPDX-License-Identifier: Apache-2.0
/**
 * @file  qat.hpp
 * @brief Desk-scale quantization-aware training of a small MLP with
 *        accumulator-constrained weight quantizers.
 *
 * The task is teacher-student regression: a fixed random ReLU teacher maps
 * half-normal inputs to a unit-variance target plus Gaussian noise. A float
 * student is trained first, converted with EP-init, then fine-tuned with A2Q
 * or A2Q+ weight quantizers on every hidden layer. The last layer keeps 8-bit
 * weights and inputs with an unconstrained accumulator. Training is plain SGD
 * and single-threaded, so a config (including its seed) fixes the result bit
 * for bit.
 */
#pragma once

#include "accq/bounds.hpp"
#include "accq/quantizers.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace accq {

/// Deterministic generator; distributions are implemented here rather than
/// taken from <random> so sequences do not depend on the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct DatasetSpec {
  int input_dim = 128;
  std::vector<int> teacher_hidden = {32};
  double noise_sigma = 0.7;  // relative to the unit-variance clean target
  int train_samples = 8192;
  int test_samples = 8192;
  /// When positive, inputs are snapped to the grid {0, 1, ..., levels - 1} * input_step
  /// (pixel-like integer features).
  int input_levels = 16;
  double input_step = 0.25;
};

struct Dataset {
  int dim = 0;
  std::vector<double> x;  // row-major, size() * dim
  std::vector<double> y;
  std::size_t size() const noexcept { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * dim, static_cast<std::size_t>(dim)}; }
};

struct TeacherStudentData {
  Dataset train;
  Dataset test;
};

TeacherStudentData make_teacher_student(const DatasetSpec &spec, std::uint64_t seed);

struct TrainConfig {
  Variant variant = Variant::A2QPlus;
  BitWidths bits{4, 4, 16, false};  // hidden layers; act_signed is forced false
  double lr = 0.02;  // float pretraining
  /// QAT phase; the float baseline continues at this rate too
  double qat_lr = 0.001;
  /// QAT step size for the log-domain parameters t, d and activation log-scales
  double scale_lr = 0.001;
  double weight_decay = 1e-5;
  double lambda_reg = 1e-3;
  int pretrain_epochs = 40;
  int epochs = 30;
  int batch_size = 32;
  std::uint64_t seed = 0;
  DatasetSpec data;
  std::vector<int> hidden_widths = {16, 16};
};

/// Bit widths of the fixed last layer.
inline constexpr int kEdgeLayerBits = 8;

/// One linear layer: per-output-channel reparameterized weights, float
/// biases applied after the accumulator, and a per-tensor unsigned input
/// quantizer with scale 2^act_log_scale.
struct QuantLayer {
  std::vector<ChannelWeights> channels;
  std::vector<double> bias;
  Variant variant = Variant::A2Q;
  BitWidths bits;
  double act_log_scale = 0.0;
  bool constrained = true;

  std::size_t fan_in() const { return channels.empty() ? 0 : channels.front().size(); }
  ActQuantSpec input_spec() const;
};

struct ToyNetwork {
  std::vector<QuantLayer> layers;
  std::vector<int> topology;  // input dim, hidden widths..., output
};

/// Plain float MLP used for pretraining and as the baseline oracle.
struct FloatNetwork {
  std::vector<std::vector<std::vector<double>>> weights;  // [layer][out][in]
  std::vector<std::vector<double>> biases;
  std::vector<int> topology;
};

FloatNetwork init_float_network(const std::vector<int> &topology, Rng &rng);
double float_mse(const FloatNetwork &net, const Dataset &data);
/// One pass of minibatch SGD on the float network; returns mean training MSE.
double train_float_epoch(FloatNetwork &net, const Dataset &data, double lr, double weight_decay, int batch_size,
                         Rng &rng);

/// EP-init every hidden channel from the float network, initialize activation
/// scales from the calibration data, and set up the 8-bit last layer.
ToyNetwork build_quantized_network(const FloatNetwork &net, const TrainConfig &config, const Dataset &calibration);

/// max{g - T_eff, 0} with T_eff = s * (variant budget).
double reg_penalty(const ChannelWeights &ch, const BitWidths &bits, Variant variant);

struct NetworkGrad {
  std::vector<std::vector<ChannelGrad>> channels;
  std::vector<std::vector<double>> bias;
  std::vector<double> act_log_scale;
  std::int64_t bound_violations = 0;  // hidden channels whose certificate failed
};

struct LossOptions {
  bool identity = false;  // bypass every quantizer (gradient checking)
  double lambda_reg = 1e-3;
};

/// Total loss (mean squared error + lambda * sum of penalties) over the given
/// rows and, when grad is non-null, its gradient under the STE.
double network_loss(const ToyNetwork &net, const Dataset &data, std::span<const std::size_t> rows,
                    const LossOptions &options, NetworkGrad *grad);

/// Test MSE with quantizers active.
double evaluate_mse(const ToyNetwork &net, const Dataset &data);

/// Quantize every hidden (constrained) channel.
std::vector<std::vector<QuantResult>> quantize_hidden(const ToyNetwork &net);

/// Fraction of zero integer codes over all hidden channels.
double measure_sparsity(const ToyNetwork &net);
double measure_sparsity(std::span<const QuantResult> channels);

struct CdfPoint {
  int acc_bits;
  double fraction;
};

/// Fraction of channels with ||w / s||_1 <= a2q_limit at each candidate P,
/// with s from init_scale.
std::vector<CdfPoint> channel_cdf(const std::vector<std::vector<double>> &channels, const BitWidths &bits,
                                  std::span<const int> acc_bits);

struct SweepRecord {
  Variant variant = Variant::A2QPlus;
  int weight_bits = 0;
  int act_bits = 0;
  int acc_bits = 0;
  std::uint64_t seed = 0;
  double final_loss = 0.0;
  double sparsity = 0.0;
  Rational min_slack = 0;  // tightest channel: budget - ||q||_1
  // diagnostics, not part of the CSV row
  double float_loss = 0.0;
  bool overflow_free = true;
  std::int64_t step_violations = 0;
  int exhaustive_checked = 0;
};

struct TrainResult {
  SweepRecord record;
  FloatNetwork float_net;
  ToyNetwork net;
};

/// Full run: float pretraining, EP-init, QAT, and the overflow certificate.
TrainResult train_full(const TrainConfig &config);
SweepRecord train(const TrainConfig &config);

}  // namespace accq
