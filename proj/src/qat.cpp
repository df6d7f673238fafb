// SPDX-License-Identifier: Apache-2.0
#include "accq/qat.hpp"

#include "accq/epinit.hpp"
#include "accq/error.hpp"
#include "accq/intsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace accq {

namespace {

constexpr double kLn2 = std::numbers::ln2;

std::vector<int> student_topology(const TrainConfig &config) {
  std::vector<int> topo{config.data.input_dim};
  topo.insert(topo.end(), config.hidden_widths.begin(), config.hidden_widths.end());
  topo.push_back(1);
  return topo;
}

void shuffle(std::vector<std::size_t> &idx, Rng &rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(i - 1)));
    std::swap(idx[i - 1], idx[j]);
  }
}

// Forward pass of the float teacher/student MLP; keeps pre-activations.
double float_forward(const FloatNetwork &net, std::span<const double> x, std::vector<std::vector<double>> *acts,
                     std::vector<std::vector<double>> *pre) {
  std::vector<double> a(x.begin(), x.end());
  const std::size_t layers = net.weights.size();
  if (acts) acts->assign(1, a);
  if (pre) pre->clear();
  for (std::size_t l = 0; l < layers; ++l) {
    const auto &w = net.weights[l];
    std::vector<double> z(w.size());
    for (std::size_t o = 0; o < w.size(); ++o) {
      double sum = net.biases[l][o];
      for (std::size_t i = 0; i < a.size(); ++i) sum += w[o][i] * a[i];
      z[o] = sum;
    }
    if (pre) pre->push_back(z);
    if (l + 1 < layers) {
      for (double &v : z) v = std::max(v, 0.0);
    }
    a = std::move(z);
    if (acts && l + 1 < layers) acts->push_back(a);
  }
  return a.front();
}

// Per-tensor activation quantizer with clipped STE.
struct ActQuantOut {
  double value;
  double grad_input;  // dy/da
  double grad_scale;  // dy/ds_a
};

ActQuantOut quantize_activation(double a, double scale, const IntRange &range, bool identity) {
  if (identity) return {a, 1.0, 0.0};
  const double x = a / scale;
  const double r = round_half_even(x);
  if (r < static_cast<double>(range.lo)) return {scale * static_cast<double>(range.lo), 0.0, static_cast<double>(range.lo)};
  if (r > static_cast<double>(range.hi)) return {scale * static_cast<double>(range.hi), 0.0, static_cast<double>(range.hi)};
  return {scale * r, 1.0, r - x};
}

double calibrate_scale(std::vector<double> values, int bits) {
  const double levels = std::exp2(bits) - 1.0;
  double peak = 0.0;
  for (double v : values) peak = std::max(peak, v);
  if (peak <= 0.0) return 1.0;
  const IntRange range = int_range(bits, false);
  double best_scale = peak / levels;
  double best_err = -1.0;
  for (int step = 6; step <= 20; ++step) {
    const double scale = peak * step / 20.0 / levels;
    double err = 0.0;
    for (double v : values) {
      const double e = quantize_activation(v, scale, range, false).value - v;
      err += e * e;
    }
    if (best_err < 0.0 || err < best_err) {
      best_err = err;
      best_scale = scale;
    }
  }
  return best_scale;
}

}  // namespace

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

std::int64_t Rng::integer(std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(engine_());
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t r = engine_();
  while (r >= limit) r = engine_();
  return lo + static_cast<std::int64_t>(r % span);
}

TeacherStudentData make_teacher_student(const DatasetSpec &spec, std::uint64_t seed) {
  if (spec.input_dim < 1 || spec.train_samples < 1 || spec.test_samples < 1) {
    throw Error(ErrorKind::LengthMismatch, "dataset dimensions must be positive");
  }
  Rng rng(seed * 0x9E3779B97F4A7C15ULL + 0x5EED);
  std::vector<int> topo{spec.input_dim};
  topo.insert(topo.end(), spec.teacher_hidden.begin(), spec.teacher_hidden.end());
  topo.push_back(1);
  FloatNetwork teacher = init_float_network(topo, rng);
  for (auto &b : teacher.biases) {
    for (double &v : b) v = 0.1 * rng.normal();
  }

  auto sample = [&](int n) {
    Dataset ds;
    ds.dim = spec.input_dim;
    ds.x.resize(static_cast<std::size_t>(n) * spec.input_dim);
    ds.y.resize(static_cast<std::size_t>(n));
    for (double &v : ds.x) {
      v = std::abs(rng.normal());
      if (spec.input_levels > 0) v = std::min(std::round(v / spec.input_step), spec.input_levels - 1.0) * spec.input_step;
    }
    for (int i = 0; i < n; ++i) ds.y[static_cast<std::size_t>(i)] = float_forward(teacher, ds.row(static_cast<std::size_t>(i)), nullptr, nullptr);
    return ds;
  };
  TeacherStudentData out{sample(spec.train_samples), sample(spec.test_samples)};

  // normalize the clean target to zero mean, unit variance on the training split
  const double n = static_cast<double>(out.train.size());
  const double mean = std::accumulate(out.train.y.begin(), out.train.y.end(), 0.0) / n;
  double var = 0.0;
  for (double v : out.train.y) var += (v - mean) * (v - mean);
  const double stdev = std::sqrt(var / n);
  const double inv = stdev > 0.0 ? 1.0 / stdev : 1.0;
  for (Dataset *ds : {&out.train, &out.test}) {
    for (double &v : ds->y) v = (v - mean) * inv + spec.noise_sigma * rng.normal();
  }
  return out;
}

FloatNetwork init_float_network(const std::vector<int> &topology, Rng &rng) {
  FloatNetwork net;
  net.topology = topology;
  for (std::size_t l = 0; l + 1 < topology.size(); ++l) {
    const int fan_in = topology[l];
    const int fan_out = topology[l + 1];
    const double stdev = std::sqrt(2.0 / fan_in);
    std::vector<std::vector<double>> w(static_cast<std::size_t>(fan_out), std::vector<double>(static_cast<std::size_t>(fan_in)));
    for (auto &row : w) {
      for (double &v : row) v = stdev * rng.normal();
    }
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(static_cast<std::size_t>(fan_out), 0.0);
  }
  return net;
}

double float_mse(const FloatNetwork &net, const Dataset &data) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double e = float_forward(net, data.row(i), nullptr, nullptr) - data.y[i];
    total += e * e;
  }
  return total / static_cast<double>(data.size());
}

double train_float_epoch(FloatNetwork &net, const Dataset &data, double lr, double weight_decay, int batch_size,
                         Rng &rng) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  const std::size_t layers = net.weights.size();
  double epoch_loss = 0.0;
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<double>> pre;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    const double inv_b = 1.0 / static_cast<double>(stop - start);
    auto gw = net.weights;
    auto gb = net.biases;
    for (auto &m : gw) for (auto &r : m) std::fill(r.begin(), r.end(), 0.0);
    for (auto &b : gb) std::fill(b.begin(), b.end(), 0.0);
    for (std::size_t bi = start; bi < stop; ++bi) {
      const std::size_t row = order[bi];
      const double out = float_forward(net, data.row(row), &acts, &pre);
      const double err = out - data.y[row];
      epoch_loss += err * err;
      std::vector<double> delta{2.0 * err * inv_b};
      for (std::size_t l = layers; l-- > 0;) {
        const auto &a = acts[l];
        std::vector<double> back(a.size(), 0.0);
        for (std::size_t o = 0; o < delta.size(); ++o) {
          gb[l][o] += delta[o];
          for (std::size_t i = 0; i < a.size(); ++i) {
            gw[l][o][i] += delta[o] * a[i];
            back[i] += net.weights[l][o][i] * delta[o];
          }
        }
        if (l > 0) {
          for (std::size_t i = 0; i < back.size(); ++i) back[i] *= pre[l - 1][i] > 0.0 ? 1.0 : 0.0;
        }
        delta = std::move(back);
      }
    }
    for (std::size_t l = 0; l < layers; ++l) {
      for (std::size_t o = 0; o < net.weights[l].size(); ++o) {
        for (std::size_t i = 0; i < net.weights[l][o].size(); ++i) {
          auto &w = net.weights[l][o][i];
          w -= lr * (gw[l][o][i] + weight_decay * w);
        }
        net.biases[l][o] -= lr * gb[l][o];
      }
    }
  }
  const double loss = epoch_loss / static_cast<double>(data.size());
  if (!std::isfinite(loss)) throw Error(ErrorKind::Divergence, "float pretraining diverged");
  return loss;
}

ActQuantSpec QuantLayer::input_spec() const {
  return ActQuantSpec{bits.act_bits, false, std::exp2(act_log_scale), 0};
}

ToyNetwork build_quantized_network(const FloatNetwork &net, const TrainConfig &config, const Dataset &calibration) {
  if (config.variant == Variant::Standard) {
    throw std::invalid_argument("the trainer supports the a2q and a2q+ variants");
  }
  ToyNetwork q;
  q.topology = net.topology;
  const std::size_t layers = net.weights.size();

  // collect layer inputs of the float network for activation calibration
  std::vector<std::vector<double>> inputs(layers);
  std::vector<std::vector<double>> acts;
  for (std::size_t r = 0; r < calibration.size(); ++r) {
    float_forward(net, calibration.row(r), &acts, nullptr);
    for (std::size_t l = 0; l < layers; ++l) inputs[l].insert(inputs[l].end(), acts[l].begin(), acts[l].end());
  }

  for (std::size_t l = 0; l < layers; ++l) {
    QuantLayer layer;
    layer.constrained = l + 1 < layers;
    if (layer.constrained) {
      layer.variant = config.variant;
      layer.bits = config.bits;
      layer.bits.act_signed = false;
    } else {
      layer.variant = Variant::Standard;
      layer.bits = BitWidths{kEdgeLayerBits, kEdgeLayerBits, 32, false};
    }
    for (const auto &w : net.weights[l]) {
      if (layer.constrained) {
        layer.channels.push_back(ep_init(w, layer.bits, layer.variant));
      } else {
        layer.channels.push_back(naive_init(w, layer.bits.weight_bits));
      }
    }
    layer.bias = net.biases[l];
    // bias correction: keep the expected pre-activation of each unit equal to
    // the float network's after the weights are projected and quantized
    const std::size_t fan_in = net.weights[l].front().size();
    std::vector<double> mean(fan_in, 0.0);
    for (std::size_t i = 0; i < inputs[l].size(); ++i) mean[i % fan_in] += inputs[l][i];
    for (double &m : mean) m /= static_cast<double>(calibration.size());
    for (std::size_t o = 0; o < layer.channels.size(); ++o) {
      const auto qw = quantize(layer.channels[o], layer.variant, layer.bits).qw;
      for (std::size_t i = 0; i < fan_in; ++i) layer.bias[o] += (net.weights[l][o][i] - qw[i]) * mean[i];
    }
    layer.act_log_scale = std::log2(calibrate_scale(inputs[l], layer.bits.act_bits));
    q.layers.push_back(std::move(layer));
  }
  return q;
}

double reg_penalty(const ChannelWeights &ch, const BitWidths &bits, Variant variant) {
  const double budget = ch.s() * variant_limit(variant, bits).to_double();
  return std::max(ch.g() - budget, 0.0);
}

double network_loss(const ToyNetwork &net, const Dataset &data, std::span<const std::size_t> rows,
                    const LossOptions &options, NetworkGrad *grad) {
  const std::size_t layers = net.layers.size();
  std::vector<std::vector<ForwardOutput>> fwd(layers);
  std::vector<IntRange> act_range(layers);
  std::vector<double> act_scale(layers);
  std::int64_t violations = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto &layer = net.layers[l];
    for (const auto &ch : layer.channels) {
      fwd[l].push_back(forward_weights(ch, layer.variant, layer.bits, options.identity));
      if (layer.constrained && !fwd[l].back().result.bound_satisfied) ++violations;
    }
    act_range[l] = int_range(layer.bits.act_bits, false);
    act_scale[l] = std::exp2(layer.act_log_scale);
  }

  std::vector<std::vector<std::vector<double>>> grad_qw;
  if (grad) {
    grad->channels.assign(layers, {});
    grad->bias.assign(layers, {});
    grad->act_log_scale.assign(layers, 0.0);
    grad->bound_violations = violations;
    grad_qw.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
      grad_qw[l].assign(net.layers[l].channels.size(), std::vector<double>(net.layers[l].fan_in(), 0.0));
      grad->bias[l].assign(net.layers[l].channels.size(), 0.0);
    }
  }
  std::vector<double> grad_scale(layers, 0.0);

  const double inv_n = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
  double task = 0.0;
  std::vector<std::vector<double>> aq(layers), mask(layers), dscale(layers), pre(layers);
  for (std::size_t row : rows) {
    std::vector<double> a(data.row(row).begin(), data.row(row).end());
    for (std::size_t l = 0; l < layers; ++l) {
      const auto &layer = net.layers[l];
      aq[l].resize(a.size());
      mask[l].resize(a.size());
      dscale[l].resize(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        const ActQuantOut o = quantize_activation(a[i], act_scale[l], act_range[l], options.identity);
        aq[l][i] = o.value;
        mask[l][i] = o.grad_input;
        dscale[l][i] = o.grad_scale;
      }
      std::vector<double> z(layer.channels.size());
      for (std::size_t o = 0; o < z.size(); ++o) {
        const auto &qw = fwd[l][o].result.qw;
        double sum = layer.bias[o];
        for (std::size_t i = 0; i < qw.size(); ++i) sum += qw[i] * aq[l][i];
        z[o] = sum;
      }
      pre[l] = z;
      if (l + 1 < layers) {
        for (double &v : z) v = std::max(v, 0.0);
      }
      a = std::move(z);
    }
    const double err = a.front() - data.y[row];
    task += err * err;
    if (!grad) continue;

    std::vector<double> delta{2.0 * err * inv_n};
    for (std::size_t l = layers; l-- > 0;) {
      std::vector<double> back(aq[l].size(), 0.0);
      for (std::size_t o = 0; o < delta.size(); ++o) {
        if (delta[o] == 0.0) continue;
        grad->bias[l][o] += delta[o];
        const auto &qw = fwd[l][o].result.qw;
        auto &gq = grad_qw[l][o];
        for (std::size_t i = 0; i < qw.size(); ++i) {
          gq[i] += delta[o] * aq[l][i];
          back[i] += qw[i] * delta[o];
        }
      }
      for (std::size_t i = 0; i < back.size(); ++i) {
        grad_scale[l] += back[i] * dscale[l][i];
        back[i] *= mask[l][i];
      }
      if (l > 0) {
        for (std::size_t i = 0; i < back.size(); ++i) back[i] *= pre[l - 1][i] > 0.0 ? 1.0 : 0.0;
      }
      delta = std::move(back);
    }
  }

  double reg = 0.0;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto &layer = net.layers[l];
    if (!layer.constrained) continue;
    for (const auto &ch : layer.channels) reg += reg_penalty(ch, layer.bits, layer.variant);
  }

  if (grad) {
    for (std::size_t l = 0; l < layers; ++l) {
      const auto &layer = net.layers[l];
      const double limit = layer.constrained ? variant_limit(layer.variant, layer.bits).to_double() : 0.0;
      for (std::size_t o = 0; o < layer.channels.size(); ++o) {
        ChannelGrad g = backward_weights(fwd[l][o].tape, grad_qw[l][o]);
        if (layer.constrained) {
          const auto &ch = layer.channels[o];
          const double s = ch.s();
          const double gval = ch.g();
          if (gval > s * limit) {
            g.t += options.lambda_reg * gval * kLn2;
            g.d -= options.lambda_reg * limit * s * kLn2;
          }
        }
        grad->channels[l].push_back(std::move(g));
      }
      grad->act_log_scale[l] = grad_scale[l] * act_scale[l] * kLn2;
    }
  }
  return task * inv_n + options.lambda_reg * reg;
}

double evaluate_mse(const ToyNetwork &net, const Dataset &data) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0);
  return network_loss(net, data, rows, LossOptions{false, 0.0}, nullptr);
}

std::vector<std::vector<QuantResult>> quantize_hidden(const ToyNetwork &net) {
  std::vector<std::vector<QuantResult>> out;
  for (const auto &layer : net.layers) {
    if (!layer.constrained) continue;
    out.push_back(quantize_layer(layer.channels, layer.variant, layer.bits));
  }
  return out;
}

double measure_sparsity(std::span<const QuantResult> channels) {
  std::size_t zeros = 0;
  std::size_t total = 0;
  for (const auto &r : channels) {
    total += r.q.size();
    zeros += static_cast<std::size_t>(std::count(r.q.begin(), r.q.end(), 0));
  }
  return total == 0 ? 0.0 : static_cast<double>(zeros) / static_cast<double>(total);
}

double measure_sparsity(const ToyNetwork &net) {
  std::vector<QuantResult> all;
  for (auto &layer : quantize_hidden(net)) all.insert(all.end(), layer.begin(), layer.end());
  return measure_sparsity(all);
}

std::vector<CdfPoint> channel_cdf(const std::vector<std::vector<double>> &channels, const BitWidths &bits,
                                  std::span<const int> acc_bits) {
  std::vector<Rational> norms;
  norms.reserve(channels.size());
  for (const auto &w : channels) {
    const double s = init_scale(w, bits.weight_bits);
    double l1 = 0.0;
    for (double x : w) l1 += std::abs(x / s);
    norms.push_back(exact_rational(l1));
  }
  std::vector<CdfPoint> out;
  for (int p : acc_bits) {
    BitWidths b = bits;
    b.acc_bits = p;
    const RationalBound limit = a2q_limit(b);
    std::size_t ok = 0;
    for (const auto &n : norms) ok += n <= limit.value() ? 1 : 0;
    out.push_back({p, channels.empty() ? 1.0 : static_cast<double>(ok) / static_cast<double>(channels.size())});
  }
  return out;
}

TrainResult train_full(const TrainConfig &config) {
  config.bits.validate();
  if (config.lambda_reg < 0.0) throw std::invalid_argument("lambda_reg must be non-negative");
  if (config.batch_size < 1 || config.epochs < 0 || config.pretrain_epochs < 0) {
    throw std::invalid_argument("batch size and epoch counts must be non-negative");
  }
  const TeacherStudentData data = make_teacher_student(config.data, config.seed);
  Rng rng(config.seed);
  TrainResult result;
  FloatNetwork fnet = init_float_network(student_topology(config), rng);
  for (int e = 0; e < config.pretrain_epochs; ++e) train_float_epoch(fnet, data.train, config.lr, config.weight_decay, config.batch_size, rng);

  // float baseline: same budget of epochs as pretraining + QAT
  Rng baseline_rng = rng;
  FloatNetwork baseline = fnet;
  for (int e = 0; e < config.epochs; ++e) {
    train_float_epoch(baseline, data.train, config.qat_lr, config.weight_decay, config.batch_size, baseline_rng);
  }

  ToyNetwork net = build_quantized_network(fnet, config, data.train);
  SweepRecord &rec = result.record;
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  const LossOptions options{false, config.lambda_reg};
  NetworkGrad grad;
  for (int e = 0; e < config.epochs; ++e) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double loss = network_loss(net, data.train, std::span(order).subspan(start, stop - start), options, &grad);
      if (!std::isfinite(loss)) throw Error(ErrorKind::Divergence, "quantization-aware training diverged");
      rec.step_violations += grad.bound_violations;
      for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto &layer = net.layers[l];
        for (std::size_t o = 0; o < layer.channels.size(); ++o) {
          auto &ch = layer.channels[o];
          const ChannelGrad &g = grad.channels[l][o];
          for (std::size_t i = 0; i < ch.v.size(); ++i) ch.v[i] -= config.qat_lr * (g.v[i] + config.weight_decay * ch.v[i]);
          ch.t -= config.scale_lr * g.t;
          ch.d -= config.scale_lr * g.d;
          layer.bias[o] -= config.qat_lr * grad.bias[l][o];
        }
        layer.act_log_scale -= config.scale_lr * grad.act_log_scale[l];
      }
    }
  }

  rec.variant = config.variant;
  rec.weight_bits = config.bits.weight_bits;
  rec.act_bits = config.bits.act_bits;
  rec.acc_bits = config.bits.acc_bits;
  rec.seed = config.seed;
  rec.final_loss = evaluate_mse(net, data.test);
  rec.float_loss = float_mse(baseline, data.test);
  if (!std::isfinite(rec.final_loss)) throw Error(ErrorKind::Divergence, "final loss is not finite");

  std::vector<QuantResult> hidden;
  bool first = true;
  const std::uint64_t budget = enum_budget_from_env();
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto &layer = net.layers[l];
    if (!layer.constrained) continue;
    const AccumulatorSpec acc(layer.bits.acc_bits);
    const RationalBound limit = variant_limit(layer.variant, layer.bits);
    for (const auto &r : quantize_layer(layer.channels, layer.variant, layer.bits)) {
      const Rational slack = limit.value() - Rational(r.l1_codes);
      if (first || slack < rec.min_slack) rec.min_slack = slack;
      first = false;
      if (!r.bound_satisfied) rec.overflow_free = false;
      if (check_accumulator(r.q, layer.bits.act_bits, false, acc).overflowed) rec.overflow_free = false;
      if (enumeration_size(r.q.size(), layer.bits.act_bits) <= budget) {
        if (exhaustive_check(r.q, layer.bits.act_bits, false, acc, budget).overflowed) rec.overflow_free = false;
        ++rec.exhaustive_checked;
      }
      hidden.push_back(r);
    }
  }
  rec.sparsity = measure_sparsity(hidden);
  result.float_net = std::move(baseline);
  result.net = std::move(net);
  return result;
}

SweepRecord train(const TrainConfig &config) { return train_full(config).record; }

}  // namespace accq
