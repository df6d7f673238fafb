// SPDX-License-Identifier: Apache-2.0
#include "accq/checkpoint.hpp"

#include "accq/error.hpp"

#include <fstream>

namespace accq {

using nlohmann::json;

json to_json(const FloatCheckpoint &ckpt) {
  json layers = json::array();
  for (const auto &layer : ckpt) {
    json channels = json::array();
    for (const auto &w : layer) channels.push_back({{"w", w}});
    layers.push_back(std::move(channels));
  }
  return layers;
}

json to_json(const QuantCheckpoint &ckpt) {
  json layers = json::array();
  for (const auto &layer : ckpt) {
    json channels = json::array();
    for (const auto &ch : layer) channels.push_back({{"v", ch.v}, {"t", ch.t}, {"d", ch.d}});
    layers.push_back(std::move(channels));
  }
  return layers;
}

namespace {

const json &layers_of(const json &j) {
  if (!j.is_array()) throw Error(ErrorKind::ParseError, "checkpoint must be a JSON array of layers");
  for (const auto &layer : j) {
    if (!layer.is_array()) throw Error(ErrorKind::ParseError, "each layer must be an array of channels");
  }
  return j;
}

std::vector<double> numbers(const json &j, const char *field) {
  if (!j.is_object() || !j.contains(field) || !j.at(field).is_array()) {
    throw Error(ErrorKind::ParseError, std::string("channel is missing array field '") + field + "'");
  }
  std::vector<double> out;
  for (const auto &x : j.at(field)) {
    if (!x.is_number()) throw Error(ErrorKind::ParseError, std::string("non-numeric entry in '") + field + "'");
    out.push_back(x.get<double>());
  }
  return out;
}

double number(const json &j, const char *field) {
  if (!j.contains(field) || !j.at(field).is_number()) {
    throw Error(ErrorKind::ParseError, std::string("channel is missing numeric field '") + field + "'");
  }
  return j.at(field).get<double>();
}

}  // namespace

FloatCheckpoint float_checkpoint_from_json(const json &j) {
  FloatCheckpoint out;
  for (const auto &layer : layers_of(j)) {
    auto &dst = out.emplace_back();
    for (const auto &ch : layer) dst.push_back(numbers(ch, "w"));
  }
  return out;
}

QuantCheckpoint quant_checkpoint_from_json(const json &j) {
  QuantCheckpoint out;
  for (const auto &layer : layers_of(j)) {
    auto &dst = out.emplace_back();
    for (const auto &ch : layer) dst.push_back(ChannelWeights{numbers(ch, "v"), number(ch, "t"), number(ch, "d")});
  }
  return out;
}

FloatCheckpoint float_checkpoint(const FloatNetwork &net) { return net.weights; }

QuantCheckpoint quant_checkpoint(const ToyNetwork &net) {
  QuantCheckpoint out;
  for (const auto &layer : net.layers) out.push_back(layer.channels);
  return out;
}

json read_json_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FileNotFound, path);
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
}

void write_json_file(const std::string &path, const json &j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::FileNotFound, "cannot open " + path + " for writing");
  out << j.dump(1) << '\n';
}

}  // namespace accq
