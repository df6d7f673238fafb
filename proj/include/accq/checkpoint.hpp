// SPDX-License-Identifier: Apache-2.0
/**
 * @file  checkpoint.hpp
 * @brief JSON checkpoints: a list of layers, each a list of channels.
 *
 * Quantized channels are {"v": [...], "t": x, "d": x}; float channels are
 * {"w": [...]}.
 */
#pragma once

#include "accq/qat.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace accq {

using FloatCheckpoint = std::vector<std::vector<std::vector<double>>>;
using QuantCheckpoint = std::vector<std::vector<ChannelWeights>>;

nlohmann::json to_json(const FloatCheckpoint &ckpt);
nlohmann::json to_json(const QuantCheckpoint &ckpt);
FloatCheckpoint float_checkpoint_from_json(const nlohmann::json &j);
QuantCheckpoint quant_checkpoint_from_json(const nlohmann::json &j);

FloatCheckpoint float_checkpoint(const FloatNetwork &net);
QuantCheckpoint quant_checkpoint(const ToyNetwork &net);

/// Throws FileNotFound / ParseError.
nlohmann::json read_json_file(const std::string &path);
void write_json_file(const std::string &path, const nlohmann::json &j);

}  // namespace accq
