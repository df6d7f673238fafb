// SPDX-License-Identifier: Apache-2.0
/**
 * @file  sweep.hpp
 * @brief Sweep grids over (variant, M, N, P, seed), SweepRecord CSV I/O and
 *        Pareto-frontier extraction.
 */
#pragma once

#include "accq/qat.hpp"

#include <optional>
#include <string>
#include <vector>

namespace accq {

inline constexpr const char *kSweepCsvHeader = "variant,M,N,P,seed,final_loss,sparsity,min_slack";

/// Number of accumulator widths below P* visited in auto mode.
inline constexpr int kAutoAccReduction = 10;

struct SweepGrid {
  std::vector<int> weight_bits;
  std::vector<int> act_bits;
  std::vector<int> acc_bits;  // empty = auto: P* down to P* - 10 per (M, N)
  std::vector<Variant> variants;
  std::vector<std::uint64_t> seeds;

  /// Expand into training configs; auto P uses K* = max_k.
  std::vector<TrainConfig> expand(const TrainConfig &base, std::int64_t max_k) const;
};

/// Largest dot-product size over the constrained layers of a config.
std::int64_t max_dot_size(const TrainConfig &config);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);
std::string format_rational(const Rational &r);
Rational parse_rational(const std::string &text);

std::string to_csv_row(const SweepRecord &rec);
std::string to_csv(const std::vector<SweepRecord> &records);
/// Parse CSV text with the header above. Throws ParseError / EmptyInput.
std::vector<SweepRecord> parse_csv(const std::string &text);

/// Sort key (variant, M, N, P, seed).
void sort_records(std::vector<SweepRecord> &records);

/// For each (variant, P), the record with the lowest final loss across
/// (M, N, seed); sorted by P, then variant. Throws EmptyInput.
std::vector<SweepRecord> pareto_frontier(const std::vector<SweepRecord> &records);

/// Run every config on a pool of `jobs` threads; records come back sorted.
std::vector<SweepRecord> run_sweep(const std::vector<TrainConfig> &configs, int jobs);

}  // namespace accq
