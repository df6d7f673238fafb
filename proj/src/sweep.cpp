// SPDX-License-Identifier: Apache-2.0
#include "accq/sweep.hpp"

#include "accq/error.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

namespace accq {

namespace {

std::vector<std::string> split(const std::string &line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

template <typename T>
T parse_number(const std::string &text, const char *field) {
  T value{};
  const auto *begin = text.data();
  const auto *end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorKind::ParseError, std::string("bad ") + field + " value '" + text + "'");
  }
  return value;
}

auto record_key(const SweepRecord &r) {
  return std::make_tuple(static_cast<int>(r.variant), r.weight_bits, r.act_bits, r.acc_bits, r.seed);
}

}  // namespace

std::int64_t max_dot_size(const TrainConfig &config) {
  std::int64_t k = config.data.input_dim;
  for (std::size_t i = 0; i + 1 < config.hidden_widths.size(); ++i) k = std::max<std::int64_t>(k, config.hidden_widths[i]);
  return k;
}

std::vector<TrainConfig> SweepGrid::expand(const TrainConfig &base, std::int64_t max_k) const {
  std::vector<TrainConfig> out;
  for (Variant v : variants) {
    for (int m : weight_bits) {
      for (int n : act_bits) {
        std::vector<int> ps = acc_bits;
        if (ps.empty()) {
          const int p_star = min_acc_width(max_k, BitWidths{m, n, 32, false});
          for (int p = p_star; p >= std::max(2, p_star - kAutoAccReduction); --p) ps.push_back(p);
        }
        for (int p : ps) {
          for (std::uint64_t seed : seeds) {
            TrainConfig c = base;
            c.variant = v;
            c.bits = BitWidths{m, n, p, false};
            c.seed = seed;
            out.push_back(c);
          }
        }
      }
    }
  }
  return out;
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string format_rational(const Rational &r) { return RationalBound(r).to_string(); }

Rational parse_rational(const std::string &text) {
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return Rational(BigInt(text));
    const BigInt num(text.substr(0, slash));
    const BigInt den(text.substr(slash + 1));
    if (den <= 0) throw Error(ErrorKind::ParseError, "non-positive denominator in '" + text + "'");
    return Rational(num, den);
  } catch (const std::runtime_error &e) {
    if (dynamic_cast<const Error *>(&e)) throw;
    throw Error(ErrorKind::ParseError, "bad rational '" + text + "'");
  }
}

std::string to_csv_row(const SweepRecord &rec) {
  std::ostringstream out;
  out << to_string(rec.variant) << ',' << rec.weight_bits << ',' << rec.act_bits << ',' << rec.acc_bits << ','
      << rec.seed << ',' << format_double(rec.final_loss) << ',' << format_double(rec.sparsity) << ','
      << format_rational(rec.min_slack);
  return out.str();
}

std::string to_csv(const std::vector<SweepRecord> &records) {
  std::string out = std::string(kSweepCsvHeader) + "\n";
  for (const auto &r : records) out += to_csv_row(r) + "\n";
  return out;
}

std::vector<SweepRecord> parse_csv(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  std::vector<SweepRecord> out;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kSweepCsvHeader) throw Error(ErrorKind::ParseError, "unexpected CSV header '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 8) throw Error(ErrorKind::ParseError, "expected 8 fields in '" + line + "'");
    SweepRecord r;
    r.variant = parse_variant(f[0]);
    r.weight_bits = parse_number<int>(f[1], "M");
    r.act_bits = parse_number<int>(f[2], "N");
    r.acc_bits = parse_number<int>(f[3], "P");
    r.seed = parse_number<std::uint64_t>(f[4], "seed");
    r.final_loss = parse_number<double>(f[5], "final_loss");
    r.sparsity = parse_number<double>(f[6], "sparsity");
    r.min_slack = parse_rational(f[7]);
    out.push_back(r);
  }
  if (out.empty()) throw Error(ErrorKind::EmptyInput, "no sweep records");
  return out;
}

void sort_records(std::vector<SweepRecord> &records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const SweepRecord &a, const SweepRecord &b) { return record_key(a) < record_key(b); });
}

std::vector<SweepRecord> pareto_frontier(const std::vector<SweepRecord> &records) {
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "no sweep records");
  std::vector<SweepRecord> sorted = records;
  sort_records(sorted);  // ties on loss go to the smallest (M, N, seed)
  std::map<std::pair<int, int>, SweepRecord> best;  // (P, variant)
  for (const auto &r : sorted) {
    const auto key = std::make_pair(r.acc_bits, static_cast<int>(r.variant));
    auto it = best.find(key);
    if (it == best.end() || r.final_loss < it->second.final_loss) best[key] = r;
  }
  std::vector<SweepRecord> out;
  for (auto &[key, rec] : best) out.push_back(rec);
  return out;
}

std::vector<SweepRecord> run_sweep(const std::vector<TrainConfig> &configs, int jobs) {
  std::vector<SweepRecord> out(configs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        out[i] = train(configs[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto &t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  sort_records(out);
  return out;
}

}  // namespace accq
