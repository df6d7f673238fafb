// SPDX-License-Identifier: Apache-2.0
// accq: command-line front end for accumulator-aware weight quantization.
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage, 3 input parse, 4 overflow or
// failed property check, 5 enumeration budget exceeded, 6 file not found.

#include "accq/bounds.hpp"
#include "accq/checkpoint.hpp"
#include "accq/epinit.hpp"
#include "accq/error.hpp"
#include "accq/intsim.hpp"
#include "accq/qat.hpp"
#include "accq/quantizers.hpp"
#include "accq/sweep.hpp"
#include "accq/verify_props.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace accq;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kParse = 3,
  kOverflow = 4,
  kBudget = 5,
  kNotFound = 6,
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError:
    case ErrorKind::EmptyInput:
      return kParse;
    case ErrorKind::FileNotFound:
      return kNotFound;
    case ErrorKind::BudgetExceeded:
      return kBudget;
    case ErrorKind::Divergence:
    case ErrorKind::Infeasible:
    case ErrorKind::HypothesisViolation:
      return kFailure;
    default:
      return kUsage;
  }
}

// Minimal JSON-lines writer; numbers go through format_double so integral
// values print without a trailing ".0".
class JsonLine {
 public:
  JsonLine &field(const std::string &key, const std::string &raw) {
    out_ << (first_ ? "" : ",") << quote(key) << ':' << raw;
    first_ = false;
    return *this;
  }
  JsonLine &str(const std::string &key, const std::string &value) { return field(key, quote(value)); }
  JsonLine &num(const std::string &key, double v) { return field(key, format_double(v)); }
  JsonLine &integer(const std::string &key, const BigInt &v) { return field(key, v.str()); }
  JsonLine &boolean(const std::string &key, bool v) { return field(key, v ? "true" : "false"); }
  std::string done() const { return "{" + out_.str() + "}"; }

  static std::string quote(const std::string &s) {
    std::string r = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') r += '\\';
      r += c;
    }
    return r + "\"";
  }

 private:
  std::ostringstream out_;
  bool first_ = true;
};

template <typename T>
std::string list(const std::vector<T> &v) {
  std::string r = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) r += ',';
    if constexpr (std::is_floating_point_v<T>) r += format_double(v[i]);
    else r += std::to_string(v[i]);
  }
  return r + "]";
}

std::string read_text(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FileNotFound, path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_tokens(const std::string &line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',' || c == ' ' || c == '\t' || c == '\r') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double parse_real(const std::string &tok) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size()) throw Error(ErrorKind::ParseError, "bad number '" + tok + "'");
  return v;
}

std::int64_t parse_int(const std::string &tok) {
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size())
    throw Error(ErrorKind::ParseError, "bad integer '" + tok + "'");
  return v;
}

// One vector per non-empty, non-comment line.
template <typename T, typename Parse>
std::vector<std::vector<T>> parse_rows(const std::string &text, Parse parse) {
  std::vector<std::vector<T>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto toks = split_tokens(line);
    if (toks.empty()) continue;
    std::vector<T> row;
    for (const auto &t : toks) row.push_back(parse(t));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::EmptyInput, "no vectors in input");
  return rows;
}

struct TrainFlags {
  std::string variant = "a2q+";
  int m = 4, n = 4, p = 16;
  std::uint64_t seed = 0;
  int epochs = TrainConfig{}.epochs;
  int pretrain_epochs = TrainConfig{}.pretrain_epochs;
  double lr = TrainConfig{}.lr;
  double qat_lr = TrainConfig{}.qat_lr;
  double scale_lr = TrainConfig{}.scale_lr;
  double weight_decay = TrainConfig{}.weight_decay;
  double lambda_reg = TrainConfig{}.lambda_reg;
  int batch_size = TrainConfig{}.batch_size;
  int input_dim = DatasetSpec{}.input_dim;
  double noise = DatasetSpec{}.noise_sigma;
  int samples = DatasetSpec{}.train_samples;
  int input_levels = DatasetSpec{}.input_levels;
  std::vector<int> hidden = TrainConfig{}.hidden_widths;

  void add_shared(CLI::App *app) {
    app->add_option("--epochs", epochs, "QAT epochs")->capture_default_str();
    app->add_option("--pretrain-epochs", pretrain_epochs, "float pretraining epochs")->capture_default_str();
    app->add_option("--lr", lr, "SGD learning rate for float pretraining")->capture_default_str();
    app->add_option("--qat-lr", qat_lr, "SGD learning rate for QAT and the float baseline's remaining epochs")
        ->capture_default_str();
    app->add_option("--scale-lr", scale_lr, "QAT learning rate for the log2 norm and scale parameters")
        ->capture_default_str();
    app->add_option("--weight-decay", weight_decay, "weight decay on the direction vectors")->capture_default_str();
    app->add_option("--lambda", lambda_reg, "penalty weight on g beyond the l1 budget")->capture_default_str();
    app->add_option("--batch-size", batch_size)->capture_default_str();
    app->add_option("--input-dim", input_dim, "input features of the toy task")->capture_default_str();
    app->add_option("--noise", noise, "label noise std relative to a unit-variance target")->capture_default_str();
    app->add_option("--samples", samples, "train and test samples each")->capture_default_str();
    app->add_option("--input-levels", input_levels, "input grid levels (0 = continuous inputs)")->capture_default_str();
    app->add_option("--hidden", hidden, "hidden widths, comma separated")->delimiter(',')->capture_default_str();
  }

  TrainConfig config() const {
    TrainConfig c;
    c.variant = parse_variant(variant);
    c.bits = BitWidths{m, n, p, false};
    c.seed = seed;
    c.epochs = epochs;
    c.pretrain_epochs = pretrain_epochs;
    c.lr = lr;
    c.qat_lr = qat_lr;
    c.scale_lr = scale_lr;
    c.weight_decay = weight_decay;
    c.lambda_reg = lambda_reg;
    c.batch_size = batch_size;
    c.data.input_dim = input_dim;
    c.data.noise_sigma = noise;
    c.data.train_samples = samples;
    c.data.test_samples = samples;
    c.data.input_levels = input_levels;
    c.hidden_widths = hidden;
    return c;
  }
};

std::string record_json(const SweepRecord &r) {
  return JsonLine()
      .str("variant", to_string(r.variant))
      .num("M", r.weight_bits)
      .num("N", r.act_bits)
      .num("P", r.acc_bits)
      .field("seed", std::to_string(r.seed))
      .num("final_loss", r.final_loss)
      .num("sparsity", r.sparsity)
      .str("min_slack", format_rational(r.min_slack))
      .num("float_loss", r.float_loss)
      .boolean("overflow_free", r.overflow_free)
      .done();
}

int cmd_bounds(std::optional<int> p, std::optional<int> n, std::optional<int> m, std::optional<std::int64_t> k,
               bool is_signed, bool ratio_only, bool json, const CLI::App &app) {
  if (!n || (!ratio_only && !p && !k)) {
    std::cerr << "bounds: --N is required, and --P unless --ratio or --K is given\n" << app.help();
    return kUsage;
  }
  const auto ratio = bound_ratio(*n, is_signed);
  if (ratio_only) {
    if (json) std::cout << JsonLine().str("bound_ratio", ratio.to_string()).num("decimal", ratio.to_double()).done() << '\n';
    else std::cout << ratio.to_string() << '\n';
    return kOk;
  }
  if (!p) {
    // P* alone; the accumulator width does not enter it
    const BitWidths bits{m.value_or(8), *n, 32, is_signed};
    bits.validate();
    const int pstar = min_acc_width(*k, bits);
    if (json) std::cout << JsonLine().num("min_acc_width", pstar).done() << '\n';
    else std::cout << pstar << '\n';
    return kOk;
  }
  const BitWidths bits{m.value_or(8), *n, *p, is_signed};
  bits.validate();
  const auto a2q = a2q_limit(bits);
  const auto plus = a2q_plus_limit(bits);
  std::optional<int> pstar;
  if (k) pstar = min_acc_width(*k, bits);
  if (json) {
    JsonLine line;
    line.str("a2q_limit", a2q.to_string()).num("a2q_limit_decimal", a2q.to_double());
    line.str("a2q_plus_limit", plus.to_string()).num("a2q_plus_limit_decimal", plus.to_double());
    line.str("bound_ratio", ratio.to_string()).num("bound_ratio_decimal", ratio.to_double());
    if (pstar) line.num("min_acc_width", *pstar);
    std::cout << line.done() << '\n';
    return kOk;
  }
  std::cout << "a2q_limit       " << a2q.to_string() << "  (" << format_double(a2q.to_double()) << ")\n";
  std::cout << "a2q_plus_limit  " << plus.to_string() << "  (" << format_double(plus.to_double()) << ")\n";
  std::cout << "bound_ratio     " << ratio.to_string() << "  (" << format_double(ratio.to_double()) << ")\n";
  if (pstar) std::cout << "min_acc_width   " << *pstar << "  (K=" << *k << ", M=" << bits.weight_bits << ")\n";
  return kOk;
}

int cmd_project(const std::optional<std::string> &inline_w, const std::optional<std::string> &file, double radius,
                bool json) {
  std::vector<std::vector<double>> channels;
  if (inline_w) channels = parse_rows<double>(*inline_w, parse_real);
  else if (file) channels = parse_rows<double>(read_text(*file), parse_real);
  else throw Error(ErrorKind::EmptyInput, "project: give --weights or --file");
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const auto &w = channels[c];
    const auto res = project_l1_ball(w, radius);
    const double err = weight_quant_error(res.v_star, w, false);
    const double nerr = weight_quant_error(res.v_star, w, true);
    if (json) {
      std::cout << JsonLine()
                       .num("channel", static_cast<double>(c))
                       .field("v_star", list(res.v_star))
                       .num("theta", res.theta)
                       .boolean("active", res.active)
                       .num("error", err)
                       .num("normalized_error", nerr)
                       .done()
                << '\n';
    } else {
      if (channels.size() > 1) std::cout << "channel " << c << '\n';
      std::cout << "v_star            " << list(res.v_star) << '\n'
                << "theta             " << format_double(res.theta) << '\n'
                << "active            " << (res.active ? "true" : "false") << '\n'
                << "error             " << format_double(err) << '\n'
                << "normalized_error  " << format_double(nerr) << '\n';
    }
  }
  return kOk;
}

int cmd_verify(const std::string &path, int p, int n, bool is_signed, bool exhaustive) {
  const auto channels = parse_rows<std::int64_t>(read_text(path), parse_int);
  const AccumulatorSpec spec(p);
  const BitWidths bits{2, n, p, is_signed};
  bits.validate();
  const auto a2q = a2q_limit(bits);
  const auto plus = a2q_plus_limit(bits);
  bool any_overflow = false;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const auto &q = channels[c];
    auto w = check_accumulator(q, n, is_signed, spec);
    bool agree = true;
    if (exhaustive) {
      auto ex = exhaustive_check(q, n, is_signed, spec);
      agree = ex.true_max == w.true_max && ex.true_min == w.true_min && ex.overflowed == w.overflowed;
      w = std::move(ex);
    }
    const BigInt l1 = l1_norm(q);
    std::int64_t sum = 0;
    for (auto v : q) sum += v;
    any_overflow = any_overflow || w.overflowed;
    JsonLine line;
    line.num("channel", static_cast<double>(c))
        .num("K", static_cast<double>(q.size()))
        .integer("l1", l1)
        .integer("sum", sum)
        .integer("true_max", w.true_max)
        .integer("true_min", w.true_min)
        .boolean("overflowed", w.overflowed)
        .integer("wrapped_max", w.wrapped_max)
        .integer("wrapped_min", w.wrapped_min)
        .field("witness_x_max", list(w.witness_x_max))
        .field("witness_x_min", list(w.witness_x_min))
        .boolean("upper_ok", w.upper_ok)
        .boolean("lower_ok", w.lower_ok)
        .boolean("span_ok", w.span_ok)
        .boolean("within_a2q", a2q.admits(l1))
        .boolean("within_a2q_plus", sum == 0 && plus.admits(l1))
        .str("method", exhaustive ? "exhaustive" : "extremal");
    if (exhaustive) line.boolean("agrees_with_extremal", agree);
    std::cout << line.done() << '\n';
  }
  return any_overflow ? kOverflow : kOk;
}

int cmd_props(std::uint64_t seed, int trials, bool json) {
  const auto checks = run_property_suite(seed, trials);
  bool all = true;
  for (const auto &c : checks) {
    all = all && c.passed;
    if (json) std::cout << JsonLine().str("check", c.name).boolean("passed", c.passed).str("detail", c.detail).done() << '\n';
    else std::cout << (c.passed ? "PASS  " : "FAIL  ") << c.name << "  (" << c.detail << ")\n";
  }
  return all ? kOk : kOverflow;
}

int cmd_train(const TrainFlags &flags, bool json, const std::string &save_ckpt, const std::string &float_ckpt) {
  const auto result = train_full(flags.config());
  if (!save_ckpt.empty()) write_json_file(save_ckpt, to_json(quant_checkpoint(result.net)));
  if (!float_ckpt.empty()) write_json_file(float_ckpt, to_json(float_checkpoint(result.float_net)));
  if (json) std::cout << record_json(result.record) << '\n';
  else std::cout << kSweepCsvHeader << '\n' << to_csv_row(result.record) << '\n';
  return result.record.overflow_free ? kOk : kOverflow;
}

int cmd_sweep(const TrainFlags &flags, const std::vector<int> &ms, const std::vector<int> &ns,
              const std::vector<std::string> &ps, const std::vector<std::string> &variants,
              const std::vector<std::uint64_t> &seeds, int jobs, const std::string &out, bool json) {
  SweepGrid grid;
  grid.weight_bits = ms;
  grid.act_bits = ns;
  const bool auto_p = ps.size() == 1 && ps[0] == "auto";
  if (!auto_p)
    for (const auto &p : ps) grid.acc_bits.push_back(static_cast<int>(parse_int(p)));
  for (const auto &v : variants) grid.variants.push_back(parse_variant(v));
  grid.seeds = seeds;
  const TrainConfig base = flags.config();
  const auto configs = grid.expand(base, max_dot_size(base));
  const auto records = run_sweep(configs, jobs);
  std::string text;
  if (json) {
    for (const auto &r : records) text += record_json(r) + "\n";
  } else {
    text = to_csv(records);
  }
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out);
    if (!f) throw Error(ErrorKind::FileNotFound, out);
    f << text;
  }
  return kOk;
}

int cmd_analyze(const std::string &path, int m, int n, bool is_signed, std::vector<int> ps, bool json) {
  const auto ckpt = float_checkpoint_from_json(read_json_file(path));
  if (ps.empty())
    for (int p = 8; p <= 32; ++p) ps.push_back(p);
  for (std::size_t l = 0; l < ckpt.size(); ++l) {
    const auto &channels = ckpt[l];
    for (int p : ps) {
      const BitWidths bits{m, n, p, is_signed};
      bits.validate();
      const auto cdf = channel_cdf(channels, bits, std::span<const int>(&p, 1));
      double ep = 0.0, naive = 0.0;
      for (const auto &w : channels) {
        const auto ch_ep = ep_init(w, bits, Variant::A2Q);
        const auto ch_nv = naive_init(w, m);
        ep += weight_quant_error(quantize(ch_ep, Variant::A2Q, bits).qw, w, true);
        naive += weight_quant_error(quantize(ch_nv, Variant::A2Q, bits).qw, w, true);
      }
      const double cnt = channels.empty() ? 1.0 : static_cast<double>(channels.size());
      if (json) {
        std::cout << JsonLine()
                         .num("layer", static_cast<double>(l))
                         .num("P", p)
                         .num("fraction_within_budget", cdf.front().fraction)
                         .num("ep_init_error", ep / cnt)
                         .num("naive_init_error", naive / cnt)
                         .done()
                  << '\n';
      } else {
        std::cout << "layer " << l << "  P " << p << "  within " << format_double(cdf.front().fraction)
                  << "  ep_init_error " << format_double(ep / cnt) << "  naive_init_error "
                  << format_double(naive / cnt) << '\n';
      }
    }
  }
  return kOk;
}

int cmd_pareto(const std::string &path, const std::string &out) {
  const auto frontier = pareto_frontier(parse_csv(read_text(path)));
  const auto text = to_csv(frontier);
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out);
    if (!f) throw Error(ErrorKind::FileNotFound, out);
    f << text;
  }
  return kOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Accumulator-aware weight quantization: bounds, projection, overflow verification, toy QAT"};
  app.require_subcommand(1);
  bool json = false;
  app.add_flag("--json", json, "machine-readable JSON lines");

  // bounds
  auto *bounds = app.add_subcommand("bounds", "l1 budgets, their ratio, and the minimum safe accumulator width");
  std::optional<int> b_p, b_n, b_m;
  std::optional<std::int64_t> b_k;
  bool b_signed = false, b_ratio = false;
  bounds->add_option("--P", b_p, "accumulator bits");
  bounds->add_option("--N", b_n, "input bits");
  bounds->add_option("--M", b_m, "weight bits (for min_acc_width; default 8)");
  bounds->add_option("--K", b_k, "dot-product size; prints min_acc_width");
  auto *b_sflag = bounds->add_flag("--signed", b_signed, "signed inputs");
  bounds->add_flag("--unsigned", "unsigned inputs (default)")->excludes(b_sflag);
  bounds->add_flag("--ratio", b_ratio, "print only the A2Q+/A2Q budget ratio");
  bounds->add_flag("--json", json);

  // project
  auto *project = app.add_subcommand("project", "Euclidean projection of a float channel onto the l1 ball");
  std::optional<std::string> p_weights, p_file;
  double p_radius = 0.0;
  project->add_option("--radius", p_radius, "l1 radius")->required();
  auto *pw = project->add_option("--weights", p_weights, "inline channel, e.g. \"3,1\"");
  project->add_option("--file", p_file, "text/CSV file, one channel per line")->excludes(pw);
  project->add_flag("--json", json);

  // verify
  auto *verify = app.add_subcommand("verify", "worst-case accumulator check of integer weight channels");
  std::string v_path;
  std::optional<int> v_p, v_n;
  bool v_signed = false, v_exhaustive = false, v_props = false;
  std::uint64_t v_seed = 0;
  int v_trials = 200;
  verify->add_option("--weights", v_path, "CSV of integer codes, one channel per line");
  verify->add_option("--P", v_p, "accumulator bits");
  verify->add_option("--N", v_n, "input bits");
  auto *v_sflag = verify->add_flag("--signed", v_signed, "signed inputs");
  verify->add_flag("--unsigned", "unsigned inputs (default)")->excludes(v_sflag);
  verify->add_flag("--exhaustive", v_exhaustive, "enumerate every input vector (budget: ACCQ_ENUM_BUDGET)");
  verify->add_flag("--props", v_props, "run the overflow-proof property checks instead");
  verify->add_option("--seed", v_seed, "seed for --props")->capture_default_str();
  verify->add_option("--trials", v_trials, "trials per check for --props")->capture_default_str();
  verify->add_flag("--json", json);

  // train
  auto *train_cmd = app.add_subcommand("train", "float pretrain, EP-init, and QAT on the toy regression task");
  TrainFlags tf;
  std::string t_save, t_float;
  train_cmd->add_option("--variant", tf.variant, "a2q or a2q+")
      ->check(CLI::IsMember({"a2q", "a2q+", "a2qplus"}))
      ->capture_default_str();
  train_cmd->add_option("--M", tf.m, "weight bits")->capture_default_str();
  train_cmd->add_option("--N", tf.n, "activation bits")->capture_default_str();
  train_cmd->add_option("--P", tf.p, "accumulator bits")->capture_default_str();
  train_cmd->add_option("--seed", tf.seed)->capture_default_str();
  train_cmd->add_option("--save-checkpoint", t_save, "write the quantized checkpoint (JSON)");
  train_cmd->add_option("--float-checkpoint", t_float, "write the float pretrained checkpoint (JSON)");
  tf.add_shared(train_cmd);
  train_cmd->add_flag("--json", json);

  // sweep
  auto *sweep = app.add_subcommand("sweep", "grid of training runs, CSV out");
  TrainFlags sf;
  std::vector<int> s_m{4}, s_n{4};
  std::vector<std::string> s_p{"auto"}, s_var{"a2q", "a2q+"};
  std::vector<std::uint64_t> s_seeds{0};
  int s_jobs = 1;
  std::string s_out;
  sweep->add_option("--M", s_m, "weight bits list")->delimiter(',')->capture_default_str();
  sweep->add_option("--N", s_n, "activation bits list")->delimiter(',')->capture_default_str();
  sweep->add_option("--P", s_p, "accumulator bits list, or auto (P* down to P*-10)")->delimiter(',')->capture_default_str();
  sweep->add_option("--variants", s_var, "variant list")
      ->delimiter(',')
      ->check(CLI::IsMember({"a2q", "a2q+", "a2qplus"}))
      ->capture_default_str();
  sweep->add_option("--seeds", s_seeds, "seed list")->delimiter(',')->capture_default_str();
  sweep->add_option("--jobs", s_jobs, "worker threads")->capture_default_str();
  sweep->add_option("--out", s_out, "output path (default stdout)");
  sf.add_shared(sweep);
  sweep->add_flag("--json", json);

  // analyze
  auto *analyze = app.add_subcommand("analyze", "per-layer fraction of float channels within the A2Q budget, and init errors");
  std::string a_path;
  int a_m = 8, a_n = 8;
  bool a_signed = false;
  std::vector<int> a_p;
  analyze->add_option("--checkpoint", a_path, "float checkpoint JSON")->required();
  analyze->add_option("--M", a_m)->capture_default_str();
  analyze->add_option("--N", a_n)->capture_default_str();
  analyze->add_flag("--signed", a_signed);
  analyze->add_option("--P", a_p, "accumulator widths (default 8..32)")->delimiter(',');
  analyze->add_flag("--json", json);

  // pareto
  auto *pareto = app.add_subcommand("pareto", "best record per (variant, P) from a sweep CSV");
  std::string pr_path, pr_out;
  pareto->add_option("records", pr_path, "sweep CSV")->required();
  pareto->add_option("--out", pr_out, "output path (default stdout)");
  pareto->footer(
      "Loss is the accuracy proxy: lower is better, since the toy task is regression. "
      "For a classification accuracy column the comparison would be inverted.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*bounds) return cmd_bounds(b_p, b_n, b_m, b_k, b_signed, b_ratio, json, *bounds);
    if (*project) return cmd_project(p_weights, p_file, p_radius, json);
    if (*verify) {
      if (v_props) return cmd_props(v_seed, v_trials, json);
      if (v_path.empty() || !v_p || !v_n) {
        std::cerr << "verify: --weights, --P and --N are required (or --props)\n" << verify->help();
        return kUsage;
      }
      return cmd_verify(v_path, *v_p, *v_n, v_signed, v_exhaustive);
    }
    if (*train_cmd) return cmd_train(tf, json, t_save, t_float);
    if (*sweep) return cmd_sweep(sf, s_m, s_n, s_p, s_var, s_seeds, s_jobs, s_out, json);
    if (*analyze) return cmd_analyze(a_path, a_m, a_n, a_signed, a_p, json);
    if (*pareto) return cmd_pareto(pr_path, pr_out);
  } catch (const Error &e) {
    std::cerr << "accq: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception &e) {
    std::cerr << "accq: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
