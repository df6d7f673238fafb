// SPDX-License-Identifier: Apache-2.0
// Times the OpenMP kernels against their serial references and checks that
// both produce the same answer.

#include "accq/epinit.hpp"
#include "accq/intsim.hpp"
#include "accq/qat.hpp"
#include "accq/quantizers.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <vector>

namespace {

using namespace accq;
using Clock = std::chrono::steady_clock;

template <typename F>
double time_ms(F &&f, int reps) {
  const auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) f();
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count() / reps;
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  Rng rng(7);

  {
    // K = 6, N = 3 -> 2^18 inputs.
    std::vector<std::int64_t> q(6);
    for (auto &v : q) v = rng.integer(-7, 7);
    const AccumulatorSpec spec(10);
    AccumWitness par, ser;
    const double tp = time_ms([&] { par = exhaustive_check(q, 3, false, spec); }, 5);
    const double ts = time_ms([&] { ser = exhaustive_check_serial(q, 3, false, spec); }, 5);
    const bool same = par.true_max == ser.true_max && par.true_min == ser.true_min &&
                      par.witness_x_max == ser.witness_x_max && par.witness_x_min == ser.witness_x_min;
    std::printf("exhaustive_check  K=6 N=3   parallel %8.3f ms  serial %8.3f ms  speedup %.2fx  match %s\n", tp, ts,
                ts / tp, same ? "yes" : "NO");
  }

  {
    const BitWidths bits{4, 4, 16, false};
    std::vector<ChannelWeights> chans;
    for (int c = 0; c < 512; ++c) {
      std::vector<double> w(256);
      for (auto &x : w) x = rng.normal();
      chans.push_back(ep_init(w, bits, Variant::A2QPlus));
    }
    std::vector<QuantResult> par, ser;
    const double tp = time_ms([&] { par = quantize_layer(chans, Variant::A2QPlus, bits); }, 5);
    const double ts = time_ms([&] { ser = quantize_layer_serial(chans, Variant::A2QPlus, bits); }, 5);
    bool same = par.size() == ser.size();
    for (std::size_t i = 0; same && i < par.size(); ++i) same = par[i].q == ser[i].q;
    std::printf("quantize_layer    512x256    parallel %8.3f ms  serial %8.3f ms  speedup %.2fx  match %s\n", tp, ts,
                ts / tp, same ? "yes" : "NO");
  }
  return 0;
}
