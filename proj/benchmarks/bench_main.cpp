#include <benchmark/benchmark.h>

#include "qkdnet/ldpc.hpp"
#include "qkdnet/linksim.hpp"
#include "qkdnet/random.hpp"
#include "qkdnet/reconcile.hpp"
#include "qkdnet/toeplitz.hpp"

namespace {

using namespace qkdnet;

const LdpcCode& code_for(double rate) {
  static const LdpcCode r05 = build_code(4520, 0.5, 1);
  static const LdpcCode r08 = build_code(4520, 0.8, 1);
  return rate < 0.6 ? r05 : r08;
}

void BM_Syndrome(benchmark::State& state) {
  const LdpcCode& code = code_for(0.5);
  Rng rng(1);
  const BitString word = BitString::random(code.n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(compute_syndrome(code, word));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(code.n));
}
BENCHMARK(BM_Syndrome);

void BM_BpDecode(benchmark::State& state) {
  const double q = static_cast<double>(state.range(0)) / 1000.0;
  const LdpcCode& code = code_for(0.5);
  Rng rng(2);
  const BitString x = BitString::random(code.n, rng);
  BitString y = x;
  for (std::size_t i = 0; i < code.n; ++i) {
    if (rng.bernoulli(q)) y.flip(i);
  }
  const BitString s = compute_syndrome(code, x);
  for (auto _ : state) benchmark::DoNotOptimize(bp_decode(code, y, s, bsc_llr(q), 60));
}
BENCHMARK(BM_BpDecode)->Arg(20)->Arg(50)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_ToeplitzRows(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t m = n / 4;
  Rng rng(3);
  const BitString in = BitString::random(n, rng);
  const BitString seed = BitString::random(n + m - 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(detail::toeplitz_rows(in, seed, m));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(n / 8));
}
BENCHMARK(BM_ToeplitzRows)->Arg(1 << 12)->Arg(1 << 16)->Unit(benchmark::kMicrosecond);

void BM_ToeplitzFft(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t m = n / 4;
  Rng rng(4);
  const BitString in = BitString::random(n, rng);
  const BitString seed = BitString::random(n + m - 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(detail::toeplitz_fft(in, seed, m));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(n / 8));
}
BENCHMARK(BM_ToeplitzFft)->Arg(1 << 12)->Arg(1 << 16)->Arg(1 << 20)->Unit(benchmark::kMillisecond);

void BM_ReconcileFrame(benchmark::State& state) {
  const double q = static_cast<double>(state.range(0)) / 1000.0;
  const ReconcileSettings settings;
  BlindReconciler rec(settings, 5);
  ClassicalChannel ch;
  std::uint64_t i = 0;
  for (auto _ : state) {
    state.PauseTiming();
    const SiftedPair p = generate_sifted_pair_at(q, 100.0, settings.frame_bits, i++);
    state.ResumeTiming();
    benchmark::DoNotOptimize(rec.reconcile_frame(p.alice, p.bob, ch));
    ch.reset_transcripts();
  }
}
BENCHMARK(BM_ReconcileFrame)->Arg(10)->Arg(30)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
