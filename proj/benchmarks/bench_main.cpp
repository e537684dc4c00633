#include <benchmark/benchmark.h>

#include "ubft/ctb/core.hpp"
#include "ubft/harness/report.hpp"
#include "ubft/harness/world.hpp"

using namespace ubft;

namespace {

Bytes payload(std::size_t size) { return Bytes(size, 0x5a); }

// One broadcast through the receiver state machine: LOCK, then a LOCKED from
// every member.
void BM_CtbCoreFastDelivery(benchmark::State &state) {
  crypto::CryptoService cs(crypto::Backend::Simulated, 1, 3);
  ctb::Core core(1, {0, 1, 2}, static_cast<std::uint32_t>(state.range(0)),
                 [&cs](ByteView b) { return cs.digest(1, b); });
  auto m = payload(64);
  std::uint64_t k = 0;
  for (auto _ : state) {
    k++;
    core.on_lock(0, k, m);
    for (Pid q = 0; q < 3; q++) benchmark::DoNotOptimize(core.on_locked(q, 0, k, m));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(k));
}
BENCHMARK(BM_CtbCoreFastDelivery)->Arg(4)->Arg(16)->Arg(128);

void BM_Digest(benchmark::State &state) {
  crypto::CryptoService cs(crypto::Backend::Simulated, 1, 1);
  auto m = payload(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cs.digest(0, m));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_Digest)->Arg(64)->Arg(4096);

void BM_SignVerify(benchmark::State &state) {
  auto backend = state.range(0) ? crypto::Backend::Real : crypto::Backend::Simulated;
  crypto::CryptoService cs(backend, 1, 2);
  auto m = payload(64);
  for (auto _ : state) {
    auto sig = cs.sign(0, m, crypto::CryptoPath::Critical);
    benchmark::DoNotOptimize(cs.verify(1, sig, m, 0, crypto::CryptoPath::Critical));
  }
  state.SetLabel(state.range(0) ? "ed25519" : "simulated");
}
BENCHMARK(BM_SignVerify)->Arg(0)->Arg(1);

// Whole failure-free SMR run; wall time per simulated request.
void BM_SmrRun(benchmark::State &state) {
  auto requests = static_cast<std::uint64_t>(state.range(0));
  auto sc = harness::parse_scenario(
      "n = 3\nf = 1\nt = 16\nwindow = 100\nseed = 5\nworkload.clients = 4\nworkload.requests = " +
          std::to_string(requests / 4) + "\n",
      "bench");
  harness::RunOptions opts;
  opts.trace_events = false;
  Time p50 = 0;
  for (auto _ : state) {
    auto r = harness::run_scenario(sc, opts);
    if (r.failed()) state.SkipWithError("run failed");
    p50 = harness::percentile(r.latencies, 50);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * requests));
  state.counters["sim_p50"] = static_cast<double>(p50);
}
BENCHMARK(BM_SmrRun)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
