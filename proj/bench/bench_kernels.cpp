// Serial reference vs OpenMP kernels.
#include <benchmark/benchmark.h>

#include "phonon/experiments.hpp"
#include "phonon/sawmodel.hpp"

using namespace phonon;
using namespace phonon::netsim;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::parallel : Exec::serial; }

void BM_FieldBranches(benchmark::State& st) {
  DeviceSetup s;
  s.exec = exec_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(transfer_experiment(Carrier::bi, s).pe_q2);
}

void BM_FreqMapSweep(benchmark::State& st) {
  DeviceSetup s;
  s.branches.enabled = false;
  std::vector<FreqPoint> pts(16);
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {3.9e9 + 1e7 * double(i), 2 * M_PI * 2.4e6, 1.0, 1.0, 1.0};
  for (auto _ : st) benchmark::DoNotOptimize(freq_map(s, pts, 3e-6, 10e-9, exec_of(st)).revival_contrast);
}

void BM_SawGrid(benchmark::State& st) {
  saw::UDTParams p;
  auto f = saw::frequency_grid(3.8e9, 4.2e9, 0.5e6);
  for (auto _ : st) benchmark::DoNotOptimize(saw::udt_response(p, f, exec_of(st)).directivity_db);
}

void BM_LossBudget(benchmark::State& st) {
  DeviceSetup s;
  s.exec = exec_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(transfer_loss_budget(s).nominal);
}

}  // namespace

BENCHMARK(BM_FieldBranches)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FreqMapSweep)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SawGrid)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossBudget)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
