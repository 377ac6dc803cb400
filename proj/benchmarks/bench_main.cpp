// Microbenchmarks for the hot paths: single-point cost estimation (the inner
// loop of every search), the resource primitives, and one simulator pass.
#include <benchmark/benchmark.h>

#include <memory>

#include "cppdse/model.hpp"
#include "cppdse/sim.hpp"
#include "support/fixtures.hpp"

using namespace cppdse;

namespace {

const testsup::fixture& dotburst() {
  static auto fx = testsup::load_fixture("dotburst");
  return *fx;
}

const testsup::fixture& bytepack() {
  static auto fx = testsup::load_fixture("bytepack", "smallfpga");
  return *fx;
}

void BM_estimate_point(benchmark::State& state) {
  const auto& fx = dotburst();
  design_point pt = testsup::named_point(
      fx.design, {{"tile", 48}, {"pe", 48}, {"bw.x", 256}, {"bw.s", 512}});
  for (auto _ : state) {
    cost_estimate e = estimate(fx.design, fx.model, fx.platform, pt);
    benchmark::DoNotOptimize(e.cycles_total);
  }
}
BENCHMARK(BM_estimate_point);

void BM_mux_cost(benchmark::State& state) {
  for (auto _ : state) {
    std::int64_t acc = 0;
    for (std::int64_t k = 1; k <= 256; ++k) acc += lut_mux(k);
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_mux_cost);

void BM_block_count(benchmark::State& state) {
  platform_config p = default_platform();
  for (auto _ : state) {
    std::int64_t acc = 0;
    for (std::int64_t pf = 1; pf <= 64; ++pf) acc += bram_buffer(65536, pf, 64, 2, p);
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_block_count);

void BM_simulate_pass(benchmark::State& state) {
  const auto& fx = bytepack();
  design_point pt = testsup::named_point(
      fx.design, {{"tile", 10}, {"pe", 1}, {"bw.src", 512}, {"bw.dst", 512}});
  for (auto _ : state) {
    sim_result r = simulate(fx.design, fx.model, fx.platform, pt);
    benchmark::DoNotOptimize(r.total_cycles);
  }
}
BENCHMARK(BM_simulate_pass);

}  // namespace

BENCHMARK_MAIN();
