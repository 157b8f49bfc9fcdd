#include <benchmark/benchmark.h>

#include "hml/estimator.hpp"
#include "hml/synthesis.hpp"

using namespace hml;

namespace {

OscillatingFamily family(int n) {
  GridSpec g;
  g.extents = {0.5, 1.0, 1.0, 1.0};
  g.shape = {n, n, n, n};
  PlaneWaveSpec spec;
  spec.mode = Mode::Plus1;
  spec.with_sources = false;
  return plane_wave_family(MaterialModel::constant(1.0, 1.0, 0.0), g, spec, {8.0 / n, 4.0 / n});
}

}  // namespace

static void BM_PlaneWaveFamily(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(family(n));
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n * n);
}
BENCHMARK(BM_PlaneWaveFamily)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_EstimateHMeasure(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const OscillatingFamily fam = family(n);
  const Window phi = Window::fitted(fam.grid, {true, false, false, false});
  const SphereGrid sphere;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_hmeasure(stream(fam), phi, sphere));
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n * n);
}
BENCHMARK(BM_EstimateHMeasure)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
