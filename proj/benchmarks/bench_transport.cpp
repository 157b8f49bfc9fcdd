#include <benchmark/benchmark.h>

#include "hml/transport.hpp"

using namespace hml;

static void BM_IntegrateRay(benchmark::State& state) {
  const MaterialModel m = MaterialModel::scalar(ScalarField::expression("1 + 0.2*sin(6.283185307179586*x3)"),
                                                ScalarField::constant(1.0), ScalarField::constant(0.0));
  RayState s;
  s.zeta = Vec4(-1.0, 0.3, 0.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(integrate_ray(m, s, 1.0));
}
BENCHMARK(BM_IntegrateRay)->Unit(benchmark::kMillisecond);

static void BM_IntegrateRays(benchmark::State& state) {
  const MaterialModel m = MaterialModel::scalar(ScalarField::expression("1.5 + 0.3*sin(x1 + x3)"),
                                                ScalarField::constant(1.0), ScalarField::constant(0.0));
  std::vector<RayState> starts(64);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    starts[i].x = Vec3(0.01 * i, 0.0, 0.0);
    starts[i].zeta = Vec4(-1.0, 0.1 * (i % 8), 0.0, 1.0);
  }
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(integrate_rays(m, starts, 0.5, {}, jobs));
}
BENCHMARK(BM_IntegrateRays)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_ConstantTransportResidual(benchmark::State& state) {
  TransportLattice lat;
  for (int i = 0; i <= 16; ++i) lat.times.push_back(0.025 * i);
  lat.sites = {3, 1, 3};
  lat.spacing = Vec3(0.1, 0.1, 0.1);
  lat.sphere = SphereGrid(8, 8, 16);
  ConstantDensityField f{lat, std::vector<double>(lat.size(), 1.0), std::vector<double>(lat.size(), 0.5),
                         std::vector<cd>(lat.size()), std::vector<cd>(lat.size())};
  const MaterialModel m = MaterialModel::constant(1.0, 1.0, 1.0);
  const auto battery = default_test_battery();
  for (auto _ : state) benchmark::DoNotOptimize(constant_transport_residual(f, m, nullptr, battery));
}
BENCHMARK(BM_ConstantTransportResidual)->Unit(benchmark::kMillisecond);
