#include <benchmark/benchmark.h>

#include "hml/symbols.hpp"
#include "hml/verifier.hpp"

using namespace hml;

static void BM_DispersionMatrix(benchmark::State& state) {
  const MaterialModel m = MaterialModel::scalar(ScalarField::expression("1 + 0.2*sin(x1)"),
                                                ScalarField::constant(1.0), ScalarField::constant(0.0));
  const Vec3 x(0.1, 0.2, 0.3), z(0.3, -0.4, 0.8);
  for (auto _ : state) benchmark::DoNotOptimize(dispersion_matrix(m, x, z));
}
BENCHMARK(BM_DispersionMatrix);

static void BM_EigenBasis(benchmark::State& state) {
  const Vec3 z(0.3, -0.4, 0.8);
  for (auto _ : state) benchmark::DoNotOptimize(eigen_basis(2.0, 1.0, z));
}
BENCHMARK(BM_EigenBasis);

static void BM_KernelLemma(benchmark::State& state) {
  const Vec3 z(0.3, -0.4, 0.8);
  for (auto _ : state) benchmark::DoNotOptimize(kernel_lemma_check(z));
}
BENCHMARK(BM_KernelLemma);

static void BM_ModalFit(benchmark::State& state) {
  const Vec4 zeta = Vec4(-0.5, 0.3, -0.4, 0.8).normalized();
  const auto basis = eigen_basis(2.0, 1.0, zeta.tail<3>());
  const CMat6 mu = (basis[2] * basis[2].transpose()).cast<cd>();
  for (auto _ : state) benchmark::DoNotOptimize(fit_modal_bin(mu, zeta, 2.0, 1.0));
}
BENCHMARK(BM_ModalFit);
