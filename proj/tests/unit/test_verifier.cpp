#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hml/errors.hpp"
#include "hml/verifier.hpp"

using namespace hml;

namespace {

GridSpec grid() {
  GridSpec g;
  g.extents = {0.5, 1.0, 1.0, 1.0};
  g.shape = {32, 8, 8, 64};
  return g;
}

HMeasureEstimate measure_of(const MaterialModel& m, Mode mode, std::vector<double> ladder = {0.25, 0.125}) {
  PlaneWaveSpec spec;
  spec.mode = mode;
  const OscillatingFamily fam = plane_wave_family(m, grid(), spec, ladder);
  return estimate_hmeasure(stream(fam), Window::fitted(grid(), {true, false, false, false}), SphereGrid());
}

/// Estimate with one populated bin whose centroid is `zeta`.
HMeasureEstimate synthetic(const Vec4& zeta, const CMat6& m) {
  HMeasureEstimate mu;
  mu.sphere = SphereGrid(4, 4, 8);
  mu.bins.assign(mu.sphere.size(), CMat6::Zero());
  for (const auto& c : mu.sphere.cells()) mu.centroids.push_back(c.center);
  const int i = mu.sphere.locate(zeta);
  mu.bins[i] = m;
  mu.centroids[i] = zeta.normalized();
  HMeasureLevel lvl;
  lvl.bins = mu.bins;
  lvl.moment.assign(mu.bins.size(), Vec4::Zero());
  lvl.moment[i] = zeta.normalized();
  lvl.moment_weight.assign(mu.bins.size(), 0.0);
  mu.levels = {lvl};
  return mu;
}

CMat6 dyad(const Vec6& b) { return (b * b.transpose()).cast<cd>(); }

}  // namespace

TEST(Localisation, ZeroMeasureHasNoBins) {
  HMeasureEstimate mu = synthetic(Vec4(0, 0, 0, 1), CMat6::Zero());
  const LocalisationReport r = localisation_residual(mu, MaterialModel::constant(1, 1, 0), LocalisationSymbol::P);
  EXPECT_TRUE(r.bins.empty());
  EXPECT_EQ(r.absent, mu.sphere.size());
  EXPECT_EQ(r.max_residual, 0.0);
}

TEST(Localisation, ExactDyadHasZeroResidual) {
  const MaterialModel m = MaterialModel::constant(4.0, 1.0, 0.0);
  const Vec4 zeta = Vec4(-0.5, 0.0, 0.6, 0.8);
  const EigenStructure es = eigen_structure(m, Vec3::Zero(), zeta);
  ASSERT_NEAR(es.omega_plus, 0.0, 1e-15);
  const HMeasureEstimate mu = synthetic(zeta, dyad(es.vector(Mode::Plus1)));
  const LocalisationReport r = localisation_residual(mu, m, LocalisationSymbol::P);
  ASSERT_EQ(r.bins.size(), 1u);
  EXPECT_LT(r.max_residual, 1e-14);
  EXPECT_GT(localisation_residual(mu, m.swapped_eps_eta(), LocalisationSymbol::P).max_residual, 0.2);
}

TEST(Localisation, ConstantFamilyImprovesAlongLadderAndWrongSymbolDoesNot) {
  const MaterialModel m = MaterialModel::constant(4.0, 1.0, 0.0);
  const HMeasureEstimate mu = measure_of(m, Mode::Plus1, {0.25, 0.125, 0.0625});
  std::vector<double> r, wrong;
  for (std::size_t l = 0; l < mu.levels.size(); ++l) {
    r.push_back(localisation_residual(mu, l, m, LocalisationSymbol::P).weighted_residual);
    wrong.push_back(localisation_residual(mu, l, m.swapped_eps_eta(), LocalisationSymbol::P).weighted_residual);
  }
  EXPECT_LT(r[1], r[0]);
  EXPECT_LT(r[2], r[1]);
  for (double w : wrong) EXPECT_GT(w, 0.2);
}

TEST(Localisation, DivergenceSymbol) {
  // transverse wave along e3: B(zeta') kills the field
  const HMeasureEstimate mu = measure_of(MaterialModel::constant(1, 1, 0), Mode::Plus1);
  EXPECT_LT(localisation_residual(mu, MaterialModel::constant(1, 1, 0), LocalisationSymbol::B).weighted_residual,
            1e-10);
  const HMeasureEstimate lon = measure_of(MaterialModel::constant(1, 1, 0), Mode::LongE);
  EXPECT_GT(localisation_residual(lon, MaterialModel::constant(1, 1, 0), LocalisationSymbol::B).weighted_residual,
            0.5);
}

TEST(Support, SetDistances) {
  const SetDistances t = set_distances(Vec4(1, 0, 0, 0), 1.0);
  EXPECT_NEAR(t.zeta0_zero, kPi / 2, 1e-15);
  EXPECT_NEAR(t.zetap_zero, 0.0, 1e-15);
  EXPECT_NEAR(t.constant_declared, 0.0, 1e-15);
  const SetDistances a = set_distances(Vec4(0, 0, 0, 2), 1.0);
  EXPECT_NEAR(a.zeta0_zero, 0.0, 1e-15);
  EXPECT_NEAR(a.coordinate_planes, 0.0, 1e-15);
  EXPECT_NEAR(a.constant_declared, 0.0, 1e-15);
  const SetDistances s = set_distances(Vec4(1, 0, 0, 1), 1.0);
  EXPECT_NEAR(s.plus_sheet, 0.0, 1e-15);
  EXPECT_NEAR(s.minus_sheet, kPi / 2, 1e-15);
  EXPECT_NEAR(s.characteristic, 0.0, 1e-15);
  const SetDistances off = set_distances(Vec4(0, 1, 1, 1), 1.0);
  EXPECT_GT(off.constant_declared, 0.5);
}

TEST(Support, ConstantCaseLongitudinalWave) {
  const MaterialModel m = MaterialModel::constant(1, 1, 0);
  const SupportReport r = support_check(measure_of(m, Mode::LongE), SupportCase::Constant, m);
  EXPECT_FALSE(r.vacuous);
  EXPECT_GE(r.fraction, 0.99);
  EXPECT_GE(r.breakdown.at("zeta0=0"), 0.99);
}

TEST(Support, VariableCaseTransverseWave) {
  const MaterialModel m = MaterialModel::constant(4, 1, 0);
  const SupportReport r = support_check(measure_of(m, Mode::Minus1), SupportCase::Variable, m);
  EXPECT_GE(r.fraction, 0.99);
  EXPECT_GE(r.breakdown.at("zeta0=+v|zeta'|"), 0.99);
  EXPECT_LT(r.breakdown.at("zeta0=-v|zeta'|"), 0.01);
}

TEST(Support, ZeroMeasureIsVacuous) {
  const SupportReport r =
      support_check(synthetic(Vec4(0, 0, 0, 1), CMat6::Zero()), SupportCase::Constant, MaterialModel::constant(1, 1, 0));
  EXPECT_TRUE(r.vacuous);
  EXPECT_EQ(r.fraction, 1.0);
}

TEST(Kernel, PolarAxis) {
  const KernelReport r = kernel_lemma_check(Vec3(0, 0, 1));
  EXPECT_EQ(r.nullity, 3);
  EXPECT_TRUE(r.columns_parallel);
  EXPECT_LT(r.column_misalignment, 1e-12);
  EXPECT_GT(r.row_misalignment, 0.1);
  for (const Mat3& a : r.null_basis) {
    EXPECT_LT(a.topRows(2).norm(), 1e-12);
    EXPECT_NEAR(a.norm(), 1.0, 1e-12);
  }
}

TEST(Kernel, SingularValues) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int i = 0; i < 20; ++i) {
    const Vec3 z = 2.5 * Vec3(g(rng), g(rng), g(rng));
    const KernelReport r = kernel_lemma_check(z);
    EXPECT_EQ(r.nullity, 3);
    EXPECT_LT(r.nonzero_error, 1e-12 * z.norm());
    int equal = 0;
    for (double s : r.singular_values) equal += std::abs(s - z.norm()) < 1e-10 * z.norm();
    EXPECT_EQ(equal, 6);
  }
  EXPECT_THROW(kernel_lemma_check(Vec3::Zero()), DegenerateDirectionError);
}

TEST(Kernel, ColumnsParallelToZetaAreAnnihilated) {
  const Vec3 z(0.3, -1.0, 0.4), a(1.0, 2.0, -0.5);
  const Mat3 e = antisym_E(z);
  EXPECT_LT((e * (z * a.transpose())).norm(), 1e-15);
  EXPECT_GT((e * (a * z.transpose())).norm(), 0.1);
  Mat3 random;
  random << 1, 2, 3, -1, 0.5, 2, 0, 1, -2;
  EXPECT_GT((e * random).norm(), 0.1);
}

TEST(ConstantFit, ExactMember) {
  const Vec4 zeta = Vec4(0.2, 0.3, -0.4, 0.5).normalized();
  const Vec3 zp = zeta.tail<3>();
  CMat6 mu = CMat6::Zero();
  mu.topLeftCorner(3, 3) = (5.0 * zp * zp.transpose()).cast<cd>();
  const DensityBin f = fit_constant_bin(mu, zeta);
  EXPECT_NEAR(f.a, 5.0, 1e-13);
  EXPECT_NEAR(f.b, 0.0, 1e-15);
  EXPECT_NEAR(std::abs(f.c), 0.0, 1e-15);
  EXPECT_LT(f.residual, 1e-14);
  EXPECT_LT((reconstruct_constant(f) - mu).norm(), 1e-13);
  EXPECT_THROW(fit_constant_bin(mu, Vec4(1, 0, 0, 0)), DegenerateDirectionError);
}

TEST(ConstantFit, RandomHermitianReportsResidual) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  CMat6 x;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) x(i, j) = cd(g(rng), g(rng));
  const CMat6 mu = x * x.adjoint();
  EXPECT_GT(fit_constant_bin(mu, Vec4(0.1, 0.5, 0.5, 0.5)).residual, 0.1);
}

TEST(ConstantFit, LongitudinalWave) {
  const MaterialModel m = MaterialModel::constant(1, 1, 0);
  const DensityDecomposition d = fit_constant_decomposition(measure_of(m, Mode::LongE));
  ASSERT_FALSE(d.bins.empty());
  double a = 0, rest = 0;
  for (const auto& b : d.bins) {
    a += b.a * b.mass;
    rest += (std::abs(b.b) + std::abs(b.c) + std::abs(b.d)) * b.mass;
  }
  EXPECT_GT(a, 0.0);
  EXPECT_LT(rest, 1e-10 * a);
  EXPECT_LT(d.max_residual(), 1e-10);
  EXPECT_LT(d.conjugate_defect(), 1e-10);
}

TEST(ConstantFit, ZetaPrimeZeroBinsExcluded) {
  const HMeasureEstimate mu = synthetic(Vec4(1, 0, 0, 0), CMat6::Identity());
  const DensityDecomposition d = fit_constant_decomposition(mu);
  EXPECT_TRUE(d.bins.empty());
  EXPECT_EQ(d.excluded.size(), 1u);
  EXPECT_TRUE(fit_modal_decomposition(mu, MaterialModel::constant(1, 1, 0)).bins.empty());
}

TEST(ModalFit, SingleDyad) {
  const double eps = 2.0, eta = 0.5;
  const Vec4 zeta = Vec4(0.1, -0.3, 0.2, 0.9);
  const auto basis = eigen_basis(eps, eta, zeta.tail<3>());
  const DensityBin f = fit_modal_bin(dyad(basis[2]), zeta, eps, eta);
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(f.modal[k], k == 2 ? 1.0 : 0.0, 1e-14);
  EXPECT_LT(f.residual, 1e-14);
}

TEST(ModalFit, BlocksMatchReconstruction) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  const Vec4 zeta = Vec4(0.4, 0.2, 0.7, -0.3);
  for (auto [eps, eta] : {std::pair{1.0, 1.0}, std::pair{3.0, 0.7}}) {
    DensityBin f;
    f.direction = zeta;
    for (double& s : f.modal) s = u(rng);
    const CMat6 m = reconstruct_modal(f, eps, eta);
    const auto blocks = modal_blocks(f.modal, eps, eta, zeta.tail<3>());
    EXPECT_LT((m.topLeftCorner(3, 3).real() - blocks[0]).norm(), 1e-13);
    EXPECT_LT((m.topRightCorner(3, 3).real() - blocks[1]).norm(), 1e-13);
    EXPECT_LT((m.bottomLeftCorner(3, 3).real() - blocks[2]).norm(), 1e-13);
    EXPECT_LT((m.bottomRightCorner(3, 3).real() - blocks[3]).norm(), 1e-13);
    EXPECT_LT((blocks[2] - blocks[1].transpose()).norm(), 1e-13);
  }
}

TEST(ModalFit, UnitCoefficientsReduceToConstantForm) {
  // eps = eta = 1: sigma11 = zeta_hat zeta_hat^T a0 + transverse projector terms
  const Vec3 zp(0.3, 0.4, -0.5);
  const PropagationBasis pb = propagation_basis(zp);
  const std::array<double, 6> s{2.0, 0.0, 0.6, 0.6, 0.6, 0.6};
  const Mat3 transverse = Mat3::Identity() - pb.direction * pb.direction.transpose();
  const Mat3 expected = 2.0 * pb.direction * pb.direction.transpose() + 0.6 * transverse;
  EXPECT_LT((modal_blocks(s, 1.0, 1.0, zp)[0] - expected).norm(), 1e-14);
}

TEST(ModalFit, TransverseFamilyLandsInItsMode) {
  const MaterialModel m = MaterialModel::constant(2, 1, 0);
  for (Mode mode : {Mode::Plus1, Mode::Minus2}) {
    const DensityDecomposition d = fit_modal_decomposition(measure_of(m, mode), m);
    const auto t = d.modal_totals();
    double sum = 0;
    for (double x : t) sum += x;
    EXPECT_GE(t[static_cast<int>(mode)] / sum, 0.9) << to_string(mode);
    EXPECT_EQ(d.kind, ModelKind::ScalarSmooth);
  }
}
