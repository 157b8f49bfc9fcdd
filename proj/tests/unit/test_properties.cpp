// Randomized invariants across the pipeline.
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "hml/estimator.hpp"
#include "hml/symbols.hpp"
#include "hml/synthesis.hpp"
#include "hml/transport.hpp"
#include "hml/verifier.hpp"

using namespace hml;

namespace {

constexpr int kSeeds = 4;

GridSpec wave_grid() {
  GridSpec g;
  g.extents = {0.5, 1.0, 1.0, 1.0};
  g.shape = {32, 32, 8, 32};
  g.periodic = {false, true, true, true};
  return g;
}

const std::vector<double> kLadder{0.25, 0.125};

Mode random_mode(std::mt19937_64& rng) {
  static const Mode modes[] = {Mode::LongE, Mode::LongH, Mode::Plus1, Mode::Plus2, Mode::Minus1, Mode::Minus2};
  return modes[std::uniform_int_distribution<int>(0, 5)(rng)];
}

Eigen::Vector3i random_k(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(-1, 1);
  Eigen::Vector3i k;
  do k = Eigen::Vector3i(d(rng), 0, d(rng));
  while (k.isZero());
  return k;
}

// Two plane waves with complex weights on a shared grid.
OscillatingFamily superposition(const MaterialModel& m, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  OscillatingFamily sum;
  for (int w = 0; w < 2; ++w) {
    PlaneWaveSpec spec;
    spec.k = random_k(rng);
    spec.mode = random_mode(rng);
    spec.with_sources = false;
    OscillatingFamily f = plane_wave_family(m, wave_grid(), spec, kLadder);
    const cd c(n(rng), n(rng));
    for (auto& lvl : f.fields)
      for (auto& v : lvl.data) v *= c;
    if (w == 0) {
      sum = f;
      continue;
    }
    for (std::size_t l = 0; l < f.fields.size(); ++l) {
      for (std::size_t i = 0; i < f.fields[l].data.size(); ++i) sum.fields[l].data[i] += f.fields[l].data[i];
      sum.peak_frequency[l] = sum.peak_frequency[l].cwiseMax(f.peak_frequency[l]);
    }
  }
  return sum;
}

Window time_taper() { return Window::fitted(wave_grid(), {true, false, false, false}); }

CMat6 random_psd(std::mt19937_64& rng, int rank) {
  std::normal_distribution<double> n;
  CMat6 m = CMat6::Zero();
  for (int r = 0; r < rank; ++r) {
    CVec6 v;
    for (int i = 0; i < 6; ++i) v[i] = cd(n(rng), n(rng));
    m += v * v.adjoint();
  }
  return m;
}

Vec4 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vec4 z;
  do z = Vec4(n(rng), n(rng), n(rng), n(rng));
  while (z.tail<3>().norm() < 0.1);
  return z.normalized();
}

}  // namespace

TEST(Properties, EstimatesAreHermitianPsdAndConserveMass) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    SCOPED_TRACE(seed);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(1.0, 2.0);
    const MaterialModel m = MaterialModel::constant(u(rng), u(rng), 0.0);
    const OscillatingFamily fam = superposition(m, rng);
    const Window phi = time_taper();
    const HMeasureEstimate mu = estimate_hmeasure(fam, phi, phi, SphereGrid(6, 6, 12));
    const InvariantReport inv = check_invariants(mu);
    EXPECT_TRUE(inv.hermitian_ok) << inv.hermitian_defect;
    EXPECT_TRUE(inv.psd_ok) << inv.min_eigen_ratio;
    for (const auto& lvl : mu.levels) {
      double tr = lvl.dc.trace().real();
      for (const auto& b : lvl.bins) tr += b.trace().real();
      EXPECT_NEAR(tr / lvl.field_energy, 1.0, 1e-10);
    }
    // plane waves of a constant medium concentrate on the characteristic set
    const SupportReport s = support_check(mu, SupportCase::Variable, m);
    EXPECT_GE(s.fraction, 0.95);
  }
}

TEST(Properties, EstimateScalesQuadratically) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    SCOPED_TRACE(seed);
    std::mt19937_64 rng(100 + seed);
    const MaterialModel m = MaterialModel::constant(1.5, 1.0, 0.0);
    OscillatingFamily fam = superposition(m, rng);
    const Window phi = time_taper();
    const SphereGrid sphere(4, 4, 8);
    const HMeasureEstimate mu = estimate_hmeasure(fam, phi, phi, sphere);
    std::normal_distribution<double> n;
    const cd c(n(rng), n(rng));
    for (auto& lvl : fam.fields)
      for (auto& v : lvl.data) v *= c;
    const HMeasureEstimate mc = estimate_hmeasure(fam, phi, phi, sphere);
    const double scale = std::norm(c);
    for (std::size_t l = 0; l < mu.levels.size(); ++l) {
      const double floor = 1e-14 * mu.levels[l].field_energy;
      for (int i = 0; i < sphere.size(); ++i) {
        const double ref = std::max(mu.levels[l].bins[i].norm(), floor);
        EXPECT_LE((mc.levels[l].bins[i] - scale * mu.levels[l].bins[i]).norm(), 1e-10 * scale * ref);
      }
    }
  }
}

TEST(Properties, LongitudinalWavesMeetTheConstantSupport) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    SCOPED_TRACE(seed);
    std::mt19937_64 rng(200 + seed);
    PlaneWaveSpec spec;
    spec.mode = seed % 2 ? Mode::LongH : Mode::LongE;
    spec.k = Eigen::Vector3i::Zero();
    spec.k[seed % 2 ? 0 : 2] = std::bernoulli_distribution()(rng) ? 1 : -1;
    spec.with_sources = false;
    const MaterialModel m = MaterialModel::constant(2.0, 1.0, 0.0);
    const OscillatingFamily fam = plane_wave_family(m, wave_grid(), spec, kLadder);
    const HMeasureEstimate mu = estimate_hmeasure(fam, time_taper(), time_taper(), SphereGrid(8, 8, 16));
    EXPECT_GE(support_check(mu, SupportCase::Constant, m).fraction, 0.99);
  }
}

TEST(Properties, ConstantFitsOfPsdMeasures) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const CMat6 mu = random_psd(rng, 1 + trial % 6);
    const Vec4 z = random_direction(rng);
    const double tr = mu.trace().real();
    const DensityBin f = fit_constant_bin(mu, z);
    EXPECT_GE(f.a, -1e-10 * tr);
    EXPECT_GE(f.b, -1e-10 * tr);
    EXPECT_LE(std::abs(f.c - std::conj(f.d)), 1e-10 * tr);
    const DensityBin g = fit_constant_bin(reconstruct_constant(f), z);
    const double scale = std::max({std::abs(f.a), std::abs(f.b), std::abs(f.c), 1e-300});
    EXPECT_LE(std::abs(g.a - f.a), 1e-12 * scale);
    EXPECT_LE(std::abs(g.b - f.b), 1e-12 * scale);
    EXPECT_LE(std::abs(g.c - f.c), 1e-12 * scale);
    EXPECT_LE(std::abs(g.d - f.d), 1e-12 * scale);
  }
}

TEST(Properties, ModalFitsOfPsdMeasures) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const CMat6 mu = random_psd(rng, 1 + trial % 6);
    const Vec4 z = random_direction(rng);
    const double eps = u(rng), eta = u(rng);
    const double tr = mu.trace().real();
    const DensityBin f = fit_modal_bin(mu, z, eps, eta);
    for (double c : f.modal) EXPECT_GE(c, -1e-10 * tr);
    const DensityBin g = fit_modal_bin(reconstruct_modal(f, eps, eta), z, eps, eta);
    double scale = 1e-300;
    for (double c : f.modal) scale = std::max(scale, std::abs(c));
    for (int k = 0; k < 6; ++k) EXPECT_LE(std::abs(g.modal[k] - f.modal[k]), 1e-12 * scale);
  }
}

TEST(Properties, KernelSingularValues) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> r(0.1, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 zp = Vec3(n(rng), n(rng), n(rng)).normalized() * r(rng);
    const KernelReport k = kernel_lemma_check(zp);
    EXPECT_EQ(k.nullity, 3);
    EXPECT_TRUE(k.columns_parallel);
    std::array<double, 9> sv = k.singular_values;
    std::sort(sv.begin(), sv.end());
    for (int i = 0; i < 3; ++i) EXPECT_LE(sv[i], 1e-12 * zp.norm());
    for (int i = 3; i < 9; ++i) EXPECT_NEAR(sv[i], zp.norm(), 1e-12 * zp.norm());
  }
}

TEST(Properties, FrequencyIsConstantAlongRays) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const MaterialModel m = MaterialModel::scalar(ScalarField::expression("2 + 0.3*sin(2*x1 + x3)"),
                                                ScalarField::expression("1.5 + 0.2*cos(x2)"),
                                                ScalarField::constant(0.0));
  for (int trial = 0; trial < 10; ++trial) {
    RayState s;
    s.x = Vec3(u(rng), u(rng), u(rng));
    s.branch = trial % 2 ? 1 : -1;
    Vec3 zp(u(rng), u(rng), u(rng));
    if (zp.norm() < 0.2) zp = Vec3(0, 0, 1);
    // start on the characteristic sheet of the chosen branch
    s.zeta << -s.branch * m.at(s.x).speed() * zp.norm(), zp;
    const Trajectory tr = integrate_ray(m, s, 0.5);
    ASSERT_EQ(tr.status, RayStatus::Completed);
    const double h0 = hamiltonian(m, tr.states.front());
    for (const auto& st : tr.states) {
      EXPECT_NEAR(hamiltonian(m, st), h0, 1e-8);
      EXPECT_EQ(st.zeta[0], s.zeta[0]);
    }
  }
}

TEST(Properties, ConstantMediumRaysKeepTheirDirection) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const MaterialModel m = MaterialModel::constant(2.0, 0.5, 0.0);
  for (int trial = 0; trial < 10; ++trial) {
    RayState s;
    s.branch = trial % 2 ? 1 : -1;
    s.zeta = Vec4(u(rng), u(rng), u(rng), u(rng) + 2.0);
    const Trajectory tr = integrate_ray(m, s, 1.0);
    for (const auto& st : tr.states) {
      EXPECT_LE((st.zeta - s.zeta).norm(), 1e-12);
      EXPECT_EQ(std::signbit(st.zeta[0]), std::signbit(s.zeta[0]));
    }
    // straight line at the group velocity
    const Vec3 v = s.branch * m.at(Vec3::Zero()).speed() * s.zeta.tail<3>().normalized();
    const RayState& last = tr.states.back();
    EXPECT_LE((last.x - (s.x + last.t * v)).norm(), 1e-10);
  }
}

namespace {

struct Profile {
  double rate;
  Vec3 lin, quad;
  Vec4 g_lin;
  double f(double t, const Vec3& x) const {
    return std::exp(rate * t) * (1.0 + lin.dot(x) + quad.dot(x.cwiseProduct(x)));
  }
  double G(const Vec4& z) const { return 1.0 + g_lin.dot(z) + z[0] * z[3]; }
};

double constant_rows_residual(int level, std::uint64_t seed) {
  TransportLattice lat;
  const int nt = 4 << level;
  for (int i = 0; i <= nt; ++i) lat.times.push_back(0.4 * i / nt);
  lat.sites = {3, 1, 3};
  lat.origin = Vec3(-0.1, 0.0, -0.1);
  lat.spacing = Vec3(0.1, 0.1, 0.1);
  lat.sphere = SphereGrid(4 << level, 4 << level, 8 << level);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::array<Profile, 4> p;
  for (auto& q : p) {
    q.rate = 1.0 + u(rng);
    q.lin = Vec3(u(rng), 0.0, u(rng));
    q.quad = Vec3(u(rng), 0.0, u(rng));
    q.g_lin = Vec4(u(rng), u(rng), u(rng), u(rng));
  }
  const MaterialModel m = MaterialModel::constant(1.0 + u(rng) + 0.5, 1.5, 0.5 + u(rng));
  const Coefficients co = m.at(Vec3::Zero());

  ConstantDensityField f{lat, std::vector<double>(lat.size()), std::vector<double>(lat.size()),
                         std::vector<cd>(lat.size()), std::vector<cd>(lat.size())};
  MeasureSamples src{lat, std::vector<CMat6>(lat.size(), CMat6::Zero())};
  for (std::size_t n = 0; n < lat.times.size(); ++n)
    for (std::size_t s = 0; s < lat.site_count(); ++s)
      for (int bin = 0; bin < lat.sphere.size(); ++bin) {
        const Vec4& z = lat.sphere.cell(bin).center;
        const double zp2 = z.tail<3>().squaredNorm();
        std::array<double, 4> v, vt;
        for (int k = 0; k < 4; ++k) {
          v[k] = p[k].f(lat.times[n], lat.position(s)) * p[k].G(z);
          vt[k] = p[k].rate * v[k];
        }
        const std::size_t i = lat.index(n, s, bin);
        f.a[i] = v[0];
        f.c[i] = v[1];
        f.b[i] = v[2];
        f.d[i] = v[3];
        const double ra = zp2 * (-co.eps * vt[0] - 2.0 * co.sigma * v[0]);
        const double rc = -zp2 * co.eps * vt[1];
        const double rb = -zp2 * co.eta * vt[2];
        const double rd = zp2 * (co.eta * vt[3] - 2.0 * co.sigma * v[3]);
        src.values[i].block<3, 3>(0, 0) = CMat3::Identity() * (ra / 6.0);
        src.values[i].block<3, 3>(0, 3) = CMat3::Identity() * (rc / 6.0);
        src.values[i].block<3, 3>(3, 3) = CMat3::Identity() * (rb / 6.0);
        src.values[i].block<3, 3>(3, 0) = CMat3::Identity() * (rd / 6.0);
      }
  const TransportResidualReport r = constant_transport_residual(f, m, &src, default_test_battery());
  double sum = 0.0;
  for (const auto& row : r.rows) sum += std::norm(row.residual);
  return std::sqrt(sum);
}

}  // namespace

TEST(Properties, ManufacturedResidualsConvergeAtSecondOrder) {
  for (std::uint64_t seed : {21u, 22u}) {
    SCOPED_TRACE(seed);
    const double e0 = constant_rows_residual(0, seed), e1 = constant_rows_residual(1, seed),
                 e2 = constant_rows_residual(2, seed);
    EXPECT_GE(std::log2(e0 / e1), 1.8) << e0 << " " << e1;
    EXPECT_GE(std::log2(e1 / e2), 1.8) << e1 << " " << e2;
  }
}

TEST(Properties, PredictionDiscrepancyShrinksAlongTheLadder) {
  GridSpec grid;
  grid.extents = {1.0, 0.125, 0.125, 0.25};
  grid.shape = {256, 8, 8, 64};
  for (double sigma : {0.0, 1.0})
    for (Mode mode : {Mode::LongE, Mode::Plus1}) {
      SCOPED_TRACE(sigma);
      SCOPED_TRACE(to_string(mode));
      ExactSolutionSpec spec;
      spec.k = Eigen::Vector3i(0, 0, 1);
      spec.mode = mode;
      const MaterialModel m = MaterialModel::constant(1.0, 1.0, sigma);
      const OscillatingFamily fam = exact_solution_family(m, grid, spec, {0.0625, 0.03125, 0.015625});
      PredictOptions opts;
      opts.half_width = 0.25;
      const PredictReport r = predict_then_compare(fam, m, 0.25, 0.5, opts);
      ASSERT_EQ(r.levels.size(), 3u);
      // exact families leave only round-off, which need not shrink
      for (std::size_t l = 1; l < r.levels.size(); ++l)
        EXPECT_LE(r.levels[l].discrepancy, r.levels[l - 1].discrepancy + 1e-12) << l;
      EXPECT_LE(r.levels.back().discrepancy, 1e-10);
    }
}
