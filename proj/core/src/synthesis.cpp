#include "hml/synthesis.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "hml/errors.hpp"
#include "hml/fft.hpp"

namespace hml {

namespace {

constexpr cd kI(0.0, 1.0);

Vec3 to_vec(const Eigen::Vector3i& k) { return k.cast<double>(); }

void require_constant(const MaterialModel& model, const char* what) {
  if (model.kind() != ModelKind::Constant)
    throw UnsupportedGeneratorError(std::string(what) + " requires a constant model");
}

// Signed spatial frequency (cycles per unit) of flat index n in a 3-D box.
Vec3 spatial_frequency(const GridSpec& grid, std::size_t n) {
  const int nz = grid.shape[3], ny = grid.shape[2];
  const int iz = static_cast<int>(n % nz);
  const int iy = static_cast<int>((n / nz) % ny);
  const int ix = static_cast<int>(n / (static_cast<std::size_t>(nz) * ny));
  return {grid.frequency(1, ix), grid.frequency(2, iy), grid.frequency(3, iz)};
}

std::size_t spatial_size(const GridSpec& g) {
  return static_cast<std::size_t>(g.shape[1]) * g.shape[2] * g.shape[3];
}

}  // namespace

void OscillatingFamily::validate() const {
  if (epsilons.empty()) throw MismatchError("family has no eps levels");
  for (std::size_t i = 1; i < epsilons.size(); ++i)
    if (!(epsilons[i] < epsilons[i - 1])) throw MismatchError("eps ladder must be strictly decreasing");
  if (fields.size() != epsilons.size() || peak_frequency.size() != epsilons.size())
    throw MismatchError("family arrays do not match the eps ladder");
  if (has_sources() && sources.size() != epsilons.size())
    throw MismatchError("source arrays do not match the eps ladder");
  if (has_charge() && charge.size() != epsilons.size())
    throw MismatchError("charge arrays do not match the eps ladder");
  auto check = [&](const SpacetimeField& f, int comps) {
    if (!(f.grid == grid) || f.components != comps || f.data.size() != grid.size() * comps)
      throw MismatchError("family field does not match its grid");
  };
  for (const auto& f : fields) check(f, kComponents);
  for (const auto& f : sources) check(f, kComponents);
  for (const auto& f : charge) check(f, 1);
}

std::vector<double> default_epsilon_ladder() {
  std::vector<double> out;
  for (int j = 4; j <= 8; ++j) out.push_back(std::ldexp(1.0, -j));
  return out;
}

ConstitutiveFields constitutive_fields(const MaterialModel& model, const OscillatingFamily& family) {
  ConstitutiveFields out;
  const GridSpec& g = family.grid;
  const std::size_t n = g.size();
  std::vector<Coefficients> coeff;
  coeff.reserve(n);
  for (std::size_t p = 0; p < n; ++p) coeff.push_back(model.at(g.point(p).tail<3>()));
  for (const SpacetimeField& u : family.fields) {
    SpacetimeField d(g, 3), j(g, 3), b(g, 3);
    for (int c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < n; ++p) {
        d.at(c, p) = coeff[p].eps * u.at(c, p);
        j.at(c, p) = coeff[p].sigma * u.at(c, p);
        b.at(c, p) = coeff[p].eta * u.at(c + 3, p);
      }
    out.D.push_back(std::move(d));
    out.J.push_back(std::move(j));
    out.B.push_back(std::move(b));
  }
  return out;
}

double plane_wave_frequency(const MaterialModel& model, const Eigen::Vector3i& k, Mode mode) {
  const Coefficients c = model.at(Vec3::Zero());
  return -mode_branch(mode) * c.speed() * to_vec(k).norm();
}

SpacetimeField plane_wave_level(const MaterialModel& model, const GridSpec& grid,
                                const PlaneWaveSpec& spec, double scale) {
  require_constant(model, "plane wave family");
  grid.validate();
  const Coefficients co = model.at(Vec3::Zero());
  const Vec6 b = eigen_basis(co.eps, co.eta, to_vec(spec.k))[static_cast<int>(spec.mode)];
  const double c = plane_wave_frequency(model, spec.k, spec.mode);
  const Vec4 zeta(c, spec.k[0], spec.k[1], spec.k[2]);
  const double amp = std::pow(scale, spec.amplitude_exponent);

  SpacetimeField u(grid, kComponents);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const Vec4 xt = grid.point(n);
    const double phi = spec.envelope.value(xt);
    if (phi == 0.0) continue;
    const cd w = amp * phi * std::exp(kI * (2.0 * kPi * zeta.dot(xt) / scale));
    for (int i = 0; i < kComponents; ++i) u.at(i, n) = w * b[i];
  }
  return u;
}

SpacetimeField plane_wave_sources(const MaterialModel& model, const GridSpec& grid,
                                  const PlaneWaveSpec& spec, double scale) {
  require_constant(model, "plane wave family");
  const Coefficients co = model.at(Vec3::Zero());
  const SystemMatrices sm = assemble_system_matrices(model, Vec3::Zero());
  const Vec6 b = eigen_basis(co.eps, co.eta, to_vec(spec.k))[static_cast<int>(spec.mode)];
  const double c = plane_wave_frequency(model, spec.k, spec.mode);
  const Vec4 zeta(c, spec.k[0], spec.k[1], spec.k[2]);
  const double amp = std::pow(scale, spec.amplitude_exponent);
  std::array<Vec6, 4> ab;
  for (int l = 0; l < 4; ++l) ab[l] = sm.A[l] * b;
  const Vec6 cb = sm.C * b;

  // The phase satisfies P(zeta) b = 0, so only envelope derivatives and damping remain.
  SpacetimeField f(grid, kComponents);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const Vec4 xt = grid.point(n);
    const double phi = spec.envelope.value(xt);
    const Vec4 dphi = spec.envelope.gradient(xt);
    if (phi == 0.0 && dphi.isZero(0.0)) continue;
    Vec6 r = phi * cb;
    for (int l = 0; l < 4; ++l) r += dphi[l] * ab[l];
    const cd w = amp * std::exp(kI * (2.0 * kPi * zeta.dot(xt) / scale));
    for (int i = 0; i < kComponents; ++i) f.at(i, n) = w * r[i];
  }
  return f;
}

OscillatingFamily plane_wave_family(const MaterialModel& model, const GridSpec& grid,
                                    const PlaneWaveSpec& spec, const std::vector<double>& epsilons) {
  OscillatingFamily fam;
  fam.grid = grid;
  fam.epsilons = epsilons;
  const double c = plane_wave_frequency(model, spec.k, spec.mode);
  for (double s : epsilons) {
    fam.fields.push_back(plane_wave_level(model, grid, spec, s));
    if (spec.with_sources) fam.sources.push_back(plane_wave_sources(model, grid, spec, s));
    fam.peak_frequency.push_back(
        Vec4(std::abs(c), std::abs(spec.k[0]), std::abs(spec.k[1]), std::abs(spec.k[2])) / s);
  }
  fam.generator = {{"type", "plane_wave"},
                   {"k", {spec.k[0], spec.k[1], spec.k[2]}},
                   {"mode", to_string(spec.mode)},
                   {"temporal_frequency", c},
                   {"envelope", spec.envelope.name()},
                   {"amplitude_exponent", spec.amplitude_exponent}};
  fam.validate();
  return fam;
}

SpacetimeField exact_constant_evolution(const SpatialField& initial, const MaterialModel& model,
                                        const GridSpec& grid) {
  require_constant(model, "exact evolution");
  grid.validate();
  if (initial.components != kComponents ||
      initial.shape != std::array<int, 3>{grid.shape[1], grid.shape[2], grid.shape[3]})
    throw MismatchError("initial data does not match the spatial grid");
  for (int d = 1; d < 4; ++d)
    if (!grid.periodic[d]) throw MismatchError("exact evolution needs a periodic spatial grid");

  const std::size_t ns = spatial_size(grid);
  const int nt = grid.shape[0];
  const std::array<int, 3> dims{grid.shape[1], grid.shape[2], grid.shape[3]};

  std::vector<cd> hat = initial.data;
  fft_inplace(hat, dims, kComponents, FftDirection::Forward);

  const SystemMatrices sm = assemble_system_matrices(model, Vec3::Zero());
  const Coefficients co = model.at(Vec3::Zero());
  Vec6 a0_sqrt, a0_isqrt;
  for (int i = 0; i < 3; ++i) {
    a0_sqrt[i] = std::sqrt(co.eps);
    a0_sqrt[i + 3] = std::sqrt(co.eta);
  }
  a0_isqrt = a0_sqrt.cwiseInverse();
  const Mat6 a0_inv = sm.A[0].inverse();
  const double dt = grid.spacing(0);

  SpacetimeField out(grid, kComponents);
  for (std::size_t s = 0; s < ns; ++s) {
    CVec6 u0;
    for (int c = 0; c < kComponents; ++c) u0[c] = hat[c * ns + s];
    if (u0.isZero(0.0)) continue;
    const Vec3 xi = spatial_frequency(grid, s);
    Mat6 sum = Mat6::Zero();
    for (int j = 0; j < 3; ++j) sum += xi[j] * sm.A[j + 1];

    auto store = [&](int n, const CVec6& v) {
      for (int c = 0; c < kComponents; ++c) out.data[c * grid.size() + n * ns + s] = v[c];
    };

    if (co.sigma == 0.0) {
      // A0^{1/2} L A0^{-1/2} is symmetric: exact unitary phases.
      const Mat6 sym = a0_isqrt.asDiagonal() * sum * a0_isqrt.asDiagonal();
      Eigen::SelfAdjointEigenSolver<Mat6> es(sym);
      const CVec6 w0 = es.eigenvectors().transpose().cast<cd>() * (a0_sqrt.cast<cd>().asDiagonal() * u0);
      for (int n = 0; n < nt; ++n) {
        const double t = n * dt;
        CVec6 w;
        for (int i = 0; i < 6; ++i) w[i] = std::exp(-2.0 * kPi * kI * es.eigenvalues()[i] * t) * w0[i];
        store(n, a0_isqrt.cast<cd>().asDiagonal() * (es.eigenvectors().cast<cd>() * w));
      }
    } else {
      const CMat6 k = (a0_inv * sm.C).cast<cd>() + 2.0 * kPi * kI * (a0_inv * sum).cast<cd>();
      const CMat6 step = (-dt * k).exp();
      CVec6 v = u0;
      for (int n = 0; n < nt; ++n) {
        store(n, v);
        v = step * v;
      }
    }
  }
  fft_inplace(out.data, dims, kComponents * nt, FftDirection::Inverse);
  const double norm = 1.0 / static_cast<double>(ns);
  for (cd& v : out.data) v *= norm;
  return out;
}

SpacetimeField exact_solution_level(const MaterialModel& model, const GridSpec& grid,
                                    const ExactSolutionSpec& spec, double scale) {
  require_constant(model, "exact solution family");
  const Coefficients co = model.at(Vec3::Zero());
  const Vec3 k = to_vec(spec.k);
  const Vec6 b = eigen_basis(co.eps, co.eta, k)[static_cast<int>(spec.mode)];
  SpatialField init = spatial_slice_shape(grid, kComponents);
  for (std::size_t n = 0; n < init.size(); ++n) {
    const Vec3 x = init.point(n);
    const double phi = spec.envelope.value(Vec4(grid.origin[0], x[0], x[1], x[2]));
    const cd w = phi * std::exp(kI * (2.0 * kPi * k.dot(x) / scale));
    for (int i = 0; i < kComponents; ++i) init.at(i, n) = w * b[i];
  }
  return exact_constant_evolution(init, model, grid);
}

OscillatingFamily exact_solution_family(const MaterialModel& model, const GridSpec& grid,
                                        const ExactSolutionSpec& spec,
                                        const std::vector<double>& epsilons) {
  OscillatingFamily fam;
  fam.grid = grid;
  fam.epsilons = epsilons;
  const Coefficients co = model.at(Vec3::Zero());
  const Vec3 k = to_vec(spec.k);
  for (double s : epsilons) {
    fam.fields.push_back(exact_solution_level(model, grid, spec, s));
    fam.peak_frequency.push_back(
        Vec4(co.speed() * k.norm(), std::abs(k[0]), std::abs(k[1]), std::abs(k[2])) / s);
  }
  fam.generator = {{"type", "exact_solution"},
                   {"k", {spec.k[0], spec.k[1], spec.k[2]}},
                   {"mode", to_string(spec.mode)},
                   {"envelope", spec.envelope.name()}};
  fam.validate();
  return fam;
}

Phase Phase::linear(const Vec4& zeta) {
  Phase p;
  p.value = [zeta](const Vec4& xt) { return zeta.dot(xt); };
  p.gradient = [zeta](const Vec4&) { return zeta; };
  p.description = "linear";
  return p;
}

Phase Phase::stratified(const MaterialModel& model, int branch, double c, const Vec3& reference,
                        double z_lo, double z_hi) {
  if (branch != 1 && branch != -1) throw Error("stratified phase needs branch +1 or -1");
  if (!(z_hi > z_lo)) throw Error("stratified phase needs z_hi > z_lo");
  constexpr int kPanels = 2048;
  static constexpr std::array<double, 5> node{0.0, -0.5384693101056831, 0.5384693101056831,
                                              -0.9061798459386640, 0.9061798459386640};
  static constexpr std::array<double, 5> weight{0.5688888888888889, 0.4786286704993665,
                                                0.4786286704993665, 0.2369268850561891,
                                                0.2369268850561891};
  auto slowness = [model, reference](double z) {
    return 1.0 / model.at(Vec3(reference[0], reference[1], z)).speed();
  };
  auto gauss = [slowness](double a, double b) {
    const double m = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (int q = 0; q < 5; ++q) s += weight[q] * slowness(m + h * node[q]);
    return s * h;
  };
  const double width = (z_hi - z_lo) / kPanels;
  auto table = std::make_shared<std::vector<double>>(kPanels + 1, 0.0);
  for (int i = 0; i < kPanels; ++i)
    (*table)[i + 1] = (*table)[i] + gauss(z_lo + i * width, z_lo + (i + 1) * width);

  auto integral = [=](double z) {
    if (z < z_lo - 1e-12 * width || z > z_hi + 1e-12 * width)
      throw DomainError("stratified phase evaluated outside its table");
    const int i = std::clamp(static_cast<int>((z - z_lo) / width), 0, kPanels - 1);
    const double a = z_lo + i * width;
    return (*table)[i] + gauss(a, z);
  };
  Phase p;
  p.value = [=](const Vec4& xt) { return c * (integral(xt[3]) - branch * xt[0]); };
  p.gradient = [=](const Vec4& xt) {
    return Vec4(-c * branch, 0.0, 0.0, c * slowness(xt[3]));
  };
  p.description = "stratified";
  return p;
}

SpacetimeField wkb_level(const MaterialModel& model, const GridSpec& grid, const WkbSpec& spec,
                         double scale, SpacetimeField* sources, Vec4* peak) {
  grid.validate();
  if (!spec.phase.value || !spec.phase.gradient) throw Error("wkb family needs a phase");
  const int mode = static_cast<int>(spec.mode);
  const double h = 1e-6;

  auto polarization = [&](const Vec4& xt) {
    const Vec4 g = spec.phase.gradient(xt);
    const Coefficients co = model.at(xt.tail<3>());
    return eigen_basis(co.eps, co.eta, g.tail<3>())[mode];
  };

  SpacetimeField u(grid, kComponents);
  if (sources) *sources = SpacetimeField(grid, kComponents);
  Vec4 top = Vec4::Zero();
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const Vec4 xt = grid.point(n);
    const double a = spec.amplitude.value(xt);
    const Vec4 da = spec.amplitude.gradient(xt);
    if (a == 0.0 && da.isZero(0.0)) continue;
    const Vec4 g = spec.phase.gradient(xt);
    if (!(g.tail<3>().norm() > 0.0))
      throw DegenerateDirectionError("wkb phase has vanishing spatial gradient on the amplitude support");
    top = top.cwiseMax(g.cwiseAbs());
    const Vec6 b = polarization(xt);
    const cd e = std::exp(kI * (2.0 * kPi * spec.phase.value(xt) / scale));
    for (int i = 0; i < kComponents; ++i) u.at(i, n) = a * e * b[i];
    if (!sources) continue;

    const SystemMatrices sm = assemble_system_matrices(model, xt.tail<3>());
    CVec6 r = (sm.C * (a * b)).cast<cd>();
    for (int l = 0; l < 4; ++l) {
      const Vec4 step = h * Vec4::Unit(l);
      const Vec6 db = (polarization(xt + step) - polarization(xt - step)) / (2.0 * h);
      r += (sm.A[l] * (da[l] * b + a * db)).cast<cd>();
    }
    const Mat6 p = assemble_P(model, xt.tail<3>(), g);
    r += (2.0 * kPi * kI / scale) * (a * (p * b)).cast<cd>();
    for (int i = 0; i < kComponents; ++i) sources->at(i, n) = e * r[i];
  }
  if (peak) *peak = top / scale;
  return u;
}

OscillatingFamily wkb_family(const MaterialModel& model, const GridSpec& grid, const WkbSpec& spec,
                             const std::vector<double>& epsilons) {
  OscillatingFamily fam;
  fam.grid = grid;
  fam.epsilons = epsilons;
  for (double s : epsilons) {
    SpacetimeField f;
    Vec4 peak;
    fam.fields.push_back(wkb_level(model, grid, spec, s, spec.with_sources ? &f : nullptr, &peak));
    if (spec.with_sources) fam.sources.push_back(std::move(f));
    fam.peak_frequency.push_back(peak);
  }
  fam.generator = {{"type", "wkb"},
                   {"phase", spec.phase.description},
                   {"mode", to_string(spec.mode)},
                   {"amplitude", spec.amplitude.name()}};
  fam.validate();
  return fam;
}

SpacetimeField charge_density(const SpacetimeField& u) {
  const GridSpec& g = u.grid;
  const std::size_t ns = spatial_size(g);
  const int nt = g.shape[0];
  const std::array<int, 3> dims{g.shape[1], g.shape[2], g.shape[3]};
  std::vector<cd> e(u.data.begin(), u.data.begin() + 3 * g.size());
  fft_inplace(e, dims, 3 * nt, FftDirection::Forward);

  SpacetimeField rho(g, 1);
  for (int n = 0; n < nt; ++n)
    for (std::size_t s = 0; s < ns; ++s) {
      const std::size_t iz = s % g.shape[3];
      const std::size_t iy = (s / g.shape[3]) % g.shape[2];
      const std::size_t ix = s / (static_cast<std::size_t>(g.shape[3]) * g.shape[2]);
      const std::array<std::size_t, 3> idx{ix, iy, iz};
      const Vec3 xi = spatial_frequency(g, s);
      cd acc = 0.0;
      for (int j = 0; j < 3; ++j) {
        if (2 * idx[j] == static_cast<std::size_t>(dims[j])) continue;  // Nyquist
        acc += 2.0 * kPi * kI * xi[j] * e[j * g.size() + n * ns + s];
      }
      rho.data[n * ns + s] = acc;
    }
  fft_inplace(rho.data, dims, nt, FftDirection::Inverse);
  for (cd& v : rho.data) v /= static_cast<double>(ns);
  return rho;
}

void attach_charge(OscillatingFamily& family) {
  family.charge.clear();
  for (const SpacetimeField& u : family.fields) family.charge.push_back(charge_density(u));
}

std::vector<double> weak_pairing(const OscillatingFamily& family, const Window& w) {
  const GridSpec& g = family.grid;
  const std::vector<double> ws = sample_window(w, g);
  std::vector<double> out;
  for (const SpacetimeField& u : family.fields) {
    double m = 0.0;
    for (int c = 0; c < u.components; ++c) {
      cd s = 0.0;
      for (std::size_t n = 0; n < g.size(); ++n) s += u.at(c, n) * ws[n];
      m = std::max(m, std::abs(s) * g.cell_volume());
    }
    out.push_back(m);
  }
  return out;
}

}  // namespace hml
