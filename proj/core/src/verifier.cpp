#include "hml/verifier.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "hml/errors.hpp"

namespace hml {

namespace {

double level_mass(const CMat6& m, bool hermitian) { return hermitian ? m.trace().real() : m.norm(); }

LocalisationReport localise(const std::vector<CMat6>& bins, const std::vector<Vec4>& centroids,
                            bool hermitian, const Vec3& x, const MaterialModel& model,
                            LocalisationSymbol symbol, double relative_mass) {
  LocalisationReport r;
  double total = 0.0;
  for (const CMat6& m : bins) total += level_mass(m, hermitian);
  const double cutoff = relative_mass * total;
  double weighted = 0.0, mass_sum = 0.0;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const double mass = level_mass(bins[i], hermitian);
    if (!(mass > cutoff) || !(total > 0.0)) {
      ++r.absent;
      continue;
    }
    const Vec4& z = centroids[i];
    const Mat6 s = symbol == LocalisationSymbol::P ? assemble_P(model, x, z)
                                                   : assemble_divergence_symbol(z.tail<3>());
    const double res = (s.cast<cd>() * bins[i]).norm() / bins[i].norm();
    r.bins.push_back({static_cast<int>(i), mass, res});
    r.max_residual = std::max(r.max_residual, res);
    weighted += mass * res;
    mass_sum += mass;
  }
  r.weighted_residual = mass_sum > 0.0 ? weighted / mass_sum : 0.0;
  return r;
}

Vec3 spatial_centroid(const HMeasureEstimate& mu) { return mu.window_centroid.tail<3>(); }

}  // namespace

LocalisationReport localisation_residual(const HMeasureEstimate& mu, const MaterialModel& model,
                                         LocalisationSymbol symbol, double relative_mass) {
  return localise(mu.bins, mu.centroids, mu.hermitian, spatial_centroid(mu), model, symbol,
                  relative_mass);
}

LocalisationReport localisation_residual(const HMeasureEstimate& mu, std::size_t level,
                                         const MaterialModel& model, LocalisationSymbol symbol,
                                         double relative_mass) {
  const HMeasureLevel& lvl = mu.levels.at(level);
  std::vector<Vec4> centroids(lvl.moment.size());
  for (std::size_t i = 0; i < centroids.size(); ++i)
    centroids[i] = lvl.moment[i].norm() > 0.0 ? Vec4(lvl.moment[i].normalized())
                                              : mu.sphere.cell(static_cast<int>(i)).center;
  return localise(lvl.bins, centroids, mu.hermitian, spatial_centroid(mu), model, symbol,
                  relative_mass);
}

SetDistances set_distances(const Vec4& zeta, double speed) {
  const Vec4 z = zeta.normalized();
  const double z0 = std::clamp(std::abs(z[0]), 0.0, 1.0);
  SetDistances d;
  d.zeta0_zero = std::asin(z0);
  d.zetap_zero = std::acos(z0);
  const double m = std::min({std::abs(z[1]), std::abs(z[2]), std::abs(z[3])});
  d.coordinate_planes = std::asin(std::min(m, 1.0));
  const double latitude = std::asin(std::clamp(z[0], -1.0, 1.0));
  const double sheet = std::atan(speed);
  d.plus_sheet = std::abs(latitude - sheet);
  d.minus_sheet = std::abs(latitude + sheet);
  double pair = 1e300;
  for (int i = 1; i <= 3; ++i)
    pair = std::min(pair, std::asin(std::min(1.0, std::hypot(z[0], z[i]))));
  d.constant_declared = std::min(pair, d.zetap_zero);
  d.characteristic = std::min({d.zeta0_zero, d.plus_sheet, d.minus_sheet});
  return d;
}

SupportReport support_check(const HMeasureEstimate& mu, SupportCase which, const MaterialModel& model,
                            double widths) {
  SupportReport r;
  r.tolerance = widths * mu.sphere.bin_width();
  const double v = model.at(spatial_centroid(mu)).speed();
  std::map<std::string, double> near{{"zeta0=0", 0.0},
                                     {"zeta'=0", 0.0},
                                     {"zeta1*zeta2*zeta3=0", 0.0},
                                     {"zeta0=+v|zeta'|", 0.0},
                                     {"zeta0=-v|zeta'|", 0.0}};
  double inside = 0.0;
  for (std::size_t i = 0; i < mu.bins.size(); ++i) {
    const double mass = mu.bin_mass(static_cast<int>(i));
    if (!(mass > 0.0)) continue;
    r.total_mass += mass;
    const SetDistances d = set_distances(mu.centroids[i], v);
    const double declared = which == SupportCase::Constant ? d.constant_declared : d.characteristic;
    if (declared <= r.tolerance) inside += mass;
    if (d.zeta0_zero <= r.tolerance) near["zeta0=0"] += mass;
    if (d.zetap_zero <= r.tolerance) near["zeta'=0"] += mass;
    if (d.coordinate_planes <= r.tolerance) near["zeta1*zeta2*zeta3=0"] += mass;
    if (d.plus_sheet <= r.tolerance) near["zeta0=+v|zeta'|"] += mass;
    if (d.minus_sheet <= r.tolerance) near["zeta0=-v|zeta'|"] += mass;
  }
  r.vacuous = !(r.total_mass > 0.0);
  r.fraction = r.vacuous ? 1.0 : inside / r.total_mass;
  for (auto& [k, m] : near) r.breakdown[k] = r.vacuous ? 0.0 : m / r.total_mass;
  return r;
}

KernelReport kernel_lemma_check(const Vec3& zeta_p, double tol) {
  const double n = zeta_p.norm();
  if (!(n > 0.0)) throw DegenerateDirectionError("kernel lemma needs zeta' != 0");
  // vec(E A) = (I kron E) vec(A), column-major vec.
  Eigen::Matrix<double, 9, 9> op = Eigen::Matrix<double, 9, 9>::Zero();
  const Mat3 e = antisym_E(zeta_p);
  for (int j = 0; j < 3; ++j) op.block<3, 3>(3 * j, 3 * j) = e;
  Eigen::JacobiSVD<Eigen::Matrix<double, 9, 9>> svd(op, Eigen::ComputeFullV);

  KernelReport r;
  const auto& s = svd.singularValues();
  for (int i = 0; i < 9; ++i) r.singular_values[i] = s[i];
  const double thresh = tol * std::max(1.0, n);
  for (int i = 0; i < 9; ++i) {
    if (s[i] <= thresh)
      ++r.nullity;
    else
      r.nonzero_error = std::max(r.nonzero_error, std::abs(s[i] - n));
  }
  const Vec3 hat = zeta_p / n;
  for (int k = 9 - r.nullity; k < 9; ++k) {
    const Eigen::Matrix<double, 9, 1> col = svd.matrixV().col(k);
    const Mat3 a = Eigen::Map<const Mat3>(col.data());
    r.null_basis.push_back(a);
    const double norm = a.norm();
    for (int j = 0; j < 3; ++j) {
      r.column_misalignment = std::max(r.column_misalignment, a.col(j).cross(hat).norm() / norm);
      r.row_misalignment =
          std::max(r.row_misalignment, Vec3(a.row(j).transpose()).cross(hat).norm() / norm);
    }
  }
  r.columns_parallel = r.nullity == 3 && r.column_misalignment <= 1e3 * tol;
  return r;
}

double DensityDecomposition::max_residual() const {
  double m = 0.0;
  for (const auto& b : bins) m = std::max(m, b.residual);
  return m;
}

double DensityDecomposition::conjugate_defect() const {
  double m = 0.0;
  for (const auto& b : bins) {
    const double scale = std::abs(b.a) + std::abs(b.b);
    if (scale > 0.0) m = std::max(m, std::abs(b.c - std::conj(b.d)) / scale);
  }
  return m;
}

std::array<double, 6> DensityDecomposition::modal_totals() const {
  std::array<double, 6> t{};
  for (const auto& b : bins)
    for (int k = 0; k < 6; ++k) t[k] += b.modal[k];
  return t;
}

DensityBin fit_constant_bin(const CMat6& mu, const Vec4& zeta) {
  const Vec3 zp = zeta.tail<3>();
  const double n2 = zp.squaredNorm();
  if (!(n2 > 0.0)) throw DegenerateDirectionError("constant decomposition needs zeta' != 0");
  const Eigen::Vector3cd z = zp.cast<cd>();
  auto coeff = [&](int r, int c) {
    const CMat3 blk = mu.block<3, 3>(r, c);
    return cd((z.transpose() * blk * z)(0, 0)) / (n2 * n2);
  };
  DensityBin out;
  out.direction = zeta;
  out.mass = mu.trace().real();
  out.a = coeff(0, 0).real();
  out.c = coeff(0, 3);
  out.d = coeff(3, 0);
  out.b = coeff(3, 3).real();
  const double norm = mu.norm();
  out.residual = norm > 0.0 ? (mu - reconstruct_constant(out)).norm() / norm : 0.0;
  return out;
}

CMat6 reconstruct_constant(const DensityBin& fit) {
  const Vec3 zp = fit.direction.tail<3>();
  const CMat3 q = (zp * zp.transpose()).cast<cd>();
  CMat6 m;
  m.block<3, 3>(0, 0) = fit.a * q;
  m.block<3, 3>(0, 3) = fit.c * q;
  m.block<3, 3>(3, 0) = fit.d * q;
  m.block<3, 3>(3, 3) = fit.b * q;
  return m;
}

DensityBin fit_modal_bin(const CMat6& mu, const Vec4& zeta, double eps, double eta) {
  const auto basis = eigen_basis(eps, eta, zeta.tail<3>());
  Vec6 a0;
  a0 << eps, eps, eps, eta, eta, eta;
  DensityBin out;
  out.direction = zeta;
  out.mass = mu.trace().real();
  for (int k = 0; k < 6; ++k) {
    const Eigen::Matrix<cd, 6, 1> w = a0.cwiseProduct(basis[k]).cast<cd>();
    out.modal[k] = (w.transpose() * mu * w)(0, 0).real();
  }
  const double norm = mu.norm();
  out.residual = norm > 0.0 ? (mu - reconstruct_modal(out, eps, eta)).norm() / norm : 0.0;
  return out;
}

CMat6 reconstruct_modal(const DensityBin& fit, double eps, double eta) {
  const auto basis = eigen_basis(eps, eta, fit.direction.tail<3>());
  Mat6 m = Mat6::Zero();
  for (int k = 0; k < 6; ++k) m += fit.modal[k] * basis[k] * basis[k].transpose();
  return m.cast<cd>();
}

std::array<Mat3, 4> modal_blocks(const std::array<double, 6>& s, double eps, double eta,
                                 const Vec3& zeta_p) {
  const PropagationBasis pb = propagation_basis(zeta_p);
  const double v = 1.0 / std::sqrt(eps * eta);
  const Mat3 dd = pb.direction * pb.direction.transpose();
  const Mat3 z11 = pb.z1 * pb.z1.transpose(), z22 = pb.z2 * pb.z2.transpose();
  const Mat3 z12 = pb.z1 * pb.z2.transpose(), z21 = pb.z2 * pb.z1.transpose();
  const double a0 = s[0], b0 = s[1], ap = s[2], bp = s[3], am = s[4], bm = s[5];
  return {(dd * a0 + 0.5 * z11 * (ap + am) + 0.5 * z22 * (bp + bm)) / eps,
          0.5 * v * (z12 * ap - z21 * bp - z12 * am + z21 * bm),
          0.5 * v * (z21 * ap - z12 * bp - z21 * am + z12 * bm),
          (dd * b0 + 0.5 * z22 * (ap + am) + 0.5 * z11 * (bp + bm)) / eta};
}

namespace {

template <class Fit>
DensityDecomposition fit_all(const HMeasureEstimate& mu, ModelKind kind, const FitOptions& options,
                             Fit fit) {
  DensityDecomposition out;
  out.kind = kind;
  const double total = mu.total_mass();
  for (int i = 0; i < static_cast<int>(mu.bins.size()); ++i) {
    const double mass = mu.bin_mass(i);
    if (!(total > 0.0) || !(mass > options.relative_mass * total)) continue;
    const Vec4& z = mu.centroids[i];
    if (z.tail<3>().norm() < options.min_zeta_p) {
      out.excluded.push_back(i);
      continue;
    }
    DensityBin b = fit(mu.bins[i], z);
    b.bin = i;
    b.mass = mass;
    out.bins.push_back(b);
  }
  return out;
}

}  // namespace

DensityDecomposition fit_constant_decomposition(const HMeasureEstimate& mu, const FitOptions& options) {
  return fit_all(mu, ModelKind::Constant, options,
                 [](const CMat6& m, const Vec4& z) { return fit_constant_bin(m, z); });
}

DensityDecomposition fit_modal_decomposition(const HMeasureEstimate& mu, const MaterialModel& model,
                                             const FitOptions& options) {
  const Coefficients c = model.at(spatial_centroid(mu));
  return fit_all(mu, ModelKind::ScalarSmooth, options, [&](const CMat6& m, const Vec4& z) {
    return fit_modal_bin(m, z, c.eps, c.eta);
  });
}

}  // namespace hml
