#include "hml/symbols.hpp"

#include <cmath>

#include "hml/errors.hpp"

namespace hml {

FrequencyDirection::FrequencyDirection(const Vec4& raw) {
  const double n = raw.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DegenerateDirectionError("zero frequency covector");
  v_ = raw / n;
}

FrequencyDirection::FrequencyDirection(double zeta0, const Vec3& zeta_p)
    : FrequencyDirection(Vec4(zeta0, zeta_p[0], zeta_p[1], zeta_p[2])) {}

Mat3 antisym_E(const Vec3& z) {
  Mat3 e;
  e << 0.0, -z[2], z[1],
       z[2], 0.0, -z[0],
       -z[1], z[0], 0.0;
  return e;
}

Mat3 rotation_generator(int k) { return antisym_E(Vec3::Unit(k)); }

SystemMatrices assemble_system_matrices(const MaterialModel& model, const Vec3& x) {
  const Coefficients c = model.at(x);
  SystemMatrices m;
  m.A[0].setZero();
  m.A[0].topLeftCorner<3, 3>() = c.eps * Mat3::Identity();
  m.A[0].bottomRightCorner<3, 3>() = c.eta * Mat3::Identity();
  for (int k = 0; k < 3; ++k) {
    const Mat3 q = rotation_generator(k);
    Mat6& a = m.A[k + 1];
    a.setZero();
    a.topRightCorner<3, 3>() = q.transpose();
    a.bottomLeftCorner<3, 3>() = q;
  }
  m.C.setZero();
  m.C.topLeftCorner<3, 3>() = c.sigma * Mat3::Identity();
  return m;
}

Mat6 assemble_P(const MaterialModel& model, const Vec3& x, const Vec4& zeta) {
  const Coefficients c = model.at(x);
  const Mat3 e = antisym_E(zeta.tail<3>());
  Mat6 p;
  p.topLeftCorner<3, 3>() = zeta[0] * c.eps * Mat3::Identity();
  p.topRightCorner<3, 3>() = -e;
  p.bottomLeftCorner<3, 3>() = e;
  p.bottomRightCorner<3, 3>() = zeta[0] * c.eta * Mat3::Identity();
  return p;
}

SymbolMatrix assemble_P(const MaterialModel& model, const Vec3& x, const FrequencyDirection& zeta) {
  return {assemble_P(model, x, zeta.vector()), x, zeta.vector()};
}

Mat6 assemble_divergence_symbol(const Vec3& z) {
  Mat6 b = Mat6::Zero();
  for (int i = 0; i < 3; ++i) {
    b(i, i) = z[i];
    b(i + 3, i + 3) = z[i];
  }
  return b;
}

Mat6 dispersion_matrix(const MaterialModel& model, const Vec3& x, const Vec3& zeta_p) {
  const Coefficients c = model.at(x);
  const Mat3 e = antisym_E(zeta_p);
  Mat6 l = Mat6::Zero();
  l.topRightCorner<3, 3>() = -e / c.eps;
  l.bottomLeftCorner<3, 3>() = e / c.eta;
  return l;
}

PropagationBasis propagation_basis(const Vec3& zeta_p) {
  const double n = zeta_p.norm();
  if (!(n > 0.0)) throw DegenerateDirectionError("propagation basis undefined for zeta' = 0");
  const Vec3 d = zeta_p / n;
  const double sin_theta = std::hypot(d[0], d[1]);
  const double cos_theta = d[2];
  double cos_phi = 1.0, sin_phi = 0.0;
  if (sin_theta > 0.0) {
    cos_phi = d[0] / sin_theta;
    sin_phi = d[1] / sin_theta;
  }
  return {d, Vec3(cos_theta * cos_phi, cos_theta * sin_phi, -sin_theta), Vec3(-sin_phi, cos_phi, 0.0)};
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::LongE: return "long-e";
    case Mode::LongH: return "long-h";
    case Mode::Plus1: return "trans+1";
    case Mode::Plus2: return "trans+2";
    case Mode::Minus1: return "trans-1";
    case Mode::Minus2: return "trans-2";
  }
  return "?";
}

Mode mode_from_string(const std::string& name) {
  for (Mode m : kAllModes)
    if (to_string(m) == name) return m;
  throw Error("unknown mode '" + name + "'");
}

int mode_branch(Mode mode) {
  switch (mode) {
    case Mode::Plus1:
    case Mode::Plus2: return 1;
    case Mode::Minus1:
    case Mode::Minus2: return -1;
    default: return 0;
  }
}

double EigenStructure::eigenvalue(Mode mode) const {
  switch (mode_branch(mode)) {
    case 1: return omega_plus;
    case -1: return omega_minus;
    default: return omega0;
  }
}

std::array<Vec6, 6> eigen_basis(double eps, double eta, const Vec3& zeta_p) {
  const PropagationBasis pb = propagation_basis(zeta_p);
  const double se = 1.0 / std::sqrt(eps), sh = 1.0 / std::sqrt(eta);
  const double se2 = 1.0 / std::sqrt(2.0 * eps), sh2 = 1.0 / std::sqrt(2.0 * eta);
  auto pack = [](const Vec3& e, const Vec3& h) {
    Vec6 v;
    v << e, h;
    return v;
  };
  const Vec3 zero = Vec3::Zero();
  return {pack(se * pb.direction, zero),
          pack(zero, sh * pb.direction),
          pack(se2 * pb.z1, sh2 * pb.z2),
          pack(se2 * pb.z2, -sh2 * pb.z1),
          pack(se2 * pb.z1, -sh2 * pb.z2),
          pack(se2 * pb.z2, sh2 * pb.z1)};
}

EigenStructure eigen_structure(const MaterialModel& model, const Vec3& x, const Vec4& zeta) {
  const Vec3 zp = zeta.tail<3>();
  if (!(zp.norm() > 0.0))
    throw DegenerateDirectionError("eigen-structure requested at zeta' = 0");
  const Coefficients c = model.at(x);
  const double v = c.speed();
  const double r = v * zp.norm();
  EigenStructure es;
  es.omega0 = zeta[0];
  es.omega_plus = zeta[0] + r;
  es.omega_minus = zeta[0] - r;
  es.basis = eigen_basis(c.eps, c.eta, zp);
  es.speed = v;
  return es;
}

Mat6 poisson_bracket(const MaterialModel& model, const TestSymbol& psi, const Vec4& xt,
                     const Vec4& zeta) {
  const Vec3 x = xt.tail<3>();
  const SystemMatrices sm = assemble_system_matrices(model, x);
  const Coefficients c = model.at(x);
  const Vec4 dpsi_x = psi.grad_x(xt, zeta);
  const Vec4 dpsi_z = psi.grad_zeta(xt, zeta);

  // dP/dzeta_l = A^l; dP/dt = 0; dP/dx_l = zeta0 dA0/dx_l.
  Mat6 out = Mat6::Zero();
  for (int l = 0; l < 4; ++l) out += sm.A[l] * dpsi_x[l];
  for (int l = 0; l < 3; ++l) {
    Mat6 da0 = Mat6::Zero();
    da0.topLeftCorner<3, 3>() = c.grad_eps[l] * Mat3::Identity();
    da0.bottomRightCorner<3, 3>() = c.grad_eta[l] * Mat3::Identity();
    out -= dpsi_z[l + 1] * zeta[0] * da0;
  }
  return out;
}

Mat6 propagation_operator(const MaterialModel& model, const TestSymbol& psi, const Vec4& xt,
                          const Vec4& zeta) {
  const Vec3 x = xt.tail<3>();
  const SystemMatrices sm = assemble_system_matrices(model, x);
  const double value = psi.value(xt, zeta);
  // A0 depends on x only and A^j are constant, so sum_k d_k A^k = d_t A0 = 0.
  const Mat6 divergence_of_A = Mat6::Zero();
  const Mat6 s = 0.5 * (sm.C + sm.C.transpose());
  return poisson_bracket(model, psi, xt, zeta) + value * divergence_of_A - 2.0 * value * s;
}

}  // namespace hml
