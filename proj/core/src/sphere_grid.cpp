#include "hml/sphere_grid.hpp"

#include <algorithm>
#include <cmath>

#include "hml/errors.hpp"

namespace hml {

SphereGrid::SphereGrid(int n_alpha, int n_beta, int n_gamma)
    : na_(n_alpha), nb_(n_beta), ng_(n_gamma) {
  if (na_ < 2 || nb_ < 2 || ng_ < 3) throw Error("sphere grid resolution too small");
  da_ = kPi / na_;
  db_ = kPi / nb_;
  dg_ = 2.0 * kPi / ng_;
  auto a_measure = [](double a) { return 0.5 * (a - std::sin(a) * std::cos(a)); };
  cells_.reserve(static_cast<std::size_t>(na_) * nb_ * ng_);
  for (int ia = 0; ia < na_; ++ia) {
    const double a0 = ia * da_, a1 = (ia + 1) * da_;
    const double wa = a_measure(a1) - a_measure(a0);
    for (int ib = 0; ib < nb_; ++ib) {
      const double b0 = ib * db_, b1 = (ib + 1) * db_;
      const double wb = std::cos(b0) - std::cos(b1);
      for (int ig = 0; ig < ng_; ++ig) {
        const double g = (ig + 0.5) * dg_;
        cells_.push_back({direction(a0 + 0.5 * da_, b0 + 0.5 * db_, g), wa * wb * dg_, {ia, ib, ig}});
      }
    }
  }
}

std::array<double, 3> SphereGrid::angles(const Vec4& zeta) {
  const double n = zeta.norm();
  if (!(n > 0.0)) throw DegenerateDirectionError("direction of the zero covector");
  const double a = std::acos(std::clamp(zeta[1] / n, -1.0, 1.0));
  const double rho = std::hypot(zeta[0], zeta[3]);
  const double b = std::atan2(rho, zeta[2]);
  double g = std::atan2(zeta[3], zeta[0]);
  if (g < 0.0) g += 2.0 * kPi;
  return {a, b, g};
}

Vec4 SphereGrid::direction(double a, double b, double g) {
  const double sa = std::sin(a), sb = std::sin(b);
  return {sa * sb * std::cos(g), std::cos(a), sa * std::cos(b), sa * sb * std::sin(g)};
}

int SphereGrid::locate(const Vec4& zeta) const {
  const auto ang = angles(zeta);
  const int ia = std::clamp(static_cast<int>(ang[0] / da_), 0, na_ - 1);
  const int ib = std::clamp(static_cast<int>(ang[1] / db_), 0, nb_ - 1);
  const int ig = std::clamp(static_cast<int>(ang[2] / dg_), 0, ng_ - 1);
  return flat(ia, ib, ig);
}

std::vector<int> SphereGrid::neighbors(int i) const {
  const auto idx = cells_.at(i).index;
  std::vector<int> out;
  for (int da = -1; da <= 1; ++da)
    for (int db = -1; db <= 1; ++db)
      for (int dg = -1; dg <= 1; ++dg) {
        if (da == 0 && db == 0 && dg == 0) continue;
        const int ia = idx[0] + da, ib = idx[1] + db;
        if (ia < 0 || ia >= na_ || ib < 0 || ib >= nb_) continue;
        const int ig = (idx[2] + dg + ng_) % ng_;
        const int j = flat(ia, ib, ig);
        if (j != i && std::find(out.begin(), out.end(), j) == out.end()) out.push_back(j);
      }
  return out;
}

double SphereGrid::total_weight() const {
  double s = 0.0;
  for (const Cell& c : cells_) s += c.weight;
  return s;
}

double SphereGrid::bin_width() const { return std::max({da_, db_, dg_}); }

std::array<Vec4, 3> SphereGrid::chart_gradients(const Vec4& z) {
  const Vec4 e0 = Vec4::Unit(0), e1 = Vec4::Unit(1), e2 = Vec4::Unit(2), e3 = Vec4::Unit(3);
  const double sin_a = std::sqrt(std::max(0.0, 1.0 - z[1] * z[1]));
  const double rho2 = z[0] * z[0] + z[3] * z[3];
  const double rho = std::sqrt(rho2);
  if (!(sin_a > 0.0) || !(rho > 0.0)) throw DegenerateDirectionError("chart singular at this direction");
  const Vec4 grad_a = -(e1 - z[1] * z) / sin_a;
  const Vec4 grad_rho = (z[0] * e0 + z[3] * e3) / rho;
  const Vec4 grad_b = (z[2] * grad_rho - rho * e2) / (z[2] * z[2] + rho2);
  const Vec4 grad_g = (z[0] * e3 - z[3] * e0) / rho2;
  return {grad_a, grad_b, grad_g};
}

double angular_distance(const Vec4& a, const Vec4& b) {
  // atan2 form stays accurate for nearly parallel vectors.
  const double s = (a - b).norm(), t = (a + b).norm();
  return 2.0 * std::atan2(s, t);
}

}  // namespace hml
