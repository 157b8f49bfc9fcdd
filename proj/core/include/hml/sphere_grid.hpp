#pragma once

#include <array>
#include <vector>

#include "hml/types.hpp"

namespace hml {

/// Product grid on S^3 in hyperspherical angles
///   zeta1 = cos a, zeta2 = sin a cos b, zeta0 = sin a sin b cos g, zeta3 = sin a sin b sin g,
/// a, b in [0, pi], g in [0, 2 pi). Cell weights are exact solid angles.
class SphereGrid {
 public:
  struct Cell {
    Vec4 center;
    double weight;
    std::array<int, 3> index;
  };

  SphereGrid() : SphereGrid(16, 16, 32) {}
  explicit SphereGrid(int n_alpha, int n_beta = 16, int n_gamma = 32);

  int size() const noexcept { return static_cast<int>(cells_.size()); }
  std::array<int, 3> resolution() const noexcept { return {na_, nb_, ng_}; }
  const Cell& cell(int i) const { return cells_[i]; }
  const std::vector<Cell>& cells() const noexcept { return cells_; }

  int flat(int ia, int ib, int ig) const { return (ia * nb_ + ib) * ng_ + ig; }
  /// Angles (a, b, g) of a nonzero covector.
  static std::array<double, 3> angles(const Vec4& zeta);
  static Vec4 direction(double a, double b, double g);
  /// Cell containing the direction of a nonzero covector.
  int locate(const Vec4& zeta) const;
  /// Cells whose indices differ by at most one per angle (g cyclic), excluding i.
  std::vector<int> neighbors(int i) const;

  double total_weight() const;
  /// Largest angular spacing of the three angle grids.
  double bin_width() const;
  std::array<double, 3> spacing() const { return {da_, db_, dg_}; }

  /// Gradients in zeta (degree-0 extension) of the three angles at a unit zeta.
  static std::array<Vec4, 3> chart_gradients(const Vec4& zeta);

 private:
  int na_, nb_, ng_;
  double da_, db_, dg_;
  std::vector<Cell> cells_;
};

/// Angular distance on S^3 between unit vectors.
double angular_distance(const Vec4& a, const Vec4& b);

}  // namespace hml
