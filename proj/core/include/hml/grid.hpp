#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "hml/types.hpp"

namespace hml {

/// Regular sampling of the box [t0, t0+T] x [x0, x0+L]^3 (axis 0 is time).
/// Sample i on axis d sits at origin[d] + i * spacing(d).
struct GridSpec {
  std::array<double, 4> origin{0.0, 0.0, 0.0, 0.0};
  std::array<double, 4> extents{1.0, 1.0, 1.0, 1.0};
  std::array<int, 4> shape{8, 8, 8, 8};
  std::array<bool, 4> periodic{false, true, true, true};

  /// Shape entries >= 8 and powers of two; extents > 0. Throws Error otherwise.
  void validate() const;

  double spacing(int axis) const { return extents[axis] / shape[axis]; }
  double coordinate(int axis, int i) const { return origin[axis] + i * spacing(axis); }
  std::size_t size() const;
  std::size_t index(int it, int ix, int iy, int iz) const;
  std::array<int, 4> unflatten(std::size_t flat) const;
  Vec4 point(std::size_t flat) const;
  /// Product of spacings: quadrature weight of one sample.
  double cell_volume() const;
  /// Signed DFT frequency (cycles per unit) of index m on an axis; m >= N/2 maps to m - N.
  double frequency(int axis, int m) const;
  /// Product of frequency spacings 1/(N h).
  double frequency_cell_volume() const;

  bool operator==(const GridSpec& other) const = default;
};

/// Multi-component complex samples on a GridSpec, layout [component][t][x][y][z].
struct SpacetimeField {
  GridSpec grid;
  int components = kComponents;
  std::vector<cd> data;

  SpacetimeField() = default;
  SpacetimeField(const GridSpec& g, int ncomp);

  std::span<cd> component(int c);
  std::span<const cd> component(int c) const;
  cd& at(int c, std::size_t flat) { return data[c * grid.size() + flat]; }
  const cd& at(int c, std::size_t flat) const { return data[c * grid.size() + flat]; }

  /// Discrete L2 norm with the cell-volume weight.
  double l2_norm() const;
};

/// Multi-component complex samples on a periodic spatial box, layout [component][x][y][z].
struct SpatialField {
  std::array<double, 3> origin{0.0, 0.0, 0.0};
  std::array<double, 3> extents{1.0, 1.0, 1.0};
  std::array<int, 3> shape{8, 8, 8};
  int components = kComponents;
  std::vector<cd> data;

  SpatialField() = default;
  SpatialField(std::array<double, 3> origin, std::array<double, 3> extents, std::array<int, 3> shape,
               int ncomp);

  std::size_t size() const {
    return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
  }
  Vec3 point(std::size_t flat) const;
  cd& at(int c, std::size_t flat) { return data[c * size() + flat]; }
  const cd& at(int c, std::size_t flat) const { return data[c * size() + flat]; }
};

/// Spatial part of a spacetime grid.
SpatialField spatial_slice_shape(const GridSpec& grid, int ncomp);

}  // namespace hml
