#include "hml/grid.hpp"

#include <cmath>
#include <string>

#include "hml/errors.hpp"

namespace hml {

void GridSpec::validate() const {
  for (int d = 0; d < 4; ++d) {
    const int n = shape[d];
    if (n < 8 || (n & (n - 1)) != 0)
      throw Error("grid shape entry " + std::to_string(d) + " must be a power of two >= 8, got " +
                  std::to_string(n));
    if (!(extents[d] > 0.0)) throw Error("grid extent " + std::to_string(d) + " must be positive");
  }
}

std::size_t GridSpec::size() const {
  return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2] * shape[3];
}

std::size_t GridSpec::index(int it, int ix, int iy, int iz) const {
  return ((static_cast<std::size_t>(it) * shape[1] + ix) * shape[2] + iy) * shape[3] + iz;
}

std::array<int, 4> GridSpec::unflatten(std::size_t flat) const {
  std::array<int, 4> i{};
  for (int d = 3; d >= 0; --d) {
    i[d] = static_cast<int>(flat % shape[d]);
    flat /= shape[d];
  }
  return i;
}

Vec4 GridSpec::point(std::size_t flat) const {
  const auto i = unflatten(flat);
  return {coordinate(0, i[0]), coordinate(1, i[1]), coordinate(2, i[2]), coordinate(3, i[3])};
}

double GridSpec::cell_volume() const {
  return spacing(0) * spacing(1) * spacing(2) * spacing(3);
}

double GridSpec::frequency(int axis, int m) const {
  const int n = shape[axis];
  const int s = m < n / 2 ? m : m - n;
  return s / extents[axis];
}

double GridSpec::frequency_cell_volume() const {
  return 1.0 / (extents[0] * extents[1] * extents[2] * extents[3]);
}

SpacetimeField::SpacetimeField(const GridSpec& g, int ncomp)
    : grid(g), components(ncomp), data(g.size() * ncomp, cd(0.0, 0.0)) {}

std::span<cd> SpacetimeField::component(int c) {
  return {data.data() + c * grid.size(), grid.size()};
}

std::span<const cd> SpacetimeField::component(int c) const {
  return {data.data() + c * grid.size(), grid.size()};
}

double SpacetimeField::l2_norm() const {
  double s = 0.0;
  for (const cd& v : data) s += std::norm(v);
  return std::sqrt(s * grid.cell_volume());
}

SpatialField::SpatialField(std::array<double, 3> o, std::array<double, 3> e, std::array<int, 3> s,
                           int ncomp)
    : origin(o), extents(e), shape(s), components(ncomp), data(size() * ncomp, cd(0.0, 0.0)) {}

Vec3 SpatialField::point(std::size_t flat) const {
  Vec3 p;
  for (int d = 2; d >= 0; --d) {
    const int i = static_cast<int>(flat % shape[d]);
    flat /= shape[d];
    p[d] = origin[d] + i * extents[d] / shape[d];
  }
  return p;
}

SpatialField spatial_slice_shape(const GridSpec& grid, int ncomp) {
  return SpatialField({grid.origin[1], grid.origin[2], grid.origin[3]},
                      {grid.extents[1], grid.extents[2], grid.extents[3]},
                      {grid.shape[1], grid.shape[2], grid.shape[3]}, ncomp);
}

}  // namespace hml
