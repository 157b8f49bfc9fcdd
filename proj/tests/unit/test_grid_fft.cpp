#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "hml/errors.hpp"
#include "hml/fft.hpp"
#include "hml/grid.hpp"

using namespace hml;

TEST(Grid, ValidateShapes) {
  GridSpec g;
  EXPECT_NO_THROW(g.validate());
  g.shape = {8, 12, 8, 8};
  EXPECT_THROW(g.validate(), Error);
  g.shape = {4, 8, 8, 8};
  EXPECT_THROW(g.validate(), Error);
  g.shape = {8, 8, 8, 8};
  g.extents[2] = 0.0;
  EXPECT_THROW(g.validate(), Error);
}

TEST(Grid, IndexingRoundTrip) {
  GridSpec g;
  g.shape = {8, 16, 8, 32};
  g.origin = {1.0, -0.5, 0.0, 0.25};
  for (std::size_t flat : {std::size_t{0}, std::size_t{17}, g.size() - 1}) {
    const auto i = g.unflatten(flat);
    EXPECT_EQ(g.index(i[0], i[1], i[2], i[3]), flat);
    const Vec4 p = g.point(flat);
    for (int d = 0; d < 4; ++d) EXPECT_DOUBLE_EQ(p[d], g.coordinate(d, i[d]));
  }
  EXPECT_EQ(g.size(), 8u * 16 * 8 * 32);
  EXPECT_DOUBLE_EQ(g.cell_volume(), g.spacing(0) * g.spacing(1) * g.spacing(2) * g.spacing(3));
}

TEST(Grid, Frequencies) {
  GridSpec g;
  g.extents = {2.0, 1.0, 1.0, 0.5};
  g.shape = {8, 8, 8, 8};
  EXPECT_DOUBLE_EQ(g.frequency(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(g.frequency(0, 7), -0.5);
  EXPECT_DOUBLE_EQ(g.frequency(3, 4), -8.0);
  EXPECT_DOUBLE_EQ(g.frequency_cell_volume(), 1.0 / (2.0 * 0.5));
}

TEST(Grid, FieldNorm) {
  GridSpec g;
  SpacetimeField u(g, 2);
  EXPECT_EQ(u.data.size(), 2 * g.size());
  for (auto& v : u.component(1)) v = cd(0.0, 1.0);
  // one unit component over a unit box
  EXPECT_NEAR(u.l2_norm(), 1.0, 1e-14);
  const SpatialField s = spatial_slice_shape(g, 3);
  EXPECT_EQ(s.size(), 512u);
  EXPECT_EQ(s.components, 3);
}

TEST(Fft, RoundTripAndSingleMode) {
  const std::vector<int> dims{8, 16};
  std::vector<cd> data(2 * 8 * 16);
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 16; ++j)
        data[(b * 8 + i) * 16 + j] = std::polar(1.0 + b, 2 * kPi * (3.0 * i / 8 + 5.0 * j / 16));
  const std::vector<cd> original = data;
  fft_inplace(data, dims, 2, FftDirection::Forward);
  EXPECT_NEAR(std::abs(data[3 * 16 + 5]), 128.0, 1e-10);
  EXPECT_NEAR(std::abs(data[128 + 3 * 16 + 5]), 256.0, 1e-10);
  EXPECT_NEAR(std::abs(data[0]), 0.0, 1e-10);
  fft_inplace(data, dims, 2, FftDirection::Inverse);
  for (std::size_t i = 0; i < data.size(); ++i) EXPECT_NEAR(std::abs(data[i] / 128.0 - original[i]), 0.0, 1e-12);
}

TEST(Fft, SizeMismatch) {
  std::vector<cd> data(10);
  const std::vector<int> dims{4};
  EXPECT_THROW(fft_inplace(data, dims, 2, FftDirection::Forward), MismatchError);
}
