#pragma once

#include <array>
#include <functional>
#include <string>

#include "hml/grid.hpp"
#include "hml/types.hpp"

namespace hml {

/// Real spacetime window phi(t, x). Either a tensor product of per-axis profiles
/// (constant, or raised cosine cos^2(pi s / 2w) on |s| < w) or a user function
/// with declared support box.
class Window {
 public:
  struct Axis {
    bool constant = true;
    double center = 0.0;
    double half_width = 0.0;
  };

  using Function = std::function<double(const Vec4&)>;
  using Gradient = std::function<Vec4(const Vec4&)>;

  /// phi = 1 everywhere.
  static Window constant();
  static Window raised_cosine(const std::array<Axis, 4>& axes);
  /// Raised cosine filling the grid box on the axes flagged in `taper`, constant on the others.
  static Window fitted(const GridSpec& grid, const std::array<bool, 4>& taper);
  /// Support is [lo, hi] per axis; the function must vanish outside it.
  static Window custom(Function value, Gradient gradient, Vec4 support_lo, Vec4 support_hi,
                       std::string name = "custom");

  double value(const Vec4& xt) const;
  Vec4 gradient(const Vec4& xt) const;

  /// Point where model coefficients are evaluated: support center, with the box
  /// center on unbounded axes.
  Vec4 centroid(const GridSpec& grid) const;
  /// True when the support lies inside the closed grid box (unbounded axes must be periodic).
  bool supported_in(const GridSpec& grid) const;

  const std::string& name() const noexcept { return name_; }
  const std::array<Axis, 4>& axes() const noexcept { return axes_; }
  bool is_custom() const noexcept { return static_cast<bool>(fn_); }

 private:
  std::array<Axis, 4> axes_{};
  Function fn_;
  Gradient grad_;
  Vec4 lo_ = Vec4::Zero();
  Vec4 hi_ = Vec4::Zero();
  std::string name_ = "constant";
};

/// Sample a window on every grid point, flat grid order.
std::vector<double> sample_window(const Window& window, const GridSpec& grid);

}  // namespace hml
