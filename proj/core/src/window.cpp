#include "hml/window.hpp"

#include <cmath>

#include "hml/errors.hpp"

namespace hml {

namespace {

double profile(const Window::Axis& a, double s) {
  if (a.constant) return 1.0;
  const double u = (s - a.center) / a.half_width;
  if (std::abs(u) >= 1.0) return 0.0;
  const double c = std::cos(0.5 * kPi * u);
  return c * c;
}

double profile_derivative(const Window::Axis& a, double s) {
  if (a.constant) return 0.0;
  const double u = (s - a.center) / a.half_width;
  if (std::abs(u) >= 1.0) return 0.0;
  return -0.5 * kPi / a.half_width * std::sin(kPi * u);
}

}  // namespace

Window Window::constant() { return Window{}; }

Window Window::raised_cosine(const std::array<Axis, 4>& axes) {
  for (const Axis& a : axes)
    if (!a.constant && !(a.half_width > 0.0))
      throw Error("raised cosine half width must be positive");
  Window w;
  w.axes_ = axes;
  w.name_ = "raised_cosine";
  return w;
}

Window Window::fitted(const GridSpec& grid, const std::array<bool, 4>& taper) {
  std::array<Axis, 4> axes{};
  for (int d = 0; d < 4; ++d) {
    if (!taper[d]) continue;
    axes[d].constant = false;
    axes[d].half_width = 0.5 * grid.extents[d];
    axes[d].center = grid.origin[d] + 0.5 * grid.extents[d];
  }
  return raised_cosine(axes);
}

Window Window::custom(Function value, Gradient gradient, Vec4 support_lo, Vec4 support_hi,
                      std::string name) {
  if (!value || !gradient) throw Error("custom window needs value and gradient");
  Window w;
  w.fn_ = std::move(value);
  w.grad_ = std::move(gradient);
  w.lo_ = support_lo;
  w.hi_ = support_hi;
  w.name_ = std::move(name);
  for (int d = 0; d < 4; ++d) w.axes_[d].constant = false;
  return w;
}

double Window::value(const Vec4& xt) const {
  if (fn_) {
    for (int d = 0; d < 4; ++d)
      if (xt[d] < lo_[d] || xt[d] > hi_[d]) return 0.0;
    return fn_(xt);
  }
  double v = 1.0;
  for (int d = 0; d < 4; ++d) v *= profile(axes_[d], xt[d]);
  return v;
}

Vec4 Window::gradient(const Vec4& xt) const {
  if (fn_) {
    for (int d = 0; d < 4; ++d)
      if (xt[d] < lo_[d] || xt[d] > hi_[d]) return Vec4::Zero();
    return grad_(xt);
  }
  std::array<double, 4> p{};
  for (int d = 0; d < 4; ++d) p[d] = profile(axes_[d], xt[d]);
  Vec4 g;
  for (int d = 0; d < 4; ++d) {
    double v = profile_derivative(axes_[d], xt[d]);
    for (int e = 0; e < 4; ++e)
      if (e != d) v *= p[e];
    g[d] = v;
  }
  return g;
}

Vec4 Window::centroid(const GridSpec& grid) const {
  Vec4 c;
  for (int d = 0; d < 4; ++d) {
    if (fn_)
      c[d] = 0.5 * (lo_[d] + hi_[d]);
    else if (axes_[d].constant)
      c[d] = grid.origin[d] + 0.5 * grid.extents[d];
    else
      c[d] = axes_[d].center;
  }
  return c;
}

bool Window::supported_in(const GridSpec& grid) const {
  constexpr double slack = 1e-12;
  for (int d = 0; d < 4; ++d) {
    const double lo = grid.origin[d];
    const double hi = grid.origin[d] + grid.extents[d];
    const double tol = slack * grid.extents[d];
    if (fn_) {
      if (lo_[d] < lo - tol || hi_[d] > hi + tol) return false;
    } else if (axes_[d].constant) {
      if (!grid.periodic[d]) return false;
    } else {
      const Axis& a = axes_[d];
      if (a.center - a.half_width < lo - tol || a.center + a.half_width > hi + tol) return false;
    }
  }
  return true;
}

std::vector<double> sample_window(const Window& window, const GridSpec& grid) {
  std::vector<double> out(grid.size());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = window.value(grid.point(n));
  return out;
}

}  // namespace hml
