#include "hml/transport.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "hml/errors.hpp"

namespace hml {

// ---------------------------------------------------------------- rays

std::string to_string(RayStatus status) {
  switch (status) {
    case RayStatus::Running: return "running";
    case RayStatus::Completed: return "completed";
    case RayStatus::Degenerate: return "degenerate";
    case RayStatus::OutOfDomain: return "out_of_domain";
  }
  return "?";
}

double hamiltonian(const MaterialModel& model, const RayState& ray) {
  return ray.zeta[0] + ray.branch * model.at(ray.x).speed() * ray.zeta.tail<3>().norm();
}

namespace {

using State6 = Eigen::Matrix<double, 6, 1>;

State6 ray_rhs(const MaterialModel& model, int branch, const State6& y) {
  const Vec3 x = y.head<3>(), k = y.tail<3>();
  const double n = k.norm();
  if (!(n > 1e-14)) throw DegenerateDirectionError("ray reached zeta' = 0");
  const Coefficients c = model.at(x);
  State6 d;
  d.head<3>() = branch * c.speed() * k / n;
  d.tail<3>() = -branch * n * c.speed_gradient();
  return d;
}

}  // namespace

Trajectory integrate_ray(const MaterialModel& model, const RayState& start, double t_end,
                         const RayOptions& options) {
  if (!(options.dt > 0.0)) throw Error("ray step must be positive");
  if (start.branch != 1 && start.branch != -1) throw Error("ray branch must be +1 or -1");
  Trajectory tr;
  RayState s = start;
  s.status = RayStatus::Running;
  tr.states.push_back(s);
  const double span = t_end - start.t;
  const long steps = std::max(1L, static_cast<long>(std::ceil(std::abs(span) / options.dt - 1e-9)));
  const double h = span / steps;
  double w0 = 0.0;
  try {
    w0 = hamiltonian(model, s);
  } catch (const DomainError&) {
    tr.status = RayStatus::OutOfDomain;
    tr.states.back().status = tr.status;
    return tr;
  }
  State6 y;
  y << s.x, s.zeta.tail<3>();
  for (long i = 1; i <= steps; ++i) {
    try {
      const State6 k1 = ray_rhs(model, s.branch, y);
      const State6 k2 = ray_rhs(model, s.branch, y + 0.5 * h * k1);
      const State6 k3 = ray_rhs(model, s.branch, y + 0.5 * h * k2);
      const State6 k4 = ray_rhs(model, s.branch, y + h * k3);
      y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      s.x = y.head<3>();
      s.zeta.tail<3>() = y.tail<3>();
      s.t = start.t + i * h;
      tr.hamiltonian_drift = std::max(tr.hamiltonian_drift, std::abs(hamiltonian(model, s) - w0));
    } catch (const DegenerateDirectionError&) {
      tr.status = RayStatus::Degenerate;
      break;
    } catch (const DomainError&) {
      tr.status = RayStatus::OutOfDomain;
      break;
    }
    if (i % std::max(1, options.record_every) == 0 || i == steps) tr.states.push_back(s);
  }
  if (tr.status == RayStatus::Running) tr.status = RayStatus::Completed;
  if (tr.states.back().t != s.t) tr.states.push_back(s);
  tr.states.back().status = tr.status;
  return tr;
}

std::vector<Trajectory> integrate_rays(const MaterialModel& model, const std::vector<RayState>& starts,
                                       double t_end, const RayOptions& options, int jobs) {
  std::vector<Trajectory> out(starts.size());
  jobs = std::clamp(jobs, 1, std::max<int>(1, static_cast<int>(starts.size())));
  auto work = [&](int w) {
    for (std::size_t i = w; i < starts.size(); i += jobs)
      out[i] = integrate_ray(model, starts[i], t_end, options);
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  return out;
}

// ---------------------------------------------------------------- lattice helpers

Vec3 TransportLattice::position(std::size_t site) const {
  const int i2 = static_cast<int>(site % sites[2]);
  const int i1 = static_cast<int>((site / sites[2]) % sites[1]);
  const int i0 = static_cast<int>(site / (static_cast<std::size_t>(sites[2]) * sites[1]));
  return origin + Vec3(i0 * spacing[0], i1 * spacing[1], i2 * spacing[2]);
}

void TransportLattice::validate() const {
  if (times.size() < 3) throw InsufficientDataError("transport residuals need at least three time levels");
  const double dt = times[1] - times[0];
  if (!(dt > 0.0)) throw InsufficientDataError("time levels must increase");
  for (std::size_t n = 1; n < times.size(); ++n)
    if (std::abs(times[n] - times[n - 1] - dt) > 1e-9 * std::max(1.0, dt))
      throw InsufficientDataError("time levels must be uniformly spaced");
  for (int d = 0; d < 3; ++d)
    if (sites[d] < 1) throw Error("lattice needs at least one site per axis");
}

namespace {

template <class T>
std::array<T, 3> angle_differences(const SphereGrid& sphere, const std::function<T(int)>& get, int bin) {
  const auto idx = sphere.cell(bin).index;
  const auto res = sphere.resolution();
  const auto sp = sphere.spacing();
  std::array<T, 3> out;
  for (int k = 0; k < 3; ++k) {
    const int n = res[k], i = idx[k];
    auto at = [&](int j) {
      auto id = idx;
      id[k] = j;
      return get(sphere.flat(id[0], id[1], id[2]));
    };
    const double h = sp[k];
    if (k == 2) {
      out[k] = (at((i + 1) % n) - at((i - 1 + n) % n)) / (2.0 * h);
    } else {
      if (n < 3) throw InsufficientDataError("sphere grid too coarse for angle differences");
      if (i == 0)
        out[k] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
      else if (i == n - 1)
        out[k] = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
      else
        out[k] = (at(i + 1) - at(i - 1)) / (2.0 * h);
    }
  }
  return out;
}

// d/dzeta_l for l = 1..3 (index l-1 in the result).
template <class T>
std::array<T, 3> zeta_p_gradient(const SphereGrid& sphere, const std::function<T(int)>& get, int bin) {
  const auto d = angle_differences<T>(sphere, get, bin);
  const auto g = SphereGrid::chart_gradients(sphere.cell(bin).center);
  std::array<T, 3> out;
  for (int l = 1; l <= 3; ++l) out[l - 1] = d[0] * g[0][l] + d[1] * g[1][l] + d[2] * g[2][l];
  return out;
}

// d/dx_j at a site; returns false when the axis has a single site.
template <class T>
bool site_derivative(const TransportLattice& lat, const std::function<T(std::size_t)>& get,
                     std::size_t site, int j, T& out) {
  const int m = lat.sites[j];
  if (m < 2) return false;
  std::array<int, 3> id{static_cast<int>(site / (static_cast<std::size_t>(lat.sites[2]) * lat.sites[1])),
                        static_cast<int>((site / lat.sites[2]) % lat.sites[1]),
                        static_cast<int>(site % lat.sites[2])};
  auto at = [&](int k) {
    auto q = id;
    q[j] = k;
    return get((static_cast<std::size_t>(q[0]) * lat.sites[1] + q[1]) * lat.sites[2] + q[2]);
  };
  const double h = lat.spacing[j];
  const int i = id[j];
  if (m == 2)
    out = (at(1) - at(0)) / h;
  else if (i == 0)
    out = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  else if (i == m - 1)
    out = (3.0 * at(m - 1) - 4.0 * at(m - 2) + at(m - 3)) / (2.0 * h);
  else
    out = (at(i + 1) - at(i - 1)) / (2.0 * h);
  return true;
}

double site_volume(const TransportLattice& lat) {
  double v = 1.0;
  for (int d = 0; d < 3; ++d)
    if (lat.sites[d] > 1) v *= lat.spacing[d];
  return v;
}

double two_re_trace(const CMat6& m, int r, int c) {
  return 2.0 * m.block<3, 3>(r, c).trace().real();
}

CMat3 two_re_block(const CMat6& m, int r, int c) {
  return (2.0 * m.block<3, 3>(r, c).real()).cast<cd>();
}

// Accumulates weak pairings of the terms of every row against the battery.
struct WeakAccumulator {
  std::vector<std::string> equations;
  std::size_t nterms;
  const std::vector<TestSymbol>& battery;
  // [equation][psi][term]
  std::vector<std::vector<std::vector<cd>>> sums;
  std::vector<double> strong_res, strong_dom;

  WeakAccumulator(std::vector<std::string> eq, std::size_t terms, const std::vector<TestSymbol>& b)
      : equations(std::move(eq)), nterms(terms), battery(b),
        sums(equations.size(), std::vector<std::vector<cd>>(b.size(), std::vector<cd>(terms + 1, 0.0))),
        strong_res(equations.size(), 0.0), strong_dom(equations.size(), 0.0) {}

  // terms are scalars; the last entry of `terms` is the right-hand side (subtracted).
  void add(std::size_t eq, const std::vector<cd>& terms, const Vec4& xt, const Vec4& zeta, double w) {
    cd r = 0.0;
    double dom = 0.0;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      r += k + 1 == terms.size() ? -terms[k] : terms[k];
      dom = std::max(dom, std::abs(terms[k]));
    }
    strong_res[eq] = std::max(strong_res[eq], std::abs(r));
    strong_dom[eq] = std::max(strong_dom[eq], dom);
    for (std::size_t p = 0; p < battery.size(); ++p) {
      const double psi = battery[p].value(xt, zeta) * w;
      for (std::size_t k = 0; k < terms.size(); ++k) sums[eq][p][k] += psi * terms[k];
    }
  }

  TransportResidualReport report(const std::string& variant) const {
    TransportResidualReport rep;
    rep.variant = variant;
    for (std::size_t e = 0; e < equations.size(); ++e) {
      for (std::size_t p = 0; p < battery.size(); ++p) {
        TransportRowResidual row;
        row.equation = equations[e];
        row.psi = battery[p].name();
        cd r = 0.0;
        for (std::size_t k = 0; k <= nterms; ++k) {
          r += k == nterms ? -sums[e][p][k] : sums[e][p][k];
          row.dominant = std::max(row.dominant, std::abs(sums[e][p][k]));
        }
        row.residual = r;
        row.relative = row.dominant > 0.0 ? std::abs(r) / row.dominant : 0.0;
        rep.rows.push_back(row);
      }
      rep.strong[equations[e]] = strong_dom[e] > 0.0 ? strong_res[e] / strong_dom[e] : 0.0;
    }
    return rep;
  }
};

// Matrix rows: terms are 3x3 matrices, paired entrywise; the residual is the Frobenius norm.
struct MatrixWeakAccumulator {
  std::vector<std::string> equations;
  std::size_t nterms;
  const std::vector<TestSymbol>& battery;
  std::vector<std::vector<std::vector<CMat3>>> sums;
  std::vector<double> strong_res, strong_dom;

  MatrixWeakAccumulator(std::vector<std::string> eq, std::size_t terms, const std::vector<TestSymbol>& b)
      : equations(std::move(eq)), nterms(terms), battery(b),
        sums(equations.size(),
             std::vector<std::vector<CMat3>>(b.size(), std::vector<CMat3>(terms + 1, CMat3::Zero()))),
        strong_res(equations.size(), 0.0), strong_dom(equations.size(), 0.0) {}

  void add(std::size_t eq, const std::vector<CMat3>& terms, const Vec4& xt, const Vec4& zeta, double w) {
    CMat3 r = CMat3::Zero();
    double dom = 0.0;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      r += k + 1 == terms.size() ? CMat3(-terms[k]) : terms[k];
      dom = std::max(dom, terms[k].norm());
    }
    strong_res[eq] = std::max(strong_res[eq], r.norm());
    strong_dom[eq] = std::max(strong_dom[eq], dom);
    for (std::size_t p = 0; p < battery.size(); ++p) {
      const double psi = battery[p].value(xt, zeta) * w;
      for (std::size_t k = 0; k < terms.size(); ++k) sums[eq][p][k] += psi * terms[k];
    }
  }

  TransportResidualReport report(const std::string& variant) const {
    TransportResidualReport rep;
    rep.variant = variant;
    for (std::size_t e = 0; e < equations.size(); ++e) {
      for (std::size_t p = 0; p < battery.size(); ++p) {
        TransportRowResidual row;
        row.equation = equations[e];
        row.psi = battery[p].name();
        CMat3 r = CMat3::Zero();
        for (std::size_t k = 0; k <= nterms; ++k) {
          r += k == nterms ? CMat3(-sums[e][p][k]) : sums[e][p][k];
          row.dominant = std::max(row.dominant, sums[e][p][k].norm());
        }
        row.residual = r.norm();
        row.relative = row.dominant > 0.0 ? r.norm() / row.dominant : 0.0;
        rep.rows.push_back(row);
      }
      rep.strong[equations[e]] = strong_dom[e] > 0.0 ? strong_res[e] / strong_dom[e] : 0.0;
    }
    return rep;
  }
};

// sin^2 over the sampled time interval: pairing against psi * chi keeps the test functions
// compactly supported in time, so the interior-level sum has no end correction.
double time_cutoff(const TransportLattice& lat, std::size_t n) {
  if (lat.times.size() < 3) return 1.0;
  const double s = std::sin(kPi * (lat.times[n] - lat.times.front()) / (lat.times.back() - lat.times.front()));
  return s * s;
}

void check_field(const TransportLattice& lat, std::size_t n, const char* what) {
  if (n != lat.size()) throw MismatchError(std::string(what) + " does not match the lattice");
}

}  // namespace

double TransportResidualReport::max_relative() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.relative);
  return m;
}

double TransportResidualReport::absolute(const std::string& equation) const {
  double s = 0.0;
  for (const auto& r : rows)
    if (equation.empty() || r.equation == equation) s += std::abs(r.residual);
  return s;
}

CVec4 sphere_gradient(const SphereGrid& sphere, const std::function<cd(int)>& value, int bin) {
  const auto d = angle_differences<cd>(sphere, value, bin);
  const auto g = SphereGrid::chart_gradients(sphere.cell(bin).center);
  CVec4 out;
  for (int l = 0; l < 4; ++l) out[l] = d[0] * g[0][l] + d[1] * g[1][l] + d[2] * g[2][l];
  return out;
}

cd time_derivative(const TransportLattice& lattice, const std::function<cd(std::size_t)>& value,
                   std::size_t n) {
  if (n == 0 || n + 1 >= lattice.times.size()) throw InsufficientDataError("time level is not interior");
  return (value(n + 1) - value(n - 1)) / (lattice.times[n + 1] - lattice.times[n - 1]);
}

TransportResidualReport constant_transport_residual(const ConstantDensityField& f,
                                                    const MaterialModel& model,
                                                    const MeasureSamples* sources,
                                                    const std::vector<TestSymbol>& battery) {
  const TransportLattice& lat = f.lattice;
  lat.validate();
  check_field(lat, f.a.size(), "density a");
  check_field(lat, f.b.size(), "density b");
  check_field(lat, f.c.size(), "density c");
  check_field(lat, f.d.size(), "density d");
  if (sources) check_field(lat, sources->values.size(), "source correlation");

  const double dt = lat.times[1] - lat.times[0];
  const double w_site = site_volume(lat);
  std::array<Mat3, 3> q;
  for (int l = 0; l < 3; ++l) q[l] = rotation_generator(l);

  WeakAccumulator acc({"a", "c", "b", "d"}, 3, battery);
  TransportResidualReport notices_holder;
  bool missing_axis = false;

  for (std::size_t n = 1; n + 1 < lat.times.size(); ++n)
    for (std::size_t s = 0; s < lat.site_count(); ++s) {
      const Vec3 x = lat.position(s);
      const Coefficients co = model.at(x);
      const Vec4 xt(lat.times[n], x[0], x[1], x[2]);
      for (int bin = 0; bin < lat.sphere.size(); ++bin) {
        const Vec4& z = lat.sphere.cell(bin).center;
        const Vec3 zp = z.tail<3>();
        const double zp2 = zp.squaredNorm();
        const Mat3 zz = zp * zp.transpose();
        auto at = [&](const auto& v, std::size_t nn, std::size_t ss) { return v[lat.index(nn, ss, bin)]; };
        auto dt_of = [&](const auto& v) {
          return cd(at(v, n + 1, s)) / (2.0 * dt) - cd(at(v, n - 1, s)) / (2.0 * dt);
        };
        // sum_l Tr(zeta' zeta'^T dE/dzeta_l) d/dx_l of a density
        auto trace_flux = [&](const auto& v) {
          cd sum = 0.0;
          for (int l = 0; l < 3; ++l) {
            const double tl = (zz * q[l]).trace();
            if (tl == 0.0) continue;
            cd deriv = 0.0;
            const std::function<cd(std::size_t)> get = [&](std::size_t ss) { return cd(at(v, n, ss)); };
            if (site_derivative<cd>(lat, get, s, l, deriv))
              sum += tl * deriv;
            else
              missing_axis = true;
          }
          return sum;
        };
        const std::size_t i = lat.index(n, s, bin);
        const CMat6 mu = sources ? sources->values[i] : CMat6::Zero();
        const double w = lat.sphere.cell(bin).weight * dt * w_site * time_cutoff(lat, n);

        acc.add(0, {zp2 * (-co.eps) * dt_of(f.a), cd(zp2 * (-2.0 * co.sigma) * f.a[i]), -trace_flux(f.c),
                    cd(two_re_trace(mu, 0, 0))},
                xt, z, w);
        acc.add(1, {trace_flux(f.a), -zp2 * co.eps * dt_of(f.c), cd(0.0), cd(two_re_trace(mu, 0, 3))}, xt, z, w);
        acc.add(2, {-zp2 * co.eta * dt_of(f.b), trace_flux(f.d), cd(0.0), cd(two_re_trace(mu, 3, 3))}, xt, z, w);
        acc.add(3, {-trace_flux(f.b), zp2 * co.eta * dt_of(f.d), -zp2 * 2.0 * co.sigma * f.d[i],
                    cd(two_re_trace(mu, 3, 0))},
                xt, z, w);
      }
    }
  TransportResidualReport rep = acc.report("constant");
  if (missing_axis) rep.notices.push_back("spatial derivative unavailable on a single-site axis; term omitted");
  return rep;
}

TransportResidualReport divergence_constraint_residual(const ConstantDensityField& f,
                                                       const MeasureSamples* rho,
                                                       const std::vector<TestSymbol>& battery) {
  const TransportLattice& lat = f.lattice;
  if (lat.times.empty()) throw InsufficientDataError("no time levels");
  check_field(lat, f.a.size(), "density a");
  if (rho) check_field(lat, rho->values.size(), "charge correlation");
  TransportResidualReport rep;
  rep.variant = "divergence";
  if (lat.site_count() < 2) {
    rep.notices.push_back("single window: no spatial resolution, divergence constraint skipped");
    return rep;
  }
  const double dt = lat.times.size() > 1 ? lat.times[1] - lat.times[0] : 1.0;
  const double w_site = site_volume(lat);
  WeakAccumulator acc({"a", "b", "c", "d"}, 3, battery);
  bool missing = false;
  const std::array<std::pair<int, int>, 4> blocks{{{0, 0}, {3, 3}, {0, 3}, {3, 0}}};
  for (std::size_t n = 0; n < lat.times.size(); ++n)
    for (std::size_t s = 0; s < lat.site_count(); ++s) {
      const Vec3 x = lat.position(s);
      const Vec4 xt(lat.times[n], x[0], x[1], x[2]);
      for (int bin = 0; bin < lat.sphere.size(); ++bin) {
        const Vec4& z = lat.sphere.cell(bin).center;
        const std::size_t i = lat.index(n, s, bin);
        const CMat6 mu = rho ? rho->values[i] : CMat6::Zero();
        const double w = lat.sphere.cell(bin).weight * dt * w_site * time_cutoff(lat, n);
        for (int e = 0; e < 4; ++e) {
          std::array<cd, 3> terms{0.0, 0.0, 0.0};
          for (int j = 0; j < 3; ++j) {
            const std::function<cd(std::size_t)> get = [&](std::size_t ss) -> cd {
              const std::size_t k = lat.index(n, ss, bin);
              switch (e) {
                case 0: return f.a[k];
                case 1: return f.b[k];
                case 2: return f.c[k];
                default: return f.d[k];
              }
            };
            cd deriv = 0.0;
            if (site_derivative<cd>(lat, get, s, j, deriv))
              terms[j] = z[j + 1] * z[j + 1] * deriv;
            else
              missing = true;
          }
          acc.add(e, {terms[0], terms[1], terms[2], cd(two_re_trace(mu, blocks[e].first, blocks[e].second))},
                  xt, z, w);
        }
      }
    }
  rep = acc.report("divergence");
  if (missing) rep.notices.push_back("axis with a single site: its derivative term is omitted");
  return rep;
}

std::string to_string(TransportVariant variant) {
  return variant == TransportVariant::Verbatim ? "verbatim" : "symmetrized";
}

TransportResidualReport variable_transport_residual(const MeasureSamples& sigma,
                                                    const MaterialModel& model,
                                                    const MeasureSamples* sources,
                                                    const std::vector<TestSymbol>& battery,
                                                    TransportVariant variant) {
  const TransportLattice& lat = sigma.lattice;
  lat.validate();
  check_field(lat, sigma.values.size(), "sigma");
  if (sources) check_field(lat, sources->values.size(), "source correlation");
  const double dt = lat.times[1] - lat.times[0];
  const double w_site = site_volume(lat);
  const bool sym = variant == TransportVariant::Symmetrized;
  std::array<Mat3, 3> q;
  for (int l = 0; l < 3; ++l) q[l] = rotation_generator(l);

  MatrixWeakAccumulator acc({"sigma11", "sigma12", "sigma21", "sigma22"}, 3, battery);
  bool missing = false;

  for (std::size_t n = 1; n + 1 < lat.times.size(); ++n)
    for (std::size_t s = 0; s < lat.site_count(); ++s) {
      const Vec3 x = lat.position(s);
      const Coefficients co = model.at(x);
      const Vec4 xt(lat.times[n], x[0], x[1], x[2]);
      for (int bin = 0; bin < lat.sphere.size(); ++bin) {
        const Vec4& z = lat.sphere.cell(bin).center;
        const std::size_t i = lat.index(n, s, bin);
        auto block = [&](std::size_t k, int r, int c) { return CMat3(sigma.values[k].block<3, 3>(r, c)); };
        auto dt_block = [&](int r, int c) {
          return CMat3((block(lat.index(n + 1, s, bin), r, c) - block(lat.index(n - 1, s, bin), r, c)) / (2.0 * dt));
        };
        // zeta0 sum_l d_l(coef) d/dzeta_l of a block
        auto zeta_term = [&](int r, int c, const Vec3& grad) {
          const std::function<CMat3(int)> get = [&](int b) { return block(lat.index(n, s, b), r, c); };
          const auto g = zeta_p_gradient<CMat3>(lat.sphere, get, bin);
          return CMat3(z[0] * (grad[0] * g[0] + grad[1] * g[1] + grad[2] * g[2]));
        };
        // sum_l Q_l d/dx_l of a block
        auto flux = [&](int r, int c) {
          CMat3 sum = CMat3::Zero();
          for (int l = 0; l < 3; ++l) {
            const std::function<CMat3(std::size_t)> get = [&](std::size_t ss) {
              return block(lat.index(n, ss, bin), r, c);
            };
            CMat3 deriv = CMat3::Zero();
            if (site_derivative<CMat3>(lat, get, s, l, deriv))
              sum += q[l].cast<cd>() * deriv;
            else
              missing = true;
          }
          return sum;
        };
        const CMat6 mu = sources ? sources->values[i] : CMat6::Zero();
        const double w = lat.sphere.cell(bin).weight * dt * w_site * time_cutoff(lat, n);

        acc.add(0, {CMat3(-co.eps * dt_block(0, 0)), zeta_term(0, 0, co.grad_eps),
                    CMat3(-2.0 * co.sigma * block(i, 0, 0) - flux(0, 3)), two_re_block(mu, 0, 0)},
                xt, z, w);
        acc.add(1, {CMat3(-co.eta * (sym ? dt_block(0, 3) : block(i, 0, 3))), zeta_term(0, 3, co.grad_eta),
                    flux(0, 0), two_re_block(mu, 0, 3)},
                xt, z, w);
        acc.add(2, {CMat3(-co.eps * dt_block(3, 0)), zeta_term(sym ? 3 : 0, 0, co.grad_eps),
                    CMat3(-2.0 * co.sigma * block(i, 3, 0) - flux(3, 3)), two_re_block(mu, 3, 0)},
                xt, z, w);
        acc.add(3, {CMat3(-co.eta * (sym ? dt_block(3, 3) : block(i, 3, 3))), zeta_term(3, 3, co.grad_eta),
                    flux(3, 0), two_re_block(mu, 3, 3)},
                xt, z, w);
      }
    }
  TransportResidualReport rep = acc.report(to_string(variant));
  if (missing) rep.notices.push_back("spatial derivative unavailable on a single-site axis; term omitted");
  return rep;
}

// ---------------------------------------------------------------- prediction

double modal_damping_rate(const Coefficients& c, Mode mode) {
  switch (mode) {
    case Mode::LongE: return 2.0 * c.sigma / c.eps;
    case Mode::LongH: return 0.0;
    default: return c.sigma / c.eps;
  }
}

double PredictReport::measured_ratio() const {
  const auto& f = finest();
  return f.mass_t0 > 0.0 ? f.mass_t1 / f.mass_t0 : 1.0;
}

double PredictReport::predicted_ratio() const {
  const auto& f = finest();
  return f.mass_t0 > 0.0 ? f.predicted_t1 / f.mass_t0 : 1.0;
}

namespace {

Window time_window(const GridSpec& grid, double center, double half_width) {
  std::array<Window::Axis, 4> axes{};
  axes[0] = {false, center, half_width};
  for (int d = 1; d < 4; ++d)
    if (!grid.periodic[d])
      axes[d] = {false, grid.origin[d] + 0.5 * grid.extents[d], 0.5 * grid.extents[d]};
  return Window::raised_cosine(axes);
}

// Unit centroid of bin i at a level.
Vec4 level_centroid(const HMeasureEstimate& mu, std::size_t level, int i) {
  const Vec4& m = mu.levels[level].moment[i];
  return m.norm() > 0.0 ? Vec4(m.normalized()) : mu.sphere.cell(i).center;
}

double modal_energy(const CMat6& m, const Vec6& a0) {
  return (a0.cast<cd>().asDiagonal() * m).trace().real();
}

}  // namespace

PredictReport predict_then_compare(const OscillatingFamily& family, const MaterialModel& model,
                                   double t0, double t1, const PredictOptions& options) {
  const GridSpec& grid = family.grid;
  const double w = options.half_width;
  const double dt = grid.spacing(0);
  const double lo = grid.origin[0], hi = grid.origin[0] + grid.extents[0];
  if (!(t1 > t0)) throw Error("predict_then_compare needs t1 > t0");
  if (!(w >= 4.0 * dt)) throw InsufficientDataError("time window narrower than four time steps");
  if (t0 - w < lo - 1e-12 || t1 + w > hi + 1e-12)
    throw InsufficientDataError("time windows do not fit inside the sampled time interval");

  const Window phi0 = time_window(grid, t0, w);
  const Window phi1 = time_window(grid, t1, w);
  const StreamedFamily u = stream(family);
  const HMeasureEstimate m0 = estimate_hmeasure(u, phi0, options.sphere, options.estimator);
  const HMeasureEstimate m1 = estimate_hmeasure(u, phi1, options.sphere, options.estimator);
  std::optional<HMeasureEstimate> s0, s1;
  if (family.has_sources()) {
    const StreamedFamily f = stream(family, FamilyPart::Sources);
    s0 = correlation_measure(u, f, phi0, options.sphere, options.estimator);
    s1 = correlation_measure(u, f, phi1, options.sphere, options.estimator);
  }

  const Vec3 xbar = m0.window_centroid.tail<3>();
  const Coefficients co = model.at(xbar);
  Vec6 a0;
  a0 << co.eps, co.eps, co.eps, co.eta, co.eta, co.eta;
  const double span = t1 - t0;
  const bool constant = model.kind() == ModelKind::Constant;

  PredictReport rep;
  rep.t0 = t0;
  rep.t1 = t1;
  const int nb = options.sphere.size();
  for (std::size_t l = 0; l < m0.levels.size(); ++l) {
    PredictLevel pl;
    pl.epsilon = m0.levels[l].epsilon;
    const auto& b0 = m0.levels[l].bins;
    const auto& b1 = m1.levels[l].bins;
    std::vector<double> predicted(nb, 0.0), measured(nb, 0.0);

    for (int i = 0; i < nb; ++i) {
      const double e1 = modal_energy(b1[i], a0);
      measured[i] = e1;
      pl.mass_t1 += e1;
      const Vec4 z1 = level_centroid(m1, l, i);
      if (e1 > 0.0 && z1.tail<3>().norm() >= options.fit.min_zeta_p) {
        const DensityBin fit1 = fit_modal_bin(b1[i], z1, co.eps, co.eta);
        for (int k = 0; k < 6; ++k) pl.modal_t1[k] += fit1.modal[k];
      }

      const double e0 = modal_energy(b0[i], a0);
      pl.mass_t0 += e0;
      if (!(e0 > 0.0)) continue;
      const Vec4 z0 = level_centroid(m0, l, i);
      if (z0.tail<3>().norm() < options.fit.min_zeta_p) {
        predicted[i] += e0;  // no modal structure; carried unchanged
        continue;
      }
      const DensityBin fit0 = fit_modal_bin(b0[i], z0, co.eps, co.eta);
      const auto basis = eigen_basis(co.eps, co.eta, z0.tail<3>());
      for (int k = 0; k < 6; ++k) {
        const Mode mode = kAllModes[k];
        pl.modal_t0[k] += fit0.modal[k];
        double value = 0.0;
        int target = i;
        if (constant || mode_branch(mode) == 0) {
          const double rate = modal_damping_rate(co, mode);
          const double decay = std::exp(-rate * span);
          value = decay * fit0.modal[k];
          if (s0) {
            const Eigen::Matrix<cd, 6, 1> wv = a0.cwiseProduct(basis[k]).cast<cd>();
            const Eigen::Matrix<cd, 6, 1> bv = basis[k].cast<cd>();
            const double src0 = 2.0 * (wv.transpose() * s0->levels[l].bins[i] * bv)(0, 0).real();
            const double src1 = 2.0 * (wv.transpose() * s1->levels[l].bins[i] * bv)(0, 0).real();
            value += 0.5 * span * (decay * src0 + src1);
          }
        } else {
          RayState start;
          start.x = xbar;
          start.zeta = z0;
          start.t = t0;
          start.branch = mode_branch(mode);
          const Trajectory tr = integrate_ray(model, start, t1, options.rays);
          if (tr.status != RayStatus::Completed) continue;
          double damping = 0.0;
          for (std::size_t r = 1; r < tr.states.size(); ++r) {
            const double ra = modal_damping_rate(model.at(tr.states[r - 1].x), mode);
            const double rb = modal_damping_rate(model.at(tr.states[r].x), mode);
            damping += 0.5 * (ra + rb) * (tr.states[r].t - tr.states[r - 1].t);
          }
          value = std::exp(-damping) * fit0.modal[k];
          target = options.sphere.locate(tr.states.back().zeta);
        }
        predicted[target] += value;
        pl.modal_predicted[k] += value;
      }
    }
    double diff = 0.0;
    for (int i = 0; i < nb; ++i) {
      pl.predicted_t1 += predicted[i];
      diff += std::abs(predicted[i] - measured[i]);
    }
    pl.discrepancy = pl.mass_t1 > 0.0 ? diff / pl.mass_t1 : (diff > 0.0 ? 1.0 : 0.0);
    rep.levels.push_back(pl);
  }
  return rep;
}

}  // namespace hml
