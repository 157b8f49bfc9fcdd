#include "hml/estimator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <thread>

#include <Eigen/Eigenvalues>

#include "hml/errors.hpp"
#include "hml/fft.hpp"

namespace hml {

namespace {

std::array<int, 4> dims_of(const GridSpec& g) { return g.shape; }

void check_aliasing(const StreamedFamily& f) {
  for (std::size_t l = 0; l < f.epsilons.size(); ++l)
    for (int d = 0; d < 4; ++d)
      if (f.peak_frequency[l][d] * f.grid.spacing(d) > 0.25 + 1e-12)
        throw AliasingError("eps = " + std::to_string(f.epsilons[l]) +
                            ": fewer than four samples per wavelength on axis " + std::to_string(d));
}

// phi * u followed by the 4-D transform of every component.
void window_and_transform(SpacetimeField& u, const std::vector<double>& phi, double* energy) {
  const std::size_t n = u.grid.size();
  double e = 0.0;
  for (int c = 0; c < u.components; ++c)
    for (std::size_t p = 0; p < n; ++p) {
      cd& v = u.data[c * n + p];
      v *= phi[p];
      e += std::norm(v);
    }
  if (energy) *energy = e * u.grid.cell_volume();
  const auto dims = dims_of(u.grid);
  fft_inplace(u.data, dims, u.components, FftDirection::Forward);
}

void run_parallel(int jobs, int tasks, const std::function<void(int)>& body) {
  jobs = std::clamp(jobs, 1, tasks);
  if (jobs == 1) {
    for (int t = 0; t < tasks; ++t) body(t);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&, w] {
      for (int t = w; t < tasks; t += jobs) body(t);
    });
  for (auto& th : pool) th.join();
}

HMeasureLevel accumulate(const SpacetimeField& a, const SpacetimeField& b, const SphereGrid& sphere,
                         int jobs) {
  const GridSpec& g = a.grid;
  const std::size_t n = g.size();
  const double scale = g.cell_volume() * g.cell_volume() * g.frequency_cell_volume();

  std::vector<int> bin_of(n, -1);
  {
    std::size_t p = 0;
    for (int i0 = 0; i0 < g.shape[0]; ++i0)
      for (int i1 = 0; i1 < g.shape[1]; ++i1)
        for (int i2 = 0; i2 < g.shape[2]; ++i2)
          for (int i3 = 0; i3 < g.shape[3]; ++i3, ++p) {
            if (p == 0) continue;
            const Vec4 z(g.frequency(0, i0), g.frequency(1, i1), g.frequency(2, i2), g.frequency(3, i3));
            bin_of[p] = sphere.locate(z);
          }
  }

  HMeasureLevel lvl;
  lvl.bins.assign(sphere.size(), CMat6::Zero());
  lvl.moment.assign(sphere.size(), Vec4::Zero());
  lvl.moment_weight.assign(sphere.size(), 0.0);

  const int mb = b.components;
  // One task per matrix entry plus one for the direction moments. Each entry is
  // summed in grid order, so the result does not depend on the worker count.
  run_parallel(jobs, 36 + 1, [&](int task) {
    if (task == 36) {
      std::size_t p = 0;
      for (int i0 = 0; i0 < g.shape[0]; ++i0)
        for (int i1 = 0; i1 < g.shape[1]; ++i1)
          for (int i2 = 0; i2 < g.shape[2]; ++i2)
            for (int i3 = 0; i3 < g.shape[3]; ++i3, ++p) {
              const int bin = bin_of[p];
              if (bin < 0) continue;
              double w = 0.0;
              for (int c = 0; c < a.components; ++c) w += std::norm(a.data[c * n + p]);
              if (w == 0.0) continue;
              Vec4 z(g.frequency(0, i0), g.frequency(1, i1), g.frequency(2, i2), g.frequency(3, i3));
              lvl.moment[bin] += w * z.normalized();
              lvl.moment_weight[bin] += w;
            }
      return;
    }
    const int i = task / 6, j = task % 6;
    if (i >= a.components || j >= mb) return;
    const cd* ai = a.data.data() + i * n;
    const cd* bj = b.data.data() + j * n;
    for (std::size_t p = 1; p < n; ++p) {
      const cd v = ai[p] * std::conj(bj[p]);
      if (v != cd(0.0)) lvl.bins[bin_of[p]](i, j) += v;
    }
  });

  for (auto& m : lvl.bins) m *= scale;
  for (auto& m : lvl.moment) m *= scale;
  for (auto& w : lvl.moment_weight) w *= scale;
  for (int i = 0; i < a.components; ++i)
    for (int j = 0; j < mb; ++j) lvl.dc(i, j) = scale * a.data[i * n] * std::conj(b.data[j * n]);
  return lvl;
}

}  // namespace

StreamedFamily stream(const OscillatingFamily& family, FamilyPart part) {
  StreamedFamily s;
  s.grid = family.grid;
  s.epsilons = family.epsilons;
  s.peak_frequency = family.peak_frequency;
  const OscillatingFamily* f = &family;
  switch (part) {
    case FamilyPart::Fields:
      s.level = [f](std::size_t i) { return f->fields.at(i); };
      break;
    case FamilyPart::Sources:
      if (!family.has_sources()) throw InsufficientDataError("family carries no sources");
      s.level = [f](std::size_t i) { return f->sources.at(i); };
      break;
    case FamilyPart::Charge:
      if (!family.has_charge()) throw InsufficientDataError("family carries no charge");
      s.level = [f](std::size_t i) { return pad_charge(f->charge.at(i)); };
      break;
  }
  return s;
}

SpacetimeField pad_charge(const SpacetimeField& rho) {
  if (rho.components != 1) throw MismatchError("charge must have one component");
  SpacetimeField out(rho.grid, kComponents);
  std::copy(rho.data.begin(), rho.data.end(), out.data.begin());
  return out;
}

std::vector<double> HMeasureEstimate::epsilons() const {
  std::vector<double> e;
  for (const auto& l : levels) e.push_back(l.epsilon);
  return e;
}

double HMeasureEstimate::bin_mass(int i) const {
  return hermitian ? bins[i].trace().real() : bins[i].norm();
}

double HMeasureEstimate::total_mass() const {
  double s = 0.0;
  for (int i = 0; i < static_cast<int>(bins.size()); ++i) s += bin_mass(i);
  return s;
}

SpacetimeField fourier_multiplier(const std::function<double(const Vec4&)>& a, const SpacetimeField& u) {
  SpacetimeField out = u;
  const GridSpec& g = u.grid;
  const auto dims = dims_of(g);
  fft_inplace(out.data, dims, out.components, FftDirection::Forward);
  const std::size_t n = g.size();
  std::vector<double> m(n, 1.0);
  for (std::size_t p = 1; p < n; ++p) {
    const auto i = g.unflatten(p);
    const Vec4 z(g.frequency(0, i[0]), g.frequency(1, i[1]), g.frequency(2, i[2]), g.frequency(3, i[3]));
    m[p] = a(z.normalized());
  }
  for (int c = 0; c < out.components; ++c)
    for (std::size_t p = 0; p < n; ++p) out.data[c * n + p] *= m[p] / static_cast<double>(n);
  fft_inplace(out.data, dims, out.components, FftDirection::Inverse);
  return out;
}

SpacetimeField cutoff_multiply(const Window& b, const SpacetimeField& u) {
  SpacetimeField out = u;
  const std::vector<double> w = sample_window(b, u.grid);
  const std::size_t n = u.grid.size();
  for (int c = 0; c < out.components; ++c)
    for (std::size_t p = 0; p < n; ++p) out.data[c * n + p] *= w[p];
  return out;
}

HMeasureEstimate cross_spectral_measure(const StreamedFamily& u, const StreamedFamily& g,
                                        const Window& phi1, const Window& phi2,
                                        const SphereGrid& sphere, const EstimatorOptions& options,
                                        bool same_family) {
  u.grid.validate();
  if (!(u.grid == g.grid)) throw MismatchError("families live on different grids");
  if (u.epsilons != g.epsilons) throw MismatchError("families have different eps ladders");
  if (u.epsilons.size() < 2) throw InsufficientDataError("at least two eps levels are required");
  if (u.peak_frequency.size() != u.epsilons.size() || g.peak_frequency.size() != g.epsilons.size())
    throw MismatchError("peak frequency metadata does not match the ladder");
  for (std::size_t i = 1; i < u.epsilons.size(); ++i)
    if (!(u.epsilons[i] < u.epsilons[i - 1])) throw MismatchError("eps ladder must be strictly decreasing");
  if (!phi1.supported_in(u.grid) || !phi2.supported_in(u.grid))
    throw Error("window support is not inside the grid box");
  if (options.check_aliasing) {
    check_aliasing(u);
    if (!same_family) check_aliasing(g);
  }

  const bool same_window = &phi1 == &phi2;
  HMeasureEstimate est;
  est.hermitian = same_family && same_window;
  est.grid = u.grid;
  est.sphere = sphere;
  est.window_centroid = phi1.centroid(u.grid);
  est.window_name = phi1.name();
  est.test_pair = same_window ? phi1.name() + "|" + phi1.name() : phi1.name() + "|" + phi2.name();
  est.richardson = options.richardson;

  const std::vector<double> w1 = sample_window(phi1, u.grid);
  const std::vector<double> w2 = same_window ? std::vector<double>{} : sample_window(phi2, u.grid);

  for (std::size_t l = 0; l < u.epsilons.size(); ++l) {
    SpacetimeField a = u.level(l);
    if (!(a.grid == u.grid)) throw MismatchError("level does not match the family grid");
    double energy = 0.0;
    window_and_transform(a, w1, &energy);
    HMeasureLevel lvl;
    if (est.hermitian) {
      lvl = accumulate(a, a, sphere, options.jobs);
    } else {
      SpacetimeField b = same_family ? u.level(l) : g.level(l);
      if (!(b.grid == u.grid)) throw MismatchError("level does not match the family grid");
      window_and_transform(b, same_window ? w1 : w2, nullptr);
      lvl = accumulate(a, b, sphere, options.jobs);
    }
    lvl.epsilon = u.epsilons[l];
    lvl.field_energy = energy;
    est.levels.push_back(std::move(lvl));
  }

  const HMeasureLevel& fine = est.levels.back();
  const HMeasureLevel& coarse = est.levels[est.levels.size() - 2];
  est.bins = fine.bins;
  if (options.richardson)
    for (std::size_t i = 0; i < est.bins.size(); ++i) est.bins[i] = 2.0 * fine.bins[i] - coarse.bins[i];

  double fine_mass = 0.0, drift = 0.0;
  for (std::size_t i = 0; i < fine.bins.size(); ++i) {
    fine_mass += est.hermitian ? fine.bins[i].trace().real() : fine.bins[i].norm();
    drift = std::max(drift, (fine.bins[i] - coarse.bins[i]).norm());
  }
  est.cauchy_drift = fine_mass > 0.0 ? drift / fine_mass : 0.0;

  est.centroids.resize(sphere.size());
  for (int i = 0; i < sphere.size(); ++i) {
    const Vec4& m = fine.moment[i];
    est.centroids[i] = m.norm() > 0.0 ? Vec4(m.normalized()) : sphere.cell(i).center;
  }
  return est;
}

HMeasureEstimate estimate_hmeasure(const OscillatingFamily& family, const Window& phi1,
                                   const Window& phi2, const SphereGrid& sphere,
                                   const EstimatorOptions& options) {
  const StreamedFamily s = stream(family);
  return cross_spectral_measure(s, s, phi1, phi2, sphere, options, true);
}

HMeasureEstimate estimate_hmeasure(const StreamedFamily& family, const Window& phi,
                                   const SphereGrid& sphere, const EstimatorOptions& options) {
  return cross_spectral_measure(family, family, phi, phi, sphere, options, true);
}

HMeasureEstimate correlation_measure(const StreamedFamily& u, const StreamedFamily& g,
                                     const Window& phi, const SphereGrid& sphere,
                                     const EstimatorOptions& options) {
  return cross_spectral_measure(u, g, phi, phi, sphere, options, false);
}

InvariantReport check_invariants(const HMeasureEstimate& mu, double hermitian_tol, double psd_tol) {
  InvariantReport r;
  r.min_eigen_ratio = 0.0;
  bool any = false;
  for (const HMeasureLevel& lvl : mu.levels)
    for (const CMat6& m : lvl.bins) {
      const double tr = m.trace().real();
      if (m.isZero(0.0)) continue;
      ++r.bins_checked;
      const double floor = std::max(std::abs(tr), 1e-300);
      const double defect = (m - m.adjoint()).cwiseAbs().maxCoeff() / floor;
      r.hermitian_defect = std::max(r.hermitian_defect, defect);
      Eigen::SelfAdjointEigenSolver<CMat6> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
      const double ratio = es.eigenvalues()[0] / floor;
      r.min_eigen_ratio = any ? std::min(r.min_eigen_ratio, ratio) : ratio;
      any = true;
    }
  r.hermitian_ok = r.hermitian_defect <= hermitian_tol;
  r.psd_ok = r.min_eigen_ratio >= -psd_tol;
  return r;
}

}  // namespace hml
