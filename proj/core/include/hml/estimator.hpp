#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hml/grid.hpp"
#include "hml/sphere_grid.hpp"
#include "hml/synthesis.hpp"
#include "hml/window.hpp"

namespace hml {

/// A family whose levels are produced on demand, so only one level is resident at a time.
struct StreamedFamily {
  GridSpec grid;
  std::vector<double> epsilons;
  std::vector<Vec4> peak_frequency;
  /// Returns the 6-component field of level i (a fresh copy; it is transformed in place).
  std::function<SpacetimeField(std::size_t)> level;
};

enum class FamilyPart { Fields, Sources, Charge };

/// View of a stored family. Charge is padded to (rho, 0, 0, 0, 0, 0).
StreamedFamily stream(const OscillatingFamily& family, FamilyPart part = FamilyPart::Fields);

/// (rho, 0, 0, 0, 0, 0) from a one-component charge field.
SpacetimeField pad_charge(const SpacetimeField& rho);

struct EstimatorOptions {
  /// Report 2 M(eps_fine) - M(eps_coarse) instead of the finest level.
  bool richardson = false;
  int jobs = 1;
  bool check_aliasing = true;
};

struct HMeasureLevel {
  double epsilon = 0.0;
  std::vector<CMat6> bins;
  /// Mass-weighted sum of unit directions per bin, and the mass itself.
  std::vector<Vec4> moment;
  std::vector<double> moment_weight;
  /// Zero-frequency contribution, excluded from the bins.
  CMat6 dc = CMat6::Zero();
  /// ||phi1 u||^2 on the grid (Plancherel reference for the left factor).
  double field_energy = 0.0;
};

struct HMeasureEstimate {
  std::string test_pair;
  bool hermitian = true;
  GridSpec grid;
  SphereGrid sphere;
  Vec4 window_centroid = Vec4::Zero();
  std::string window_name;
  /// Levels in ladder order, finest last.
  std::vector<HMeasureLevel> levels;
  /// Limit surrogate: finest level, or the Richardson combination.
  std::vector<CMat6> bins;
  /// Unit mass centroid per bin (cell center where the bin is empty).
  std::vector<Vec4> centroids;
  double cauchy_drift = 0.0;
  bool richardson = false;
  nlohmann::json metadata = nlohmann::json::object();

  std::vector<double> epsilons() const;
  /// Re tr for Hermitian estimates, Frobenius norm otherwise.
  double bin_mass(int i) const;
  double total_mass() const;
};

/// F^{-1}(a(zeta/|zeta|) F u); the zero frequency is passed unchanged.
SpacetimeField fourier_multiplier(const std::function<double(const Vec4&)>& a, const SpacetimeField& u);

/// Pointwise product b(t, x) u(t, x).
SpacetimeField cutoff_multiply(const Window& b, const SpacetimeField& u);

/// Sphere-binned cross spectra of phi1 u and phi2 g over the ladder.
/// Throws InsufficientDataError for fewer than two levels, AliasingError when a
/// level has fewer than four samples per wavelength, MismatchError for
/// differing grids or ladders, Error for windows outside the box.
HMeasureEstimate cross_spectral_measure(const StreamedFamily& u, const StreamedFamily& g,
                                        const Window& phi1, const Window& phi2,
                                        const SphereGrid& sphere, const EstimatorOptions& options,
                                        bool same_family);

HMeasureEstimate estimate_hmeasure(const OscillatingFamily& family, const Window& phi1,
                                   const Window& phi2, const SphereGrid& sphere,
                                   const EstimatorOptions& options = {});
/// phi1 = phi2 = phi; Hermitian.
HMeasureEstimate estimate_hmeasure(const StreamedFamily& family, const Window& phi,
                                   const SphereGrid& sphere, const EstimatorOptions& options = {});

/// mu_{ug} with g the sources or the padded charge of the same family, or another family.
HMeasureEstimate correlation_measure(const StreamedFamily& u, const StreamedFamily& g,
                                     const Window& phi, const SphereGrid& sphere,
                                     const EstimatorOptions& options = {});

struct InvariantReport {
  /// max over bins of max_ij |mu_ij - conj(mu_ji)| / max(tr, floor).
  double hermitian_defect = 0.0;
  /// min over bins of lambda_min / tr (0 when every bin is empty).
  double min_eigen_ratio = 0.0;
  bool hermitian_ok = true;
  bool psd_ok = true;
  int bins_checked = 0;
};

InvariantReport check_invariants(const HMeasureEstimate& mu, double hermitian_tol = 1e-12,
                                 double psd_tol = 1e-10);

}  // namespace hml
