#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "hml/estimator.hpp"
#include "hml/material.hpp"
#include "hml/symbols.hpp"

namespace hml {

enum class LocalisationSymbol { P, B };

struct BinResidual {
  int bin;
  double mass;
  double residual;
};

struct LocalisationReport {
  /// Mass-carrying bins only; empty bins are absent rather than zero.
  std::vector<BinResidual> bins;
  int absent = 0;
  double max_residual = 0.0;
  /// Mass-weighted mean over the mass-carrying bins.
  double weighted_residual = 0.0;
};

/// ||symbol(x_bar, zeta_bin) mu_bin||_F / ||mu_bin||_F, with x_bar the window centroid and
/// zeta_bin the mass centroid of the bin. Bins below `relative_mass` of the total are absent.
LocalisationReport localisation_residual(const HMeasureEstimate& mu, const MaterialModel& model,
                                         LocalisationSymbol symbol, double relative_mass = 1e-8);
/// Same, for the level with index `level` (using that level's own centroids).
LocalisationReport localisation_residual(const HMeasureEstimate& mu, std::size_t level,
                                         const MaterialModel& model, LocalisationSymbol symbol,
                                         double relative_mass = 1e-8);

enum class SupportCase {
  /// [{zeta0 = 0} u {zeta' = 0}] n {zeta1 zeta2 zeta3 = 0}
  Constant,
  /// {zeta0 = 0} u {zeta0 = +v|zeta'|} u {zeta0 = -v|zeta'|}, v at the window centroid
  Variable,
};

struct SupportReport {
  double total_mass = 0.0;
  /// Mass fraction within the angular tolerance of the declared set (1 when vacuous).
  double fraction = 1.0;
  bool vacuous = true;
  double tolerance = 0.0;
  /// Fractions near each elementary set, keyed by a short name.
  std::map<std::string, double> breakdown;
};

/// Tolerance is `widths` bin widths of angular distance from each bin centroid.
SupportReport support_check(const HMeasureEstimate& mu, SupportCase which, const MaterialModel& model,
                            double widths = 2.0);

/// Angular distances from a unit direction to the elementary sets.
struct SetDistances {
  double zeta0_zero;
  double zetap_zero;
  double coordinate_planes;
  double plus_sheet;   ///< zeta0 = +v|zeta'|
  double minus_sheet;  ///< zeta0 = -v|zeta'|
  double constant_declared;
  double characteristic;
};
SetDistances set_distances(const Vec4& zeta, double speed);

struct KernelReport {
  int nullity = 0;
  std::array<double, 9> singular_values{};
  /// max |s - |zeta'|| over the nonzero singular values.
  double nonzero_error = 0.0;
  /// Null basis elements as 3x3 matrices.
  std::vector<Mat3> null_basis;
  /// max over the basis of |column x zeta_hat| / |A| (0 means columns parallel to zeta').
  double column_misalignment = 0.0;
  /// Same for rows; large values show the row convention fails.
  double row_misalignment = 0.0;
  bool columns_parallel = false;
};

/// Nullspace of A -> E(zeta') A on 3x3 matrices by SVD. Throws DegenerateDirectionError for zeta' = 0.
KernelReport kernel_lemma_check(const Vec3& zeta_p, double tol = 1e-10);

/// Densities of one bin. Constant-case scalars are relative to zeta' zeta'^T
/// (zeta' from the unit bin direction); modal coefficients follow kAllModes order.
struct DensityBin {
  int bin = -1;
  Vec4 direction = Vec4::Zero();
  double mass = 0.0;
  double a = 0.0;
  double b = 0.0;
  cd c = 0.0;
  cd d = 0.0;
  std::array<double, 6> modal{};
  /// Relative Frobenius misfit of the reconstruction.
  double residual = 0.0;
};

struct DensityDecomposition {
  ModelKind kind = ModelKind::Constant;
  std::vector<DensityBin> bins;
  /// Mass-carrying bins skipped because zeta' is too small.
  std::vector<int> excluded;

  double max_residual() const;
  /// max |c - conj(d)| / (a + b) over fitted bins.
  double conjugate_defect() const;
  std::array<double, 6> modal_totals() const;
};

struct FitOptions {
  double relative_mass = 1e-8;
  double min_zeta_p = 1e-2;
};

DensityBin fit_constant_bin(const CMat6& mu, const Vec4& zeta);
CMat6 reconstruct_constant(const DensityBin& fit);

/// A0-projection onto the dyads b_k b_k^T: s_k = b_k^T A0 mu A0 b_k.
DensityBin fit_modal_bin(const CMat6& mu, const Vec4& zeta, double eps, double eta);
CMat6 reconstruct_modal(const DensityBin& fit, double eps, double eta);

/// Blocks sigma11, sigma12, sigma21, sigma22 written out in the propagation basis.
std::array<Mat3, 4> modal_blocks(const std::array<double, 6>& coeff, double eps, double eta,
                                 const Vec3& zeta_p);

DensityDecomposition fit_constant_decomposition(const HMeasureEstimate& mu, const FitOptions& options = {});
/// Model evaluated at the window centroid.
DensityDecomposition fit_modal_decomposition(const HMeasureEstimate& mu, const MaterialModel& model,
                                             const FitOptions& options = {});

}  // namespace hml
