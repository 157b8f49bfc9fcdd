#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hml/estimator.hpp"
#include "hml/material.hpp"
#include "hml/sphere_grid.hpp"
#include "hml/symbols.hpp"
#include "hml/test_symbol.hpp"
#include "hml/verifier.hpp"

namespace hml {

// ---------------------------------------------------------------- rays

enum class RayStatus { Running, Completed, Degenerate, OutOfDomain };
std::string to_string(RayStatus status);

/// A point of the characteristic flow of omega = zeta0 + branch v(x) |zeta'|.
/// zeta is carried unnormalized (zeta0 is fixed); direction() is the unit covector.
struct RayState {
  Vec3 x = Vec3::Zero();
  Vec4 zeta = Vec4::UnitW();
  double t = 0.0;
  int branch = 1;
  std::vector<double> payload;
  RayStatus status = RayStatus::Running;

  Vec4 direction() const { return zeta.normalized(); }
};

double hamiltonian(const MaterialModel& model, const RayState& ray);

struct RayOptions {
  double dt = 1e-3;
  /// Record every n-th step in the trajectory (the final state is always recorded).
  int record_every = 10;
};

struct Trajectory {
  std::vector<RayState> states;
  RayStatus status = RayStatus::Completed;
  double hamiltonian_drift = 0.0;  ///< max |omega - omega(0)| along the ray
};

/// RK4 on x' = branch v zeta'/|zeta'|, zeta'' = -branch |zeta'| grad v, from ray.t to t_end
/// (t_end < ray.t integrates backwards). Rays stop when |zeta'| vanishes or leave the domain.
Trajectory integrate_ray(const MaterialModel& model, const RayState& start, double t_end,
                         const RayOptions& options = {});
std::vector<Trajectory> integrate_rays(const MaterialModel& model, const std::vector<RayState>& starts,
                                       double t_end, const RayOptions& options = {}, int jobs = 1);

// ---------------------------------------------------------------- residuals

/// Sampling of densities over time levels, a spatial lattice of window centers, and sphere bins.
struct TransportLattice {
  std::vector<double> times;
  std::array<int, 3> sites{1, 1, 1};
  Vec3 origin = Vec3::Zero();
  Vec3 spacing = Vec3::Ones();
  SphereGrid sphere;

  std::size_t site_count() const {
    return static_cast<std::size_t>(sites[0]) * sites[1] * sites[2];
  }
  std::size_t size() const { return times.size() * site_count() * sphere.size(); }
  std::size_t index(std::size_t n, std::size_t site, int bin) const {
    return (n * site_count() + site) * sphere.size() + bin;
  }
  Vec3 position(std::size_t site) const;
  /// Throws InsufficientDataError for fewer than three time levels or non-uniform spacing.
  void validate() const;
};

/// 6x6 matrix samples on a lattice: H-measure blocks, or correlation measures.
struct MeasureSamples {
  TransportLattice lattice;
  std::vector<CMat6> values;
};

/// Constant-case scalar densities on a lattice, relative to zeta' zeta'^T.
struct ConstantDensityField {
  TransportLattice lattice;
  std::vector<double> a, b;
  std::vector<cd> c, d;
};

/// Weak pairings sum psi(t, x, zeta) chi(t) R w over interior time levels, lattice sites and
/// bins, with w the bin solid angle times dt times the site volume and chi = sin^2 over the
/// sampled time interval (the pairing is against test functions vanishing at the ends).
struct TransportRowResidual {
  std::string equation;
  std::string psi;
  cd residual = 0.0;
  /// Largest |<term, psi>| over the terms of the row (right-hand side included).
  double dominant = 0.0;
  double relative = 0.0;
};

struct TransportResidualReport {
  std::string variant;
  std::vector<TransportRowResidual> rows;
  /// Strong-form max |residual| / max |dominant term| per equation over interior samples.
  std::map<std::string, double> strong;
  std::vector<std::string> notices;

  double max_relative() const;
  /// Sum over rows of |residual| for one equation (all equations when empty).
  double absolute(const std::string& equation = "") const;
};

/// The four scalar rows for a, c, b, d with the trace terms Tr(zeta' zeta'^T dE/dzeta_l).
/// Time derivatives are scaled by eps (rows for a, c) or eta (rows for b, d) and the damping
/// factor is 2 sigma; eps = eta = sigma = 1 gives the rows exactly as usually printed.
/// `sources` holds mu_uf on the same lattice (absent means zero).
TransportResidualReport constant_transport_residual(const ConstantDensityField& densities,
                                                    const MaterialModel& model,
                                                    const MeasureSamples* sources,
                                                    const std::vector<TestSymbol>& battery);

/// zeta1^2 dx1 a + zeta2^2 dx2 a + zeta3^2 dx3 a - 2 Re Tr mu_{u rho~, 11}, and the same for b, c, d
/// with blocks 22, 12, 21. Axes with a single site are skipped with a notice; a lattice with
/// one site in total yields an empty report with a notice.
TransportResidualReport divergence_constraint_residual(const ConstantDensityField& densities,
                                                       const MeasureSamples* charge_correlation,
                                                       const std::vector<TestSymbol>& battery);

enum class TransportVariant { Verbatim, Symmetrized };
std::string to_string(TransportVariant variant);

/// Block rows for sigma11, sigma12, sigma21, sigma22. The verbatim variant has no time
/// derivative in rows 2 and 4 and uses sigma11 in the zeta-derivative term of row 3;
/// the symmetrized variant inserts eta d/dt and uses sigma21.
TransportResidualReport variable_transport_residual(const MeasureSamples& sigma,
                                                    const MaterialModel& model,
                                                    const MeasureSamples* sources,
                                                    const std::vector<TestSymbol>& battery,
                                                    TransportVariant variant);

/// Derivatives used by the residuals, exposed for tests.
/// d/dzeta_l (l = 0..3) of a per-bin scalar at `bin`, via hyperspherical angle differences.
/// Centered differences in each angle (one-sided second order at the a and b edges,
/// cyclic in g), mapped through the chart gradients.
CVec4 sphere_gradient(const SphereGrid& sphere, const std::function<cd(int)>& value, int bin);
/// d/dt at time level n (centered), n must be interior.
cd time_derivative(const TransportLattice& lattice, const std::function<cd(std::size_t)>& value,
                   std::size_t n);

// ---------------------------------------------------------------- prediction

struct PredictOptions {
  /// Half width of the raised-cosine time windows centred at t0 and t1.
  double half_width = 0.25;
  SphereGrid sphere;
  EstimatorOptions estimator;
  RayOptions rays;
  FitOptions fit;
};

struct PredictLevel {
  double epsilon = 0.0;
  double mass_t0 = 0.0;
  double mass_t1 = 0.0;
  double predicted_t1 = 0.0;
  /// sum_bins |predicted - measured| / measured total, at t1.
  double discrepancy = 0.0;
  /// Modal energies summed over bins at t0, t1 and predicted at t1.
  std::array<double, 6> modal_t0{}, modal_t1{}, modal_predicted{};
};

struct PredictReport {
  double t0 = 0.0;
  double t1 = 0.0;
  std::vector<PredictLevel> levels;

  const PredictLevel& finest() const { return levels.back(); }
  double measured_ratio() const;
  double predicted_ratio() const;
};

/// Damping rate of the modal energy: 2 b^T C b, i.e. 2 sigma/eps (long-e), 0 (long-h),
/// sigma/eps (transverse).
double modal_damping_rate(const Coefficients& c, Mode mode);

/// Estimates modal energies with time windows at t0 and t1, transports the t0 energies
/// (constant case: exponential damping per mode plus sources; variable case: along rays)
/// and compares with t1. Throws InsufficientDataError when a window is narrower than four
/// time steps or does not fit in the time extent of the grid.
PredictReport predict_then_compare(const OscillatingFamily& family, const MaterialModel& model,
                                   double t0, double t1, const PredictOptions& options = {});

}  // namespace hml
