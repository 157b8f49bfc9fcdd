#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hml/grid.hpp"
#include "hml/material.hpp"
#include "hml/symbols.hpp"
#include "hml/window.hpp"

namespace hml {

/// Fields u^eps = (E, H) for a strictly decreasing eps ladder, with optional
/// sources f^eps (6 components) and charge rho^eps (1 component).
struct OscillatingFamily {
  GridSpec grid;
  std::vector<double> epsilons;
  std::vector<SpacetimeField> fields;
  std::vector<SpacetimeField> sources;
  std::vector<SpacetimeField> charge;
  /// Per eps, largest |frequency| (cycles per unit) carried on each axis.
  std::vector<Vec4> peak_frequency;
  nlohmann::json generator = nlohmann::json::object();

  bool has_sources() const { return !sources.empty(); }
  bool has_charge() const { return !charge.empty(); }
  std::size_t levels() const { return epsilons.size(); }
  /// Throws MismatchError on inconsistent sizes or a ladder that is not strictly decreasing.
  void validate() const;
};

/// Default ladder 2^-4 .. 2^-8.
std::vector<double> default_epsilon_ladder();

struct ConstitutiveFields {
  std::vector<SpacetimeField> D;  ///< eps E
  std::vector<SpacetimeField> J;  ///< sigma E
  std::vector<SpacetimeField> B;  ///< eta H
};

ConstitutiveFields constitutive_fields(const MaterialModel& model, const OscillatingFamily& family);

struct PlaneWaveSpec {
  Eigen::Vector3i k{0, 0, 1};
  Mode mode = Mode::Plus1;
  Window envelope = Window::constant();
  /// Amplitude is multiplied by eps^amplitude_exponent (1 gives a strongly null family).
  double amplitude_exponent = 0.0;
  bool with_sources = true;
};

/// Temporal frequency c with P(c, k) b_mode = 0: c = -branch * v |k|.
double plane_wave_frequency(const MaterialModel& model, const Eigen::Vector3i& k, Mode mode);

/// u = phi b exp(2 pi i (k.x + c t) / eps). Throws UnsupportedGeneratorError for variable models.
SpacetimeField plane_wave_level(const MaterialModel& model, const GridSpec& grid,
                                const PlaneWaveSpec& spec, double eps);
/// f = A0 du/dt + sum_j A^j du/dx_j + C u, evaluated analytically.
SpacetimeField plane_wave_sources(const MaterialModel& model, const GridSpec& grid,
                                  const PlaneWaveSpec& spec, double eps);
OscillatingFamily plane_wave_family(const MaterialModel& model, const GridSpec& grid,
                                    const PlaneWaveSpec& spec, const std::vector<double>& epsilons);

/// Evolves periodic initial data exactly in Fourier space, sampled at the time
/// coordinates of `grid` (initial data taken at grid.origin[0]).
SpacetimeField exact_constant_evolution(const SpatialField& initial, const MaterialModel& model,
                                        const GridSpec& grid);

struct ExactSolutionSpec {
  Eigen::Vector3i k{0, 0, 1};
  Mode mode = Mode::Plus1;
  /// Spatial profile of the initial data, read at t = grid.origin[0].
  Window envelope = Window::constant();
};

/// Initial data envelope * b_mode * exp(2 pi i k.x / eps), evolved exactly.
SpacetimeField exact_solution_level(const MaterialModel& model, const GridSpec& grid,
                                    const ExactSolutionSpec& spec, double eps);
OscillatingFamily exact_solution_family(const MaterialModel& model, const GridSpec& grid,
                                        const ExactSolutionSpec& spec,
                                        const std::vector<double>& epsilons);

/// Phase S(t, x) with gradient (dS/dt, grad_x S).
struct Phase {
  std::function<double(const Vec4&)> value;
  std::function<Vec4(const Vec4&)> gradient;
  std::string description;

  /// S = zeta . (t, x).
  static Phase linear(const Vec4& zeta);
  /// For a model that depends on x3 only: S = c (int_{z_lo}^{x3} ds / v - branch t),
  /// which satisfies dS/dt + branch v |grad S| = 0 with grad S along e3.
  /// x1, x2 of `reference` are used when sampling the model.
  static Phase stratified(const MaterialModel& model, int branch, double c, const Vec3& reference,
                          double z_lo, double z_hi);
};

struct WkbSpec {
  Phase phase;
  Mode mode = Mode::Plus1;
  Window amplitude = Window::constant();
  bool with_sources = true;
};

/// u = a b_mode(x, grad S) exp(2 pi i S / eps). Throws DegenerateDirectionError when
/// grad_x S vanishes where the amplitude does not.
SpacetimeField wkb_level(const MaterialModel& model, const GridSpec& grid, const WkbSpec& spec,
                         double eps, SpacetimeField* sources = nullptr, Vec4* peak = nullptr);
OscillatingFamily wkb_family(const MaterialModel& model, const GridSpec& grid, const WkbSpec& spec,
                             const std::vector<double>& epsilons);

/// div E per time slice, by spectral differentiation on the periodic spatial box.
SpacetimeField charge_density(const SpacetimeField& u);
/// Fills family.charge for every level.
void attach_charge(OscillatingFamily& family);

/// max over components of |sum u_i w dV| per level (weak-null proxy).
std::vector<double> weak_pairing(const OscillatingFamily& family, const Window& w);

}  // namespace hml
