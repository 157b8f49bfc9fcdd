#pragma once

#include <functional>
#include <optional>
#include <string>

#include "hml/expression.hpp"
#include "hml/types.hpp"

namespace hml {

/// Scalar coefficient field with an exact gradient.
class ScalarField {
 public:
  using Function = std::function<ValueGrad(const Vec3&)>;

  static ScalarField constant(double value);
  static ScalarField expression(const std::string& source);
  static ScalarField function(Function f, std::string description = "function");

  ValueGrad sample(const Vec3& x) const;
  bool is_constant() const noexcept { return !fn_; }
  /// Expression source, or the formatted constant, or the function description.
  const std::string& description() const noexcept { return description_; }

 private:
  double constant_ = 0.0;
  Function fn_;
  std::string description_;
};

enum class ModelKind { Constant, ScalarSmooth };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Axis-aligned box [lo, hi] in physical space.
struct Box3 {
  Vec3 lo;
  Vec3 hi;
  bool contains(const Vec3& x) const;
};

/// Coefficients eps, eta, sigma and their gradients at one point.
struct Coefficients {
  double eps;
  double eta;
  double sigma;
  Vec3 grad_eps;
  Vec3 grad_eta;
  Vec3 grad_sigma;

  /// Propagation speed v = 1 / sqrt(eps * eta).
  double speed() const;
  Vec3 speed_gradient() const;
};

/// Isotropic material: eps(x) Id, eta(x) Id, sigma(x) Id.
class MaterialModel {
 public:
  static MaterialModel constant(double eps, double eta, double sigma);
  /// ScalarSmooth kind. Lower bounds are checked at every evaluation.
  static MaterialModel scalar(ScalarField eps, ScalarField eta, ScalarField sigma,
                              std::optional<Box3> domain = std::nullopt);

  ModelKind kind() const noexcept { return kind_; }

  /// Throws DomainError outside the domain or when eps, eta <= 0 or sigma < 0.
  Coefficients at(const Vec3& x) const;

  /// The same model with eps and eta exchanged (negative controls).
  MaterialModel swapped_eps_eta() const;

  const ScalarField& eps() const noexcept { return eps_; }
  const ScalarField& eta() const noexcept { return eta_; }
  const ScalarField& sigma() const noexcept { return sigma_; }
  const std::optional<Box3>& domain() const noexcept { return domain_; }

 private:
  MaterialModel() = default;

  ScalarField eps_;
  ScalarField eta_;
  ScalarField sigma_;
  ModelKind kind_ = ModelKind::Constant;
  std::optional<Box3> domain_;
};

}  // namespace hml
