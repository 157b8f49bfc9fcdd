#include "hml/material.hpp"

#include <cmath>
#include <sstream>

#include "hml/errors.hpp"

namespace hml {

ScalarField ScalarField::constant(double value) {
  ScalarField f;
  f.constant_ = value;
  std::ostringstream os;
  os.precision(17);
  os << value;
  f.description_ = os.str();
  return f;
}

ScalarField ScalarField::expression(const std::string& source) {
  Expression e = Expression::parse(source);
  if (e.is_constant()) {
    ScalarField f = constant(e.evaluate(Vec3::Zero()).value);
    f.description_ = source;
    return f;
  }
  ScalarField f;
  f.fn_ = [e](const Vec3& x) { return e.evaluate(x); };
  f.description_ = source;
  return f;
}

ScalarField ScalarField::function(Function fn, std::string description) {
  ScalarField f;
  f.fn_ = std::move(fn);
  f.description_ = std::move(description);
  return f;
}

ValueGrad ScalarField::sample(const Vec3& x) const {
  if (!fn_) return {constant_, Vec3::Zero()};
  return fn_(x);
}

std::string to_string(ModelKind kind) {
  return kind == ModelKind::Constant ? "constant" : "scalar_smooth";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "constant") return ModelKind::Constant;
  if (name == "scalar_smooth" || name == "variable") return ModelKind::ScalarSmooth;
  throw Error("unknown model kind '" + name + "'");
}

bool Box3::contains(const Vec3& x) const {
  return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

double Coefficients::speed() const { return 1.0 / std::sqrt(eps * eta); }

Vec3 Coefficients::speed_gradient() const {
  // v = (eps eta)^(-1/2)  =>  grad v = -v/2 (grad eps / eps + grad eta / eta)
  return -0.5 * speed() * (grad_eps / eps + grad_eta / eta);
}

MaterialModel MaterialModel::constant(double eps, double eta, double sigma) {
  if (!(eps > 0.0) || !(eta > 0.0) || !(sigma >= 0.0))
    throw DomainError("constant model requires eps > 0, eta > 0, sigma >= 0");
  MaterialModel m;
  m.eps_ = ScalarField::constant(eps);
  m.eta_ = ScalarField::constant(eta);
  m.sigma_ = ScalarField::constant(sigma);
  m.kind_ = ModelKind::Constant;
  return m;
}

MaterialModel MaterialModel::scalar(ScalarField eps, ScalarField eta, ScalarField sigma,
                                    std::optional<Box3> domain) {
  MaterialModel m;
  m.eps_ = std::move(eps);
  m.eta_ = std::move(eta);
  m.sigma_ = std::move(sigma);
  m.kind_ = ModelKind::ScalarSmooth;
  m.domain_ = std::move(domain);
  return m;
}

Coefficients MaterialModel::at(const Vec3& x) const {
  if (domain_ && !domain_->contains(x)) {
    std::ostringstream os;
    os << "point (" << x.transpose() << ") outside the model domain";
    throw DomainError(os.str());
  }
  const ValueGrad e = eps_.sample(x);
  const ValueGrad h = eta_.sample(x);
  const ValueGrad s = sigma_.sample(x);
  if (!(e.value > 0.0) || !(h.value > 0.0))
    throw DomainError("eps and eta must be strictly positive");
  if (!(s.value >= 0.0)) throw DomainError("sigma must be non-negative");
  return {e.value, h.value, s.value, e.grad, h.grad, s.grad};
}

MaterialModel MaterialModel::swapped_eps_eta() const {
  MaterialModel m = *this;
  std::swap(m.eps_, m.eta_);
  return m;
}

}  // namespace hml
