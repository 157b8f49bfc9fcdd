#pragma once

// Symbol matrices of Maxwell's system written as a symmetric hyperbolic system
//
//   A0 du/dt + sum_j A^j du/dx_j + C u = f,   u = (E, H),
//
// with A0 = diag(eps Id, eta Id), A^j = [[0, Q_j^T], [Q_j, 0]], C = diag(sigma Id, 0).

#include <array>
#include <string>

#include "hml/material.hpp"
#include "hml/test_symbol.hpp"
#include "hml/types.hpp"

namespace hml {

/// Unit covector zeta = (zeta0, zeta') on S^3. Normalized on construction.
class FrequencyDirection {
 public:
  /// Throws DegenerateDirectionError for the zero vector.
  explicit FrequencyDirection(const Vec4& raw);
  FrequencyDirection(double zeta0, const Vec3& zeta_p);

  double zeta0() const noexcept { return v_[0]; }
  Vec3 zeta_p() const { return v_.tail<3>(); }
  const Vec4& vector() const noexcept { return v_; }

 private:
  Vec4 v_;
};

/// E(zeta') with E p = zeta' x p. Antisymmetric.
Mat3 antisym_E(const Vec3& zeta_p);

/// Q_k = E(e_k) = dE/dzeta_k, k = 1..3 (pass 0-based index 0..2).
Mat3 rotation_generator(int k);

struct SystemMatrices {
  std::array<Mat6, 4> A;  ///< A[0] = A0, A[1..3] = A^j
  Mat6 C;
};

/// Throws DomainError when x is outside the model domain.
SystemMatrices assemble_system_matrices(const MaterialModel& model, const Vec3& x);

struct SymbolMatrix {
  Mat6 entries;
  Vec3 x;
  Vec4 zeta;
};

/// P(x, zeta) = zeta0 A0(x) + sum_j zeta_j A^j.
SymbolMatrix assemble_P(const MaterialModel& model, const Vec3& x, const FrequencyDirection& zeta);
/// Unnormalized variant; P is linear in zeta.
Mat6 assemble_P(const MaterialModel& model, const Vec3& x, const Vec4& zeta);

/// B(zeta') = diag(diag(z1, z2, z3), diag(z1, z2, z3)).
Mat6 assemble_divergence_symbol(const Vec3& zeta_p);

/// L = A0^{-1} sum_j zeta_j A^j = [[0, -E/eps], [E/eta, 0]].
Mat6 dispersion_matrix(const MaterialModel& model, const Vec3& x, const Vec3& zeta_p);

/// Orthonormal right-handed triple (zeta_hat, z1, z2). At the polar axis phi = 0.
struct PropagationBasis {
  Vec3 direction;
  Vec3 z1;
  Vec3 z2;
};

/// Throws DegenerateDirectionError for zeta' = 0.
PropagationBasis propagation_basis(const Vec3& zeta_p);

/// Eigenvector labels, in basis order b0^1, b0^2, b+^1, b+^2, b-^1, b-^2.
enum class Mode { LongE = 0, LongH = 1, Plus1 = 2, Plus2 = 3, Minus1 = 4, Minus2 = 5 };

inline constexpr std::array<Mode, 6> kAllModes{Mode::LongE, Mode::LongH, Mode::Plus1,
                                               Mode::Plus2, Mode::Minus1, Mode::Minus2};

/// "long-e", "long-h", "trans+1", "trans+2", "trans-1", "trans-2".
std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

/// -1, 0 or +1: sign of the dispersion eigenvalue (0 for longitudinal, +1 for trans+).
int mode_branch(Mode mode);

/// Eigenvalues of P' = A0^{-1} P and the A0-orthonormal eigenvector basis.
struct EigenStructure {
  double omega0;      ///< zeta0
  double omega_plus;  ///< zeta0 + v |zeta'|
  double omega_minus; ///< zeta0 - v |zeta'|
  std::array<Vec6, 6> basis;
  double speed;

  double eigenvalue(Mode mode) const;
  const Vec6& vector(Mode mode) const { return basis[static_cast<int>(mode)]; }
};

/// Throws DegenerateDirectionError when zeta' = 0.
EigenStructure eigen_structure(const MaterialModel& model, const Vec3& x, const Vec4& zeta);

/// The six eigenvectors without eigenvalues (only depends on eps, eta, zeta').
std::array<Vec6, 6> eigen_basis(double eps, double eta, const Vec3& zeta_p);

/// {P, psi} = sum_l dP/dzeta_l dpsi/dx~_l - dpsi/dzeta_l dP/dx~_l, l = 0..3.
Mat6 poisson_bracket(const MaterialModel& model, const TestSymbol& psi, const Vec4& xt,
                     const Vec4& zeta);

/// {P, psi} + psi sum_k d_k A^k - 2 psi S with S = (C + C^T)/2.
Mat6 propagation_operator(const MaterialModel& model, const TestSymbol& psi, const Vec4& xt,
                          const Vec4& zeta);

}  // namespace hml
