#pragma once

#include <cmath>
#include <cstddef>

#include <Eigen/Eigenvalues>

#include "robust_sp/dpd.hpp"

namespace robust_sp {

/// C_alpha = int f^{1+a} u, C^(1)_alpha = int f^{1+a} du/dlambda,
/// C^(2)_alpha = int f^{1+a} u u^T for one family member lambda.
struct CConstants {
  Vector c_alpha;
  Matrix c1_alpha;
  Matrix c2_alpha;
  double alpha = 0.0;
  NaturalParams lam;
};

inline CConstants c_constants(const ModelFamily& family, const NaturalParams& lam, Alpha alpha) {
  const double a = alpha.value();
  CConstants c;
  c.alpha = a;
  c.lam = lam;
  if (family.is_poisson()) {
    const auto m = numerics::poisson_power_moments(lam[0], 1.0 + a);
    c.c_alpha = Vector::Constant(1, m.f_power_u);
    c.c1_alpha = Matrix::Constant(1, 1, m.f_power_du);
    c.c2_alpha = Matrix::Constant(1, 1, m.f_power_uu);
    return c;
  }
  // Normal location-scale closed forms with x = (y - mu)/sigma.
  const double s = lam[1];
  const double k = 1.0 / (1.0 + a);
  const double base = std::pow(2.0 * std::numbers::pi, -0.5 * a) / std::sqrt(1.0 + a);
  const double scale1 = base / std::pow(s, 1.0 + a);
  const double scale2 = base / std::pow(s, 2.0 + a);
  c.c_alpha = Vector(2);
  c.c_alpha << 0.0, scale1 * (k - 1.0);
  c.c1_alpha = Matrix::Zero(2, 2);
  c.c1_alpha(0, 0) = -scale2;
  c.c1_alpha(1, 1) = scale2 * (1.0 - 3.0 * k);
  c.c2_alpha = Matrix::Zero(2, 2);
  c.c2_alpha(0, 0) = scale2 * k;
  c.c2_alpha(1, 1) = scale2 * (3.0 * k * k - 2.0 * k + 1.0);
  return c;
}

struct AsymptoticMatrices {
  Matrix psi_n;
  Matrix omega_n;
  /// Psi^{-1} Omega Psi^{-1} / n.
  Matrix sandwich;
  std::size_t n = 0;
};

namespace detail {

/// Inverse of a symmetric positive definite matrix; throws when the matrix
/// is indefinite or its condition number exceeds 1e12.
inline Matrix spd_inverse(const Matrix& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success) throw linalg_error(std::string(what) + ": eigen-decomposition failed");
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw linalg_error(std::string(what) +
                       " is singular or not positive definite (minimum eigenvalue " +
                       std::to_string(lo) + ", condition " + std::to_string(hi / lo) + ")");
  return eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

/// Symmetric inverse square root; zero eigenvalues are rejected.
inline Matrix spd_inverse_sqrt(const Matrix& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0))
    throw linalg_error(std::string(what) + " is not positive definite");
  return eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

inline void require_iip(const ModelFamily& family) {
  if (family.regime() != Regime::IIP)
    throw contract_error("asymptotic matrices are available for independent-increment families only");
}

}  // namespace detail

/// Psi_n and Omega_n at theta assuming the model is correct:
///   Psi_n   = (1/n) sum (1+a) L_i^T C2_a L_i
///   Omega_n = (1/n) sum (1+a)^2 L_i^T [C2_{2a} - C_a C_a^T] L_i
inline AsymptoticMatrices psi_omega(const ModelFamily& family, const ParamVector& theta,
                                    const TimeGrid& grid, Alpha alpha) {
  detail::require_iip(family);
  const double a = alpha.value();
  const auto p = static_cast<Eigen::Index>(family.p());
  const std::size_t n = grid.increments();
  Matrix psi = Matrix::Zero(p, p);
  Matrix omega = Matrix::Zero(p, p);
  for (std::size_t i = 1; i <= n; ++i) {
    const NaturalParams lam = natural_params(family, theta, grid, i);
    const Jacobian jac = jacobian(family, theta, grid, i);
    const CConstants ca = c_constants(family, lam, alpha);
    const CConstants c2a = c_constants(family, lam, Alpha(2.0 * a));
    psi.noalias() += (1.0 + a) * jac.transpose() * ca.c2_alpha * jac;
    const Matrix inner = c2a.c2_alpha - ca.c_alpha * ca.c_alpha.transpose();
    omega.noalias() += (1.0 + a) * (1.0 + a) * jac.transpose() * inner * jac;
  }
  AsymptoticMatrices out;
  out.n = n;
  out.psi_n = psi / static_cast<double>(n);
  out.omega_n = omega / static_cast<double>(n);
  // symmetrize rounding noise
  out.psi_n = 0.5 * (out.psi_n + out.psi_n.transpose()).eval();
  out.omega_n = 0.5 * (out.omega_n + out.omega_n.transpose()).eval();
  const Matrix psi_inv = detail::spd_inverse(out.psi_n, "Psi_n");
  out.sandwich = psi_inv * out.omega_n * psi_inv / static_cast<double>(n);
  return out;
}

/// Omega_n^{-1/2} Psi_n sqrt(n) (theta_hat - theta_g); asymptotically N(0, I).
inline Vector standardized_statistic(const AsymptoticMatrices& m, const ParamVector& theta_hat,
                                     const ParamVector& theta_g) {
  const Matrix w = detail::spd_inverse_sqrt(m.omega_n, "Omega_n");
  return w * m.psi_n * (std::sqrt(static_cast<double>(m.n)) * (theta_hat - theta_g));
}

}  // namespace robust_sp
