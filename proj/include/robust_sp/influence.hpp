#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "robust_sp/asymptotics.hpp"

namespace robust_sp {

/// Centering term used in the influence function.
enum class ZetaMode {
  /// zeta_i = int f^2 u (the printed appendix form, alpha-independent at the
  /// model) combined with Psi_n^{-1} as printed.
  PaperLiteral,
  /// zeta_i = C_alpha(lambda_i); gives the mean-zero influence function of
  /// the estimating equation, scaled by the inverse of its expected Jacobian
  /// Psi_n / (1 + alpha).
  StandardCalpha,
};

struct IFQuery {
  ModelFamily family;
  ParamVector theta;
  TimeGrid grid;
  std::vector<double> alphas;
  /// Common contamination point r_1 = ... = r_n = r for each entry.
  std::vector<double> r_values;
  ZetaMode zeta_mode = ZetaMode::StandardCalpha;
};

struct IFCurve {
  std::vector<double> alphas;
  std::vector<double> r_values;
  /// values[a][k] is the p-vector IF at alphas[a], r_values[k].
  std::vector<std::vector<Vector>> values;
  /// max over r of the infinity norm of the IF, per alpha.
  std::vector<double> max_abs_if;
};

/// Default contamination grid: {0..60} for counts, 201 points on
/// mean(mu_i) +/- 10 mean(sigma_i) for Gaussian increments.
inline std::vector<double> default_r_grid(const ModelFamily& family, const ParamVector& theta,
                                          const TimeGrid& grid) {
  std::vector<double> r;
  if (family.is_poisson()) {
    for (int k = 0; k <= 60; ++k) r.push_back(k);
    return r;
  }
  double mu = 0.0;
  double sd = 0.0;
  const std::size_t n = grid.increments();
  for (std::size_t i = 1; i <= n; ++i) {
    const NaturalParams lam = natural_params(family, theta, grid, i);
    mu += lam[0];
    sd += lam[1];
  }
  mu /= static_cast<double>(n);
  sd /= static_cast<double>(n);
  for (int k = 0; k <= 200; ++k) r.push_back(mu - 10.0 * sd + 20.0 * sd * k / 200.0);
  return r;
}

namespace detail {

struct IFTerms {
  std::vector<NaturalParams> lam;
  std::vector<Jacobian> jac;
  Vector mean_zeta;  // (1/n) sum L_i^T zeta_i
  Matrix psi_inv;
  double scale = 1.0;
};

inline IFTerms if_terms(const IFQuery& q, Alpha alpha) {
  detail::require_iip(q.family);
  const std::size_t n = q.grid.increments();
  IFTerms t;
  t.mean_zeta = Vector::Zero(static_cast<Eigen::Index>(q.family.p()));
  const Alpha zeta_alpha = q.zeta_mode == ZetaMode::StandardCalpha ? alpha : Alpha(1.0);
  for (std::size_t i = 1; i <= n; ++i) {
    t.lam.push_back(natural_params(q.family, q.theta, q.grid, i));
    t.jac.push_back(jacobian(q.family, q.theta, q.grid, i));
    const Vector zeta = c_constants(q.family, t.lam.back(), zeta_alpha).c_alpha;
    t.mean_zeta += t.jac.back().transpose() * zeta;
  }
  t.mean_zeta /= static_cast<double>(n);
  const AsymptoticMatrices m = psi_omega(q.family, q.theta, q.grid, alpha);
  t.psi_inv = detail::spd_inverse(m.psi_n, "Psi_n");
  t.scale = q.zeta_mode == ZetaMode::StandardCalpha ? 1.0 + alpha.value() : 1.0;
  return t;
}

inline Vector if_value(const IFQuery& q, const IFTerms& t, Alpha alpha, double r) {
  const std::size_t n = t.lam.size();
  Vector acc = Vector::Zero(static_cast<Eigen::Index>(q.family.p()));
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::exp(alpha.value() * log_density(q.family, r, t.lam[i]));
    acc += t.jac[i].transpose() * (w * score(q.family, r, t.lam[i]));
  }
  acc /= static_cast<double>(n);
  return t.scale * (t.psi_inv * (acc - t.mean_zeta));
}

}  // namespace detail

/// Influence function of the MDPDE functional under point contamination at
/// r for every increment, evaluated at the model.
inline IFCurve influence_curve(const IFQuery& q) {
  IFCurve curve;
  curve.alphas = q.alphas;
  curve.r_values = q.r_values;
  for (double a : q.alphas) {
    const Alpha alpha(a);
    const detail::IFTerms terms = detail::if_terms(q, alpha);
    std::vector<Vector> row;
    row.reserve(q.r_values.size());
    double mx = 0.0;
    for (double r : q.r_values) {
      row.push_back(detail::if_value(q, terms, alpha, r));
      mx = std::max(mx, row.back().lpNorm<Eigen::Infinity>());
    }
    curve.values.push_back(std::move(row));
    curve.max_abs_if.push_back(mx);
  }
  return curve;
}

/// Supremum of |IF| over the query's r grid, per alpha.
inline std::vector<double> max_abs_if(const IFQuery& q) { return influence_curve(q).max_abs_if; }

}  // namespace robust_sp
