#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "robust_sp/errors.hpp"
#include "robust_sp/numerics.hpp"

namespace robust_sp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Model parameter theta (dimension p).
using ParamVector = Vector;
/// Per-increment natural parameters lambda_i (dimension ell).
using NaturalParams = Vector;
/// ell x p matrix whose j-th column is d lambda_i / d theta_j.
using Jacobian = Matrix;

enum class SupportKind { CountingOnNonNegativeIntegers, LebesgueOnReals };
enum class Regime { IIP, MP };

/// Observation time stamps 0 = t_0 < t_1 < ... < t_n.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.size() < 2) throw contract_error("TimeGrid needs at least two time stamps");
    if (times_.front() != 0.0) throw contract_error("TimeGrid must start at exactly 0");
    for (std::size_t i = 1; i < times_.size(); ++i) {
      if (!std::isfinite(times_[i]) || !(times_[i] > times_[i - 1]))
        throw contract_error("TimeGrid must be finite and strictly increasing (index " +
                             std::to_string(i) + ")");
    }
  }

  /// Grid (0, 1, ..., n).
  static TimeGrid unit(std::size_t n) {
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i) t[i] = static_cast<double>(i);
    return TimeGrid(std::move(t));
  }

  /// Number of increments n.
  [[nodiscard]] std::size_t increments() const { return times_.size() - 1; }
  [[nodiscard]] double operator[](std::size_t i) const { return times_[i]; }
  [[nodiscard]] double spacing(std::size_t i) const { return times_[i] - times_[i - 1]; }
  [[nodiscard]] std::span<const double> times() const { return times_; }

 private:
  std::vector<double> times_;
};

/// t -> t^q for q > 0; used for integrated intensity and drift shapes.
struct PowerLaw {
  double exponent = 0.5;

  [[nodiscard]] double at(double t) const {
    if (exponent == 0.5) return std::sqrt(t);
    if (exponent == 1.0) return t;
    return std::pow(t, exponent);
  }
  [[nodiscard]] double increment(const TimeGrid& grid, std::size_t i) const {
    return at(grid[i]) - at(grid[i - 1]);
  }
};

/// Poisson process with integrated intensity Lambda(t) = theta * t^q.
struct PoissonModel {
  PowerLaw intensity;
};

enum class ScaleForm { Exponential, Constant };
enum class VarianceConvention { Linear, SquareRoot };

/// Drifted Brownian motion with mean theta_1 * t^q and scale either
/// exp(theta_2) (estimated) or a known constant.
struct BrownianModel {
  PowerLaw mean;
  ScaleForm scale = ScaleForm::Exponential;
  double constant_scale = 1.0;
  /// Linear: sigma_i = sigma * dt; SquareRoot: sigma_i = sigma * sqrt(dt).
  VarianceConvention convention = VarianceConvention::Linear;

  [[nodiscard]] double time_factor(double dt) const {
    return convention == VarianceConvention::Linear ? dt : std::sqrt(dt);
  }
};

enum class Ar1Mode { Full, RhoOnly };

/// Gaussian AR(1): X_i | X_{i-1} ~ N(mu + rho X_{i-1}, sigma^2).
/// Full mode estimates (mu, rho, sigma^2); RhoOnly fixes mu and sigma.
struct Ar1Model {
  Ar1Mode mode = Ar1Mode::RhoOnly;
  double fixed_mu = 0.0;
  double fixed_sigma = 1.0;
};

/// Closed set of supported process families.
class ModelFamily {
 public:
  using Variant = std::variant<PoissonModel, BrownianModel, Ar1Model>;

  ModelFamily(PoissonModel m) : model_(m) {}  // NOLINT(google-explicit-constructor)
  ModelFamily(BrownianModel m) : model_(m) {}  // NOLINT(google-explicit-constructor)
  ModelFamily(Ar1Model m) : model_(m) {}  // NOLINT(google-explicit-constructor)

  [[nodiscard]] const Variant& model() const { return model_; }

  [[nodiscard]] std::size_t p() const {
    return std::visit(
        [](const auto& m) -> std::size_t {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, PoissonModel>) return 1;
          else if constexpr (std::is_same_v<M, BrownianModel>) return m.scale == ScaleForm::Exponential ? 2 : 1;
          else return m.mode == Ar1Mode::Full ? 3 : 1;
        },
        model_);
  }

  [[nodiscard]] std::size_t ell() const { return is_poisson() ? 1 : 2; }
  [[nodiscard]] Regime regime() const { return std::holds_alternative<Ar1Model>(model_) ? Regime::MP : Regime::IIP; }
  [[nodiscard]] SupportKind support() const {
    return is_poisson() ? SupportKind::CountingOnNonNegativeIntegers : SupportKind::LebesgueOnReals;
  }
  [[nodiscard]] bool is_poisson() const { return std::holds_alternative<PoissonModel>(model_); }

  [[nodiscard]] std::string name() const {
    switch (model_.index()) {
      case 0: return "poisson";
      case 1: return "brownian";
      default: return "ar1";
    }
  }

  /// Coordinates of theta that must stay strictly positive.
  [[nodiscard]] std::vector<bool> positive_coordinates() const {
    std::vector<bool> pos(p(), false);
    if (is_poisson()) pos[0] = true;
    if (const auto* ar = std::get_if<Ar1Model>(&model_); ar && ar->mode == Ar1Mode::Full) pos[2] = true;
    return pos;
  }

 private:
  Variant model_;
};

namespace detail {

inline void check_theta(const ModelFamily& family, const ParamVector& theta) {
  if (static_cast<std::size_t>(theta.size()) != family.p())
    throw contract_error("theta has dimension " + std::to_string(theta.size()) + ", family " +
                         family.name() + " expects " + std::to_string(family.p()));
  if (!theta.allFinite()) throw invalid_parameter("theta has non-finite entries");
}

inline void check_index(const TimeGrid& grid, std::size_t i) {
  if (i < 1 || i > grid.increments())
    throw contract_error("increment index " + std::to_string(i) + " outside 1.." +
                         std::to_string(grid.increments()));
}

inline double require_cond(const ModelFamily& family, std::optional<double> cond) {
  if (family.regime() == Regime::MP && !cond)
    throw contract_error("Markov family requires the previous observation");
  return cond.value_or(0.0);
}

inline double brownian_sigma(const BrownianModel& m, const ParamVector& theta) {
  return m.scale == ScaleForm::Exponential ? std::exp(theta[1]) : m.constant_scale;
}

}  // namespace detail

/// lambda_i(theta) for increment (IIP) or transition (MP) i in 1..n.
inline NaturalParams natural_params(const ModelFamily& family, const ParamVector& theta,
                                    const TimeGrid& grid, std::size_t i,
                                    std::optional<double> cond = std::nullopt) {
  detail::check_theta(family, theta);
  detail::check_index(grid, i);
  const double prev = detail::require_cond(family, cond);
  NaturalParams lam(family.ell());
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, PoissonModel>) {
          lam[0] = theta[0] * m.intensity.increment(grid, i);
        } else if constexpr (std::is_same_v<M, BrownianModel>) {
          lam[0] = theta[0] * m.mean.increment(grid, i);
          lam[1] = detail::brownian_sigma(m, theta) * m.time_factor(grid.spacing(i));
        } else {
          if (m.mode == Ar1Mode::Full) {
            if (!(theta[2] > 0.0)) throw invalid_parameter("AR(1) variance must be positive");
            lam[0] = theta[0] + theta[1] * prev;
            lam[1] = std::sqrt(theta[2]);
          } else {
            lam[0] = m.fixed_mu + theta[0] * prev;
            lam[1] = m.fixed_sigma;
          }
        }
      },
      family.model());
  if (!lam.allFinite()) throw invalid_parameter("natural parameters are not finite");
  if (family.is_poisson()) {
    if (!(lam[0] > 0.0)) throw invalid_parameter("Poisson rate must be positive");
  } else if (!(lam[1] > 0.0)) {
    throw invalid_parameter("scale must be positive");
  }
  return lam;
}

/// Lambda_i = d lambda_i / d theta (ell x p).
inline Jacobian jacobian(const ModelFamily& family, const ParamVector& theta, const TimeGrid& grid,
                         std::size_t i, std::optional<double> cond = std::nullopt) {
  detail::check_theta(family, theta);
  detail::check_index(grid, i);
  const double prev = detail::require_cond(family, cond);
  Jacobian jac = Jacobian::Zero(static_cast<Eigen::Index>(family.ell()),
                                static_cast<Eigen::Index>(family.p()));
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, PoissonModel>) {
          jac(0, 0) = m.intensity.increment(grid, i);
        } else if constexpr (std::is_same_v<M, BrownianModel>) {
          jac(0, 0) = m.mean.increment(grid, i);
          if (m.scale == ScaleForm::Exponential)
            jac(1, 1) = std::exp(theta[1]) * m.time_factor(grid.spacing(i));
        } else {
          if (m.mode == Ar1Mode::Full) {
            if (!(theta[2] > 0.0)) throw invalid_parameter("AR(1) variance must be positive");
            jac(0, 0) = 1.0;
            jac(0, 1) = prev;
            jac(1, 2) = 0.5 / std::sqrt(theta[2]);
          } else {
            jac(0, 0) = prev;
          }
        }
      },
      family.model());
  return jac;
}

namespace detail {

inline void check_count(double y) {
  if (!std::isfinite(y) || y < 0.0 || y != std::floor(y))
    throw support_error("Poisson observation must be a non-negative integer, got " + std::to_string(y));
}

inline void check_real(double y) {
  if (!std::isfinite(y)) throw support_error("observation must be finite");
}

}  // namespace detail

/// ln f(y; lambda).
inline double log_density(const ModelFamily& family, double y, const NaturalParams& lam) {
  if (family.is_poisson()) {
    detail::check_count(y);
    return y * std::log(lam[0]) - lam[0] - numerics::log_factorial(y);
  }
  detail::check_real(y);
  const double z = (y - lam[0]) / lam[1];
  return -0.5 * numerics::kLog2Pi - std::log(lam[1]) - 0.5 * z * z;
}

/// d/d lambda ln f(y; lambda).
inline Vector score(const ModelFamily& family, double y, const NaturalParams& lam) {
  if (family.is_poisson()) {
    detail::check_count(y);
    return Vector::Constant(1, (y - lam[0]) / lam[0]);
  }
  detail::check_real(y);
  const double mu = lam[0];
  const double s = lam[1];
  const double d = y - mu;
  Vector u(2);
  u << d / (s * s), -1.0 / s + d * d / (s * s * s);
  return u;
}

/// Jacobian of the score with respect to lambda.
inline Matrix score_gradient(const ModelFamily& family, double y, const NaturalParams& lam) {
  if (family.is_poisson()) {
    detail::check_count(y);
    return Matrix::Constant(1, 1, -y / (lam[0] * lam[0]));
  }
  detail::check_real(y);
  const double s = lam[1];
  const double x = (y - lam[0]) / s;
  Matrix g(2, 2);
  g << -1.0, -2.0 * x, -2.0 * x, 1.0 - 3.0 * x * x;
  return g / (s * s);
}

}  // namespace robust_sp
