#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "robust_sp/errors.hpp"
#include "robust_sp/numerics.hpp"
#include "robust_sp/process_models.hpp"

namespace robust_sp {

/// DPD tuning parameter; 0 selects the likelihood branch.
class Alpha {
 public:
  constexpr Alpha() = default;
  explicit Alpha(double value) : value_(value) {
    if (!std::isfinite(value) || value < 0.0)
      throw contract_error("alpha must be finite and non-negative, got " + std::to_string(value));
  }
  [[nodiscard]] constexpr double value() const { return value_; }
  [[nodiscard]] constexpr bool is_mle() const { return value_ == 0.0; }

 private:
  double value_ = 0.0;
};

/// Observed data together with the model family and time grid.
/// IIP: `data` holds the n increments Y_1..Y_n.
/// MP: `data` holds the n+1 states X_0..X_n.
struct Sample {
  ModelFamily family;
  TimeGrid grid;
  std::vector<double> data;

  Sample(ModelFamily f, TimeGrid g, std::vector<double> d)
      : family(std::move(f)), grid(std::move(g)), data(std::move(d)) {
    const std::size_t n = grid.increments();
    const std::size_t want = family.regime() == Regime::IIP ? n : n + 1;
    if (data.size() != want)
      throw contract_error("data length " + std::to_string(data.size()) + " does not match " +
                           std::to_string(want) + " required by the grid and regime");
  }

  [[nodiscard]] std::size_t n() const { return grid.increments(); }
  /// Observation entering term i (1-based).
  [[nodiscard]] double response(std::size_t i) const {
    return family.regime() == Regime::IIP ? data[i - 1] : data[i];
  }
  [[nodiscard]] std::optional<double> condition(std::size_t i) const {
    if (family.regime() == Regime::MP) return data[i - 1];
    return std::nullopt;
  }
};

/// Integral of f^{1+alpha} over the support and C_alpha = int f^{1+alpha} u.
struct PowerIntegrals {
  double f_power = 1.0;
  Vector c_alpha;
};

inline PowerIntegrals power_integrals(const ModelFamily& family, const NaturalParams& lam,
                                      Alpha alpha) {
  const double a = alpha.value();
  if (family.is_poisson()) {
    if (a == 0.0) return {1.0, Vector::Zero(1)};
    const auto m = numerics::poisson_power_moments(lam[0], 1.0 + a);
    return {m.f_power, Vector::Constant(1, m.f_power_u)};
  }
  const double s = lam[1];
  const double fp = std::pow(2.0 * std::numbers::pi * s * s, -0.5 * a) / std::sqrt(1.0 + a);
  Vector c(2);
  c << 0.0, fp / s * (1.0 / (1.0 + a) - 1.0);
  return {fp, c};
}

/// Integral of f^{1+alpha}(y; lambda) over the support.
inline double integral_f_power(const ModelFamily& family, const NaturalParams& lam, Alpha alpha) {
  return power_integrals(family, lam, alpha).f_power;
}

/// A normalized density together with the range that carries its mass.
/// For counting support the range is an integer interval.
struct Density {
  std::function<double(double)> pdf;
  SupportKind support = SupportKind::LebesgueOnReals;
  double lo = 0.0;
  double hi = 0.0;
};

inline Density model_density(const ModelFamily& family, const NaturalParams& lam) {
  if (family.is_poisson()) {
    const double hi = static_cast<double>(numerics::poisson_truncation(lam[0]));
    return {[family, lam](double y) { return std::exp(log_density(family, y, lam)); },
            SupportKind::CountingOnNonNegativeIntegers, 0.0, hi};
  }
  return {[family, lam](double y) { return std::exp(log_density(family, y, lam)); },
          SupportKind::LebesgueOnReals, lam[0] - 12.0 * lam[1], lam[0] + 12.0 * lam[1]};
}

/// d_alpha(g, f). Sums under counting measure, adaptive quadrature under
/// Lebesgue measure. If either density has mass differing from one by more
/// than 1e-6 a message is appended to `diagnostics` (when given).
inline double dpd_divergence(const Density& g, const Density& f, Alpha alpha,
                             std::vector<std::string>* diagnostics = nullptr) {
  if (g.support != f.support) throw contract_error("densities live on different supports");
  const double a = alpha.value();
  auto integrand = [&](double y) {
    const double gy = g.pdf(y);
    const double fy = f.pdf(y);
    if (a == 0.0) {
      if (gy <= 0.0) return 0.0;
      return gy * (std::log(gy) - std::log(fy));
    }
    return std::pow(fy, 1.0 + a) - (1.0 + 1.0 / a) * std::pow(fy, a) * gy +
           (1.0 / a) * std::pow(gy, 1.0 + a);
  };
  const double lo = std::min(g.lo, f.lo);
  const double hi = std::max(g.hi, f.hi);
  double value = 0.0;
  double g_mass = 0.0;
  double f_mass = 0.0;
  if (f.support == SupportKind::CountingOnNonNegativeIntegers) {
    numerics::NeumaierSum s, gm, fm;
    for (double k = std::max(0.0, std::floor(lo)); k <= hi; k += 1.0) {
      s.add(integrand(k));
      gm.add(g.pdf(k));
      fm.add(f.pdf(k));
    }
    value = s.value();
    g_mass = gm.value();
    f_mass = fm.value();
  } else {
    value = numerics::adaptive_simpson(integrand, lo, hi, 1e-12);
    g_mass = numerics::adaptive_simpson(g.pdf, lo, hi, 1e-12);
    f_mass = numerics::adaptive_simpson(f.pdf, lo, hi, 1e-12);
  }
  if (diagnostics && (std::abs(g_mass - 1.0) > 1e-6 || std::abs(f_mass - 1.0) > 1e-6)) {
    diagnostics->push_back("dpd_divergence: densities not normalized (g mass " +
                           std::to_string(g_mass) + ", f mass " + std::to_string(f_mass) + ")");
  }
  return value;
}

/// Objective value and gradient at one parameter point.
struct Evaluation {
  double value = std::numeric_limits<double>::infinity();
  Vector gradient;
  [[nodiscard]] bool valid() const { return std::isfinite(value); }
};

/// H_{n,alpha}(theta) and its gradient in one pass over the data.
/// alpha > 0: mean of int f^{1+alpha} - (1 + 1/alpha) f^alpha(Y_i).
/// alpha = 0: mean negative log-likelihood.
/// An invalid natural parameter anywhere gives value +inf and a NaN gradient.
inline Evaluation evaluate(const Sample& sample, const ParamVector& theta, Alpha alpha,
                           bool with_gradient = true) {
  detail::check_theta(sample.family, theta);
  const std::size_t n = sample.n();
  const double a = alpha.value();
  const auto p = static_cast<Eigen::Index>(sample.family.p());
  Evaluation out;
  numerics::NeumaierSum total;
  Vector grad = Vector::Zero(p);
  try {
    for (std::size_t i = 1; i <= n; ++i) {
      const auto cond = sample.condition(i);
      const double y = sample.response(i);
      const NaturalParams lam = natural_params(sample.family, theta, sample.grid, i, cond);
      const double logf = log_density(sample.family, y, lam);
      if (a == 0.0) {
        total.add(-logf);
        if (with_gradient) {
          const Jacobian jac = jacobian(sample.family, theta, sample.grid, i, cond);
          grad.noalias() -= jac.transpose() * score(sample.family, y, lam);
        }
      } else {
        const PowerIntegrals pi = power_integrals(sample.family, lam, alpha);
        const double fa = std::exp(a * logf);
        total.add(pi.f_power - (1.0 + 1.0 / a) * fa);
        if (with_gradient) {
          const Jacobian jac = jacobian(sample.family, theta, sample.grid, i, cond);
          grad.noalias() +=
              (1.0 + a) * jac.transpose() * (pi.c_alpha - fa * score(sample.family, y, lam));
        }
      }
    }
  } catch (const invalid_parameter&) {
    out.value = std::numeric_limits<double>::infinity();
    out.gradient = Vector::Constant(p, std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  out.value = total.value() / static_cast<double>(n);
  if (!std::isfinite(out.value)) out.value = std::numeric_limits<double>::infinity();
  out.gradient = with_gradient ? Vector(grad / static_cast<double>(n)) : Vector();
  return out;
}

inline double objective(const Sample& sample, const ParamVector& theta, Alpha alpha) {
  return evaluate(sample, theta, alpha, false).value;
}

inline Vector gradient(const Sample& sample, const ParamVector& theta, Alpha alpha) {
  return evaluate(sample, theta, alpha, true).gradient;
}

}  // namespace robust_sp
