#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "robust_sp/dpd.hpp"
#include "robust_sp/rng.hpp"

namespace robust_sp {

struct FitConfig {
  Alpha alpha{};
  /// Starting point; method-of-moments start when empty ("auto").
  std::optional<ParamVector> initial_theta;
  int max_iterations = 200;
  double grad_tolerance = 1e-8;
  double step_tolerance = 1e-10;
  /// Number of jittered restarts around the primary start.
  int multistart_count = 3;
  /// Seeds the multistart jitter.
  std::uint64_t seed = 0;
  /// Add the best point of a coarse objective scan as an extra start.
  bool coarse_scan = true;

  void validate() const {
    if (max_iterations < 1) throw contract_error("max_iterations must be >= 1");
    if (!(grad_tolerance > 0.0) || !(step_tolerance > 0.0))
      throw contract_error("tolerances must be positive");
    if (multistart_count < 0) throw contract_error("multistart_count must be >= 0");
  }
};

struct FitResult {
  ParamVector theta_hat;
  double objective_value = std::numeric_limits<double>::infinity();
  double grad_inf_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  /// Index of the start that produced theta_hat: 0 primary, 1 scan (if
  /// enabled), then the jittered restarts.
  int start_used = 0;
};

/// Method-of-moments starting value.
inline ParamVector auto_start(const Sample& sample) {
  const std::size_t n = sample.n();
  const auto& grid = sample.grid;
  ParamVector theta(static_cast<Eigen::Index>(sample.family.p()));
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, PoissonModel>) {
          double ys = 0.0;
          double ds = 0.0;
          for (std::size_t i = 1; i <= n; ++i) {
            ys += sample.data[i - 1];
            ds += m.intensity.increment(grid, i);
          }
          theta[0] = ys > 0.0 ? ys / ds : 0.5 / ds;
        } else if constexpr (std::is_same_v<M, BrownianModel>) {
          double ys = 0.0;
          double ds = 0.0;
          for (std::size_t i = 1; i <= n; ++i) {
            ys += sample.data[i - 1];
            ds += m.mean.increment(grid, i);
          }
          theta[0] = ys / ds;
          if (m.scale == ScaleForm::Exponential) {
            double ss = 0.0;
            for (std::size_t i = 1; i <= n; ++i) {
              const double r = sample.data[i - 1] - theta[0] * m.mean.increment(grid, i);
              const double h = m.time_factor(grid.spacing(i));
              ss += r * r / (h * h);
            }
            const double var = ss / static_cast<double>(n);
            theta[1] = var > 0.0 ? 0.5 * std::log(var) : 0.0;
          }
        } else {
          const auto& x = sample.data;
          if (m.mode == Ar1Mode::RhoOnly) {
            double num = 0.0;
            double den = 0.0;
            for (std::size_t i = 1; i <= n; ++i) {
              num += (x[i] - m.fixed_mu) * x[i - 1];
              den += x[i - 1] * x[i - 1];
            }
            theta[0] = den > 0.0 ? num / den : 0.0;
          } else {
            double mx = 0.0;
            double my = 0.0;
            for (std::size_t i = 1; i <= n; ++i) {
              mx += x[i - 1];
              my += x[i];
            }
            mx /= static_cast<double>(n);
            my /= static_cast<double>(n);
            double sxy = 0.0;
            double sxx = 0.0;
            for (std::size_t i = 1; i <= n; ++i) {
              sxy += (x[i - 1] - mx) * (x[i] - my);
              sxx += (x[i - 1] - mx) * (x[i - 1] - mx);
            }
            const double rho = sxx > 0.0 ? sxy / sxx : 0.0;
            const double mu = my - rho * mx;
            double ss = 0.0;
            for (std::size_t i = 1; i <= n; ++i) {
              const double r = x[i] - mu - rho * x[i - 1];
              ss += r * r;
            }
            theta[0] = mu;
            theta[1] = rho;
            theta[2] = std::max(ss / static_cast<double>(n), 1e-8);
          }
        }
      },
      sample.family.model());
  return theta;
}

namespace detail {

/// Maps between theta and the unconstrained optimizer coordinates z
/// (log transform on positive coordinates).
class Reparam {
 public:
  explicit Reparam(std::vector<bool> positive) : positive_(std::move(positive)) {}

  [[nodiscard]] Vector to_z(const ParamVector& theta) const {
    Vector z = theta;
    for (Eigen::Index j = 0; j < z.size(); ++j)
      if (positive_[static_cast<std::size_t>(j)]) z[j] = std::log(theta[j]);
    return z;
  }
  [[nodiscard]] ParamVector to_theta(const Vector& z) const {
    ParamVector theta = z;
    for (Eigen::Index j = 0; j < z.size(); ++j)
      if (positive_[static_cast<std::size_t>(j)]) theta[j] = std::exp(z[j]);
    return theta;
  }
  /// Chain rule: d/dz = d/dtheta * dtheta/dz.
  [[nodiscard]] Vector grad_z(const ParamVector& theta, const Vector& grad_theta) const {
    Vector g = grad_theta;
    for (Eigen::Index j = 0; j < g.size(); ++j)
      if (positive_[static_cast<std::size_t>(j)]) g[j] *= theta[j];
    return g;
  }
  [[nodiscard]] bool admissible(const ParamVector& theta) const {
    for (Eigen::Index j = 0; j < theta.size(); ++j)
      if (positive_[static_cast<std::size_t>(j)] && !(theta[j] > 0.0)) return false;
    return theta.allFinite();
  }

 private:
  std::vector<bool> positive_;
};

/// BFGS on the inverse Hessian with backtracking line search. Falls back to
/// a steepest-descent step when the curvature update degenerates. When
/// `trace` is given it receives the objective at every accepted iterate.
inline FitResult minimize_from(const Sample& sample, const ParamVector& start,
                               const FitConfig& cfg, std::vector<double>* trace = nullptr) {
  const Reparam reparam(sample.family.positive_coordinates());
  const auto p = start.size();
  FitResult res;
  res.theta_hat = start;
  if (!reparam.admissible(start)) return res;

  // Series for extreme Poisson rates can fail; treat those trial points as infeasible.
  auto eval = [&](const ParamVector& th) {
    try {
      return evaluate(sample, th, cfg.alpha);
    } catch (const numeric_error&) {
      return Evaluation{};
    }
  };
  Vector z = reparam.to_z(start);
  ParamVector theta = start;
  Evaluation ev = eval(theta);
  if (!ev.valid()) return res;
  Vector g = reparam.grad_z(theta, ev.gradient);
  Matrix h_inv = Matrix::Identity(p, p);
  bool fresh_hessian = true;
  constexpr double kMaxStep = 4.0;
  constexpr double kArmijo = 1e-4;

  res.objective_value = ev.value;
  res.grad_inf_norm = ev.gradient.lpNorm<Eigen::Infinity>();
  if (trace) trace->push_back(ev.value);

  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    if (res.grad_inf_norm <= cfg.grad_tolerance) break;

    Vector d = -h_inv * g;
    double slope = g.dot(d);
    if (!(slope < 0.0) || !d.allFinite()) {
      h_inv.setIdentity();
      fresh_hessian = true;
      d = -g;
      slope = g.dot(d);
    }
    if (fresh_hessian) {
      // unit-free first step: cap the move at one unit in z
      const double norm = d.lpNorm<Eigen::Infinity>();
      if (norm > 1.0) {
        d /= norm;
        slope /= norm;
      }
    }
    const double dmax = d.lpNorm<Eigen::Infinity>();
    double t = dmax > kMaxStep ? kMaxStep / dmax : 1.0;

    bool accepted = false;
    Vector z_new;
    ParamVector theta_new;
    Evaluation ev_new;
    Vector g_new;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      z_new = z + t * d;
      theta_new = reparam.to_theta(z_new);
      if (!reparam.admissible(theta_new)) continue;
      ev_new = eval(theta_new);
      if (!ev_new.valid()) continue;
      g_new = reparam.grad_z(theta_new, ev_new.gradient);
      const bool armijo = ev_new.value <= ev.value + kArmijo * t * slope;
      // Near the optimum the decrease is below rounding; accept a
      // non-increasing step that still shrinks the directional derivative.
      const bool flat = ev_new.value <= ev.value && std::abs(g_new.dot(d)) < 0.9 * std::abs(slope);
      if (armijo || flat) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (fresh_hessian) break;  // steepest descent failed as well
      h_inv.setIdentity();
      fresh_hessian = true;
      continue;
    }

    const Vector s = z_new - z;
    const Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh_hessian) h_inv *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Matrix eye = Matrix::Identity(p, p);
      h_inv = (eye - rho * s * y.transpose()) * h_inv * (eye - rho * y * s.transpose()) +
              rho * s * s.transpose();
      fresh_hessian = false;
    } else {
      h_inv.setIdentity();
      fresh_hessian = true;
    }

    z = z_new;
    theta = theta_new;
    ev = ev_new;
    g = g_new;
    res.objective_value = ev.value;
    res.grad_inf_norm = ev.gradient.lpNorm<Eigen::Infinity>();
    res.theta_hat = theta;
    if (trace) trace->push_back(ev.value);
    if (s.lpNorm<Eigen::Infinity>() <= cfg.step_tolerance * (1.0 + z.lpNorm<Eigen::Infinity>())) {
      ++it;
      break;
    }
  }
  res.iterations = it;
  res.converged = res.grad_inf_norm <= cfg.grad_tolerance;
  return res;
}

inline std::vector<double> linspace(double a, double b, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) out[static_cast<std::size_t>(k)] = a + (b - a) * k / (count - 1);
  return out;
}

/// Candidate values per coordinate for the coarse scan, centred on `base`.
inline std::vector<std::vector<double>> scan_axes(const ModelFamily& family, const ParamVector& base) {
  std::vector<std::vector<double>> axes;
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, PoissonModel>) {
          std::vector<double> ax;
          for (double u : linspace(std::log(1.0 / 20.0), std::log(3.0), 25)) ax.push_back(base[0] * std::exp(u));
          axes.push_back(ax);
        } else if constexpr (std::is_same_v<M, BrownianModel>) {
          std::vector<double> mean_ax;
          const double scale = std::max(std::abs(base[0]), 1.0);
          for (double u : linspace(-0.5, 1.5, 21)) mean_ax.push_back(u * scale);
          axes.push_back(mean_ax);
          if (m.scale == ScaleForm::Exponential) {
            std::vector<double> s_ax;
            for (double u : linspace(-3.0, 1.5, 19)) s_ax.push_back(base[1] + u);
            axes.push_back(s_ax);
          }
        } else {
          if (m.mode == Ar1Mode::Full) {
            const double sd = std::sqrt(base[2]);
            std::vector<double> mu_ax;
            for (double u : linspace(-2.0, 2.0, 9)) mu_ax.push_back(base[0] + u * sd);
            axes.push_back(mu_ax);
            axes.push_back(linspace(-0.99, 0.99, 23));
            std::vector<double> v_ax;
            for (double u : linspace(-4.0, 1.0, 11)) v_ax.push_back(base[2] * std::exp(u));
            axes.push_back(v_ax);
          } else {
            axes.push_back(linspace(-0.99, 0.99, 23));
          }
        }
      },
      family.model());
  return axes;
}

/// Best grid point of the coarse scan, or nullopt if all points are invalid.
inline std::optional<ParamVector> coarse_scan(const Sample& sample, const ParamVector& base,
                                              Alpha alpha) {
  const auto axes = scan_axes(sample.family, base);
  std::vector<std::size_t> idx(axes.size(), 0);
  std::optional<ParamVector> best;
  double best_value = std::numeric_limits<double>::infinity();
  ParamVector theta(static_cast<Eigen::Index>(axes.size()));
  for (;;) {
    for (std::size_t j = 0; j < axes.size(); ++j) theta[static_cast<Eigen::Index>(j)] = axes[j][idx[j]];
    const double v = evaluate(sample, theta, alpha, false).value;
    if (v < best_value) {
      best_value = v;
      best = theta;
    }
    std::size_t j = 0;
    while (j < axes.size() && ++idx[j] == axes[j].size()) idx[j++] = 0;
    if (j == axes.size()) break;
  }
  return best;
}

}  // namespace detail

/// Minimizes H_{n,alpha} over theta. Runs the primary start, an optional
/// scan start and `multistart_count` jittered restarts; returns the
/// converged candidate with the lowest objective (ties within 1e-12 go to
/// the lower start index). If none converges, the lowest-objective candidate
/// is returned with converged = false.
inline FitResult fit(const Sample& sample, const FitConfig& cfg) {
  cfg.validate();
  const ParamVector primary = cfg.initial_theta ? *cfg.initial_theta : auto_start(sample);
  detail::check_theta(sample.family, primary);

  std::vector<ParamVector> starts{primary};
  if (cfg.coarse_scan) {
    if (auto s = detail::coarse_scan(sample, primary, cfg.alpha)) starts.push_back(*s);
  }
  rng::Philox jitter(cfg.seed, 0x6D756C7469ULL);
  const auto positive = sample.family.positive_coordinates();
  for (int k = 0; k < cfg.multistart_count; ++k) {
    ParamVector s = primary;
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      const double z = jitter.normal();
      s[j] = s[j] != 0.0 ? s[j] * std::exp(0.3 * z) : 0.3 * z;
    }
    starts.push_back(s);
  }

  FitResult best;
  bool have = false;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    FitResult r = detail::minimize_from(sample, starts[k], cfg);
    r.start_used = static_cast<int>(k);
    if (!have) {
      best = r;
      have = true;
      continue;
    }
    const bool better_class = r.converged && !best.converged;
    const bool same_class = r.converged == best.converged;
    if (better_class || (same_class && r.objective_value < best.objective_value - 1e-12)) best = r;
  }
  return best;
}

/// Fits along an ordered alpha grid, warm-starting each fit from the
/// previous converged estimate. Failures are recorded and the path goes on.
inline std::vector<FitResult> alpha_path(const Sample& sample, std::span<const double> alphas,
                                         FitConfig cfg) {
  if (alphas.empty()) throw contract_error("alpha path needs at least one alpha");
  std::vector<FitResult> out;
  out.reserve(alphas.size());
  const std::optional<ParamVector> initial = cfg.initial_theta;
  for (double a : alphas) {
    cfg.alpha = Alpha(a);
    out.push_back(fit(sample, cfg));
    cfg.initial_theta = out.back().converged ? std::optional(out.back().theta_hat) : initial;
  }
  return out;
}

}  // namespace robust_sp
