#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "robust_sp/errors.hpp"

namespace robust_sp::numerics {

inline constexpr double kLog2Pi = 1.8378770664093454836;

/// ln(k!) with a table for small k and lgamma beyond it.
inline double log_factorial(double k) {
  static const std::vector<double> table = [] {
    std::vector<double> t(4096);
    t[0] = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
    return t;
  }();
  if (k >= 0.0 && k < static_cast<double>(table.size())) return table[static_cast<std::size_t>(k)];
  return std::lgamma(k + 1.0);
}

/// Compensated (Neumaier) running sum.
class NeumaierSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Pairwise summation; the result depends only on the order of `xs`.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

namespace detail {

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                           double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature on [a, b] with absolute tolerance `tol`.
/// The interval is pre-split into `pieces` panels so that narrow peaks are
/// not missed by the first coarse estimate.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-10, int pieces = 64, int max_depth = 40) {
  if (!(b > a)) return 0.0;
  const double h = (b - a) / pieces;
  NeumaierSum total;
  for (int k = 0; k < pieces; ++k) {
    const double lo = a + k * h;
    const double hi = (k + 1 == pieces) ? b : lo + h;
    const double fa = f(lo);
    const double fb = f(hi);
    const double fm = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    total.add(detail::simpson_step(f, lo, hi, fa, fm, fb, whole, tol / pieces, max_depth));
  }
  return total.value();
}

/// Upper summation index for Poisson(lambda) series.
inline std::size_t poisson_truncation(double lambda) {
  const double k = std::ceil(lambda + 12.0 * std::sqrt(lambda) + 12.0);
  return static_cast<std::size_t>(std::max(50.0, k));
}

/// Sums over k >= 0 of f(k; lambda)^power times 1, u, du/dlambda and u^2,
/// where f is the Poisson pmf and u = (k - lambda)/lambda its score.
struct PoissonMoments {
  double f_power = 0.0;     // sum f^power
  double f_power_u = 0.0;   // sum f^power * u
  double f_power_du = 0.0;  // sum f^power * (-k / lambda^2)
  double f_power_uu = 0.0;  // sum f^power * u^2
  std::size_t terms = 0;
};

inline PoissonMoments poisson_power_moments(double lambda, double power) {
  constexpr double kTailTolerance = 1e-12;
  constexpr std::size_t kMaxTerms = std::size_t{1} << 24;
  const double log_lambda = std::log(lambda);
  std::size_t last = poisson_truncation(lambda);
  for (;;) {
    if (last >= kMaxTerms) {
      throw numeric_error("Poisson series did not converge for lambda=" + std::to_string(lambda) +
                          " within " + std::to_string(kMaxTerms) + " terms");
    }
    NeumaierSum s0, s1, s2, s3;
    double last_term = 0.0;
    for (std::size_t k = 0; k <= last; ++k) {
      const double kd = static_cast<double>(k);
      const double log_pmf = kd * log_lambda - lambda - log_factorial(kd);
      const double w = std::exp(power * log_pmf);
      const double u = (kd - lambda) / lambda;
      const double du = -kd / (lambda * lambda);
      s0.add(w);
      s1.add(w * u);
      s2.add(w * du);
      s3.add(w * u * u);
      last_term = w * (1.0 + std::abs(u) + std::abs(du) + u * u);
    }
    if (last_term < kTailTolerance) {
      return {s0.value(), s1.value(), s2.value(), s3.value(), last + 1};
    }
    last *= 2;
  }
}

}  // namespace robust_sp::numerics
