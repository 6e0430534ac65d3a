#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "robust_sp/asymptotics.hpp"

using namespace robust_sp;

namespace {

ParamVector vec(std::initializer_list<double> xs) {
  ParamVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

double max_rel_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1e-300, b.cwiseAbs().maxCoeff());
}

double quad(const std::function<double(double)>& f, double mu, double s) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  double total = 0.0;
  // split at the centre, then map each half-line
  total += gauss_kronrod<double, 61>::integrate(f, -std::numeric_limits<double>::infinity(), mu, 15, 1e-14, &err);
  total += gauss_kronrod<double, 61>::integrate(f, mu, std::numeric_limits<double>::infinity(), 15, 1e-14, &err);
  (void)s;
  return total;
}

}  // namespace

TEST(CConstants, GaussianClosedFormsMatchQuadrature) {
  const ModelFamily f = BrownianModel{};
  for (double a : {0.0, 0.25, 0.5, 1.0, 2.0}) {
    for (auto [mu, s] : {std::pair{0.0, 1.0}, std::pair{1.5, 0.4}, std::pair{-3.0, 2.7}}) {
      NaturalParams lam(2);
      lam << mu, s;
      const CConstants c = c_constants(f, lam, Alpha(a));
      auto w = [&](double y) { return std::exp((1.0 + a) * log_density(f, y, lam)); };
      for (int r = 0; r < 2; ++r) {
        const double ca = quad([&](double y) { return w(y) * score(f, y, lam)[r]; }, mu, s);
        EXPECT_NEAR(c.c_alpha[r], ca, 1e-8) << a;
        for (int k = 0; k < 2; ++k) {
          const double c1 = quad([&](double y) { return w(y) * score_gradient(f, y, lam)(r, k); }, mu, s);
          const double c2 = quad([&](double y) {
            const Vector u = score(f, y, lam);
            return w(y) * u[r] * u[k];
          }, mu, s);
          EXPECT_NEAR(c.c1_alpha(r, k), c1, 1e-8) << a;
          EXPECT_NEAR(c.c2_alpha(r, k), c2, 1e-8) << a;
        }
      }
    }
  }
}

TEST(CConstants, PoissonMatchesLongSeries) {
  const ModelFamily f = PoissonModel{};
  for (double lam0 : {0.3, 2.0, 9.0, 40.0}) {
    for (double a : {0.0, 0.2, 0.5, 1.0}) {
      long double s1 = 0, s2 = 0, s3 = 0;
      for (int k = 0; k <= 300; ++k) {
        const long double lp = k * std::log(static_cast<long double>(lam0)) - lam0 - std::lgamma(static_cast<long double>(k) + 1);
        const long double w = std::exp((1 + a) * lp);
        const long double u = (k - static_cast<long double>(lam0)) / lam0;
        s1 += w * u;
        s2 += w * (-k / (static_cast<long double>(lam0) * lam0));
        s3 += w * u * u;
      }
      const CConstants c = c_constants(f, NaturalParams::Constant(1, lam0), Alpha(a));
      EXPECT_NEAR(c.c_alpha[0], static_cast<double>(s1), 1e-10) << lam0 << ' ' << a;
      EXPECT_NEAR(c.c1_alpha(0, 0), static_cast<double>(s2), 1e-10) << lam0 << ' ' << a;
      EXPECT_NEAR(c.c2_alpha(0, 0), static_cast<double>(s3), 1e-10) << lam0 << ' ' << a;
    }
  }
}

namespace {

// Closed forms for drifted BM with lambda_i = (mu_i, sigma_i).
Matrix bm_psi_closed(const ModelFamily& f, const ParamVector& th, const TimeGrid& g, double a) {
  Matrix psi = Matrix::Zero(2, 2);
  const double k = 1.0 / (1.0 + a);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = k;
  d(1, 1) = 3.0 * k * k - 2.0 * k + 1.0;
  for (std::size_t i = 1; i <= g.increments(); ++i) {
    const double si = natural_params(f, th, g, i)[1];
    const Jacobian L = jacobian(f, th, g, i);
    psi += std::pow(2.0 * std::numbers::pi, -0.5 * a) * std::sqrt(1.0 + a) / std::pow(si, 2.0 + a) * L.transpose() * d * L;
  }
  return psi / static_cast<double>(g.increments());
}

Matrix bm_omega_closed(const ModelFamily& f, const ParamVector& th, const TimeGrid& g, double a) {
  Matrix om = Matrix::Zero(2, 2);
  const double k2 = 1.0 / (1.0 + 2.0 * a);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = k2;
  d(1, 1) = 3.0 * k2 * k2 - 2.0 * k2 + 1.0 -
            std::sqrt(1.0 + 2.0 * a) / (1.0 + a) * std::pow(1.0 / (1.0 + a) - 1.0, 2);
  for (std::size_t i = 1; i <= g.increments(); ++i) {
    const double si = natural_params(f, th, g, i)[1];
    const Jacobian L = jacobian(f, th, g, i);
    om += (1.0 + a) * (1.0 + a) * std::pow(2.0 * std::numbers::pi, -a) /
          (std::pow(si, 2.0 + 2.0 * a) * std::sqrt(1.0 + 2.0 * a)) * L.transpose() * d * L;
  }
  return om / static_cast<double>(g.increments());
}

}  // namespace

TEST(PsiOmega, BrownianGenericAssemblyMatchesClosedForms) {
  const ModelFamily f = BrownianModel{};
  const TimeGrid g({0.0, 0.5, 1.2, 2.0, 2.3, 4.0});
  const ParamVector th = vec({5.0, std::log(3.0)});
  for (double a : {0.0, 0.1, 0.4, 0.7, 1.0}) {
    const AsymptoticMatrices m = psi_omega(f, th, g, Alpha(a));
    EXPECT_LT(max_rel_diff(m.psi_n, bm_psi_closed(f, th, g, a)), 1e-10) << a;
    EXPECT_LT(max_rel_diff(m.omega_n, bm_omega_closed(f, th, g, a)), 1e-10) << a;
  }
}

TEST(PsiOmega, PoissonMleIsFisherInformation) {
  const ModelFamily f = PoissonModel{};
  const TimeGrid g = TimeGrid::unit(30);
  const AsymptoticMatrices m = psi_omega(f, vec({9.0}), g, Alpha(0.0));
  double info = 0.0;
  for (std::size_t i = 1; i <= 30; ++i) info += (std::sqrt(i) - std::sqrt(i - 1.0)) / 9.0;
  info /= 30.0;
  EXPECT_NEAR(m.psi_n(0, 0), info, 1e-12);
  EXPECT_NEAR(m.omega_n(0, 0), info, 1e-12);
  EXPECT_NEAR(m.sandwich(0, 0), 1.0 / (30.0 * info), 1e-12);
}

TEST(PsiOmega, SandwichIsSymmetricPositiveDefinite) {
  const AsymptoticMatrices m = psi_omega(BrownianModel{}, vec({5.0, 0.7}), TimeGrid::unit(50), Alpha(0.4));
  EXPECT_LT((m.sandwich - m.sandwich.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m.sandwich);
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
  // robustness costs efficiency: the sandwich exceeds the MLE variance
  const AsymptoticMatrices m0 = psi_omega(BrownianModel{}, vec({5.0, 0.7}), TimeGrid::unit(50), Alpha(0.0));
  EXPECT_GT(m.sandwich(0, 0), m0.sandwich(0, 0));
}

TEST(PsiOmega, ErrorsAndStatistic) {
  EXPECT_THROW(psi_omega(Ar1Model{}, vec({0.5}), TimeGrid::unit(5), Alpha(0.3)), contract_error);
  Matrix singular = Matrix::Zero(2, 2);
  singular(0, 0) = 1.0;
  EXPECT_THROW(detail::spd_inverse(singular, "test"), linalg_error);
  const AsymptoticMatrices m = psi_omega(PoissonModel{}, vec({9.0}), TimeGrid::unit(50), Alpha(0.4));
  EXPECT_EQ(standardized_statistic(m, vec({9.0}), vec({9.0}))[0], 0.0);
  const double z = standardized_statistic(m, vec({9.5}), vec({9.0}))[0];
  EXPECT_NEAR(z, 0.5 / std::sqrt(m.sandwich(0, 0)), 1e-10);
}
