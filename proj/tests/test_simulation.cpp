#include <cmath>

#include <gtest/gtest.h>

#include "robust_sp/simulation.hpp"

using namespace robust_sp;

namespace {

ParamVector vec(std::initializer_list<double> xs) {
  ParamVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

ContaminationSpec cont(double delta, Contaminant c = PoissonRate{}) {
  ContaminationSpec s;
  s.delta_percent = delta;
  s.contaminant = c;
  return s;
}

ScenarioConfig poisson_scenario(int reps) {
  ScenarioConfig sc{.family = PoissonModel{}, .theta_true = vec({9.0}), .grid = TimeGrid::unit(50),
                    .contamination = cont(20.0), .alphas = {0.0, 0.4}, .replications = reps,
                    .master_seed = 11, .fit = {}};
  return sc;
}

}  // namespace

TEST(SimulatePath, ReproducibleAndSharesCleanDraws) {
  const TimeGrid g = TimeGrid::unit(400);
  const ModelFamily f = PoissonModel{};
  const auto clean = simulate_path(f, vec({9.0}), g, cont(0.0), 5);
  EXPECT_EQ(clean, simulate_path(f, vec({9.0}), g, cont(0.0), 5));
  EXPECT_NE(clean, simulate_path(f, vec({9.0}), g, cont(0.0), 6));
  const auto dirty = simulate_path(f, vec({9.0}), g, cont(30.0, PointMass{1000.0}), 5);
  int replaced = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (dirty[i] == 1000.0) ++replaced;
    else EXPECT_EQ(dirty[i], clean[i]);
  }
  EXPECT_NEAR(replaced / 400.0, 0.3, 4.0 * std::sqrt(0.3 * 0.7 / 400.0));
}

TEST(SimulatePath, MixtureMeanOfPoissonIncrements) {
  // Unit grid with intensity exponent 1: every increment has rate theta.
  PoissonModel m;
  m.intensity.exponent = 1.0;
  const TimeGrid g = TimeGrid::unit(100000);
  const auto y = simulate_path(m, vec({9.0}), g, cont(20.0, PoissonRate{18.0}), 1);
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  const double expected = 0.8 * 9.0 + 0.2 * 18.0;
  const double var = 0.8 * 9.0 + 0.2 * 18.0 + 0.8 * 0.2 * 81.0;
  EXPECT_NEAR(mean, expected, 4.0 * std::sqrt(var / 100000.0));
}

TEST(SimulatePath, GaussianIncrementMoments) {
  BrownianModel m;
  m.mean.exponent = 1.0;
  const TimeGrid g = TimeGrid::unit(100000);
  const auto y = simulate_path(m, vec({5.0, std::log(3.0)}), g, cont(0.0), 2);
  double mean = 0.0, sq = 0.0;
  for (double v : y) mean += v;
  mean /= 100000.0;
  for (double v : y) sq += (v - mean) * (v - mean);
  EXPECT_NEAR(mean, 5.0, 4.0 * 3.0 / std::sqrt(100000.0));
  EXPECT_NEAR(sq / 99999.0, 9.0, 0.2);
}

TEST(SimulatePath, SingleIndexContamination) {
  ContaminationSpec c = cont(100.0, PointMass{40.0});
  c.single_index = 5;
  const auto y = simulate_path(PoissonModel{}, vec({9.0}), TimeGrid::unit(25), c, 3);
  const auto y0 = simulate_path(PoissonModel{}, vec({9.0}), TimeGrid::unit(25), cont(0.0), 3);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], i == 4 ? 40.0 : y0[i]);
}

TEST(SimulatePath, Ar1ContaminationModes) {
  const TimeGrid g = TimeGrid::unit(200);
  const ModelFamily f = Ar1Model{};
  const auto clean = simulate_path(f, vec({0.7}), g, cont(0.0), 4);
  EXPECT_EQ(clean.size(), 201U);
  EXPECT_EQ(clean[0], 0.0);
  ContaminationSpec rep = cont(20.0, GaussianPoint{10.0, 1.0});
  const auto replaced = simulate_path(f, vec({0.7}), g, rep, 4);
  int changed = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (replaced[i] != clean[i]) ++changed;
  }
  EXPECT_GT(changed, 10);
  EXPECT_LT(changed, 80);
  rep.ar1_mode = Ar1Contamination::Propagate;
  const auto propagated = simulate_path(f, vec({0.7}), g, rep, 4);
  int differ = 0;
  for (std::size_t i = 0; i < clean.size(); ++i)
    if (propagated[i] != clean[i]) ++differ;
  EXPECT_GT(differ, changed);
}

TEST(Contamination, Validation) {
  EXPECT_THROW(cont(-1.0).validate(), contract_error);
  EXPECT_THROW(cont(101.0).validate(), contract_error);
  EXPECT_THROW(cont(5.0, PoissonRate{0.0}).validate(), contract_error);
  EXPECT_THROW(cont(5.0, GaussianPoint{0.0, -1.0}).validate(), contract_error);
  ContaminationSpec c = cont(5.0);
  c.single_index = 0;
  EXPECT_THROW(c.validate(), contract_error);
}

TEST(RunStudy, IndependentOfThreadCount) {
  ScenarioConfig sc = poisson_scenario(12);
  sc.threads = 1;
  const MonteCarloReport a = run_study(sc);
  sc.threads = 4;
  const MonteCarloReport b = run_study(sc);
  ASSERT_EQ(a.cells.size(), b.cells.size());
  for (std::size_t k = 0; k < a.cells.size(); ++k) {
    EXPECT_EQ(a.cells[k].replicate_estimates, b.cells[k].replicate_estimates);
    EXPECT_EQ(a.cells[k].mse, b.cells[k].mse);
  }
}

TEST(RunStudy, MseDecomposesIntoVarianceAndBias) {
  const MonteCarloReport r = run_study(poisson_scenario(20));
  for (const auto& c : r.cells) {
    ASSERT_EQ(c.n_converged, 20);
    const double bias = c.mean_estimate[0] - 9.0;
    EXPECT_NEAR(c.mse[0], c.variance[0] * 19.0 / 20.0 + bias * bias, 1e-9 * c.mse[0]);
  }
  // robust alpha beats the MLE under 20% contamination
  EXPECT_LT(r.cells[1].mse[0], r.cells[0].mse[0]);
}

TEST(RunStudy, TrueParameterPolicyIsNoted) {
  ScenarioConfig sc = poisson_scenario(4);
  sc.start_policy = StartPolicy::TrueParameterLocal;
  const MonteCarloReport r = run_study(sc);
  ASSERT_EQ(r.notes.size(), 1U);
  EXPECT_EQ(r.cells.size(), 2U);
}

TEST(RunTable, CellsOrderedByDeltaThenAlpha) {
  ScenarioConfig sc = poisson_scenario(3);
  const MonteCarloReport r = run_table(sc, {0.0, 10.0});
  ASSERT_EQ(r.cells.size(), 4U);
  EXPECT_EQ(r.cells[1].delta, 0.0);
  EXPECT_EQ(r.cells[1].alpha, 0.4);
  EXPECT_EQ(r.cells[2].delta, 10.0);
}

TEST(Motivating, BiasGrowsWithContaminationPoint) {
  MotivatingConfig m;
  m.replications = 60;
  m.seed = 3;
  const auto pts = motivating_experiment(m);
  ASSERT_EQ(pts.size(), 16U);
  // p = 0: identical fits for every r because seeds are shared
  for (std::size_t k = 1; k < 4; ++k) EXPECT_EQ(pts[k].bias[0], pts[0].bias[0]);
  std::vector<double> at20;
  for (const auto& b : pts)
    if (b.p_cont == 0.2) at20.push_back(b.bias[0]);
  ASSERT_EQ(at20.size(), 4U);
  for (std::size_t k = 1; k < at20.size(); ++k) EXPECT_GT(at20[k], at20[k - 1]);
  m.index = 26;
  EXPECT_THROW(motivating_experiment(m), contract_error);
}
