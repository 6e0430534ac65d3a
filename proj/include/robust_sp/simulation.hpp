#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "robust_sp/estimation.hpp"
#include "robust_sp/rng.hpp"

namespace robust_sp {

struct PoissonRate {
  double rate = 18.0;
};
struct GaussianPoint {
  double mean = 50.0;
  double sd = 1.3;
};
struct PointMass {
  double r = 0.0;
};
using Contaminant = std::variant<PoissonRate, GaussianPoint, PointMass>;

/// How an AR(1) outlier enters the path.
enum class Ar1Contamination {
  /// The outlier replaces the recorded state; the chain keeps evolving from
  /// its clean value.
  ReplaceObservation,
  /// The outlier becomes the state the next transition conditions on.
  Propagate,
};

struct ContaminationSpec {
  double delta_percent = 0.0;
  Contaminant contaminant = PointMass{};
  /// nullopt: every increment/transition; otherwise only this 1-based index.
  std::optional<std::size_t> single_index;
  Ar1Contamination ar1_mode = Ar1Contamination::ReplaceObservation;

  void validate() const {
    if (!(delta_percent >= 0.0 && delta_percent <= 100.0))
      throw contract_error("contamination percentage must lie in [0, 100]");
    if (const auto* pr = std::get_if<PoissonRate>(&contaminant); pr && !(pr->rate > 0.0))
      throw contract_error("contaminating Poisson rate must be positive");
    if (const auto* gp = std::get_if<GaussianPoint>(&contaminant); gp && !(gp->sd > 0.0))
      throw contract_error("contaminating Gaussian sd must be positive");
    if (single_index && *single_index == 0) throw contract_error("contamination index is 1-based");
  }
};

namespace detail {

enum StreamPurpose : std::uint64_t { kFlag = 0, kClean = 1, kOutlier = 2 };

inline rng::Philox stream_for(std::uint64_t seed, std::size_t i, StreamPurpose purpose) {
  return rng::Philox(seed, (static_cast<std::uint64_t>(i) << 2) | purpose);
}

inline double draw_contaminant(const Contaminant& c, rng::Philox& g) {
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PoissonRate>) return static_cast<double>(g.poisson(k.rate));
        else if constexpr (std::is_same_v<K, GaussianPoint>) return g.normal(k.mean, k.sd);
        else return k.r;
      },
      c);
}

}  // namespace detail

/// Draws one observed path. IIP: n increments; MP: states X_0 = 0, X_1..X_n.
/// Each step i draws a contamination flag with probability delta/100 (within
/// scope) and then samples either the clean law or the contaminant. Every
/// (seed, step, purpose) triple owns its own random stream, so paths that
/// differ only in contamination share their clean draws.
inline std::vector<double> simulate_path(const ModelFamily& family, const ParamVector& theta,
                                         const TimeGrid& grid, const ContaminationSpec& cont,
                                         std::uint64_t seed) {
  cont.validate();
  const std::size_t n = grid.increments();
  const double prob = cont.delta_percent / 100.0;
  auto contaminated = [&](std::size_t i) {
    auto g = detail::stream_for(seed, i, detail::kFlag);
    const double u = g.uniform();
    if (cont.single_index && *cont.single_index != i) return false;
    return u < prob;
  };
  auto outlier = [&](std::size_t i) {
    auto g = detail::stream_for(seed, i, detail::kOutlier);
    return detail::draw_contaminant(cont.contaminant, g);
  };

  if (family.regime() == Regime::IIP) {
    std::vector<double> y(n);
    for (std::size_t i = 1; i <= n; ++i) {
      const NaturalParams lam = natural_params(family, theta, grid, i);
      auto g = detail::stream_for(seed, i, detail::kClean);
      const double clean = family.is_poisson() ? static_cast<double>(g.poisson(lam[0]))
                                               : g.normal(lam[0], lam[1]);
      y[i - 1] = contaminated(i) ? outlier(i) : clean;
    }
    return y;
  }

  std::vector<double> x(n + 1, 0.0);
  double state = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double prev = cont.ar1_mode == Ar1Contamination::Propagate ? x[i - 1] : state;
    const NaturalParams lam = natural_params(family, theta, grid, i, prev);
    auto g = detail::stream_for(seed, i, detail::kClean);
    state = g.normal(lam[0], lam[1]);
    x[i] = contaminated(i) ? outlier(i) : state;
  }
  return x;
}

/// Start selection for the replicate fits of a study.
enum class StartPolicy {
  /// alpha_path with the fit configuration as given (coarse scan, multistart,
  /// warm starts along alpha); reports the global minimizer found.
  GlobalBest,
  /// Each alpha is a local search started at theta_true with no scan or
  /// multistart; selects the root of the estimating equation nearest the
  /// data-generating parameter.
  TrueParameterLocal,
};

struct ScenarioConfig {
  ModelFamily family;
  ParamVector theta_true;
  TimeGrid grid;
  ContaminationSpec contamination;
  std::vector<double> alphas{0.0};
  int replications = 100;
  std::uint64_t master_seed = 0;
  FitConfig fit;
  StartPolicy start_policy = StartPolicy::GlobalBest;
  unsigned threads = 1;

  void validate() const {
    if (replications < 1) throw contract_error("replications must be >= 1");
    if (alphas.empty()) throw contract_error("at least one alpha is required");
    detail::check_theta(family, theta_true);
    contamination.validate();
    fit.validate();
  }
};

/// Aggregates for one (alpha, delta) cell.
struct StudyCell {
  double alpha = 0.0;
  double delta = 0.0;
  Vector mean_estimate;
  /// Mean squared error against theta_true.
  Vector mse;
  /// Sample variance (denominator R_converged - 1) around the replicate mean.
  Vector variance;
  /// R x p raw estimates; rows of failed replications hold the best-effort fit.
  Matrix replicate_estimates;
  std::vector<bool> converged;
  int n_converged = 0;
  int n_failed = 0;
};

struct MonteCarloReport {
  std::vector<StudyCell> cells;
  std::uint64_t master_seed = 0;
  int replications = 0;
  ParamVector theta_true;
  std::vector<std::string> notes;
};

inline std::uint64_t replication_seed(std::uint64_t master, int replication) {
  return rng::derive_seed(master, static_cast<std::uint64_t>(replication));
}

namespace detail {

template <typename Fn>
void parallel_for(int count, unsigned threads, Fn&& fn) {
  threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::max(count, 1))));
  if (threads == 1) {
    for (int k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int k = next++; k < count; k = next++) fn(k);
    });
  }
  for (auto& th : pool) th.join();
}

inline StudyCell aggregate(double alpha, double delta, const ParamVector& truth,
                           const std::vector<FitResult>& fits) {
  const auto p = truth.size();
  const auto reps = static_cast<Eigen::Index>(fits.size());
  StudyCell cell;
  cell.alpha = alpha;
  cell.delta = delta;
  cell.replicate_estimates = Matrix(reps, p);
  cell.mean_estimate = Vector::Constant(p, std::numeric_limits<double>::quiet_NaN());
  cell.mse = cell.mean_estimate;
  cell.variance = cell.mean_estimate;
  for (Eigen::Index r = 0; r < reps; ++r) {
    cell.replicate_estimates.row(r) = fits[static_cast<std::size_t>(r)].theta_hat.transpose();
    cell.converged.push_back(fits[static_cast<std::size_t>(r)].converged);
  }
  cell.n_converged = static_cast<int>(std::count(cell.converged.begin(), cell.converged.end(), true));
  cell.n_failed = static_cast<int>(reps) - cell.n_converged;
  if (cell.n_converged == 0) return cell;
  for (Eigen::Index j = 0; j < p; ++j) {
    std::vector<double> xs;
    for (Eigen::Index r = 0; r < reps; ++r)
      if (cell.converged[static_cast<std::size_t>(r)]) xs.push_back(cell.replicate_estimates(r, j));
    const double m = numerics::pairwise_sum(xs) / static_cast<double>(xs.size());
    std::vector<double> sq(xs.size());
    std::vector<double> dev(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
      sq[k] = (xs[k] - truth[j]) * (xs[k] - truth[j]);
      dev[k] = (xs[k] - m) * (xs[k] - m);
    }
    cell.mean_estimate[j] = m;
    cell.mse[j] = numerics::pairwise_sum(sq) / static_cast<double>(xs.size());
    cell.variance[j] = xs.size() > 1 ? numerics::pairwise_sum(dev) / static_cast<double>(xs.size() - 1) : 0.0;
  }
  return cell;
}

}  // namespace detail

/// Monte Carlo study at the scenario's contamination level: replication r
/// simulates a path with seed derived from (master_seed, r), fits the whole
/// alpha path and aggregates per alpha. Output does not depend on `threads`.
inline MonteCarloReport run_study(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto reps = static_cast<std::size_t>(cfg.replications);
  std::vector<std::vector<FitResult>> fits(reps);
  detail::parallel_for(cfg.replications, cfg.threads, [&](int r) {
    const std::uint64_t seed = replication_seed(cfg.master_seed, r);
    Sample sample(cfg.family, cfg.grid,
                  simulate_path(cfg.family, cfg.theta_true, cfg.grid, cfg.contamination, seed));
    FitConfig fc = cfg.fit;
    fc.seed = seed;
    if (cfg.start_policy == StartPolicy::GlobalBest) {
      fits[static_cast<std::size_t>(r)] = alpha_path(sample, cfg.alphas, fc);
      return;
    }
    fc.initial_theta = cfg.theta_true;
    fc.coarse_scan = false;
    fc.multistart_count = 0;
    auto& row = fits[static_cast<std::size_t>(r)];
    for (double a : cfg.alphas) {
      fc.alpha = Alpha(a);
      row.push_back(fit(sample, fc));
    }
  });

  MonteCarloReport report;
  report.master_seed = cfg.master_seed;
  report.replications = cfg.replications;
  report.theta_true = cfg.theta_true;
  if (cfg.family.regime() == Regime::MP) report.notes.push_back("AR(1) initial state X_0 = 0");
  if (cfg.start_policy == StartPolicy::TrueParameterLocal)
    report.notes.push_back("replicate fits are local searches started at theta_true");
  for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
    std::vector<FitResult> column;
    column.reserve(reps);
    for (const auto& row : fits) column.push_back(row[a]);
    report.cells.push_back(
        detail::aggregate(cfg.alphas[a], cfg.contamination.delta_percent, cfg.theta_true, column));
  }
  return report;
}

/// run_study over several contamination levels, cells ordered by delta then alpha.
inline MonteCarloReport run_table(ScenarioConfig cfg, const std::vector<double>& deltas) {
  MonteCarloReport all;
  for (double d : deltas) {
    cfg.contamination.delta_percent = d;
    MonteCarloReport part = run_study(cfg);
    if (all.cells.empty()) {
      all.master_seed = part.master_seed;
      all.replications = part.replications;
      all.theta_true = part.theta_true;
      all.notes = part.notes;
    }
    for (auto& c : part.cells) all.cells.push_back(std::move(c));
  }
  return all;
}

struct MotivatingConfig {
  ModelFamily family = PoissonModel{};
  ParamVector theta_true = ParamVector::Constant(1, 9.0);
  TimeGrid grid = TimeGrid::unit(25);
  std::size_t index = 5;
  std::vector<double> r_grid{5, 10, 20, 40};
  std::vector<double> p_grid{0.0, 0.05, 0.1, 0.2};
  int replications = 200;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct BiasPoint {
  double r = 0.0;
  double p_cont = 0.0;
  Vector mean_estimate;
  Vector bias;
  int n_converged = 0;
};

/// MLE bias surface when only increment `index` is contaminated by a point
/// mass at r with probability p. Replication seeds are shared across the
/// (r, p) grid.
inline std::vector<BiasPoint> motivating_experiment(const MotivatingConfig& cfg) {
  if (cfg.index < 1 || cfg.index > cfg.grid.increments())
    throw contract_error("contamination index outside 1..n");
  if (cfg.replications < 1) throw contract_error("replications must be >= 1");
  std::vector<BiasPoint> out;
  for (double p : cfg.p_grid) {
    for (double r : cfg.r_grid) {
      ContaminationSpec cont;
      cont.delta_percent = 100.0 * p;
      cont.contaminant = PointMass{r};
      cont.single_index = cfg.index;
      std::vector<FitResult> fits(static_cast<std::size_t>(cfg.replications));
      detail::parallel_for(cfg.replications, cfg.threads, [&](int k) {
        const std::uint64_t seed = replication_seed(cfg.seed, k);
        Sample sample(cfg.family, cfg.grid, simulate_path(cfg.family, cfg.theta_true, cfg.grid, cont, seed));
        FitConfig fc;
        fc.seed = seed;
        fc.multistart_count = 0;
        fits[static_cast<std::size_t>(k)] = fit(sample, fc);
      });
      const StudyCell cell = detail::aggregate(0.0, cont.delta_percent, cfg.theta_true, fits);
      out.push_back({r, p, cell.mean_estimate, cell.mean_estimate - cfg.theta_true, cell.n_converged});
    }
  }
  return out;
}

}  // namespace robust_sp
