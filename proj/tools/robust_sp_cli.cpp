#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "robust_sp/io.hpp"
#include "robust_sp/robust_sp.hpp"

namespace fs = std::filesystem;
using namespace robust_sp;
using io::json;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string data;
  std::optional<std::uint64_t> seed;
  std::optional<int> replications;
  std::string alphas;
  std::optional<double> alpha;
  std::optional<unsigned> threads;
  std::optional<double> delta;
};

unsigned resolve_threads(const Options& o) {
  if (o.threads) return std::max(1U, *o.threads);
  if (const char* env = std::getenv("ROBUST_SP_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw contract_error("ROBUST_SP_THREADS must be a positive integer");
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

/// Opens `dir/name` (creating dir) or returns stdout when no --out is given.
class Sink {
 public:
  Sink(const std::string& dir, const std::string& name) {
    if (dir.empty()) return;
    fs::create_directories(dir);
    path_ = (fs::path(dir) / name).string();
    file_.open(path_);
    if (!file_) throw contract_error("cannot write '" + path_ + "'");
  }
  std::ostream& stream() { return path_.empty() ? std::cout : file_; }
  [[nodiscard]] bool to_file() const { return !path_.empty(); }

 private:
  std::string path_;
  std::ofstream file_;
};

json require_config(const Options& o) {
  if (o.config.empty()) throw contract_error("--config is required");
  return io::read_json_file(o.config);
}

ParamVector theta_from(const json& j) {
  for (const char* key : {"theta", "theta_true"})
    if (j.contains(key)) return io::detail::parse_theta(j.at(key));
  throw contract_error("config needs \"theta\"");
}

int cmd_simulate(const Options& o) {
  io::StudySpec spec = io::parse_study(require_config(o));
  ScenarioConfig& sc = spec.scenario;
  if (o.seed) sc.master_seed = *o.seed;
  sc.contamination.delta_percent = o.delta ? *o.delta : spec.deltas.front();
  sc.contamination.validate();
  Sample s(sc.family, sc.grid, simulate_path(sc.family, sc.theta_true, sc.grid, sc.contamination, sc.master_seed));
  Sink sink(o.out, "path.csv");
  io::write_data_csv(sink.stream(), s);
  return 0;
}

int cmd_fit(const Options& o) {
  const json cfg = require_config(o);
  if (o.data.empty()) throw contract_error("--data is required");
  std::ifstream in(o.data);
  if (!in) throw contract_error("cannot open data '" + o.data + "'");
  const Sample s = io::read_data_csv(in, io::parse_model(cfg.contains("model") ? cfg.at("model") : cfg));
  FitConfig fc = cfg.contains("fit") ? io::parse_fit(cfg.at("fit")) : FitConfig{};
  if (o.seed) fc.seed = *o.seed;
  json out;
  if (!o.alphas.empty()) {
    const auto alphas = io::parse_list(o.alphas);
    const auto fits = alpha_path(s, alphas, fc);
    out = json::array();
    for (std::size_t k = 0; k < fits.size(); ++k) out.push_back(io::to_json(fits[k], alphas[k]));
  } else {
    if (o.alpha) fc.alpha = Alpha(*o.alpha);
    out = io::to_json(fit(s, fc), fc.alpha.value());
  }
  Sink sink(o.out, "fit.json");
  sink.stream() << out.dump(2) << '\n';
  return 0;
}

int cmd_study(const Options& o) {
  io::StudySpec spec = io::parse_study(require_config(o));
  ScenarioConfig& sc = spec.scenario;
  if (o.seed) sc.master_seed = *o.seed;
  if (o.replications) sc.replications = *o.replications;
  if (!o.alphas.empty()) sc.alphas = io::parse_list(o.alphas);
  if (o.delta) spec.deltas = {*o.delta};
  sc.threads = resolve_threads(o);
  const MonteCarloReport report = run_table(sc, spec.deltas);
  {
    Sink sink(o.out, "study.csv");
    io::write_study_csv(sink.stream(), report);
  }
  if (o.out.empty()) return 0;
  {
    Sink sink(o.out, "replicates.csv");
    io::write_replicates_csv(sink.stream(), report);
  }
  for (double d : spec.deltas) {
    for (Eigen::Index j = 0; j < sc.theta_true.size(); ++j) {
      std::vector<io::BoxGroup> groups;
      for (const auto& c : report.cells) {
        if (c.delta != d) continue;
        std::vector<double> v(static_cast<std::size_t>(c.replicate_estimates.rows()));
        for (Eigen::Index r = 0; r < c.replicate_estimates.rows(); ++r)
          v[static_cast<std::size_t>(r)] = c.replicate_estimates(r, j);
        groups.push_back({"a=" + io::num(c.alpha), std::move(v)});
      }
      const std::string name = "box_delta" + io::num(d) + "_theta" + std::to_string(j + 1) + ".svg";
      Sink sink(o.out, name);
      io::write_box_plot(sink.stream(), groups,
                         "theta_" + std::to_string(j + 1) + " estimates, delta = " + io::num(d) + "%",
                         "estimate", sc.theta_true[j]);
    }
  }
  return 0;
}

int cmd_variance(const Options& o) {
  const json cfg = require_config(o);
  const ModelFamily family = io::parse_model(cfg.at("model"));
  std::vector<double> alphas{o.alpha.value_or(0.0)};
  if (!o.alphas.empty()) alphas = io::parse_list(o.alphas);
  json out = json::array();
  if (!o.data.empty()) {
    std::ifstream in(o.data);
    if (!in) throw contract_error("cannot open data '" + o.data + "'");
    const Sample s = io::read_data_csv(in, family);
    FitConfig fc = cfg.contains("fit") ? io::parse_fit(cfg.at("fit")) : FitConfig{};
    if (o.seed) fc.seed = *o.seed;
    const auto fits = alpha_path(s, alphas, fc);
    for (std::size_t k = 0; k < alphas.size(); ++k) {
      json row = io::to_json(psi_omega(family, fits[k].theta_hat, s.grid, Alpha(alphas[k])));
      row["alpha"] = alphas[k];
      row["theta"] = io::to_json(Vector(fits[k].theta_hat));
      row["plug_in"] = true;
      out.push_back(row);
    }
  } else {
    const ParamVector theta = theta_from(cfg);
    const TimeGrid grid = io::parse_grid(cfg.at("grid"));
    for (double a : alphas) {
      json row = io::to_json(psi_omega(family, theta, grid, Alpha(a)));
      row["alpha"] = a;
      row["theta"] = io::to_json(Vector(theta));
      row["plug_in"] = false;
      out.push_back(row);
    }
  }
  Sink sink(o.out, "variance.json");
  sink.stream() << out.dump(2) << '\n';
  return 0;
}

int cmd_influence(const Options& o) {
  IFQuery q = io::parse_influence(require_config(o));
  if (!o.alphas.empty()) q.alphas = io::parse_list(o.alphas);
  const IFCurve curve = influence_curve(q);
  {
    Sink sink(o.out, "influence.csv");
    io::write_influence_csv(sink.stream(), curve);
  }
  if (o.out.empty()) return 0;
  const Eigen::Index p = static_cast<Eigen::Index>(q.family.p());
  for (Eigen::Index j = 0; j < p; ++j) {
    std::vector<io::Series> series;
    for (std::size_t a = 0; a < curve.alphas.size(); ++a) {
      io::Series s{"alpha=" + io::num(curve.alphas[a]), curve.r_values, {}};
      for (const auto& v : curve.values[a]) s.y.push_back(v[j]);
      series.push_back(std::move(s));
    }
    Sink sink(o.out, "influence_theta" + std::to_string(j + 1) + ".svg");
    io::write_line_plot(sink.stream(), series, "Influence function, theta_" + std::to_string(j + 1), "r", "IF");
  }
  return 0;
}

int cmd_motivate(const Options& o) {
  MotivatingConfig m = o.config.empty() ? MotivatingConfig{} : io::parse_motivating(io::read_json_file(o.config));
  if (o.seed) m.seed = *o.seed;
  if (o.replications) m.replications = *o.replications;
  m.threads = resolve_threads(o);
  const auto pts = motivating_experiment(m);
  {
    Sink sink(o.out, "motivate.csv");
    io::write_motivating_csv(sink.stream(), pts);
  }
  if (o.out.empty()) return 0;
  std::vector<io::Series> series;
  for (double p : m.p_grid) {
    io::Series s{"p=" + io::num(p), {}, {}};
    for (const auto& b : pts)
      if (b.p_cont == p) {
        s.x.push_back(b.r);
        s.y.push_back(b.bias[0]);
      }
    series.push_back(std::move(s));
  }
  Sink sink(o.out, "motivate.svg");
  io::write_line_plot(sink.stream(), series, "MLE bias under single-index contamination", "r", "bias");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum density power divergence estimation for discretely observed processes"};
  app.require_subcommand(1, 1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON configuration file");
    sub->add_option("--out", o.out, "Output directory (stdout when omitted)");
    sub->add_option("--seed", o.seed, "Master seed override");
  };
  auto* simulate = app.add_subcommand("simulate", "Simulate one observed path");
  add_common(simulate);
  simulate->add_option("--delta", o.delta, "Contamination percentage override");
  auto* fit_cmd = app.add_subcommand("fit", "Fit the MDPDE to a data CSV");
  add_common(fit_cmd);
  fit_cmd->add_option("--data", o.data, "Observed path CSV")->required();
  fit_cmd->add_option("--alpha", o.alpha, "DPD tuning parameter");
  fit_cmd->add_option("--alphas", o.alphas, "Comma-separated alpha path");
  auto* study = app.add_subcommand("study", "Monte Carlo contamination study");
  add_common(study);
  study->add_option("--replications", o.replications, "Replications per cell");
  study->add_option("--alphas", o.alphas, "Comma-separated alpha grid");
  study->add_option("--delta", o.delta, "Single contamination percentage");
  study->add_option("--threads", o.threads, "Worker threads");
  auto* variance = app.add_subcommand("variance", "Asymptotic Psi_n, Omega_n and sandwich covariance");
  add_common(variance);
  variance->add_option("--data", o.data, "Fit to this data and evaluate at the estimate");
  variance->add_option("--alpha", o.alpha, "DPD tuning parameter");
  variance->add_option("--alphas", o.alphas, "Comma-separated alpha grid");
  auto* influence = app.add_subcommand("influence", "Influence-function curves");
  add_common(influence);
  influence->add_option("--alphas", o.alphas, "Comma-separated alpha grid");
  auto* motivate = app.add_subcommand("motivate", "Single-index contamination bias experiment");
  add_common(motivate);
  motivate->add_option("--replications", o.replications, "Replications per grid point");
  motivate->add_option("--threads", o.threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*fit_cmd) return cmd_fit(o);
    if (*study) return cmd_study(o);
    if (*variance) return cmd_variance(o);
    if (*influence) return cmd_influence(o);
    if (*motivate) return cmd_motivate(o);
  } catch (const numeric_error& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
