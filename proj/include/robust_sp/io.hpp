#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "robust_sp/influence.hpp"
#include "robust_sp/simulation.hpp"

namespace robust_sp::io {

using json = nlohmann::json;

/// 17 significant digits; parses back to the identical double.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_num(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw contract_error("not a number: '" + s + "'");
  }
  if (used != s.size()) throw contract_error("not a number: '" + s + "'");
  return v;
}

/// Comma-separated list of numbers, e.g. "0,0.2,0.4".
inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(parse_num(item));
  }
  if (out.empty()) throw contract_error("empty number list");
  return out;
}

// ---------------------------------------------------------------------------
// JSON configuration

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw contract_error(std::string("config key '") + key + "': " + e.what());
  }
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline PowerLaw parse_power_law(const json& j) {
  PowerLaw law;
  if (j.is_number()) {
    law.exponent = j.get<double>();
  } else if (j.is_object()) {
    law.exponent = get_or(j, "exponent", law.exponent);
  } else {
    throw contract_error("time shape must be an exponent or {\"exponent\": q}");
  }
  if (!(law.exponent > 0.0)) throw contract_error("time shape exponent must be positive");
  return law;
}

inline ParamVector to_vector(const std::vector<double>& v) {
  ParamVector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[k];
  return out;
}

inline ParamVector parse_theta(const json& j) {
  if (j.is_number()) return ParamVector::Constant(1, j.get<double>());
  if (!j.is_array()) throw contract_error("theta must be a number or an array");
  return to_vector(j.get<std::vector<double>>());
}

}  // namespace detail

/// {"family": "poisson" | "brownian" | "ar1", ...}
inline ModelFamily parse_model(const json& j) {
  if (!j.is_object() || !j.contains("family")) throw contract_error("model needs a \"family\" key");
  const std::string fam = detail::lower(j.at("family").get<std::string>());
  if (fam == "poisson") {
    PoissonModel m;
    if (j.contains("intensity")) m.intensity = detail::parse_power_law(j.at("intensity"));
    return m;
  }
  if (fam == "brownian" || fam == "bm" || fam == "drifted_bm") {
    BrownianModel m;
    if (j.contains("mean")) m.mean = detail::parse_power_law(j.at("mean"));
    if (j.contains("scale")) {
      const json& s = j.at("scale");
      const std::string form = detail::lower(detail::get_or<std::string>(s, "form", "exponential"));
      if (form == "exponential") {
        m.scale = ScaleForm::Exponential;
      } else if (form == "constant") {
        m.scale = ScaleForm::Constant;
        m.constant_scale = detail::get_or(s, "value", 1.0);
        if (!(m.constant_scale > 0.0)) throw contract_error("constant scale must be positive");
      } else {
        throw contract_error("unknown scale form '" + form + "'");
      }
    }
    const std::string conv = detail::lower(detail::get_or<std::string>(j, "variance_convention", "linear"));
    if (conv == "linear") m.convention = VarianceConvention::Linear;
    else if (conv == "sqrt" || conv == "square_root") m.convention = VarianceConvention::SquareRoot;
    else throw contract_error("unknown variance_convention '" + conv + "'");
    return m;
  }
  if (fam == "ar1") {
    Ar1Model m;
    const std::string mode = detail::lower(detail::get_or<std::string>(j, "mode", "rho_only"));
    if (mode == "rho_only") m.mode = Ar1Mode::RhoOnly;
    else if (mode == "full") m.mode = Ar1Mode::Full;
    else throw contract_error("unknown ar1 mode '" + mode + "'");
    m.fixed_mu = detail::get_or(j, "mu", 0.0);
    m.fixed_sigma = detail::get_or(j, "sigma", 1.0);
    if (!(m.fixed_sigma > 0.0)) throw contract_error("ar1 sigma must be positive");
    return m;
  }
  throw contract_error("unknown model family '" + fam + "'");
}

/// {"n": 50} for the unit grid or {"times": [0, ...]}.
inline TimeGrid parse_grid(const json& j) {
  if (j.is_number_integer()) return TimeGrid::unit(j.get<std::size_t>());
  if (j.contains("times")) return TimeGrid(j.at("times").get<std::vector<double>>());
  if (j.contains("n")) {
    const auto n = j.at("n").get<long long>();
    if (n < 1) throw contract_error("grid n must be >= 1");
    return TimeGrid::unit(static_cast<std::size_t>(n));
  }
  throw contract_error("grid needs \"n\" or \"times\"");
}

inline Contaminant parse_contaminant(const json& j) {
  const std::string kind = detail::lower(detail::get_or<std::string>(j, "kind", "point"));
  if (kind == "poisson") return PoissonRate{detail::get_or(j, "rate", PoissonRate{}.rate)};
  if (kind == "gaussian" || kind == "normal")
    return GaussianPoint{detail::get_or(j, "mean", GaussianPoint{}.mean), detail::get_or(j, "sd", GaussianPoint{}.sd)};
  if (kind == "point") return PointMass{detail::get_or(j, "r", 0.0)};
  throw contract_error("unknown contaminant kind '" + kind + "'");
}

inline FitConfig parse_fit(const json& j, FitConfig cfg = {}) {
  if (j.contains("alpha")) cfg.alpha = Alpha(j.at("alpha").get<double>());
  if (j.contains("initial_theta")) {
    const json& s = j.at("initial_theta");
    if (s.is_string() && detail::lower(s.get<std::string>()) == "auto") cfg.initial_theta.reset();
    else cfg.initial_theta = detail::parse_theta(s);
  }
  cfg.max_iterations = detail::get_or(j, "max_iterations", cfg.max_iterations);
  cfg.grad_tolerance = detail::get_or(j, "grad_tolerance", cfg.grad_tolerance);
  cfg.step_tolerance = detail::get_or(j, "step_tolerance", cfg.step_tolerance);
  cfg.multistart_count = detail::get_or(j, "multistart", cfg.multistart_count);
  cfg.coarse_scan = detail::get_or(j, "coarse_scan", cfg.coarse_scan);
  cfg.seed = detail::get_or<std::uint64_t>(j, "seed", cfg.seed);
  cfg.validate();
  return cfg;
}

/// A study description: the scenario plus the contamination levels to sweep.
struct StudySpec {
  ScenarioConfig scenario;
  std::vector<double> deltas{0.0};
};

inline StudySpec parse_study(const json& j) {
  if (!j.contains("model") || !j.contains("theta_true") || !j.contains("grid"))
    throw contract_error("scenario needs \"model\", \"theta_true\" and \"grid\"");
  StudySpec spec{ScenarioConfig{.family = parse_model(j.at("model")),
                                .theta_true = detail::parse_theta(j.at("theta_true")),
                                .grid = parse_grid(j.at("grid")),
                                .contamination = {},
                                .alphas = {0.0},
                                .replications = 100,
                                .master_seed = 0,
                                .fit = {}}};
  ScenarioConfig& sc = spec.scenario;
  if (j.contains("contamination")) {
    const json& c = j.at("contamination");
    if (c.contains("deltas")) spec.deltas = c.at("deltas").get<std::vector<double>>();
    else if (c.contains("delta")) spec.deltas = {c.at("delta").get<double>()};
    if (c.contains("contaminant")) sc.contamination.contaminant = parse_contaminant(c.at("contaminant"));
    if (c.contains("index")) sc.contamination.single_index = c.at("index").get<std::size_t>();
    const std::string mode = detail::lower(detail::get_or<std::string>(c, "ar1_mode", "replace"));
    if (mode == "replace") sc.contamination.ar1_mode = Ar1Contamination::ReplaceObservation;
    else if (mode == "propagate") sc.contamination.ar1_mode = Ar1Contamination::Propagate;
    else throw contract_error("unknown ar1_mode '" + mode + "'");
  }
  if (spec.deltas.empty()) throw contract_error("at least one contamination level is required");
  sc.contamination.delta_percent = spec.deltas.front();
  sc.alphas = detail::get_or(j, "alphas", sc.alphas);
  sc.replications = detail::get_or(j, "replications", sc.replications);
  sc.master_seed = detail::get_or<std::uint64_t>(j, "seed", sc.master_seed);
  if (j.contains("fit")) sc.fit = parse_fit(j.at("fit"));
  const std::string policy = detail::lower(detail::get_or<std::string>(j, "start_policy", "global_best"));
  if (policy == "global_best") sc.start_policy = StartPolicy::GlobalBest;
  else if (policy == "true_parameter") sc.start_policy = StartPolicy::TrueParameterLocal;
  else throw contract_error("unknown start_policy '" + policy + "'");
  for (double d : spec.deltas) {
    ContaminationSpec c = sc.contamination;
    c.delta_percent = d;
    c.validate();
  }
  sc.validate();
  return spec;
}

inline IFQuery parse_influence(const json& j) {
  if (!j.contains("model") || !j.contains("theta") || !j.contains("grid"))
    throw contract_error("influence config needs \"model\", \"theta\" and \"grid\"");
  IFQuery q{parse_model(j.at("model")), detail::parse_theta(j.at("theta")), parse_grid(j.at("grid")),
            detail::get_or(j, "alphas", std::vector<double>{0.0, 0.2, 0.4, 0.6, 0.8, 1.0}), {},
            ZetaMode::StandardCalpha};
  robust_sp::detail::check_theta(q.family, q.theta);
  if (j.contains("r_values")) q.r_values = j.at("r_values").get<std::vector<double>>();
  else q.r_values = default_r_grid(q.family, q.theta, q.grid);
  const std::string zeta = detail::lower(detail::get_or<std::string>(j, "zeta_mode", "standard"));
  if (zeta == "standard") q.zeta_mode = ZetaMode::StandardCalpha;
  else if (zeta == "paper_literal" || zeta == "printed") q.zeta_mode = ZetaMode::PaperLiteral;
  else throw contract_error("unknown zeta_mode '" + zeta + "'");
  return q;
}

inline MotivatingConfig parse_motivating(const json& j) {
  MotivatingConfig m;
  if (j.contains("model")) m.family = parse_model(j.at("model"));
  if (j.contains("theta_true")) m.theta_true = detail::parse_theta(j.at("theta_true"));
  if (j.contains("grid")) m.grid = parse_grid(j.at("grid"));
  m.index = detail::get_or(j, "index", m.index);
  m.r_grid = detail::get_or(j, "r_values", m.r_grid);
  m.p_grid = detail::get_or(j, "p_values", m.p_grid);
  m.replications = detail::get_or(j, "replications", m.replications);
  m.seed = detail::get_or<std::uint64_t>(j, "seed", m.seed);
  robust_sp::detail::check_theta(m.family, m.theta_true);
  return m;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw contract_error("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw contract_error("malformed JSON in '" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  return out;
}

}  // namespace detail

/// IIP: `t_prev,t,y`; MP: `t,x` with the first row at t = 0.
inline void write_data_csv(std::ostream& os, const Sample& s) {
  const TimeGrid& g = s.grid;
  if (s.family.regime() == Regime::IIP) {
    os << "t_prev,t,y\n";
    for (std::size_t i = 1; i <= s.n(); ++i) os << num(g[i - 1]) << ',' << num(g[i]) << ',' << num(s.data[i - 1]) << '\n';
    return;
  }
  os << "t,x\n";
  for (std::size_t i = 0; i <= s.n(); ++i) os << num(g[i]) << ',' << num(s.data[i]) << '\n';
}

inline Sample read_data_csv(std::istream& is, const ModelFamily& family) {
  std::string line;
  if (!std::getline(is, line)) throw contract_error("empty data file");
  const auto header = detail::split_csv_line(line);
  const bool iip = family.regime() == Regime::IIP;
  const std::vector<std::string> want = iip ? std::vector<std::string>{"t_prev", "t", "y"}
                                            : std::vector<std::string>{"t", "x"};
  if (header != want)
    throw contract_error(std::string("data header must be '") + (iip ? "t_prev,t,y" : "t,x") + "'");
  std::vector<double> times;
  std::vector<double> values;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != want.size()) throw contract_error("data row " + std::to_string(row) + " has the wrong width");
    if (iip) {
      const double t0 = parse_num(cells[0]);
      if (times.empty()) times.push_back(t0);
      else if (t0 != times.back())
        throw contract_error("data row " + std::to_string(row) + ": t_prev does not match the previous t");
      times.push_back(parse_num(cells[1]));
      values.push_back(parse_num(cells[2]));
    } else {
      times.push_back(parse_num(cells[0]));
      values.push_back(parse_num(cells[1]));
    }
  }
  return Sample(family, TimeGrid(std::move(times)), std::move(values));
}

inline void write_study_csv(std::ostream& os, const MonteCarloReport& report) {
  os << "delta,alpha,param,mean,mse,variance,n_converged,n_failed\n";
  for (const auto& c : report.cells) {
    for (Eigen::Index j = 0; j < c.mean_estimate.size(); ++j) {
      os << num(c.delta) << ',' << num(c.alpha) << ',' << (j + 1) << ',' << num(c.mean_estimate[j]) << ','
         << num(c.mse[j]) << ',' << num(c.variance[j]) << ',' << c.n_converged << ',' << c.n_failed << '\n';
    }
  }
}

inline void write_replicates_csv(std::ostream& os, const MonteCarloReport& report) {
  const Eigen::Index p = report.theta_true.size();
  os << "delta,alpha,replicate,converged";
  for (Eigen::Index j = 0; j < p; ++j) os << ",theta_" << (j + 1);
  os << '\n';
  for (const auto& c : report.cells) {
    for (Eigen::Index r = 0; r < c.replicate_estimates.rows(); ++r) {
      os << num(c.delta) << ',' << num(c.alpha) << ',' << r << ',' << (c.converged[static_cast<std::size_t>(r)] ? 1 : 0);
      for (Eigen::Index j = 0; j < p; ++j) os << ',' << num(c.replicate_estimates(r, j));
      os << '\n';
    }
  }
}

inline void write_influence_csv(std::ostream& os, const IFCurve& curve) {
  const Eigen::Index p = curve.values.empty() || curve.values.front().empty() ? 0 : curve.values.front().front().size();
  os << "alpha,r";
  for (Eigen::Index j = 0; j < p; ++j) os << ",if_" << (j + 1);
  os << ",abs_if\n";
  for (std::size_t a = 0; a < curve.alphas.size(); ++a) {
    for (std::size_t k = 0; k < curve.r_values.size(); ++k) {
      const Vector& v = curve.values[a][k];
      os << num(curve.alphas[a]) << ',' << num(curve.r_values[k]);
      for (Eigen::Index j = 0; j < p; ++j) os << ',' << num(v[j]);
      os << ',' << num(v.lpNorm<Eigen::Infinity>()) << '\n';
    }
  }
}

inline void write_motivating_csv(std::ostream& os, const std::vector<BiasPoint>& pts) {
  os << "p,r,param,mean,bias,n_converged\n";
  for (const auto& b : pts)
    for (Eigen::Index j = 0; j < b.bias.size(); ++j)
      os << num(b.p_cont) << ',' << num(b.r) << ',' << (j + 1) << ',' << num(b.mean_estimate[j]) << ','
         << num(b.bias[j]) << ',' << b.n_converged << '\n';
}

// ---------------------------------------------------------------------------
// JSON results

inline json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v[k]);
  return out;
}

/// Row-major nested arrays.
inline json to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

inline json to_json(const FitResult& f, double alpha) {
  return json{{"alpha", alpha},
              {"theta_hat", to_json(Vector(f.theta_hat))},
              {"objective", f.objective_value},
              {"grad_inf_norm", f.grad_inf_norm},
              {"iterations", f.iterations},
              {"converged", f.converged},
              {"start_used", f.start_used}};
}

inline json to_json(const AsymptoticMatrices& m) {
  return json{{"n", m.n}, {"psi_n", to_json(m.psi_n)}, {"omega_n", to_json(m.omega_n)}, {"sandwich", to_json(m.sandwich)}};
}

// ---------------------------------------------------------------------------
// SVG

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline const char* palette(std::size_t k) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  return colors[k % 8];
}

struct Frame {
  double x0, x1, y0, y1;
  double w = 640, h = 420, left = 70, right = 130, top = 40, bottom = 50;
  [[nodiscard]] double px(double x) const { return left + (x - x0) / (x1 - x0) * (w - left - right); }
  [[nodiscard]] double py(double y) const { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); }
};

inline void pad_range(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
    return;
  }
  const double m = 0.05 * (hi - lo);
  lo -= m;
  hi += m;
}

inline void axes(std::ostream& os, const Frame& f, const std::string& title, const std::string& xlabel,
                 const std::string& ylabel) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.w << "\" height=\"" << f.h
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << f.w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n"
     << "<line x1=\"" << f.left << "\" y1=\"" << f.py(f.y0) << "\" x2=\"" << f.px(f.x1) << "\" y2=\"" << f.py(f.y0)
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << f.left << "\" y1=\"" << f.py(f.y0) << "\" x2=\"" << f.left << "\" y2=\"" << f.py(f.y1)
     << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = f.x0 + (f.x1 - f.x0) * k / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * k / 4.0;
    char bx[32];
    char by[32];
    std::snprintf(bx, sizeof bx, "%.3g", xv);
    std::snprintf(by, sizeof by, "%.3g", yv);
    os << "<text x=\"" << f.px(xv) << "\" y=\"" << f.py(f.y0) + 16 << "\" text-anchor=\"middle\">" << bx << "</text>\n"
       << "<text x=\"" << f.left - 6 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\">" << by << "</text>\n";
  }
  os << "<text x=\"" << (f.left + f.px(f.x1)) / 2 << "\" y=\"" << f.h - 10 << "\" text-anchor=\"middle\">" << xlabel
     << "</text>\n"
     << "<text x=\"16\" y=\"" << f.h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << f.h / 2 << ")\">"
     << ylabel << "</text>\n";
}

}  // namespace detail

inline void write_line_plot(std::ostream& os, const std::vector<Series>& series, const std::string& title,
                            const std::string& xlabel, const std::string& ylabel) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double v : s.x) { x0 = std::min(x0, v); x1 = std::max(x1, v); }
    for (double v : s.y) if (std::isfinite(v)) { y0 = std::min(y0, v); y1 = std::max(y1, v); }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  detail::pad_range(y0, y1);
  if (!(x1 > x0)) detail::pad_range(x0, x1);
  const detail::Frame f{x0, x1, y0, y1};
  detail::axes(os, f, title, xlabel, ylabel);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    os << "<polyline fill=\"none\" stroke=\"" << detail::palette(k) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
      if (std::isfinite(s.y[i])) os << f.px(s.x[i]) << ',' << f.py(s.y[i]) << ' ';
    os << "\"/>\n";
    const double ly = f.top + 16.0 * static_cast<double>(k);
    os << "<line x1=\"" << f.w - f.right + 10 << "\" y1=\"" << ly << "\" x2=\"" << f.w - f.right + 30 << "\" y2=\"" << ly
       << "\" stroke=\"" << detail::palette(k) << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << f.w - f.right + 34 << "\" y=\"" << ly + 4 << "\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
}

struct BoxGroup {
  std::string label;
  std::vector<double> values;
};

/// Box: quartiles; whiskers: 1.5 IQR clipped to the data; no outlier marks.
inline void write_box_plot(std::ostream& os, const std::vector<BoxGroup>& groups, const std::string& title,
                           const std::string& ylabel, std::optional<double> reference = std::nullopt) {
  auto quantile = [](std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
  for (const auto& g : groups)
    for (double v : g.values) if (std::isfinite(v)) { y0 = std::min(y0, v); y1 = std::max(y1, v); }
  if (reference) { y0 = std::min(y0, *reference); y1 = std::max(y1, *reference); }
  if (!std::isfinite(y0)) y0 = 0, y1 = 1;
  detail::pad_range(y0, y1);
  const double count = static_cast<double>(std::max<std::size_t>(groups.size(), 1));
  detail::Frame f{0.0, count, y0, y1};
  f.right = 20;
  detail::axes(os, f, title, "", ylabel);
  if (reference)
    os << "<line x1=\"" << f.left << "\" y1=\"" << f.py(*reference) << "\" x2=\"" << f.px(count) << "\" y2=\""
       << f.py(*reference) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  for (std::size_t k = 0; k < groups.size(); ++k) {
    std::vector<double> v;
    for (double x : groups[k].values) if (std::isfinite(x)) v.push_back(x);
    const double c = static_cast<double>(k) + 0.5;
    os << "<text x=\"" << f.px(c) << "\" y=\"" << f.py(y0) + 32 << "\" text-anchor=\"middle\">" << groups[k].label
       << "</text>\n";
    if (v.empty()) continue;
    const double q1 = quantile(v, 0.25), q2 = quantile(v, 0.5), q3 = quantile(v, 0.75);
    const double iqr = q3 - q1;
    double lo = q1, hi = q3;
    for (double x : v) {
      if (x >= q1 - 1.5 * iqr) lo = std::min(lo, x);
      if (x <= q3 + 1.5 * iqr) hi = std::max(hi, x);
    }
    const double half = 0.3 * (f.px(1.0) - f.px(0.0));
    os << "<line x1=\"" << f.px(c) << "\" y1=\"" << f.py(lo) << "\" x2=\"" << f.px(c) << "\" y2=\"" << f.py(hi)
       << "\" stroke=\"black\"/>\n"
       << "<rect x=\"" << f.px(c) - half << "\" y=\"" << f.py(q3) << "\" width=\"" << 2 * half << "\" height=\""
       << std::max(f.py(q1) - f.py(q3), 0.5) << "\" fill=\"" << detail::palette(k) << "\" fill-opacity=\"0.4\" stroke=\"black\"/>\n"
       << "<line x1=\"" << f.px(c) - half << "\" y1=\"" << f.py(q2) << "\" x2=\"" << f.px(c) + half << "\" y2=\""
       << f.py(q2) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }
  os << "</svg>\n";
}

}  // namespace robust_sp::io
