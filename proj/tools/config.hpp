#pragma once

#include "segmarket/baseline.hpp"
#include "segmarket/groups.hpp"
#include "segmarket/signal.hpp"
#include "segmarket/simulator.hpp"
#include "segmarket/valuation.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace segmarket::cli {

using nlohmann::json;

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct SignalSpec {
  std::string kind = "triangular";
  double k = 1.0;
  std::vector<double> theta, f_q, f_u;
};

struct SolverConfig {
  std::size_t scan_intervals = 10000;
  double inclusion_tol = 1e-9;
  std::size_t outer_grid = 400;
  std::size_t inner_grid = 400;
  QuotaMode quota_mode = QuotaMode::Flow;
  double oracle_tol = 1e-13;
};

struct SimConfig {
  std::string mode = "monte_carlo";  // monte_carlo | flow | fragility
  std::size_t n_agents = 10000;
  std::size_t periods = 1000;
  std::uint64_t seed = 1;
  std::size_t equilibrium = 0;  // index into the solved equilibrium list
  std::optional<double> p, alpha, s;
  double epsilon = 1e-3;
  double kappa = 0.05;
};

struct FigureConfig {
  std::string id;
  std::size_t points = 200;
};

struct SweepConfig {
  std::string param = "phi";
  std::vector<double> values;
};

struct RunConfig {
  ModelParams params;
  bool calibrated = false;
  SignalSpec signal;
  SolverConfig solver;
  SimConfig sim;
  FigureConfig figure;
  SweepConfig sweep;

  SignalModel make_signal() const {
    if (signal.kind == "triangular") return SignalModel::triangular();
    if (signal.kind == "power") return SignalModel::power(signal.k);
    return SignalModel::tabulated(signal.theta, signal.f_q, signal.f_u);
  }
  Model model() const { return make_model(params, make_signal()); }
  SolverOptions solver_options() const {
    SolverOptions o;
    o.scan_intervals = solver.scan_intervals;
    o.inclusion_tol = solver.inclusion_tol;
    return o;
  }
  GroupOptions group_options() const {
    GroupOptions o;
    o.outer_grid = solver.outer_grid;
    o.inner_grid = solver.inner_grid;
    return o;
  }
};

namespace detail {

inline void check_keys(const json& obj, const std::string& where,
                       const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + where + "." + key + "'");
}

template <class T>
void read(const json& obj, const std::string& where, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + where + "." + key + "'");
  }
}

template <class T>
void read(const json& obj, const std::string& where, const char* key, std::optional<T>& out) {
  if (!obj.contains(key)) return;
  T v{};
  read(obj, where, key, v);
  out = v;
}

inline double need(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) throw ConfigError("missing key '" + where + "." + key + "'");
  double v = 0.0;
  read(obj, where, key, v);
  return v;
}

}  // namespace detail

// Parses and validates a config document. Throws ConfigError (unknown keys, wrong types,
// inadmissible parameters) naming the offending key where possible.
inline RunConfig parse_config(const json& doc) {
  using detail::check_keys;
  using detail::read;
  RunConfig cfg;
  check_keys(doc, "config", {"params", "calibrate", "signal", "solver", "sim", "figure", "sweep"});
  if (doc.contains("params") == doc.contains("calibrate"))
    throw ConfigError("config needs exactly one of 'params' or 'calibrate'");

  if (doc.contains("params")) {
    const auto& p = doc.at("params");
    check_keys(p, "params", {"beta", "phi", "r", "psi", "b", "y_l", "w_l", "w_h", "y_h", "K",
                             "lambda_f", "lambda_m"});
    auto& m = cfg.params;
    for (auto [key, ptr] : std::initializer_list<std::pair<const char*, double*>>{
             {"beta", &m.beta}, {"phi", &m.phi}, {"r", &m.r}, {"psi", &m.psi}, {"b", &m.b},
             {"y_l", &m.y_l}, {"w_l", &m.w_l}, {"w_h", &m.w_h}, {"y_h", &m.y_h}})
      *ptr = detail::need(p, "params", key);
    read(p, "params", "K", m.K);
    read(p, "params", "lambda_f", m.lambda_f);
    read(p, "params", "lambda_m", m.lambda_m);
  } else {
    const auto& c = doc.at("calibrate");
    check_keys(c, "calibrate", {"beta", "phi", "r", "psi", "b", "y_l", "w_l", "K", "lambda_f",
                                "lambda_m"});
    double K = 0.01, lf = 0.5, lm = 0.5;
    read(c, "calibrate", "K", K);
    read(c, "calibrate", "lambda_f", lf);
    read(c, "calibrate", "lambda_m", lm);
    try {
      cfg.params = calibrate_to_unit_values(
          detail::need(c, "calibrate", "beta"), detail::need(c, "calibrate", "phi"),
          detail::need(c, "calibrate", "r"), detail::need(c, "calibrate", "y_l"),
          detail::need(c, "calibrate", "w_l"), detail::need(c, "calibrate", "b"),
          detail::need(c, "calibrate", "psi"), K);
    } catch (const ParamDomain& e) {
      throw ConfigError(std::string("calibrate: ") + e.what());
    }
    cfg.params.lambda_f = lf;
    cfg.params.lambda_m = lm;
    cfg.calibrated = true;
  }
  try {
    derive_valuations(cfg.params);
  } catch (const ParamDomain& e) {
    throw ConfigError(std::string(cfg.calibrated ? "calibrate: " : "params: ") + e.what());
  }

  if (doc.contains("signal")) {
    const auto& s = doc.at("signal");
    check_keys(s, "signal", {"kind", "k", "theta", "f_q", "f_u"});
    read(s, "signal", "kind", cfg.signal.kind);
    read(s, "signal", "k", cfg.signal.k);
    read(s, "signal", "theta", cfg.signal.theta);
    read(s, "signal", "f_q", cfg.signal.f_q);
    read(s, "signal", "f_u", cfg.signal.f_u);
    if (cfg.signal.kind != "triangular" && cfg.signal.kind != "power" &&
        cfg.signal.kind != "tabulated")
      throw ConfigError("signal.kind must be triangular, power or tabulated");
    try {
      cfg.make_signal();
    } catch (const ParamDomain& e) {
      throw ConfigError(std::string("signal: ") + e.what());
    }
  }

  if (doc.contains("solver")) {
    const auto& s = doc.at("solver");
    check_keys(s, "solver", {"scan_intervals", "inclusion_tol", "outer_grid", "inner_grid",
                             "quota_mode", "oracle_tol"});
    read(s, "solver", "scan_intervals", cfg.solver.scan_intervals);
    read(s, "solver", "inclusion_tol", cfg.solver.inclusion_tol);
    read(s, "solver", "outer_grid", cfg.solver.outer_grid);
    read(s, "solver", "inner_grid", cfg.solver.inner_grid);
    read(s, "solver", "oracle_tol", cfg.solver.oracle_tol);
    std::string q = "flow";
    read(s, "solver", "quota_mode", q);
    if (q != "flow" && q != "stock") throw ConfigError("solver.quota_mode must be flow or stock");
    cfg.solver.quota_mode = q == "flow" ? QuotaMode::Flow : QuotaMode::Stock;
    if (cfg.solver.scan_intervals < 2 || cfg.solver.outer_grid < 2 || cfg.solver.inner_grid < 2)
      throw ConfigError("solver grids need at least 2 intervals");
  }

  if (doc.contains("sim")) {
    const auto& s = doc.at("sim");
    check_keys(s, "sim", {"mode", "n_agents", "periods", "seed", "equilibrium", "p", "alpha", "s",
                          "epsilon", "kappa"});
    read(s, "sim", "mode", cfg.sim.mode);
    read(s, "sim", "n_agents", cfg.sim.n_agents);
    read(s, "sim", "periods", cfg.sim.periods);
    read(s, "sim", "seed", cfg.sim.seed);
    read(s, "sim", "equilibrium", cfg.sim.equilibrium);
    read(s, "sim", "p", cfg.sim.p);
    read(s, "sim", "alpha", cfg.sim.alpha);
    read(s, "sim", "s", cfg.sim.s);
    read(s, "sim", "epsilon", cfg.sim.epsilon);
    read(s, "sim", "kappa", cfg.sim.kappa);
    if (cfg.sim.mode != "monte_carlo" && cfg.sim.mode != "flow" && cfg.sim.mode != "fragility")
      throw ConfigError("sim.mode must be monte_carlo, flow or fragility");
  }

  if (doc.contains("figure")) {
    const auto& f = doc.at("figure");
    check_keys(f, "figure", {"id", "points"});
    read(f, "figure", "id", cfg.figure.id);
    read(f, "figure", "points", cfg.figure.points);
  }

  if (doc.contains("sweep")) {
    const auto& w = doc.at("sweep");
    check_keys(w, "sweep", {"param", "values", "from", "to", "steps"});
    read(w, "sweep", "param", cfg.sweep.param);
    read(w, "sweep", "values", cfg.sweep.values);
    if (w.contains("from") || w.contains("to") || w.contains("steps")) {
      const double a = detail::need(w, "sweep", "from"), b = detail::need(w, "sweep", "to");
      std::size_t n = 0;
      read(w, "sweep", "steps", n);
      if (n < 2) throw ConfigError("sweep.steps must be at least 2");
      for (std::size_t i = 0; i < n; ++i)
        cfg.sweep.values.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

}  // namespace segmarket::cli
