#pragma once

#include "config.hpp"
#include "report.hpp"

#include "segmarket/baseline.hpp"
#include "segmarket/groups.hpp"
#include "segmarket/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace segmarket::cli {

struct CommandOptions {
  bool oracle = false;
  bool prop6 = false;
  bool quota = false;
  std::optional<std::uint64_t> seed{};
  std::optional<double> tol{};  // overrides solver.inclusion_tol
  std::string figure_id{};    // overrides figure.id
};

namespace detail {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

inline SolverOptions solver_options(const RunConfig& cfg, const CommandOptions& o) {
  auto s = cfg.solver_options();
  if (o.tol) s.inclusion_tol = *o.tol;
  return s;
}

inline long long count(std::size_t n) { return static_cast<long long>(n); }

inline std::vector<double> unit_grid(std::size_t points, double lo, double hi) {
  std::vector<double> g;
  const std::size_t n = std::max<std::size_t>(points, 2);
  for (std::size_t i = 0; i < n; ++i)
    g.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  return g;
}

}  // namespace detail

inline Report cmd_bounds(const RunConfig& cfg) {
  const Model m = cfg.model();
  const Bounds b = compute_bounds(m);
  Report r;
  r.command = "bounds";
  r.add("pi_low", b.pi_low);
  r.add("pi_high", b.pi_high);
  r.add("W_q", m.values.W_q);
  r.add("W_u", m.values.W_u);
  r.add("W_l", m.values.W_l);
  r.add("V_star", m.values.V_star);
  r.add("Q_star", m.values.Q_star);
  r.add("entry_viable_pi_low", entry_viable(m, b.pi_low));
  r.add("entry_viable_pi_high", entry_viable(m, b.pi_high));
  r.add("entry_viable_psi", entry_viable(m, m.params.psi));
  return r;
}

inline Report cmd_solve(const RunConfig& cfg, const CommandOptions& o) {
  using detail::nan;
  const Model m = cfg.model();
  const auto set = find_all_equilibria(m, detail::solver_options(cfg, o));
  Report r;
  r.command = "solve";
  r.add("pi_low", set.bounds.pi_low);
  r.add("pi_high", set.bounds.pi_high);
  r.add("Q_star", set.Q_star);
  r.add("equilibria", detail::count(set.equilibria.size()));
  r.add("rejected", detail::count(set.rejected.size()));

  std::vector<std::string> cols{"kind", "pi", "alpha", "p", "Q_gap", "residual", "knife_edge",
                                "duplicate"};
  if (o.oracle) {
    cols.push_back("oracle_pi");
    cols.push_back("oracle_error");
  }
  auto& eq = r.table("equilibria", cols);
  for (const auto& e : set.equilibria) {
    std::vector<Cell> row{std::string(to_string(e.kind)), e.pi, e.alpha, e.p,
                          e.diagnostics.Q_gap, e.diagnostics.residual, e.knife_edge, e.duplicate};
    if (o.oracle) {
      double opi = nan;
      try {
        opi = flow_oracle(oracle_policy(m, e.pi, e.alpha, e.p), m, cfg.solver.oracle_tol).pi;
      } catch (const NonConvergence&) {
      }
      row.push_back(opi);
      row.push_back(std::abs(opi - e.pi));
    }
    eq.rows.push_back(std::move(row));
  }
  auto& rej = r.table("rejected", {"kind", "pi", "alpha", "p", "Q_gap", "reason"});
  for (const auto& c : set.rejected)
    rej.rows.push_back({std::string(to_string(c.kind)), c.pi, c.alpha, c.p, c.Q_gap, c.reason});
  if (!set.warnings.empty()) {
    auto& warn = r.table("warnings", {"message"});
    for (const auto& w : set.warnings) warn.rows.push_back({w});
  }
  return r;
}

namespace detail {

inline std::vector<std::string> group_columns(bool oracle) {
  std::vector<std::string> c{"solver", "kind", "baseline_kind", "pi_f", "pi_m", "alpha_f",
                             "alpha_m", "p", "lambda_f", "lambda_m", "residual_f", "residual_m",
                             "entry_residual", "Q_gap_f", "Q_gap_m"};
  if (oracle) {
    c.push_back("oracle_pi_f");
    c.push_back("oracle_pi_m");
    c.push_back("oracle_error");
  }
  return c;
}

inline std::vector<Cell> group_row(const Model& m, const std::string& solver,
                                   const GroupEquilibrium& e, bool oracle, double tol) {
  std::vector<Cell> row{solver,
                        std::string(to_string(e.kind)),
                        std::string(e.baseline_kind ? to_string(*e.baseline_kind) : ""),
                        e.pi_f, e.pi_m, e.alpha_f, e.alpha_m, e.p, e.lambda_f, e.lambda_m,
                        e.diagnostics.residual_f, e.diagnostics.residual_m,
                        e.diagnostics.entry_residual, e.diagnostics.Q_gap_f,
                        e.diagnostics.Q_gap_m};
  if (oracle) {
    double f = nan, g = nan;
    try {
      const auto res = group_flow_oracle(oracle_policy(m, e), m, tol);
      f = res.pi_f;
      g = res.pi_m;
    } catch (const NonConvergence&) {
    }
    row.push_back(f);
    row.push_back(g);
    row.push_back(std::max(std::abs(f - e.pi_f), std::abs(g - e.pi_m)));
  }
  return row;
}

}  // namespace detail

inline Report cmd_groups(const RunConfig& cfg, const CommandOptions& o) {
  const Model m = cfg.model();
  const auto so = detail::solver_options(cfg, o);
  const auto go = cfg.group_options();
  Report r;
  r.command = "groups";
  r.add("lambda_f", m.params.lambda_f);
  r.add("lambda_m", m.params.lambda_m);
  r.add("Q_star", m.values.Q_star);

  const auto sym = lift_symmetric(m, so);
  const std::pair<const char*, GroupSolveResult> solved[] = {
      {"fem_mixed", solve_asym_fem_mixed(m, go)},
      {"male_mixed", solve_asym_male_mixed(m, go)},
      {"pure", solve_asym_pure(m, go)},
      {"high_only", solve_asym_high_only(m, go)},
  };
  auto& eq = r.table("equilibria", detail::group_columns(o.oracle));
  std::size_t asym = 0;
  for (const auto& e : sym)
    eq.rows.push_back(detail::group_row(m, "symmetric", e, o.oracle, cfg.solver.oracle_tol));
  for (const auto& [name, res] : solved) {
    asym += res.equilibria.size();
    for (const auto& e : res.equilibria)
      eq.rows.push_back(detail::group_row(m, name, e, o.oracle, cfg.solver.oracle_tol));
  }
  r.add("symmetric", detail::count(sym.size()));
  r.add("asymmetric", detail::count(asym));

  auto cols = detail::group_columns(false);
  cols.push_back("reason");
  auto& rej = r.table("rejected", cols);
  for (const auto& [name, res] : solved)
    for (const auto& c : res.rejected) {
      auto row = detail::group_row(m, name, c.candidate, false, 0.0);
      row.push_back(c.reason);
      rej.rows.push_back(std::move(row));
    }
  if (solved[1].second.min_pAq_f) r.add("male_mixed_min_pAq_f", *solved[1].second.min_pAq_f);

  if (o.prop6) {
    const auto p6 = prop6_sweep(m, {}, so);
    r.add("prop6_pi_star", p6.pi_star);
    r.add("prop6_p_star", p6.p_star);
    r.add("prop6_valid_rows", detail::count(p6.valid_count));
    r.add("prop6_lambda_m_increasing", p6.lambda_m_increasing);
    auto& t = r.table("prop6", {"p", "pi_f", "pi_m", "lambda_f", "lambda_m", "valid"});
    for (const auto& row : p6.rows)
      t.rows.push_back({row.p, row.pi_f, row.pi_m, row.lambda_f, row.lambda_m, row.valid});
  }

  if (o.quota) {
    QuotaOptions qo;
    qo.mode = cfg.solver.quota_mode;
    const auto q = quota_check(m, qo, go);
    r.add("quota_mode", std::string(to_string(q.mode)));
    r.add("quota_asymmetric_survivors", detail::count(q.asymmetric_survivors.size()));
    r.add("quota_unconstrained_asymmetric", detail::count(q.unconstrained_asymmetric));
    r.add("quota_constrained_solutions", detail::count(q.constrained_solutions.size()));
    auto& t = r.table("quota_constrained", detail::group_columns(false));
    for (const auto& e : q.constrained_solutions)
      t.rows.push_back(detail::group_row(m, "quota", e, false, 0.0));
  }
  return r;
}

// G as a function of π alone: α = 1, p = 0 below π̲; α(π), p = Q*/A_q(π) between the
// bounds; p = 1 above π̄.
inline double g0_piecewise(const Model& m, const Bounds& b, double pi) {
  if (pi < b.pi_low) return g_function(m, pi, 1.0, 0.0);
  if (pi > b.pi_high) return g_function(m, pi, 0.0, 1.0);
  const double aq = m.A_q(pi);
  const double p = aq > 0.0 ? m.values.Q_star / aq : detail::nan;
  if (!(p <= 1.0)) return detail::nan;
  return g_function(m, pi, alpha_indifference(m, b, pi), p);
}

inline Report cmd_figure(const RunConfig& cfg, const CommandOptions& o) {
  const std::string id = o.figure_id.empty() ? cfg.figure.id : o.figure_id;
  const std::size_t n = std::max<std::size_t>(cfg.figure.points, 2);
  const Model m = cfg.model();
  Report r;
  r.command = "figure";

  if (id == "G0") {
    const Bounds b = compute_bounds(m);
    auto grid = detail::unit_grid(n, 0.0, 1.0 - 1e-6);
    grid.push_back(b.pi_low);
    grid.push_back(b.pi_high);
    std::sort(grid.begin(), grid.end());
    auto& t = r.table("G0", {"pi", "G0", "segment"});
    for (double pi : grid) {
      const char* seg = pi < b.pi_low ? "low" : pi > b.pi_high ? "high" : "mixed";
      t.rows.push_back({pi, g0_piecewise(m, b, pi), std::string(seg)});
    }
  } else if (id == "G1-low" || id == "G1-high") {
    const Bounds b = compute_bounds(m);
    const bool low = id == "G1-low";
    const double pi = low ? b.pi_low : b.pi_high;
    const double alpha = low ? 0.0 : 1.0;
    auto& t = r.table(id, {"p", "G"});
    for (double p : detail::unit_grid(n, 0.0, 1.0)) t.rows.push_back({p, g_function(m, pi, alpha, p)});
  } else if (id == "disc") {
    // Steady-state loci for group m (rejects low-tech offers) and group f (mixes), with
    // p = Q*/A_q(π^f); crossings are the candidate discriminatory equilibria.
    const double Q = m.values.Q_star, W_l = m.values.W_l;
    const double lf = m.params.lambda_f, lm = m.params.lambda_m;
    auto& t = r.table("disc", {"curve", "pi_f", "pi_m"});
    for (double pf : detail::unit_grid(n, 1.0 / static_cast<double>(n), 1.0 - 1.0 / static_cast<double>(n))) {
      const double aq = m.A_q(pf);
      const double p = aq > 0.0 ? Q / aq : detail::nan;
      if (!(p <= 1.0)) continue;
      for (double pm : roots::scan_roots([&](double x) { return g_function(m, x, 0.0, p); }, 0.0,
                                         1.0 - 1e-9, cfg.solver.inner_grid))
        t.rows.push_back({std::string("male"), pf, pm});
      auto alpha_f = [&](double pm) {
        return (lf * m.profit(pf) + lm * m.profit(pm) - lm * (1.0 - pm) * W_l -
                lf * (1.0 - pf) * W_l) /
               (lf * pf * W_l);
      };
      for (double pm : roots::scan_roots(
               [&](double x) { return g_function(m, pf, alpha_f(x), p); }, 0.0, 1.0 - 1e-9,
               cfg.solver.inner_grid))
        t.rows.push_back({std::string("female"), pf, pm});
    }
    const auto res = solve_asym_fem_mixed(m, cfg.group_options());
    for (const auto& e : res.equilibria) t.rows.push_back({std::string("equilibrium"), e.pi_f, e.pi_m});
    for (const auto& c : res.rejected)
      t.rows.push_back({std::string("crossing"), c.candidate.pi_f, c.candidate.pi_m});
  } else if (id == "lambda") {
    const auto p6 = prop6_sweep(m, {}, detail::solver_options(cfg, o));
    auto& t = r.table("lambda", {"p", "pi_f", "pi_m", "lambda_f", "lambda_m", "valid"});
    for (const auto& row : p6.rows)
      t.rows.push_back({row.p, row.pi_f, row.pi_m, row.lambda_f, row.lambda_m, row.valid});
  } else {
    throw ConfigError("unknown figure id '" + id + "' (expected G0, G1-low, G1-high, disc, lambda)");
  }
  return r;
}

namespace detail {

inline Policy simulation_policy(const RunConfig& cfg, const Model& m, Report& r) {
  const auto& s = cfg.sim;
  if (s.p || s.alpha || s.s) {
    if (!s.p || !s.alpha) throw ConfigError("sim.p and sim.alpha must be given together");
    if (*s.p < 0.0 || *s.p > 1.0 || *s.alpha < 0.0 || *s.alpha > 1.0)
      throw ConfigError("sim.p and sim.alpha must lie in [0,1]");
    r.add("policy_source", std::string("config"));
    if (s.s) return {*s.p, *s.alpha, ThresholdMode::Fixed, *s.s};
    return {*s.p, *s.alpha, ThresholdMode::Adaptive, 0.0};
  }
  const auto set = find_all_equilibria(m, cfg.solver_options());
  if (s.equilibrium >= set.equilibria.size())
    throw ConfigError("sim.equilibrium index out of range");
  const auto& e = set.equilibria[s.equilibrium];
  r.add("policy_source", std::string(to_string(e.kind)));
  r.add("equilibrium_pi", e.pi);
  return oracle_policy(m, e.pi, e.alpha, e.p);
}

}  // namespace detail

inline Report cmd_simulate(const RunConfig& cfg, const CommandOptions& o) {
  const Model m = cfg.model();
  const auto& s = cfg.sim;
  Report r;
  r.command = "simulate";
  r.add("mode", s.mode);

  if (s.mode == "fragility") {
    FragilityOptions fo;
    fo.periods = s.periods;
    fo.kappa = s.kappa;
    const auto f = fragility_experiment(m, s.epsilon, fo);
    r.add("epsilon", f.epsilon);
    r.add("pi_star", f.pi_star);
    r.add("initial_gap", f.initial_gap);
    r.add("final_gap", f.final_gap);
    r.add("max_abs_gap", f.max_abs_gap);
    r.add("max_drift", f.max_drift);
    r.add("ends_symmetric", f.ends_symmetric);
    r.add("outcome", std::string(to_string(f.outcome)));
    auto& t = r.table("series", {"period", "pi_f", "pi_m", "alpha_f", "alpha_m", "p"});
    for (const auto& pt : f.series)
      t.rows.push_back({static_cast<long long>(pt.t), pt.pi_f, pt.pi_m, pt.alpha_f, pt.alpha_m, pt.p});
    return r;
  }

  const Policy pol = detail::simulation_policy(cfg, m, r);
  r.add("p", pol.p);
  r.add("alpha", pol.alpha);
  r.add("threshold", std::string(pol.mode == ThresholdMode::Fixed ? "fixed" : "adaptive"));
  if (pol.mode == ThresholdMode::Fixed) r.add("s", pol.s);

  if (s.mode == "flow") {
    auto& t = r.table("series", {"period", "pi", "U_q", "U_u", "E_qh", "E_ql", "E_uh", "E_ul"});
    FlowState st = all_unemployed(m.params);
    for (std::size_t k = 1; k <= s.periods; ++k) {
      st = flow_step(st, pol, m);
      t.rows.push_back({static_cast<long long>(k), st.pi(), st.U_q, st.U_u, st.E_qh, st.E_ql,
                        st.E_uh, st.E_ul});
    }
    r.add("pi_final", st.pi());
    return r;
  }

  const std::uint64_t seed = o.seed ? *o.seed : s.seed;
  const auto mc = monte_carlo_run(s.n_agents, s.periods, seed, pol, m);
  r.add("n_agents", detail::count(s.n_agents));
  r.add("periods", detail::count(s.periods));
  r.add("seed", static_cast<long long>(seed));
  r.add("pi_final_mean", mc.pi_final_mean);
  r.add("pi_final_sd", mc.pi_final_sd);
  if (pol.mode == ThresholdMode::Fixed) {
    try {
      r.add("oracle_pi", flow_oracle(pol, m, cfg.solver.oracle_tol).pi);
    } catch (const NonConvergence&) {
      r.add("oracle_pi", detail::nan);
    }
  }
  auto& t = r.table("series", {"period", "pi"});
  for (std::size_t k = 0; k < mc.pi_series.size(); ++k)
    t.rows.push_back({static_cast<long long>(k + 1), mc.pi_series[k]});
  return r;
}

namespace detail {

// Applies one swept value. Calibrated configs re-derive w_h and y_h so W_q = 1, W_u = -1 hold.
inline ModelParams with_param(const RunConfig& cfg, const std::string& name, double v) {
  ModelParams p = cfg.params;
  if (name == "beta") p.beta = v;
  else if (name == "phi") p.phi = v;
  else if (name == "r") p.r = v;
  else if (name == "psi") p.psi = v;
  else if (name == "b") p.b = v;
  else if (name == "y_l") p.y_l = v;
  else if (name == "w_l") p.w_l = v;
  else if (name == "w_h" && !cfg.calibrated) p.w_h = v;
  else if (name == "y_h" && !cfg.calibrated) p.y_h = v;
  else if (name == "K") p.K = v;
  else if (name == "lambda_m") {
    p.lambda_m = v;
    p.lambda_f = 1.0 - v;
  } else
    throw ConfigError("sweep.param '" + name + "' cannot be swept");
  if (cfg.calibrated) {
    p.w_h = 1.0 - p.beta * (1.0 - p.phi) * (1.0 - p.r);
    p.y_h = p.w_h + (1.0 - p.beta * (1.0 - p.phi));
  }
  return p;
}

}  // namespace detail

inline Report cmd_sweep(const RunConfig& cfg, const CommandOptions& o) {
  using detail::nan;
  if (cfg.sweep.values.empty()) throw ConfigError("sweep needs sweep.values or sweep.from/to/steps");
  const auto so = detail::solver_options(cfg, o);
  const SignalModel signal = cfg.make_signal();
  Report r;
  r.command = "sweep";
  r.add("param", cfg.sweep.param);
  auto& t = r.table("sweep", {cfg.sweep.param, "status", "equilibria", "kinds", "pi_low",
                              "pi_high", "Q_star"});
  for (double v : cfg.sweep.values) {
    const ModelParams p = detail::with_param(cfg, cfg.sweep.param, v);
    try {
      const Model m = make_model(p, signal);
      const auto set = find_all_equilibria(m, so);
      std::string kinds;
      for (const auto& e : set.equilibria) kinds += (kinds.empty() ? "" : ";") + std::string(to_string(e.kind));
      t.rows.push_back({v, std::string("ok"), detail::count(set.equilibria.size()), kinds,
                        set.bounds.pi_low, set.bounds.pi_high, set.Q_star});
    } catch (const InternalInconsistency&) {
      throw;
    } catch (const Error& e) {
      t.rows.push_back({v, std::string(e.what()), 0LL, std::string(), nan, nan, nan});
    }
  }
  return r;
}

}  // namespace segmarket::cli
