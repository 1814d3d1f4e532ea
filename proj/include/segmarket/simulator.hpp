#pragma once

#include "segmarket/baseline.hpp"
#include "segmarket/errors.hpp"
#include "segmarket/groups.hpp"
#include "segmarket/signal.hpp"
#include "segmarket/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace segmarket {

// Population masses of one group, per capita. Qualified pools sum to ψ, unqualified to 1-ψ.
struct FlowState {
  double U_q = 0.0;
  double U_u = 0.0;
  double E_qh = 0.0;
  double E_ql = 0.0;
  double E_uh = 0.0;
  double E_ul = 0.0;

  double unemployed() const { return U_q + U_u; }
  double pi() const { return U_q / (U_q + U_u); }
  double qualified() const { return U_q + E_qh + E_ql; }
  double unqualified() const { return U_u + E_uh + E_ul; }
};

enum class ThresholdMode { Fixed, Adaptive };

struct Policy {
  double p = 0.0;
  double alpha = 1.0;
  ThresholdMode mode = ThresholdMode::Fixed;
  double s = 1.0;  // used in Fixed mode
};

// Oracle policy for a candidate steady state: the firm's cutoff frozen at s(π).
inline Policy oracle_policy(const Model& m, double pi, double alpha, double p) {
  return {p, alpha, ThresholdMode::Fixed, m.hire(pi).threshold.value};
}

inline FlowState all_unemployed(const ModelParams& prm) {
  FlowState s;
  s.U_q = prm.psi;
  s.U_u = 1.0 - prm.psi;
  return s;
}

// Stationary pools under fixed hire probabilities.
inline FlowState stationary_state(const ModelParams& prm, double A_q, double A_u, double p,
                                  double alpha) {
  const PoolState pool = stationary_pool(prm, A_q, A_u, p, alpha);
  const double delta = prm.phi + (1.0 - prm.phi) * prm.r;
  FlowState s;
  s.U_q = pool.U_q;
  s.U_u = pool.U_u;
  s.E_qh = pool.U_q * p * A_q / prm.phi;
  s.E_ql = pool.U_q * (1.0 - p) * alpha / prm.phi;
  s.E_uh = pool.U_u * p * A_u / delta;
  s.E_ul = pool.U_u * (1.0 - p) / prm.phi;
  return s;
}

inline HireProbabilities policy_rates(const Model& m, const FlowState& st, const Policy& pol) {
  if (pol.mode == ThresholdMode::Fixed) return hire_probabilities_at(m.signal, pol.s);
  const double pi = st.unemployed() > 0.0 ? st.pi() : m.params.psi;
  return m.hire(pi);
}

// One synchronous period: matching and hiring out of the unemployment pools, then separations
// (plus revelation firing of unqualified high-tech workers) out of the employment pools held at
// the start of the period.
inline FlowState flow_step(const FlowState& st, const Policy& pol, const Model& m) {
  const auto a = policy_rates(m, st, pol);
  const double phi = m.params.phi;
  const double delta = phi + (1.0 - phi) * m.params.r;
  const double hq = st.U_q * pol.p * a.A_q;
  const double lq = st.U_q * (1.0 - pol.p) * pol.alpha;
  const double hu = st.U_u * pol.p * a.A_u;
  const double lu = st.U_u * (1.0 - pol.p);
  const double sqh = st.E_qh * phi, sql = st.E_ql * phi;
  const double suh = st.E_uh * delta, sul = st.E_ul * phi;
  FlowState n;
  n.E_qh = st.E_qh - sqh + hq;
  n.E_ql = st.E_ql - sql + lq;
  n.E_uh = st.E_uh - suh + hu;
  n.E_ul = st.E_ul - sul + lu;
  // unemployment as the residual keeps each type's total mass exactly where it was
  n.U_q = st.U_q - hq - lq + sqh + sql;
  n.U_u = st.U_u - hu - lu + suh + sul;
  return n;
}

struct FlowOracleResult {
  double pi = 0.0;
  std::size_t iterations = 0;
  FlowState state;
};

namespace detail {
inline void check_oracle_args(double tol) {
  if (!(tol > 0.0)) throw PreconditionError("flow oracle needs tol > 0");
}

// Largest change in any stock. π alone can stall for a period while employment builds up.
inline double state_change(const FlowState& a, const FlowState& b) {
  return std::max({std::abs(a.U_q - b.U_q), std::abs(a.U_u - b.U_u), std::abs(a.E_qh - b.E_qh),
                   std::abs(a.E_ql - b.E_ql), std::abs(a.E_uh - b.E_uh), std::abs(a.E_ul - b.E_ul)});
}
}  // namespace detail

// Iterates flow_step from an all-unemployed population until no stock moves by tol or more.
inline FlowOracleResult flow_oracle(const Policy& pol, const Model& m, double tol = 1e-13,
                                    std::size_t max_iter = 1000000) {
  detail::check_oracle_args(tol);
  FlowState st = all_unemployed(m.params);
  double step = 0.0, prev_step = 0.0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const FlowState next = flow_step(st, pol, m);
    prev_step = step;
    step = detail::state_change(next, st);
    st = next;
    if (step < tol) return {st.pi(), it, st};
  }
  throw NonConvergence("flow oracle did not converge in " + std::to_string(max_iter) + " periods",
                       step, prev_step != 0.0 ? step / prev_step : 0.0);
}

struct GroupPolicy {
  double p = 0.0;
  double alpha_f = 1.0;
  double alpha_m = 1.0;
  ThresholdMode mode = ThresholdMode::Fixed;
  double s_f = 1.0;
  double s_m = 1.0;

  Policy f() const { return {p, alpha_f, mode, s_f}; }
  Policy m() const { return {p, alpha_m, mode, s_m}; }
};

inline GroupPolicy oracle_policy(const Model& m, const GroupEquilibrium& e) {
  return {e.p, e.alpha_f, e.alpha_m, ThresholdMode::Fixed, m.hire(e.pi_f).threshold.value,
          m.hire(e.pi_m).threshold.value};
}

struct GroupFlowOracleResult {
  double pi_f = 0.0;
  double pi_m = 0.0;
  std::size_t iterations = 0;
};

// Two-population version: both groups face the same p, each keeps its own cutoff and acceptance.
inline GroupFlowOracleResult group_flow_oracle(const GroupPolicy& pol, const Model& m,
                                               double tol = 1e-13,
                                               std::size_t max_iter = 1000000) {
  detail::check_oracle_args(tol);
  FlowState f = all_unemployed(m.params), g = f;
  double step = 0.0, prev_step = 0.0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const FlowState nf = flow_step(f, pol.f(), m), ng = flow_step(g, pol.m(), m);
    prev_step = step;
    step = std::max(detail::state_change(nf, f), detail::state_change(ng, g));
    f = nf;
    g = ng;
    if (step < tol) return {f.pi(), g.pi(), it};
  }
  throw NonConvergence("group flow oracle did not converge", step,
                       prev_step != 0.0 ? step / prev_step : 0.0);
}

struct MonteCarloResult {
  std::vector<double> pi_series;
  double pi_final_mean = 0.0;
  double pi_final_sd = 0.0;
};

// Finite-population simulation of the matching market. Every worker starts unemployed; the
// summary statistics use the last 20% of periods.
inline MonteCarloResult monte_carlo_run(std::size_t n_agents, std::size_t periods,
                                        std::uint64_t seed, const Policy& pol, const Model& m) {
  if (n_agents < 100) throw PreconditionError("Monte Carlo needs at least 100 agents");
  if (periods == 0) throw PreconditionError("Monte Carlo needs at least one period");
  enum : std::uint8_t { Unemployed, High, Low };
  std::mt19937_64 rng(seed);
  auto uniform = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  const double psi = m.params.psi;
  const double phi = m.params.phi;
  const double delta = phi + (1.0 - phi) * m.params.r;
  std::vector<std::uint8_t> qualified(n_agents), status(n_agents, Unemployed), next(n_agents);
  std::size_t uq = 0, uu = 0;
  for (std::size_t i = 0; i < n_agents; ++i) {
    qualified[i] = uniform() < psi ? 1 : 0;
    (qualified[i] ? uq : uu) += 1;
  }

  MonteCarloResult res;
  res.pi_series.reserve(periods);
  double pi_hat = (uq + uu) > 0 ? static_cast<double>(uq) / static_cast<double>(uq + uu) : psi;
  for (std::size_t t = 0; t < periods; ++t) {
    const double s = pol.mode == ThresholdMode::Fixed
                         ? pol.s
                         : hiring_threshold(m.signal, pi_hat, m.values.W_q, m.values.W_u).value;
    uq = uu = 0;
    for (std::size_t i = 0; i < n_agents; ++i) {
      const bool q = qualified[i] != 0;
      std::uint8_t st = status[i];
      if (st == Unemployed) {
        if (uniform() < pol.p) {
          const double theta = q ? m.signal.quantile_q(uniform()) : m.signal.quantile_u(uniform());
          if (theta >= s) st = High;
        } else if (!q || uniform() < pol.alpha) {
          st = Low;
        }
      } else {
        const double sep = (st == High && !q) ? delta : phi;
        if (uniform() < sep) st = Unemployed;
      }
      next[i] = st;
      if (st == Unemployed) (q ? uq : uu) += 1;
    }
    status.swap(next);
    if (uq + uu > 0) pi_hat = static_cast<double>(uq) / static_cast<double>(uq + uu);
    res.pi_series.push_back(pi_hat);
  }

  const std::size_t tail = std::max<std::size_t>(1, periods / 5);
  const auto first = res.pi_series.end() - static_cast<std::ptrdiff_t>(tail);
  double sum = 0.0;
  for (auto it = first; it != res.pi_series.end(); ++it) sum += *it;
  res.pi_final_mean = sum / static_cast<double>(tail);
  double ss = 0.0;
  for (auto it = first; it != res.pi_series.end(); ++it)
    ss += (*it - res.pi_final_mean) * (*it - res.pi_final_mean);
  res.pi_final_sd = tail > 1 ? std::sqrt(ss / static_cast<double>(tail - 1)) : 0.0;
  return res;
}

// Diverged: the groups separated by more than 10|ε| at some point. Returned: the gap shrank
// below |ε|/10 without ever separating. Persistent: neither.
enum class FragilityOutcome { Stationary, Diverged, Returned, Persistent };

inline const char* to_string(FragilityOutcome o) {
  switch (o) {
    case FragilityOutcome::Stationary: return "stationary";
    case FragilityOutcome::Diverged: return "diverged";
    case FragilityOutcome::Returned: return "returned";
    case FragilityOutcome::Persistent: return "persistent";
  }
  return "?";
}

struct FragilityOptions {
  std::size_t periods = 5000;
  double kappa = 0.05;       // entry adjustment speed: Δp = κ · (high - low value) / W_l
  double worker_tol = 1e-9;  // |p A_q - Q*| below this keeps the current acceptance
  std::size_t record_every = 10;
};

struct FragilityPoint {
  std::size_t t = 0;
  double pi_f = 0.0, pi_m = 0.0, alpha_f = 0.0, alpha_m = 0.0, p = 0.0;
};

struct FragilityResult {
  double epsilon = 0.0;
  double pi_star = 0.0;
  double initial_gap = 0.0;  // π^m - π^f after the perturbation
  double final_gap = 0.0;
  double max_abs_gap = 0.0;
  double max_drift = 0.0;  // largest deviation of either pool from π*
  bool ends_symmetric = false;  // |final gap| < 1e-9, possibly at a different steady state
  FragilityOutcome outcome = FragilityOutcome::Stationary;
  std::vector<FragilityPoint> series;
};

// Starts both groups at the symmetric mixed steady state, shifts group m's pool quality by
// epsilon, then lets cutoffs, acceptance decisions and entry respond period by period.
inline FragilityResult fragility_experiment(const Model& m, double epsilon,
                                            const FragilityOptions& opt = {}) {
  const auto set = find_all_equilibria(m);
  const auto it = std::find_if(set.equilibria.begin(), set.equilibria.end(), [](const auto& e) {
    return e.kind == EquilibriumKind::TwoSectorMixed;
  });
  if (it == set.equilibria.end())
    throw NoSymmetricMixed("fragility experiment needs a symmetric mixed equilibrium");

  const double Q = m.values.Q_star, W_l = m.values.W_l;
  const double lf = m.params.lambda_f, lm = m.params.lambda_m;
  const auto a0 = m.hire(it->pi);
  FlowState f = stationary_state(m.params, a0.A_q, a0.A_u, it->p, it->alpha);
  FlowState g = f;
  {
    // move εN qualified workers into unemployment and εN unqualified out of it
    const double shift = epsilon * g.unemployed();
    const double dq = std::clamp(shift, -g.U_q, g.E_ql);
    const double du = std::clamp(shift, -g.E_ul, g.U_u);
    g.U_q += dq;
    g.E_ql -= dq;
    g.U_u -= du;
    g.E_ul += du;
  }
  double p = it->p, af = it->alpha, am = it->alpha;

  FragilityResult res;
  res.epsilon = epsilon;
  res.pi_star = it->pi;
  res.initial_gap = g.pi() - f.pi();
  auto best_response = [&](double alpha, double pi) {
    const double gap = p * m.A_q(pi) - Q;
    if (gap > opt.worker_tol) return 0.0;
    if (gap < -opt.worker_tol) return 1.0;
    return alpha;
  };
  for (std::size_t t = 0; t <= opt.periods; ++t) {
    const double pf = f.pi(), pm = g.pi();
    const double gap = pm - pf;
    res.max_abs_gap = std::max(res.max_abs_gap, std::abs(gap));
    res.max_drift = std::max({res.max_drift, std::abs(pf - res.pi_star), std::abs(pm - res.pi_star)});
    if (t % opt.record_every == 0 || t == opt.periods) res.series.push_back({t, pf, pm, af, am, p});
    res.final_gap = gap;
    if (t == opt.periods) break;
    af = best_response(af, pf);
    am = best_response(am, pm);
    const double diff = lf * m.profit(pf) + lm * m.profit(pm) -
                        (lf * (pf * af + 1.0 - pf) + lm * (pm * am + 1.0 - pm)) * W_l;
    p = std::clamp(p + opt.kappa * diff / W_l, 0.0, 1.0);
    f = flow_step(f, {p, af, ThresholdMode::Adaptive, 0.0}, m);
    g = flow_step(g, {p, am, ThresholdMode::Adaptive, 0.0}, m);
  }
  const double e = std::abs(epsilon);
  res.ends_symmetric = std::abs(res.final_gap) < 1e-9;
  if (res.max_abs_gap < 1e-12 && res.max_drift < 1e-12)
    res.outcome = FragilityOutcome::Stationary;
  else if (res.max_abs_gap > 10.0 * e)
    res.outcome = FragilityOutcome::Diverged;
  else if (std::abs(res.final_gap) < 0.1 * e)
    res.outcome = FragilityOutcome::Returned;
  else
    res.outcome = FragilityOutcome::Persistent;
  return res;
}

}  // namespace segmarket
