#pragma once

#include "segmarket/baseline.hpp"
#include "segmarket/errors.hpp"
#include "segmarket/roots.hpp"
#include "segmarket/valuation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace segmarket {

enum class GroupKind {
  Symmetric,
  AsymFemMixed,   // α^m = 0, α^f in (0,1)
  AsymMaleMixed,  // α^f = 1, α^m in (0,1)
  AsymPure,       // α^f = 1, α^m = 0
  GroupLowTechOnly,
  GroupHighTechOnly,
};

inline const char* to_string(GroupKind k) {
  switch (k) {
    case GroupKind::Symmetric: return "Symmetric";
    case GroupKind::AsymFemMixed: return "AsymFemMixed";
    case GroupKind::AsymMaleMixed: return "AsymMaleMixed";
    case GroupKind::AsymPure: return "AsymPure";
    case GroupKind::GroupLowTechOnly: return "GroupLowTechOnly";
    case GroupKind::GroupHighTechOnly: return "GroupHighTechOnly";
  }
  return "?";
}

struct GroupDiagnostics {
  double residual_f = 0.0;
  double residual_m = 0.0;
  double entry_residual = 0.0;  // zero by definition when only one sector is active
  double Q_gap_f = 0.0;
  double Q_gap_m = 0.0;
};

struct GroupEquilibrium {
  GroupKind kind = GroupKind::Symmetric;
  std::optional<EquilibriumKind> baseline_kind;
  double pi_f = 0.0;
  double pi_m = 0.0;
  double alpha_f = 0.0;
  double alpha_m = 0.0;
  double p = 0.0;
  double lambda_f = 0.5;
  double lambda_m = 0.5;
  GroupDiagnostics diagnostics;
};

struct GroupCandidate {
  GroupEquilibrium candidate;
  std::string reason;
};

struct GroupSolveResult {
  std::vector<GroupEquilibrium> equilibria;
  std::vector<GroupCandidate> rejected;
  // Male-mixed only: smallest p A_q(π^f) over all solutions of the two-equation system.
  std::optional<double> min_pAq_f;
};

struct GroupOptions {
  std::size_t outer_grid = 400;
  std::size_t inner_grid = 400;
  double accept_tol = 1e-8;
  double dedup_tol = 1e-7;
  double degeneracy_tol = 1e-7;
  double endpoint_gap = 1e-9;
};

// Low-tech minus high-tech expected match value, averaged over groups with weights λ^j.
inline double group_entry_gap(const Model& m, double pi_f, double pi_m, double alpha_f,
                              double alpha_m) {
  const double lf = m.params.lambda_f, lm = m.params.lambda_m, W_l = m.values.W_l;
  const double low = lf * (pi_f * alpha_f + 1.0 - pi_f) * W_l +
                     lm * (pi_m * alpha_m + 1.0 - pi_m) * W_l;
  const double high = lf * m.profit(pi_f) + lm * m.profit(pi_m);
  return low - high;
}

inline GroupEquilibrium make_group_equilibrium(const Model& m, GroupKind kind, double pi_f,
                                               double pi_m, double alpha_f, double alpha_m,
                                               double p) {
  GroupEquilibrium e;
  e.kind = kind;
  e.pi_f = pi_f;
  e.pi_m = pi_m;
  e.alpha_f = alpha_f;
  e.alpha_m = alpha_m;
  e.p = p;
  e.lambda_f = m.params.lambda_f;
  e.lambda_m = m.params.lambda_m;
  e.diagnostics.residual_f = std::abs(g_function(m, pi_f, alpha_f, p));
  e.diagnostics.residual_m = std::abs(g_function(m, pi_m, alpha_m, p));
  e.diagnostics.entry_residual =
      (p > 0.0 && p < 1.0) ? std::abs(group_entry_gap(m, pi_f, pi_m, alpha_f, alpha_m)) : 0.0;
  e.diagnostics.Q_gap_f = p * m.A_q(pi_f) - m.values.Q_star;
  e.diagnostics.Q_gap_m = p * m.A_q(pi_m) - m.values.Q_star;
  return e;
}

// Same equilibrium with the group labels (and masses) exchanged.
inline GroupEquilibrium mirror(GroupEquilibrium e) {
  std::swap(e.pi_f, e.pi_m);
  std::swap(e.alpha_f, e.alpha_m);
  std::swap(e.lambda_f, e.lambda_m);
  std::swap(e.diagnostics.residual_f, e.diagnostics.residual_m);
  std::swap(e.diagnostics.Q_gap_f, e.diagnostics.Q_gap_m);
  return e;
}

// Worker optimality for one group: accept when p A_q < Q*, reject when above, mix at equality.
inline bool worker_consistent(double alpha, double Q_gap, double tol) {
  if (alpha >= 1.0) return Q_gap <= tol;
  if (alpha <= 0.0) return Q_gap >= -tol;
  return std::abs(Q_gap) < tol;
}

inline std::vector<GroupEquilibrium> lift_symmetric(const Model& m,
                                                    const SolverOptions& opt = {}) {
  std::vector<GroupEquilibrium> out;
  for (const auto& e : find_all_equilibria(m, opt).equilibria) {
    if (e.duplicate) continue;
    GroupKind kind = GroupKind::Symmetric;
    if (e.kind == EquilibriumKind::LowTechOnly) kind = GroupKind::GroupLowTechOnly;
    if (e.kind == EquilibriumKind::HighTechOnly) kind = GroupKind::GroupHighTechOnly;
    auto g = make_group_equilibrium(m, kind, e.pi, e.pi, e.alpha, e.alpha, e.p);
    g.baseline_kind = e.kind;
    out.push_back(g);
  }
  return out;
}

namespace detail {

inline bool same_pair(const GroupEquilibrium& a, const GroupEquilibrium& b, double tol) {
  return std::abs(a.pi_f - b.pi_f) <= tol && std::abs(a.pi_m - b.pi_m) <= tol &&
         std::abs(a.p - b.p) <= tol;
}

inline void push_unique(std::vector<GroupEquilibrium>& v, const GroupEquilibrium& e, double tol) {
  for (const auto& x : v)
    if (same_pair(x, e, tol)) return;
  v.push_back(e);
}

inline bool residuals_ok(const GroupEquilibrium& e, double tol) {
  return e.diagnostics.residual_f < tol && e.diagnostics.residual_m < tol &&
         e.diagnostics.entry_residual < tol;
}

inline std::array<double, 2> clamp_unit(std::array<double, 2> x) {
  for (auto& v : x) v = std::clamp(v, 1e-12, 1.0 - 1e-12);
  return x;
}

// One group (x) mixes, the other (y) plays the pure action alpha_y. Fem-mixed is x = f with
// alpha_y = 0; male-mixed is x = m with alpha_y = 1.
inline GroupSolveResult solve_one_group_mixing(const Model& m, bool f_mixes,
                                               const GroupOptions& opt) {
  GroupSolveResult res;
  const double Q = m.values.Q_star;
  const double W_l = m.values.W_l;
  const double lx = f_mixes ? m.params.lambda_f : m.params.lambda_m;
  const double ly = f_mixes ? m.params.lambda_m : m.params.lambda_f;
  const double alpha_y = f_mixes ? 0.0 : 1.0;
  const GroupKind kind = f_mixes ? GroupKind::AsymFemMixed : GroupKind::AsymMaleMixed;
  if (!(lx > 0.0) || !(ly > 0.0)) return res;

  auto p_of = [&](double pix) {
    const double aq = m.A_q(pix);
    return aq > 0.0 ? Q / aq : std::numeric_limits<double>::infinity();
  };
  auto alpha_x = [&](double pix, double piy) {
    const double high = lx * m.profit(pix) + ly * m.profit(piy);
    const double low_y = ly * (piy * alpha_y + 1.0 - piy) * W_l;
    return (high - low_y - lx * (1.0 - pix) * W_l) / (lx * pix * W_l);
  };
  auto inner_roots = [&](double p) {
    return roots::scan_roots([&](double pi) { return g_function(m, pi, alpha_y, p); }, 0.0,
                             1.0 - opt.endpoint_gap, opt.inner_grid);
  };
  auto outer_residual = [&](double pix, double piy) {
    return g_function(m, pix, alpha_x(pix, piy), p_of(pix));
  };
  auto system = [&](const std::array<double, 2>& z) {
    const double p = p_of(z[0]);
    return std::array<double, 2>{g_function(m, z[1], alpha_y, p), outer_residual(z[0], z[1])};
  };
  // k-th inner root as a function of π^x, used by the bisection fallback
  auto branch = [&](double pix, std::size_t k, std::size_t count) -> std::optional<double> {
    const double p = p_of(pix);
    if (!(p <= 1.0)) return std::nullopt;
    const auto r = inner_roots(p);
    if (r.size() != count) return std::nullopt;
    return r[k];
  };

  struct Sample {
    double pix;
    std::vector<double> piy;
    std::vector<double> F;
  };
  std::optional<Sample> prev;
  const double h = 1.0 / static_cast<double>(opt.outer_grid);
  std::vector<GroupEquilibrium> solutions;
  for (std::size_t i = 1; i < opt.outer_grid; ++i) {
    const double pix = h * static_cast<double>(i);
    const double p = p_of(pix);
    if (!(p <= 1.0)) {
      prev.reset();
      continue;
    }
    Sample cur{pix, inner_roots(p), {}};
    for (double piy : cur.piy) cur.F.push_back(outer_residual(pix, piy));
    if (prev && prev->piy.size() == cur.piy.size()) {
      for (std::size_t k = 0; k < cur.piy.size(); ++k) {
        const double Fa = prev->F[k], Fb = cur.F[k];
        if (!std::isfinite(Fa) || !std::isfinite(Fb) || (Fa < 0.0) == (Fb < 0.0)) continue;
        std::array<double, 2> z{0.5 * (prev->pix + pix), 0.5 * (prev->piy[k] + cur.piy[k])};
        auto nr = roots::damped_newton<2>(system, z, clamp_unit, 1e-13);
        const bool in_cell = nr.x[0] >= prev->pix - h && nr.x[0] <= pix + h;
        if (nr.converged && !nr.singular && in_cell) {
          z = nr.x;
        } else {
          const std::size_t count = cur.piy.size();
          auto f1 = [&](double a) {
            const auto b = branch(a, k, count);
            return b ? outer_residual(a, *b) : std::numeric_limits<double>::quiet_NaN();
          };
          const double a = roots::bisect(f1, prev->pix, pix, Fa);
          const auto b = branch(a, k, count);
          if (!b) continue;
          z = {a, *b};
        }
        const double pf = f_mixes ? z[0] : z[1];
        const double pm = f_mixes ? z[1] : z[0];
        const double ax = alpha_x(z[0], z[1]);
        const double pz = p_of(z[0]);
        auto e = make_group_equilibrium(m, kind, pf, pm, f_mixes ? ax : alpha_y,
                                        f_mixes ? alpha_y : ax, pz);
        push_unique(solutions, e, opt.dedup_tol);
      }
    }
    prev = std::move(cur);
  }

  for (const auto& e : solutions) {
    const double ax = f_mixes ? e.alpha_f : e.alpha_m;
    const double other_gap = f_mixes ? e.diagnostics.Q_gap_m : e.diagnostics.Q_gap_f;
    const bool oriented = e.pi_m - e.pi_f > opt.degeneracy_tol;
    if (!f_mixes && oriented && e.p >= 0.0 && e.p <= 1.0) {
      const double v = e.p * m.A_q(e.pi_f);
      res.min_pAq_f = res.min_pAq_f ? std::min(*res.min_pAq_f, v) : v;
    }
    std::string why;
    if (!oriented)
      why = "requires pi_m > pi_f";
    else if (!(e.p >= 0.0 && e.p <= 1.0))
      why = "p outside [0,1]";
    else if (!(ax > 0.0 && ax < 1.0))
      why = std::string(f_mixes ? "alpha_f" : "alpha_m") + " = " + std::to_string(ax) +
            " outside (0,1)";
    else if (f_mixes ? !(other_gap > 0.0) : !(other_gap < 0.0))
      why = f_mixes ? "group m would not reject low-tech offers" :
                      "group f would not accept low-tech offers";
    else if (!residuals_ok(e, opt.accept_tol))
      why = "residuals above tolerance";
    if (why.empty())
      res.equilibria.push_back(e);
    else
      res.rejected.push_back({e, why});
  }
  return res;
}

}  // namespace detail

// Discriminatory equilibria in which group f randomises over low-tech offers and group m rejects.
inline GroupSolveResult solve_asym_fem_mixed(const Model& m, const GroupOptions& opt = {}) {
  return detail::solve_one_group_mixing(m, true, opt);
}

// Discriminatory equilibria in which group m randomises and group f accepts.
inline GroupSolveResult solve_asym_male_mixed(const Model& m, const GroupOptions& opt = {}) {
  return detail::solve_one_group_mixing(m, false, opt);
}

// Neither group randomises: α^f = 1, α^m = 0, with (π^f, π^m, p) from the two steady states and
// entry indifference.
inline GroupSolveResult solve_asym_pure(const Model& m, const GroupOptions& opt = {}) {
  GroupSolveResult res;
  const double Q = m.values.Q_star;
  auto roots_at = [&](double alpha, double p) {
    return roots::scan_roots([&](double pi) { return g_function(m, pi, alpha, p); }, 0.0,
                             1.0 - opt.endpoint_gap, opt.inner_grid);
  };
  auto system = [&](const std::array<double, 3>& z) {
    return std::array<double, 3>{g_function(m, z[0], 1.0, z[2]), g_function(m, z[1], 0.0, z[2]),
                                 group_entry_gap(m, z[0], z[1], 1.0, 0.0)};
  };
  auto clamp3 = [](std::array<double, 3> z) {
    for (auto& v : z) v = std::clamp(v, 1e-12, 1.0 - 1e-12);
    return z;
  };

  struct Sample {
    double p;
    std::vector<double> f, mm;
  };
  auto sample = [&](double p) { return Sample{p, roots_at(1.0, p), roots_at(0.0, p)}; };
  auto entry = [&](const Sample& s, std::size_t i, std::size_t j) {
    return group_entry_gap(m, s.f[i], s.mm[j], 1.0, 0.0);
  };

  std::vector<GroupEquilibrium> solutions;
  const double h = 1.0 / static_cast<double>(opt.outer_grid);
  std::optional<Sample> prev;
  for (std::size_t n = 1; n <= opt.outer_grid; ++n) {
    Sample cur = sample(h * static_cast<double>(n));
    if (prev && prev->f.size() == cur.f.size() && prev->mm.size() == cur.mm.size()) {
      for (std::size_t i = 0; i < cur.f.size(); ++i)
        for (std::size_t j = 0; j < cur.mm.size(); ++j) {
          const double Ea = entry(*prev, i, j), Eb = entry(cur, i, j);
          if (Eb != 0.0 && (Ea < 0.0) == (Eb < 0.0)) continue;
          std::array<double, 3> z{0.5 * (prev->f[i] + cur.f[i]), 0.5 * (prev->mm[j] + cur.mm[j]),
                                  0.5 * (prev->p + cur.p)};
          auto nr = roots::damped_newton<3>(system, z, clamp3, 1e-13);
          if (nr.converged && !nr.singular && nr.x[2] >= prev->p - h && nr.x[2] <= cur.p + h) {
            z = nr.x;
          } else {
            auto fp = [&](double p) {
              const Sample s = sample(p);
              if (s.f.size() != cur.f.size() || s.mm.size() != cur.mm.size())
                return std::numeric_limits<double>::quiet_NaN();
              return entry(s, i, j);
            };
            const double p = roots::bisect(fp, prev->p, cur.p, Ea);
            const Sample s = sample(p);
            if (s.f.size() != cur.f.size() || s.mm.size() != cur.mm.size()) continue;
            z = {s.f[i], s.mm[j], p};
          }
          detail::push_unique(solutions,
                              make_group_equilibrium(m, GroupKind::AsymPure, z[0], z[1], 1.0, 0.0,
                                                     z[2]),
                              opt.dedup_tol);
        }
    }
    prev = std::move(cur);
  }

  for (const auto& e : solutions) {
    std::string why;
    if (!(e.pi_m - e.pi_f > opt.degeneracy_tol))
      why = "requires pi_m > pi_f";
    else if (!(e.p >= 0.0 && e.p <= 1.0))
      why = "p outside [0,1]";
    else if (!(e.p * m.A_q(e.pi_f) <= Q && Q <= e.p * m.A_q(e.pi_m)))
      why = "worker conditions p A_q(pi_f) <= Q* <= p A_q(pi_m) fail";
    else if (!detail::residuals_ok(e, opt.accept_tol))
      why = "residuals above tolerance";
    if (why.empty())
      res.equilibria.push_back(e);
    else
      res.rejected.push_back({e, why});
  }
  return res;
}

// Only high-tech firms, with the two groups sitting on different roots of G(π, ·, 1).
inline GroupSolveResult solve_asym_high_only(const Model& m, const GroupOptions& opt = {}) {
  GroupSolveResult res;
  const double Q = m.values.Q_star;
  const auto r = roots::scan_roots([&](double pi) { return g_function(m, pi, 0.0, 1.0); }, 0.0,
                                   1.0 - opt.endpoint_gap, 10000);
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = i + 1; j < r.size(); ++j) {
      const double af = m.A_q(r[i]) > Q ? 0.0 : 1.0;
      const double am = m.A_q(r[j]) > Q ? 0.0 : 1.0;
      auto e = make_group_equilibrium(m, GroupKind::GroupHighTechOnly, r[i], r[j], af, am, 1.0);
      if (group_entry_gap(m, r[i], r[j], af, am) <= opt.accept_tol)
        res.equilibria.push_back(e);
      else
        res.rejected.push_back({e, "low-tech entry would be profitable"});
    }
  return res;
}

struct Prop6Row {
  double p = 0.0;
  double pi_f = std::numeric_limits<double>::quiet_NaN();
  double pi_m = std::numeric_limits<double>::quiet_NaN();
  double lambda_f = std::numeric_limits<double>::quiet_NaN();
  double lambda_m = std::numeric_limits<double>::quiet_NaN();
  bool valid = false;
};

struct Prop6Result {
  double pi_star = 0.0;  // symmetric mixed pool quality
  double p_star = 0.0;   // Q*/A_q(π*)
  std::vector<Prop6Row> rows;
  bool lambda_m_increasing = false;  // over the valid rows
  std::size_t valid_count = 0;
};

// Around a symmetric mixed equilibrium, pairs each meeting probability p with the pools
// π^f < π* < π^m it sustains and the unique group masses that keep entry indifferent.
inline Prop6Result prop6_sweep(const Model& m, std::vector<double> p_grid = {},
                               const SolverOptions& opt = {}) {
  const auto set = find_all_equilibria(m, opt);
  const auto it = std::find_if(set.equilibria.begin(), set.equilibria.end(), [](const auto& e) {
    return e.kind == EquilibriumKind::TwoSectorMixed;
  });
  if (it == set.equilibria.end())
    throw NoSymmetricMixed("no symmetric mixed equilibrium at these parameters");
  Prop6Result res;
  res.pi_star = it->pi;
  res.p_star = it->p;
  if (p_grid.empty()) {
    constexpr int n = 41;
    for (int i = 0; i < n; ++i)
      p_grid.push_back(std::min(1.0, res.p_star * (0.8 + 0.4 * i / (n - 1))));
  }
  const double Q = m.values.Q_star, W_l = m.values.W_l;
  for (double p : p_grid) {
    Prop6Row row;
    row.p = p;
    const auto rf = roots::scan_roots([&](double pi) { return g_function(m, pi, 1.0, p); }, 0.0,
                                      res.pi_star, opt.scan_intervals);
    const auto rm = roots::scan_roots([&](double pi) { return g_function(m, pi, 0.0, p); },
                                      res.pi_star, 1.0 - opt.endpoint_gap, opt.scan_intervals);
    if (!rf.empty() && !rm.empty() && rf.front() < res.pi_star && rm.front() > res.pi_star) {
      row.pi_f = rf.front();
      row.pi_m = rm.front();
      const double pf = m.profit(row.pi_f), pm = m.profit(row.pi_m);
      row.lambda_m = (W_l - pf) / (pm - pf + row.pi_m * W_l);
      row.lambda_f = 1.0 - row.lambda_m;
      row.valid = row.lambda_m > 0.0 && row.lambda_m < 1.0 && p * m.A_q(row.pi_f) < Q &&
                  Q < p * m.A_q(row.pi_m);
    }
    res.valid_count += row.valid ? 1 : 0;
    res.rows.push_back(row);
  }
  std::vector<Prop6Row> valid;
  for (const auto& r : res.rows)
    if (r.valid) valid.push_back(r);
  std::sort(valid.begin(), valid.end(), [](const auto& a, const auto& b) { return a.p < b.p; });
  res.lambda_m_increasing = valid.size() >= 2;
  for (std::size_t i = 1; i < valid.size(); ++i)
    if (!(valid[i].lambda_m > valid[i - 1].lambda_m)) res.lambda_m_increasing = false;
  return res;
}

enum class QuotaMode { Flow, Stock };

inline const char* to_string(QuotaMode q) { return q == QuotaMode::Flow ? "flow" : "stock"; }

// Stationary pool under hire probabilities (A_q, A_u) that do not depend on the pool.
struct PoolState {
  double pi = 0.0;
  double U_q = 0.0;  // per capita unemployed qualified
  double U_u = 0.0;  // per capita unemployed unqualified
};

inline PoolState stationary_pool(const ModelParams& prm, double A_q, double A_u, double p,
                                 double alpha) {
  const double phi = prm.phi, psi = prm.psi;
  const double L = 1.0 + p * A_u / (phi + (1.0 - phi) * prm.r) + (1.0 - p) / phi;
  const double R = 1.0 + p * A_q / phi + (1.0 - p) * alpha / phi;
  PoolState s;
  s.U_u = (1.0 - psi) / L;
  s.U_q = psi / R;
  s.pi = s.U_q / (s.U_q + s.U_u);
  return s;
}

// Per capita quantity the quota equalises: high-tech hiring inflow (flow) or high-tech
// employment (stock).
inline double quota_measure(const ModelParams& prm, QuotaMode mode, const PoolState& s,
                            double A_q, double A_u, double p) {
  if (mode == QuotaMode::Flow) return p * (s.U_q * A_q + s.U_u * A_u);
  const double delta = prm.phi + (1.0 - prm.phi) * prm.r;
  return p * s.U_q * A_q / prm.phi + p * s.U_u * A_u / delta;
}

struct QuotaResult {
  QuotaMode mode = QuotaMode::Flow;
  std::vector<GroupEquilibrium> asymmetric_survivors;
  std::vector<GroupEquilibrium> symmetric_set;
  std::vector<GroupEquilibrium> constrained_solutions;  // every quota-feasible point found
  std::size_t unconstrained_asymmetric = 0;  // asymmetric equilibria without the quota
};

struct QuotaOptions {
  QuotaMode mode = QuotaMode::Flow;
  std::size_t grid = 200;
  std::size_t alpha_grid = 51;
  double tol = 1e-9;
  double degeneracy_tol = 1e-7;
};

// Under the quota high-tech firms apply one hiring standard s to both groups, and s must make
// per capita high-tech hiring (or employment) equal across groups. Searches every acceptance
// configuration for constrained steady states with entry indifference and worker optimality.
inline QuotaResult quota_check(const Model& m, const QuotaOptions& qo = {},
                               const GroupOptions& go = {}) {
  QuotaResult res;
  res.mode = qo.mode;
  res.symmetric_set = lift_symmetric(m);
  res.unconstrained_asymmetric = solve_asym_fem_mixed(m, go).equilibria.size() +
                                 solve_asym_male_mixed(m, go).equilibria.size() +
                                 solve_asym_pure(m, go).equilibria.size() +
                                 solve_asym_high_only(m, go).equilibria.size();

  const ModelParams& prm = m.params;
  const double Q = m.values.Q_star, W_q = m.values.W_q, W_u = m.values.W_u, W_l = m.values.W_l;
  const double lf = prm.lambda_f, lm = prm.lambda_m;

  struct Eval {
    PoolState f, mm;
    double A_q, A_u, entry, quota;
  };
  auto evaluate = [&](double s, double p, double af, double am) {
    const auto h = hire_probabilities_at(m.signal, s);
    Eval e{stationary_pool(prm, h.A_q, h.A_u, p, af), stationary_pool(prm, h.A_q, h.A_u, p, am),
           h.A_q, h.A_u, 0.0, 0.0};
    auto value_high = [&](double pi) { return pi * h.A_q * W_q + (1.0 - pi) * h.A_u * W_u; };
    e.entry = lf * (e.f.pi * af + 1.0 - e.f.pi) * W_l + lm * (e.mm.pi * am + 1.0 - e.mm.pi) * W_l -
              lf * value_high(e.f.pi) - lm * value_high(e.mm.pi);
    e.quota = quota_measure(prm, qo.mode, e.f, h.A_q, h.A_u, p) -
              quota_measure(prm, qo.mode, e.mm, h.A_q, h.A_u, p);
    return e;
  };
  auto record = [&](double s, double p, double af, double am) {
    const Eval e = evaluate(s, p, af, am);
    if (std::abs(e.entry) > qo.tol || std::abs(e.quota) > qo.tol) return;
    const double gap = p * e.A_q - Q;
    if (!worker_consistent(af, gap, qo.tol) || !worker_consistent(am, gap, qo.tol)) return;
    GroupKind kind = GroupKind::Symmetric;
    const bool asym = std::abs(e.f.pi - e.mm.pi) > qo.degeneracy_tol;
    if (asym) {
      if (af > 0.0 && af < 1.0)
        kind = GroupKind::AsymFemMixed;
      else if (am > 0.0 && am < 1.0)
        kind = GroupKind::AsymMaleMixed;
      else
        kind = GroupKind::AsymPure;
    }
    GroupEquilibrium g;
    g.kind = kind;
    g.pi_f = e.f.pi;
    g.pi_m = e.mm.pi;
    g.alpha_f = af;
    g.alpha_m = am;
    g.p = p;
    g.lambda_f = lf;
    g.lambda_m = lm;
    g.diagnostics.residual_f = std::abs(g_at_rates(prm, e.f.pi, af, p, e.A_q, e.A_u));
    g.diagnostics.residual_m = std::abs(g_at_rates(prm, e.mm.pi, am, p, e.A_q, e.A_u));
    g.diagnostics.entry_residual = std::abs(e.entry);
    g.diagnostics.Q_gap_f = gap;
    g.diagnostics.Q_gap_m = gap;
    detail::push_unique(res.constrained_solutions, g, go.dedup_tol);
    if (asym) detail::push_unique(res.asymmetric_survivors, g, go.dedup_tol);
  };

  const std::size_t n = qo.grid;
  auto node = [&](std::size_t i) { return static_cast<double>(i) / static_cast<double>(n); };

  // Pure acceptance patterns: unknowns (s, p), equations entry = 0 and quota = 0.
  const std::array<std::array<double, 2>, 4> patterns{{{1.0, 1.0}, {0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}};
  for (const auto& pat : patterns) {
    auto sys = [&](const std::array<double, 2>& z) {
      const Eval e = evaluate(z[0], z[1], pat[0], pat[1]);
      return std::array<double, 2>{e.entry, e.quota};
    };
    auto clamp01 = [](std::array<double, 2> z) {
      for (auto& v : z) v = std::clamp(v, 0.0, 1.0);
      return z;
    };
    std::vector<std::array<double, 2>> vals((n + 1) * (n + 1));
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t j = 0; j <= n; ++j) vals[i * (n + 1) + j] = sys({node(i), node(j)});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        bool straddles = true;
        for (int c = 0; c < 2; ++c) {
          double lo = std::numeric_limits<double>::infinity(), hi = -lo;
          for (std::size_t di = 0; di < 2; ++di)
            for (std::size_t dj = 0; dj < 2; ++dj) {
              const double v = vals[(i + di) * (n + 1) + (j + dj)][c];
              lo = std::min(lo, v);
              hi = std::max(hi, v);
            }
          straddles = straddles && lo <= 0.0 && hi >= 0.0;
        }
        if (!straddles) continue;
        const auto nr = roots::damped_newton<2>(
            sys, {0.5 * (node(i) + node(i + 1)), 0.5 * (node(j) + node(j + 1))}, clamp01, 1e-13);
        if (nr.residual_norm <= qo.tol) record(nr.x[0], nr.x[1], pat[0], pat[1]);
      }
  }

  // Both groups indifferent: p = Q*/A_q(s). For each α^f on a grid, the quota pins α^m and
  // entry indifference pins s.
  for (std::size_t k = 0; k < qo.alpha_grid; ++k) {
    const double af = static_cast<double>(k) / static_cast<double>(qo.alpha_grid - 1);
    auto am_of = [&](double s) -> std::optional<double> {
      const double aq = hire_probabilities_at(m.signal, s).A_q;
      if (!(aq > 0.0) || Q / aq > 1.0) return std::nullopt;
      const double p = Q / aq;
      auto qf = [&](double am) { return evaluate(s, p, af, am).quota; };
      const double q0 = qf(0.0), q1 = qf(1.0);
      if (q0 == 0.0) return 0.0;
      if (q1 == 0.0) return 1.0;
      if ((q0 < 0.0) == (q1 < 0.0)) return std::nullopt;
      return roots::bisect(qf, 0.0, 1.0, q0);
    };
    auto entry_of = [&](double s) {
      const auto am = am_of(s);
      if (!am) return std::numeric_limits<double>::quiet_NaN();
      return evaluate(s, Q / hire_probabilities_at(m.signal, s).A_q, af, *am).entry;
    };
    for (double s : roots::scan_roots(entry_of, 0.0, 1.0, n)) {
      const auto am = am_of(s);
      if (am) record(s, Q / hire_probabilities_at(m.signal, s).A_q, af, *am);
    }
  }
  return res;
}

}  // namespace segmarket
