#pragma once

#include "segmarket/errors.hpp"
#include "segmarket/roots.hpp"
#include "segmarket/signal.hpp"
#include "segmarket/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

namespace segmarket {

enum class EquilibriumKind {
  LowTechOnly,
  HighTechOnly,
  TwoSectorReject,
  TwoSectorAccept,
  TwoSectorMixed,
};

inline const char* to_string(EquilibriumKind k) {
  switch (k) {
    case EquilibriumKind::LowTechOnly: return "LowTechOnly";
    case EquilibriumKind::HighTechOnly: return "HighTechOnly";
    case EquilibriumKind::TwoSectorReject: return "TwoSectorReject";
    case EquilibriumKind::TwoSectorAccept: return "TwoSectorAccept";
    case EquilibriumKind::TwoSectorMixed: return "TwoSectorMixed";
  }
  return "?";
}

struct EquilibriumDiagnostics {
  double Q_gap = 0.0;     // p A_q(π) - Q*
  double residual = 0.0;  // |G(π, α, p)|
};

struct Equilibrium {
  EquilibriumKind kind = EquilibriumKind::LowTechOnly;
  double pi = 0.0;
  double alpha = 0.0;
  double p = 0.0;
  EquilibriumDiagnostics diagnostics;
  bool knife_edge = false;
  bool duplicate = false;
};

// A candidate that failed one of its inclusion conditions, kept for reporting.
struct RejectedCandidate {
  EquilibriumKind kind = EquilibriumKind::LowTechOnly;
  double pi = 0.0;
  double alpha = 0.0;
  double p = 0.0;
  double Q_gap = 0.0;
  std::string reason;
};

struct Bounds {
  double pi_low = 0.0;
  double pi_high = 0.0;
};

struct SolverOptions {
  std::size_t scan_intervals = 10000;
  double inclusion_tol = 1e-9;
  double endpoint_gap = 1e-9;  // scans over (0,1) stop at 1 - endpoint_gap
};

struct EquilibriumSet {
  std::vector<Equilibrium> equilibria;
  std::vector<RejectedCandidate> rejected;
  Bounds bounds;
  double Q_star = 0.0;
  std::vector<std::string> warnings;
};

// Steady-state residual with the hire probabilities supplied by the caller.
inline double g_at_rates(const ModelParams& prm, double pi, double alpha, double p, double A_q,
                         double A_u) {
  if (pi >= 1.0) return -std::numeric_limits<double>::infinity();
  const double phi = prm.phi;
  const double psi = prm.psi;
  const double unq = 1.0 + p * A_u / (phi + (1.0 - phi) * prm.r) + (1.0 - p) / phi;
  const double q = 1.0 + p * A_q / phi + (1.0 - p) * alpha / phi;
  return unq - (1.0 - psi) / (1.0 - pi) * (pi / psi) * q;
}

// Steady-state residual; zero iff the unemployment pool with share π of qualified workers is
// stationary under acceptance α and high-tech meeting probability p. -inf at π = 1.
inline double g_function(const Model& m, double pi, double alpha, double p) {
  if (pi >= 1.0) return -std::numeric_limits<double>::infinity();
  const auto a = m.hire(pi);
  return g_at_rates(m.params, pi, alpha, p, a.A_q, a.A_u);
}

// Pool qualities at which entry is indifferent when qualified workers reject (pi_low) or
// accept (pi_high) low-tech offers. Throws NoBound when either cannot be bracketed in (0,1).
inline Bounds compute_bounds(const Model& m) {
  const double W_l = m.values.W_l;
  auto low = [&](double pi) { return (1.0 - pi) * W_l - m.profit(pi); };
  auto high = [&](double pi) { return W_l - m.profit(pi); };
  const double l0 = low(0.0), l1 = low(1.0);
  if (!(l0 > 0.0 && l1 < 0.0)) throw NoBound("pi_low", l0, l1);
  const double h0 = high(0.0), h1 = high(1.0);
  if (!(h0 > 0.0 && h1 < 0.0)) throw NoBound("pi_high", h0, h1);
  return {roots::bisect(low, 0.0, 1.0, l0), roots::bisect(high, 0.0, 1.0, h0)};
}

// Acceptance probability that keeps firms indifferent between sectors at pool quality π.
inline double alpha_indifference(const Model& m, const Bounds& bounds, double pi) {
  constexpr double slack = 1e-12;
  if (pi < bounds.pi_low - slack || pi > bounds.pi_high + slack)
    throw OutOfRegion("alpha_indifference: pi = " + std::to_string(pi) + " outside [" +
                      std::to_string(bounds.pi_low) + ", " + std::to_string(bounds.pi_high) + "]");
  const double W_l = m.values.W_l;
  return (m.profit(pi) - (1.0 - pi) * W_l) / (pi * W_l);
}

inline double alpha_indifference(const Model& m, double pi) {
  return alpha_indifference(m, compute_bounds(m), pi);
}

// Unique p solving G(π, α, p) = 0, using that G is affine in p. NaN if G does not depend on p.
inline double solve_p_linear(const Model& m, double pi, double alpha) {
  const double g0 = g_function(m, pi, alpha, 0.0);
  const double g1 = g_function(m, pi, alpha, 1.0);
  if (g0 == g1) return std::numeric_limits<double>::quiet_NaN();
  return g0 / (g0 - g1);
}

namespace detail {

inline Equilibrium make_equilibrium(const Model& m, EquilibriumKind kind, double pi, double alpha,
                                    double p) {
  Equilibrium e;
  e.kind = kind;
  e.pi = pi;
  e.alpha = alpha;
  e.p = p;
  e.diagnostics.Q_gap = p * m.A_q(pi) - m.values.Q_star;
  e.diagnostics.residual = std::abs(g_function(m, pi, alpha, p));
  return e;
}

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace detail

inline EquilibriumSet find_all_equilibria(const Model& m, const SolverOptions& opt = {}) {
  using K = EquilibriumKind;
  const double tol = opt.inclusion_tol;
  const double Q = m.values.Q_star;
  const double psi = m.params.psi;

  EquilibriumSet out;
  out.Q_star = Q;
  out.bounds = compute_bounds(m);
  const double lo = out.bounds.pi_low;
  const double hi = out.bounds.pi_high;

  auto reject = [&](K kind, double pi, double alpha, double p, std::string why) {
    out.rejected.push_back({kind, pi, alpha, p, p * m.A_q(pi) - Q, std::move(why)});
  };
  auto accept = [&](Equilibrium e, bool knife, const std::string& what) {
    e.knife_edge = knife;
    if (knife)
      out.warnings.push_back(std::string(to_string(e.kind)) + " at pi=" + std::to_string(e.pi) +
                             " is within tolerance of an inclusion boundary (" + what + ")");
    out.equilibria.push_back(e);
  };

  // Only low-tech firms: the pool is the population.
  if (psi <= hi + tol) {
    accept(detail::make_equilibrium(m, K::LowTechOnly, psi, 1.0, 0.0), psi > hi, "psi vs pi_high");
  } else {
    reject(K::LowTechOnly, psi, 1.0, 0.0, "psi exceeds pi_high");
  }

  // Only high-tech firms: roots of G(π, ·, 1).
  {
    auto g_high = [&](double pi) { return g_function(m, pi, 0.0, 1.0); };
    for (double pi : roots::scan_roots(g_high, 0.0, 1.0 - opt.endpoint_gap, opt.scan_intervals)) {
      const double gap = m.A_q(pi) - Q;
      const double alpha = gap >= 0.0 ? 0.0 : 1.0;
      if (pi < lo - tol) {
        reject(K::HighTechOnly, pi, alpha, 1.0, "root below pi_low: low-tech entry profitable");
        continue;
      }
      if (pi <= hi + tol && pi < hi) {
        if (gap < -tol) {
          reject(K::HighTechOnly, pi, alpha, 1.0, "A_q below Q*: qualified workers would accept");
          continue;
        }
        accept(detail::make_equilibrium(m, K::HighTechOnly, pi, 0.0, 1.0),
               gap < tol || pi < lo, "A_q vs Q* or pi_low");
        continue;
      }
      accept(detail::make_equilibrium(m, K::HighTechOnly, pi, alpha, 1.0), pi <= hi + tol,
             "pi_high");
    }
  }

  // Both sectors, qualified workers reject low-tech offers: π = π_low, α = 0.
  {
    const double p = solve_p_linear(m, lo, 0.0);
    const double gap = p * m.A_q(lo) - Q;
    if (!std::isfinite(p)) {
      reject(K::TwoSectorReject, lo, 0.0, p, "steady state does not depend on p");
    } else if (p < -tol || p > 1.0 + tol) {
      reject(K::TwoSectorReject, lo, 0.0, p, "p outside [0,1]");
    } else if (gap < -tol) {
      reject(K::TwoSectorReject, lo, 0.0, p, "p A_q below Q*: qualified workers would accept");
    } else {
      const double pc = std::clamp(p, 0.0, 1.0);
      accept(detail::make_equilibrium(m, K::TwoSectorReject, lo, 0.0, pc),
             p < tol || p > 1.0 - tol || gap < tol, "p range or Q gap");
    }
  }

  // Both sectors, qualified workers accept: π = π_high, α = 1.
  {
    const double p = solve_p_linear(m, hi, 1.0);
    const double gap = p * m.A_q(hi) - Q;
    const double g11 = g_function(m, hi, 1.0, 1.0);
    if (!std::isfinite(p)) {
      reject(K::TwoSectorAccept, hi, 1.0, p, "steady state does not depend on p");
    } else if (!(psi > hi - tol)) {
      reject(K::TwoSectorAccept, hi, 1.0, p, "psi not above pi_high");
    } else if (g11 > tol) {
      reject(K::TwoSectorAccept, hi, 1.0, p, "G(pi_high, 1, 1) positive");
    } else if (p < -tol || p > 1.0 + tol) {
      reject(K::TwoSectorAccept, hi, 1.0, p, "p outside [0,1]");
    } else if (gap > tol) {
      reject(K::TwoSectorAccept, hi, 1.0, p, "p A_q above Q*: qualified workers would reject");
    } else {
      const double pc = std::clamp(p, 0.0, 1.0);
      accept(detail::make_equilibrium(m, K::TwoSectorAccept, hi, 1.0, pc),
             psi <= hi || g11 > 0.0 || p < tol || p > 1.0 - tol || gap > -tol,
             "psi, G(pi_high,1,1), p range or Q gap");
    }
  }

  // Both sectors, qualified workers indifferent: α = α(π), p = Q*/A_q(π).
  {
    const Bounds& bd = out.bounds;
    auto h = [&](double pi) {
      const double aq = m.A_q(pi);
      if (!(aq > 0.0)) return std::numeric_limits<double>::quiet_NaN();
      const double p = Q / aq;
      if (p > 1.0) return std::numeric_limits<double>::quiet_NaN();
      return g_function(m, pi, alpha_indifference(m, bd, pi), p);
    };
    for (double pi : roots::scan_roots(h, lo, hi, opt.scan_intervals)) {
      if (pi <= lo || pi >= hi) continue;  // coincides with the reject/accept candidates
      const double alpha = alpha_indifference(m, bd, pi);
      const double p = Q / m.A_q(pi);
      accept(detail::make_equilibrium(m, K::TwoSectorMixed, pi, alpha, p), p > 1.0 - tol,
             "p near 1");
    }
  }

  if (out.equilibria.empty())
    throw InternalInconsistency("no equilibrium found although at least one always exists");

  std::stable_sort(out.equilibria.begin(), out.equilibria.end(),
                   [](const Equilibrium& a, const Equilibrium& b) {
                     return std::tie(a.kind, a.pi) < std::tie(b.kind, b.pi);
                   });
  for (std::size_t i = 0; i < out.equilibria.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const auto& a = out.equilibria[j];
      auto& b = out.equilibria[i];
      if (detail::near(a.pi, b.pi, tol) && detail::near(a.alpha, b.alpha, tol) &&
          detail::near(a.p, b.p, tol))
        b.duplicate = true;
    }
  return out;
}

struct PhiScanEntry {
  double phi = 0.0;
  bool high_tech_only = false;
  bool valid = true;  // false if the parameters at this phi are inadmissible
  std::string note;
};

struct PhiScanResult {
  double phi_star = 0.0;  // smallest grid phi at which a high-tech-only equilibrium exists
  bool flagged = false;   // no existence anywhere, or existence pattern not monotone
  std::vector<PhiScanEntry> entries;
};

// Scans phi over the grid (sorted ascending). With `recalibrate`, w_h and y_h are reset at each
// phi so that W_q = 1 and W_u = -1 continue to hold.
inline PhiScanResult corollary_phi_scan(const ModelParams& params, const SignalModel& signal,
                                        std::vector<double> phi_grid, bool recalibrate = true,
                                        const SolverOptions& opt = {}) {
  if (!(params.r > 0.0)) throw PreconditionError("phi scan requires r > 0");
  if (phi_grid.empty()) throw PreconditionError("phi scan needs a non-empty grid");
  std::sort(phi_grid.begin(), phi_grid.end());
  PhiScanResult res;
  for (double phi : phi_grid) {
    PhiScanEntry e;
    e.phi = phi;
    try {
      ModelParams p = params;
      if (recalibrate) {
        p = calibrate_to_unit_values(p.beta, phi, p.r, p.y_l, p.w_l, p.b, p.psi, p.K);
        p.lambda_f = params.lambda_f;
        p.lambda_m = params.lambda_m;
      } else {
        p.phi = phi;
      }
      const auto set = find_all_equilibria(make_model(p, signal), opt);
      e.high_tech_only = std::any_of(set.equilibria.begin(), set.equilibria.end(),
                                     [](const Equilibrium& q) {
                                       return q.kind == EquilibriumKind::HighTechOnly;
                                     });
    } catch (const Error& err) {
      e.valid = false;
      e.note = err.what();
    }
    res.entries.push_back(e);
  }
  bool found = false;
  for (const auto& e : res.entries) {
    if (!e.valid) continue;
    if (e.high_tech_only && !found) {
      found = true;
      res.phi_star = e.phi;
    } else if (!e.high_tech_only && found) {
      res.flagged = true;
    }
  }
  if (!found) {
    res.phi_star = phi_grid.back();
    res.flagged = true;
  }
  return res;
}

}  // namespace segmarket
