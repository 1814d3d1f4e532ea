#include "catch_amalgamated.hpp"

#include "segmarket/groups.hpp"
#include "segmarket/simulator.hpp"

#include <cmath>

using namespace segmarket;
using Catch::Matchers::WithinAbs;

namespace {

Model calibrated(double beta, double phi, double r, double psi, double lambda_m = 0.5) {
  auto p = calibrate_to_unit_values(beta, phi, r, 0.5, 0.495, 0.2, psi);
  p.lambda_m = lambda_m;
  p.lambda_f = 1.0 - lambda_m;
  return make_model(p);
}

Model example1(double lambda_m = 0.5) { return calibrated(0.9, 0.06, 0.75, 0.25, lambda_m); }
Model example2(double lambda_m = 0.5) { return calibrated(0.99, 0.08, 0.75, 0.25, lambda_m); }

// Triangular signal with unit values: A_q = π(2-π), A_u = π², profit = π².
double Aq(double pi) { return pi * (2.0 - pi); }
double Au(double pi) { return pi * pi; }

// Steady-state condition of a group that rejects low-tech offers, with p = Q*/A_q(π^f).
double male_ss(const Model& m, double pf, double pm) {
  const auto& p = m.params;
  const double pp = m.values.Q_star / Aq(pf);
  return 1.0 + pp * Au(pm) / (p.phi + (1.0 - p.phi) * p.r) + (1.0 - pp) / p.phi -
         (1.0 - p.psi) / (1.0 - pm) * pm / p.psi * (1.0 + pp * Aq(pm) / p.phi);
}

// Acceptance of the mixing group from the entry indifference, then its steady state.
double female_alpha(const Model& m, double pf, double pm) {
  const double lf = m.params.lambda_f, lm = m.params.lambda_m, W = m.values.W_l;
  return (lf * (pf * pf - (1.0 - pf) * W) + lm * (pm * pm - (1.0 - pm) * W)) / (lf * pf * W);
}

double female_ss(const Model& m, double pf, double pm) {
  const auto& p = m.params;
  const double Q = m.values.Q_star;
  const double pp = Q / Aq(pf);
  return 1.0 + pp * Au(pf) / (p.phi + (1.0 - p.phi) * p.r) + (1.0 - pp) / p.phi -
         (1.0 - p.psi) / (1.0 - pf) * pf / p.psi *
             (1.0 + Q / p.phi + (1.0 - pp) / p.phi * female_alpha(m, pf, pm));
}

}  // namespace

TEST_CASE("symmetric lifting keeps every baseline equilibrium") {
  const auto s1 = lift_symmetric(example1());
  REQUIRE(s1.size() == 1);
  CHECK(s1[0].kind == GroupKind::Symmetric);
  CHECK(s1[0].baseline_kind == EquilibriumKind::TwoSectorReject);
  CHECK(s1[0].pi_f == s1[0].pi_m);
  CHECK(s1[0].diagnostics.entry_residual < 1e-12);
  CHECK(lift_symmetric(example2()).size() == 3);

  const auto low = lift_symmetric(calibrated(0.99, 0.15, 0.75, 0.075));
  REQUIRE(low.size() == 1);
  CHECK(low[0].kind == GroupKind::GroupLowTechOnly);
  CHECK(low[0].pi_f == 0.075);
  CHECK(low[0].pi_m == 0.075);
}

TEST_CASE("entry gap vanishes at symmetric two-sector equilibria") {
  const auto m = example2();
  for (const auto& e : lift_symmetric(m))
    CHECK(std::abs(group_entry_gap(m, e.pi_f, e.pi_m, e.alpha_f, e.alpha_m)) < 1e-12);
}

TEST_CASE("mirror swaps group labels") {
  const auto m = example2();
  auto e = make_group_equilibrium(m, GroupKind::AsymPure, 0.2, 0.3, 1.0, 0.0, 0.4);
  const auto r = mirror(e);
  CHECK(r.pi_f == 0.3);
  CHECK(r.alpha_m == 1.0);
  CHECK(r.diagnostics.Q_gap_f == e.diagnostics.Q_gap_m);
  CHECK(mirror(r).pi_f == e.pi_f);
}

TEST_CASE("worker condition helper") {
  CHECK(worker_consistent(1.0, -0.1, 1e-9));
  CHECK_FALSE(worker_consistent(1.0, 0.1, 1e-9));
  CHECK(worker_consistent(0.0, 0.1, 1e-9));
  CHECK_FALSE(worker_consistent(0.0, -0.1, 1e-9));
  CHECK(worker_consistent(0.5, 1e-12, 1e-9));
  CHECK_FALSE(worker_consistent(0.5, 1e-3, 1e-9));
}

TEST_CASE("female-mixing candidates solve both steady-state loci") {
  const auto m = example1();
  const auto res = solve_asym_fem_mixed(m);
  std::vector<GroupEquilibrium> all = res.equilibria;
  for (const auto& c : res.rejected) all.push_back(c.candidate);
  REQUIRE_FALSE(all.empty());
  bool oriented = false;
  for (const auto& e : all) {
    INFO("pi_f=" << e.pi_f << " pi_m=" << e.pi_m);
    CHECK(std::abs(male_ss(m, e.pi_f, e.pi_m)) < 1e-8);
    CHECK(std::abs(female_ss(m, e.pi_f, e.pi_m)) < 1e-8);
    CHECK_THAT(e.alpha_f, WithinAbs(female_alpha(m, e.pi_f, e.pi_m), 1e-10));
    CHECK(e.diagnostics.Q_gap_f == Catch::Approx(0.0).margin(1e-12));
    oriented = oriented || e.pi_m > e.pi_f;
  }
  CHECK(oriented);
  for (const auto& e : res.equilibria) {
    CHECK(e.alpha_f > 0.0);
    CHECK(e.alpha_f < 1.0);
    CHECK(e.diagnostics.Q_gap_m > 0.0);
  }
}

TEST_CASE("male-mixing equilibrium at Example 2") {
  const auto m = example2();
  const auto res = solve_asym_male_mixed(m);
  REQUIRE(res.equilibria.size() >= 1);
  REQUIRE(res.min_pAq_f.has_value());
  for (const auto& e : res.equilibria) {
    CHECK(e.pi_m > e.pi_f);
    CHECK(e.alpha_f == 1.0);
    CHECK(e.alpha_m > 0.0);
    CHECK(e.alpha_m < 1.0);
    CHECK(e.diagnostics.Q_gap_f < 0.0);
    CHECK(std::abs(e.diagnostics.Q_gap_m) < 1e-8);
    CHECK(e.diagnostics.residual_f < 1e-8);
    CHECK(e.diagnostics.residual_m < 1e-8);
    CHECK(e.diagnostics.entry_residual < 1e-8);
    // independent entry check with the π² profit
    const double W = m.values.W_l;
    const double low = 0.5 * (e.pi_f + 1.0 - e.pi_f) * W + 0.5 * (e.pi_m * e.alpha_m + 1.0 - e.pi_m) * W;
    const double high = 0.5 * e.pi_f * e.pi_f + 0.5 * e.pi_m * e.pi_m;
    CHECK_THAT(low, WithinAbs(high, 1e-8));
    const auto o = group_flow_oracle(oracle_policy(m, e), m);
    CHECK_THAT(o.pi_f, WithinAbs(e.pi_f, 1e-6));
    CHECK_THAT(o.pi_m, WithinAbs(e.pi_m, 1e-6));
    CHECK(*res.min_pAq_f < m.values.Q_star);
  }
}

TEST_CASE("pure asymmetric candidates satisfy the three equations") {
  for (const auto& m : {example1(), example2()}) {
    const auto res = solve_asym_pure(m);
    std::vector<GroupEquilibrium> all = res.equilibria;
    for (const auto& c : res.rejected) all.push_back(c.candidate);
    for (const auto& e : all) {
      CHECK(e.alpha_f == 1.0);
      CHECK(e.alpha_m == 0.0);
      CHECK(e.diagnostics.residual_f < 1e-8);
      CHECK(e.diagnostics.residual_m < 1e-8);
      CHECK(std::abs(group_entry_gap(m, e.pi_f, e.pi_m, 1.0, 0.0)) < 1e-8);
    }
    for (const auto& e : res.equilibria) {
      CHECK(e.diagnostics.Q_gap_f <= 0.0);
      CHECK(e.diagnostics.Q_gap_m >= 0.0);
    }
  }
}

TEST_CASE("one group of zero mass leaves nothing to mix") {
  const auto m = example2(0.0);
  CHECK(solve_asym_fem_mixed(m).equilibria.empty());
  CHECK(solve_asym_male_mixed(m).equilibria.empty());
}

TEST_CASE("group-mass sweep around the symmetric mixed equilibrium") {
  const auto m = example2();
  const auto r = prop6_sweep(m);
  CHECK_THAT(r.pi_star, WithinAbs(0.2355, 5e-4));
  CHECK(r.valid_count >= 2);
  CHECK(r.lambda_m_increasing);
  const double W = m.values.W_l;
  for (const auto& row : r.rows) {
    if (!row.valid) continue;
    CHECK(row.pi_f < r.pi_star);
    CHECK(row.pi_m > r.pi_star);
    CHECK_THAT(row.lambda_f + row.lambda_m, WithinAbs(1.0, 1e-15));
    // λ^m from the entry indifference with profit π²
    const double lm = (W - row.pi_f * row.pi_f) /
                      (row.pi_m * row.pi_m - row.pi_f * row.pi_f + row.pi_m * W);
    CHECK_THAT(row.lambda_m, WithinAbs(lm, 1e-10));
  }
  CHECK_THROWS_AS(prop6_sweep(example1()), NoSymmetricMixed);
}

TEST_CASE("sweep masses plugged back reproduce an asymmetric equilibrium") {
  const auto base = example2();
  const auto r = prop6_sweep(base);
  const Prop6Row* pick = nullptr;
  for (const auto& row : r.rows)
    if (row.valid && (!pick || row.lambda_m > pick->lambda_m)) pick = &row;
  REQUIRE(pick != nullptr);
  auto prm = base.params;
  prm.lambda_m = pick->lambda_m;
  prm.lambda_f = 1.0 - pick->lambda_m;
  const auto m = make_model(prm);
  const auto e = make_group_equilibrium(m, GroupKind::AsymPure, pick->pi_f, pick->pi_m, 1.0, 0.0,
                                        pick->p);
  CHECK(e.diagnostics.residual_f < 1e-8);
  CHECK(e.diagnostics.residual_m < 1e-8);
  CHECK(e.diagnostics.entry_residual < 1e-8);
  GroupOptions go;
  go.outer_grid = 2000;
  const auto res = solve_asym_pure(m, go);
  bool found = false;
  for (const auto& s : res.equilibria)
    if (std::abs(s.pi_f - pick->pi_f) < 1e-6 && std::abs(s.pi_m - pick->pi_m) < 1e-6 &&
        std::abs(s.p - pick->p) < 1e-6)
      found = true;
  CHECK(found);
}

TEST_CASE("stationary pool solves the steady state at fixed hire rates") {
  const auto m = example2();
  for (double pi : {0.15, 0.25, 0.4})
    for (double p : {0.2, 0.7})
      for (double a : {0.0, 0.6, 1.0}) {
        const auto h = m.hire(pi);
        const auto s = stationary_pool(m.params, h.A_q, h.A_u, p, a);
        CHECK(std::abs(g_at_rates(m.params, s.pi, a, p, h.A_q, h.A_u)) < 1e-10);
      }
}

TEST_CASE("quota leaves no asymmetric survivors") {
  for (auto mode : {QuotaMode::Flow, QuotaMode::Stock})
    for (double lm : {0.3, 0.5, 0.7, 0.99}) {
      QuotaOptions qo;
      qo.mode = mode;
      const auto q = quota_check(example1(lm), qo);
      INFO(to_string(mode) << " lambda_m=" << lm);
      CHECK(q.asymmetric_survivors.empty());
      CHECK_FALSE(q.constrained_solutions.empty());
      for (const auto& e : q.constrained_solutions) CHECK(std::abs(e.pi_f - e.pi_m) < 1e-7);
    }
}

TEST_CASE("high-tech-only asymmetric pairs pass the entry test") {
  const auto m = calibrated(0.99, 0.15, 0.75, 0.75);
  const auto res = solve_asym_high_only(m);
  for (const auto& e : res.equilibria) {
    CHECK(e.p == 1.0);
    CHECK(e.diagnostics.residual_f < 1e-8);
    CHECK(e.diagnostics.residual_m < 1e-8);
    CHECK(group_entry_gap(m, e.pi_f, e.pi_m, e.alpha_f, e.alpha_m) <= 1e-8);
  }
}
