#include "catch_amalgamated.hpp"

#include "segmarket/valuation.hpp"

#include <cmath>
#include <random>

using namespace segmarket;
using Catch::Matchers::WithinAbs;

TEST_CASE("Example 1 valuations") {
  ModelParams p;  // defaults are Example 1
  const auto v = derive_valuations(p);
  CHECK_THAT(v.W_q, WithinAbs(1.0, 1e-12));
  CHECK_THAT(v.W_u, WithinAbs(-1.0, 1e-12));
  CHECK_THAT(v.W_l, WithinAbs(0.032468, 1e-6));
  CHECK_THAT(v.Q_star, WithinAbs(0.1830, 5e-4));
}

TEST_CASE("V* makes accepting a low-tech job and waiting equally good") {
  // v_star is per period; the lifetime value V enters the worker's comparison.
  ModelParams p;
  for (double beta : {0.8, 0.9, 0.99})
    for (double phi : {0.02, 0.06, 0.2}) {
      p.beta = beta;
      p.phi = phi;
      const double V = v_star(p) / (1.0 - beta);
      const double accept = (p.w_l + phi * beta * V) / (1.0 - (1.0 - phi) * beta);
      const double wait = p.b + beta * V;
      CHECK_THAT(accept, WithinAbs(wait, 1e-12 * wait));
      // Q* leaves the worker indifferent when V0 = V
      const double Q = derive_valuations(p).Q_star;
      const double high = (p.w_h + phi * beta * V) / (1.0 - (1.0 - phi) * beta);
      CHECK_THAT(Q * high + (1.0 - Q) * wait, WithinAbs(V, 1e-12 * V));
    }
}

TEST_CASE("w_l = b puts Q* on the zero boundary") {
  ModelParams p;
  p.b = p.w_l;
  CHECK_THAT(derive_valuations(p).Q_star, WithinAbs(0.0, 1e-14));
}

TEST_CASE("calibration hand values") {
  const auto p1 = calibrate_to_unit_values(0.9, 0.06, 0.75, 0.5, 0.495, 0.2);
  CHECK_THAT(p1.w_h, WithinAbs(0.7885, 1e-12));
  CHECK_THAT(p1.y_h, WithinAbs(0.9425, 1e-12));
  CHECK_THAT(derive_valuations(p1).Q_star, WithinAbs(0.1830, 5e-4));
  const auto p2 = calibrate_to_unit_values(0.99, 0.08, 0.75, 0.5, 0.495, 0.2);
  CHECK_THAT(p2.w_h, WithinAbs(1.0 - 0.99 * 0.92 * 0.25, 1e-12));
  CHECK_THAT(p2.w_h, WithinAbs(0.7723, 1e-4));
  const auto p3 = calibrate_to_unit_values(0.999999, 1e-6, 1.0, 0.5, 0.495, 0.2);
  CHECK_THAT(p3.w_h, WithinAbs(1.0, 1e-12));
}

TEST_CASE("calibration round trip on random admissible draws") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> beta(0.8, 0.999), phi(0.01, 0.3), r(0.05, 1.0);
  int done = 0;
  while (done < 100) {
    ModelParams p;
    try {
      p = calibrate_to_unit_values(beta(rng), phi(rng), r(rng), 0.5, 0.495, 0.2);
    } catch (const ParamDomain&) {
      continue;
    }
    const auto v = derive_valuations(p);
    CHECK_THAT(v.W_q, WithinAbs(1.0, 1e-12));
    CHECK_THAT(v.W_u, WithinAbs(-1.0, 1e-12));
    ++done;
  }
}

TEST_CASE("parameter restrictions are enforced") {
  auto bad = [](auto mutate) {
    ModelParams p;
    mutate(p);
    return p;
  };
  CHECK_THROWS_AS(derive_valuations(bad([](auto& p) { p.beta = 1.0; })), ParamDomain);
  CHECK_THROWS_AS(derive_valuations(bad([](auto& p) { p.phi = 0.0; })), ParamDomain);
  CHECK_THROWS_AS(derive_valuations(bad([](auto& p) { p.r = 1.5; })), ParamDomain);
  CHECK_THROWS_AS(derive_valuations(bad([](auto& p) { p.psi = 1.0; })), ParamDomain);
  CHECK_THROWS_AS(derive_valuations(bad([](auto& p) { p.y_l = p.w_l; })), ParamDomain);
  CHECK_THROWS_AS(derive_valuations(bad([](auto& p) { p.b = 0.6; })), ParamDomain);
  CHECK_THROWS_AS(derive_valuations(bad([](auto& p) { p.w_l = 0.7; })), ParamDomain);
  CHECK_THROWS_AS(derive_valuations(bad([](auto& p) { p.K = 0.0; })), ParamDomain);
  CHECK_THROWS_AS(derive_valuations(bad([](auto& p) { p.lambda_m = 0.6; })), ParamDomain);
  CHECK_THROWS_AS(calibrate_to_unit_values(0.5, 0.5, 0.75, 0.5, 0.495, 0.2), ParamDomain);
}

TEST_CASE("entry viability compares the better sector with the vacancy cost") {
  const auto m = make_model(ModelParams{});
  CHECK(entry_viable(m, 0.2));
  ModelParams p;
  p.K = 1.0;
  CHECK_FALSE(entry_viable(make_model(p), 0.2));
}
