#pragma once

#include "segmarket/errors.hpp"
#include "segmarket/signal.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace segmarket {

struct ModelParams {
  double beta = 0.9;
  double phi = 0.06;
  double r = 0.75;
  double psi = 0.25;
  double b = 0.2;
  double y_l = 0.5;
  double w_l = 0.495;
  double w_h = 0.7885;
  double y_h = 0.9425;
  double K = 0.01;
  double lambda_f = 0.5;
  double lambda_m = 0.5;
};

struct Valuations {
  double W_q = 0.0;
  double W_u = 0.0;
  double W_l = 0.0;
  double V_star = 0.0;
  double Q_star = 0.0;
};

namespace detail {
inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ParamDomain(msg);
}
}  // namespace detail

// Throws ParamDomain naming the first violated restriction.
inline void validate_params(const ModelParams& p) {
  using detail::require;
  require(p.beta > 0.0 && p.beta < 1.0, "beta must lie in (0,1)");
  require(p.phi > 0.0 && p.phi <= 1.0, "phi must lie in (0,1]");
  require(p.r >= 0.0 && p.r <= 1.0, "r must lie in [0,1]");
  require(p.psi > 0.0 && p.psi < 1.0, "psi must lie in (0,1)");
  require(p.b >= 0.0, "b must be non-negative");
  require(p.K > 0.0, "K must be positive");
  require(p.y_l - p.w_l > 0.0, "need y_l > w_l");
  require(p.y_h - p.w_h > 0.0, "need y_h > w_h");
  require(p.b <= p.w_l && p.w_l < p.w_h, "need b <= w_l < w_h");
  require(p.w_l - p.b <= p.beta * (1.0 - p.phi) * (p.w_h - p.b),
          "need w_l - b <= beta(1-phi)(w_h - b)");
  require(p.lambda_f >= 0.0 && p.lambda_m >= 0.0, "group masses must be non-negative");
  require(std::abs(p.lambda_f + p.lambda_m - 1.0) <= 1e-12, "group masses must sum to 1");
}

// Worker's continuation value that makes accepting a low-tech job and waiting equally good,
// in per-period units: the lifetime value is v_star / (1 - beta).
inline double v_star(const ModelParams& p) {
  return (p.w_l - (1.0 - (1.0 - p.phi) * p.beta) * p.b) / ((1.0 - p.phi) * p.beta);
}

inline Valuations derive_valuations(const ModelParams& p) {
  validate_params(p);
  Valuations v;
  const double keep = p.beta * (1.0 - p.phi);
  v.W_u = -p.w_h / (1.0 - keep * (1.0 - p.r));
  v.W_q = (p.y_h - p.w_h) / (1.0 - keep);
  v.W_l = (p.y_l - p.w_l) / (1.0 - keep);
  v.V_star = v_star(p);
  v.Q_star = (v.V_star - p.w_l) / (p.w_h - p.w_l);
  if (!(v.Q_star >= -1e-14 && v.Q_star <= 1.0 + 1e-14))
    throw ParamDomain("critical hire probability Q* = " + std::to_string(v.Q_star) +
                      " lies outside [0,1]");
  v.Q_star = std::clamp(v.Q_star, 0.0, 1.0);
  return v;
}

// Chooses w_h and y_h so that W_u = -1 and W_q = 1.
inline ModelParams calibrate_to_unit_values(double beta, double phi, double r, double y_l,
                                            double w_l, double b, double psi = 0.25,
                                            double K = 0.01) {
  ModelParams p;
  p.beta = beta;
  p.phi = phi;
  p.r = r;
  p.y_l = y_l;
  p.w_l = w_l;
  p.b = b;
  p.psi = psi;
  p.K = K;
  p.w_h = 1.0 - beta * (1.0 - phi) * (1.0 - r);
  p.y_h = p.w_h + (1.0 - beta * (1.0 - phi));
  validate_params(p);
  return p;
}

// Parameters, signal technology and derived values bundled for the solvers.
struct Model {
  ModelParams params;
  SignalModel signal;
  Valuations values;

  HireProbabilities hire(double pi) const {
    return hire_probabilities(signal, pi, values.W_q, values.W_u);
  }
  double A_q(double pi) const { return hire(pi).A_q; }
  double profit(double pi) const {
    return expected_hire_profit(signal, pi, values.W_q, values.W_u);
  }
};

inline Model make_model(const ModelParams& params, SignalModel signal = SignalModel::triangular()) {
  Valuations v = derive_valuations(params);
  return Model{params, std::move(signal), v};
}

// Whether a firm meeting a worker for sure would cover the vacancy cost in its better sector
// at pool quality pi.
inline bool entry_viable(const Model& m, double pi) {
  return m.params.beta * std::max(m.values.W_l, m.profit(pi)) > m.params.K;
}

}  // namespace segmarket
