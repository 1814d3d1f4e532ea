#pragma once

#include "segmarket/errors.hpp"
#include "segmarket/roots.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace segmarket {

enum class SignalKind { Triangular, Generic };

using ScalarFn = std::function<double(double)>;

// Signal technology: densities and CDFs of the interview signal for qualified (q) and
// unqualified (u) workers on [0, 1], with a strictly increasing likelihood ratio f_q/f_u.
class SignalModel {
public:
  // f_q = 2θ, f_u = 2(1-θ).
  static SignalModel triangular() {
    SignalModel m;
    m.kind_ = SignalKind::Triangular;
    m.name_ = "triangular";
    m.f_q_ = [](double t) { return 2.0 * t; };
    m.f_u_ = [](double t) { return 2.0 * (1.0 - t); };
    m.F_q_ = [](double t) { return t * t; };
    m.F_u_ = [](double t) { return 2.0 * t - t * t; };
    m.inv_q_ = [](double u) { return std::sqrt(u); };
    m.inv_u_ = [](double u) { return 1.0 - std::sqrt(1.0 - u); };
    return m;
  }

  // User-supplied densities and CDFs. Validates the CDF endpoints, first-order dominance and
  // the monotone likelihood ratio on a 1000-cell grid; throws ParamDomain on failure.
  static SignalModel generic(ScalarFn f_q, ScalarFn f_u, ScalarFn F_q, ScalarFn F_u,
                             std::string name = "generic", ScalarFn inverse_F_q = {},
                             ScalarFn inverse_F_u = {}) {
    SignalModel m;
    m.kind_ = SignalKind::Generic;
    m.name_ = std::move(name);
    m.f_q_ = std::move(f_q);
    m.f_u_ = std::move(f_u);
    m.F_q_ = std::move(F_q);
    m.F_u_ = std::move(F_u);
    m.inv_q_ = std::move(inverse_F_q);
    m.inv_u_ = std::move(inverse_F_u);
    m.validate();
    return m;
  }

  // f_q = (k+1)θ^k, f_u = (k+1)(1-θ)^k. k = 1 reproduces the triangular densities through
  // the generic code path.
  static SignalModel power(double k) {
    if (!(k > 0.0)) throw ParamDomain("power signal needs exponent k > 0");
    const double e = 1.0 / (k + 1.0);
    return generic([k](double t) { return (k + 1.0) * std::pow(t, k); },
                   [k](double t) { return (k + 1.0) * std::pow(1.0 - t, k); },
                   [k](double t) { return std::pow(t, k + 1.0); },
                   [k](double t) { return 1.0 - std::pow(1.0 - t, k + 1.0); },
                   "power(" + std::to_string(k) + ")",
                   [e](double u) { return std::pow(u, e); },
                   [e](double u) { return 1.0 - std::pow(1.0 - u, e); });
  }

  // Densities tabulated at nodes 0 = θ_0 < ... < θ_n = 1, interpolated linearly and
  // renormalised to integrate to one. CDFs are the exact integrals of the interpolants.
  static SignalModel tabulated(std::vector<double> theta, std::vector<double> f_q,
                               std::vector<double> f_u) {
    if (theta.size() < 2 || f_q.size() != theta.size() || f_u.size() != theta.size())
      throw ParamDomain("tabulated signal needs matching theta/f_q/f_u arrays of length >= 2");
    if (std::abs(theta.front()) > 1e-12 || std::abs(theta.back() - 1.0) > 1e-12)
      throw ParamDomain("tabulated signal grid must start at 0 and end at 1");
    for (std::size_t i = 1; i < theta.size(); ++i)
      if (!(theta[i] > theta[i - 1])) throw ParamDomain("tabulated signal grid must be increasing");
    for (std::size_t i = 0; i < theta.size(); ++i)
      if (!(f_q[i] >= 0.0) || !(f_u[i] >= 0.0))
        throw ParamDomain("tabulated densities must be non-negative");
    auto q = std::make_shared<const PiecewiseLinear>(theta, f_q);
    auto u = std::make_shared<const PiecewiseLinear>(theta, f_u);
    return generic([q](double t) { return q->density(t); }, [u](double t) { return u->density(t); },
                   [q](double t) { return q->cdf(t); }, [u](double t) { return u->cdf(t); },
                   "tabulated");
  }

  SignalKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }

  double density_q(double theta) const { return f_q_(theta); }
  double density_u(double theta) const { return f_u_(theta); }
  double cdf_q(double theta) const { return std::clamp(F_q_(theta), 0.0, 1.0); }
  double cdf_u(double theta) const { return std::clamp(F_u_(theta), 0.0, 1.0); }

  // Inverse CDFs used to draw signals. Falls back to bisection on the CDF.
  double quantile_q(double u) const { return inv_q_ ? inv_q_(u) : invert(F_q_, u); }
  double quantile_u(double u) const { return inv_u_ ? inv_u_(u) : invert(F_u_, u); }

private:
  struct PiecewiseLinear {
    std::vector<double> x, y, cum;

    PiecewiseLinear(std::vector<double> xs, std::vector<double> ys)
        : x(std::move(xs)), y(std::move(ys)), cum(x.size(), 0.0) {
      for (std::size_t i = 1; i < x.size(); ++i)
        cum[i] = cum[i - 1] + 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
      const double total = cum.back();
      if (!(total > 0.0)) throw ParamDomain("tabulated density integrates to zero");
      for (auto& v : y) v /= total;
      for (auto& v : cum) v /= total;
    }

    std::size_t cell(double t) const {
      const auto it = std::upper_bound(x.begin(), x.end(), t);
      const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - x.begin(), 1));
      return std::min(i, x.size() - 1) - 1;
    }

    double density(double t) const {
      t = std::clamp(t, 0.0, 1.0);
      const std::size_t i = cell(t);
      const double w = (t - x[i]) / (x[i + 1] - x[i]);
      return y[i] + w * (y[i + 1] - y[i]);
    }

    double cdf(double t) const {
      t = std::clamp(t, 0.0, 1.0);
      const std::size_t i = cell(t);
      const double d = t - x[i];
      const double slope = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
      return cum[i] + y[i] * d + 0.5 * slope * d * d;
    }
  };

  static double invert(const ScalarFn& cdf, double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return roots::bisect([&](double t) { return cdf(t) - u; }, 0.0, 1.0, -u);
  }

  void validate() const {
    constexpr double tol = 1e-12;
    constexpr int cells = 1000;
    if (std::abs(F_q_(0.0)) > 1e-9 || std::abs(F_u_(0.0)) > 1e-9 ||
        std::abs(F_q_(1.0) - 1.0) > 1e-9 || std::abs(F_u_(1.0) - 1.0) > 1e-9)
      throw ParamDomain("signal CDFs must satisfy F(0) = 0 and F(1) = 1");
    for (int i = 0; i < cells; ++i) {
      const double a = static_cast<double>(i) / cells;
      const double b = static_cast<double>(i + 1) / cells;
      const double qa = f_q_(a), qb = f_q_(b), ua = f_u_(a), ub = f_u_(b);
      if (qa < 0.0 || qb < 0.0 || ua < 0.0 || ub < 0.0)
        throw ParamDomain("signal densities must be non-negative");
      // f_q(b)/f_u(b) > f_q(a)/f_u(a), cross-multiplied so zero densities at the ends are fine
      const double lhs = qb * ua;
      const double rhs = qa * ub;
      if (!(lhs - rhs > tol * std::max(1.0, std::max(lhs, rhs))))
        throw ParamDomain("likelihood ratio f_q/f_u is not strictly increasing near theta = " +
                          std::to_string(a));
      if (F_q_(b) > F_u_(b) + tol)
        throw ParamDomain("F_q must not exceed F_u (first-order dominance)");
    }
  }

  SignalKind kind_ = SignalKind::Triangular;
  std::string name_;
  ScalarFn f_q_, f_u_, F_q_, F_u_, inv_q_, inv_u_;
};

// Bayesian posterior that a worker with signal theta is qualified, given prior pi.
inline double posterior(const SignalModel& model, double theta, double pi) {
  const double fq = model.density_q(theta);
  const double fu = model.density_u(theta);
  if (fq == 0.0 && fu == 0.0)
    throw DegenerateSignal("both signal densities vanish at theta = " + std::to_string(theta));
  if (pi <= 0.0) return 0.0;
  if (pi >= 1.0) return 1.0;
  const double num = pi * fq;
  return num / (num + (1.0 - pi) * fu);
}

enum class ThresholdFlag {
  Interior,
  AlwaysHire,      // likelihood ratio at θ = 0 already justifies hiring
  NeverHire,       // not even θ = 1 justifies hiring
  NonPositiveWq,   // hiring a qualified worker is not profitable: threshold 1
  NonNegativeWu,   // hiring an unqualified worker is not costly: threshold 0
};

struct Threshold {
  double value = 1.0;
  ThresholdFlag flag = ThresholdFlag::Interior;
};

// Optimal signal cutoff s(π) of a high-tech firm: hire iff θ >= s(π).
inline Threshold hiring_threshold(const SignalModel& model, double pi, double W_q, double W_u) {
  if (W_q <= 0.0) return {1.0, ThresholdFlag::NonPositiveWq};
  if (W_u >= 0.0) return {0.0, ThresholdFlag::NonNegativeWu};
  pi = std::clamp(pi, 0.0, 1.0);
  // expected hiring gain at θ, up to the positive factor π f_q + (1-π) f_u
  auto gain = [&](double theta) {
    return pi * model.density_q(theta) * W_q + (1.0 - pi) * model.density_u(theta) * W_u;
  };
  const double g0 = gain(0.0);
  if (g0 >= 0.0) return {0.0, ThresholdFlag::AlwaysHire};
  if (gain(1.0) <= 0.0) return {1.0, ThresholdFlag::NeverHire};
  if (model.kind() == SignalKind::Triangular) {
    const double k = -W_u / W_q;
    return {k * (1.0 - pi) / (pi + k * (1.0 - pi)), ThresholdFlag::Interior};
  }
  return {roots::bisect(gain, 0.0, 1.0, g0), ThresholdFlag::Interior};
}

struct HireProbabilities {
  double A_q = 0.0;
  double A_u = 0.0;
  Threshold threshold;
};

// Probabilities that qualified / unqualified workers clear the optimal cutoff.
inline HireProbabilities hire_probabilities(const SignalModel& model, double pi, double W_q,
                                            double W_u) {
  const Threshold s = hiring_threshold(model, pi, W_q, W_u);
  return {1.0 - model.cdf_q(s.value), 1.0 - model.cdf_u(s.value), s};
}

// Hire probabilities at an arbitrary (not necessarily optimal) cutoff.
inline HireProbabilities hire_probabilities_at(const SignalModel& model, double cutoff) {
  return {1.0 - model.cdf_q(cutoff), 1.0 - model.cdf_u(cutoff), {cutoff, ThresholdFlag::Interior}};
}

// Ex ante value of a high-tech match under the optimal cutoff.
inline double expected_hire_profit(const SignalModel& model, double pi, double W_q, double W_u) {
  const auto a = hire_probabilities(model, pi, W_q, W_u);
  return pi * a.A_q * W_q + (1.0 - pi) * a.A_u * W_u;
}

}  // namespace segmarket
