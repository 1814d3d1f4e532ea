#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

namespace segmarket::roots {

// Bisection on [lo, hi] given f(lo) and f(hi) of opposite sign (or one of them zero).
// Stops once the bracket is narrower than tol or stops shrinking in floating point.
template <class F>
double bisect(F&& f, double lo, double hi, double f_lo, double tol = 0.0) {
  if (f_lo == 0.0) return lo;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi || hi - lo <= tol) break;
    const double f_mid = f(mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

template <class F>
double bisect(F&& f, double lo, double hi) {
  return bisect(f, lo, hi, f(lo));
}

// Every sign change of f on a uniform grid of `intervals` cells over [a, b], refined by
// bisection. Exact zeros on grid nodes are reported once. Non-finite samples break the
// bracket chain (no root is reported across them).
template <class F>
std::vector<double> scan_roots(F&& f, double a, double b, std::size_t intervals,
                               double tol = 0.0) {
  std::vector<double> out;
  if (!(b > a) || intervals == 0) return out;
  const double h = (b - a) / static_cast<double>(intervals);
  double x_prev = a;
  double f_prev = f(a);
  if (f_prev == 0.0) out.push_back(a);
  for (std::size_t i = 1; i <= intervals; ++i) {
    const double x = (i == intervals) ? b : a + h * static_cast<double>(i);
    const double fx = f(x);
    if (std::isfinite(f_prev) && std::isfinite(fx)) {
      if (fx == 0.0) {
        out.push_back(x);
      } else if (f_prev != 0.0 && (fx < 0.0) != (f_prev < 0.0)) {
        out.push_back(bisect(f, x_prev, x, f_prev, tol));
      }
    }
    x_prev = x;
    f_prev = fx;
  }
  return out;
}

template <std::size_t N>
struct NewtonResult {
  std::array<double, N> x{};
  double residual_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool singular = false;
};

// Damped Newton with a central-difference Jacobian. Steps are halved until the residual
// norm decreases; `clamp` (if given) projects iterates back into the domain.
template <std::size_t N, class F, class Clamp>
NewtonResult<N> damped_newton(F&& f, std::array<double, N> x0, Clamp&& clamp,
                              double tol = 1e-13, int max_iter = 100, double fd_step = 1e-7) {
  using Vec = Eigen::Matrix<double, static_cast<int>(N), 1>;
  using Mat = Eigen::Matrix<double, static_cast<int>(N), static_cast<int>(N)>;
  auto eval = [&](const std::array<double, N>& x) {
    const std::array<double, N> r = f(x);
    Vec v;
    for (std::size_t i = 0; i < N; ++i) v(static_cast<int>(i)) = r[i];
    return v;
  };

  NewtonResult<N> res;
  res.x = x0;
  Vec r = eval(res.x);
  res.residual_norm = r.template lpNorm<Eigen::Infinity>();
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it;
    if (!std::isfinite(res.residual_norm)) return res;
    if (res.residual_norm < tol) {
      res.converged = true;
      return res;
    }
    Mat jac;
    for (std::size_t j = 0; j < N; ++j) {
      std::array<double, N> xp = res.x;
      std::array<double, N> xm = res.x;
      xp[j] += fd_step;
      xm[j] -= fd_step;
      jac.col(static_cast<int>(j)) = (eval(xp) - eval(xm)) / (2.0 * fd_step);
    }
    Eigen::FullPivLU<Mat> lu(jac);
    if (!lu.isInvertible() || !jac.allFinite()) {
      res.singular = true;
      return res;
    }
    const Vec step = lu.solve(r);
    double damping = 1.0;
    bool improved = false;
    for (int k = 0; k < 30; ++k, damping *= 0.5) {
      std::array<double, N> trial = res.x;
      for (std::size_t i = 0; i < N; ++i) trial[i] -= damping * step(static_cast<int>(i));
      trial = clamp(trial);
      const Vec rt = eval(trial);
      const double nt = rt.template lpNorm<Eigen::Infinity>();
      if (std::isfinite(nt) && nt < res.residual_norm) {
        res.x = trial;
        r = rt;
        res.residual_norm = nt;
        improved = true;
        break;
      }
    }
    if (!improved) {
      res.converged = res.residual_norm < tol;
      return res;
    }
  }
  res.converged = res.residual_norm < tol;
  return res;
}

template <std::size_t N, class F>
NewtonResult<N> damped_newton(F&& f, std::array<double, N> x0, double tol = 1e-13) {
  return damped_newton<N>(f, x0, [](const std::array<double, N>& x) { return x; }, tol);
}

}  // namespace segmarket::roots
