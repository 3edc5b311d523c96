#pragma once

// Shared numerical kernels: Gauss-Legendre rules, adaptive log-space
// quadrature, shape-preserving interpolation, an adaptive RK4 driver and
// small derivative-free optimizers.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "resetsearch/error.hpp"
#include "resetsearch/logspace.hpp"

namespace resetsearch::numeric {

// Nodes and weights on [-1, 1]; cached per order, thread-safe to read after
// first construction within one thread of use.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre(int n);

// log of integral_a^b exp(g(t)) dt over one panel: fixed-order Gauss rule
// evaluated in log space.
double log_int_gl_panel(const std::function<double(double)>& g, double a, double b, int order = 15);

// Adaptive bisection of log_int_gl_panel until the split panel agrees with
// the whole panel to rel_tol. log_floor allows early acceptance of panels
// that cannot matter against an accumulated total (pass kNegInf to disable).
double log_int_adaptive(const std::function<double(double)>& g, double a, double b,
                        double rel_tol = 1e-11, int max_depth = 36, double log_floor = kNegInf);

// Fritsch-Carlson monotone cubic interpolant. Used where overshoot would be
// harmful (tabulated rates, log-cumulative lookups).
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> xs, std::vector<double> ys);
  double eval(double x) const;
  double deriv(double x) const;
  bool empty() const { return xs_.empty(); }
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }

 private:
  std::vector<double> xs_, ys_, ds_;
  std::size_t locate(double x) const;
};

// Cubic Hermite interpolant with caller-supplied derivatives; exact for the
// (log phi, psi) pairs produced by the Riccati integrator.
class HermiteSpline {
 public:
  HermiteSpline() = default;
  HermiteSpline(std::vector<double> xs, std::vector<double> ys, std::vector<double> ds);
  double eval(double x) const;
  bool empty() const { return xs_.empty(); }

 private:
  std::vector<double> xs_, ys_, ds_;
  std::size_t locate(double x) const;
};

// Adaptive classic RK4 with step-doubling error control and local
// extrapolation. tol is per unit length; observe is called on every accepted
// node including the initial one.
template <std::size_t N>
using OdeRhs = std::function<std::array<double, N>(double, const std::array<double, N>&)>;

template <std::size_t N>
void rk4_adaptive(const OdeRhs<N>& f, double x0, double x1, std::array<double, N> y,
                  double tol, const std::function<void(double, const std::array<double, N>&)>& observe,
                  double h_init = 0.0, double h_max = 0.0);

struct GoldenResult {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

// Golden-section minimization on [lo, hi]; trace receives every evaluation.
GoldenResult golden_section(const std::function<double(double)>& f, double lo, double hi,
                            double x_tol, int max_iter = 200,
                            const std::function<void(double, double)>& trace = nullptr);

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, const std::vector<double>& step,
                             double f_tol, int max_iter,
                             const std::function<void(const std::vector<double>&, double)>& trace = nullptr);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double rms_residual = 0.0;
};

LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

// --- template implementation ---

template <std::size_t N>
void rk4_adaptive(const OdeRhs<N>& f, double x0, double x1, std::array<double, N> y,
                  double tol, const std::function<void(double, const std::array<double, N>&)>& observe,
                  double h_init, double h_max) {
  const double dir = x1 >= x0 ? 1.0 : -1.0;
  const double span = std::fabs(x1 - x0);
  if (span == 0.0) {
    if (observe) observe(x0, y);
    return;
  }
  if (h_max <= 0.0) h_max = std::min(span, 0.2);
  double h = h_init > 0.0 ? std::min(h_init, h_max) : std::min(h_max, span / 16.0);

  auto step = [&f](double x, const std::array<double, N>& u, double hh) {
    std::array<double, N> k1 = f(x, u), u2, u3, u4;
    for (std::size_t i = 0; i < N; ++i) u2[i] = u[i] + 0.5 * hh * k1[i];
    std::array<double, N> k2 = f(x + 0.5 * hh, u2);
    for (std::size_t i = 0; i < N; ++i) u3[i] = u[i] + 0.5 * hh * k2[i];
    std::array<double, N> k3 = f(x + 0.5 * hh, u3);
    for (std::size_t i = 0; i < N; ++i) u4[i] = u[i] + hh * k3[i];
    std::array<double, N> k4 = f(x + hh, u4);
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i)
      out[i] = u[i] + hh / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
  };

  double x = x0;
  if (observe) observe(x, y);
  // Hard cap on step count; the tolerance controller decides h within it.
  for (int guard = 0; guard < 2000000 && dir * (x1 - x) > 0.0; ++guard) {
    double hh = std::min(h, std::fabs(x1 - x)) * dir;
    std::array<double, N> big = step(x, y, hh);
    std::array<double, N> mid = step(x, y, 0.5 * hh);
    std::array<double, N> two = step(x + 0.5 * hh, mid, 0.5 * hh);
    double err = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < N; ++i) {
      err = std::max(err, std::fabs(two[i] - big[i]) / 15.0);
      scale = std::max(scale, std::fabs(two[i]));
    }
    double allow = tol * std::fabs(hh) * scale;
    // The floor-size accept is the escape across a value jump in f, where the
    // per-unit-length estimate stays proportional to allow for every h and no
    // step would otherwise be taken.
    if (err <= allow || std::fabs(hh) <= 1e-12) {
      for (std::size_t i = 0; i < N; ++i) y[i] = two[i] + (two[i] - big[i]) / 15.0;
      x += hh;
      if (observe) observe(x, y);
      if (err <= allow) {
        double grow = err > 0.0 ? 0.9 * std::pow(allow / err, 0.2) : 2.0;
        h = std::min(h_max, std::max(1e-13, std::fabs(hh) * std::min(grow, 2.5)));
      } else {
        // Floor-size escape accept: the estimate never meets the per-length
        // allowance at any h, which happens when the stencil straddles a value
        // jump in f and again at roundoff scale. The jump is now behind x, so
        // restart the controller rather than extrapolate from a corrupt err.
        h = h_max;
      }
    } else {
      double shrink = 0.9 * std::pow(allow / err, 0.25);
      h = std::max(1e-13, std::fabs(hh) * std::max(shrink, 0.1));
    }
  }
  if (dir * (x1 - x) > 0.0)
    throw Error(ErrorCode::GridTooCoarse,
                "step controller stalled at x = " + std::to_string(x) + " before reaching " +
                    std::to_string(x1));
}

}  // namespace resetsearch::numeric
