#include "resetsearch/harmonic.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>

#include "resetsearch/error.hpp"

namespace resetsearch::harmonic {

using model::Rate;
using model::Side;

namespace {

// psi of the solution decaying toward -inf, evaluated at distance x_abs from
// the origin: for a locally power-like rate, phi ~ |x|^{1-mu} with
// mu(mu-1)/2 = x^2 r / D gives psi = (mu-1)/|x| exactly; strong rates blend
// into the WKB value sqrt(2r/D). This is the forward-attracting branch, so a
// start here carries no algebraic transient.
double decaying_branch_psi(double x_abs, double r, double D) {
  if (r <= 0.0) return 0.0;
  double lam = x_abs * x_abs * r / D;
  if (lam >= 100.0) return std::sqrt(2.0 * r / D);
  return 0.5 * (std::sqrt(1.0 + 8.0 * lam) - 1.0) / x_abs;
}

// psi of the solution growing toward +inf at distance x_abs: phi ~ |x|^mu,
// psi = mu/|x|, again blending into sqrt(2r/D) for strong rates.
double growing_branch_psi(double x_abs, double r, double D) {
  double lam = x_abs * x_abs * r / D;
  if (lam >= 100.0) return std::sqrt(2.0 * r / D);
  return 0.5 * (1.0 + std::sqrt(1.0 + 8.0 * lam)) / x_abs;
}

struct RawTrajectory {
  std::vector<double> xs, logphi, psi;
};

std::array<double, 2> rk4_step(const numeric::OdeRhs<2>& f, double x,
                               const std::array<double, 2>& u, double h) {
  std::array<double, 2> k1 = f(x, u), u2, u3, u4;
  for (int i = 0; i < 2; ++i) u2[i] = u[i] + 0.5 * h * k1[i];
  std::array<double, 2> k2 = f(x + 0.5 * h, u2);
  for (int i = 0; i < 2; ++i) u3[i] = u[i] + 0.5 * h * k2[i];
  std::array<double, 2> k3 = f(x + 0.5 * h, u3);
  for (int i = 0; i < 2; ++i) u4[i] = u[i] + h * k3[i];
  std::array<double, 2> k4 = f(x + h, u4);
  std::array<double, 2> out;
  for (int i = 0; i < 2; ++i) out[i] = u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

// The adaptive run controls solution error at its accepted nodes; between
// them the Hermite interpolant the solution is wrapped in must still satisfy
// the ODE residual bound. Bisect gaps until the local cubic piece does,
// taking half-steps off the left node for the inserted values (each half-step
// is far more accurate than the accepted full step, so the data stays exact
// at the working tolerance).
void densify_raw(RawTrajectory& raw, const numeric::OdeRhs<2>& rhs,
                 const std::function<double(double)>& rate_fn, double D, double tol) {
  RawTrajectory out;
  out.xs.reserve(raw.xs.size() * 2);
  struct Seg {
    double x;
    std::array<double, 2> y;
  };
  for (std::size_t i = 0; i + 1 < raw.xs.size(); ++i) {
    out.xs.push_back(raw.xs[i]);
    out.logphi.push_back(raw.logphi[i]);
    out.psi.push_back(raw.psi[i]);
    std::vector<Seg> stack;  // right endpoints pending, nearest on top
    stack.push_back({raw.xs[i + 1], {raw.logphi[i + 1], raw.psi[i + 1]}});
    Seg left{raw.xs[i], {raw.logphi[i], raw.psi[i]}};
    int guard = 0;
    while (!stack.empty() && ++guard < 100000) {
      Seg right = stack.back();
      double h = right.x - left.x;
      double xm = 0.5 * (left.x + right.x);
      double pa = left.y[1], pb = right.y[1];
      double da = 2.0 * rate_fn(left.x) / D - pa * pa;
      double db = 2.0 * rate_fn(right.x) / D - pb * pb;
      double Hm = 0.5 * (pa + pb) + 0.125 * h * (da - db);
      double dH = 1.5 * (pb - pa) / h - 0.25 * (da + db);
      double r = rate_fn(xm);
      // floor sits below the residual check's skip threshold, so a gap that
      // bottoms out is never finite-differenced against data-level noise
      bool ok = std::fabs(0.5 * D * (dH + Hm * Hm) - r) <= 0.25 * tol * (1.0 + r) ||
                h <= 5e-6 * (1.0 + std::fabs(xm));
      if (ok) {
        stack.pop_back();
        if (!stack.empty()) {
          out.xs.push_back(right.x);
          out.logphi.push_back(right.y[0]);
          out.psi.push_back(right.y[1]);
        }
        left = right;
      } else {
        stack.push_back({xm, rk4_step(rhs, left.x, left.y, 0.5 * h)});
      }
    }
  }
  out.xs.push_back(raw.xs.back());
  out.logphi.push_back(raw.logphi.back());
  out.psi.push_back(raw.psi.back());
  raw = std::move(out);
}

// State at an arbitrary x from the nearest stored node via one integrator
// step: unlike spline evaluation this keeps values consistent with the ODE at
// the working tolerance, which the phi3 assembly depends on.
std::array<double, 2> eval_raw(const RawTrajectory& t, const numeric::OdeRhs<2>& rhs, double x) {
  auto it = std::lower_bound(t.xs.begin(), t.xs.end(), x);
  std::size_t j = static_cast<std::size_t>(it - t.xs.begin());
  if (j == t.xs.size()) --j;
  else if (j > 0 && x - t.xs[j - 1] < t.xs[j] - x) --j;
  double dx = x - t.xs[j];
  std::array<double, 2> y{t.logphi[j], t.psi[j]};
  if (std::fabs(dx) > 1e-14 * (1.0 + std::fabs(x))) y = rk4_step(rhs, t.xs[j], y, dx);
  return y;
}

RawTrajectory integrate_forward(const std::function<double(double)>& rate_fn, double D,
                                const GridPolicy& pol, const std::vector<double>& breaks) {
  const double X = pol.X;
  numeric::OdeRhs<2> rhs = [&rate_fn, D](double x, const std::array<double, 2>& y) {
    return std::array<double, 2>{y[1], 2.0 * rate_fn(x) / D - y[1] * y[1]};
  };
  RawTrajectory out;
  std::array<double, 2> state{0.0, decaying_branch_psi(X, rate_fn(-X), D)};
  auto observe = [&out, &state](double x, const std::array<double, 2>& y) {
    state = y;
    if (!out.xs.empty() && x == out.xs.back()) return;
    out.xs.push_back(x);
    out.logphi.push_back(y[0]);
    out.psi.push_back(y[1]);
  };
  // Separate legs make x = 0 and every rate breakpoint an exact node; a step
  // across a derivative jump would invalidate the integrator's error estimate.
  std::vector<double> legs{-X, 0.0, X};
  const double snap = 1e-12 * X;
  for (double b : breaks)
    if (b > -X + snap && b < X - snap && std::fabs(b) > snap) legs.push_back(b);
  std::sort(legs.begin(), legs.end());
  legs.erase(std::unique(legs.begin(), legs.end()), legs.end());
  for (std::size_t i = 0; i + 1 < legs.size(); ++i)
    numeric::rk4_adaptive<2>(rhs, legs[i], legs[i + 1], state, pol.rk_tol, observe, 0.0,
                             pol.h_max);

  double r_far = rate_fn(X);
  if (r_far > 0.0) {
    double star = growing_branch_psi(X, r_far, D);
    if (std::fabs(out.psi.back() - star) > pol.asymptote_rel_tol * star) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "psi(%.6g) = %.6g but the local tail asymptote is %.6g; enlarge X", X,
                    out.psi.back(), star);
      throw Error(ErrorCode::DomainTooSmall, buf);
    }
  }
  densify_raw(out, rhs, rate_fn, D, pol.residual_tol);
  return out;
}

struct SplinePair {
  numeric::HermiteSpline logphi, psi;
  double x_lo, x_hi;
};

HarmonicSolution make_grid_solution(PhiKind kind, double D, bool even, std::vector<double> xs,
                                    std::vector<double> logphi, std::vector<double> psi,
                                    const std::function<double(double)>& rate_fn) {
  std::vector<double> dpsi(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    dpsi[i] = 2.0 * rate_fn(xs[i]) / D - psi[i] * psi[i];
  auto sp = std::make_shared<SplinePair>(SplinePair{numeric::HermiteSpline(xs, logphi, psi),
                                                    numeric::HermiteSpline(xs, psi, dpsi),
                                                    xs.front(), xs.back()});
  HarmonicSolution out;
  out.kind = kind;
  out.D = D;
  out.exact = false;
  out.even = even;
  out.x_min = xs.front();
  out.x_max = xs.back();
  out.log_phi = [sp](double x) { return sp->logphi.eval(std::clamp(x, sp->x_lo, sp->x_hi)); };
  out.psi = [sp](double x) { return sp->psi.eval(std::clamp(x, sp->x_lo, sp->x_hi)); };
  out.nodes = std::move(xs);
  return out;
}

void check_residual(const HarmonicSolution& phi, const std::function<double(double)>& rate_fn,
                    const GridPolicy& pol) {
  double worst = 0.0, worst_x = 0.0, worst_gap = 0.0;
  for (std::size_t i = 0; i + 1 < phi.nodes.size(); ++i) {
    double gap = phi.nodes[i + 1] - phi.nodes[i];
    double xm = 0.5 * (phi.nodes[i] + phi.nodes[i + 1]);
    // gaps this small carry no interpolation error and defeat the difference
    if (gap <= 1e-5 * (1.0 + std::fabs(xm))) continue;
    double h = 2e-3 * gap;
    double dpsi = (phi.psi(xm + h) - phi.psi(xm - h)) / (2.0 * h);
    double pm = phi.psi(xm);
    double r = rate_fn(xm);
    double scaled = std::fabs(0.5 * phi.D * (dpsi + pm * pm) - r) / (1.0 + r);
    if (scaled > worst) {
      worst = scaled;
      worst_x = xm;
      worst_gap = gap;
    }
  }
  if (worst > pol.residual_tol) {
    static const char* names[] = {"phi1", "phi2", "phi3"};
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%s ODE residual %.3e exceeds %.3e near x = %.6g (node gap %.3e)",
                  names[static_cast<int>(phi.kind)], worst, pol.residual_tol, worst_x, worst_gap);
    throw Error(ErrorCode::GridTooCoarse, buf);
  }
}

}  // namespace

ClosedFormPhis build_phi_closed_form(const Rate& rate, double D) {
  ClosedFormPhis out;
  const auto& fam = rate.family();
  if (const auto* c = std::get_if<model::ConstantRate>(&fam)) {
    if (c->r == 0.0) {
      // phi == 1: a positive solution whose tail integrals all diverge;
      // downstream divergence handling reports the (infinite) answer.
      HarmonicSolution p3;
      p3.kind = PhiKind::Phi3;
      p3.D = D;
      p3.exact = true;
      p3.even = true;
      p3.log_phi = [](double) { return 0.0; };
      p3.psi = [](double) { return 0.0; };
      out.phi3 = std::move(p3);
      return out;
    }
    double s = std::sqrt(2.0 * c->r / D);
    HarmonicSolution p3;
    p3.kind = PhiKind::Phi3;
    p3.D = D;
    p3.exact = true;
    p3.even = true;
    p3.log_phi = [s](double x) {
      double ax = std::fabs(x);
      return s * ax + std::log1p(std::exp(-2.0 * s * ax));
    };
    p3.psi = [s](double x) { return s * std::tanh(s * x); };
    out.phi3 = std::move(p3);
    HarmonicSolution p1;
    p1.kind = PhiKind::Phi1;
    p1.D = D;
    p1.exact = true;
    p1.even = false;
    p1.log_phi = [s](double x) { return s * x; };
    p1.psi = [s](double) { return s; };
    out.phi1 = std::move(p1);
    return out;
  }
  if (const auto* q = std::get_if<model::QuadDecayPolyRate>(&fam)) {
    double m = q->m, g = q->gamma;
    HarmonicSolution p3;
    p3.kind = PhiKind::Phi3;
    p3.D = D;
    p3.exact = true;
    p3.even = true;
    p3.log_phi = [m, g](double x) {
      double ax = std::fabs(x);
      if (ax <= 1.0) return std::log(g + std::pow(ax, m));
      return m * std::log(ax) + std::log1p(g * std::pow(ax, -m));
    };
    p3.psi = [m, g](double x) {
      if (x == 0.0) return 0.0;
      double ax = std::fabs(x);
      double sign = x > 0.0 ? 1.0 : -1.0;
      return sign * m / (g * std::pow(ax, 1.0 - m) + ax);
    };
    out.phi3 = std::move(p3);
    return out;
  }
  if (const auto* st = std::get_if<model::StretchedExpHarmonicRate>(&fam)) {
    double lam = st->lambda, g = st->gamma, l = st->l;
    HarmonicSolution p3;
    p3.kind = PhiKind::Phi3;
    p3.D = D;
    p3.exact = true;
    p3.even = true;
    p3.log_phi = [lam, g, l](double x) { return lam * std::pow(g + x * x, 0.5 * (l + 1.0)); };
    p3.psi = [lam, g, l](double x) { return lam * (l + 1.0) * x * std::pow(g + x * x, 0.5 * (l - 1.0)); };
    out.phi3 = std::move(p3);
    return out;
  }
  if (const auto* p = std::get_if<model::PowerLawRate>(&fam)) {
    if (p->l == -1.0 && std::fabs(p->c / D - 1.0) <= 1e-12) {
      double g = p->gamma;
      HarmonicSolution p3;
      p3.kind = PhiKind::Phi3;
      p3.D = D;
      p3.exact = true;
      p3.even = true;
      p3.log_phi = [g](double x) {
        double ax = std::fabs(x);
        if (ax <= 1.0) return std::log(g + ax * ax);
        return 2.0 * std::log(ax) + std::log1p(g / (ax * ax));
      };
      p3.psi = [g](double x) { return 2.0 * x / (g + x * x); };
      out.phi3 = std::move(p3);
      return out;
    }
    throw Error(ErrorCode::NoClosedForm, "power-law rate outside the closed-form parameter set");
  }
  throw Error(ErrorCode::NoClosedForm, "no closed-form solution for this rate family");
}

double default_domain(const Rate& rate, double D) { return std::max(50.0, 10.0 * rate.scale(D)); }

RiccatiPhis build_phi_riccati(const Rate& rate, double D, const GridPolicy& policy) {
  if (!(policy.X > 0.0)) throw Error(ErrorCode::InvalidParameter, "grid half-width must be > 0");
  (void)model::ModelParams(D);
  auto rate_fn = [&rate](double x) { return rate.eval(x); };
  auto rate_mirror = [&rate](double x) { return rate.eval(-x); };
  bool even = rate.is_even();
  std::vector<double> breaks = rate.breakpoints();
  std::vector<double> breaks_m(breaks.rbegin(), breaks.rend());
  for (double& b : breaks_m) b = -b;

  RawTrajectory raw1 = integrate_forward(rate_fn, D, policy, breaks);
  RawTrajectory raw2m = even ? raw1 : integrate_forward(rate_mirror, D, policy, breaks_m);

  auto normalize_at_zero = [](RawTrajectory& t) {
    auto it = std::lower_bound(t.xs.begin(), t.xs.end(), 0.0);
    if (it == t.xs.end() || *it != 0.0)
      throw Error(ErrorCode::GridTooCoarse, "origin is not a grid node");
    double ref = t.logphi[static_cast<std::size_t>(it - t.xs.begin())];
    for (double& v : t.logphi) v -= ref;
  };
  normalize_at_zero(raw1);

  // phi2(x) = mirrored-rate phi1(-x)
  RawTrajectory raw2;
  {
    std::size_t n = raw2m.xs.size();
    raw2.xs.resize(n);
    raw2.logphi.resize(n);
    raw2.psi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      raw2.xs[i] = -raw2m.xs[n - 1 - i];
      raw2.logphi[i] = raw2m.logphi[n - 1 - i];
      raw2.psi[i] = -raw2m.psi[n - 1 - i];
    }
    normalize_at_zero(raw2);
  }

  RiccatiPhis out{
      make_grid_solution(PhiKind::Phi1, D, false, raw1.xs, raw1.logphi, raw1.psi, rate_fn),
      make_grid_solution(PhiKind::Phi2, D, false, raw2.xs, raw2.logphi, raw2.psi, rate_fn),
      HarmonicSolution{}};

  // phi3 = phi1 + phi2 on the union of both node sets
  std::vector<double> xs3 = raw1.xs;
  xs3.insert(xs3.end(), raw2.xs.begin(), raw2.xs.end());
  std::sort(xs3.begin(), xs3.end());
  // near-coincident nodes from the two one-sided grids would leave gaps too
  // small for finite differencing downstream
  xs3.erase(std::unique(xs3.begin(), xs3.end(),
                        [](double a, double b) { return b - a <= 1e-9 * (1.0 + std::fabs(a)); }),
            xs3.end());

  // Sample the summands by stepping off their own trajectories rather than
  // through the phi1/phi2 splines: interpolation error between one-sided
  // nodes would otherwise leak into the phi3 data as ODE inconsistency.
  numeric::OdeRhs<2> rhs = [&rate_fn, D](double x, const std::array<double, 2>& y) {
    return std::array<double, 2>{y[1], 2.0 * rate_fn(x) / D - y[1] * y[1]};
  };
  auto phi3_at = [&](double x) {
    std::array<double, 2> e1 = eval_raw(raw1, rhs, x);
    std::array<double, 2> e2 = eval_raw(raw2, rhs, x);
    double w1 = 1.0 / (1.0 + std::exp(e2[0] - e1[0]));
    return std::array<double, 2>{logaddexp(e1[0], e2[0]), w1 * e1[1] + (1.0 - w1) * e2[1]};
  };
  auto psi3_at = [&phi3_at](double x) { return phi3_at(x)[1]; };

  // The one-sided grids resolve their own dynamics, not the crossover of the
  // sum near the origin: bisect any gap whose midpoint would fail the ODE
  // residual check against the local Hermite piece.
  {
    std::vector<double> refined;
    refined.reserve(xs3.size() * 2);
    std::size_t guard = 0;
    std::function<void(double, double, double, double, double, double)> refine =
        [&](double xa, double pa, double da, double xb, double pb, double db) {
          double h = xb - xa;
          double xm = 0.5 * (xa + xb);
          if (h <= 5e-6 * (1.0 + std::fabs(xm)) || ++guard > 2000000) return;
          double pm = psi3_at(xm);
          double dm = 2.0 * rate_fn(xm) / D - pm * pm;
          // the cubic piece's own midpoint value and slope: the same quantity
          // the final residual check measures
          double Hm = 0.5 * (pa + pb) + 0.125 * h * (da - db);
          double dH = 1.5 * (pb - pa) / h - 0.25 * (da + db);
          double r = rate_fn(xm);
          if (std::fabs(0.5 * D * (dH + Hm * Hm) - r) <= 0.3 * policy.residual_tol * (1.0 + r))
            return;
          refine(xa, pa, da, xm, pm, dm);
          refined.push_back(xm);
          refine(xm, pm, dm, xb, pb, db);
        };
    for (std::size_t i = 0; i + 1 < xs3.size(); ++i) {
      double xa = xs3[i], xb = xs3[i + 1];
      double pa = psi3_at(xa), pb = psi3_at(xb);
      refine(xa, pa, 2.0 * rate_fn(xa) / D - pa * pa, xb, pb, 2.0 * rate_fn(xb) / D - pb * pb);
    }
    xs3.insert(xs3.end(), refined.begin(), refined.end());
    std::sort(xs3.begin(), xs3.end());
  }

  std::vector<double> lp3(xs3.size()), ps3(xs3.size());
  for (std::size_t i = 0; i < xs3.size(); ++i) {
    std::array<double, 2> v = phi3_at(xs3[i]);
    lp3[i] = v[0];
    ps3[i] = v[1];
  }
  out.phi3 = make_grid_solution(PhiKind::Phi3, D, even, std::move(xs3), std::move(lp3),
                                std::move(ps3), rate_fn);

  check_residual(out.phi1, rate_fn, policy);
  check_residual(out.phi2, rate_fn, policy);
  check_residual(out.phi3, rate_fn, policy);
  return out;
}

void dump_phi_csv(const HarmonicSolution& phi, double X, std::ostream& os) {
  auto row = [&os, &phi](double x) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", x, phi.log_phi(x), phi.psi(x));
    os << buf;
  };
  os << "x,logphi,psi\n";
  if (!phi.nodes.empty()) {
    for (double x : phi.nodes)
      if (std::fabs(x) <= X) row(x);
    return;
  }
  int n = 2000;
  for (int i = 0; i <= n; ++i) row(-X + 2.0 * X * i / n);
}

// ---------------------------------------------------------------------------
// CumulativeIntegrals

namespace {

constexpr double kDeadGap = 69.0;   // e^-69 ~ 1e-30 of the running total
constexpr double kFloorGap = 45.0;  // adaptive refinement floor below total

double power_at_edge(const HarmonicSolution& phi, Side side, double s) {
  return s * model::side_sign(side) * phi.psi(model::side_sign(side) * s);
}

// Two-term tail model phi ~ gamma_f + c s^p fitted from the exact psi and its
// log-derivative at the edge. For algebraic families the fit is exact, so the
// completed tails stay certifiable even when they carry most of the total,
// which the one-term local power model cannot do near the convergence
// thresholds.
struct TailModel {
  bool ok = false;
  double p = 0.0;
  double log_c = 0.0;
  double rho = 0.0;       // gamma_f / phi(se), may be negative
  double log_phi_e = 0.0;
  double z = 0.0;         // -gamma_f / (c se^p) = -rho / (1 - rho)
};

TailModel fit_tail_model(const HarmonicSolution& phi, Side side, double se) {
  TailModel tm;
  if (!phi.exact) return tm;
  double h = 1e-3 * se;
  double q0 = power_at_edge(phi, side, se);
  double qp = power_at_edge(phi, side, se + h);
  double qm = power_at_edge(phi, side, se - h);
  if (!(q0 > 0.0) || !std::isfinite(qp) || !std::isfinite(qm)) return tm;
  double dq_dlns = se * (qp - qm) / (2.0 * h);
  double p = q0 + dq_dlns / q0;
  if (!std::isfinite(p) || !(p > 0.05) || !(p < 1e6)) return tm;
  double rho = 1.0 - q0 / p;
  if (!(std::fabs(rho) < 0.45)) return tm;
  tm.ok = true;
  tm.p = p;
  tm.rho = rho;
  tm.log_phi_e = phi.log_phi(model::side_sign(side) * se);
  tm.log_c = tm.log_phi_e + std::log1p(-rho) - p * std::log(se);
  tm.z = -rho / (1.0 - rho);
  return tm;
}

// sum over k >= 0 of (k+1) z^k / den(k), all den(k) > 0, |z| < 1
template <typename Den>
double tail_series(double z, Den den) {
  double sum = 0.0, zk = 1.0;
  for (int k = 0; k < 400; ++k) {
    double term = (k + 1) * zk / den(k);
    sum += term;
    if (std::fabs(term) <= 1e-14 * std::fabs(sum) && k >= 2) break;
    zk *= z;
  }
  return sum;
}

// log of integral from se to inf of s^alpha (gamma_f + c s^p)^{-2} ds
double log_tail_integral(const TailModel& tm, double se, double alpha) {
  double s = tail_series(tm.z, [&](int k) { return (2 + k) * tm.p - alpha - 1.0; });
  if (!(s > 0.0)) return kPosInf;  // signals a failed expansion
  return -2.0 * tm.log_c + (alpha + 1.0 - 2.0 * tm.p) * std::log(se) + std::log(s);
}

}  // namespace

const CumulativeIntegrals::SideData& CumulativeIntegrals::side_data(Side side) const {
  if (side == Side::Left && !mirrored_) return left_;
  return right_;
}

CumulativeIntegrals::CumulativeIntegrals(const HarmonicSolution& phi, const CumPolicy& policy)
    : phi_(phi), X_(policy.X), rel_tol_(policy.rel_tol) {
  if (!(X_ > 0.0)) throw Error(ErrorCode::InvalidParameter, "truncation must be > 0");
  X_ = std::min({X_, phi_.x_max, -phi_.x_min});
  for (double k : policy.knots) {
    if (!std::isfinite(k)) throw Error(ErrorCode::InvalidParameter, "non-finite knot");
    double s = std::fabs(k);
    if (s > 0.0 && s < X_) knots_.push_back(s);
  }
  knots_.push_back(0.5 * X_);
  std::sort(knots_.begin(), knots_.end());
  mirrored_ = phi_.even;
  build_side(Side::Right, right_);
  if (!mirrored_) build_side(Side::Left, left_);
  // Hermite slopes are exact, so interpolation error is the quartic remainder
  // of the node spacing; spacing rules keep it near the quadrature tolerance.
  interp_error_ = 1e-7;
}

void CumulativeIntegrals::build_side(Side side, SideData& sd) {
  const double sgn = model::side_sign(side);
  auto g_phi = [this, sgn](double s) { return phi_.log_phi(sgn * s); };
  auto g_inv = [this, sgn](double s) { return -2.0 * phi_.log_phi(sgn * s); };
  auto psi_out = [this, sgn](double s) { return sgn * phi_.psi(sgn * s); };

  // --- node ladder: geometric from the origin, psi-limited in active zones,
  // relaxed where the inverse-square integrand is dead, knots snapped in.
  std::vector<double> ladder;
  ladder.push_back(0.0);
  double s1 = std::max(1e-8, 2e-5 * X_);
  double logphi_min = g_phi(0.0);
  for (double s = s1; s < X_;) {
    ladder.push_back(s);
    double lp = g_phi(s);
    logphi_min = std::min(logphi_min, lp);
    bool dead = lp - logphi_min >= 40.0 && psi_out(s) > 0.0;
    double cap = dead ? 0.5 : 0.25 / (1.0 + 0.5 * std::fabs(psi_out(s)));
    double dx = std::min(s / 16.0, cap);
    s += std::max(dx, 1e-9);
  }
  ladder.push_back(X_);
  ladder.insert(ladder.end(), knots_.begin(), knots_.end());
  std::sort(ladder.begin(), ladder.end());
  ladder.erase(std::unique(ladder.begin(), ladder.end(),
                           [this](double a, double b) { return b - a <= 1e-13 * (1.0 + X_); }),
               ladder.end());

  std::size_t n = ladder.size();
  sd.s = ladder;
  for (int t = 0; t < 3; ++t) sd.cum[t].assign(n, kNegInf);

  // --- marching accumulation
  for (std::size_t k = 0; k + 1 < n; ++k) {
    double a = sd.s[k], b = sd.s[k + 1], width = b - a;
    double phi_cum_k = sd.cum[kPhi][k];

    double dphi = numeric::log_int_adaptive(g_phi, a, b, rel_tol_, 36,
                                            phi_cum_k == kNegInf ? kNegInf : phi_cum_k - kFloorGap);
    sd.cum[kPhi][k + 1] = logaddexp(phi_cum_k, dphi);

    double inv_a = g_inv(a), inv_b = g_inv(b);
    double inv_cum_k = sd.cum[kInv][k];
    if (inv_cum_k != kNegInf && std::max(inv_a, inv_b) + std::log(width) < inv_cum_k - kDeadGap &&
        psi_out(a) > 0.0 && psi_out(b) > 0.0) {
      sd.cum[kInv][k + 1] = logaddexp(inv_cum_k, logaddexp(inv_a, inv_b) + std::log(0.5 * width));
    } else {
      double dinv = numeric::log_int_adaptive(g_inv, a, b, rel_tol_, 36,
                                              inv_cum_k == kNegInf ? kNegInf : inv_cum_k - kFloorGap);
      sd.cum[kInv][k + 1] = logaddexp(inv_cum_k, dinv);
    }

    double w_cum_k = sd.cum[kW][k];
    double gw_a = inv_a + phi_cum_k;
    double gw_b = inv_b + sd.cum[kPhi][k + 1];
    if (w_cum_k != kNegInf && std::max(gw_a, gw_b) + std::log(width) < w_cum_k - kDeadGap &&
        psi_out(a) > 0.0 && psi_out(b) > 0.0) {
      sd.cum[kW][k + 1] = logaddexp(w_cum_k, logaddexp(gw_a, gw_b) + std::log(0.5 * width));
    } else {
      auto g_w = [&](double t) {
        double inner = t - a <= 1e-14 ? kNegInf
                                      : numeric::log_int_adaptive(
                                            g_phi, a, t, 10.0 * rel_tol_, 28,
                                            phi_cum_k == kNegInf ? kNegInf : phi_cum_k - 40.0);
        return g_inv(t) + logaddexp(phi_cum_k, inner);
      };
      double dw = numeric::log_int_adaptive(g_w, a, b, rel_tol_, 30,
                                            w_cum_k == kNegInf ? kNegInf : w_cum_k - kFloorGap);
      sd.cum[kW][k + 1] = logaddexp(w_cum_k, dw);
    }
  }

  // --- interpolants over s[1..] with exact slopes d(cum)/ds = exp(g - cum)
  {
    std::vector<double> ss(sd.s.begin() + 1, sd.s.end());
    for (int t = 0; t < 3; ++t) {
      std::vector<double> cc(sd.cum[t].begin() + 1, sd.cum[t].end());
      std::vector<double> dd(ss.size());
      for (std::size_t i = 0; i < ss.size(); ++i) {
        double g = t == kPhi   ? g_phi(ss[i])
                   : t == kInv ? g_inv(ss[i])
                               : g_inv(ss[i]) + sd.cum[kPhi][i + 1];
        double d = g - cc[i];
        dd[i] = d < -700.0 ? 0.0 : std::exp(d);
      }
      sd.interp[t] = numeric::HermiteSpline(ss, cc, dd);
    }
  }

  // --- tail completion: the fitted two-term model where it certifies (exact
  // phi only), otherwise the local power model phi ~ c s^p with the
  // accumulated PhiInt carried as a second exact term. Either way a
  // truncation-doubling consistency test guards the result.
  auto completed_at = [&](double s_edge, int t) -> LogTail {
    auto it = std::lower_bound(sd.s.begin(), sd.s.end(), s_edge - 1e-12 * (1.0 + X_));
    std::size_t idx = static_cast<std::size_t>(it - sd.s.begin());
    double se = sd.s[idx];
    TailModel tm = fit_tail_model(phi_, side, se);
    if (tm.ok) {
      LogTail out;
      if (t == kPhi) {
        out.divergent = true;  // fitted p > 0: phi itself keeps growing
        return out;
      }
      if (t == kInv) {
        if (!(tm.p > 0.5 + 1e-9)) {
          out.divergent = true;
          return out;
        }
        double lt = log_tail_integral(tm, se, 0.0);
        if (lt == kPosInf) {
          out.divergent = true;
          return out;
        }
        out.log_value = logaddexp(sd.cum[kInv][idx], lt);
        return out;
      }
      if (!(tm.p > 2.0 + 1e-9)) {
        out.divergent = true;
        return out;
      }
      // beyond the edge: PhiInt(s) = PhiInt(se) + gamma_f (s - se)
      //                              + c (s^{p+1} - se^{p+1}) / (p + 1)
      double p = tm.p, logse = std::log(se);
      double sj1 = tail_series(tm.z, [&](int k) {
        return ((2 + k) * p - 2.0) * ((2 + k) * p - 1.0);
      });
      double sj2 = tail_series(tm.z, [&](int k) {
        return ((1 + k) * p - 2.0) * ((2 + k) * p - 1.0);
      });
      double l0 = log_tail_integral(tm, se, 0.0);
      if (l0 == kPosInf || !(sj1 > 0.0) || !(sj2 > 0.0)) {
        out.divergent = true;
        return out;
      }
      double log_ta = sd.cum[kPhi][idx] + l0;
      double log_t1 = tm.log_phi_e + std::log(std::fabs(tm.rho)) - 2.0 * tm.log_c +
                      (2.0 - 2.0 * p) * logse + std::log(sj1);
      double sgn_t1 = tm.rho >= 0.0 ? 1.0 : -1.0;
      double log_t2 = -tm.log_c + (2.0 - p) * logse + std::log(sj2);
      double mx = std::max({log_ta, log_t1, log_t2});
      double lin = std::exp(log_ta - mx) + sgn_t1 * std::exp(log_t1 - mx) + std::exp(log_t2 - mx);
      if (lin > 0.0) {
        out.log_value = logaddexp(sd.cum[kW][idx], mx + std::log(lin));
        return out;
      }
      out.divergent = true;
      return out;
    }
    double p = power_at_edge(phi_, side, se);
    double lphi = g_phi(se);
    double logs = std::log(se);
    LogTail out;
    if (t == kPhi) {
      if (p < -1.05)
        out.log_value = logaddexp(sd.cum[kPhi][idx], lphi + logs - std::log(-p - 1.0));
      else
        out.divergent = true;
    } else if (t == kInv) {
      if (p > 0.55)
        out.log_value = logaddexp(sd.cum[kInv][idx], -2.0 * lphi + logs - std::log(2.0 * p - 1.0));
      else
        out.divergent = true;
    } else {
      if (p > 2.05) {
        double term1 = -2.0 * lphi + sd.cum[kPhi][idx] + logs - std::log(2.0 * p - 1.0);
        double term2 = -lphi + 2.0 * logs - std::log(p - 2.0) - std::log(2.0 * p - 1.0);
        out.log_value = logaddexp(sd.cum[kW][idx], logaddexp(term1, term2));
      } else {
        out.divergent = true;
      }
    }
    return out;
  };

  for (int t = 0; t < 3; ++t) {
    LogTail full = completed_at(X_, t);
    LogTail half = completed_at(0.5 * X_, t);
    if (full.divergent || half.divergent) {
      full.divergent = true;
    } else {
      double rel = std::fabs(std::expm1(half.log_value - full.log_value));
      if (rel > 1e-3) full.divergent = true;
    }
    sd.tail[t] = full;
    sd.half_total[t] = half.divergent ? kPosInf : half.log_value;
  }
}

double CumulativeIntegrals::query(Side side, Kind kind, double s) const {
  const SideData& sd = side_data(side);
  if (!(s >= 0.0)) throw Error(ErrorCode::InvalidParameter, "negative arc length");
  if (s == 0.0) return kNegInf;
  if (s > X_ * (1.0 + 1e-9))
    throw Error(ErrorCode::InvalidParameter, "query beyond the truncation domain");
  s = std::min(s, X_);
  auto it = std::lower_bound(sd.s.begin(), sd.s.end(), s);
  std::size_t idx = static_cast<std::size_t>(it - sd.s.begin());
  if (idx < sd.s.size() && std::fabs(sd.s[idx] - s) <= 1e-12 * (1.0 + s)) return sd.cum[kind][idx];
  if (idx > 0 && std::fabs(sd.s[idx - 1] - s) <= 1e-12 * (1.0 + s)) return sd.cum[kind][idx - 1];

  const double sgn = model::side_sign(side);
  auto g_phi = [this, sgn](double t) { return phi_.log_phi(sgn * t); };
  auto g_inv = [this, sgn](double t) { return -2.0 * phi_.log_phi(sgn * t); };
  if (s < sd.s[1]) {
    // below the first interior node: integrate directly from the origin
    if (kind == kPhi) return numeric::log_int_adaptive(g_phi, 0.0, s, rel_tol_, 36);
    if (kind == kInv) return numeric::log_int_adaptive(g_inv, 0.0, s, rel_tol_, 36);
    auto g_w = [&](double t) {
      double inner = t <= 1e-300 ? kNegInf : numeric::log_int_adaptive(g_phi, 0.0, t, 10.0 * rel_tol_, 26);
      return g_inv(t) + inner;
    };
    return numeric::log_int_adaptive(g_w, 0.0, s, rel_tol_, 30);
  }
  // clamp to the bracketing node values: keeps queries monotone even where
  // the running total has saturated in double precision
  return std::clamp(sd.interp[kind].eval(s), sd.cum[kind][idx - 1], sd.cum[kind][idx]);
}

double CumulativeIntegrals::log_phi_cum(Side side, double s) const { return query(side, kPhi, s); }
double CumulativeIntegrals::log_inv_cum(Side side, double s) const { return query(side, kInv, s); }
double CumulativeIntegrals::log_w_cum(Side side, double s) const { return query(side, kW, s); }

LogTail CumulativeIntegrals::phi_tail(Side side) const { return side_data(side).tail[kPhi]; }
LogTail CumulativeIntegrals::inv_tail(Side side) const { return side_data(side).tail[kInv]; }
LogTail CumulativeIntegrals::w_tail(Side side) const { return side_data(side).tail[kW]; }

}  // namespace resetsearch::harmonic
