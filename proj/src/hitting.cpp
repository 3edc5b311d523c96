#include "resetsearch/hitting.hpp"

#include <cmath>
#include <variant>

#include "resetsearch/error.hpp"
#include "resetsearch/numeric.hpp"

namespace resetsearch::hitting {

using model::Side;
using model::SideFiniteness;

const char* method_name(Method m) {
  switch (m) {
    case Method::ClosedForm: return "closed_form";
    case Method::Phi3Quadrature: return "phi3_quadrature";
    case Method::Phi1Quadrature: return "phi1_quadrature";
    case Method::IntervalClosedForm: return "interval_closed_form";
    case Method::IntervalGeneral: return "interval_general";
  }
  return "unknown";
}

double HittingTimeResult::value() const { return finite ? std::exp(log_value) : kPosInf; }

HittingTimeResult expected_hitting_constant(double r, double D, double a) {
  (void)model::ModelParams(D);
  if (!(r > 0.0) || !std::isfinite(r))
    throw Error(ErrorCode::InvalidParameter, "constant-rate closed form needs finite r > 0");
  HittingTimeResult out;
  out.a = a;
  out.method = Method::ClosedForm;
  out.error_estimate = 1e-15;
  if (a == 0.0) return out;
  double q = std::sqrt(2.0 * r / D) * std::fabs(a);
  out.log_value = q + log1mexp(-q) - std::log(r);
  return out;
}

HittingComponents hitting_components(const harmonic::CumulativeIntegrals& cum, double a) {
  const harmonic::HarmonicSolution& phi = cum.phi();
  if (phi.kind == harmonic::PhiKind::Phi2)
    throw Error(ErrorCode::KindMismatch, "no component formulas for the mirror solution phi2");
  if (a == 0.0) throw Error(ErrorCode::InvalidParameter, "components need a != 0");
  double s = std::fabs(a);
  Side near = a > 0.0 ? Side::Right : Side::Left;  // between origin and target
  Side away = a > 0.0 ? Side::Left : Side::Right;  // the tail behind the origin
  double lphi0 = phi.log_phi(0.0);
  double lphia = phi.log_phi(a);
  double J = cum.log_inv_cum(near, s);
  double W = cum.log_w_cum(near, s);
  HittingComponents out;
  if (phi.kind == harmonic::PhiKind::Phi1 && a > 0.0) {
    // One-sided solution, target on its growing side: the success chance is a
    // pure ratio and the attempt time weights the mass of phi behind the
    // origin against the near-side cumulatives.
    harmonic::LogTail pt = cum.phi_tail(Side::Left);
    out.log_u = lphi0 - lphia;
    out.v_finite = !pt.divergent;
    if (out.v_finite)
      out.log_v = std::log(2.0 / phi.D) + lphi0 + logaddexp(W, pt.log_value + J);
    return out;
  }
  harmonic::LogTail It = cum.inv_tail(away);
  harmonic::LogTail Wt = cum.w_tail(away);
  if (It.divergent) {
    // phi is flat enough behind the origin that restarts there never help;
    // the success chance degenerates to the bare ratio.
    out.log_u = lphi0 - lphia;
    out.v_finite = false;
    return out;
  }
  double denom = logaddexp(It.log_value, J);
  out.log_u = lphi0 - lphia + It.log_value - denom;
  out.v_finite = !Wt.divergent;
  if (out.v_finite)
    out.log_v =
        std::log(2.0 / phi.D) + lphi0 + logaddexp(It.log_value + W, Wt.log_value + J) - denom;
  return out;
}

GeneralEvaluator::GeneralEvaluator(const model::Rate& rate, double D, const GeneralPolicy& policy,
                                   const std::vector<double>& targets)
    : rate_(rate), D_(D) {
  double X = policy.X > 0.0 ? policy.X : harmonic::default_domain(rate, D);
  for (double t : targets) X = std::max(X, 1.25 * std::fabs(t));
  bool want1 = policy.phi == PhiChoice::ForcePhi1;
  std::optional<harmonic::HarmonicSolution> phi;
  try {
    harmonic::ClosedFormPhis cf = harmonic::build_phi_closed_form(rate, D);
    if (want1) {
      if (cf.phi1) phi = std::move(cf.phi1);
    } else if (cf.phi3) {
      phi = std::move(cf.phi3);
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoClosedForm) throw;
  }
  bool exact = phi.has_value();
  if (!phi) {
    harmonic::GridPolicy g = policy.grid;
    g.X = X;
    harmonic::RiccatiPhis rp = harmonic::build_phi_riccati(rate, D, g);
    phi = want1 ? std::move(rp.phi1) : std::move(rp.phi3);
  }
  method_ = want1 ? Method::Phi1Quadrature : Method::Phi3Quadrature;
  harmonic::CumPolicy cp;
  cp.X = X;
  cp.rel_tol = policy.quad_rel_tol;
  for (double t : targets)
    if (t != 0.0) cp.knots.push_back(std::fabs(t));
  cum_.emplace(*phi, cp);
  base_error_ = 30.0 * cum_->rel_tol() + cum_->interp_error() + (exact ? 0.0 : 2e-6);
}

HittingTimeResult GeneralEvaluator::eval(double a) const {
  HittingTimeResult out;
  out.a = a;
  out.method = method_;
  out.error_estimate = base_error_;
  if (a == 0.0) return out;  // the searcher starts on the target
  // Before the hit the path never visits the far side of the target, so
  // finiteness is governed entirely by the rate tail behind the origin.
  Side danger = a > 0.0 ? Side::Left : Side::Right;
  std::optional<SideFiniteness> cls;
  try {
    cls = rate_.tail(danger, D_).cls;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MissingTail) throw;
  }
  HittingComponents hc = hitting_components(*cum_, a);
  bool quad_finite = hc.v_finite;
  out.finite = quad_finite && (!cls || *cls != SideFiniteness::Infinite);
  if (!cls) {
    out.diagnostic = "no declared tail law; quadrature divergence test only";
  } else if (*cls == SideFiniteness::Finite && !quad_finite) {
    out.diagnostic =
        "tail analysis says finite but the truncated quadrature diverges; "
        "domain may be too small";
  } else if (*cls == SideFiniteness::Infinite && quad_finite) {
    out.diagnostic =
        "tail analysis says infinite but the truncated quadrature converged; "
        "reporting infinite";
  } else if (*cls == SideFiniteness::Boundary) {
    out.diagnostic = "tail analysis sits at the critical threshold; quadrature verdict used";
  }
  if (out.finite) out.log_value = hc.log_v - hc.log_u;
  return out;
}

HittingTimeResult expected_hitting_general(const model::Rate& rate, double D, double a,
                                           PhiChoice choice) {
  GeneralPolicy pol;
  pol.phi = choice;
  GeneralEvaluator ev(rate, D, pol, {a});
  return ev.eval(a);
}

SideFiniteness classify_finiteness(const model::Rate& rate, double D) {
  SideFiniteness l = rate.tail(Side::Left, D).cls;
  SideFiniteness r = rate.tail(Side::Right, D).cls;
  if (l == SideFiniteness::Infinite || r == SideFiniteness::Infinite)
    return SideFiniteness::Infinite;
  if (l == SideFiniteness::Finite && r == SideFiniteness::Finite) return SideFiniteness::Finite;
  return SideFiniteness::Boundary;
}

namespace {

void check_interval_geometry(double D, double L1, double L2, double a) {
  (void)model::ModelParams(D);
  if (!(L1 > 0.0) || !(L2 > 0.0) || !std::isfinite(L1) || !std::isfinite(L2))
    throw Error(ErrorCode::InvalidParameter, "walls must sit at finite positive distances");
  if (a < -L1 || a > L2 || !std::isfinite(a))
    throw Error(ErrorCode::InvalidParameter, "target lies outside the interval");
}

// log expected time for a constant rate on [-wall, target], target > 0.
double log_interval_constant(double r, double D, double wall, double a_abs) {
  if (r == 0.0) return std::log(a_abs) + std::log(a_abs + wall) - std::log(D);
  double s = std::sqrt(2.0 * r / D);
  double q = s * a_abs, w = s * wall;
  return std::log(2.0 / r) + log_sinh(0.5 * q) + log_sinh(0.5 * (q + w)) - log_cosh(0.5 * w);
}

}  // namespace

HittingTimeResult expected_hitting_interval_fn(const std::function<double(double)>& rate,
                                               double D, double L1, double L2, double a) {
  check_interval_geometry(D, L1, L2, a);
  HittingTimeResult out;
  out.a = a;
  out.method = Method::IntervalGeneral;
  out.error_estimate = 1e-8;
  if (a == 0.0) return out;
  // Reflect so the target sits to the right; only the wall behind the origin
  // is ever reached before the hit.
  double wall = a > 0.0 ? L1 : L2;
  double sgn = a > 0.0 ? 1.0 : -1.0;
  double aa = std::fabs(a);
  // Fundamental pair y1, y2 of the homogeneous balance plus a particular
  // solution vp of the unit-source equation, all from one sweep.
  numeric::OdeRhs<6> rhs = [&rate, sgn, D](double x, const std::array<double, 6>& y) {
    double k = 2.0 / D, r = rate(sgn * x);
    return std::array<double, 6>{y[1], k * r * y[0],  y[3],
                                 k * r * y[2],        y[5], k * (r * y[4] - 1.0)};
  };
  std::array<double, 6> st{1.0, 0.0, 0.0, 1.0, 0.0, 0.0};
  auto keep = [&st](double, const std::array<double, 6>& y) { st = y; };
  numeric::rk4_adaptive<6>(rhs, -wall, 0.0, st, 1e-10, keep);
  std::array<double, 6> at0 = st;
  numeric::rk4_adaptive<6>(rhs, 0.0, aa, st, 1e-10, keep);
  std::array<double, 6> ata = st;

  // u = alpha y1 + beta y2 with u(target) = 1 and the restart balance
  // u(-wall) = u(0); v likewise around vp with v(target) = 0.
  double A11 = ata[0], A12 = ata[2];
  double A21 = 1.0 - at0[0], A22 = -at0[2];
  double det = A11 * A22 - A12 * A21;
  double scale = std::max({std::fabs(A11 * A22), std::fabs(A12 * A21), 1e-300});
  if (!std::isfinite(det) || std::fabs(det) <= 1e-12 * scale)
    throw Error(ErrorCode::SingularSystem, "interval balance system is numerically singular");
  double alpha = A22 / det, beta = -A21 / det;
  double u0 = alpha * at0[0] + beta * at0[2];
  double gamma = (-ata[4] * A22 - A12 * at0[4]) / det;
  double delta = (A11 * at0[4] + ata[4] * A21) / det;
  double v0 = at0[4] + gamma * at0[0] + delta * at0[2];
  if (!std::isfinite(u0) || !std::isfinite(v0) || !(u0 > 0.0) || !(v0 > 0.0))
    throw Error(ErrorCode::SingularSystem, "interval solve produced nonpositive components");
  out.log_value = std::log(v0) - std::log(u0);
  return out;
}

HittingTimeResult expected_hitting_interval(const model::Rate& rate, double D, double L1,
                                            double L2, double a) {
  if (const auto* c = std::get_if<model::ConstantRate>(&rate.family())) {
    check_interval_geometry(D, L1, L2, a);
    HittingTimeResult out;
    out.a = a;
    out.method = Method::IntervalClosedForm;
    out.error_estimate = 1e-14;
    if (a == 0.0) return out;
    out.log_value = log_interval_constant(c->r, D, a > 0.0 ? L1 : L2, std::fabs(a));
    return out;
  }
  auto fn = [&rate](double x) { return rate.eval(x); };
  return expected_hitting_interval_fn(fn, D, L1, L2, a);
}

}  // namespace resetsearch::hitting
