#pragma once

// Positive solutions phi of (D/2) phi'' = r(x) phi, classified by which tail
// integrals of phi^{-2} converge, plus the cumulative integrals the hitting
// formulas consume. Everything is carried as log phi and psi = phi'/phi: the
// interesting regimes grow like exp(K |x|^(l+1)) and overflow doubles long
// before the physics gets hard.

#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "resetsearch/logspace.hpp"
#include "resetsearch/model.hpp"
#include "resetsearch/numeric.hpp"

namespace resetsearch::harmonic {

// Phi1: left inverse-square tail divergent, right convergent.
// Phi2: mirror image of Phi1. Phi3: both tails convergent.
enum class PhiKind { Phi1, Phi2, Phi3 };

struct HarmonicSolution {
  PhiKind kind = PhiKind::Phi3;
  double D = 1.0;
  bool exact = false;  // log_phi/psi are closed formulas, not interpolants
  bool even = false;   // phi(x) == phi(-x)
  double x_min = -kPosInf;
  double x_max = kPosInf;
  std::function<double(double)> log_phi;
  std::function<double(double)> psi;
  std::vector<double> nodes;  // grid abscissae; empty for closed forms
};

struct ClosedFormPhis {
  std::optional<HarmonicSolution> phi3;
  std::optional<HarmonicSolution> phi1;  // constant rates only
};

// Exact solutions for the analytic rate families. Throws NoClosedForm for
// tabulated rates and power laws without one.
ClosedFormPhis build_phi_closed_form(const model::Rate& rate, double D);

struct GridPolicy {
  double X = 50.0;          // build on [-X, X]
  double rk_tol = 1e-8;     // integrator tolerance per unit length
  double h_max = 0.2;
  double asymptote_rel_tol = 0.05;  // DomainTooSmall trigger
  double residual_tol = 1e-6;       // GridTooCoarse trigger, scaled by 1 + r
};

struct RiccatiPhis {
  HarmonicSolution phi1, phi2, phi3;
};

// Numerical construction: psi' = 2r/D - psi^2 integrated forward from -X for
// phi1 (backward mirror for phi2), log phi recovered alongside, phi3 built as
// the normalized sum. Throws DomainTooSmall when psi has not settled onto its
// tail asymptote at the far end and GridTooCoarse when the interpolated
// solution fails the ODE residual check.
RiccatiPhis build_phi_riccati(const model::Rate& rate, double D, const GridPolicy& policy);

// Default grid half-width: max(50, 10 * core length of the rate).
double default_domain(const model::Rate& rate, double D);

// x, logphi, psi rows for plotting.
void dump_phi_csv(const HarmonicSolution& phi, double X, std::ostream& os);

struct LogTail {
  double log_value = kNegInf;
  bool divergent = false;
};

struct CumPolicy {
  double X = 50.0;              // truncation, per side
  std::vector<double> knots;    // |a| values that must land on exact nodes
  double rel_tol = 1e-11;       // panel quadrature tolerance
};

// Marching cumulatives of phi, phi^{-2} and phi^{-2}*|PhiInt| along each half
// line, with analytic tail completion and a truncation-doubling consistency
// test that downgrades untrustworthy tails to divergent.
class CumulativeIntegrals {
 public:
  CumulativeIntegrals(const HarmonicSolution& phi, const CumPolicy& policy);

  // log of \int_0^s along the given side (integrands taken by magnitude);
  // s = |x| in [0, X]. Nondecreasing in s (strictly increasing until the
  // increments fall below double precision of the running total).
  double log_phi_cum(model::Side side, double s) const;
  double log_inv_cum(model::Side side, double s) const;
  double log_w_cum(model::Side side, double s) const;

  LogTail phi_tail(model::Side side) const;  // \int of phi over the whole tail
  LogTail inv_tail(model::Side side) const;
  LogTail w_tail(model::Side side) const;

  double truncation() const { return X_; }
  double rel_tol() const { return rel_tol_; }
  const HarmonicSolution& phi() const { return phi_; }
  // additional relative error bound for queries interpolated between nodes
  double interp_error() const { return interp_error_; }

 private:
  enum Kind { kPhi = 0, kInv = 1, kW = 2 };

  struct SideData {
    std::vector<double> s;        // 0 = origin, last = X
    std::vector<double> cum[3];   // log running integrals; -inf at s = 0
    numeric::HermiteSpline interp[3];  // over s[1..], exact slopes exp(g - cum)
    LogTail tail[3];
    double half_total[3];         // completed totals truncated at X/2, for the
                                  // doubling consistency test
  };

  const SideData& side_data(model::Side side) const;
  void build_side(model::Side side, SideData& sd);
  double query(model::Side side, Kind kind, double s) const;

  HarmonicSolution phi_;
  double X_ = 0.0;
  double rel_tol_ = 1e-11;
  double interp_error_ = 0.0;
  std::vector<double> knots_;
  SideData right_, left_;
  bool mirrored_ = false;
};

}  // namespace resetsearch::harmonic
