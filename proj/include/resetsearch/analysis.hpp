#pragma once

// Target-averaged search times and what to do with them: quadrature of the
// expected hitting time against a target distribution, optimization of the
// restart rate within a family, variational evaluation of candidate harmonic
// shapes and growth-law fits of E as the target recedes.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "resetsearch/hitting.hpp"
#include "resetsearch/logspace.hpp"
#include "resetsearch/model.hpp"

namespace resetsearch::analysis {

struct ObjectivePolicy {
  double quad_rel_tol = 1e-7;  // stop doubling the node count below this
  double trunc_rel = 1e-12;    // drop tail nodes this far below the running sum
  double x_cap = 600.0;        // largest resolved domain; beyond it the hitting
                               // time follows its tail growth model
  int max_nodes = 8192;        // per side, per doubling pass
  double hitting_rel_tol = 1e-11;  // passed through to the phi quadratures
};

// Value of \int E_0 T_a mu(da). Infinite outcomes are a state, not an error:
// finite == false with the reason in diagnostic.
struct ObjectiveValue {
  bool finite = true;
  double value = 0.0;
  double log_value = kNegInf;
  double plus_part = 0.0;   // share contributed by targets right of the origin
  double minus_part = 0.0;  // and left of it; they sum to value
  double error_estimate = 0.0;  // relative
  std::string diagnostic;
};

struct TraceEntry {
  std::vector<double> params;
  double value = 0.0;  // +inf when that probe was not finite
  bool finite = true;
};

// The reported optimum is the best evaluation seen, so value <= every trace
// entry by construction.
struct OptimizationReport {
  std::vector<double> params;
  double value = 0.0;
  int iterations = 0;
  long long evaluations = 0;
  bool converged = false;
  // Search coordinate sqrt(2 r / D) * A when a symmetric interval is
  // optimized in that variable; empty otherwise.
  std::optional<double> x_star;
  std::vector<TraceEntry> trace;
};

// Box for the two-parameter rate family r(x) = m(m-1)/2 * D / (gamma
// |x|^{2-m} + x^2), searched over (m, log gamma).
struct FamilyBox {
  double m_lo = 2.05;
  double m_hi = 10.0;
  double gamma_lo = 1e-4;
  double gamma_hi = 1e8;
};

// Positive even candidate shapes for the variational form. Each knows its own
// derivatives, so the restart rate it induces, (D/2) phi''/phi, is analytic.
class ParametricPhi {
 public:
  enum class Family { CoshScale, MollifiedPolynomial, StretchedExp };

  // phi(x) = cosh(k x); induces the constant rate (D/2) k^2.
  static ParametricPhi cosh_scale(double k);
  // phi(x) = gamma + (eps^2 + x^2)^{m/2} with eps = 1e-6 * scale: a smooth
  // stand-in for gamma + |x|^m whose curvature stays defined at the origin.
  static ParametricPhi mollified_polynomial(double m, double gamma, double scale = 1.0);
  // phi(x) = exp(lambda (gamma + x^2)^{(l+1)/2})
  static ParametricPhi stretched_exp(double lambda, double gamma, double l);

  Family family() const { return family_; }
  const std::vector<double>& params() const { return params_; }

  double log_value(double x) const;
  double psi(double x) const;  // phi'/phi
  double induced_rate(double x, double D) const;
  // The rate family this shape corresponds to: exact for the cosh and
  // stretched shapes, equal up to the mollification width for the polynomial.
  model::Rate induced_family(double D) const;
  model::PhiGrowth growth() const;
  double length_scale() const;

 private:
  ParametricPhi(Family f, std::vector<double> p) : family_(f), params_(std::move(p)) {}
  Family family_;
  std::vector<double> params_;
};

// Gauss-Legendre quadrature of E_0 T_a against mu, one half line at a time
// (atoms exact, tan substitution when mu is unbounded, node count doubled to
// tolerance). Growth gates decide divergence before any quadrature: the
// expected time grows at least like a^2, so a tail of mu with an infinite
// second moment is Infinite under every rate in scope.
ObjectiveValue expected_search_time(const model::Rate& rate, double D, const model::Target& mu,
                                    const model::SupportSpec& support,
                                    const ObjectivePolicy& pol = {});

// Best constant restart rate: log-grid prescan, golden section on log r (on
// x = sqrt(2r/D) A for a symmetric interval), then parabolic polish. A
// symmetric-interval objective that is already increasing at x = 0+ reports
// the boundary optimum r = 0 exactly. Throws NonFinite when every probe is
// infinite.
OptimizationReport optimize_constant_rate(double D, const model::Target& mu,
                                          const model::SupportSpec& support,
                                          const ObjectivePolicy& pol = {});

// Nelder-Mead over (m, log gamma) seeded from a 3x3 grid scan of the box.
// Throws BoxExhausted when the best point lands on the box boundary.
OptimizationReport optimize_family(double D, const model::Target& mu, const FamilyBox& box = {},
                                   const ObjectivePolicy& pol = {});

// Objective of the rate induced by a candidate shape, evaluated through the
// same cumulative machinery the hitting formulas use. Throws InadmissiblePhi
// when the curvature goes negative, vanishes identically, or the shape's
// tails fail the two-sided integrability the formulas assume.
ObjectiveValue variational_objective(const ParametricPhi& phi, double D, const model::Target& mu,
                                     const ObjectivePolicy& pol = {});

enum class GrowthModel { PowerLaw, LogPolynomial };

struct GrowthFit {
  GrowthModel model = GrowthModel::PowerLaw;
  // PowerLaw: E ~ C |a|^p with p fitted (exponent) and C = exp(intercept).
  // LogPolynomial: log E ~ K |a|^q + intercept with q = l + 1 given, K fitted.
  double exponent = 0.0;
  double coeff = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double rms_residual = 0.0;
  double a_min = 0.0;
  double a_max = 0.0;
};

// Least-squares growth law through log E at the grid targets (at least four,
// all finite or InfiniteSample is thrown). l is only read for LogPolynomial,
// where the regressor is |a|^{l+1}.
GrowthFit estimate_growth(const model::Rate& rate, double D, const std::vector<double>& a_grid,
                          GrowthModel model, double l = 0.0);

}  // namespace resetsearch::analysis
