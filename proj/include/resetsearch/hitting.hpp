#pragma once

// Expected time for a diffusing searcher restarted from the origin to first
// reach a target point a. Full-line values come from quadratures of a
// harmonic solution phi (the renewal components u and v below); compactly
// confined searchers get a direct boundary-value solve.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "resetsearch/harmonic.hpp"
#include "resetsearch/logspace.hpp"
#include "resetsearch/model.hpp"

namespace resetsearch::hitting {

enum class Method {
  ClosedForm,
  Phi3Quadrature,
  Phi1Quadrature,
  IntervalClosedForm,
  IntervalGeneral,
};

const char* method_name(Method m);

struct HittingTimeResult {
  double a = 0.0;
  bool finite = true;
  double log_value = kNegInf;  // log of the expected time; 0 seconds at a = 0
  Method method = Method::ClosedForm;
  double error_estimate = 0.0;  // relative
  std::string diagnostic;       // nonempty when the finiteness channels disagree
  double value() const;         // exp(log_value), +inf when not finite
};

// One restart cycle: u is the chance the free search reaches the target
// before the clock restarts it, v the expected duration of one attempt.
// The expected total time is v(0)/u(0).
struct HittingComponents {
  double log_u = 0.0;  // <= 0 (it is a probability)
  bool v_finite = true;
  double log_v = kNegInf;
};

// Constant restart rate r > 0: E = (e^{sqrt(2r/D)|a|} - 1) / r.
HittingTimeResult expected_hitting_constant(double r, double D, double a);

// Components from prepared cumulative integrals. cum.phi().kind selects the
// formula set: the two-sided phi3 or the one-sided phi1. phi2 has none.
HittingComponents hitting_components(const harmonic::CumulativeIntegrals& cum, double a);

enum class PhiChoice { Auto, ForcePhi3, ForcePhi1 };

struct GeneralPolicy {
  double X = 0.0;  // domain half-width; 0 sizes it from the rate and targets
  double quad_rel_tol = 1e-11;
  PhiChoice phi = PhiChoice::Auto;
  harmonic::GridPolicy grid;  // integrator knobs; the X member is overridden
};

// Builds phi once (closed form when the family has one, grid construction
// otherwise) plus its cumulative integrals, then serves many targets.
class GeneralEvaluator {
 public:
  GeneralEvaluator(const model::Rate& rate, double D, const GeneralPolicy& policy = {},
                   const std::vector<double>& targets = {});

  HittingTimeResult eval(double a) const;
  HittingComponents components(double a) const { return hitting_components(*cum_, a); }

  Method method() const { return method_; }
  const harmonic::HarmonicSolution& phi() const { return cum_->phi(); }
  const harmonic::CumulativeIntegrals& cumulatives() const { return *cum_; }
  double domain() const { return cum_->truncation(); }

 private:
  model::Rate rate_;
  double D_;
  Method method_ = Method::Phi3Quadrature;
  std::optional<harmonic::CumulativeIntegrals> cum_;
  double base_error_ = 0.0;
};

HittingTimeResult expected_hitting_general(const model::Rate& rate, double D, double a,
                                           PhiChoice choice = PhiChoice::Auto);

// Is the expected time finite for every target? Combines the two tail
// verdicts: one weak tail already makes some targets unreachable in finite
// mean time.
model::SideFiniteness classify_finiteness(const model::Rate& rate, double D);

// Searcher confined between walls at -L1 and L2 that send it back to the
// origin on contact (a forced restart), target a inside. Constant rates use
// the closed form, anything else the boundary-value solve.
HittingTimeResult expected_hitting_interval(const model::Rate& rate, double D, double L1,
                                            double L2, double a);
HittingTimeResult expected_hitting_interval_fn(const std::function<double(double)>& rate,
                                               double D, double L1, double L2, double a);

}  // namespace resetsearch::hitting
