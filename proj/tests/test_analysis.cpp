#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "resetsearch/analysis.hpp"
#include "resetsearch/error.hpp"
#include "resetsearch/hitting.hpp"
#include "resetsearch/model.hpp"

using namespace resetsearch;
using analysis::GrowthModel;
using analysis::ObjectivePolicy;
using analysis::ObjectiveValue;
using analysis::ParametricPhi;
using model::Rate;
using model::SupportSpec;
using model::Target;

namespace {

template <typename F>
ErrorCode thrown_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ParseError;  // sentinel: nothing thrown
}

double rel_err(double got, double want) { return std::fabs(got / want - 1.0); }

SupportSpec full_line() { return SupportSpec(model::FullLine{}); }

bool mentions(const std::string& text, const char* word) {
  return text.find(word) != std::string::npos;
}

// Laplace target with both tails continued as c |a|^{-(p0+1)} past |a| = 1.
// The interior grid carries half the unnormalized mass, the tails the rest.
Target heavy_tailed_target(double p0) {
  std::vector<double> grid = {-1.0, -0.5, 0.0, 0.5, 1.0};
  std::vector<double> vals = {0.25, 0.25, 0.25, 0.25, 0.25};
  return Target(model::TabulatedDensity{grid, vals, p0, p0});
}

}  // namespace

TEST_CASE("constant rate, exponential target: quadrature matches the closed form") {
  // E(a) = (exp(s|a|) - 1)/r with s = sqrt(2r/D) integrates against the
  // two-sided exponential density to s / (r (beta - s)) when beta > s.
  struct Case {
    double r, D, beta;
  };
  for (Case c : {Case{0.125, 1.0, 1.0}, Case{2.0, 2.0, 2.0}, Case{1.0, 1.0, 3.0}}) {
    double s = std::sqrt(2.0 * c.r / c.D);
    double want = s / (c.r * (c.beta - s));
    auto v = analysis::expected_search_time(Rate(model::ConstantRate{c.r}), c.D,
                                            Target(model::TwoSidedExponential{c.beta}),
                                            full_line());
    REQUIRE(v.finite);
    CHECK(rel_err(v.value, want) < 1e-9);
    CHECK(rel_err(std::exp(v.log_value), want) < 1e-9);
    CHECK(v.error_estimate < 1e-6);
    CHECK(v.plus_part == doctest::Approx(v.minus_part).epsilon(1e-12));
    CHECK(v.plus_part + v.minus_part == doctest::Approx(v.value).epsilon(1e-12));
  }
}

TEST_CASE("constant rate at or past the critical strength reports infinity") {
  Target mu(model::TwoSidedExponential{1.0});
  // s = beta exactly: the integrand stops decaying.
  auto at = analysis::expected_search_time(Rate(model::ConstantRate{0.5}), 1.0, mu, full_line());
  CHECK_FALSE(at.finite);
  CHECK(std::isinf(at.value));
  CHECK(std::isinf(at.log_value));
  CHECK(!at.diagnostic.empty());
  // s > beta: even worse.
  auto past = analysis::expected_search_time(Rate(model::ConstantRate{2.0}), 1.0, mu, full_line());
  CHECK_FALSE(past.finite);
  // r = 0 on the full line: no restarts, no finite hitting time anywhere.
  auto free = analysis::expected_search_time(Rate(model::ConstantRate{0.0}), 1.0, mu, full_line());
  CHECK_FALSE(free.finite);
  CHECK(mentions(free.diagnostic, "without restarts"));
}

TEST_CASE("point-mass targets reduce to the single-target formula") {
  double r = 1.7, D = 1.3;
  Target mu(model::Mixture{{0.6, 0.4},
                           {Target(model::PointMass{1.2}), Target(model::PointMass{-0.8})}});
  auto v = analysis::expected_search_time(Rate(model::ConstantRate{r}), D, mu, full_line());
  double ep = hitting::expected_hitting_constant(r, D, 1.2).value();
  double em = hitting::expected_hitting_constant(r, D, -0.8).value();
  REQUIRE(v.finite);
  CHECK(rel_err(v.value, 0.6 * ep + 0.4 * em) < 1e-12);
  CHECK(rel_err(v.plus_part, 0.6 * ep) < 1e-12);
  CHECK(rel_err(v.minus_part, 0.4 * em) < 1e-12);
  CHECK_FALSE(mentions(v.diagnostic, "doubled"));
}

TEST_CASE("interval search with no restart clock averages the two-wall escape time") {
  // Between walls at +-1 the no-clock expected time to a > 0 is a (a + 1) / D,
  // and the uniform average over [-1, 1] is 5/6.
  SupportSpec box{model::Interval{1.0, 1.0}};
  auto v = analysis::expected_search_time(Rate(model::ConstantRate{0.0}), 1.0,
                                          Target(model::UniformInterval{1.0}), box);
  REQUIRE(v.finite);
  CHECK(rel_err(v.value, 5.0 / 6.0) < 1e-9);
  CHECK(mentions(v.diagnostic, "doubled"));
}

TEST_CASE("general interval rates agree with the direct two-wall solver") {
  double D = 1.0;
  Rate rate(model::PowerLawRate{1.0, 1.0, 1.0});  // r(x) = 1 + x^2, no closed form
  SupportSpec box{model::Interval{1.5, 1.0}};
  Target mu(model::Mixture{{0.7, 0.3},
                           {Target(model::PointMass{0.4}), Target(model::PointMass{-0.9})}});
  auto v = analysis::expected_search_time(rate, D, mu, box);
  double ep = hitting::expected_hitting_interval(rate, D, 1.5, 1.0, 0.4).value();
  double em = hitting::expected_hitting_interval(rate, D, 1.5, 1.0, -0.9).value();
  REQUIRE(v.finite);
  CHECK(rel_err(v.value, 0.7 * ep + 0.3 * em) < 1e-9);
}

TEST_CASE("constant-rate interval objective matches an independent average") {
  double r = 0.7, D = 1.0;
  SupportSpec box{model::Interval{1.0, 1.0}};
  auto v = analysis::expected_search_time(Rate(model::ConstantRate{r}), D,
                                          Target(model::UniformInterval{1.0}), box);
  // Simpson over the closed interval formula; density is 1/2 on [-1, 1].
  int n = 4000;
  double h = 2.0 / n, acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    double a = -1.0 + i * h;
    double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * 0.5 * hitting::expected_hitting_interval(Rate(model::ConstantRate{r}), D, 1.0,
                                                        1.0, a)
                     .value();
  }
  acc *= h / 3.0;
  REQUIRE(v.finite);
  CHECK(rel_err(v.value, acc) < 1e-6);
}

TEST_CASE("interval geometry is validated against the target") {
  SupportSpec box{model::Interval{1.0, 1.0}};
  Rate r1(model::ConstantRate{1.0});
  CHECK(thrown_code([&] {
          analysis::expected_search_time(r1, 1.0, Target(model::UniformInterval{2.0}), box);
        }) == ErrorCode::InvalidParameter);
  CHECK(thrown_code([&] {
          analysis::expected_search_time(r1, 1.0, Target(model::PointMass{1.5}), box);
        }) == ErrorCode::InvalidParameter);
  CHECK(thrown_code([&] {
          analysis::expected_search_time(r1, 1.0, Target(model::TwoSidedExponential{1.0}), box);
        }) == ErrorCode::InvalidParameter);
  // An atom exactly on a wall is still inside the search region.
  auto edge = analysis::expected_search_time(r1, 1.0, Target(model::PointMass{1.0}), box);
  CHECK(edge.finite);
  CHECK(edge.value ==
        doctest::Approx(hitting::expected_hitting_interval(r1, 1.0, 1.0, 1.0, 1.0).value())
            .epsilon(1e-12));
}

TEST_CASE("a target sitting on the start point is rejected") {
  CHECK(thrown_code([&] {
          analysis::expected_search_time(Rate(model::ConstantRate{1.0}), 1.0,
                                         Target(model::PointMass{0.0}), full_line());
        }) == ErrorCode::AtomAtOrigin);
}

TEST_CASE("objective policies are validated") {
  Rate r1(model::ConstantRate{1.0});
  Target mu(model::TwoSidedExponential{2.0});
  ObjectivePolicy bad;
  bad.max_nodes = 32;
  CHECK(thrown_code([&] {
          analysis::expected_search_time(r1, 1.0, mu, full_line(), bad);
        }) == ErrorCode::InvalidParameter);
  bad = ObjectivePolicy{};
  bad.x_cap = -1.0;
  CHECK(thrown_code([&] {
          analysis::expected_search_time(r1, 1.0, mu, full_line(), bad);
        }) == ErrorCode::InvalidParameter);
  bad = ObjectivePolicy{};
  bad.quad_rel_tol = 0.0;
  CHECK(thrown_code([&] {
          analysis::expected_search_time(r1, 1.0, mu, full_line(), bad);
        }) == ErrorCode::InvalidParameter);
}

TEST_CASE("symmetric targets are folded onto one side") {
  auto v = analysis::expected_search_time(Rate(model::ConstantRate{1.0}), 1.0,
                                          Target(model::UniformInterval{1.0}), full_line());
  REQUIRE(v.finite);
  CHECK(mentions(v.diagnostic, "doubled"));
  CHECK(v.plus_part == doctest::Approx(v.minus_part).epsilon(1e-12));
}

TEST_CASE("tabulated rates without declared tails refuse unbounded targets") {
  std::vector<double> grid = {-2.0, -1.0, 0.0, 1.0, 2.0};
  std::vector<double> vals = {1.0, 1.0, 1.0, 1.0, 1.0};
  Rate rate(model::TabulatedRate{grid, vals, {}, {}, {}, {}});
  CHECK(thrown_code([&] {
          analysis::expected_search_time(rate, 1.0, Target(model::TwoSidedExponential{1.0}),
                                         full_line());
        }) == ErrorCode::MissingTail);
}

TEST_CASE("an even rate sees a mirrored target with the sides swapped") {
  // Lopsided compact density: most of the mass sits right of the origin.
  std::vector<double> grid = {-1.0, -0.5, 0.0, 0.5, 1.0};
  std::vector<double> vals = {0.1, 0.1, 0.3, 0.5, 0.5};
  Target lop(model::TabulatedDensity{grid, vals, {}, {}});
  std::vector<double> rgrid = {-1.0, -0.5, 0.0, 0.5, 1.0};
  std::vector<double> rvals = {0.5, 0.5, 0.3, 0.1, 0.1};
  Target pol(model::TabulatedDensity{rgrid, rvals, {}, {}});
  Rate rate(model::ConstantRate{1.0});
  auto a = analysis::expected_search_time(rate, 1.0, lop, full_line());
  auto b = analysis::expected_search_time(rate, 1.0, pol, full_line());
  REQUIRE(a.finite);
  REQUIRE(b.finite);
  CHECK(rel_err(a.value, b.value) < 1e-9);
  CHECK(rel_err(a.plus_part, b.minus_part) < 1e-9);
  CHECK(rel_err(a.minus_part, b.plus_part) < 1e-9);
  CHECK(a.plus_part > 2.0 * a.minus_part);  // the lopsidedness must show up
}

TEST_CASE("second-moment failure defeats every restart family") {
  // Tail index 2 on both sides: the attempt-duration weight a^2 integrates to
  // infinity against the target no matter how the rate grows.
  Target mu = heavy_tailed_target(2.0);
  double D = 1.0;
  std::vector<Rate> rates;
  rates.emplace_back(model::ConstantRate{1.0});
  rates.emplace_back(model::QuadDecayPolyRate{3.0, 1.0, D});
  rates.emplace_back(model::QuadDecayPolyRate{2.5, 1.0, D});
  rates.emplace_back(model::PowerLawRate{6.0, 1.0, -1.0});
  rates.emplace_back(model::StretchedExpHarmonicRate{1.0, 1.0, 1.0, D});
  for (const auto& rate : rates) {
    auto v = analysis::expected_search_time(rate, D, mu, full_line());
    CHECK_FALSE(v.finite);
    CHECK(std::isinf(v.value));
    CHECK(!v.diagnostic.empty());
  }
}

TEST_CASE("moderate algebraic tails admit exactly the slow-growth rates") {
  Target mu = heavy_tailed_target(3.0);
  double D = 1.0;
  // lambda = 1.5 induces growth index (1 + sqrt(13))/2 = 2.3028 < 3: finite.
  auto ok = analysis::expected_search_time(Rate(model::PowerLawRate{1.5, 1.0, -1.0}), D, mu,
                                           full_line());
  CHECK(ok.finite);
  CHECK(ok.value > 0.0);
  CHECK(ok.error_estimate < 1e-2);
  // lambda = 3 gives index exactly 3; lambda = 6 gives 4: both infinite.
  for (double lambda : {3.0, 6.0}) {
    auto v = analysis::expected_search_time(Rate(model::PowerLawRate{lambda, 1.0, -1.0}), D, mu,
                                            full_line());
    CHECK_FALSE(v.finite);
  }
  auto ok2 = analysis::expected_search_time(Rate(model::QuadDecayPolyRate{2.5, 1.0, D}), D, mu,
                                            full_line());
  CHECK(ok2.finite);
  auto bad2 = analysis::expected_search_time(Rate(model::QuadDecayPolyRate{3.2, 1.0, D}), D, mu,
                                             full_line());
  CHECK_FALSE(bad2.finite);
}

TEST_CASE("algebraic rate objective matches an independent reference") {
  // quad-decay shape m = 3, gamma = 1 against the unit exponential target.
  auto v = analysis::expected_search_time(Rate(model::QuadDecayPolyRate{3.0, 1.0, 1.0}), 1.0,
                                          Target(model::TwoSidedExponential{1.0}), full_line());
  REQUIRE(v.finite);
  CHECK(rel_err(v.value, 14.64474956876619) < 1e-5);
}

TEST_CASE("a cosh profile reproduces its induced constant-rate search") {
  double D = 2.0;
  auto phi = ParametricPhi::cosh_scale(1.0);
  Target mu(model::TwoSidedExponential{2.0});
  // induced rate (D/2) k^2 = 1, so s = 1 and the objective is 1/(1 (2 - 1)).
  auto via_phi = analysis::variational_objective(phi, D, mu);
  auto via_rate = analysis::expected_search_time(phi.induced_family(D), D, mu, full_line());
  REQUIRE(via_phi.finite);
  REQUIRE(via_rate.finite);
  CHECK(rel_err(via_rate.value, 1.0) < 1e-9);
  CHECK(rel_err(via_phi.value, 1.0) < 5e-5);
  CHECK(mentions(via_phi.diagnostic, "doubled"));
}

TEST_CASE("a polynomial profile matches its induced algebraic rate") {
  auto phi = ParametricPhi::mollified_polynomial(3.0, 1.0);
  auto via_phi = analysis::variational_objective(phi, 1.0, Target(model::TwoSidedExponential{1.0}));
  REQUIRE(via_phi.finite);
  CHECK(rel_err(via_phi.value, 14.64474956876619) < 5e-4);
}

TEST_CASE("profiles that induce no admissible restart rate are rejected") {
  Target mu(model::UniformInterval{1.0});
  CHECK(thrown_code([&] {
          analysis::variational_objective(ParametricPhi::cosh_scale(0.0), 1.0, mu);
        }) == ErrorCode::InadmissiblePhi);
  // m < 1 makes the profile concave away from the origin.
  CHECK(thrown_code([&] {
          analysis::variational_objective(ParametricPhi::mollified_polynomial(0.5, 1.0), 1.0, mu);
        }) == ErrorCode::InadmissiblePhi);
}

TEST_CASE("a stretched profile agrees with its induced family and shares its limits") {
  double D = 1.0;
  auto phi = ParametricPhi::stretched_exp(1.0, 1.0, 1.0);
  Rate rate(model::StretchedExpHarmonicRate{1.0, 1.0, 1.0, D});
  Target compact(model::UniformInterval{1.0});
  auto via_phi = analysis::variational_objective(phi, D, compact);
  auto via_rate = analysis::expected_search_time(rate, D, compact, full_line());
  REQUIRE(via_phi.finite);
  REQUIRE(via_rate.finite);
  CHECK(rel_err(via_phi.value, via_rate.value) < 1e-3);
  // Against an exponential target the quadratic log-growth defeats both paths.
  Target exp_mu(model::TwoSidedExponential{1.0});
  CHECK_FALSE(analysis::variational_objective(phi, D, exp_mu).finite);
  CHECK_FALSE(analysis::expected_search_time(rate, D, exp_mu, full_line()).finite);
}

TEST_CASE("the optimal constant rate for a uniform target between walls is zero") {
  SupportSpec box{model::Interval{1.0, 1.0}};
  auto rep = analysis::optimize_constant_rate(1.0, Target(model::UniformInterval{1.0}), box);
  REQUIRE(rep.params.size() == 1);
  CHECK(rep.params[0] == 0.0);
  REQUIRE(rep.x_star.has_value());
  CHECK(*rep.x_star == 0.0);
  CHECK(rel_err(rep.value, 5.0 / 6.0) < 1e-9);
  CHECK(rep.converged);
}

TEST_CASE("the optimal constant rate for a triangular target between walls") {
  SupportSpec box{model::Interval{1.0, 1.0}};
  auto rep = analysis::optimize_constant_rate(1.0, Target(model::TriangularInterval{1.0}), box);
  REQUIRE(rep.params.size() == 1);
  REQUIRE(rep.x_star.has_value());
  CHECK(std::fabs(*rep.x_star - 1.3537913628465561) < 1e-4);
  CHECK(rel_err(rep.params[0], 0.91637552705896790) < 1e-4);
  CHECK(rel_err(rep.value, 0.49527612773608890) < 1e-6);
  CHECK(rep.converged);
  CHECK(!rep.trace.empty());
  // The report is the best point seen anywhere in the search.
  for (const auto& t : rep.trace)
    if (t.finite) CHECK(rep.value <= t.value * (1.0 + 1e-12));
  // Diffusive scaling: widening the box by 3 scales time by 9 and rate by 1/9.
  SupportSpec box3{model::Interval{3.0, 3.0}};
  auto rep3 = analysis::optimize_constant_rate(1.0, Target(model::TriangularInterval{3.0}), box3);
  CHECK(rel_err(rep3.value, 9.0 * rep.value) < 1e-6);
  CHECK(rel_err(rep3.params[0], rep.params[0] / 9.0) < 1e-4);
  CHECK(std::fabs(*rep3.x_star - *rep.x_star) < 1e-4);
}

TEST_CASE("the optimal constant rate for an exponential target") {
  struct Case {
    double beta, D;
  };
  for (Case c : {Case{1.0, 1.0}, Case{2.0, 0.5}}) {
    auto rep = analysis::optimize_constant_rate(c.D, Target(model::TwoSidedExponential{c.beta}),
                                                full_line());
    double r_want = c.D * c.beta * c.beta / 8.0;
    double v_want = 8.0 / (c.D * c.beta * c.beta);
    REQUIRE(rep.params.size() == 1);
    CHECK(rel_err(rep.params[0], r_want) < 2e-3);
    CHECK(rel_err(rep.value, v_want) < 1e-5);
    CHECK(rep.converged);
    CHECK_FALSE(rep.x_star.has_value());
  }
}

TEST_CASE("optimization reports when no constant rate achieves a finite objective") {
  CHECK(thrown_code([&] {
          analysis::optimize_constant_rate(1.0, heavy_tailed_target(2.0), full_line());
        }) == ErrorCode::NonFinite);
}

TEST_CASE("fitted growth exponents recover the algebraic rate index") {
  std::vector<double> grid = {10.0, 20.0, 40.0, 80.0, 160.0};
  auto fit = analysis::estimate_growth(Rate(model::QuadDecayPolyRate{3.0, 1.0, 1.0}), 1.0, grid,
                                       GrowthModel::PowerLaw);
  CHECK(std::fabs(fit.exponent - 3.0) < 0.1);
  CHECK(fit.r_squared > 0.9999);
  CHECK(fit.coeff > 0.0);
  auto fit2 = analysis::estimate_growth(Rate(model::PowerLawRate{3.0, 1.0, -1.0}), 1.0, grid,
                                        GrowthModel::PowerLaw);
  CHECK(std::fabs(fit2.exponent - 3.0) < 0.1);
  CHECK(fit2.r_squared > 0.999);
}

TEST_CASE("fitted log-slopes recover the restart length scale") {
  auto flat = analysis::estimate_growth(Rate(model::ConstantRate{1.0}), 1.0,
                                        {5.0, 10.0, 20.0, 40.0}, GrowthModel::LogPolynomial, 0.0);
  CHECK(flat.exponent == doctest::Approx(1.0));
  CHECK(std::fabs(flat.coeff - std::sqrt(2.0)) < 0.01);
  CHECK(flat.r_squared > 0.999999);
  auto quad = analysis::estimate_growth(Rate(model::StretchedExpHarmonicRate{1.0, 1.0, 1.0, 1.0}),
                                        1.0, {2.0, 3.0, 4.0, 6.0}, GrowthModel::LogPolynomial,
                                        1.0);
  CHECK(quad.exponent == doctest::Approx(2.0));
  CHECK(std::fabs(quad.coeff - 1.0) < 0.05);
  CHECK(quad.r_squared > 0.999);
}

TEST_CASE("growth estimation refuses targets it cannot reach") {
  // lambda <= 1 leaves every off-origin target at infinite expected time.
  CHECK(thrown_code([&] {
          analysis::estimate_growth(Rate(model::PowerLawRate{0.5, 1.0, -1.0}), 1.0,
                                    {10.0, 20.0, 40.0, 80.0}, GrowthModel::PowerLaw);
        }) == ErrorCode::InfiniteSample);
  Rate r1(model::ConstantRate{1.0});
  CHECK(thrown_code([&] {
          analysis::estimate_growth(r1, 1.0, {1.0, 2.0, 3.0}, GrowthModel::PowerLaw);
        }) == ErrorCode::InvalidParameter);
  CHECK(thrown_code([&] {
          analysis::estimate_growth(r1, 1.0, {0.0, 1.0, 2.0, 3.0}, GrowthModel::PowerLaw);
        }) == ErrorCode::InvalidParameter);
  CHECK(thrown_code([&] {
          analysis::estimate_growth(r1, 1.0, {1.0, 2.0, 3.0, 4.0}, GrowthModel::LogPolynomial,
                                    -1.0);
        }) == ErrorCode::InvalidParameter);
}

TEST_CASE("family optimization finds the best algebraic profile") {
  auto rep = analysis::optimize_family(1.0, Target(model::TwoSidedExponential{0.5}));
  REQUIRE(rep.params.size() == 2);
  CHECK(rel_err(rep.value, 32.560001) < 0.02);
  analysis::FamilyBox box;
  CHECK(rep.params[0] > box.m_lo + 1e-3);
  CHECK(rep.params[0] < box.m_hi - 1e-3);
  CHECK(rep.converged);
  for (const auto& t : rep.trace)
    if (t.finite) CHECK(rep.value <= t.value * (1.0 + 1e-12));
}

TEST_CASE("family optimization reports when every member stays infinite") {
  CHECK(thrown_code([&] {
          analysis::optimize_family(1.0, heavy_tailed_target(2.0));
        }) == ErrorCode::NonFinite);
}
