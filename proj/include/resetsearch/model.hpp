#pragma once

// Core domain types: diffusion parameters, resetting-rate families, target
// distributions and search supports. Everything is immutable after
// construction and safe to share across threads.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "resetsearch/error.hpp"
#include "resetsearch/logspace.hpp"
#include "resetsearch/numeric.hpp"

namespace resetsearch::model {

struct ModelParams {
  double D = 1.0;
  explicit ModelParams(double d) : D(d) {
    if (!(d > 0.0) || !std::isfinite(d)) throw Error(ErrorCode::InvalidParameter, "D must be > 0");
  }
};

enum class Side { Left, Right };
inline double side_sign(Side s) { return s == Side::Right ? 1.0 : -1.0; }

// How log phi grows along one tail; drives integrability gates and
// beyond-grid extrapolation of hitting times.
enum class PhiGrowthKind { Power, Exponential, Stretched };

struct PhiGrowth {
  PhiGrowthKind kind = PhiGrowthKind::Exponential;
  double power_m = 0.0;    // Power: log phi ~ power_m * log|x|
  double exp_s = 0.0;      // Exponential: log phi ~ exp_s * |x|
  double stretch_k = 0.0;  // Stretched: log phi ~ stretch_k * |x|^stretch_p
  double stretch_p = 1.0;
};

enum class SideFiniteness { Finite, Infinite, Boundary };

struct RateTail {
  double lambda_hat = 0.0;  // lim x^2 r(x) / D, may be +inf
  SideFiniteness cls = SideFiniteness::Finite;
  PhiGrowth growth;
};

// m solving m(m-1)/2 = lambda, the positive root of the power-tail balance.
inline double power_exponent_from_lambda(double lambda) {
  return 0.5 * (1.0 + std::sqrt(1.0 + 8.0 * lambda));
}

struct ConstantRate {
  double r;
};

// r(x) = c (gamma + x^2)^l
struct PowerLawRate {
  double c, gamma, l;
};

// r(x) = m(m-1)/2 * D |x|^{m-2} / (gamma + |x|^m); harmonic for gamma + |x|^m.
struct QuadDecayPolyRate {
  double m, gamma, D;
};

// r(x) = (D/2)(S'^2 + S'') with S(x) = lambda (gamma + x^2)^{(l+1)/2}.
struct StretchedExpHarmonicRate {
  double lambda, gamma, l, D;
};

struct TabulatedRate {
  std::vector<double> grid;
  std::vector<double> values;
  // Declared tail laws r(x) ~ c |x|^{-p} beyond the grid; required for
  // finiteness classification, optional for pure interval work.
  std::optional<double> c_plus, p_plus, c_minus, p_minus;
};

class Rate {
 public:
  using Variant =
      std::variant<ConstantRate, PowerLawRate, QuadDecayPolyRate, StretchedExpHarmonicRate, TabulatedRate>;

  explicit Rate(Variant v);

  double eval(double x) const;
  bool is_even() const;
  // Representative length of the non-asymptotic core; the default grid domain
  // is max(50, 10 * scale(D)).
  double scale(double D) const;
  // Points where the rate's derivative may jump (tabulated grid knots, |x|
  // kinks). Integrators must place nodes here or lose their error estimates.
  std::vector<double> breakpoints() const;
  RateTail tail(Side side, double D) const;
  const Variant& family() const { return v_; }
  std::string family_name() const;

 private:
  Variant v_;
  numeric::MonotoneCubic tab_interp_;  // only for TabulatedRate
};

double rate_eval(const Rate& rate, double x);

struct TwoSidedExponential {
  double beta;
};

struct UniformInterval {
  double A;
};

// density (A - |a|) / A^2 on [-A, A]
struct TriangularInterval {
  double A;
};

struct PointMass {
  double a;
};

struct Target;

struct Mixture {
  std::vector<double> weights;
  std::vector<Target> components;
};

struct TabulatedDensity {
  std::vector<double> grid;
  std::vector<double> values;
  // Declared algebraic tails: density ~ c |a|^{-(p0+1)} beyond the grid edge,
  // amplitude continued from the edge value. p0 absent means compact support.
  std::optional<double> p0_plus, p0_minus;
};

// Tail weight of one half of mu, used by the divergence gates.
enum class MuTailKind { Compact, Exponential, Pareto };

struct MuTail {
  MuTailKind kind = MuTailKind::Compact;
  double edge = 0.0;   // Compact: |a| <= edge
  double beta = 0.0;   // Exponential decay rate
  double p0 = 0.0;     // Pareto: p-th moment finite iff p < p0
};

class Target {
 public:
  using Variant = std::variant<TwoSidedExponential, UniformInterval, TriangularInterval, PointMass,
                               Mixture, TabulatedDensity>;

  explicit Target(Variant v);

  double total_mass() const;  // 1 within tolerance by construction
  double cdf(double a) const;
  // log of the continuous density part; -inf where zero. Atoms excluded.
  double log_density(double a) const;
  std::vector<std::pair<double, double>> atoms() const;  // (location, mass)
  double mass_at_zero() const;
  double mass_positive() const;  // mu((0, inf))
  bool is_symmetric() const;
  double avg_dist() const;  // integral |a| mu(da), +inf when divergent
  MuTail side_tail(Side side) const;
  // Largest |a| that matters at the given density cut; edge for compact laws.
  double effective_extent(Side side, double log_density_floor) const;
  const Variant& family() const { return v_; }
  std::string family_name() const;

 private:
  Variant v_;
  double log_norm_ = 0.0;                 // TabulatedDensity normalization
  numeric::MonotoneCubic tab_dens_;       // density interpolant (pre-normalization)
  std::vector<double> tab_cdf_;           // normalized cdf at tabulated grid nodes
  double tab_mass_minus_tail_ = 0.0;      // normalized mass below grid.front()
  double tab_mass_plus_tail_ = 0.0;       // normalized mass above grid.back()
  void init_tabulated();
};

// Normalized restriction of mu to one half-line.
struct HalfTarget {
  double mass = 0.0;  // un-normalized mass of this half
  std::vector<std::pair<double, double>> atoms;   // |location| > 0, normalized mass
  std::function<double(double)> log_density;      // at |a| > 0, normalized
  bool has_density = false;
  MuTail tail;
  double scale = 1.0;  // representative |a| for quadrature substitution
};

struct SplitResult {
  double p = 0.0;  // mass on (0, inf)
  HalfTarget plus, minus;
};

// Decomposition mu = (1-p) mu_- + p mu_+. Throws AtomAtOrigin / OneSided.
SplitResult distribution_split(const Target& mu);
// Same but tolerating a one-sided mu (the empty half has mass 0).
SplitResult distribution_split_relaxed(const Target& mu);

struct FullLine {};

struct Interval {
  double L1, L2;
};

class SupportSpec {
 public:
  using Variant = std::variant<FullLine, Interval>;
  explicit SupportSpec(Variant v) : v_(std::move(v)) {
    if (auto* iv = std::get_if<Interval>(&v_)) {
      if (!(iv->L1 > 0.0) || !(iv->L2 > 0.0))
        throw Error(ErrorCode::InvalidParameter, "interval extents must be > 0");
    }
  }
  bool is_full_line() const { return std::holds_alternative<FullLine>(v_); }
  const Variant& value() const { return v_; }

 private:
  Variant v_;
};

struct ModelSpec {
  double D = 1.0;
  std::optional<Rate> rate;
  std::optional<Target> target;
  SupportSpec support{FullLine{}};
};

}  // namespace resetsearch::model
