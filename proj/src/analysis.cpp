#include "resetsearch/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "resetsearch/error.hpp"
#include "resetsearch/harmonic.hpp"
#include "resetsearch/numeric.hpp"

namespace resetsearch::analysis {

using model::MuTail;
using model::MuTailKind;
using model::PhiGrowth;
using model::PhiGrowthKind;
using model::Side;

namespace {

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[192];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// ------------------------------------------------------------------ gates --

// How log E grows with the target distance. Along a finite side the expected
// time keeps a quadratic floor no matter how weak the tail restarts are: the
// attempt-duration weight phi^{-2} PhiInt accumulates like a^{2-m} whenever
// phi itself grows slower than x^2, and the product lands back on a^2.
PhiGrowth effective_growth(PhiGrowth g) {
  if (g.kind == PhiGrowthKind::Power) g.power_m = std::max(g.power_m, 2.0);
  return g;
}

double growth_log(const PhiGrowth& g, double a) {
  switch (g.kind) {
    case PhiGrowthKind::Power:
      return g.power_m * std::log(a);
    case PhiGrowthKind::Exponential:
      return g.exp_s * a;
    case PhiGrowthKind::Stretched:
      return g.stretch_k * std::pow(a, g.stretch_p);
  }
  return 0.0;
}

struct Gate {
  bool finite = true;
  std::string why;
};

// Does E(a) mu(da) converge along one unbounded tail of mu?
Gate growth_vs_tail(const PhiGrowth& g, const MuTail& t) {
  if (t.kind == MuTailKind::Compact) return {};
  if (t.kind == MuTailKind::Exponential) {
    switch (g.kind) {
      case PhiGrowthKind::Power:
        return {};
      case PhiGrowthKind::Exponential:
        if (g.exp_s < t.beta * (1.0 - 1e-12)) return {};
        return {false, fmt("hitting times grow like exp(%.6g |a|) against a target tail "
                           "decaying only like exp(-%.6g |a|)",
                           g.exp_s, t.beta)};
      case PhiGrowthKind::Stretched:
        if (g.stretch_p < 1.0) return {};
        if (g.stretch_p == 1.0 && g.stretch_k < t.beta * (1.0 - 1e-12)) return {};
        return {false, fmt("stretched-exponential hitting growth of order |a|^%.4g overwhelms "
                           "an exponential target tail",
                           g.stretch_p)};
    }
  }
  // Power-law target tail: only power growth strictly below p0 integrates.
  if (g.kind == PhiGrowthKind::Power && g.power_m < t.p0 * (1.0 - 1e-12)) return {};
  if (g.kind == PhiGrowthKind::Power)
    return {false, fmt("hitting times grow like |a|^%.6g but the target has finite moments "
                       "only below order %.6g",
                       g.power_m, t.p0)};
  return {false, "exponential hitting growth against a power-law target tail"};
}

// --------------------------------------------------------------- provider --

// One half line of targets: log E at distance d > 0, plus the growth model
// used to gate divergence and to continue E past the resolved domain.
struct SideProvider {
  std::function<double(double)> log_E;
  PhiGrowth growth{};
  bool has_growth = false;
  bool pointwise_finite = true;
  std::string infinite_why;
  double base_error = 0.0;
  double x_exact = kPosInf;  // log_E switches to the growth model beyond this
  double extrap_model_err = 0.0;
};

void constant_line_providers(double r, double D, SideProvider out[2]) {
  if (!(r > 0.0)) {
    for (int i = 0; i < 2; ++i) {
      out[i].pointwise_finite = false;
      out[i].infinite_why =
          "without restarts the free search reaches any target only at infinite expected time";
    }
    return;
  }
  double s = std::sqrt(2.0 * r / D), logr = std::log(r);
  for (int i = 0; i < 2; ++i) {
    out[i].log_E = [s, logr](double d) { return s * d + log1mexp(-s * d) - logr; };
    out[i].growth = {PhiGrowthKind::Exponential, 0.0, s, 0.0, 1.0};
    out[i].has_growth = true;
    out[i].base_error = 1e-14;
    out[i].extrap_model_err = 0.0;
  }
}

void interval_providers(const model::Rate& rate, double D, double L1, double L2,
                        SideProvider out[2]) {
  bool closed = std::get_if<model::ConstantRate>(&rate.family()) != nullptr;
  for (int i = 0; i < 2; ++i) {
    double sign = i == 0 ? 1.0 : -1.0;
    model::Rate r = rate;
    out[i].log_E = [r, D, L1, L2, sign](double d) {
      return hitting::expected_hitting_interval(r, D, L1, L2, sign * d).log_value;
    };
    out[i].base_error = closed ? 1e-13 : 3e-7;
  }
}

// Smallest distance past which the model integrand log density + log E has
// dropped 45 nats below its peak; large targets beyond contribute nothing.
double side_extent(const model::HalfTarget& half, const std::optional<PhiGrowth>& g) {
  double ext = 0.0;
  for (const auto& [d, m] : half.atoms) ext = std::max(ext, std::fabs(d));
  if (!half.has_density) return ext;
  if (half.tail.kind == MuTailKind::Compact) return std::max(ext, half.tail.edge);
  if (!g) return kPosInf;
  double S = std::max(half.scale, 1e-12);
  auto f = [&](double a) {
    double ld = half.tail.kind == MuTailKind::Exponential ? -half.tail.beta * a
                                                          : -(half.tail.p0 + 1.0) * std::log(a);
    return ld + growth_log(*g, a);
  };
  const int n = 400;
  double lo = std::log(S * 1e-2), hi = std::log(S * 1e9);
  double fpeak = -kPosInf;
  double stop = S * 1e9;
  bool found = false;
  for (int i = 0; i <= n; ++i) {
    double a = std::exp(lo + (hi - lo) * i / n);
    double v = f(a);
    if (v > fpeak) {
      fpeak = v;
      found = false;
      continue;
    }
    if (!found && v <= fpeak - 45.0) {
      stop = a;
      found = true;
    }
  }
  return std::max(ext, found ? stop : 1e12);
}

// ------------------------------------------------------- side integration --

struct SideOutcome {
  bool finite = true;
  double log_total = kNegInf;  // per unit mass of this half
  double err = 0.0;
  double extrap_share = 0.0;
  std::string why;  // divergence reason, or a note when finite
};

// loc_sign maps this half's distances back to signed coordinates: the split
// stores minus-side atom locations and densities in their native negative x.
SideOutcome integrate_side(const model::HalfTarget& half, const SideProvider& prov,
                           const ObjectivePolicy& pol, double loc_sign) {
  SideOutcome out;
  if (!(half.mass > 0.0)) return out;
  if (!prov.pointwise_finite) {
    out.finite = false;
    out.why = prov.infinite_why;
    return out;
  }
  out.err = prov.base_error;
  double log_atoms = kNegInf, log_extrap = kNegInf;
  for (const auto& [d, m] : half.atoms) {
    double ad = std::fabs(d);
    double lc = std::log(m) + prov.log_E(ad);
    log_atoms = logaddexp(log_atoms, lc);
    if (ad > prov.x_exact) log_extrap = logaddexp(log_extrap, lc);
  }
  double log_dens = kNegInf;
  if (half.has_density) {
    const bool compact = half.tail.kind == MuTailKind::Compact;
    if (!compact) {
      if (!prov.has_growth)
        throw Error(ErrorCode::MissingTail,
                    "the target is unbounded on a side where the rate has no declared tail law");
      Gate gate = growth_vs_tail(prov.growth, half.tail);
      if (!gate.finite) {
        out.finite = false;
        out.why = gate.why;
        return out;
      }
    }
    const double edge = half.tail.edge;
    const double S = std::max(half.scale, 1e-12);
    const double log_trunc = std::log(pol.trunc_rel);
    double prev = kNegInf, delta_prev = kPosInf, pass_extrap = kNegInf;
    bool have_prev = false;
    for (int n = 32;; n *= 2) {
      const numeric::GaussRule& rule = numeric::gauss_legendre(n);
      double acc = kNegInf, eacc = kNegInf, lc_prev = kPosInf;
      int below = 0;
      for (int i = 0; i < n; ++i) {
        double a, ljac;
        if (compact) {
          a = 0.5 * edge * (rule.nodes[i] + 1.0);
          ljac = std::log(0.5 * edge * rule.weights[i]);
        } else {
          double th = 0.25 * M_PI * (rule.nodes[i] + 1.0);
          a = S * std::tan(th);
          ljac = std::log(0.25 * M_PI * S * rule.weights[i]) - 2.0 * std::log(std::cos(th));
        }
        if (!(a > 0.0)) continue;
        double lc = ljac + half.log_density(loc_sign * a) + prov.log_E(a);
        if (std::isnan(lc)) lc = kNegInf;
        acc = logaddexp(acc, lc);
        if (a > prov.x_exact) eacc = logaddexp(eacc, lc);
        // stop on a decaying run far below the running total
        if (i >= 8 && lc < lc_prev && acc > kNegInf && lc < acc + log_trunc) {
          if (++below >= 3) break;
        } else {
          below = 0;
        }
        lc_prev = lc;
      }
      pass_extrap = eacc;
      if (have_prev) {
        double delta = std::fabs(acc - prev);
        if (acc == kNegInf && prev == kNegInf) delta = 0.0;
        if (delta <= pol.quad_rel_tol) {
          log_dens = acc;
          out.err += delta;
          break;
        }
        if (n >= pol.max_nodes) {
          log_dens = acc;
          out.err += delta;
          out.why = fmt("node doubling stopped at %g nodes with relative change %.2g",
                        double(n), delta);
          break;
        }
        if (n >= 256 && delta > 1.5 * delta_prev && delta > 1e-2) {
          out.finite = false;
          out.why = "the target quadrature keeps growing under node doubling";
          return out;
        }
        delta_prev = delta;
      } else if (n >= pol.max_nodes) {
        log_dens = acc;
        break;
      }
      prev = acc;
      have_prev = true;
    }
    log_extrap = logaddexp(log_extrap, pass_extrap);
  }
  out.log_total = logaddexp(log_atoms, log_dens);
  if (out.log_total > kNegInf && log_extrap > kNegInf) {
    out.extrap_share = std::exp(std::min(0.0, log_extrap - out.log_total));
    out.err += out.extrap_share * prov.extrap_model_err;
  }
  return out;
}

ObjectiveValue assemble(const model::SplitResult& split, const SideOutcome& po,
                        const SideOutcome& mo, std::string note) {
  ObjectiveValue out;
  auto join = [&note](const std::string& s) {
    if (s.empty()) return;
    if (!note.empty()) note += "; ";
    note += s;
  };
  if (!po.finite || !mo.finite) {
    out.finite = false;
    out.value = kPosInf;
    out.log_value = kPosInf;
    if (!po.finite) join("right half: " + po.why);
    if (!mo.finite) join("left half: " + mo.why);
    out.diagnostic = note;
    return out;
  }
  double lp = split.plus.mass > 0.0 ? std::log(split.plus.mass) + po.log_total : kNegInf;
  double lm = split.minus.mass > 0.0 ? std::log(split.minus.mass) + mo.log_total : kNegInf;
  out.log_value = logaddexp(lp, lm);
  out.value = std::exp(out.log_value);
  out.plus_part = std::exp(lp);
  out.minus_part = std::exp(lm);
  out.error_estimate = std::max(po.err, mo.err);
  if (!po.why.empty()) join("right half: " + po.why);
  if (!mo.why.empty()) join("left half: " + mo.why);
  double share = std::max(po.extrap_share, mo.extrap_share);
  if (share > 1e-9) join(fmt("far tail served by the growth model (share %.2g)", share));
  out.diagnostic = note;
  return out;
}

// ------------------------------------------------------ full-line planning --

struct SidePlan {
  bool active = false;
  std::optional<PhiGrowth> growth;  // effective (quadratic floor applied)
  bool floored = false;
  std::optional<model::SideFiniteness> cls_danger;
  Gate gate;
  double extent = 0.0;
};

SidePlan plan_side(const model::Rate& rate, double D, const model::HalfTarget& half, Side side) {
  SidePlan p;
  p.active = half.mass > 0.0;
  if (!p.active) return p;
  Side danger = side == Side::Right ? Side::Left : Side::Right;
  try {
    p.cls_danger = rate.tail(danger, D).cls;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MissingTail) throw;
  }
  try {
    PhiGrowth g = rate.tail(side, D).growth;
    p.floored = g.kind == PhiGrowthKind::Power && g.power_m < 2.0;
    p.growth = effective_growth(g);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MissingTail) throw;
  }
  if (half.has_density && half.tail.kind != MuTailKind::Compact) {
    if (!p.growth)
      throw Error(ErrorCode::MissingTail,
                  "the target is unbounded on a side where the rate has no declared tail law");
    p.gate = growth_vs_tail(*p.growth, half.tail);
  }
  if (p.gate.finite) p.extent = side_extent(half, p.growth);
  return p;
}

void check_interval_holds_target(const model::SplitResult& split, double L1, double L2) {
  const model::HalfTarget* half[2] = {&split.plus, &split.minus};
  double wall[2] = {L2, L1};
  for (int i = 0; i < 2; ++i) {
    if (!(half[i]->mass > 0.0)) continue;
    for (const auto& [d, m] : half[i]->atoms)
      if (std::fabs(d) > wall[i] * (1.0 + 1e-12))
        throw Error(ErrorCode::InvalidParameter, "target atom lies outside the interval");
    if (half[i]->has_density) {
      if (half[i]->tail.kind != MuTailKind::Compact)
        throw Error(ErrorCode::InvalidParameter,
                    "an interval-confined search needs a compactly supported target");
      if (half[i]->tail.edge > wall[i] * (1.0 + 1e-12))
        throw Error(ErrorCode::InvalidParameter,
                    "target support extends beyond the restarting wall");
    }
  }
}

struct LazyRef {
  double v = std::numeric_limits<double>::quiet_NaN();
};

void general_line_providers(const model::Rate& rate, double D, const SidePlan plan[2],
                            const model::SplitResult& split, const ObjectivePolicy& pol,
                            SideProvider out[2]) {
  const model::HalfTarget* half[2] = {&split.plus, &split.minus};
  std::vector<double> targets;
  double reach[2] = {0.0, 0.0};
  for (int i = 0; i < 2; ++i) {
    if (!plan[i].active) continue;
    reach[i] =
        plan[i].growth ? std::min(plan[i].extent, pol.x_cap / 1.25) : plan[i].extent;
    double sign = i == 0 ? 1.0 : -1.0;
    if (reach[i] > 0.0) targets.push_back(sign * reach[i]);
    for (const auto& [d, m] : half[i]->atoms) {
      double ad = std::fabs(d);
      if (ad < reach[i]) targets.push_back(sign * ad);
    }
  }
  hitting::GeneralPolicy gp;
  gp.quad_rel_tol = pol.hitting_rel_tol;
  // algebraic tails complete exactly from a modest edge, so the domain only
  // has to clear the gamma crossover; the default 10x sizing is marching cost
  if (std::get_if<model::QuadDecayPolyRate>(&rate.family()))
    gp.X = std::max(20.0, 3.2 * rate.scale(D));
  auto ev = std::make_shared<const hitting::GeneralEvaluator>(rate, D, gp, targets);
  double x_use = 0.8 * ev->domain();
  for (int i = 0; i < 2; ++i) {
    if (!plan[i].active) continue;
    double sign = i == 0 ? 1.0 : -1.0;
    hitting::HittingTimeResult res = ev->eval(sign * 0.25 * x_use);
    out[i].pointwise_finite = res.finite;
    if (!res.finite)
      out[i].infinite_why =
          "the expected hitting time diverges for every target on this side" +
          (res.diagnostic.empty() ? std::string() : " (" + res.diagnostic + ")");
    out[i].base_error = res.error_estimate;
    out[i].has_growth = plan[i].growth.has_value();
    if (plan[i].growth) out[i].growth = *plan[i].growth;
    out[i].extrap_model_err = plan[i].floored ? 0.5 : 1e-3;
    out[i].x_exact = x_use;
    PhiGrowth g = out[i].growth;
    bool hg = out[i].has_growth;
    auto ref = std::make_shared<LazyRef>();
    out[i].log_E = [ev, ref, sign, x_use, g, hg](double d) {
      if (d <= x_use) return ev->eval(sign * d).log_value;
      if (!hg)
        throw Error(ErrorCode::MissingTail,
                    "target beyond the resolved domain without a declared tail law");
      if (std::isnan(ref->v)) ref->v = ev->eval(sign * x_use).log_value;
      return ref->v + growth_log(g, d) - growth_log(g, x_use);
    };
  }
}

void check_policy(const ObjectivePolicy& pol) {
  if (!(pol.quad_rel_tol > 0.0) || !(pol.trunc_rel > 0.0) || !(pol.x_cap > 0.0) ||
      pol.max_nodes < 64 || !(pol.hitting_rel_tol > 0.0))
    throw Error(ErrorCode::InvalidParameter, "objective policy out of range");
}

}  // namespace

// ---------------------------------------------------- expected_search_time --

ObjectiveValue expected_search_time(const model::Rate& rate, double D, const model::Target& mu,
                                    const model::SupportSpec& support,
                                    const ObjectivePolicy& pol) {
  (void)model::ModelParams(D);
  check_policy(pol);
  model::SplitResult split = model::distribution_split_relaxed(mu);
  const auto* iv = std::get_if<model::Interval>(&support.value());
  bool mirror = mu.is_symmetric() && rate.is_even() && (!iv || iv->L1 == iv->L2);
  SideProvider prov[2];
  if (iv) {
    check_interval_holds_target(split, iv->L1, iv->L2);
    interval_providers(rate, D, iv->L1, iv->L2, prov);
  } else if (const auto* c = std::get_if<model::ConstantRate>(&rate.family())) {
    constant_line_providers(c->r, D, prov);
  } else {
    SidePlan plan[2] = {plan_side(rate, D, split.plus, Side::Right),
                        plan_side(rate, D, split.minus, Side::Left)};
    // divergence is decided by the tail laws before any grid is built
    SideOutcome po, mo;
    bool doomed = false;
    SideOutcome* sides[2] = {&po, &mo};
    for (int i = 0; i < 2; ++i) {
      if (!plan[i].active) continue;
      if (plan[i].cls_danger && *plan[i].cls_danger == model::SideFiniteness::Infinite) {
        sides[i]->finite = false;
        sides[i]->why =
            "restarts behind the origin are too weak; every target on this side has "
            "infinite expected time";
        doomed = true;
      } else if (!plan[i].gate.finite) {
        sides[i]->finite = false;
        sides[i]->why = plan[i].gate.why;
        doomed = true;
      }
    }
    if (doomed) return assemble(split, po, mo, {});
    general_line_providers(rate, D, plan, split, pol, prov);
  }
  std::string note;
  if (mirror) note = "symmetric target and even rate: right half computed and doubled";
  SideOutcome po = integrate_side(split.plus, prov[0], pol, 1.0);
  SideOutcome mo = mirror ? po : integrate_side(split.minus, prov[1], pol, -1.0);
  return assemble(split, po, mo, note);
}

// ------------------------------------------------------------- optimizers --

namespace {

// Successive parabolic interpolation around a bracketed minimum; the caller's
// wrapper tracks the global best, so this only has to wander sensibly.
void parabolic_polish(const std::function<double(double)>& f, double x1, double x2, double x3,
                      double f1, double f2, double f3, int iters) {
  for (int k = 0; k < iters; ++k) {
    double d21 = x2 - x1, d23 = x2 - x3;
    double num = d21 * d21 * (f2 - f3) - d23 * d23 * (f2 - f1);
    double den = d21 * (f2 - f3) - d23 * (f2 - f1);
    if (den == 0.0 || !std::isfinite(num / den)) return;
    double v = x2 - 0.5 * num / den;
    if (!(v > std::min(x1, x3)) || !(v < std::max(x1, x3)) || v == x2) return;
    double fv = f(v);
    if (fv < f2) {
      if (v < x2) {
        x3 = x2;
        f3 = f2;
      } else {
        x1 = x2;
        f1 = f2;
      }
      x2 = v;
      f2 = fv;
    } else {
      if (v < x2) {
        x1 = v;
        f1 = fv;
      } else {
        x3 = v;
        f3 = fv;
      }
    }
  }
}

double target_length_scale(const model::SplitResult& split) {
  double s = 0.0;
  if (split.plus.mass > 0.0) s = std::max(s, split.plus.scale);
  if (split.minus.mass > 0.0) s = std::max(s, split.minus.scale);
  return s > 0.0 ? s : 1.0;
}

}  // namespace

OptimizationReport optimize_constant_rate(double D, const model::Target& mu,
                                          const model::SupportSpec& support,
                                          const ObjectivePolicy& pol) {
  (void)model::ModelParams(D);
  check_policy(pol);
  model::SplitResult split = model::distribution_split_relaxed(mu);
  double scale = target_length_scale(split);

  OptimizationReport rep;
  double best = kPosInf;
  std::vector<double> bestp;
  auto eval_r = [&](double r) {
    ObjectiveValue v =
        expected_search_time(model::Rate(model::ConstantRate{r}), D, mu, support, pol);
    double f = v.finite ? v.value : kPosInf;
    rep.trace.push_back({{r}, f, v.finite});
    if (f < best) {
      best = f;
      bestp = {r};
    }
    return f;
  };

  const auto* iv = std::get_if<model::Interval>(&support.value());
  if (iv && iv->L1 == iv->L2) {
    // walls at the same distance A: search in x = sqrt(2 r / D) A, where the
    // closed forms are smooth and the r = 0 boundary sits at x = 0
    double A = iv->L1;
    auto eval_x = [&](double x) { return eval_r(0.5 * D * x * x / (A * A)); };
    double f0 = eval_x(0.0);
    const double x_hi = 25.0, dx = x_hi / 512.0;
    double fd = eval_x(dx), fdd = eval_x(2.0 * dx);
    if (fd >= f0 && fdd >= fd) {
      // objective already increasing at x = 0+: the boundary is the optimum
      rep.params = {0.0};
      rep.value = f0;
      rep.x_star = 0.0;
      rep.iterations = 3;
      rep.evaluations = static_cast<long long>(rep.trace.size());
      rep.converged = true;
      return rep;
    }
    std::vector<std::pair<double, double>> seen = {{0.0, f0}, {dx, fd}, {2.0 * dx, fdd}};
    for (int j = 1; j <= 32; ++j) {
      double x = x_hi * j / 32.0;
      seen.emplace_back(x, eval_x(x));
    }
    std::sort(seen.begin(), seen.end());
    std::size_t ib = 0;
    for (std::size_t j = 1; j < seen.size(); ++j)
      if (seen[j].second < seen[ib].second) ib = j;
    double lo = seen[ib > 0 ? ib - 1 : 0].first;
    double hi = seen[std::min(ib + 1, seen.size() - 1)].first;
    if (!(hi > lo)) hi = lo + dx;
    numeric::GoldenResult g = numeric::golden_section(eval_x, lo, hi, 1e-6 * x_hi);
    double h = std::max(1e-4, 0.01 * (hi - lo));
    parabolic_polish(eval_x, std::max(lo, g.x - h), g.x, std::min(hi, g.x + h),
                     eval_x(std::max(lo, g.x - h)), eval_x(g.x), eval_x(std::min(hi, g.x + h)),
                     3);
    rep.iterations = g.evaluations;
    double r_star = bestp.empty() ? 0.0 : bestp[0];
    rep.x_star = std::sqrt(2.0 * r_star / D) * A;
  } else {
    double f0 = kPosInf;
    if (iv) f0 = eval_r(0.0);  // finite boundary candidate between walls
    double r_unit = D / (scale * scale);
    double t_lo = std::log(1e-8 * r_unit), t_hi = std::log(1e8 * r_unit);
    auto eval_t = [&](double t) { return eval_r(std::exp(t)); };
    int ib = -1;
    double fb = kPosInf;
    std::vector<double> ts(32), fs(32);
    for (int j = 0; j < 32; ++j) {
      ts[j] = t_lo + (t_hi - t_lo) * j / 31.0;
      fs[j] = eval_t(ts[j]);
      if (fs[j] < fb) {
        fb = fs[j];
        ib = j;
      }
    }
    if (!std::isfinite(fb)) {
      if (!iv || !std::isfinite(f0))
        throw Error(ErrorCode::NonFinite,
                    "every probed restart rate gives an infinite objective");
      rep.params = {0.0};
      rep.value = f0;
      rep.iterations = 0;
      rep.evaluations = static_cast<long long>(rep.trace.size());
      rep.converged = true;
      return rep;
    }
    double lo = ts[std::max(ib - 1, 0)], hi = ts[std::min(ib + 1, 31)];
    numeric::GoldenResult g = numeric::golden_section(eval_t, lo, hi, 1e-6 * (t_hi - t_lo));
    double h = std::max(1e-4, 0.01 * (hi - lo));
    parabolic_polish(eval_t, std::max(lo, g.x - h), g.x, std::min(hi, g.x + h),
                     eval_t(std::max(lo, g.x - h)), eval_t(g.x), eval_t(std::min(hi, g.x + h)),
                     3);
    rep.iterations = g.evaluations;
  }
  rep.params = bestp;
  rep.value = best;
  rep.evaluations = static_cast<long long>(rep.trace.size());
  rep.converged = std::isfinite(best);
  return rep;
}

OptimizationReport optimize_family(double D, const model::Target& mu, const FamilyBox& box,
                                   const ObjectivePolicy& pol) {
  (void)model::ModelParams(D);
  check_policy(pol);
  if (!(box.m_lo > 2.0) || !(box.m_hi > box.m_lo) || !(box.gamma_lo > 0.0) ||
      !(box.gamma_hi > box.gamma_lo))
    throw Error(ErrorCode::InvalidParameter, "family search box is malformed");
  model::SupportSpec line{model::FullLine{}};

  OptimizationReport rep;
  double best = kPosInf;
  std::vector<double> bestp;
  const double lg_lo = std::log(box.gamma_lo), lg_hi = std::log(box.gamma_hi);
  auto f = [&](const std::vector<double>& th) {
    double m = th[0], lg = th[1];
    if (m < box.m_lo || m > box.m_hi || lg < lg_lo || lg > lg_hi) return kPosInf;
    double gamma = std::exp(lg);
    ObjectiveValue v = expected_search_time(model::Rate(model::QuadDecayPolyRate{m, gamma, D}),
                                            D, mu, line, pol);
    double val = v.finite ? v.value : kPosInf;
    rep.trace.push_back({{m, gamma}, val, v.finite});
    if (val < best) {
      best = val;
      bestp = {m, gamma};
    }
    return val;
  };

  std::vector<double> th0;
  double f0 = kPosInf;
  for (int i = 1; i <= 3; ++i) {
    for (int j = 1; j <= 3; ++j) {
      std::vector<double> th = {box.m_lo + (box.m_hi - box.m_lo) * i / 4.0,
                                lg_lo + (lg_hi - lg_lo) * j / 4.0};
      double v = f(th);
      if (v < f0) {
        f0 = v;
        th0 = th;
      }
    }
  }
  if (!std::isfinite(f0))
    throw Error(ErrorCode::NonFinite, "every probed family member gives an infinite objective");

  std::vector<double> step = {(box.m_hi - box.m_lo) / 8.0, (lg_hi - lg_lo) / 8.0};
  numeric::NelderMeadResult nm = numeric::nelder_mead(f, th0, step, 1e-6, 400);

  double m_star = bestp[0], g_star = bestp[1];
  double m_edge = 1e-3 * (box.m_hi - box.m_lo);
  double lg_edge = 1e-3 * (lg_hi - lg_lo);
  double lg_star = std::log(g_star);
  if (m_star - box.m_lo < m_edge || box.m_hi - m_star < m_edge || lg_star - lg_lo < lg_edge ||
      lg_hi - lg_star < lg_edge)
    throw Error(ErrorCode::BoxExhausted,
                fmt("the optimum sits on the search box edge at m = %.6g, gamma = %.6g; "
                    "enlarge the box",
                    m_star, g_star));
  rep.params = bestp;
  rep.value = best;
  rep.iterations = nm.iterations;
  rep.evaluations = static_cast<long long>(rep.trace.size());
  rep.converged = nm.converged;
  return rep;
}

// ------------------------------------------------------------ variational --

ParametricPhi ParametricPhi::cosh_scale(double k) {
  if (!std::isfinite(k)) throw Error(ErrorCode::InvalidParameter, "cosh scale must be finite");
  return ParametricPhi(Family::CoshScale, {std::fabs(k)});
}

ParametricPhi ParametricPhi::mollified_polynomial(double m, double gamma, double scale) {
  if (!std::isfinite(m) || !std::isfinite(gamma))
    throw Error(ErrorCode::InvalidParameter, "polynomial shape parameters must be finite");
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw Error(ErrorCode::InvalidParameter, "mollification scale must be > 0");
  return ParametricPhi(Family::MollifiedPolynomial, {m, gamma, 1e-6 * scale});
}

ParametricPhi ParametricPhi::stretched_exp(double lambda, double gamma, double l) {
  if (!std::isfinite(lambda) || !std::isfinite(gamma) || !std::isfinite(l))
    throw Error(ErrorCode::InvalidParameter, "stretched shape parameters must be finite");
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidParameter, "stretched scale must be > 0");
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidParameter, "stretched offset must be > 0");
  if (!(l > -1.0)) throw Error(ErrorCode::InvalidParameter, "stretched exponent must be > -1");
  return ParametricPhi(Family::StretchedExp, {lambda, gamma, l});
}

double ParametricPhi::log_value(double x) const {
  switch (family_) {
    case Family::CoshScale:
      return log_cosh(params_[0] * x);
    case Family::MollifiedPolynomial: {
      double m = params_[0], gamma = params_[1], eps = params_[2];
      double lr = 0.5 * std::log(eps * eps + x * x);
      if (gamma > 0.0) return logaddexp(std::log(gamma), m * lr);
      double v = gamma + std::exp(m * lr);
      return v > 0.0 ? std::log(v) : std::numeric_limits<double>::quiet_NaN();
    }
    case Family::StretchedExp: {
      double lambda = params_[0], gamma = params_[1], l = params_[2];
      return lambda * std::pow(gamma + x * x, 0.5 * (l + 1.0));
    }
  }
  return 0.0;
}

double ParametricPhi::psi(double x) const {
  switch (family_) {
    case Family::CoshScale: {
      double k = params_[0];
      return k * std::tanh(k * x);
    }
    case Family::MollifiedPolynomial: {
      double m = params_[0], eps = params_[2];
      double lr = 0.5 * std::log(eps * eps + x * x);
      return m * x * std::exp((m - 2.0) * lr - log_value(x));
    }
    case Family::StretchedExp: {
      double lambda = params_[0], gamma = params_[1], l = params_[2];
      return lambda * (l + 1.0) * x * std::pow(gamma + x * x, 0.5 * (l - 1.0));
    }
  }
  return 0.0;
}

double ParametricPhi::induced_rate(double x, double D) const {
  switch (family_) {
    case Family::CoshScale: {
      double k = params_[0];
      return 0.5 * D * k * k;
    }
    case Family::MollifiedPolynomial: {
      double m = params_[0], eps = params_[2];
      double lr = 0.5 * std::log(eps * eps + x * x);
      double curv = m * (eps * eps + (m - 1.0) * x * x);
      return 0.5 * D * curv * std::exp((m - 4.0) * lr - log_value(x));
    }
    case Family::StretchedExp: {
      double lambda = params_[0], gamma = params_[1], l = params_[2];
      double u = gamma + x * x;
      double sp = lambda * (l + 1.0) * x * std::pow(u, 0.5 * (l - 1.0));
      double spp = lambda * (l + 1.0) * std::pow(u, 0.5 * (l - 3.0)) * (gamma + l * x * x);
      return 0.5 * D * (sp * sp + spp);
    }
  }
  return 0.0;
}

model::Rate ParametricPhi::induced_family(double D) const {
  switch (family_) {
    case Family::CoshScale:
      return model::Rate(model::ConstantRate{0.5 * D * params_[0] * params_[0]});
    case Family::MollifiedPolynomial:
      return model::Rate(model::QuadDecayPolyRate{params_[0], params_[1], D});
    case Family::StretchedExp:
      return model::Rate(model::StretchedExpHarmonicRate{params_[0], params_[1], params_[2], D});
  }
  throw Error(ErrorCode::InvalidParameter, "unknown shape family");
}

model::PhiGrowth ParametricPhi::growth() const {
  switch (family_) {
    case Family::CoshScale:
      return {PhiGrowthKind::Exponential, 0.0, params_[0], 0.0, 1.0};
    case Family::MollifiedPolynomial:
      return {PhiGrowthKind::Power, params_[0], 0.0, 0.0, 1.0};
    case Family::StretchedExp: {
      double lambda = params_[0], l = params_[2];
      if (l == 0.0) return {PhiGrowthKind::Exponential, 0.0, lambda, 0.0, 1.0};
      return {PhiGrowthKind::Stretched, 0.0, 0.0, lambda, l + 1.0};
    }
  }
  return {};
}

double ParametricPhi::length_scale() const {
  switch (family_) {
    case Family::CoshScale:
      return params_[0] > 0.0 ? 1.0 / params_[0] : 1.0;
    case Family::MollifiedPolynomial: {
      double m = params_[0], gamma = params_[1];
      if (gamma > 0.0 && m > 0.0) return std::max(std::pow(gamma, 1.0 / m), 1e-6);
      return 1.0;
    }
    case Family::StretchedExp: {
      double lambda = params_[0], gamma = params_[1], l = params_[2];
      double onset = std::pow(1.0 / (lambda * (l + 1.0)), 1.0 / (l + 1.0));
      return std::max(std::sqrt(gamma), onset);
    }
  }
  return 1.0;
}

ObjectiveValue variational_objective(const ParametricPhi& phi, double D, const model::Target& mu,
                                     const ObjectivePolicy& pol) {
  (void)model::ModelParams(D);
  check_policy(pol);
  model::SplitResult split = model::distribution_split_relaxed(mu);
  double Ls = phi.length_scale();
  double Sm = target_length_scale(split);

  // admissibility probe: phi > 0 and phi'' >= 0 across the working span
  double Xp = std::max({8.0 * Ls, 4.0 * Sm, 1.0});
  double r_floor = 1e-11 * D / (Ls * Ls);
  double r_max = 0.0;
  for (int i = 0; i <= 320; ++i) {
    double x = -Xp + 2.0 * Xp * i / 320.0;
    if (std::isnan(phi.log_value(x)))
      throw Error(ErrorCode::InadmissiblePhi, fmt("the shape is not positive near x = %.6g", x));
    double r = phi.induced_rate(x, D);
    double mag = 1.0 + (x * x) / (Ls * Ls);
    if (r < -r_floor * mag)
      throw Error(ErrorCode::InadmissiblePhi,
                  fmt("the shape's curvature is negative near x = %.6g", x));
    r_max = std::max(r_max, r);
  }
  if (r_max <= 1e-12 * D / (Ls * Ls))
    throw Error(ErrorCode::InadmissiblePhi,
                "the shape's curvature vanishes identically: an affine shape induces no restarts");

  // plan the domain from the growth model and the target tails
  PhiGrowth g = effective_growth(phi.growth());
  const model::HalfTarget* half[2] = {&split.plus, &split.minus};
  double reach = 0.0;
  std::vector<double> knots;
  for (int i = 0; i < 2; ++i) {
    if (!(half[i]->mass > 0.0)) continue;
    double ext = side_extent(*half[i], g);
    double capped = std::min(ext, pol.x_cap / 1.25);
    reach = std::max(reach, capped);
    if (capped > 0.0) knots.push_back(capped);
    for (const auto& [d, m] : half[i]->atoms) {
      double ad = std::fabs(d);
      if (ad < capped) knots.push_back(ad);
    }
  }
  double X = std::max({1.25 * reach, 8.0 * Ls, 4.0 * Sm, 2.0});

  harmonic::HarmonicSolution hs;
  hs.kind = harmonic::PhiKind::Phi3;
  hs.D = D;
  hs.exact = true;
  hs.even = true;
  hs.x_min = -X;
  hs.x_max = X;
  hs.log_phi = [phi](double x) { return phi.log_value(x); };
  hs.psi = [phi](double x) { return phi.psi(x); };
  harmonic::CumPolicy cp;
  cp.X = X;
  cp.rel_tol = pol.hitting_rel_tol;
  cp.knots = knots;
  auto cum = std::make_shared<const harmonic::CumulativeIntegrals>(hs, cp);
  if (cum->inv_tail(Side::Left).divergent || cum->inv_tail(Side::Right).divergent)
    throw Error(ErrorCode::InadmissiblePhi,
                "the shape's tails do not meet the two-sided integrability the formulas assume");

  double x_use = 0.8 * X;
  double base_error = 30.0 * pol.hitting_rel_tol + cum->interp_error() + 2e-6;
  SideProvider prov[2];
  for (int i = 0; i < 2; ++i) {
    if (!(half[i]->mass > 0.0)) continue;
    double sign = i == 0 ? 1.0 : -1.0;
    hitting::HittingComponents hc = hitting::hitting_components(*cum, sign * 0.25 * x_use);
    prov[i].pointwise_finite = hc.v_finite;
    if (!hc.v_finite)
      prov[i].infinite_why =
          "the induced restarts are too weak for a finite expected hitting time on this side";
    prov[i].growth = g;
    prov[i].has_growth = true;
    prov[i].base_error = base_error;
    prov[i].extrap_model_err = 1e-3;
    prov[i].x_exact = x_use;
    auto ref = std::make_shared<LazyRef>();
    prov[i].log_E = [cum, ref, sign, x_use, g](double d) {
      if (d <= x_use) {
        hitting::HittingComponents c = hitting::hitting_components(*cum, sign * d);
        return c.log_v - c.log_u;
      }
      if (std::isnan(ref->v)) {
        hitting::HittingComponents c = hitting::hitting_components(*cum, sign * x_use);
        ref->v = c.log_v - c.log_u;
      }
      return ref->v + growth_log(g, d) - growth_log(g, x_use);
    };
  }
  std::string note;
  bool mirror = mu.is_symmetric();
  if (mirror) note = "symmetric target and even shape: right half computed and doubled";
  SideOutcome po = integrate_side(split.plus, prov[0], pol, 1.0);
  SideOutcome mo = mirror ? po : integrate_side(split.minus, prov[1], pol, -1.0);
  return assemble(split, po, mo, note);
}

// ----------------------------------------------------------- growth fits --

GrowthFit estimate_growth(const model::Rate& rate, double D, const std::vector<double>& a_grid,
                          GrowthModel gm, double l) {
  if (a_grid.size() < 4)
    throw Error(ErrorCode::InvalidParameter, "growth fits need at least four targets");
  for (double a : a_grid)
    if (!std::isfinite(a) || a == 0.0)
      throw Error(ErrorCode::InvalidParameter, "growth fit targets must be finite and nonzero");
  if (gm == GrowthModel::LogPolynomial && !(l > -1.0))
    throw Error(ErrorCode::InvalidParameter, "log-polynomial fits need l > -1");

  hitting::GeneralEvaluator ev(rate, D, {}, a_grid);
  std::vector<double> xs, ys;
  xs.reserve(a_grid.size());
  ys.reserve(a_grid.size());
  double a_min = kPosInf, a_max = 0.0;
  for (double a : a_grid) {
    hitting::HittingTimeResult res = ev.eval(a);
    if (!res.finite)
      throw Error(ErrorCode::InfiniteSample,
                  fmt("the expected time at a = %.6g is infinite; no finite growth law fits", a));
    double d = std::fabs(a);
    xs.push_back(gm == GrowthModel::PowerLaw ? std::log(d) : std::pow(d, l + 1.0));
    ys.push_back(res.log_value);
    a_min = std::min(a_min, d);
    a_max = std::max(a_max, d);
  }
  numeric::LinearFit fit = numeric::fit_line(xs, ys);
  GrowthFit out;
  out.model = gm;
  out.intercept = fit.intercept;
  out.r_squared = fit.r_squared;
  out.rms_residual = fit.rms_residual;
  out.a_min = a_min;
  out.a_max = a_max;
  if (gm == GrowthModel::PowerLaw) {
    out.exponent = fit.slope;
    out.coeff = std::exp(fit.intercept);
  } else {
    out.exponent = l + 1.0;
    out.coeff = fit.slope;
  }
  return out;
}

}  // namespace resetsearch::analysis
