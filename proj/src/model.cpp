#include "resetsearch/model.hpp"

#include <algorithm>
#include <memory>

namespace resetsearch::model {

namespace {

constexpr double kMassTol = 1e-10;

void require(bool ok, const char* msg) {
  if (!ok) throw Error(ErrorCode::InvalidParameter, msg);
}

bool nearly(double a, double b, double tol = 1e-12) {
  return std::fabs(a - b) <= tol * (1.0 + std::fabs(a) + std::fabs(b));
}

}  // namespace

Rate::Rate(Variant v) : v_(std::move(v)) {
  std::visit(
      [this](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantRate>) {
          require(std::isfinite(f.r) && f.r >= 0.0, "constant rate must be >= 0");
        } else if constexpr (std::is_same_v<T, PowerLawRate>) {
          require(f.c > 0.0 && std::isfinite(f.c), "power-law scale must be > 0");
          require(f.gamma > 0.0, "power-law offset must be > 0");
          require(std::isfinite(f.l), "power-law exponent must be finite");
        } else if constexpr (std::is_same_v<T, QuadDecayPolyRate>) {
          require(f.m > 2.0, "quad-decay exponent must be > 2");
          require(f.gamma > 0.0, "quad-decay offset must be > 0");
          require(f.D > 0.0, "quad-decay diffusion must be > 0");
        } else if constexpr (std::is_same_v<T, StretchedExpHarmonicRate>) {
          require(f.lambda > 0.0, "stretched scale must be > 0");
          require(f.gamma > 0.0, "stretched offset must be > 0");
          require(f.l > -1.0 && std::isfinite(f.l), "stretched exponent must be > -1");
          require(f.D > 0.0, "stretched diffusion must be > 0");
          if (f.l < 0.0) {
            // Positivity of the induced rate on the whole line.
            double bound = std::pow(-f.l / ((f.l + 1.0) * f.lambda), 2.0 / (f.l + 1.0));
            require(f.gamma >= bound * (1.0 - 1e-9), "offset below positivity bound for l in (-1,0)");
          }
        } else if constexpr (std::is_same_v<T, TabulatedRate>) {
          require(f.grid.size() >= 2 && f.grid.size() == f.values.size(), "tabulated rate needs matching arrays");
          for (std::size_t i = 1; i < f.grid.size(); ++i)
            require(f.grid[i] > f.grid[i - 1], "tabulated grid must increase");
          for (double r : f.values) require(std::isfinite(r) && r >= 0.0, "tabulated rates must be >= 0");
          require(f.c_plus.has_value() == f.p_plus.has_value(), "tail declaration needs both c and p");
          require(f.c_minus.has_value() == f.p_minus.has_value(), "tail declaration needs both c and p");
          if (f.c_plus) require(*f.c_plus >= 0.0, "tail scale must be >= 0");
          if (f.c_minus) require(*f.c_minus >= 0.0, "tail scale must be >= 0");
          tab_interp_ = numeric::MonotoneCubic(f.grid, f.values);
        }
      },
      v_);
}

double Rate::eval(double x) const {
  return std::visit(
      [this, x](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantRate>) {
          return f.r;
        } else if constexpr (std::is_same_v<T, PowerLawRate>) {
          return f.c * std::pow(f.gamma + x * x, f.l);
        } else if constexpr (std::is_same_v<T, QuadDecayPolyRate>) {
          double ax = std::fabs(x);
          if (ax == 0.0) return 0.0;
          // |x|^{m-2}/(gamma+|x|^m) written to stay finite for large |x|
          double denom = f.gamma * std::pow(ax, 2.0 - f.m) + ax * ax;
          return 0.5 * f.m * (f.m - 1.0) * f.D / denom;
        } else if constexpr (std::is_same_v<T, StretchedExpHarmonicRate>) {
          double u = f.gamma + x * x;
          double sp = f.lambda * (f.l + 1.0) * x * std::pow(u, 0.5 * (f.l - 1.0));
          double spp = f.lambda * (f.l + 1.0) * std::pow(u, 0.5 * (f.l - 3.0)) * (f.gamma + f.l * x * x);
          return std::max(0.0, 0.5 * f.D * (sp * sp + spp));
        } else {
          const TabulatedRate& t = f;
          if (x < t.grid.front()) {
            if (t.c_minus) return *t.c_minus * std::pow(std::fabs(x), -*t.p_minus);
            return std::max(0.0, t.values.front());
          }
          if (x > t.grid.back()) {
            if (t.c_plus) return *t.c_plus * std::pow(std::fabs(x), -*t.p_plus);
            return std::max(0.0, t.values.back());
          }
          return std::max(0.0, tab_interp_.eval(x));
        }
      },
      v_);
}

bool Rate::is_even() const {
  return std::visit(
      [](const auto& f) -> bool {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TabulatedRate>) {
          std::size_t n = f.grid.size();
          for (std::size_t i = 0; i < n; ++i) {
            if (!nearly(f.grid[i], -f.grid[n - 1 - i])) return false;
            if (!nearly(f.values[i], f.values[n - 1 - i])) return false;
          }
          if (f.c_plus.has_value() != f.c_minus.has_value()) return false;
          if (f.c_plus && (!nearly(*f.c_plus, *f.c_minus) || !nearly(*f.p_plus, *f.p_minus))) return false;
          return true;
        } else {
          (void)f;
          return true;
        }
      },
      v_);
}

double Rate::scale(double D) const {
  return std::visit(
      [D](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantRate>) {
          if (f.r <= 0.0) return 1.0;
          return std::min(1e6, std::sqrt(D / f.r));
        } else if constexpr (std::is_same_v<T, PowerLawRate>) {
          double core = std::sqrt(f.gamma);
          double r_core = f.c * std::pow(2.0 * f.gamma, f.l);
          double diff = r_core > 0.0 ? std::min(1e4, std::sqrt(D / r_core)) : 1.0;
          return std::max(core, diff);
        } else if constexpr (std::is_same_v<T, QuadDecayPolyRate>) {
          return std::pow(f.gamma, 1.0 / f.m);
        } else if constexpr (std::is_same_v<T, StretchedExpHarmonicRate>) {
          double onset = std::pow(1.0 / (f.lambda * (f.l + 1.0)), 1.0 / (f.l + 1.0));
          return std::max(std::sqrt(f.gamma), onset);
        } else {
          return std::max(std::fabs(f.grid.front()), std::fabs(f.grid.back())) / 5.0;
        }
      },
      v_);
}

RateTail Rate::tail(Side side, double D) const {
  RateTail out;
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantRate>) {
          if (f.r > 0.0) {
            out.lambda_hat = kPosInf;
            out.cls = SideFiniteness::Finite;
            out.growth = {PhiGrowthKind::Exponential, 0.0, std::sqrt(2.0 * f.r / D), 0.0, 1.0};
          } else {
            out.lambda_hat = 0.0;
            out.cls = SideFiniteness::Infinite;
            out.growth = {PhiGrowthKind::Power, 1.0, 0.0, 0.0, 1.0};
          }
        } else if constexpr (std::is_same_v<T, PowerLawRate>) {
          if (f.l > -1.0) {
            out.lambda_hat = kPosInf;
            out.cls = SideFiniteness::Finite;
            double s = std::sqrt(2.0 * f.c / D);
            if (f.l == 0.0)
              out.growth = {PhiGrowthKind::Exponential, 0.0, s, 0.0, 1.0};
            else
              out.growth = {PhiGrowthKind::Stretched, 0.0, 0.0, s / (f.l + 1.0), f.l + 1.0};
          } else if (f.l == -1.0) {
            double lam = f.c / D;
            out.lambda_hat = lam;
            // Exact family: r = c/(gamma+x^2), so c <= D is the infinite regime.
            out.cls = lam > 1.0 ? SideFiniteness::Finite : SideFiniteness::Infinite;
            out.growth = {PhiGrowthKind::Power, power_exponent_from_lambda(lam), 0.0, 0.0, 1.0};
          } else {
            out.lambda_hat = 0.0;
            out.cls = SideFiniteness::Infinite;
            out.growth = {PhiGrowthKind::Power, 1.0, 0.0, 0.0, 1.0};
          }
        } else if constexpr (std::is_same_v<T, QuadDecayPolyRate>) {
          out.lambda_hat = 0.5 * f.m * (f.m - 1.0);
          out.cls = SideFiniteness::Finite;
          out.growth = {PhiGrowthKind::Power, f.m, 0.0, 0.0, 1.0};
        } else if constexpr (std::is_same_v<T, StretchedExpHarmonicRate>) {
          out.lambda_hat = kPosInf;
          out.cls = SideFiniteness::Finite;
          if (f.l == 0.0)
            out.growth = {PhiGrowthKind::Exponential, 0.0, f.lambda, 0.0, 1.0};
          else
            out.growth = {PhiGrowthKind::Stretched, 0.0, 0.0, f.lambda, f.l + 1.0};
        } else {
          const TabulatedRate& t = f;
          bool has = side == Side::Right ? t.c_plus.has_value() : t.c_minus.has_value();
          if (!has) throw Error(ErrorCode::MissingTail, "tabulated rate lacks a declared tail law");
          double c = side == Side::Right ? *t.c_plus : *t.c_minus;
          double p = side == Side::Right ? *t.p_plus : *t.p_minus;
          if (c == 0.0) {
            out.lambda_hat = 0.0;
            out.cls = SideFiniteness::Infinite;
            out.growth = {PhiGrowthKind::Power, 1.0, 0.0, 0.0, 1.0};
          } else if (p < 2.0) {
            out.lambda_hat = kPosInf;
            out.cls = SideFiniteness::Finite;
            double s = std::sqrt(2.0 * c / D);
            if (p == 0.0)
              out.growth = {PhiGrowthKind::Exponential, 0.0, s, 0.0, 1.0};
            else
              out.growth = {PhiGrowthKind::Stretched, 0.0, 0.0, s / (1.0 - 0.5 * p), 1.0 - 0.5 * p};
          } else if (p == 2.0) {
            double lam = c / D;
            out.lambda_hat = lam;
            // Declared law only constrains the limit, not the comparison
            // direction, so the threshold itself stays unresolved.
            out.cls = lam > 1.0 + 1e-12   ? SideFiniteness::Finite
                      : lam < 1.0 - 1e-12 ? SideFiniteness::Infinite
                                          : SideFiniteness::Boundary;
            out.growth = {PhiGrowthKind::Power, power_exponent_from_lambda(lam), 0.0, 0.0, 1.0};
          } else {
            out.lambda_hat = 0.0;
            out.cls = SideFiniteness::Infinite;
            out.growth = {PhiGrowthKind::Power, 1.0, 0.0, 0.0, 1.0};
          }
        }
      },
      v_);
  return out;
}

std::vector<double> Rate::breakpoints() const {
  return std::visit(
      [](const auto& f) -> std::vector<double> {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TabulatedRate>) {
          std::vector<double> b = f.grid;
          if (std::find(b.begin(), b.end(), 0.0) == b.end()) b.push_back(0.0);
          std::sort(b.begin(), b.end());
          return b;
        } else if constexpr (std::is_same_v<T, ConstantRate> ||
                             std::is_same_v<T, StretchedExpHarmonicRate>) {
          return {};
        } else {
          // |x|^p factors are not smooth at the origin
          (void)f;
          return {0.0};
        }
      },
      v_);
}

std::string Rate::family_name() const {
  return std::visit(
      [](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantRate>) return "constant";
        if constexpr (std::is_same_v<T, PowerLawRate>) return "powerlaw";
        if constexpr (std::is_same_v<T, QuadDecayPolyRate>) return "quaddecay";
        if constexpr (std::is_same_v<T, StretchedExpHarmonicRate>) return "stretched";
        return "tabulated";
      },
      v_);
}

double rate_eval(const Rate& rate, double x) { return rate.eval(x); }

Target::Target(Variant v) : v_(std::move(v)) {
  std::visit(
      [this](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TwoSidedExponential>) {
          require(f.beta > 0.0 && std::isfinite(f.beta), "beta must be > 0");
        } else if constexpr (std::is_same_v<T, UniformInterval> || std::is_same_v<T, TriangularInterval>) {
          require(f.A > 0.0 && std::isfinite(f.A), "half-width must be > 0");
        } else if constexpr (std::is_same_v<T, PointMass>) {
          require(std::isfinite(f.a), "point mass location must be finite");
        } else if constexpr (std::is_same_v<T, Mixture>) {
          require(!f.components.empty() && f.weights.size() == f.components.size(),
                  "mixture needs matching weights and components");
          double s = 0.0;
          for (double w : f.weights) {
            require(w > 0.0, "mixture weights must be > 0");
            s += w;
          }
          require(std::fabs(s - 1.0) <= kMassTol, "mixture weights must sum to 1");
        } else if constexpr (std::is_same_v<T, TabulatedDensity>) {
          require(f.grid.size() >= 2 && f.grid.size() == f.values.size(),
                  "tabulated density needs matching arrays");
          for (std::size_t i = 1; i < f.grid.size(); ++i)
            require(f.grid[i] > f.grid[i - 1], "density grid must increase");
          for (double d : f.values) require(std::isfinite(d) && d >= 0.0, "density must be >= 0");
          if (f.p0_plus) require(*f.p0_plus > 0.0, "tail moment exponent must be > 0");
          if (f.p0_minus) require(*f.p0_minus > 0.0, "tail moment exponent must be > 0");
          if (f.p0_plus) require(f.values.back() > 0.0, "declared right tail needs a positive edge density");
          if (f.p0_minus) require(f.values.front() > 0.0, "declared left tail needs a positive edge density");
          init_tabulated();
        }
      },
      v_);
}

void Target::init_tabulated() {
  const TabulatedDensity& t = std::get<TabulatedDensity>(v_);
  tab_dens_ = numeric::MonotoneCubic(t.grid, t.values);
  std::size_t n = t.grid.size();
  std::vector<double> cum(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    auto g = [this](double a) {
      double d = std::max(0.0, tab_dens_.eval(a));
      return d > 0.0 ? std::log(d) : kNegInf;
    };
    double inc = std::exp(numeric::log_int_adaptive(g, t.grid[i], t.grid[i + 1], 1e-12));
    cum[i + 1] = cum[i] + inc;
  }
  double m_minus = 0.0, m_plus = 0.0;
  if (t.p0_minus) {
    double edge = std::fabs(t.grid.front());
    require(edge > 0.0, "declared left tail needs grid away from 0");
    double c = t.values.front() * std::pow(edge, *t.p0_minus + 1.0);
    m_minus = c / *t.p0_minus * std::pow(edge, -*t.p0_minus);
  }
  if (t.p0_plus) {
    double edge = std::fabs(t.grid.back());
    require(edge > 0.0, "declared right tail needs grid away from 0");
    double c = t.values.back() * std::pow(edge, *t.p0_plus + 1.0);
    m_plus = c / *t.p0_plus * std::pow(edge, -*t.p0_plus);
  }
  double total = cum.back() + m_minus + m_plus;
  require(total > 0.0, "tabulated density has no mass");
  log_norm_ = std::log(total);
  tab_cdf_.resize(n);
  for (std::size_t i = 0; i < n; ++i) tab_cdf_[i] = (m_minus + cum[i]) / total;
  tab_mass_minus_tail_ = m_minus / total;
  tab_mass_plus_tail_ = m_plus / total;
}

double Target::total_mass() const { return 1.0; }

double Target::cdf(double a) const {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TwoSidedExponential>) {
          return a < 0.0 ? 0.5 * std::exp(f.beta * a) : 1.0 - 0.5 * std::exp(-f.beta * a);
        } else if constexpr (std::is_same_v<T, UniformInterval>) {
          return std::clamp((a + f.A) / (2.0 * f.A), 0.0, 1.0);
        } else if constexpr (std::is_same_v<T, TriangularInterval>) {
          if (a <= -f.A) return 0.0;
          if (a >= f.A) return 1.0;
          double A2 = 2.0 * f.A * f.A;
          return a <= 0.0 ? (f.A + a) * (f.A + a) / A2 : 1.0 - (f.A - a) * (f.A - a) / A2;
        } else if constexpr (std::is_same_v<T, PointMass>) {
          return a >= f.a ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, Mixture>) {
          double s = 0.0;
          for (std::size_t i = 0; i < f.components.size(); ++i) s += f.weights[i] * f.components[i].cdf(a);
          return s;
        } else {
          const TabulatedDensity& t = f;
          if (a <= t.grid.front()) {
            if (!t.p0_minus || tab_mass_minus_tail_ == 0.0) return a < t.grid.front() ? 0.0 : tab_cdf_.front();
            double edge = std::fabs(t.grid.front());
            return tab_mass_minus_tail_ * std::pow(std::fabs(a) / edge, -*t.p0_minus);
          }
          if (a >= t.grid.back()) {
            if (!t.p0_plus || tab_mass_plus_tail_ == 0.0) return 1.0;
            double edge = std::fabs(t.grid.back());
            return 1.0 - tab_mass_plus_tail_ * std::pow(std::fabs(a) / edge, -*t.p0_plus);
          }
          auto it = std::upper_bound(t.grid.begin(), t.grid.end(), a);
          std::size_t k = (it - t.grid.begin()) - 1;
          auto g = [this](double y) {
            double d = std::max(0.0, tab_dens_.eval(y));
            return d > 0.0 ? std::log(d) : kNegInf;
          };
          double inc = std::exp(numeric::log_int_adaptive(g, t.grid[k], a, 1e-12));
          return tab_cdf_[k] + inc * std::exp(-log_norm_);
        }
      },
      v_);
}

double Target::log_density(double a) const {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TwoSidedExponential>) {
          return std::log(0.5 * f.beta) - f.beta * std::fabs(a);
        } else if constexpr (std::is_same_v<T, UniformInterval>) {
          return std::fabs(a) <= f.A ? -std::log(2.0 * f.A) : kNegInf;
        } else if constexpr (std::is_same_v<T, TriangularInterval>) {
          if (std::fabs(a) >= f.A) return kNegInf;
          return std::log((f.A - std::fabs(a)) / (f.A * f.A));
        } else if constexpr (std::is_same_v<T, PointMass>) {
          return kNegInf;
        } else if constexpr (std::is_same_v<T, Mixture>) {
          double acc = kNegInf;
          for (std::size_t i = 0; i < f.components.size(); ++i)
            acc = logaddexp(acc, std::log(f.weights[i]) + f.components[i].log_density(a));
          return acc;
        } else {
          const TabulatedDensity& t = f;
          if (a < t.grid.front()) {
            if (!t.p0_minus) return kNegInf;
            double edge = std::fabs(t.grid.front());
            double logc = std::log(t.values.front()) + (*t.p0_minus + 1.0) * std::log(edge);
            return logc - (*t.p0_minus + 1.0) * std::log(std::fabs(a)) - log_norm_;
          }
          if (a > t.grid.back()) {
            if (!t.p0_plus) return kNegInf;
            double edge = std::fabs(t.grid.back());
            double logc = std::log(t.values.back()) + (*t.p0_plus + 1.0) * std::log(edge);
            return logc - (*t.p0_plus + 1.0) * std::log(std::fabs(a)) - log_norm_;
          }
          double d = std::max(0.0, tab_dens_.eval(a));
          return d > 0.0 ? std::log(d) - log_norm_ : kNegInf;
        }
      },
      v_);
}

std::vector<std::pair<double, double>> Target::atoms() const {
  std::vector<std::pair<double, double>> out;
  std::visit(
      [&out](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          out.emplace_back(f.a, 1.0);
        } else if constexpr (std::is_same_v<T, Mixture>) {
          for (std::size_t i = 0; i < f.components.size(); ++i)
            for (const auto& [loc, mass] : f.components[i].atoms()) out.emplace_back(loc, f.weights[i] * mass);
        }
      },
      v_);
  return out;
}

double Target::mass_at_zero() const {
  double m = 0.0;
  for (const auto& [loc, mass] : atoms())
    if (loc == 0.0) m += mass;
  return m;
}

double Target::mass_positive() const {
  // cdf(0) includes any atom at 0; callers reject that case separately.
  return 1.0 - cdf(0.0);
}

namespace {

bool targets_mirror_equal(const Target& a, const Target& b);

bool target_is_symmetric_impl(const Target& t) { return t.is_symmetric(); }

bool targets_mirror_equal(const Target& a, const Target& b) {
  if (a.family().index() != b.family().index()) return false;
  if (const auto* pa = std::get_if<PointMass>(&a.family())) {
    const auto* pb = std::get_if<PointMass>(&b.family());
    return nearly(pa->a, -pb->a);
  }
  // Non-atomic components must each be symmetric themselves to count as
  // mirror images; this is conservative but covers the supported inputs.
  return target_is_symmetric_impl(a) && target_is_symmetric_impl(b);
}

}  // namespace

bool Target::is_symmetric() const {
  return std::visit(
      [&](const auto& f) -> bool {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TwoSidedExponential> || std::is_same_v<T, UniformInterval> ||
                      std::is_same_v<T, TriangularInterval>) {
          return true;
        } else if constexpr (std::is_same_v<T, PointMass>) {
          return f.a == 0.0;
        } else if constexpr (std::is_same_v<T, Mixture>) {
          std::vector<bool> used(f.components.size(), false);
          for (std::size_t i = 0; i < f.components.size(); ++i) {
            bool found = false;
            for (std::size_t j = 0; j < f.components.size(); ++j) {
              if (used[j] || !nearly(f.weights[i], f.weights[j])) continue;
              if (targets_mirror_equal(f.components[i], f.components[j])) {
                used[j] = true;
                found = true;
                break;
              }
            }
            if (!found) return false;
          }
          return true;
        } else {
          const TabulatedDensity& t = f;
          std::size_t n = t.grid.size();
          for (std::size_t i = 0; i < n; ++i) {
            if (!nearly(t.grid[i], -t.grid[n - 1 - i])) return false;
            if (!nearly(t.values[i], t.values[n - 1 - i])) return false;
          }
          if (t.p0_plus.has_value() != t.p0_minus.has_value()) return false;
          if (t.p0_plus && !nearly(*t.p0_plus, *t.p0_minus)) return false;
          return true;
        }
      },
      v_);
}

double Target::avg_dist() const {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TwoSidedExponential>) {
          return 1.0 / f.beta;
        } else if constexpr (std::is_same_v<T, UniformInterval>) {
          return 0.5 * f.A;
        } else if constexpr (std::is_same_v<T, TriangularInterval>) {
          return f.A / 3.0;
        } else if constexpr (std::is_same_v<T, PointMass>) {
          return std::fabs(f.a);
        } else if constexpr (std::is_same_v<T, Mixture>) {
          double s = 0.0;
          for (std::size_t i = 0; i < f.components.size(); ++i) {
            double d = f.components[i].avg_dist();
            if (d == kPosInf) return kPosInf;
            s += f.weights[i] * d;
          }
          return s;
        } else {
          const TabulatedDensity& t = f;
          auto g = [&](double a) {
            double ld = log_density(a);
            return ld == kNegInf ? kNegInf : std::log(std::fabs(a) + 1e-300) + ld;
          };
          double interior = std::exp(numeric::log_int_adaptive(g, t.grid.front(), t.grid.back(), 1e-10));
          double tails = 0.0;
          if (t.p0_plus) {
            if (*t.p0_plus <= 1.0) return kPosInf;
            double edge = t.grid.back();
            // integral_a>edge a * dens(a) with dens = values.back() (edge/a)^{p0+1}
            tails += tab_mass_plus_tail_ * *t.p0_plus / (*t.p0_plus - 1.0) * edge;
          }
          if (t.p0_minus) {
            if (*t.p0_minus <= 1.0) return kPosInf;
            double edge = std::fabs(t.grid.front());
            tails += tab_mass_minus_tail_ * *t.p0_minus / (*t.p0_minus - 1.0) * edge;
          }
          return interior + tails;
        }
      },
      v_);
}

MuTail Target::side_tail(Side side) const {
  return std::visit(
      [&](const auto& f) -> MuTail {
        using T = std::decay_t<decltype(f)>;
        MuTail out;
        if constexpr (std::is_same_v<T, TwoSidedExponential>) {
          out.kind = MuTailKind::Exponential;
          out.beta = f.beta;
        } else if constexpr (std::is_same_v<T, UniformInterval> || std::is_same_v<T, TriangularInterval>) {
          out.kind = MuTailKind::Compact;
          out.edge = f.A;
        } else if constexpr (std::is_same_v<T, PointMass>) {
          out.kind = MuTailKind::Compact;
          out.edge = std::fabs(f.a);
        } else if constexpr (std::is_same_v<T, Mixture>) {
          bool pareto = false, expo = false;
          double p0 = kPosInf, beta = kPosInf, edge = 0.0;
          for (const auto& c : f.components) {
            MuTail mt = c.side_tail(side);
            if (mt.kind == MuTailKind::Pareto) {
              pareto = true;
              p0 = std::min(p0, mt.p0);
            } else if (mt.kind == MuTailKind::Exponential) {
              expo = true;
              beta = std::min(beta, mt.beta);
            } else {
              edge = std::max(edge, mt.edge);
            }
          }
          if (pareto) {
            out.kind = MuTailKind::Pareto;
            out.p0 = p0;
          } else if (expo) {
            out.kind = MuTailKind::Exponential;
            out.beta = beta;
          } else {
            out.kind = MuTailKind::Compact;
            out.edge = edge;
          }
        } else {
          const TabulatedDensity& t = f;
          const auto& p0 = side == Side::Right ? t.p0_plus : t.p0_minus;
          if (p0) {
            out.kind = MuTailKind::Pareto;
            out.p0 = *p0;
            out.edge = side == Side::Right ? std::fabs(t.grid.back()) : std::fabs(t.grid.front());
          } else {
            out.kind = MuTailKind::Compact;
            out.edge = side == Side::Right ? std::max(0.0, t.grid.back()) : std::max(0.0, -t.grid.front());
          }
        }
        return out;
      },
      v_);
}

double Target::effective_extent(Side side, double log_density_floor) const {
  MuTail mt = side_tail(side);
  switch (mt.kind) {
    case MuTailKind::Compact:
      return mt.edge;
    case MuTailKind::Exponential:
      return std::max(1.0, (std::log(0.5 * mt.beta) - log_density_floor) / mt.beta);
    case MuTailKind::Pareto: {
      double a = mt.edge > 0.0 ? mt.edge : 1.0;
      double ld = log_density(side_sign(side) * a);
      if (ld == kNegInf) return a;
      return a * std::exp(std::max(0.0, (ld - log_density_floor) / (mt.p0 + 1.0)));
    }
  }
  return 1.0;
}

std::string Target::family_name() const {
  return std::visit(
      [](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TwoSidedExponential>) return "exp2";
        if constexpr (std::is_same_v<T, UniformInterval>) return "uniform";
        if constexpr (std::is_same_v<T, TriangularInterval>) return "triangular";
        if constexpr (std::is_same_v<T, PointMass>) return "point";
        if constexpr (std::is_same_v<T, Mixture>) return "mixture";
        return "tabulated";
      },
      v_);
}

namespace {

SplitResult split_impl(const Target& mu, bool relaxed) {
  if (mu.mass_at_zero() > 0.0) throw Error(ErrorCode::AtomAtOrigin, "target charges the origin");
  SplitResult out;
  out.p = mu.mass_positive();
  double q = 1.0 - out.p;
  if (!relaxed && (out.p <= 1e-14 || q <= 1e-14))
    throw Error(ErrorCode::OneSided, "target charges only one half-line");

  double atom_mass_plus = 0.0, atom_mass_minus = 0.0;
  for (const auto& [loc, mass] : mu.atoms()) {
    if (loc > 0.0) {
      out.plus.atoms.emplace_back(loc, mass);
      atom_mass_plus += mass;
    } else if (loc < 0.0) {
      out.minus.atoms.emplace_back(loc, mass);
      atom_mass_minus += mass;
    }
  }
  out.plus.mass = out.p;
  out.minus.mass = q;
  auto muc = std::make_shared<const Target>(mu);
  if (out.p > 0.0) {
    for (auto& [loc, mass] : out.plus.atoms) mass /= out.p;
    double pm = out.p;
    out.plus.log_density = [muc, pm](double a) { return muc->log_density(a) - std::log(pm); };
    out.plus.has_density = out.p - atom_mass_plus > 1e-14;
  }
  if (q > 0.0) {
    for (auto& [loc, mass] : out.minus.atoms) mass /= q;
    out.minus.log_density = [muc, q](double a) { return muc->log_density(a) - std::log(q); };
    out.minus.has_density = q - atom_mass_minus > 1e-14;
  }
  out.plus.tail = mu.side_tail(Side::Right);
  out.minus.tail = mu.side_tail(Side::Left);
  double scale = mu.avg_dist();
  if (!(scale > 0.0) || scale == kPosInf) scale = 1.0;
  out.plus.scale = out.minus.scale = scale;
  return out;
}

}  // namespace

SplitResult distribution_split(const Target& mu) { return split_impl(mu, false); }
SplitResult distribution_split_relaxed(const Target& mu) { return split_impl(mu, true); }

}  // namespace resetsearch::model
