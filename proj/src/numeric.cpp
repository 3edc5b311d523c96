#include "resetsearch/numeric.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>

#include "resetsearch/error.hpp"

namespace resetsearch::numeric {

namespace {

GaussRule build_gauss(int n) {
  // Newton iteration on P_n with the classical asymptotic initial guess.
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double pi = std::acos(-1.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

std::map<int, GaussRule>& gauss_cache() {
  static std::map<int, GaussRule> cache;
  return cache;
}

std::mutex gauss_mutex;

double log_int_rec(const std::function<double(double)>& g, double a, double b, double whole,
                   double rel_tol, int depth, double log_floor) {
  double m = 0.5 * (a + b);
  double left = log_int_gl_panel(g, a, m);
  double right = log_int_gl_panel(g, m, b);
  double two = logaddexp(left, right);
  if (depth <= 0) return two;
  if (two == kNegInf && whole == kNegInf) return two;
  double diff = std::fabs(std::expm1(whole - two));
  if (diff < rel_tol) return two;
  if (two < log_floor && whole < log_floor) return std::max(two, whole);
  return logaddexp(log_int_rec(g, a, m, left, rel_tol, depth - 1, log_floor),
                   log_int_rec(g, m, b, right, rel_tol, depth - 1, log_floor));
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  std::lock_guard<std::mutex> lock(gauss_mutex);
  auto& cache = gauss_cache();
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_gauss(n)).first;
  return it->second;
}

double log_int_gl_panel(const std::function<double(double)>& g, double a, double b, int order) {
  if (!(b > a)) return kNegInf;
  const GaussRule& rule = gauss_legendre(order);
  double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double hi = kNegInf;
  std::array<double, 64> vals{};
  for (int i = 0; i < order; ++i) {
    double v = g(mid + half * rule.nodes[i]);
    vals[i] = v;
    hi = std::max(hi, v);
  }
  if (hi == kNegInf) return kNegInf;
  double s = 0.0;
  for (int i = 0; i < order; ++i) s += rule.weights[i] * std::exp(vals[i] - hi);
  return hi + std::log(s * half);
}

double log_int_adaptive(const std::function<double(double)>& g, double a, double b,
                        double rel_tol, int max_depth, double log_floor) {
  if (!(b > a)) return kNegInf;
  double whole = log_int_gl_panel(g, a, b);
  return log_int_rec(g, a, b, whole, rel_tol, max_depth, log_floor);
}

MonotoneCubic::MonotoneCubic(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
  std::size_t n = xs_.size();
  if (n < 2 || ys_.size() != n) throw Error(ErrorCode::InvalidParameter, "interpolant needs >= 2 points");
  for (std::size_t i = 1; i < n; ++i)
    if (!(xs_[i] > xs_[i - 1])) throw Error(ErrorCode::InvalidParameter, "abscissae must increase");
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = xs_[i + 1] - xs_[i];
    delta[i] = (ys_[i + 1] - ys_[i]) / h[i];
  }
  ds_.assign(n, 0.0);
  ds_[0] = delta[0];
  ds_[n - 1] = delta[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      ds_[i] = 0.0;  // local extremum: flat slope keeps the interpolant monotone
    } else {
      double w1 = 2.0 * h[i] + h[i - 1], w2 = h[i] + 2.0 * h[i - 1];
      ds_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  // Fritsch-Carlson limiter on the end slopes.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (delta[i] == 0.0) {
      ds_[i] = ds_[i + 1] = 0.0;
    } else {
      double alpha = ds_[i] / delta[i], beta = ds_[i + 1] / delta[i];
      double s = alpha * alpha + beta * beta;
      if (s > 9.0) {
        double tau = 3.0 / std::sqrt(s);
        ds_[i] = tau * alpha * delta[i];
        ds_[i + 1] = tau * beta * delta[i];
      }
    }
  }
}

std::size_t MonotoneCubic::locate(double x) const {
  auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  std::size_t k = it - xs_.begin();
  if (k == 0) return 0;
  if (k >= xs_.size()) return xs_.size() - 2;
  return k - 1;
}

double MonotoneCubic::eval(double x) const {
  std::size_t k = locate(x);
  double h = xs_[k + 1] - xs_[k], t = (x - xs_[k]) / h;
  double t2 = t * t, t3 = t2 * t;
  double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * ys_[k] + h * h10 * ds_[k] + h01 * ys_[k + 1] + h * h11 * ds_[k + 1];
}

double MonotoneCubic::deriv(double x) const {
  std::size_t k = locate(x);
  double h = xs_[k + 1] - xs_[k], t = (x - xs_[k]) / h;
  double dh00 = (6 * t * t - 6 * t) / h, dh10 = 3 * t * t - 4 * t + 1;
  double dh01 = (-6 * t * t + 6 * t) / h, dh11 = 3 * t * t - 2 * t;
  return dh00 * ys_[k] + dh10 * ds_[k] + dh01 * ys_[k + 1] + dh11 * ds_[k + 1];
}

HermiteSpline::HermiteSpline(std::vector<double> xs, std::vector<double> ys, std::vector<double> ds)
    : xs_(std::move(xs)), ys_(std::move(ys)), ds_(std::move(ds)) {
  if (xs_.size() < 2 || ys_.size() != xs_.size() || ds_.size() != xs_.size())
    throw Error(ErrorCode::InvalidParameter, "hermite spline needs matching arrays");
}

std::size_t HermiteSpline::locate(double x) const {
  auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  std::size_t k = it - xs_.begin();
  if (k == 0) return 0;
  if (k >= xs_.size()) return xs_.size() - 2;
  return k - 1;
}

double HermiteSpline::eval(double x) const {
  std::size_t k = locate(x);
  double h = xs_[k + 1] - xs_[k], t = (x - xs_[k]) / h;
  double t2 = t * t, t3 = t2 * t;
  double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * ys_[k] + h * h10 * ds_[k] + h01 * ys_[k + 1] + h * h11 * ds_[k + 1];
}

GoldenResult golden_section(const std::function<double(double)>& f, double lo, double hi,
                            double x_tol, int max_iter,
                            const std::function<void(double, double)>& trace) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  GoldenResult res;
  auto eval = [&](double x) {
    double v = f(x);
    ++res.evaluations;
    if (trace) trace(x, v);
    return v;
  };
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = eval(x1), f2 = eval(x2);
  for (int it = 0; it < max_iter && (b - a) > x_tol; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = eval(x2);
    }
  }
  if (f1 <= f2) {
    res.x = x1;
    res.value = f1;
  } else {
    res.x = x2;
    res.value = f2;
  }
  return res;
}

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, const std::vector<double>& step,
                             double f_tol, int max_iter,
                             const std::function<void(const std::vector<double>&, double)>& trace) {
  std::size_t n = x0.size();
  NelderMeadResult res;
  auto eval = [&](const std::vector<double>& x) {
    double v = f(x);
    ++res.evaluations;
    if (trace) trace(x, v);
    return v;
  };
  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step[i];
  for (std::size_t i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it + 1;
    std::vector<std::size_t> ord(n + 1);
    for (std::size_t i = 0; i <= n; ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::size_t best = ord[0], worst = ord[n], second = ord[n - 1];
    double spread = std::fabs(vals[worst] - vals[best]);
    if (spread < f_tol * (1.0 + std::fabs(vals[best]))) {
      res.converged = true;
      break;
    }
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i)
      if (i != worst)
        for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j] / double(n);
    auto blend = [&](double c) {
      std::vector<double> x(n);
      for (std::size_t j = 0; j < n; ++j) x[j] = centroid[j] + c * (centroid[j] - pts[worst][j]);
      return x;
    };
    std::vector<double> xr = blend(1.0);
    double fr = eval(xr);
    if (fr < vals[best]) {
      std::vector<double> xe = blend(2.0);
      double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
    } else if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
    } else {
      std::vector<double> xc = blend(fr < vals[worst] ? 0.5 : -0.5);
      double fc = eval(xc);
      if (fc < std::min(fr, vals[worst])) {
        pts[worst] = xc;
        vals[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t j = 0; j < n; ++j) pts[i][j] = pts[best][j] + 0.5 * (pts[i][j] - pts[best][j]);
          vals[i] = eval(pts[i]);
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (vals[i] < vals[best]) best = i;
  res.x = pts[best];
  res.value = vals[best];
  return res;
}

LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::size_t n = xs.size();
  if (n < 2 || ys.size() != n) throw Error(ErrorCode::InvalidParameter, "fit needs >= 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::InvalidParameter, "degenerate abscissae in fit");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.rms_residual = std::sqrt(ss_res / double(n));
  return fit;
}

}  // namespace resetsearch::numeric
