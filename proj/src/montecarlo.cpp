#include "resetsearch/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <thread>
#include <vector>

#include "resetsearch/error.hpp"

namespace resetsearch::montecarlo {

namespace {

struct WallGeometry {
  bool bounded = false;
  double L1 = 0.0, L2 = 0.0;
};

WallGeometry check_geometry(double D, double a, const model::SupportSpec& support) {
  if (!(D > 0.0) || !std::isfinite(D)) throw Error(ErrorCode::InvalidParameter, "D must be > 0");
  if (!std::isfinite(a) || a == 0.0)
    throw Error(ErrorCode::InvalidParameter, "target must be finite and away from the start");
  WallGeometry w;
  if (const auto* iv = std::get_if<model::Interval>(&support.value())) {
    w.bounded = true;
    w.L1 = iv->L1;
    w.L2 = iv->L2;
    if (!(a > -w.L1) || !(a < w.L2))
      throw Error(ErrorCode::InvalidParameter, "target must lie strictly between the walls");
  }
  return w;
}

void check_config(const SimConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt))
    throw Error(ErrorCode::InvalidParameter, "dt must be > 0");
  if (cfg.n_paths < 1) throw Error(ErrorCode::InvalidParameter, "n_paths must be >= 1");
  if (!(cfg.t_max > 0.0) || !std::isfinite(cfg.t_max))
    throw Error(ErrorCode::InvalidParameter, "t_max must be > 0");
}

int worker_count(long long n_paths) {
  long threads = 1;
  if (const char* env = std::getenv("RESETSEARCH_THREADS")) {
    threads = std::strtol(env, nullptr, 10);
    if (threads < 1) threads = 1;
    if (threads > 64) threads = 64;
  }
  return static_cast<int>(std::min<long long>(threads, n_paths));
}

// Stream for one path, a function of (seed, path) only: the estimate cannot
// depend on which worker ran the path.
std::mt19937_64 path_rng(std::uint64_t seed, long long path) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(path) >> 32)};
  return std::mt19937_64(seq);
}

struct PathOutcome {
  double t = 0.0;
  bool censored = false;
};

// Raw-bit uniforms and a polar-method normal over the stdlib engine. The
// distribution adaptors in <random> cost several times more per draw, which
// matters at the ~1e9 steps a production estimate takes.
struct Draws {
  std::mt19937_64& rng;
  double spare = 0.0;
  bool has_spare = false;

  double u01() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    for (;;) {
      double u = 2.0 * u01() - 1.0;
      double v = 2.0 * u01() - 1.0;
      double s = u * u + v * v;
      if (s >= 1.0 || s <= 0.0) continue;
      double m = std::sqrt(-2.0 * std::log(s) / s);
      spare = v * m;
      has_spare = true;
      return u * m;
    }
  }
};

// Steps until a Bernoulli(p) clock first fires, the p-geometric law; one
// uniform replaces a per-step draw when p is x-independent.
long long geometric_steps(Draws& draws, double p) {
  constexpr long long kNever = std::numeric_limits<long long>::max();
  if (p <= 0.0) return kNever;
  if (p >= 1.0) return 1;
  double u = draws.u01();
  if (u <= 0.0) return kNever;
  double n = std::ceil(std::log(u) / std::log1p(-p));
  if (n < 1.0) return 1;
  if (n >= 4e18) return kNever;
  return static_cast<long long>(n);
}

PathOutcome run_path(const model::Rate& rate, const model::ConstantRate* constant, double D,
                     double a, const WallGeometry& walls, const SimConfig& cfg,
                     std::mt19937_64& rng) {
  const double dt = cfg.dt;
  const double sigma = std::sqrt(D * dt);
  const double inv_ddt = 2.0 / (D * dt);
  // crossing probabilities below exp(-30) are not worth a draw
  const double bridge_gate = cfg.bridge_correction ? 15.0 * D * dt : -1.0;
  const long long max_steps = std::max<long long>(1, static_cast<long long>(cfg.t_max / dt));

  Draws draws{rng};
  double x = 0.0;
  double cached_r = -1.0, cached_p = 0.0;
  long long until_reset = 0;
  if (constant) {
    cached_p = -std::expm1(-constant->r * dt);
    until_reset = geometric_steps(draws, cached_p);
  }
  for (long long k = 0; k < max_steps; ++k) {
    if (constant) {
      if (--until_reset == 0) {
        x = 0.0;  // restart consumes the tick; a teleport cannot cross anything
        until_reset = geometric_steps(draws, cached_p);
        continue;
      }
    } else {
      double r = rate.eval(x);
      if (r != cached_r) {
        cached_r = r;
        cached_p = -std::expm1(-r * dt);
      }
      if (cached_p > 0.0 && draws.u01() < cached_p) {
        x = 0.0;
        continue;
      }
    }
    double xn = x + sigma * draws.normal();
    double g = (a - x) * (a - xn);
    if (g <= 0.0) return {static_cast<double>(k + 1) * dt, false};
    if (g < bridge_gate && draws.u01() < std::exp(-g * inv_ddt))
      return {static_cast<double>(k + 1) * dt, false};
    if (walls.bounded) {
      double gl = (x + walls.L1) * (xn + walls.L1);
      if (gl <= 0.0 || (gl < bridge_gate && draws.u01() < std::exp(-gl * inv_ddt))) {
        x = 0.0;
        continue;
      }
      double gu = (walls.L2 - x) * (walls.L2 - xn);
      if (gu <= 0.0 || (gu < bridge_gate && draws.u01() < std::exp(-gu * inv_ddt))) {
        x = 0.0;
        continue;
      }
    }
    x = xn;
  }
  return {cfg.t_max, true};
}

struct RawRuns {
  std::vector<double> t;
  std::vector<char> censored;
};

RawRuns run_all(const model::Rate& rate, double D, double a, const model::SupportSpec& support,
                const SimConfig& cfg) {
  check_config(cfg);
  WallGeometry walls = check_geometry(D, a, support);
  const auto* constant = std::get_if<model::ConstantRate>(&rate.family());

  const long long n = cfg.n_paths;
  RawRuns runs;
  runs.t.resize(static_cast<std::size_t>(n));
  runs.censored.resize(static_cast<std::size_t>(n));

  auto chunk = [&](long long lo, long long hi) {
    for (long long p = lo; p < hi; ++p) {
      std::mt19937_64 rng = path_rng(cfg.seed, p);
      PathOutcome out = run_path(rate, constant, D, a, walls, cfg, rng);
      runs.t[static_cast<std::size_t>(p)] = out.t;
      runs.censored[static_cast<std::size_t>(p)] = out.censored ? 1 : 0;
    }
  };

  int workers = worker_count(n);
  if (workers <= 1) {
    chunk(0, n);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      long long lo = n * w / workers, hi = n * (w + 1) / workers;
      pool.emplace_back(chunk, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return runs;
}

}  // namespace

SimEstimate simulate_hitting(const model::Rate& rate, double D, double a,
                             const model::SupportSpec& support, const SimConfig& cfg) {
  RawRuns runs = run_all(rate, D, a, support, cfg);
  const long long n = cfg.n_paths;

  // reduction in path order: independent of the worker split
  double sum = 0.0;
  long long censored = 0;
  for (long long p = 0; p < n; ++p) {
    sum += runs.t[static_cast<std::size_t>(p)];
    censored += runs.censored[static_cast<std::size_t>(p)];
  }
  double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (long long p = 0; p < n; ++p) {
    double d = runs.t[static_cast<std::size_t>(p)] - mean;
    ss += d * d;
  }
  SimEstimate est;
  est.mean = mean;
  est.std_error = n > 1 ? std::sqrt(ss / (static_cast<double>(n - 1) * static_cast<double>(n))) : 0.0;
  est.censored_fraction = static_cast<double>(censored) / static_cast<double>(n);
  est.paths = n;
  est.excess_censoring = est.censored_fraction > 0.05;
  return est;
}

std::vector<double> survival_curve(const model::Rate& rate, double D, double a,
                                   const model::SupportSpec& support, const SimConfig& cfg,
                                   const std::vector<double>& t_grid) {
  for (double t : t_grid)
    if (!std::isfinite(t)) throw Error(ErrorCode::InvalidParameter, "survival grid must be finite");
  RawRuns runs = run_all(rate, D, a, support, cfg);
  const long long n = cfg.n_paths;

  std::vector<double> out(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    long long alive = 0;
    for (long long p = 0; p < n; ++p)
      alive += runs.censored[static_cast<std::size_t>(p)] ||
               runs.t[static_cast<std::size_t>(p)] > t_grid[i];
    out[i] = static_cast<double>(alive) / static_cast<double>(n);
  }
  return out;
}

}  // namespace resetsearch::montecarlo
