#include "peierls/minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "chain_solver.hpp"
#include "peierls/error.hpp"

namespace peierls {
namespace {

using detail::ChainProblem;

constexpr double kTailDecay = 1e-12;
constexpr double kTransitionPeriods = 2.0;
constexpr long kMaxWindow = 2000000;

detail::ChainOptions chain_options(const MinimizerOptions& o) {
  detail::ChainOptions c;
  c.tolerance = o.tolerance;
  c.max_sweeps = o.max_sweeps;
  return c;
}

void require_symbol(long p, long q) {
  if (q <= 0) throw Error(ErrorKind::InvalidArgument, "q must be positive");
  if (std::gcd(p, q) != 1) throw Error(ErrorKind::InvalidArgument, "p/q must be in lowest terms");
}

MinimizeResult solve_periodic_from(const GeneratingFunction& h, long p, long q,
                                   std::vector<double> x, const MinimizerOptions& options) {
  ChainProblem chain = detail::make_chain(h, std::move(x));
  chain.periodic = true;
  chain.p = p;
  MinimizeResult out;
  out.report = detail::solve_chain(chain, chain_options(options));
  out.config.values = std::move(chain.x);
  out.config.boundary = Periodic{p, q};
  return out;
}

bool better(const MinimizeResult& a, const MinimizeResult& b) {
  if (a.report.converged != b.report.converged) return a.report.converged;
  return a.report.action < b.report.action;
}

double max_distance(const Configuration& a, const Configuration& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

}  // namespace

double action(const GeneratingFunction& h, const Configuration& c) {
  if (c.is_periodic()) {
    ChainProblem chain = detail::make_chain(h, c.values);
    chain.periodic = true;
    chain.p = std::get<Periodic>(c.boundary).p;
    return detail::chain_action(chain);
  }
  if (c.size() < 2) throw Error(ErrorKind::InvalidArgument, "action needs at least two values");
  return detail::chain_action(detail::make_chain(h, c.values));
}

std::vector<double> stationarity_residual(const GeneratingFunction& h, const Configuration& c) {
  std::vector<double> r;
  if (c.is_periodic()) {
    const long q = static_cast<long>(c.size());
    r.reserve(c.size());
    for (long i = 0; i < q; ++i) {
      const double xm = c.at(i - 1 + c.index_offset);
      const double x = c.at(i + c.index_offset);
      const double xp = c.at(i + 1 + c.index_offset);
      r.push_back(h.d1(x, xp) + h.d2(xm, x));
    }
    return r;
  }
  if (c.size() < 3) throw Error(ErrorKind::InvalidArgument, "stationarity needs at least three values");
  r.reserve(c.size() - 2);
  for (std::size_t i = 1; i + 1 < c.size(); ++i) {
    r.push_back(h.d1(c.values[i], c.values[i + 1]) + h.d2(c.values[i - 1], c.values[i]));
  }
  return r;
}

double residual_inf(const GeneratingFunction& h, const Configuration& c) {
  double m = 0.0;
  for (double v : stationarity_residual(h, c)) m = std::max(m, std::abs(v));
  return m;
}

Configuration normalized(const Configuration& c) {
  if (!c.is_periodic()) return c;
  const long q = static_cast<long>(c.size());
  long best_j = 0;
  double best_frac = std::numeric_limits<double>::infinity();
  double best_k = 0.0;
  for (long j = 0; j < q; ++j) {
    const double x = c.values[static_cast<std::size_t>(j)];
    double k = std::floor(x);
    double frac = x - k;
    if (frac > 1.0 - 1e-12) {
      k += 1.0;
      frac -= 1.0;
    }
    if (frac < best_frac) {
      best_frac = frac;
      best_j = j;
      best_k = k;
    }
  }
  Configuration out = c;
  for (long i = 0; i < q; ++i) {
    out.values[static_cast<std::size_t>(i)] = c.at(c.index_offset + i + best_j) - best_k;
  }
  return out;
}

MinimizeResult minimize_periodic(const GeneratingFunction& h, long p, long q,
                                 const std::optional<Configuration>& init,
                                 const MinimizerOptions& options) {
  require_symbol(p, q);
  const auto qs = static_cast<std::size_t>(q);
  if (init) {
    if (init->size() != qs) throw Error(ErrorKind::InvalidArgument, "initial configuration must hold q values");
    return solve_periodic_from(h, p, q, init->values, options);
  }
  const double rho = static_cast<double>(p) / static_cast<double>(q);
  std::vector<std::vector<double>> starts;
  auto uniform = [&](double phase) {
    std::vector<double> x(qs);
    for (std::size_t i = 0; i < qs; ++i) x[i] = phase + rho * static_cast<double>(i);
    return x;
  };
  auto staircase = [&](double phase) {
    std::vector<double> x(qs);
    for (std::size_t i = 0; i < qs; ++i) x[i] = std::floor(rho * static_cast<double>(i) + phase);
    return x;
  };
  starts.push_back(uniform(0.0));
  starts.push_back(uniform(0.5 / static_cast<double>(q)));
  if (q > 1) {
    starts.push_back(staircase(0.5 / static_cast<double>(q)));
    starts.push_back(staircase(0.5));
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int r = 0; r < options.restarts; ++r) starts.push_back(uniform(unit(rng) / static_cast<double>(q)));

  std::optional<MinimizeResult> best;
  for (auto& x : starts) {
    MinimizeResult candidate = solve_periodic_from(h, p, q, std::move(x), options);
    if (!best || better(candidate, *best)) best = std::move(candidate);
  }
  best->config = normalized(best->config);
  return *best;
}

bool periodic_degenerate(const GeneratingFunction& h, const Configuration& orbit,
                         const MinimizerOptions& options) {
  if (!orbit.is_periodic()) throw Error(ErrorKind::InvalidArgument, "degeneracy check needs a periodic orbit");
  if (second_variation_min_eigenvalue(h, orbit) <= 1e-10) return true;
  const auto per = std::get<Periodic>(orbit.boundary);
  // Two unrelated starts landing on distinct orbits of equal action, with
  // the midpoint also of equal action, indicate a continuum.
  MinimizerOptions o = options;
  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double rho = static_cast<double>(per.p) / static_cast<double>(per.q);
  auto random_start = [&] {
    std::vector<double> x(orbit.size());
    const double phase = unit(rng);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = phase + rho * static_cast<double>(i);
    return x;
  };
  MinimizeResult a = solve_periodic_from(h, per.p, per.q, random_start(), o);
  MinimizeResult b = solve_periodic_from(h, per.p, per.q, random_start(), o);
  if (!a.report.converged || !b.report.converged) return false;
  const Configuration na = normalized(a.config);
  const Configuration nb = normalized(b.config);
  if (max_distance(na, nb) <= 1e-6) return false;
  const double scale = 1.0 + std::abs(a.report.action);
  if (std::abs(a.report.action - b.report.action) > 1e-12 * scale) return false;
  Configuration mid = na;
  for (std::size_t i = 0; i < mid.size(); ++i) mid.values[i] = 0.5 * (na.values[i] + nb.values[i]);
  return std::abs(action(h, mid) - a.report.action) <= 1e-12 * scale;
}

double periodic_log_multiplier(const GeneratingFunction& h, const Configuration& orbit) {
  if (!orbit.is_periodic()) throw Error(ErrorKind::InvalidArgument, "multiplier needs a periodic orbit");
  const long q = static_cast<long>(orbit.size());
  const long o = orbit.index_offset;
  // Columns of M map (dx_{i-1}, dx_i) to (dx_i, dx_{i+1}).
  double m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0;
  double log_scale = 0.0;
  for (long i = 0; i < q; ++i) {
    const double xm = orbit.at(o + i - 1);
    const double x = orbit.at(o + i);
    const double xp = orbit.at(o + i + 1);
    const double c12 = h.d12(x, xp);
    const double a = -(h.d11(x, xp) + h.d22(xm, x)) / c12;
    const double b = -h.d12(xm, x) / c12;
    const double n00 = m10, n01 = m11;
    const double n10 = a * m10 + b * m00;
    const double n11 = a * m11 + b * m01;
    m00 = n00, m01 = n01, m10 = n10, m11 = n11;
    const double big = std::max({std::abs(m00), std::abs(m01), std::abs(m10), std::abs(m11)});
    if (big > 1e100) {
      m00 /= big, m01 /= big, m10 /= big, m11 /= big;
      log_scale += std::log(big);
    }
  }
  const double trace = std::abs(m00 + m11);
  if (trace == 0.0) return 0.0;
  const double log_trace = std::log(trace) + log_scale;
  if (log_trace > 30.0) return log_trace;
  const double t = std::exp(log_trace);
  if (t <= 2.0 + 1e-12) return 0.0;
  return std::acosh(0.5 * t);
}

Configuration next_orbit(const Configuration& orbit, double tau) {
  if (!orbit.is_periodic()) throw Error(ErrorKind::InvalidArgument, "next_orbit needs a periodic orbit");
  if (!(tau > 0.0) || tau > 1.0) throw Error(ErrorKind::InvalidArgument, "symmetry shift must lie in (0, 1]");
  const auto per = std::get<Periodic>(orbit.boundary);
  const long o = orbit.index_offset;
  const double x0 = orbit.at(o);
  const double eps = 1e-10 * std::max(1.0, std::abs(x0));
  long best_j = 0;
  double best_k = tau;
  double best_value = x0 + tau;
  for (long j = 0; j < per.q; ++j) {
    const double xj = orbit.at(o + j);
    double k = tau * (std::floor((x0 - xj) / tau) + 1.0);
    if (xj + k <= x0 + eps) k += tau;
    if (xj + k < best_value - eps) {
      best_value = xj + k;
      best_j = j;
      best_k = k;
    }
  }
  Configuration out = orbit;
  for (long i = 0; i < per.q; ++i) out.values[static_cast<std::size_t>(i)] = orbit.at(o + i + best_j) + best_k;
  return out;
}

int heteroclinic_width(const GeneratingFunction& h, const Configuration& orbit) {
  const double log_lambda = periodic_log_multiplier(h, orbit);
  if (log_lambda <= 1e-9) {
    throw Error(ErrorKind::DegenerateSymbol, "periodic orbit is not hyperbolic; no heteroclinic window");
  }
  const double periods =
      (kTransitionPeriods * 2.0 * std::numbers::pi + 2.0 * std::abs(std::log(kTailDecay))) / log_lambda;
  const long q = static_cast<long>(orbit.size());
  long w = static_cast<long>(std::ceil(periods));
  w = std::max<long>(w, 3);
  w = std::max<long>(w, (16 + q - 1) / q);
  return static_cast<int>(std::min<long>(w, kMaxWindow / q));
}

AdvancingResult minimize_advancing(const GeneratingFunction& h, long p, long q, SymbolVariant variant,
                                   int width, const MinimizerOptions& options) {
  require_symbol(p, q);
  if (variant == SymbolVariant::Exact) {
    throw Error(ErrorKind::InvalidArgument, "advancing solve needs the + or - variant");
  }
  if (width < 0) throw Error(ErrorKind::InvalidArgument, "width must be nonnegative");
  MinimizeResult periodic = minimize_periodic(h, p, q, std::nullopt, options);
  if (!periodic.report.converged) {
    throw Error(ErrorKind::NonConvergence, "periodic minimizer for " + std::to_string(p) + "/" +
                                               std::to_string(q) + " did not converge");
  }
  if (periodic_degenerate(h, periodic.config, options)) {
    throw Error(ErrorKind::DegenerateSymbol, std::to_string(p) + "/" + std::to_string(q) +
                                                 " minimizers form a continuum; the " +
                                                 (variant == SymbolVariant::Plus ? "+" : "-") +
                                                 " symbol is undefined");
  }
  const Configuration lower = periodic.config;
  const Configuration upper = next_orbit(lower, h.translation_symmetry());
  const bool plus = variant == SymbolVariant::Plus;
  const Configuration& left = plus ? lower : upper;
  const Configuration& right = plus ? upper : lower;
  const bool zero_plus = p == 0 && q == 1 && plus;

  int w = width > 0 ? width : heteroclinic_width(h, lower);
  for (;;) {
    const long bonds = static_cast<long>(w) * q;
    const auto n = static_cast<std::size_t>(bonds + 1);
    ChainProblem base = detail::make_chain(h, std::vector<double>(n));
    base.lower.resize(n);
    base.upper.resize(n);
    base.monotone = zero_plus;
    std::vector<double> lv(n);
    std::vector<double> rv(n);
    for (std::size_t i = 0; i < n; ++i) {
      const long gi = static_cast<long>(i);
      base.lower[i] = lower.at(gi);
      base.upper[i] = upper.at(gi);
      lv[i] = left.at(gi);
      rv[i] = right.at(gi);
    }
    base.pinned.front() = 1;
    base.pinned.back() = 1;

    // Starts: a logistic blend centred in the window, and sharp steps at the
    // transition sites of lowest step action within one period of the centre.
    // The transition phase modulo q is not fixed by symmetry, so a single
    // start can settle on a non-minimal heteroclinic.
    std::vector<std::vector<double>> starts;
    {
      std::vector<double> x(n);
      const double scale = std::max(1.0, static_cast<double>(bonds) / 12.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double theta =
            1.0 / (1.0 + std::exp(-(static_cast<double>(i) - 0.5 * static_cast<double>(bonds)) / scale));
        x[i] = lv[i] + theta * (rv[i] - lv[i]);
      }
      x.front() = lv.front();
      x.back() = rv.back();
      starts.push_back(std::move(x));
    }
    if (q > 1) {
      std::vector<double> left_prefix(n, 0.0);
      std::vector<double> right_suffix(n + 1, 0.0);
      for (std::size_t j = 0; j + 1 < n; ++j) left_prefix[j + 1] = left_prefix[j] + h(lv[j], lv[j + 1]);
      for (std::size_t j = n - 1; j-- > 0;) right_suffix[j] = right_suffix[j + 1] + h(rv[j], rv[j + 1]);
      std::vector<std::pair<double, long>> sites;
      const long lo_site = std::max<long>(0, bonds / 2 - q / 2);
      const long hi_site = std::min<long>(bonds - 1, lo_site + q - 1);
      for (long s = lo_site; s <= hi_site; ++s) {
        const auto u = static_cast<std::size_t>(s);
        sites.emplace_back(left_prefix[u] + h(lv[u], rv[u + 1]) + right_suffix[u + 1], s);
      }
      const std::size_t keep = std::min<std::size_t>(3, sites.size());
      std::partial_sort(sites.begin(), sites.begin() + static_cast<long>(keep), sites.end());
      for (std::size_t k = 0; k < keep; ++k) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<long>(i) <= sites[k].second ? lv[i] : rv[i];
        starts.push_back(std::move(x));
      }
    }

    AdvancingResult out;
    bool have = false;
    for (auto& x0 : starts) {
      ChainProblem chain = base;
      chain.x = std::move(x0);
      SolveReport report = detail::solve_chain(chain, chain_options(options));
      report.tail_distance =
          std::max(std::abs(chain.x[1] - lv[1]), std::abs(chain.x[n - 2] - rv[n - 2]));
      report.converged = report.converged && report.tail_distance <= options.tail_tolerance;
      const bool take = !have || (report.converged && !out.report.converged) ||
                        (report.converged == out.report.converged && report.action < out.report.action);
      if (take) {
        out.report = report;
        out.config.values = std::move(chain.x);
        have = true;
      }
    }
    out.config.index_offset = 0;
    if (zero_plus) {
      out.config.boundary = Heteroclinic01{};
    } else {
      out.config.boundary = PinnedEnds{out.config.values.front(), out.config.values.back()};
    }
    out.left_orbit = left;
    out.right_orbit = right;
    out.width = w;
    const bool tails_ok = out.report.tail_distance <= options.tail_tolerance;
    if (width > 0 || tails_ok || 2L * w * q > kMaxWindow) return out;
    w *= 2;
  }
}

double rotation_number(const Configuration& c) {
  if (const auto* per = std::get_if<Periodic>(&c.boundary)) {
    return static_cast<double>(per->p) / static_cast<double>(per->q);
  }
  if (c.size() < 10) throw Error(ErrorKind::InvalidArgument, "rotation number needs at least 10 values");
  return (c.values.back() - c.values.front()) / static_cast<double>(c.size() - 1);
}

int crossing_count(const Configuration& a, const Configuration& b) {
  long lo = 0;
  long hi = 0;
  if (a.is_periodic() && b.is_periodic()) {
    const long qa = std::get<Periodic>(a.boundary).q;
    const long qb = std::get<Periodic>(b.boundary).q;
    const long span = std::min<long>(2 * std::lcm(qa, qb), 100000);
    lo = -span;
    hi = span;
  } else if (a.is_periodic()) {
    lo = b.first_index();
    hi = b.last_index();
  } else if (b.is_periodic()) {
    lo = a.first_index();
    hi = a.last_index();
  } else {
    lo = std::max(a.first_index(), b.first_index());
    hi = std::min(a.last_index(), b.last_index());
  }
  if (lo > hi) throw Error(ErrorKind::InvalidArgument, "configurations have disjoint index ranges");
  int crossings = 0;
  int last_sign = 0;
  for (long i = lo; i <= hi; ++i) {
    const double d = a.at(i) - b.at(i);
    const double eps = 1e-12 * std::max(1.0, std::abs(a.at(i)));
    const int sign = d > eps ? 1 : (d < -eps ? -1 : 0);
    if (sign == 0) continue;
    if (last_sign != 0 && sign != last_sign) ++crossings;
    last_sign = sign;
  }
  return crossings;
}

std::vector<Gap> spacing_profile(const Configuration& c, const Interval& window) {
  std::vector<Gap> gaps;
  const long first = c.is_periodic() ? c.index_offset : c.first_index();
  const long last = c.is_periodic() ? c.index_offset + static_cast<long>(c.size()) - 1 : c.last_index() - 1;
  for (long i = first; i <= last; ++i) {
    const double x = c.at(i);
    if (window.contains(x)) gaps.push_back({x, c.at(i + 1) - x});
  }
  return gaps;
}

int count_in_interval(const std::vector<double>& points, const Interval& interval) {
  if (!(interval.hi >= interval.lo)) return 0;
  return static_cast<int>(std::count_if(points.begin(), points.end(),
                                        [&](double x) { return interval.contains(x); }));
}

int count_in_interval(const Configuration& c, const Interval& interval) {
  return count_in_interval(c.values, interval);
}

Configuration orbit_configuration(const std::vector<PhasePoint>& orbit) {
  Configuration c;
  c.values.reserve(orbit.size());
  for (const auto& pt : orbit) c.values.push_back(pt.x);
  if (!c.values.empty()) c.boundary = PinnedEnds{c.values.front(), c.values.back()};
  return c;
}

double second_variation_min_eigenvalue(const GeneratingFunction& h, const Configuration& c) {
  ChainProblem chain = detail::make_chain(h, c.values);
  if (c.is_periodic()) {
    chain.periodic = true;
    chain.p = std::get<Periodic>(c.boundary).p;
  } else {
    if (c.size() < 3) throw Error(ErrorKind::InvalidArgument, "second variation needs an interior point");
    chain.pinned.front() = 1;
    chain.pinned.back() = 1;
  }
  return detail::min_hessian_eigenvalue(chain);
}

}  // namespace peierls
