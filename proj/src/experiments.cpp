#include "peierls/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "parallel.hpp"
#include "peierls/error.hpp"
#include "peierls/minimizer.hpp"

namespace peierls {
namespace {

constexpr double kGolden = 0.6180339887498949;
constexpr double kBoundSlack = 1e-10;
constexpr double kMinResolvable = 1e-12;

Cell text(std::string s) { return Cell{std::move(s)}; }
Cell real(double v) { return Cell{v}; }
Cell integer(long long v) { return Cell{v}; }
Cell flag(bool v) { return Cell{v}; }

PerturbationParams at_n(const PerturbationParams& base, int n) {
  PerturbationParams p = base;
  p.n = n;
  p.validate();
  return p;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(m), v.end());
  const double hi = v[m];
  if (v.size() % 2) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<long>(m)));
}

std::vector<double> window_grid(const PerturbationParams& p, int points) {
  const double half = std::pow(static_cast<double>(p.n), -p.a);
  std::vector<double> xs(static_cast<std::size_t>(points));
  for (int j = 0; j < points; ++j) {
    xs[static_cast<std::size_t>(j)] = 0.5 - half + 2.0 * half * j / (points - 1);
  }
  return xs;
}

void add_fit(StudyResult& out, std::string name, const std::vector<double>& x, const std::vector<double>& y) {
  NamedFit f;
  f.name = std::move(name);
  f.fit = fit_loglog(x, y);
  f.low_confidence = f.fit.r2 < 0.95;
  out.fits.push_back(std::move(f));
}

std::vector<double> as_doubles(const std::vector<int>& v) { return {v.begin(), v.end()}; }

}  // namespace

double OmegaRule::operator()(const PerturbationParams& params) const {
  const double w = coefficient * std::pow(static_cast<double>(params.n), -params.a / 2.0 - params.delta);
  return negative ? -w : w;
}

void ExperimentSpec::validate() const {
  if (n_range.empty()) throw Error(ErrorKind::InvalidArgument, "n range is empty");
  for (std::size_t i = 1; i < n_range.size(); ++i) {
    if (n_range[i] <= n_range[i - 1]) throw Error(ErrorKind::InvalidArgument, "n range must be increasing");
  }
  params.validate();
  if (name == "mcor" && params.a > 2.0 - 2.0 * params.delta + 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "a must satisfy a ≤ 2 − 2·delta");
  }
  if (window_points < 3) throw Error(ErrorKind::InvalidArgument, "window needs at least 3 points");
  if (grid_size < 8) throw Error(ErrorKind::InvalidArgument, "profile grid needs at least 8 points");
}

FitResult fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorKind::InvalidArgument, "fit needs matching x and y");
  if (x.size() < 3) throw Error(ErrorKind::InvalidArgument, "fit needs at least 3 points");
  const auto m = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorKind::InvalidArgument, "log-log fit needs positive data");
    const double u = std::log(x[i]);
    const double v = std::log(y[i]);
    sx += u, sy += v, sxx += u * u, sxy += u * v, syy += v * v;
  }
  const double vx = sxx - sx * sx / m;
  const double vy = syy - sy * sy / m;
  const double cxy = sxy - sx * sy / m;
  if (vx <= 0.0) throw Error(ErrorKind::InvalidArgument, "fit needs distinct x values");
  FitResult f;
  f.slope = cxy / vx;
  f.intercept = (sy - f.slope * sx) / m;
  f.r2 = vy > 0.0 ? std::clamp(cxy * cxy / (vx * vy), 0.0, 1.0) : 1.0;
  f.point_count = static_cast<int>(x.size());
  return f;
}

bool StudyResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

// ------------------------------------------------------------------ spacing

StudyResult run_spacing_study(const ExperimentSpec& spec) {
  spec.validate();
  StudyResult out;
  out.name = "spacing";
  out.table.columns = {"function", "n",       "a",       "median_gap", "min_double_gap", "ls_bound",
                       "max_gap",  "upper_bound", "points", "ls_pass", "upper_pass", "status"};
  const std::size_t rows = spec.n_range.size();
  std::vector<std::vector<Cell>> table(rows);
  std::vector<double> medians(rows);
  std::vector<double> min_doubles(rows), max_gaps(rows), ls_bounds(rows), upper_bounds(rows);
  std::vector<char> ls_ok(rows, 1), upper_ok(rows, 1);
  detail::parallel_for(
      rows,
      [&](std::size_t r) {
        const PerturbationParams p = at_n(spec.params, spec.n_range[r]);
        const GeneratingFunction h = make_hn(p, false);
        const AdvancingResult het = minimize_advancing(h, 0, 1, SymbolVariant::Plus, spec.barrier.width,
                                                       spec.barrier.minimizer);
        if (!het.report.converged) {
          throw Error(ErrorKind::NonConvergence, "0+ minimizer did not converge at n = " + std::to_string(p.n));
        }
        const auto& x = het.config.values;
        const double scale = std::pow(static_cast<double>(p.n), -p.a / 2.0);
        const double ls = 2.0 * scale;
        const double upper = 2.0 * std::sqrt(2.0) * scale;
        std::vector<double> gaps;
        double min_double = std::numeric_limits<double>::infinity();
        double max_gap = 0.0;
        for (std::size_t i = 1; i + 1 < x.size(); ++i) {
          if (x[i] < 0.25 || x[i] > 0.75) continue;
          gaps.push_back(x[i + 1] - x[i]);
          max_gap = std::max(max_gap, x[i + 1] - x[i]);
          min_double = std::min(min_double, x[i + 1] - x[i - 1]);
        }
        medians[r] = median(gaps);
        const bool ls_pass = !gaps.empty() && min_double >= ls;
        const bool upper_pass = !gaps.empty() && max_gap <= upper;
        ls_ok[r] = ls_pass;
        upper_ok[r] = upper_pass;
        min_doubles[r] = min_double;
        max_gaps[r] = max_gap;
        ls_bounds[r] = ls;
        upper_bounds[r] = upper;
        table[r] = {text("hbar_n"),    integer(p.n),    real(p.a),   real(medians[r]),
                    real(min_double),  real(ls),        real(max_gap), real(upper),
                    integer(static_cast<long long>(gaps.size())), flag(ls_pass), flag(upper_pass),
                    text(gaps.empty() ? "empty-window" : "ok")};
      },
      spec.threads);

  std::string control = "integrable";
  try {
    minimize_advancing(make_h0(), 0, 1, SymbolVariant::Plus, 0, spec.barrier.minimizer);
    control = "not-degenerate";
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateSymbol) throw;
  }
  out.table.rows = std::move(table);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.table.rows.push_back({text("h0"), integer(0), real(0.0), real(nan), real(nan), real(nan), real(nan),
                            real(nan), integer(0), flag(false), flag(false), text(control)});
  out.checks.push_back({"control integrable", control == "integrable", 0.0, 0.0});

  for (std::size_t r = 0; r < rows; ++r) {
    const std::string at = " at n=" + std::to_string(spec.n_range[r]);
    out.checks.push_back({"double gaps >= 2 n^-a/2" + at, ls_ok[r] != 0, min_doubles[r], ls_bounds[r]});
    out.checks.push_back({"gaps <= 2 sqrt2 n^-a/2" + at, upper_ok[r] != 0, max_gaps[r], upper_bounds[r]});
  }
  const double target = -spec.params.a / 2.0;
  const bool fittable = rows >= 3 && std::all_of(medians.begin(), medians.end(), [](double m) { return m > 0.0; });
  if (fittable) {
    add_fit(out, "median gap vs n", as_doubles(spec.n_range), medians);
    const FitResult& f = out.fits.back().fit;
    out.checks.push_back({"slope within 0.05 of -a/2", std::abs(f.slope - target) <= 0.05, f.slope, target});
    out.checks.push_back({"fit r2 >= 0.98", f.r2 >= 0.98, f.r2, 0.98});
  } else {
    // An empty window leaves no median to fit.
    out.checks.push_back({"slope within 0.05 of -a/2", false, std::numeric_limits<double>::quiet_NaN(), target});
  }
  return out;
}

// -------------------------------------------------------------- lower bound

StudyResult run_lower_bound_study(const ExperimentSpec& spec) {
  spec.validate();
  StudyResult out;
  out.name = "lowerbound";
  out.table.columns = {"function", "n", "s", "barrier", "bound", "margin", "pass", "status"};
  const std::size_t rows = spec.n_range.size();
  std::vector<std::vector<Cell>> table(rows);
  std::vector<Check> checks(rows);
  detail::parallel_for(
      rows,
      [&](std::size_t r) {
        const PerturbationParams p = at_n(spec.params, spec.n_range[r]);
        const double s = p.resolved_s();
        const double bound = std::pow(static_cast<double>(p.n), -s);
        if (bound < kMinResolvable) {
          throw Error(ErrorKind::InvalidArgument,
                      "n^-s below 1e-12 is not resolvable at n = " + std::to_string(p.n));
        }
        const double value = peierls_zero_plus(make_hn(p), 0.5, spec.barrier);
        const bool pass = value >= bound - kBoundSlack;
        table[r] = {text("hn"), integer(p.n), real(s), real(value), real(bound), real(value - bound),
                    flag(pass), text("ok")};
        checks[r] = {"P(1/2) >= n^-s at n=" + std::to_string(p.n), pass, value, bound};
      },
      spec.threads);
  out.table.rows = std::move(table);
  std::string control = "integrable";
  try {
    peierls_zero_plus(make_h0(), 0.5, spec.barrier);
    control = "not-degenerate";
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateSymbol) throw;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.table.rows.push_back(
      {text("h0"), integer(0), real(nan), real(0.0), real(nan), real(nan), flag(false), text(control)});
  out.checks = std::move(checks);
  out.checks.push_back({"control integrable", control == "integrable", 0.0, 0.0});
  return out;
}

// ------------------------------------------------------------ approximation

StudyResult run_approximation_study(const ExperimentSpec& spec) {
  spec.validate();
  StudyResult out;
  out.name = "approx";
  out.table.columns = {"function", "n", "omega", "sup_discrepancy", "argmax_xi", "bound",
                       "unstable_points", "status"};
  const std::size_t rows = spec.n_range.size();
  std::vector<double> disc(rows, 0.0);
  std::vector<double> arg(rows, 0.0);
  std::vector<double> omegas(rows, 0.0);
  std::vector<long long> unstable(rows, 0);
  detail::parallel_for(
      rows,
      [&](std::size_t r) {
        const PerturbationParams p = at_n(spec.params, spec.n_range[r]);
        const GeneratingFunction h = make_hn(p);
        omegas[r] = spec.omega_rule(p);
        BarrierOptions opts = spec.barrier;
        opts.threads = 1;
        const ZeroPlusBarrier zero(h, opts);
        const IrrationalBarrier irr(h, omegas[r], spec.convergents, opts);
        for (double xi : window_grid(p, spec.window_points)) {
          const IrrationalValue v = irr.evaluate(xi);
          if (!v.stable) ++unstable[r];
          const double d = std::abs(v.value - zero(xi));
          if (d > disc[r]) disc[r] = d, arg[r] = xi;
        }
      },
      spec.threads);

  const double n0 = spec.n_range.front();
  const double c = disc.front() * std::exp(std::pow(n0, spec.params.delta));
  bool decreasing = true;
  bool bounded = true;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto n = static_cast<double>(spec.n_range[r]);
    const double bound = c * std::exp(-std::pow(n, spec.params.delta));
    if (r > 0 && !(disc[r] < disc[r - 1])) decreasing = false;
    if (disc[r] > bound * (1.0 + 1e-12)) bounded = false;
    out.table.rows.push_back({text("hn"), integer(spec.n_range[r]), real(omegas[r]), real(disc[r]), real(arg[r]),
                              real(bound), integer(unstable[r]), text(unstable[r] ? "unstable" : "ok")});
  }

  // Integrable control: every symbol has barrier 0.
  double control = 0.0;
  {
    const PerturbationParams p = at_n(spec.params, spec.n_range.front());
    const IrrationalBarrier irr(make_h0(), spec.omega_rule(p), spec.convergents, spec.barrier);
    for (double xi : window_grid(p, spec.window_points)) control = std::max(control, std::abs(irr.evaluate(xi).value));
  }
  out.table.rows.push_back({text("h0"), integer(spec.n_range.front()), real(spec.omega_rule(at_n(spec.params, spec.n_range.front()))),
                            real(control), real(0.5), real(0.0), integer(0), text("integrable")});

  long long total_unstable = 0;
  for (auto u : unstable) total_unstable += u;
  out.checks.push_back({"discrepancy strictly decreasing in n", decreasing, disc.back(), disc.front()});
  out.checks.push_back({"discrepancy <= C exp(-n^delta), C fit at smallest n", bounded, c, 0.0});
  out.checks.push_back({"all irrational evaluations stable", total_unstable == 0,
                        static_cast<double>(total_unstable), 0.0});
  out.checks.push_back({"control discrepancy zero", control <= 1e-10, control, 1e-10});
  return out;
}

// ----------------------------------------------------------------- counting

StudyResult run_counting_study(const ExperimentSpec& spec) {
  spec.validate();
  StudyResult out;
  out.name = "counting";
  out.table.columns = {"kind", "n_or_k", "interval_lo", "interval_hi", "count", "bound_lo", "bound_hi",
                       "pass", "status"};
  const std::size_t rows = spec.n_range.size();
  std::vector<double> counts(rows, 0.0);
  std::vector<double> eps(rows, 0.0);
  detail::parallel_for(
      rows,
      [&](std::size_t r) {
        const PerturbationParams p = at_n(spec.params, spec.n_range[r]);
        const AdvancingResult het = minimize_advancing(make_hn(p, false), 0, 1, SymbolVariant::Plus,
                                                       spec.barrier.width, spec.barrier.minimizer);
        if (!het.report.converged) {
          throw Error(ErrorKind::NonConvergence, "0+ minimizer did not converge at n = " + std::to_string(p.n));
        }
        eps[r] = std::exp(-std::pow(static_cast<double>(p.n), p.delta / 2.0));
        counts[r] = count_in_interval(het.config, Interval{eps[r], 0.5});
      },
      spec.threads);

  const double exponent = spec.params.a / 2.0 + spec.params.delta / 2.0;
  const double n0 = spec.n_range.front();
  const double c = counts.front() / std::pow(n0, exponent);
  for (std::size_t r = 0; r < rows; ++r) {
    const double bound = c * std::pow(static_cast<double>(spec.n_range[r]), exponent);
    out.table.rows.push_back({text("hbar_n"), integer(spec.n_range[r]), real(eps[r]), real(0.5),
                              integer(static_cast<long long>(counts[r])), real(0.0), real(bound),
                              flag(counts[r] > 0), text(counts[r] > 0 ? "ok" : "empty")});
  }
  if (rows >= 3) {
    const bool positive = std::all_of(counts.begin(), counts.end(), [](double v) { return v > 0; });
    if (positive) {
      add_fit(out, "count on J_n vs n", as_doubles(spec.n_range), counts);
      const double slope = out.fits.back().fit.slope;
      out.checks.push_back({"growth exponent <= a/2 + delta/2 + 0.05", slope <= exponent + 0.05, slope,
                            exponent + 0.05});
    } else {
      out.checks.push_back({"growth exponent <= a/2 + delta/2 + 0.05", false, 0.0, exponent + 0.05});
    }
  }

  // Shear orbits of h0: every closed interval of length k holds between
  // k/omega - 1 and k/omega + 1 orbit points.
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const GeneratingFunction h0 = make_h0();
  const double omega = kGolden;
  for (int k = 1; k <= 3; ++k) {
    const double lo = k / omega - 1.0;
    const double hi = k / omega + 1.0;
    int worst_lo = std::numeric_limits<int>::max();
    int worst_hi = 0;
    bool pass = true;
    for (int trial = 0; trial < 100; ++trial) {
      const double x0 = unit(rng);
      const double start = x0 + 2.0 * unit(rng);
      const int steps = static_cast<int>(std::ceil((start + k + 1.0 - x0) / omega)) + 2;
      const auto orbit = twist_orbit(h0, PhasePoint{x0, omega}, steps);
      std::vector<double> xs(orbit.size());
      for (std::size_t i = 0; i < orbit.size(); ++i) xs[i] = orbit[i].x;
      const int count = count_in_interval(xs, Interval{start, start + k});
      worst_lo = std::min(worst_lo, count);
      worst_hi = std::max(worst_hi, count);
      pass = pass && count >= lo && count <= hi;
    }
    out.table.rows.push_back({text("h0 shear"), integer(k), real(static_cast<double>(worst_lo)),
                              real(static_cast<double>(worst_hi)), integer(worst_hi), real(lo), real(hi), flag(pass),
                              text("ok")});
    out.checks.push_back({"shear sandwich k=" + std::to_string(k), pass, static_cast<double>(worst_hi), hi});
  }

  std::string control = "integrable";
  try {
    minimize_advancing(h0, 0, 1, SymbolVariant::Plus, 0, spec.barrier.minimizer);
    control = "not-degenerate";
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateSymbol) throw;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.table.rows.push_back(
      {text("h0"), integer(0), real(nan), real(nan), integer(0), real(nan), real(nan), flag(false), text(control)});
  out.checks.push_back({"control integrable", control == "integrable", 0.0, 0.0});
  return out;
}

// ------------------------------------------------------ circle destruction

StudyResult run_theorem_mr(const ExperimentSpec& spec) {
  spec.validate();
  StudyResult out;
  out.name = "theorem-mr";
  out.table.columns = {"function", "n", "omega", "sup_barrier", "argmax_xi", "threshold", "profile_sup",
                       "circle_destroyed", "status"};
  struct Row {
    std::string function;
    int n;
    double omega;
    double sup = 0.0;
    double arg = 0.5;
    double threshold;
    double profile_sup = 0.0;
    bool destroyed = false;
    std::string status = "ok";
  };
  std::vector<Row> rows;
  for (int n : spec.n_range) {
    const PerturbationParams p = at_n(spec.params, n);
    const double w = std::abs(spec.omega_rule(p));
    const double threshold = std::pow(static_cast<double>(n), -p.resolved_s()) / 2.0;
    for (double sign : {1.0, -1.0}) {
      rows.push_back({"hn", n, sign * w, 0.0, 0.5, threshold});
      rows.push_back({"h0", n, sign * w, 0.0, 0.5, threshold});
    }
  }
  // Each row builds its own barriers; rows run in parallel, points inside a
  // row do not.
  const double band = 2.0 * spec.barrier.minimizer.tolerance;
  detail::parallel_for(
      rows.size(),
      [&](std::size_t r) {
        Row& row = rows[r];
        const PerturbationParams p = at_n(spec.params, row.n);
        const GeneratingFunction h = row.function == "h0" ? make_h0() : make_hn(p);
        BarrierOptions opts = spec.barrier;
        opts.threads = 1;
        const IrrationalBarrier irr(h, row.omega, spec.convergents, opts);
        bool stable = true;
        for (double xi : window_grid(p, spec.window_points)) {
          const IrrationalValue v = irr.evaluate(xi);
          stable = stable && v.stable;
          if (v.value > row.sup) row.sup = v.value, row.arg = xi;
        }
        const BarrierProfile profile =
            barrier_profile(h, RotationSymbol::irrational(row.omega), spec.grid_size, opts, spec.convergents);
        row.profile_sup = profile.sup_value;
        try {
          row.destroyed = !invariant_circle_exists(profile, row.threshold);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::IncompleteProfile) throw;
          row.status = "incomplete-profile";
        }
        if (!stable) row.status = "unstable";
        const double top = std::max(row.sup, row.profile_sup);
        if (row.function == "hn" && std::abs(top - row.threshold) <= band) row.status = "inconclusive";
      },
      spec.threads);

  for (const Row& row : rows) {
    out.table.rows.push_back({text(row.function), integer(row.n), real(row.omega), real(row.sup), real(row.arg),
                              real(row.threshold), real(row.profile_sup), flag(row.destroyed), text(row.status)});
    const std::string tag = row.function + " n=" + std::to_string(row.n) + (row.omega < 0 ? " omega<0" : " omega>0");
    if (row.function == "hn") {
      out.checks.push_back({"sup barrier exceeds n^-s/2, " + tag, row.status == "ok" && row.sup > row.threshold,
                            row.sup, row.threshold});
      out.checks.push_back({"circle destroyed, " + tag, row.status == "ok" && row.destroyed, row.profile_sup,
                            row.threshold});
    } else {
      out.checks.push_back({"control keeps circle, " + tag, row.status == "ok" && !row.destroyed,
                            row.profile_sup, row.threshold});
    }
  }
  return out;
}

// --------------------------------------------------------------------- mcor

StudyResult run_mcor_study(const ExperimentSpec& spec) {
  spec.validate();
  const double a = spec.params.a;
  if (spec.r >= a + 2.0) throw Error(ErrorKind::InvalidArgument, "r must be below a + 2");
  if (spec.q_range.size() < 3) throw Error(ErrorKind::InvalidArgument, "mcor needs at least 3 denominators");
  StudyResult out;
  out.name = "mcor";
  out.table.columns = {"function", "q", "r", "norm_estimate", "bound", "status"};
  const std::size_t rows = spec.q_range.size();
  std::vector<double> norms(rows);
  detail::parallel_for(
      rows,
      [&](std::size_t i) {
        const PerturbationParams p = at_n(spec.params, spec.q_range[i]);
        norms[i] = cr_norm_estimate(make_htilde(p, spec.q_range[i]).potential(), spec.r);
      },
      spec.threads);

  const double exponent = spec.r - a - 2.0;
  const double q0 = spec.q_range.front();
  const double c = norms.front() / std::pow(q0, exponent);
  bool decreasing = true;
  for (std::size_t i = 0; i < rows; ++i) {
    if (i > 0 && !(norms[i] < norms[i - 1])) decreasing = false;
    out.table.rows.push_back({text("htilde_n - h0"), integer(spec.q_range[i]), real(spec.r), real(norms[i]),
                              real(c * std::pow(static_cast<double>(spec.q_range[i]), exponent)), text("ok")});
  }
  const double control = cr_norm_estimate(make_h0().potential(), spec.r);
  out.table.rows.push_back({text("zero"), integer(0), real(spec.r), real(control), real(0.0), text("integrable")});

  add_fit(out, "norm vs q", as_doubles(spec.q_range), norms);
  const double slope = out.fits.back().fit.slope;
  out.checks.push_back({"slope within 15% of r - a - 2", std::abs(slope - exponent) <= 0.15 * std::abs(exponent),
                        slope, exponent});
  out.checks.push_back({"norm strictly decreasing", decreasing, norms.back(), norms.front()});
  out.checks.push_back({"control norm zero", control == 0.0, control, 0.0});
  return out;
}

// --------------------------------------------------------------------- herm

StudyResult run_lemma_herm_check(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.q_range.empty()) throw Error(ErrorKind::InvalidArgument, "herm needs rescaling factors");
  StudyResult out;
  out.name = "herm";
  out.table.columns = {"function", "q", "omega_q", "barrier_q", "omega_p", "barrier_p", "identity_error",
                       "stationarity_residual", "pass", "status"};
  const PerturbationParams p = at_n(spec.params, spec.n_range.front());
  const GeneratingFunction hp = make_hn(p);
  const double omega_p = std::abs(spec.omega_rule(p));
  const double tol = std::pow(static_cast<double>(p.n), -p.resolved_s()) / 2.0;

  BarrierOptions opts = spec.barrier;
  const BarrierProfile base = barrier_profile(hp, RotationSymbol::irrational(omega_p), spec.grid_size, opts,
                                              spec.convergents);
  const bool destroyed_p = !invariant_circle_exists(base, tol);

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int q : spec.q_range) {
    if (q < 1) throw Error(ErrorKind::InvalidArgument, "rescaling factor must be positive");
    const GeneratingFunction hq("h_Q", rescale(hp.potential(), q));
    const double omega_q = omega_p / q;
    const double q2 = static_cast<double>(q) * q;
    const BarrierProfile prof =
        barrier_profile(hq, RotationSymbol::irrational(omega_q), spec.grid_size, opts, spec.convergents);
    const bool destroyed_q = !invariant_circle_exists(prof, tol / q2);

    // P^Q(xi) = q^-2 P^P(q xi) on matched grids.
    double identity = 0.0;
    for (std::size_t j = 0; j < prof.grid.size(); ++j) {
      const std::size_t k = (j * static_cast<std::size_t>(q)) % base.grid.size();
      identity = std::max(identity, std::abs(q2 * prof.values[j] - base.values[k]));
    }

    // x -> q x carries h_Q orbits to h_P stationary configurations.
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const PhasePoint start{unit(rng), 0.5 * unit(rng)};
      const auto orbit = twist_orbit(hq, start, 20);
      Configuration c;
      c.values.resize(orbit.size());
      for (std::size_t i = 0; i < orbit.size(); ++i) c.values[i] = q * orbit[i].x;
      worst = std::max(worst, residual_inf(hp, c));
    }
    const bool pass = destroyed_q == destroyed_p && worst <= 1e-9;
    out.table.rows.push_back({text("hn"), integer(q), real(omega_q), real(prof.sup_value), real(omega_p),
                              real(base.sup_value), real(identity), real(worst), flag(pass),
                              text(destroyed_q ? "destroyed" : "circle")});
    out.checks.push_back({"verdicts agree q=" + std::to_string(q), destroyed_q == destroyed_p,
                          prof.sup_value * q2, base.sup_value});
    out.checks.push_back({"stationarity maps q=" + std::to_string(q), worst <= 1e-9, worst, 1e-9});
    out.checks.push_back({"barrier identity q=" + std::to_string(q), identity <= 1e-9, identity, 1e-9});
  }
  out.checks.push_back({"h_P verdict destroyed", destroyed_p, base.sup_value, tol});

  const BarrierProfile control =
      barrier_profile(make_h0(), RotationSymbol::irrational(omega_p), spec.grid_size, opts, spec.convergents);
  const bool control_circle = invariant_circle_exists(control, tol);
  out.table.rows.push_back({text("h0"), integer(1), real(omega_p), real(control.sup_value), real(omega_p),
                            real(control.sup_value), real(0.0), real(0.0), flag(control_circle), text("integrable")});
  out.checks.push_back({"control keeps circle", control_circle, control.sup_value, tol});
  return out;
}

// ----------------------------------------------------------------- dispatch

StudyResult run_study(const ExperimentSpec& spec) {
  if (spec.name == "spacing") return run_spacing_study(spec);
  if (spec.name == "lowerbound") return run_lower_bound_study(spec);
  if (spec.name == "approx") return run_approximation_study(spec);
  if (spec.name == "counting") return run_counting_study(spec);
  if (spec.name == "theorem-mr") return run_theorem_mr(spec);
  if (spec.name == "mcor") return run_mcor_study(spec);
  if (spec.name == "herm") return run_lemma_herm_check(spec);
  throw Error(ErrorKind::InvalidArgument, "unknown study '" + spec.name + "'");
}

ExperimentSpec default_spec(const std::string& name) {
  ExperimentSpec s;
  s.name = name;
  s.params.a = 1.0;
  s.params.k = 2;
  s.params.s = 3.0;
  s.params.delta = 0.05;
  if (name == "spacing") {
    s.params.a = 1.9;
    s.params.s.reset();
    s.n_range = {16, 32, 64, 128};
  } else if (name == "lowerbound" || name == "approx") {
    s.n_range = {8, 16, 32};
  } else if (name == "counting") {
    s.params.a = 1.9;
    s.params.s.reset();
    s.n_range = {16, 32, 64};
  } else if (name == "theorem-mr") {
    s.n_range = {16};
  } else if (name == "mcor") {
    s.params.a = 1.9;
    s.params.s.reset();
    s.n_range = {8};
    s.q_range = {8, 16, 32, 64};
  } else if (name == "herm") {
    s.n_range = {8};
    s.q_range = {1, 2, 4};
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown study '" + name + "'");
  }
  s.params.n = s.n_range.front();
  return s;
}

}  // namespace peierls
