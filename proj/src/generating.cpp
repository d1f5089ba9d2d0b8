#include "peierls/generating.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "peierls/error.hpp"

namespace peierls {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorKind::InvalidArgument, message);
}

}  // namespace

void PerturbationParams::validate() const {
  require(n >= 1, "n must be a positive integer");
  require(a > 0.0, "a must be positive");
  require(k >= 0, "k must be nonnegative");
  require(k <= kMaxDerivative, "k exceeds the supported derivative order");
  require(resolved_s() > 0.0, "s must be positive");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
}

BumpSpec bump_spec(const PerturbationParams& params) {
  return {0.5, std::pow(static_cast<double>(params.n), -params.a),
          std::pow(static_cast<double>(params.n), -params.resolved_s())};
}

GeneratingFunction::GeneratingFunction(std::string name, PeriodicFunction potential)
    : name_(std::move(name)), potential_(std::move(potential)) {}

double GeneratingFunction::operator()(double x, double xp) const {
  const double dx = x - xp;
  return 0.5 * dx * dx + potential_(xp);
}

GeneratingFunction GeneratingFunction::reflected() const {
  return GeneratingFunction(name_ + "_reflected", potential_.reflected());
}

double GeneratingFunction::translation_symmetry() const {
  if (potential_.is_zero()) return 1.0;
  const double m = std::round(1.0 / potential_.period());
  if (m < 1.0 || std::abs(m * potential_.period() - 1.0) > 1e-12) return 1.0;
  return 1.0 / m;
}

GeneratingFunction make_h0() { return GeneratingFunction("h0", PeriodicFunction()); }

PeriodicFunction make_un(const PerturbationParams& params) {
  params.validate();
  const double amplitude = std::pow(static_cast<double>(params.n), -params.a);
  return PeriodicFunction(
      [amplitude](double x) {
        const double phase = kTwoPi * reduce_mod(x, 1.0);
        const double c = std::cos(phase);
        const double s = std::sin(phase);
        Derivatives d{};
        d[0] = amplitude * (1.0 - c);
        double scale = amplitude;
        // Derivative j of -cos is -cos(phase + j pi/2) times (2 pi)^j.
        const double cycle[4] = {-c, s, c, -s};
        for (int j = 1; j <= kMaxDerivative; ++j) {
          scale *= kTwoPi;
          d[j] = scale * cycle[j % 4];
        }
        return d;
      },
      kMaxDerivative, 1.0);
}

PeriodicFunction make_vn(const PerturbationParams& params) {
  params.validate();
  const BumpSpec bump = bump_spec(params);
  require(bump.half_width < 0.5, "bump support n^-a must be below 1/2");
  const double inv_width = 1.0 / bump.half_width;
  const double height = bump.height;
  return PeriodicFunction(
      [inv_width, height](double x) {
        const double d = reduce_mod(x, 1.0) - 0.5;
        Derivatives phi = mollifier(d * inv_width);
        double scale = height;
        for (int j = 0; j <= kMaxDerivative; ++j) {
          phi[j] *= scale;
          scale *= inv_width;
        }
        return phi;
      },
      kMaxDerivative, 1.0, {{0.5 - bump.half_width, 0.5 + bump.half_width}});
}

GeneratingFunction make_hn(const PerturbationParams& params, bool include_bump) {
  PeriodicFunction potential = make_un(params);
  if (include_bump) potential = potential + make_vn(params);
  return GeneratingFunction(include_bump ? "hn" : "hbar_n", std::move(potential));
}

PeriodicFunction rescale(const PeriodicFunction& potential, int q) {
  require(q > 0, "rescale factor q must be a positive integer");
  if (q == 1 || potential.is_zero()) return potential;
  const double qd = static_cast<double>(q);
  std::vector<Interval> regions;
  for (const auto& r : potential.fine_regions()) regions.push_back({r.lo / qd, r.hi / qd});
  PeriodicFunction inner = potential;
  return PeriodicFunction(
      [inner, qd](double x) {
        Derivatives d = inner.derivatives(qd * x);
        double scale = 1.0 / (qd * qd);
        for (auto& v : d) {
          v *= scale;
          scale *= qd;
        }
        return d;
      },
      potential.smoothness(), potential.period() / qd, std::move(regions));
}

GeneratingFunction make_htilde(const PerturbationParams& params, int q) {
  PerturbationParams at_q = params;
  at_q.n = q;
  return GeneratingFunction("htilde_n", rescale(make_un(at_q) + make_vn(at_q), q));
}

GeneratingFunction make_named(const std::string& name, const PerturbationParams& params, int q) {
  if (name == "h0") return make_h0();
  if (name == "hn") return make_hn(params, true);
  if (name == "hbar_n") return make_hn(params, false);
  if (name == "htilde_n") return make_htilde(params, q);
  throw Error(ErrorKind::InvalidArgument, "unknown generating function '" + name + "'");
}

bool looks_rational(double omega) {
  long double x = omega;
  long double a0 = std::floor(x);
  long double p_prev = 1, q_prev = 0, p = a0, q = 1;
  long double frac = x - a0;
  while (q <= 1e6L) {
    if (std::abs(static_cast<double>(q * omega - p)) < 1e-9) return true;
    if (frac <= 0) return true;
    x = 1.0L / frac;
    const long double ai = std::floor(x);
    frac = x - ai;
    const long double p_next = ai * p + p_prev;
    const long double q_next = ai * q + q_prev;
    p_prev = p;
    q_prev = q;
    p = p_next;
    q = q_next;
  }
  return false;
}

std::vector<DirichletApproximant> dirichlet_approximants(double omega, int count) {
  require(count >= 0, "count must be nonnegative");
  if (!std::isfinite(omega) || looks_rational(omega)) {
    std::ostringstream os;
    os.precision(17);
    os << "rational input: omega = " << omega;
    throw Error(ErrorKind::RationalInput, os.str());
  }
  std::vector<DirichletApproximant> out;
  long double x = omega;
  long double a0 = std::floor(x);
  long double p_prev = 1, q_prev = 0, p = a0, q = 1;
  long double frac = x - a0;
  while (static_cast<int>(out.size()) < count) {
    require(frac > 0 && q < 1e12L, "continued fraction exhausted double precision");
    x = 1.0L / frac;
    const long double ai = std::floor(x);
    frac = x - ai;
    const long double p_next = ai * p + p_prev;
    const long double q_next = ai * q + q_prev;
    p_prev = p;
    q_prev = q;
    p = p_next;
    q = q_next;
    if (q > 1) {
      out.push_back({static_cast<long>(p), static_cast<long>(q), omega});
    }
  }
  return out;
}

double cr_norm_estimate(const PeriodicFunction& f, double r, const CrNormOptions& options) {
  require(r >= 0.0 && r <= 4.0, "C^r norm estimate supports 0 <= r <= 4");
  if (f.is_zero()) return 0.0;
  const int order = static_cast<int>(std::floor(r));
  const double alpha = r - order;
  require(order + (alpha > 0 ? 1 : 0) <= f.smoothness(), "function is not smooth enough for r");
  const double period = f.period();

  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(options.grid) + f.fine_regions().size() * options.fine_grid);
  for (int i = 0; i < options.grid; ++i) samples.push_back(period * i / options.grid);
  double finest_feature = period;
  for (const auto& region : f.fine_regions()) {
    finest_feature = std::min(finest_feature, region.length());
    for (int i = 0; i <= options.fine_grid; ++i) {
      samples.push_back(region.lo + region.length() * i / options.fine_grid);
    }
  }

  double norm = 0.0;
  for (double x : samples) {
    const Derivatives d = f.derivatives(x);
    for (int j = 0; j <= order; ++j) norm = std::max(norm, std::abs(d[j]));
  }
  if (alpha > 0.0) {
    const double min_lag = std::min(period / options.grid, finest_feature / 64.0);
    double seminorm = 0.0;
    for (double lag = 0.5 * period; lag >= min_lag; lag *= 0.5) {
      const double denom = std::pow(lag, alpha);
      for (double x : samples) {
        const double diff = f.derivative(x + lag, order) - f.derivative(x, order);
        seminorm = std::max(seminorm, std::abs(diff) / denom);
      }
    }
    norm = std::max(norm, seminorm);
  }
  return norm;
}

PhasePoint twist_map_step(const GeneratingFunction& h, PhasePoint point, TwistSolve mode) {
  const double x = point.x;
  const double y = point.y;
  double xp = x + y;
  if (mode == TwistSolve::Implicit) {
    // g(x') = -d1 h(x, x') - y is strictly increasing because d12 < 0.
    auto g = [&](double t) { return -h.d1(x, t) - y; };
    double lo = x - 1.0;
    double hi = x + 1.0;
    int expansions = 0;
    while (g(lo) > 0 && expansions < 200) lo -= (hi - lo), ++expansions;
    while (g(hi) < 0 && expansions < 200) hi += (hi - lo), ++expansions;
    if (g(lo) > 0 || g(hi) < 0) {
      throw Error(ErrorKind::NonConvergence, "twist map step: no bracket for implicit solve");
    }
    for (int i = 0; i < 200 && hi - lo > 1e-3; ++i) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) < 0 ? lo : hi) = mid;
    }
    xp = 0.5 * (lo + hi);
    bool converged = false;
    for (int i = 0; i < 50; ++i) {
      const double step = g(xp) / -h.d12(x, xp);
      xp -= step;
      if (std::abs(step) <= 1e-12 * std::max(1.0, std::abs(xp))) {
        converged = true;
        break;
      }
    }
    if (!converged) throw Error(ErrorKind::NonConvergence, "twist map step: Newton did not converge");
  }
  return {xp, h.d2(x, xp)};
}

std::vector<PhasePoint> twist_orbit(const GeneratingFunction& h, PhasePoint start, int steps) {
  require(steps >= 0, "steps must be nonnegative");
  std::vector<PhasePoint> orbit;
  orbit.reserve(static_cast<std::size_t>(steps) + 1);
  orbit.push_back(start);
  for (int i = 0; i < steps; ++i) orbit.push_back(twist_map_step(h, orbit.back()));
  return orbit;
}

}  // namespace peierls
