#include "peierls/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "chain_solver.hpp"
#include "parallel.hpp"
#include "peierls/error.hpp"

namespace peierls {
namespace {

using detail::ChainProblem;

constexpr double kEndMismatch = 1e-8;
// Orbit points within this distance of the lower gap end seed translates.
constexpr double kClusterWidth = 1e-8;
constexpr double kRoundingFloor = -1e-12;

struct Compensated {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double t = sum + v;
    carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

detail::ChainOptions chain_options(const BarrierOptions& o) {
  detail::ChainOptions c;
  c.tolerance = o.minimizer.tolerance;
  c.max_sweeps = o.minimizer.max_sweeps;
  return c;
}

double clamp_rounding(double v) { return (v < 0.0 && v > kRoundingFloor) ? 0.0 : v; }

// Excess action of x over reference on matching bonds.
double excess(const GeneratingFunction& h, const ChainProblem& x, const std::vector<double>& reference) {
  Compensated s;
  const long bonds = static_cast<long>(x.bond_count());
  std::vector<double> r = reference;
  ChainProblem ref = x;
  ref.x = std::move(r);
  for (long b = 0; b < bonds; ++b) {
    s.add(h(x.extended(b), x.extended(b + 1)) - h(ref.extended(b), ref.extended(b + 1)));
  }
  return s.value();
}

BarrierPoint snapped(double xi) {
  BarrierPoint pt;
  pt.xi = xi;
  return pt;
}

// Minimizes the excess over the lower neighbour a inside the box [a, b]
// (either order) with x_pin = x. The box admits several local minima, one
// per choice of neighbour followed on each side of the pin, so a few starts
// are tried and the lowest is kept. Pinned coordinates of `chain` other than
// the pin keep the values of a.
BarrierPoint constrained_minimum(const GeneratingFunction& h, ChainProblem chain, const std::vector<double>& a,
                                 const std::vector<double>& b, std::size_t pin, double x, double theta,
                                 const detail::ChainOptions& options) {
  const std::size_t n = a.size();
  chain.lower.resize(n);
  chain.upper.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    chain.lower[t] = std::min(a[t], b[t]);
    chain.upper[t] = std::max(a[t], b[t]);
  }
  const std::size_t split = chain.periodic ? n / 2 : pin;
  std::vector<std::vector<double>> starts(5, std::vector<double>(n));
  for (std::size_t t = 0; t < n; ++t) {
    starts[0][t] = a[t] + theta * (b[t] - a[t]);
    starts[1][t] = t < split ? a[t] : b[t];
    starts[2][t] = t < split ? b[t] : a[t];
    starts[3][t] = a[t];
    starts[4][t] = b[t];
  }
  BarrierPoint best;
  bool have = false;
  for (auto& start : starts) {
    for (std::size_t t = 0; t < n; ++t) {
      if (chain.pinned[t]) start[t] = a[t];
    }
    start[pin] = x;
    chain.x = std::move(start);
    const SolveReport report = detail::solve_chain(chain, options);
    BarrierPoint pt;
    pt.value = clamp_rounding(excess(h, chain, a));
    pt.converged = report.converged;
    pt.residual = report.residual_inf;
    pt.iterations = report.iterations;
    const bool better = !have || (pt.converged && !best.converged) ||
                        (pt.converged == best.converged && pt.value < best.value);
    if (better) {
      const int total = best.iterations + pt.iterations;
      best = pt;
      best.iterations = total;
      have = true;
    } else {
      best.iterations += pt.iterations;
    }
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------- 0+ via K

ZeroPlusBarrier::ZeroPlusBarrier(const GeneratingFunction& h, const BarrierOptions& options)
    : h_(h), options_(options) {
  heteroclinic_ = minimize_advancing(h_, 0, 1, SymbolVariant::Plus, options_.width, options_.minimizer);
  if (!heteroclinic_.report.converged) {
    throw Error(ErrorKind::NonConvergence, "0+ heteroclinic did not converge");
  }
}

HeteroclinicActions ZeroPlusBarrier::actions(double xi) const {
  HeteroclinicActions out;
  out.K = heteroclinic_.report.action;
  out.Kxi = out.K + evaluate(xi).value;
  out.truncation_width = heteroclinic_.width;
  return out;
}

BarrierPoint ZeroPlusBarrier::evaluate(double xi) const {
  const double x = reduce_mod(xi, 1.0);
  if (x <= options_.snap_tolerance || 1.0 - x <= options_.snap_tolerance) return snapped(xi);
  const std::vector<double>& H = heteroclinic_.config.values;
  const long last = static_cast<long>(H.size()) - 1;
  long j = static_cast<long>(std::upper_bound(H.begin(), H.end(), x) - H.begin()) - 1;
  j = std::clamp<long>(j, 0, last - 1);
  long pin = (x - H[static_cast<std::size_t>(j)] <= H[static_cast<std::size_t>(j + 1)] - x) ? j : j + 1;
  pin = std::clamp<long>(pin, 1, last - 1);

  ChainProblem chain = detail::make_chain(h_, H);
  chain.lower.assign(H.size(), 0.0);
  chain.upper.assign(H.size(), 1.0);
  chain.monotone = true;
  for (long i = 0; i <= last; ++i) {
    auto& v = chain.x[static_cast<std::size_t>(i)];
    if (i < pin) v = std::min(v, x);
    if (i > pin) v = std::max(v, x);
  }
  chain.x[static_cast<std::size_t>(pin)] = x;
  chain.pinned.front() = 1;
  chain.pinned.back() = 1;
  chain.pinned[static_cast<std::size_t>(pin)] = 1;

  const SolveReport report = detail::solve_chain(chain, chain_options(options_));
  BarrierPoint pt;
  pt.xi = xi;
  pt.value = clamp_rounding(excess(h_, chain, H));
  pt.converged = report.converged;
  pt.residual = report.residual_inf;
  pt.iterations = report.iterations;
  return pt;
}

// ------------------------------------------------------------- rational

RationalBarrier::RationalBarrier(const GeneratingFunction& h, long p, long q, SymbolVariant variant,
                                 const BarrierOptions& options)
    : h_(h), p_(p), q_(q), variant_(variant), options_(options) {
  if (variant_ == SymbolVariant::Exact) {
    MinimizeResult periodic = minimize_periodic(h_, p_, q_, std::nullopt, options_.minimizer);
    if (!periodic.report.converged) {
      throw Error(ErrorKind::NonConvergence, "periodic minimizer did not converge");
    }
    orbit_ = periodic.config;
  } else {
    heteroclinic_ = minimize_advancing(h_, p_, q_, variant_, options_.width, options_.minimizer);
    if (!heteroclinic_.report.converged) {
      throw Error(ErrorKind::NonConvergence, "heteroclinic for " + RotationSymbol::rational(p, q, variant).to_string() +
                                                 " did not converge");
    }
    orbit_ = variant_ == SymbolVariant::Plus ? heteroclinic_.left_orbit : heteroclinic_.right_orbit;
  }
  // With a potential of period tau = 1/m the Mather set also holds the
  // tau shifts of every minimizer; shifts that land on the same orbit
  // produce duplicate points, which are dropped. Within a cluster the top
  // point is kept: its successor lies across the gap above the cluster.
  const double tau = h_.translation_symmetry();
  const long m = std::lround(1.0 / tau);
  auto by_value = [](const MatherPoint& a, const MatherPoint& b) { return a.value < b.value; };
  auto dedupe = [](std::vector<MatherPoint>& v) {
    std::vector<MatherPoint> kept;
    for (const auto& pt : v) {
      if (kept.empty() || pt.value - kept.back().value > 1e-10) {
        kept.push_back(pt);
      } else {
        kept.back() = pt;
      }
    }
    v = std::move(kept);
  };
  for (long l = 0; l < m; ++l) {
    for (long j = 0; j < q_; ++j) {
      const double v = orbit_.at(j) + static_cast<double>(l) * tau;
      const double k = -std::floor(v);
      points_.push_back({v + k, true, j, k + static_cast<double>(l) * tau});
    }
  }
  std::sort(points_.begin(), points_.end(), by_value);
  orbit_all_ = points_;
  dedupe(points_);
  orbit_points_ = points_;
  if (variant_ != SymbolVariant::Exact) {
    const auto& H = heteroclinic_.config.values;
    for (long l = 0; l < m; ++l) {
      for (std::size_t i = 1; i + 1 < H.size(); ++i) {
        const double v = H[i] + static_cast<double>(l) * tau;
        const double k = -std::floor(v);
        points_.push_back({v + k, false, static_cast<long>(i), k + static_cast<double>(l) * tau});
      }
    }
    std::sort(points_.begin(), points_.end(), by_value);
  }
}

std::vector<double> RationalBarrier::mather_points() const {
  std::vector<double> out;
  out.reserve(points_.size());
  for (const auto& m : points_) out.push_back(m.value);
  return out;
}

double RationalBarrier::neighbour(const MatherPoint& m, long j) const {
  if (m.on_orbit) return orbit_.at(m.index + j) + m.shift;
  const auto& H = heteroclinic_.config.values;
  const long idx = m.index + j;
  const long last = static_cast<long>(H.size()) - 1;
  if (idx < 0) return heteroclinic_.left_orbit.at(idx) + m.shift;
  if (idx > last) return heteroclinic_.right_orbit.at(idx) + m.shift;
  return H[static_cast<std::size_t>(idx)] + m.shift;
}

BarrierPoint RationalBarrier::evaluate(double xi) const {
  return variant_ == SymbolVariant::Exact ? evaluate_exact(xi) : evaluate_advancing(xi);
}

BarrierPoint RationalBarrier::evaluate_exact(double xi) const {
  const double x = reduce_mod(xi, 1.0);
  auto it = std::upper_bound(points_.begin(), points_.end(), x,
                             [](double v, const MatherPoint& m) { return v < m.value; });
  MatherPoint lo = it == points_.begin() ? points_.back() : *std::prev(it);
  if (it == points_.begin()) lo.value -= 1.0, lo.shift -= 1.0;
  MatherPoint hi = it == points_.end() ? points_.front() : *it;
  if (it == points_.end()) hi.value += 1.0, hi.shift += 1.0;
  if (x - lo.value <= options_.snap_tolerance || hi.value - x <= options_.snap_tolerance) return snapped(xi);

  const std::size_t q = static_cast<std::size_t>(q_);
  ChainProblem chain = detail::make_chain(h_, std::vector<double>(q));
  chain.periodic = true;
  chain.p = p_;
  chain.pinned[0] = 1;
  std::vector<double> a(q);
  std::vector<double> b(q);
  for (std::size_t i = 0; i < q; ++i) {
    a[i] = neighbour(lo, static_cast<long>(i));
    b[i] = neighbour(hi, static_cast<long>(i));
  }
  const double theta = (x - lo.value) / (hi.value - lo.value);
  BarrierPoint pt = constrained_minimum(h_, std::move(chain), a, b, 0, x, theta, chain_options(options_));
  pt.xi = xi;
  return pt;
}

BarrierPoint RationalBarrier::evaluate_advancing(double xi) const {
  const double x = reduce_mod(xi, 1.0);
  // Orbit points bounding the gap that contains x.
  auto it = std::upper_bound(orbit_points_.begin(), orbit_points_.end(), x,
                             [](double v, const MatherPoint& m) { return v < m.value; });
  MatherPoint below = it == orbit_points_.begin() ? orbit_points_.back() : *std::prev(it);
  if (it == orbit_points_.begin()) below.value -= 1.0, below.shift -= 1.0;
  MatherPoint above = it == orbit_points_.end() ? orbit_points_.front() : *it;
  if (it == orbit_points_.end()) above.value += 1.0, above.shift += 1.0;
  if (x - below.value <= options_.snap_tolerance || above.value - x <= options_.snap_tolerance) return snapped(xi);

  // The Mather configurations with x_0 in the gap are the period translates
  // of the heteroclinic carried by the translation that maps the lower orbit
  // onto the orbit through the lower gap end.
  const auto& H = heteroclinic_.config.values;
  const long L = static_cast<long>(H.size()) - 1;

  // Members m -> (index + m q, shift - m p); x_0 is monotone in m. Orbit
  // points closer than rounding have no reliable order, so each point of
  // the cluster at the lower gap end is tried as the seed; only the true top
  // of the cluster has translates on both sides of x.
  MatherPoint lo{below.value, false, 0, 0.0};
  MatherPoint hi{above.value, false, 0, 0.0};
  bool have_lo = false;
  bool have_hi = false;
  double nearest = std::numeric_limits<double>::infinity();
  for (MatherPoint ref : orbit_all_) {
    const double wrap = std::round(below.value - ref.value);
    ref.value += wrap;
    ref.shift += wrap;
    if (std::abs(ref.value - below.value) > kClusterWidth) continue;
    MatherPoint seed_lo{};
    MatherPoint seed_hi{};
    bool seed_has_lo = false;
    bool seed_has_hi = false;
    const long m_first = -(ref.index / q_) - 2;
    const long m_last = (L - ref.index) / q_ + 2;
    for (long m = m_first; m <= m_last; ++m) {
      MatherPoint member{0.0, false, ref.index + m * q_, ref.shift - static_cast<double>(m * p_)};
      member.value = neighbour(member, 0);
      nearest = std::min(nearest, std::abs(member.value - x));
      if (member.value <= x && (!seed_has_lo || member.value > seed_lo.value)) seed_lo = member, seed_has_lo = true;
      if (member.value > x && (!seed_has_hi || member.value < seed_hi.value)) seed_hi = member, seed_has_hi = true;
    }
    if (!seed_has_lo || !seed_has_hi) continue;
    if (!have_lo || seed_hi.value - seed_lo.value < hi.value - lo.value) {
      lo = seed_lo, hi = seed_hi;
      have_lo = have_hi = true;
    }
  }
  // Points piled up within rounding of x: x is on the Mather set.
  if ((!have_lo || !have_hi) && nearest <= options_.snap_tolerance) return snapped(xi);
  if (!have_lo || !have_hi) {
    throw Error(ErrorKind::BracketFailure, "window does not resolve the Mather neighbours of xi");
  }
  if (x - lo.value <= options_.snap_tolerance || hi.value - x <= options_.snap_tolerance) return snapped(xi);

  const long half = L / 2;
  const long first = std::min({-lo.index, -hi.index, -half});
  const long last = std::max({L - lo.index, L - hi.index, half});
  const auto n = static_cast<std::size_t>(last - first + 1);

  std::vector<double> a(n);
  std::vector<double> b(n);
  for (std::size_t t = 0; t < n; ++t) {
    const long j = first + static_cast<long>(t);
    a[t] = neighbour(lo, j);
    b[t] = neighbour(hi, j);
  }
  if (std::abs(a.front() - b.front()) > kEndMismatch || std::abs(a.back() - b.back()) > kEndMismatch) {
    throw Error(ErrorKind::BracketFailure, "Mather neighbours of xi do not share asymptotic orbits");
  }
  const auto pin = static_cast<std::size_t>(-first);
  ChainProblem chain = detail::make_chain(h_, std::vector<double>(n));
  chain.pinned.front() = 1;
  chain.pinned.back() = 1;
  chain.pinned[pin] = 1;
  const double theta = (x - lo.value) / (hi.value - lo.value);
  BarrierPoint pt = constrained_minimum(h_, std::move(chain), a, b, pin, x, theta, chain_options(options_));
  pt.xi = xi;
  return pt;
}

// ----------------------------------------------------------- irrational

IrrationalBarrier::IrrationalBarrier(const GeneratingFunction& h, double omega, int convergents,
                                     const BarrierOptions& options)
    : h_(omega < 0 ? h.reflected() : h), omega_(std::abs(omega)), reflect_(omega < 0), options_(options) {
  if (convergents < 3) throw Error(ErrorKind::InvalidArgument, "need at least 3 convergents");
  approximants_ = dirichlet_approximants(omega_, convergents);
}

const IrrationalBarrier::Stage& IrrationalBarrier::stage(std::size_t m) const {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (m < stages_.size()) return *stages_[m];
  }
  // Built outside the lock; a concurrent duplicate build is discarded.
  auto s = std::make_shared<Stage>();
  s->approximant = approximants_[m];
  const auto& a = s->approximant;
  s->variant = static_cast<double>(a.p) < omega_ * static_cast<double>(a.q) ? SymbolVariant::Plus : SymbolVariant::Minus;
  try {
    s->barrier = std::make_shared<RationalBarrier>(h_, a.p, a.q, s->variant, options_);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateSymbol) throw;
    s->degenerate = true;
    s->barrier = std::make_shared<RationalBarrier>(h_, a.p, a.q, SymbolVariant::Exact, options_);
  }
  // evaluate() requests stages in order, so stages_ holds at least m here.
  std::lock_guard<std::mutex> lock(mutex_);
  if (stages_.size() == m) stages_.push_back(std::move(s));
  return *stages_[m];
}

IrrationalValue IrrationalBarrier::evaluate(double xi) const {
  const double x = reflect_ ? -xi : xi;
  IrrationalValue out;
  for (std::size_t m = 0; m < approximants_.size(); ++m) {
    const Stage& s = stage(m);
    ConvergentStep step;
    step.p = s.approximant.p;
    step.q = s.approximant.q;
    step.variant = s.degenerate ? SymbolVariant::Exact : s.variant;
    step.degenerate = s.degenerate;
    const BarrierPoint pt = s.barrier->evaluate(x);
    if (!pt.converged) {
      throw Error(ErrorKind::NonConvergence, "barrier at convergent " + std::to_string(step.p) + "/" +
                                                 std::to_string(step.q) + " did not converge");
    }
    step.value = pt.value;
    out.steps.push_back(step);
    const std::size_t k = out.steps.size();
    out.value = step.value;
    if (k >= 2) out.error_estimate = std::abs(out.steps[k - 1].value - out.steps[k - 2].value);
    if (k >= 3) {
      const double d1 = std::abs(out.steps[k - 1].value - out.steps[k - 2].value);
      const double d2 = std::abs(out.steps[k - 2].value - out.steps[k - 3].value);
      if (d1 < options_.stabilization_tolerance && d2 < options_.stabilization_tolerance) {
        out.stable = true;
        return out;
      }
    }
  }
  return out;
}

// -------------------------------------------------------------- entry points

double peierls_zero_plus(const GeneratingFunction& h, double xi, const BarrierOptions& options) {
  const BarrierPoint pt = ZeroPlusBarrier(h, options).evaluate(xi);
  if (!pt.converged) throw Error(ErrorKind::NonConvergence, "constrained heteroclinic did not converge");
  return pt.value;
}

double peierls_rational(const GeneratingFunction& h, long p, long q, SymbolVariant variant, double xi,
                        const BarrierOptions& options) {
  const BarrierPoint pt = RationalBarrier(h, p, q, variant, options).evaluate(xi);
  if (!pt.converged) throw Error(ErrorKind::NonConvergence, "constrained minimization did not converge");
  return pt.value;
}

IrrationalValue peierls_irrational(const GeneratingFunction& h, double omega, double xi, int convergents,
                                   const BarrierOptions& options) {
  return IrrationalBarrier(h, omega, convergents, options).evaluate(xi);
}

BarrierProfile barrier_profile(const GeneratingFunction& h, const RotationSymbol& symbol, int grid_size,
                               const BarrierOptions& options, int convergents) {
  if (grid_size < 8) throw Error(ErrorKind::InvalidArgument, "profile grid needs at least 8 points");
  std::function<BarrierPoint(double)> point;
  std::shared_ptr<const void> keep;
  if (!symbol.is_rational()) {
    auto b = std::make_shared<IrrationalBarrier>(h, symbol.omega, convergents, options);
    keep = b;
    point = [b](double xi) {
      const IrrationalValue v = b->evaluate(xi);
      BarrierPoint pt;
      pt.xi = xi;
      pt.value = v.value;
      pt.converged = v.stable;
      pt.residual = v.error_estimate;
      pt.iterations = static_cast<int>(v.steps.size());
      return pt;
    };
  } else if (symbol.p == 0 && symbol.q == 1 && symbol.variant == SymbolVariant::Plus) {
    auto b = std::make_shared<ZeroPlusBarrier>(h, options);
    keep = b;
    point = [b](double xi) { return b->evaluate(xi); };
  } else {
    auto b = std::make_shared<RationalBarrier>(h, symbol.p, symbol.q, symbol.variant, options);
    keep = b;
    point = [b](double xi) { return b->evaluate(xi); };
  }

  BarrierProfile profile;
  profile.symbol = symbol;
  const auto n = static_cast<std::size_t>(grid_size);
  profile.grid.resize(n);
  profile.values.assign(n, std::numeric_limits<double>::quiet_NaN());
  profile.converged.assign(n, 0);
  std::vector<BarrierPoint> points(n);
  for (std::size_t j = 0; j < n; ++j) profile.grid[j] = static_cast<double>(j) / static_cast<double>(grid_size);
  detail::parallel_for(
      n,
      [&](std::size_t j) {
        try {
          points[j] = point(profile.grid[j]);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::NonConvergence && e.kind() != ErrorKind::BracketFailure) throw;
          points[j].xi = profile.grid[j];
          points[j].converged = false;
          points[j].value = std::numeric_limits<double>::quiet_NaN();
        }
      },
      options.threads);

  profile.metadata.converged = true;
  for (std::size_t j = 0; j < n; ++j) {
    const BarrierPoint& pt = points[j];
    profile.converged[j] = pt.converged ? 1 : 0;
    profile.values[j] = pt.converged ? pt.value : std::numeric_limits<double>::quiet_NaN();
    profile.metadata.converged = profile.metadata.converged && pt.converged;
    profile.metadata.iterations += pt.iterations;
    if (pt.converged) {
      profile.sup_value = std::max(profile.sup_value, pt.value);
      profile.metadata.residual_inf = std::max(profile.metadata.residual_inf, pt.residual);
    }
  }
  profile.metadata.action = profile.sup_value;
  return profile;
}

bool invariant_circle_exists(const BarrierProfile& profile, double tol) {
  for (char c : profile.converged) {
    if (!c) throw Error(ErrorKind::IncompleteProfile, "incomplete profile");
  }
  return profile.sup_value <= tol;
}

}  // namespace peierls
