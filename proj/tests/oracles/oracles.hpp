#pragma once

// Reference computations that do not go through the library solvers. They
// rebuild the potential from its closed form in long double.

#include <functional>
#include <utility>
#include <vector>

namespace oracle {

using real = long double;

struct Family {
  int n = 8;
  real a = 1;
  real s = 3;
  bool bump = true;
  /// htilde: Q(x) = q^-2 P(q x) with the family at n, when q > 1.
  int q = 1;
  bool cosine = true;

  /// V and its first two derivatives.
  real v(real x) const;
  real v1(real x) const;
  real v2(real x) const;
  /// Central difference of v2.
  real v3(real x) const;
};

real h(const Family& f, real x, real xp);

/// Minimal p/q periodic action by dynamic programming: a 512-point grid for
/// x_0 and for the offsets x_i - x_0 - i p/q, then zoomed grids around the
/// best few coarse paths until the spacing drops below 1e-10.
real dp_periodic_action(const Family& f, long p, long q);

/// Minimum of g on [lo, hi]: uniform scan, then golden section around the
/// best few samples.
real scan_minimum(const std::function<real(real)>& g, real lo, real hi, int samples = 20000);

/// P_{0+}(1/2) for a family without the bump, from the two symmetric 0 -> 1
/// heteroclinics: the one with a point at 1/2 and the one straddling it.
/// Each is found by bisecting the initial step of a forward shot.
real shooting_zero_plus_half(const Family& f);

/// Iterates the lift of the twist map q times from (x0, x1 - x0) and
/// returns (x_q - x_0 - p, y_q - y_0).
std::pair<real, real> shooting_periodic_defect(const Family& f, real x0, real x1, long p, long q);

struct Fraction {
  long long p;
  long long q;
};

/// Continued-fraction convergents of omega with q > 1, each from the
/// recurrence on exactly computed partial quotients.
std::vector<Fraction> convergents(real omega, int count);

/// max_{j <= r} sup |V^(j)| on a uniform grid of `samples` points per period
/// plus a dense grid across the bump; integer r in [0, 3].
real grid_cr_norm(const Family& f, int r, int samples = 200000);

/// Determinant of the central-difference Jacobian of `step` at (x, y).
real jacobian_det(const std::function<std::pair<real, real>(real, real)>& step, real x, real y, real eps = 1e-6);

/// Smaller root of lambda^2 - (2 + V''(0)) lambda + 1.
real tail_ratio(const Family& f);

}  // namespace oracle
