#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "peierls/periodic_function.hpp"

namespace peierls {

/// Parameters of the near-integrable family h_n = h_0 + u_n + v_n.
///
/// `s` defaults to (k + 2) a; `s_prime` (the decay rate of the C^k norm of
/// the bump) is then s - k a = 2a for the bump used here.
struct PerturbationParams {
  int n = 16;
  double a = 1.9;
  int k = 2;
  std::optional<double> s;
  double delta = 0.05;

  double resolved_s() const { return s ? *s : (k + 2) * a; }
  double s_prime() const { return resolved_s() - k * a; }

  /// Throws Error(InvalidArgument) when a field is out of range.
  void validate() const;
};

struct BumpSpec {
  double center = 0.5;
  double half_width = 0.0;
  double height = 0.0;
};

BumpSpec bump_spec(const PerturbationParams& params);

/// h(x, x') = (x - x')^2 / 2 + V(x') with V 1-periodic.
///
/// Every member of the family has d12 = -1 identically, so the induced map
/// is an exact area-preserving monotone twist map.
class GeneratingFunction {
 public:
  GeneratingFunction(std::string name, PeriodicFunction potential);

  double operator()(double x, double xp) const;
  double d1(double x, double xp) const { return x - xp; }
  double d2(double x, double xp) const { return xp - x + potential_.derivative(xp, 1); }
  double d11(double, double) const { return 1.0; }
  double d12(double, double) const { return -1.0; }
  double d22(double, double xp) const { return 1.0 + potential_.derivative(xp, 2); }

  const PeriodicFunction& potential() const { return potential_; }
  const std::string& name() const { return name_; }
  bool is_integrable() const { return potential_.is_zero(); }

  /// Smallest tau = 1/m (m a positive integer) such that the potential has
  /// period tau; x -> x + tau then maps orbits to orbits.
  double translation_symmetry() const;

  /// The conjugate generating function h(-x, -x'); swaps rotation number
  /// omega with -omega.
  GeneratingFunction reflected() const;

 private:
  std::string name_;
  PeriodicFunction potential_;
};

GeneratingFunction make_h0();

/// u_n(x) = n^-a (1 - cos 2 pi x).
PeriodicFunction make_un(const PerturbationParams& params);

/// v_n(x) = n^-s phi(n^a d(x)), d(x) the signed distance of x to 1/2 mod 1.
PeriodicFunction make_vn(const PerturbationParams& params);

/// h_n = h_0 + u_n(x') + v_n(x'); `include_bump = false` gives hbar_n.
GeneratingFunction make_hn(const PerturbationParams& params, bool include_bump = true);

/// Q(x) = q^-2 P(q x).
PeriodicFunction rescale(const PeriodicFunction& potential, int q);

/// htilde = h_0 + Q with Q the rescaling of u_q + v_q (n = q).
GeneratingFunction make_htilde(const PerturbationParams& params, int q);

/// Builds a member of the family by CLI name: "h0", "hn", "hbar_n",
/// "htilde_n" (the latter uses `q`).
GeneratingFunction make_named(const std::string& name, const PerturbationParams& params,
                              int q = 1);

struct DirichletApproximant {
  long p = 0;
  long q = 1;
  double omega = 0.0;
};

/// Heuristic rationality check: true when some convergent p/q of omega with
/// q <= 1e6 has |q omega - p| < 1e-9.
bool looks_rational(double omega);

/// The first `count` continued-fraction convergents p/q of omega with q > 1,
/// in increasing q. Throws Error(RationalInput) for rational omega.
std::vector<DirichletApproximant> dirichlet_approximants(double omega, int count);

struct CrNormOptions {
  /// Uniform samples per period.
  int grid = 4096;
  /// Extra samples across each fine region.
  int fine_grid = 4096;
};

/// Grid estimate of the C^r norm of a periodic function of x' alone, i.e. of
/// a generating-function difference of the form V(x'). For integer r this
/// is max_{j <= r} sup |f^(j)|; a fractional part also takes the max with
/// the Hoelder seminorm of the floor(r)-th derivative, estimated from
/// divided differences at dyadic lags from period/2 down to the grid or the
/// finest feature scale. Throws for r outside [0, 4].
double cr_norm_estimate(const PeriodicFunction& f, double r, const CrNormOptions& options = {});

struct PhasePoint {
  double x = 0.0;
  double y = 0.0;
};

enum class TwistSolve { Explicit, Implicit };

/// One step of the lift F(x, y) = (x', y') defined by y = -d1 h(x, x'),
/// y' = d2 h(x, x'). `Implicit` solves the first equation by bracketing and
/// Newton instead of the closed form x' = x + y.
PhasePoint twist_map_step(const GeneratingFunction& h, PhasePoint point,
                          TwistSolve mode = TwistSolve::Explicit);

/// `steps` iterates starting at `start`; the result has steps + 1 points.
std::vector<PhasePoint> twist_orbit(const GeneratingFunction& h, PhasePoint start, int steps);

}  // namespace peierls
