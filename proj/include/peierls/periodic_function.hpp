#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

namespace peierls {

/// Highest derivative order any periodic function in the library reports.
inline constexpr int kMaxDerivative = 6;

/// f, f', f'', ... up to kMaxDerivative at one point.
using Derivatives = std::array<double, kMaxDerivative + 1>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  double length() const { return hi - lo; }
};

/// A real function with f(x + period) = f(x), together with its
/// derivatives. Instances are immutable and cheap to copy; the evaluator is
/// shared.
///
/// `fine_regions` lists subintervals of [0, period) where the function has
/// features much narrower than the period (the support of a bump). Grid
/// based norm estimates refine their sampling there.
class PeriodicFunction {
 public:
  using Evaluator = std::function<Derivatives(double)>;

  /// The zero function.
  PeriodicFunction();

  PeriodicFunction(Evaluator evaluator, int smoothness, double period,
                   std::vector<Interval> fine_regions = {});

  double operator()(double x) const { return derivatives(x)[0]; }
  double derivative(double x, int order) const;
  Derivatives derivatives(double x) const;

  /// Highest order for which `derivatives` entries are meaningful.
  int smoothness() const { return smoothness_; }
  double period() const { return period_; }
  const std::vector<Interval>& fine_regions() const { return fine_regions_; }
  bool is_zero() const { return !evaluator_; }

  PeriodicFunction scaled(double factor) const;
  /// x -> f(-x).
  PeriodicFunction reflected() const;

  friend PeriodicFunction operator+(const PeriodicFunction& lhs,
                                    const PeriodicFunction& rhs);

 private:
  std::shared_ptr<const Evaluator> evaluator_;
  int smoothness_ = kMaxDerivative;
  double period_ = 1.0;
  std::vector<Interval> fine_regions_;
};

/// Fractional position of x modulo `period`, in [0, period).
double reduce_mod(double x, double period);

/// The fixed C-infinity bump phi(t) = exp(1 - 1/(1 - t^2)) on |t| < 1,
/// zero elsewhere; phi(0) = 1. Returns phi and its derivatives.
Derivatives mollifier(double t);

}  // namespace peierls
