#include "peierls/periodic_function.hpp"

#include <algorithm>
#include <cmath>

namespace peierls {
namespace {

// Truncated Taylor series of a function around a point: c[j] = f^(j)/j!.
struct Jet {
  std::array<double, kMaxDerivative + 1> c{};

  static Jet variable(double t) {
    Jet j;
    j.c[0] = t;
    j.c[1] = 1.0;
    return j;
  }
};

Jet operator*(const Jet& a, const Jet& b) {
  Jet r;
  for (int i = 0; i <= kMaxDerivative; ++i) {
    for (int j = 0; i + j <= kMaxDerivative; ++j) r.c[i + j] += a.c[i] * b.c[j];
  }
  return r;
}

Jet reciprocal(const Jet& a) {
  Jet r;
  r.c[0] = 1.0 / a.c[0];
  for (int k = 1; k <= kMaxDerivative; ++k) {
    double acc = 0.0;
    for (int j = 1; j <= k; ++j) acc += a.c[j] * r.c[k - j];
    r.c[k] = -acc / a.c[0];
  }
  return r;
}

Jet exp(const Jet& a) {
  Jet r;
  r.c[0] = std::exp(a.c[0]);
  for (int k = 1; k <= kMaxDerivative; ++k) {
    double acc = 0.0;
    for (int j = 1; j <= k; ++j) acc += j * a.c[j] * r.c[k - j];
    r.c[k] = acc / k;
  }
  return r;
}

std::vector<Interval> tile_regions(const std::vector<Interval>& regions, double from_period,
                                   double to_period) {
  std::vector<Interval> out;
  const int copies = std::max(1, static_cast<int>(std::lround(to_period / from_period)));
  for (int m = 0; m < copies; ++m) {
    for (const auto& r : regions) out.push_back({r.lo + m * from_period, r.hi + m * from_period});
  }
  return out;
}

}  // namespace

double reduce_mod(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0) r += period;
  if (r >= period) r -= period;
  return r;
}

Derivatives mollifier(double t) {
  Derivatives out{};
  if (std::abs(t) >= 1.0) return out;
  const double one_minus = 1.0 - t * t;
  if (1.0 - 1.0 / one_minus < -700.0) return out;
  Jet x = Jet::variable(t);
  Jet base = x * x;
  for (auto& c : base.c) c = -c;
  base.c[0] += 1.0;  // 1 - t^2
  Jet g = reciprocal(base);
  for (auto& c : g.c) c = -c;
  g.c[0] += 1.0;  // 1 - 1/(1 - t^2)
  Jet e = exp(g);
  double factorial = 1.0;
  for (int j = 0; j <= kMaxDerivative; ++j) {
    if (j > 0) factorial *= j;
    out[j] = e.c[j] * factorial;
  }
  return out;
}

PeriodicFunction::PeriodicFunction() = default;

PeriodicFunction::PeriodicFunction(Evaluator evaluator, int smoothness, double period,
                                   std::vector<Interval> fine_regions)
    : evaluator_(evaluator ? std::make_shared<const Evaluator>(std::move(evaluator)) : nullptr),
      smoothness_(smoothness),
      period_(period),
      fine_regions_(std::move(fine_regions)) {}

Derivatives PeriodicFunction::derivatives(double x) const {
  if (!evaluator_) return Derivatives{};
  return (*evaluator_)(x);
}

double PeriodicFunction::derivative(double x, int order) const {
  return derivatives(x)[static_cast<std::size_t>(order)];
}

PeriodicFunction PeriodicFunction::scaled(double factor) const {
  if (!evaluator_ || factor == 0.0) return {};
  auto inner = evaluator_;
  return PeriodicFunction(
      [inner, factor](double x) {
        Derivatives d = (*inner)(x);
        for (auto& v : d) v *= factor;
        return d;
      },
      smoothness_, period_, fine_regions_);
}

PeriodicFunction PeriodicFunction::reflected() const {
  if (!evaluator_) return {};
  auto inner = evaluator_;
  std::vector<Interval> regions;
  for (const auto& r : fine_regions_) regions.push_back({period_ - r.hi, period_ - r.lo});
  return PeriodicFunction(
      [inner](double x) {
        Derivatives d = (*inner)(-x);
        for (int j = 1; j <= kMaxDerivative; j += 2) d[j] = -d[j];
        return d;
      },
      smoothness_, period_, std::move(regions));
}

PeriodicFunction operator+(const PeriodicFunction& lhs, const PeriodicFunction& rhs) {
  if (lhs.is_zero()) return rhs;
  if (rhs.is_zero()) return lhs;
  const double period = lhs.period_ == rhs.period_ ? lhs.period_ : 1.0;
  std::vector<Interval> regions = tile_regions(lhs.fine_regions_, lhs.period_, period);
  auto more = tile_regions(rhs.fine_regions_, rhs.period_, period);
  regions.insert(regions.end(), more.begin(), more.end());
  auto a = lhs.evaluator_;
  auto b = rhs.evaluator_;
  return PeriodicFunction(
      [a, b](double x) {
        Derivatives da = (*a)(x);
        const Derivatives db = (*b)(x);
        for (std::size_t j = 0; j < da.size(); ++j) da[j] += db[j];
        return da;
      },
      std::min(lhs.smoothness_, rhs.smoothness_), period, std::move(regions));
}

}  // namespace peierls
