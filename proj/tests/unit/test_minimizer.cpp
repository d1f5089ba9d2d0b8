#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "peierls/error.hpp"
#include "peierls/minimizer.hpp"

using namespace peierls;

namespace {

PerturbationParams params(int n, double a, std::optional<double> s = std::nullopt) {
  PerturbationParams p;
  p.n = n;
  p.a = a;
  p.k = 2;
  p.s = s;
  return p;
}

Configuration periodic(std::vector<double> v, long p) {
  Configuration c;
  c.boundary = Periodic{p, static_cast<long>(v.size())};
  c.values = std::move(v);
  return c;
}

}  // namespace

TEST_CASE("actions of simple configurations") {
  const GeneratingFunction h0 = make_h0();
  CHECK(action(h0, periodic({0.1, 0.6}, 1)) == doctest::Approx(0.25));
  Configuration pair;
  pair.values = {0.0, 1.0};
  CHECK(action(h0, pair) == doctest::Approx(0.5));
  const GeneratingFunction h = make_hn(params(10, 2.0));
  pair.values = {0.0, 0.5};
  CHECK(action(h, pair) == doctest::Approx(0.125 + 0.02 + 1e-8));
}

TEST_CASE("stationarity of linear sequences under h0") {
  Configuration c;
  for (int i = 0; i < 8; ++i) c.values.push_back(0.3 + 0.17 * i);
  for (double r : stationarity_residual(make_h0(), c)) CHECK(std::abs(r) < 1e-15);
}

TEST_CASE("integrable periodic minimizers") {
  const MinimizeResult r = minimize_periodic(make_h0(), 1, 3);
  CHECK(r.report.converged);
  CHECK(r.report.action == doctest::Approx(1.0 / 6.0));
  for (long i = 1; i < 3; ++i) {
    CHECK(r.config.values[static_cast<std::size_t>(i)] - r.config.values[0] == doctest::Approx(i / 3.0));
  }
  CHECK(periodic_degenerate(make_h0(), r.config));
}

TEST_CASE("fixed point of h_n") {
  const MinimizeResult r = minimize_periodic(make_hn(params(10, 2.0)), 0, 1);
  CHECK(r.report.converged);
  CHECK(std::abs(r.config.values[0]) < 1e-10);
  CHECK(std::abs(r.report.action) < 1e-15);
  CHECK_FALSE(periodic_degenerate(make_hn(params(10, 2.0)), r.config));
}

TEST_CASE("periodic actions match the dynamic programming oracle") {
  for (int n : {4, 8, 10}) {
    for (auto [p, q] : {std::pair{0L, 1L}, std::pair{1L, 2L}, std::pair{1L, 3L}, std::pair{2L, 3L}}) {
      const PerturbationParams pp = params(n, 1.0, 3.0);
      const MinimizeResult r = minimize_periodic(make_hn(pp), p, q);
      const double dp = static_cast<double>(oracle::dp_periodic_action({n, 1.0, 3.0, true}, p, q));
      CAPTURE(n);
      CAPTURE(q);
      CHECK(std::abs(r.report.action - dp) < 1e-5);
    }
  }
}

TEST_CASE("minimizers close up under the map") {
  const PerturbationParams pp = params(8, 1.0, 3.0);
  for (auto [p, q] : {std::pair{1L, 2L}, std::pair{1L, 3L}, std::pair{2L, 5L}}) {
    const MinimizeResult r = minimize_periodic(make_hn(pp), p, q);
    CHECK(r.report.residual_inf <= 1e-10);
    const auto [dx, dy] = oracle::shooting_periodic_defect({8, 1.0, 3.0, true}, r.config.values[0],
                                                           r.config.at(1), p, q);
    CHECK(std::abs(static_cast<double>(dx)) < 1e-9);
    CHECK(std::abs(static_cast<double>(dy)) < 1e-9);
  }
}

TEST_CASE("residual of a perturbed minimizer follows the linearization") {
  const GeneratingFunction h = make_hn(params(8, 1.0, 3.0));
  const MinimizeResult r = minimize_periodic(h, 1, 3);
  REQUIRE(r.report.residual_inf <= 1e-10);
  Configuration c = r.config;
  const double e = 1e-3;
  c.values[1] += e;
  // Row 1 of the Hessian: 2 + V''(x_1) on the diagonal, -1 off it.
  const oracle::Family f{8, 1.0, 3.0, true};
  const double expected = e * std::max(std::abs(2.0 + static_cast<double>(f.v2(r.config.values[1]))), 1.0);
  CHECK(residual_inf(h, c) == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("translation equivariance") {
  const GeneratingFunction h = make_hn(params(8, 1.0, 3.0));
  const MinimizeResult base = minimize_periodic(h, 1, 2);
  Configuration init = base.config;
  for (double& v : init.values) v += 1.0;
  const MinimizeResult shifted = minimize_periodic(h, 1, 2, init);
  for (std::size_t i = 0; i < init.size(); ++i) {
    CHECK(shifted.config.values[i] == doctest::Approx(base.config.values[i] + 1.0).epsilon(1e-10));
  }
  CHECK(std::abs(shifted.report.action - base.report.action) < 1e-12);
}

TEST_CASE("second variation at minimizers") {
  const GeneratingFunction h = make_hn(params(8, 1.0, 3.0));
  for (auto [p, q] : {std::pair{0L, 1L}, std::pair{1L, 2L}, std::pair{1L, 3L}, std::pair{3L, 7L}}) {
    const MinimizeResult r = minimize_periodic(h, p, q);
    CHECK(second_variation_min_eigenvalue(h, r.config) >= -1e-9);
  }
}

TEST_CASE("0+ heteroclinic") {
  const PerturbationParams pp = params(8, 1.0, 3.0);
  const GeneratingFunction h = make_hn(pp);
  const AdvancingResult r = minimize_advancing(h, 0, 1, SymbolVariant::Plus);
  CHECK(r.report.converged);
  const auto& x = r.config.values;
  CHECK(std::is_sorted(x.begin(), x.end(), std::less_equal<>()));
  CHECK(std::adjacent_find(x.begin(), x.end(), std::greater_equal<>()) == x.end());
  CHECK(std::abs(x.front()) <= 1e-9);
  CHECK(std::abs(x.back() - 1.0) <= 1e-9);
  CHECK(std::abs(rotation_number(r.config)) <= 1.0 / static_cast<double>(x.size() - 1) + 1e-12);

  // Tail ratio from the linearized recurrence at 0.
  const double lambda = static_cast<double>(oracle::tail_ratio({8, 1.0, 3.0, true}));
  std::size_t i = 2;
  while (x[i] < 1e-4) ++i;
  i -= 2;
  REQUIRE(x[i] > 1e-7);
  CHECK(x[i] / x[i + 1] == doctest::Approx(lambda).epsilon(1e-3));
}

TEST_CASE("advancing symbols need isolated minimizers") {
  try {
    minimize_advancing(make_h0(), 0, 1, SymbolVariant::Plus);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateSymbol);
  }
  CHECK_THROWS_AS(minimize_advancing(make_hn(params(8, 1.0)), 0, 1, SymbolVariant::Exact), Error);
}

TEST_CASE("p/q+ and p/q- heteroclinics") {
  const GeneratingFunction h = make_hn(params(8, 1.0, 3.0));
  for (SymbolVariant v : {SymbolVariant::Plus, SymbolVariant::Minus}) {
    const AdvancingResult r = minimize_advancing(h, 1, 3, v);
    CHECK(r.report.converged);
    CHECK(r.report.tail_distance <= 1e-9);
    // The ends sit on neighbouring translates of the periodic orbit.
    CHECK(crossing_count(r.config, r.left_orbit) == 0);
    CHECK(crossing_count(r.config, r.right_orbit) == 0);
  }
}

TEST_CASE("rotation numbers") {
  CHECK(rotation_number(periodic({0.0, 0.3, 0.7}, 1)) == doctest::Approx(1.0 / 3.0));
  const auto orbit = twist_orbit(make_h0(), {0.0, 0.25}, 400);
  CHECK(std::abs(rotation_number(orbit_configuration(orbit)) - 0.25) < 1e-12);
}

TEST_CASE("crossings") {
  const GeneratingFunction h = make_hn(params(8, 1.0, 3.0));
  const Configuration a = minimize_periodic(h, 1, 3).config;
  CHECK(crossing_count(a, a) == 0);
  CHECK(crossing_count(a, next_orbit(a)) == 0);
  const Configuration b = minimize_periodic(h, 1, 2).config;
  CHECK(crossing_count(a, b) <= 1);
}

TEST_CASE("next orbit") {
  const Configuration a = periodic({0.1, 0.45, 0.8}, 1);
  const Configuration b = next_orbit(a);
  CHECK(b.values[0] == doctest::Approx(0.45));
  const Configuration c = next_orbit(a, 0.25);
  CHECK(c.values[0] == doctest::Approx(0.2));
}

TEST_CASE("spacing and counting helpers") {
  Configuration c;
  c.values = {0.0, 0.1, 0.3, 0.6, 1.0};
  const auto gaps = spacing_profile(c, {0.05, 0.65});
  REQUIRE(gaps.size() == 3);
  CHECK(gaps[0].gap == doctest::Approx(0.2));
  CHECK(count_in_interval(c, {0.2, 0.2}) == 0);
  CHECK(count_in_interval(c, {0.0, 0.3}) == 3);

  // Shear orbit of golden rotation on an interval of length one.
  const double w = (std::sqrt(5.0) - 1.0) / 2.0;
  std::vector<double> pts;
  for (const auto& q : twist_orbit(make_h0(), {0.0, w}, 60)) pts.push_back(q.x);
  for (double lo : {0.0, 0.37, 3.2, 11.9}) {
    const int k = count_in_interval(pts, {lo, lo + 1.0});
    CHECK(k >= 1);
    CHECK(k <= 2);
  }
}

TEST_CASE("normalization") {
  const Configuration c = normalized(periodic({0.7, 1.2, 1.9}, 2));
  REQUIRE(c.size() == 3);
  CHECK(c.values[0] >= 0.0);
  CHECK(c.values[0] < 1.0);
  CHECK(std::is_sorted(c.values.begin(), c.values.end()));
}
