#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "peierls/error.hpp"
#include "peierls/generating.hpp"

using namespace peierls;

namespace {

PerturbationParams params(int n, double a, std::optional<double> s = std::nullopt, int k = 2) {
  PerturbationParams p;
  p.n = n;
  p.a = a;
  p.k = k;
  p.s = s;
  return p;
}

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

}  // namespace

TEST_CASE("h0 values and partials") {
  const GeneratingFunction h = make_h0();
  CHECK(h(0.0, 0.0) == 0.0);
  CHECK(h(0.0, 0.5) == doctest::Approx(0.125));
  CHECK(h.d1(0.2, 0.7) == doctest::Approx(-0.5));
  CHECK(h.d12(0.3, 0.9) == -1.0);
  CHECK(h.is_integrable());
}

TEST_CASE("family members are periodic twist generating functions") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const GeneratingFunction h = make_hn(params(10, 1.0, 3.0));
  for (int i = 0; i < 50; ++i) {
    const double x = u(rng), xp = x + u(rng) / 4.0;
    CHECK(h.d12(x, xp) < 0.0);
    CHECK(std::abs(h(x + 1.0, xp + 1.0) - h(x, xp)) < 1e-12);
    const double e = 1e-5;
    CHECK(h.d1(x, xp) == doctest::Approx((h(x + e, xp) - h(x - e, xp)) / (2 * e)).epsilon(1e-6));
    CHECK(h.d2(x, xp) == doctest::Approx((h(x, xp + e) - h(x, xp - e)) / (2 * e)).epsilon(1e-6));
  }
}

TEST_CASE("cosine term") {
  const PeriodicFunction u = make_un(params(10, 2.0));
  CHECK(u(0.5) == doctest::Approx(0.02));
  CHECK(u(0.0) == 0.0);
  CHECK(u.derivative(0.25, 1) == doctest::Approx(2 * std::numbers::pi / 100));
}

TEST_CASE("bump term") {
  const PerturbationParams p = params(10, 1.0, 3.0);
  CHECK(p.resolved_s() == doctest::Approx(3.0));
  CHECK(params(10, 1.0).resolved_s() == doctest::Approx(4.0));
  const PeriodicFunction v = make_vn(p);
  CHECK(v(0.0) == 0.0);
  CHECK(v(0.5) == doctest::Approx(1e-3));
  CHECK(v(0.5 + 0.1) == 0.0);
  CHECK(v(0.5 + 0.099) > 0.0);
}

TEST_CASE("potential agrees with the closed form oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto [n, a] : {std::pair{8, 1.0}, std::pair{16, 1.9}, std::pair{10, 2.0}}) {
    const PerturbationParams p = params(n, a, 3.0);
    const PeriodicFunction v = make_hn(p).potential();
    const oracle::Family f{n, a, 3.0, true};
    for (int i = 0; i < 200; ++i) {
      // Half the samples inside the bump.
      const double x = i % 2 ? u(rng) : 0.5 + (u(rng) - 0.5) * 2.0 * std::pow(n, -a);
      CHECK(v(x) == doctest::Approx(static_cast<double>(f.v(x))).epsilon(1e-12));
      CHECK(v.derivative(x, 1) == doctest::Approx(static_cast<double>(f.v1(x))).epsilon(1e-10).scale(1e-12));
      CHECK(v.derivative(x, 2) == doctest::Approx(static_cast<double>(f.v2(x))).epsilon(1e-10).scale(1e-10));
    }
  }
}

TEST_CASE("C^2 norm of the bump at n = 10, a = 1") {
  const PerturbationParams p = params(10, 1.0, 3.0);
  const PeriodicFunction v = make_vn(p);
  oracle::Family f{10, 1.0, 3.0, true};
  f.cosine = false;
  const double sup = static_cast<double>(oracle::grid_cr_norm(f, 2));
  const double estimate = cr_norm_estimate(v, 2.0);
  CHECK(estimate == doctest::Approx(sup).epsilon(1e-4));
  // 10^-3 height times 10^2 from two derivatives of the unit profile.
  CHECK(estimate <= 25.0 * 1e-1);
}

TEST_CASE("rescaling") {
  const PeriodicFunction u = make_un(params(10, 2.0));
  CHECK(rescale(u, 1)(0.3) == u(0.3));
  CHECK(rescale(u, 5)(0.1) == doctest::Approx(0.0008));
  const PeriodicFunction Q = rescale(u, 3);
  CHECK(Q.period() == doctest::Approx(1.0 / 3.0));
  CHECK(Q(1.0 / 6.0) == doctest::Approx(u(0.5) / 9.0));
}

TEST_CASE("composite value") {
  const PerturbationParams p = params(10, 2.0);
  const GeneratingFunction h = make_hn(p);
  CHECK(h(0.0, 0.0) == 0.0);
  CHECK(h(0.0, 0.5) == doctest::Approx(0.125 + 0.02 + std::pow(10.0, -8.0)));
  CHECK(h.d12(0.1, 0.4) == -1.0);
  CHECK(make_hn(p, false)(0.0, 0.5) == doctest::Approx(0.145));
}

TEST_CASE("translation symmetry of rescaled potentials") {
  const PerturbationParams p = params(8, 1.0, 3.0);
  CHECK(make_hn(p).translation_symmetry() == 1.0);
  CHECK(make_htilde(p, 4).translation_symmetry() == doctest::Approx(0.25));
  CHECK(make_h0().translation_symmetry() == 1.0);
}

TEST_CASE("named members") {
  const PerturbationParams p = params(8, 1.0, 3.0);
  CHECK(make_named("h0", p).is_integrable());
  CHECK(make_named("hbar_n", p)(0.0, 0.5) == doctest::Approx(0.125 + 0.25));
  CHECK_THROWS_AS(make_named("nope", p), Error);
}

TEST_CASE("invalid parameters") {
  CHECK_THROWS_AS(params(0, 1.0).validate(), Error);
  CHECK_THROWS_AS(params(8, -1.0).validate(), Error);
  CHECK_THROWS_AS(params(8, 1.0, -2.0).validate(), Error);
  CHECK_THROWS_AS(make_vn(params(1, 1.0)), Error);
}

TEST_CASE("convergents of the golden mean") {
  const auto c = dirichlet_approximants(kGolden, 4);
  REQUIRE(c.size() == 4);
  const auto ref = oracle::convergents(static_cast<oracle::real>(kGolden), 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(c[i].q == ref[i].q);
    CHECK(c[i].p == ref[i].p);
    CHECK(std::abs(c[i].q * kGolden - c[i].p) < 1.0 / c[i].q);
  }
  CHECK(c[0].q == 2);
  CHECK(c[3].q == 8);
}

TEST_CASE("convergents of pi - 3") {
  const double omega = std::numbers::pi - 3.0;
  const auto c = dirichlet_approximants(omega, 3);
  const auto ref = oracle::convergents(std::numbers::pi_v<long double> - 3, 3);
  REQUIRE(c.size() == 3);
  CHECK(c[0].p == 1);
  CHECK(c[0].q == 7);
  CHECK(std::abs(7 * omega - 1) < 1.0 / 7.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(c[i].q == ref[i].q);
}

TEST_CASE("rational input is rejected") {
  CHECK(looks_rational(0.5));
  CHECK(looks_rational(2.0 / 7.0));
  CHECK_FALSE(looks_rational(kGolden));
  try {
    dirichlet_approximants(1.0 / 3.0, 4);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RationalInput);
  }
}

TEST_CASE("C^r norm estimates") {
  CHECK(cr_norm_estimate(PeriodicFunction(), 3.0) == 0.0);
  const PerturbationParams p = params(20, 1.9);
  const GeneratingFunction ht = make_htilde(p, 20);
  const PeriodicFunction& Q = ht.potential();
  oracle::Family f{20, 1.9, 4 * 1.9, true, 20};
  for (int r = 0; r <= 3; ++r) {
    CHECK(cr_norm_estimate(Q, r) == doctest::Approx(static_cast<double>(oracle::grid_cr_norm(f, r))).epsilon(1e-3));
  }
  CHECK_THROWS_AS(cr_norm_estimate(Q, 5.0), Error);
  // Fractional orders sit between the neighbouring integer ones.
  const double lo = cr_norm_estimate(Q, 2.0), mid = cr_norm_estimate(Q, 2.5), hi = cr_norm_estimate(Q, 3.0);
  CHECK(mid >= lo);
  CHECK(mid <= hi * 1.01);
}

TEST_CASE("twist map steps") {
  const GeneratingFunction h0 = make_h0();
  const PhasePoint s = twist_map_step(h0, {0.3, 0.2});
  CHECK(s.x == doctest::Approx(0.5));
  CHECK(s.y == doctest::Approx(0.2));

  const GeneratingFunction h = make_hn(params(10, 2.0));
  const PhasePoint t = twist_map_step(h, {0.0, 0.5});
  CHECK(t.x == doctest::Approx(0.5));
  CHECK(t.y == doctest::Approx(0.5));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const GeneratingFunction hn = make_hn(params(8, 1.0, 3.0));
  for (int i = 0; i < 5; ++i) {
    const double x = u(rng), y = u(rng);
    const auto step = [&](oracle::real a, oracle::real b) {
      const PhasePoint q = twist_map_step(hn, {static_cast<double>(a), static_cast<double>(b)});
      return std::pair<oracle::real, oracle::real>{q.x, q.y};
    };
    CHECK(static_cast<double>(oracle::jacobian_det(step, x, y)) == doctest::Approx(1.0).epsilon(1e-8));
    const PhasePoint e = twist_map_step(hn, {x, y}, TwistSolve::Explicit);
    const PhasePoint im = twist_map_step(hn, {x, y}, TwistSolve::Implicit);
    CHECK(im.x == doctest::Approx(e.x).epsilon(1e-12));
    CHECK(im.y == doctest::Approx(e.y).epsilon(1e-12));
  }
}

TEST_CASE("shear orbit rotation") {
  const auto orbit = twist_orbit(make_h0(), {0.1, kGolden}, 1000);
  REQUIRE(orbit.size() == 1001);
  CHECK(std::abs((orbit.back().x - orbit.front().x) / 1000.0 - kGolden) < 1e-12);
}

TEST_CASE("reflection swaps orientation") {
  const GeneratingFunction h = make_hn(params(8, 1.0, 3.0));
  const GeneratingFunction r = h.reflected();
  CHECK(r(0.2, 0.35) == doctest::Approx(h(-0.2, -0.35)));
}
