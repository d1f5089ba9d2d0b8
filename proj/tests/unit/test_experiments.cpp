#include <cmath>

#include "doctest.h"
#include "peierls/error.hpp"
#include "peierls/experiments.hpp"

using namespace peierls;

namespace {

const Check* find_check(const StudyResult& s, const std::string& prefix) {
  for (const auto& c : s.checks) {
    if (c.name.rfind(prefix, 0) == 0) return &c;
  }
  return nullptr;
}

int column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

TEST_CASE("log-log fits") {
  const FitResult f = fit_loglog({1, 2, 4, 8}, {3, 3 * std::pow(2, -0.7), 3 * std::pow(4, -0.7), 3 * std::pow(8, -0.7)});
  CHECK(f.slope == doctest::Approx(-0.7));
  CHECK(f.intercept == doctest::Approx(std::log(3.0)));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK(f.point_count == 4);
  CHECK_THROWS_AS(fit_loglog({1, 2}, {1, 2}), Error);
  CHECK_THROWS_AS(fit_loglog({1, 2, 3}, {1, 0, 2}), Error);
}

TEST_CASE("frequency rule") {
  PerturbationParams p;
  p.n = 16;
  p.a = 1.0;
  p.delta = 0.05;
  OmegaRule rule;
  CHECK(rule(p) == doctest::Approx(0.6180339887498949 * std::pow(16.0, -0.55)));
  rule.negative = true;
  CHECK(rule(p) < 0.0);
}

TEST_CASE("spec validation") {
  ExperimentSpec s = default_spec("lowerbound");
  CHECK_NOTHROW(s.validate());
  s.n_range = {};
  CHECK_THROWS_AS(s.validate(), Error);
  s.n_range = {16, 8};
  CHECK_THROWS_AS(s.validate(), Error);
  s = default_spec("mcor");
  s.params.a = 2.5;
  CHECK_THROWS_AS(s.validate(), Error);
  CHECK_THROWS_AS(default_spec("nope"), Error);
}

TEST_CASE("documented defaults") {
  CHECK(default_spec("lowerbound").params.resolved_s() == 3.0);
  CHECK(default_spec("lowerbound").n_range == std::vector<int>{8, 16, 32});
  CHECK(default_spec("theorem-mr").n_range == std::vector<int>{16});
  CHECK(default_spec("theorem-mr").params.a == 1.0);
  CHECK(default_spec("mcor").params.a == 1.9);
  CHECK(default_spec("mcor").q_range == std::vector<int>{8, 16, 32, 64});
  CHECK(default_spec("spacing").n_range == std::vector<int>{16, 32, 64, 128});
}

TEST_CASE("lower bound study") {
  const StudyResult r = run_study(default_spec("lowerbound"));
  CHECK(r.passed());
  const int status = column(r.table, "status");
  REQUIRE(status >= 0);
  CHECK(std::get<std::string>(r.table.rows.back()[static_cast<std::size_t>(status)]) == "integrable");
  CHECK(find_check(r, "P(1/2) >= n^-s at n=8")->value >= 1.953e-3);
  CHECK(find_check(r, "P(1/2) >= n^-s at n=16")->value >= 2.441e-4);
}

TEST_CASE("spacing study at the default exponent") {
  const StudyResult r = run_spacing_study(default_spec("spacing"));
  CHECK(r.passed());
  REQUIRE(r.fits.size() == 1);
  CHECK(r.fits[0].fit.slope == doctest::Approx(-0.95).epsilon(0.05 / 0.95));
  CHECK(std::string(r.table.columns.front()) == "function");
}

TEST_CASE("spacing study at a = 2") {
  ExperimentSpec s = default_spec("spacing");
  s.params.a = 2.0;
  const StudyResult r = run_spacing_study(s);
  REQUIRE(r.fits.size() == 1);
  CHECK(std::abs(r.fits[0].fit.slope + 1.0) <= 0.1);
}

TEST_CASE("spacing study at a = 1 has an empty window at n = 16") {
  ExperimentSpec s = default_spec("spacing");
  s.params.a = 1.0;
  const StudyResult r = run_spacing_study(s);
  const int status = column(r.table, "status");
  CHECK(std::get<std::string>(r.table.rows[0][static_cast<std::size_t>(status)]) == "empty-window");
  const Check* slope = find_check(r, "slope");
  REQUIRE(slope != nullptr);
  CHECK_FALSE(slope->passed);
  CHECK(std::isnan(slope->value));
}

TEST_CASE("double gaps at n = 16, a = 1 in the central window") {
  ExperimentSpec s = default_spec("spacing");
  s.params.a = 1.0;
  s.n_range = {16, 32, 64};
  const StudyResult r = run_spacing_study(s);
  // The bound holds wherever the window holds points.
  for (const char* n : {"32", "64"}) {
    const Check* c = find_check(r, std::string("double gaps >= 2 n^-a/2 at n=") + n);
    REQUIRE(c != nullptr);
    CHECK(c->passed);
  }
}

TEST_CASE("mcor study") {
  const StudyResult r = run_mcor_study(default_spec("mcor"));
  CHECK(r.passed());
  REQUIRE(r.fits.size() == 1);
  CHECK(std::abs(r.fits[0].fit.slope + 0.9) <= 0.15 * 0.9);
  const int norm = column(r.table, "norm_estimate");
  CHECK(std::get<double>(r.table.rows.back()[static_cast<std::size_t>(norm)]) == 0.0);

  ExperimentSpec s0 = default_spec("mcor");
  s0.r = 0.0;
  const StudyResult r0 = run_mcor_study(s0);
  CHECK(std::abs(r0.fits[0].fit.slope + 3.9) <= 0.3);
}

TEST_CASE("mcor constant carries over to q = 20") {
  ExperimentSpec s = default_spec("mcor");
  s.q_range = {8, 20, 64};
  const StudyResult r = run_mcor_study(s);
  const int norm = column(r.table, "norm_estimate");
  const double n8 = std::get<double>(r.table.rows[0][static_cast<std::size_t>(norm)]);
  const double n20 = std::get<double>(r.table.rows[1][static_cast<std::size_t>(norm)]);
  const double C = n8 * std::pow(8.0, 0.9);
  CHECK(n20 <= 1.15 * C * std::pow(20.0, -0.9));
}

TEST_CASE("shear counting sandwich") {
  const StudyResult r = run_counting_study(default_spec("counting"));
  for (int k = 1; k <= 3; ++k) {
    const Check* c = find_check(r, "shear sandwich k=" + std::to_string(k));
    REQUIRE(c != nullptr);
    CHECK(c->passed);
  }
  CHECK(find_check(r, "control integrable")->passed);
}

TEST_CASE("unknown study") {
  ExperimentSpec s = default_spec("lowerbound");
  s.name = "nope";
  CHECK_THROWS_AS(run_study(s), Error);
}
