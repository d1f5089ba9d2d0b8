// Slower end-to-end study runs.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "peierls/experiments.hpp"

using namespace peierls;

namespace {

int column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i] == name) return static_cast<int>(i);
  }
  FAIL("no column " << name);
  return -1;
}

template <class T>
T cell(const Table& t, std::size_t row, const std::string& name) {
  return std::get<T>(t.rows[row][static_cast<std::size_t>(column(t, name))]);
}

}  // namespace

TEST_CASE("theorem-mr verdicts agree under omega -> -omega") {
  const StudyResult r = run_theorem_mr(default_spec("theorem-mr"));
  CHECK(r.passed());
  std::vector<bool> hn, h0;
  for (std::size_t i = 0; i < r.table.rows.size(); ++i) {
    const bool destroyed = cell<bool>(r.table, i, "circle_destroyed");
    (cell<std::string>(r.table, i, "function") == "hn" ? hn : h0).push_back(destroyed);
    if (cell<std::string>(r.table, i, "function") == "hn") {
      CHECK(cell<double>(r.table, i, "sup_barrier") > std::pow(16.0, -3.0) / 2);
    }
  }
  REQUIRE(hn.size() == 2);
  CHECK(hn[0]);
  CHECK(hn[1]);
  for (bool d : h0) CHECK_FALSE(d);
}

TEST_CASE("rescaled systems share the verdict") {
  ExperimentSpec s = default_spec("herm");
  s.q_range = {1, 4};
  const StudyResult r = run_lemma_herm_check(s);
  CHECK(r.passed());
  for (std::size_t i = 0; i < r.table.rows.size(); ++i) {
    if (cell<std::string>(r.table, i, "function") != "hn") continue;
    CHECK(cell<double>(r.table, i, "stationarity_residual") <= 1e-9);
    CHECK(cell<double>(r.table, i, "identity_error") <= 1e-9);
    CHECK(cell<bool>(r.table, i, "pass"));
  }
}

TEST_CASE("approximation study control and stability") {
  const StudyResult r = run_approximation_study(default_spec("approx"));
  const std::size_t last = r.table.rows.size() - 1;
  CHECK(cell<std::string>(r.table, last, "function") == "h0");
  CHECK(cell<double>(r.table, last, "sup_discrepancy") == 0.0);
  for (std::size_t i = 0; i < last; ++i) {
    CHECK(cell<std::string>(r.table, i, "status") == "ok");
    CHECK(cell<double>(r.table, i, "sup_discrepancy") < 1e-4);
  }
}
