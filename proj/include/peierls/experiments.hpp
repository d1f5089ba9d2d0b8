#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "peierls/barrier.hpp"
#include "peierls/generating.hpp"

namespace peierls {

/// omega = sign * coefficient * n^(-a/2 - delta).
struct OmegaRule {
  double coefficient = 0.6180339887498949;
  bool negative = false;

  double operator()(const PerturbationParams& params) const;
};

struct ExperimentSpec {
  std::string name;
  std::vector<int> n_range;
  PerturbationParams params;
  OmegaRule omega_rule;
  int grid_size = 64;
  std::string output_path;

  /// xi samples across [1/2 - n^-a, 1/2 + n^-a] (approx, theorem-mr).
  int window_points = 17;
  int convergents = 12;
  /// Norm order and denominators for mcor; herm uses q_range as the
  /// rescaling factors.
  double r = 3.0;
  std::vector<int> q_range;
  std::uint64_t seed = 0x5eedULL;
  unsigned threads = 0;
  BarrierOptions barrier;

  /// Throws Error(InvalidArgument) on an empty or unsorted n range, and for
  /// mcor when a > 2 - 2 delta.
  void validate() const;
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int point_count = 0;
};

/// Least squares fit of log y against log x. Needs three positive points.
FitResult fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

using Cell = std::variant<std::string, double, long long, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  bool operator==(const Table&) const = default;
};

/// One hard assertion with the numbers behind it.
struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double bound = 0.0;
};

struct NamedFit {
  std::string name;
  FitResult fit;
  /// r2 below 0.95.
  bool low_confidence = false;
};

struct StudyResult {
  std::string name;
  Table table;
  std::vector<NamedFit> fits;
  std::vector<Check> checks;

  bool passed() const;
};

StudyResult run_spacing_study(const ExperimentSpec& spec);
StudyResult run_lower_bound_study(const ExperimentSpec& spec);
StudyResult run_approximation_study(const ExperimentSpec& spec);
StudyResult run_counting_study(const ExperimentSpec& spec);
StudyResult run_theorem_mr(const ExperimentSpec& spec);
StudyResult run_mcor_study(const ExperimentSpec& spec);
StudyResult run_lemma_herm_check(const ExperimentSpec& spec);

/// Dispatches on spec.name: spacing, lowerbound, approx, counting,
/// theorem-mr, mcor, herm.
StudyResult run_study(const ExperimentSpec& spec);

/// Spec with the documented defaults for a study name.
ExperimentSpec default_spec(const std::string& name);

}  // namespace peierls
