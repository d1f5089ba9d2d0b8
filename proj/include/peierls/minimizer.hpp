#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "peierls/configuration.hpp"
#include "peierls/generating.hpp"

namespace peierls {

struct MinimizerOptions {
  double tolerance = 1e-11;
  double tail_tolerance = 1e-9;
  int max_sweeps = 100000;
  /// Random-phase starts tried by minimize_periodic (besides the fixed ones).
  int restarts = 3;
  std::uint64_t seed = 0x5eedULL;
};

struct MinimizeResult {
  Configuration config;
  SolveReport report;
};

/// Heteroclinic between two neighbouring periodic minimizers.
struct AdvancingResult {
  Configuration config;
  SolveReport report;
  /// Asymptotic orbits at the left and right end of the window.
  Configuration left_orbit;
  Configuration right_orbit;
  int width = 0;
};

/// Segment action, or the one-period action for periodic configurations.
double action(const GeneratingFunction& h, const Configuration& c);

/// d1 h(x_i, x_{i+1}) + d2 h(x_{i-1}, x_i) at the interior indices (all q
/// indices for periodic configurations).
std::vector<double> stationarity_residual(const GeneratingFunction& h, const Configuration& c);

double residual_inf(const GeneratingFunction& h, const Configuration& c);

/// Shifts a periodic configuration by an index and an integer so that x_0 is
/// the smallest orbit point in [0, 1).
Configuration normalized(const Configuration& c);

/// Lowest-action p/q periodic configuration. With `init` the solve starts
/// from it alone and the result is not normalized.
MinimizeResult minimize_periodic(const GeneratingFunction& h, long p, long q,
                                 const std::optional<Configuration>& init = std::nullopt,
                                 const MinimizerOptions& options = {});

/// True when the p/q minimizers are not isolated (a continuum, as for h0).
bool periodic_degenerate(const GeneratingFunction& h, const Configuration& orbit,
                         const MinimizerOptions& options = {});

/// log of the larger Floquet multiplier per period of a periodic orbit; 0
/// when the orbit is not hyperbolic.
double periodic_log_multiplier(const GeneratingFunction& h, const Configuration& orbit);

/// The translate of `orbit` whose x_0 is the next point above orbit x_0
/// among the orbit points and their shifts by multiples of `tau`.
Configuration next_orbit(const Configuration& orbit, double tau = 1.0);

/// Window length in periods for a heteroclinic leaving `orbit`.
int heteroclinic_width(const GeneratingFunction& h, const Configuration& orbit);

/// p/q+ (variant Plus) or p/q- (Minus) heteroclinic on a window of
/// width * q bonds with pinned ends. width = 0 picks the width from
/// heteroclinic_width and doubles it until both tails are within the tail
/// tolerance. Throws Error(DegenerateSymbol) when the minimizers form a
/// continuum.
AdvancingResult minimize_advancing(const GeneratingFunction& h, long p, long q,
                                   SymbolVariant variant, int width = 0,
                                   const MinimizerOptions& options = {});

/// Exact p/q for periodic configurations, else the end-to-end slope.
double rotation_number(const Configuration& c);

/// Sign changes of x_i - y_i over the common index range.
int crossing_count(const Configuration& a, const Configuration& b);

struct Gap {
  double x = 0.0;
  double gap = 0.0;
};

/// (x_i, x_{i+1} - x_i) for the x_i inside the window.
std::vector<Gap> spacing_profile(const Configuration& c, const Interval& window);

/// Indices with x_i in the closed interval (one period for periodic c).
int count_in_interval(const Configuration& c, const Interval& interval);
int count_in_interval(const std::vector<double>& points, const Interval& interval);

/// Configuration holding the x coordinates of an orbit.
Configuration orbit_configuration(const std::vector<PhasePoint>& orbit);

/// Smallest eigenvalue of the second variation; for finite segments the end
/// values are held fixed.
double second_variation_min_eigenvalue(const GeneratingFunction& h, const Configuration& c);

}  // namespace peierls
