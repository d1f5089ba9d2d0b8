#pragma once

#include <memory>
#include <mutex>
#include <vector>

#include "peierls/configuration.hpp"
#include "peierls/generating.hpp"
#include "peierls/minimizer.hpp"

namespace peierls {

struct BarrierOptions {
  MinimizerOptions minimizer;
  /// Heteroclinic window in periods; 0 selects it automatically.
  int width = 0;
  /// Irrational walk stops after three consecutive convergent values agree
  /// to this tolerance.
  double stabilization_tolerance = 1e-10;
  /// xi closer than this to a Mather point gets barrier 0.
  double snap_tolerance = 1e-12;
  /// Worker threads for profiles; 0 uses the hardware concurrency.
  unsigned threads = 0;
};

struct HeteroclinicActions {
  double K = 0.0;
  double Kxi = 0.0;
  int truncation_width = 0;
};

struct BarrierPoint {
  double xi = 0.0;
  double value = 0.0;
  bool converged = true;
  double residual = 0.0;
  int iterations = 0;
};

/// The 0+ barrier as K(xi) - K: minimal monotone heteroclinic action from 0
/// to 1 through xi, minus the unconstrained one, both on the same window.
class ZeroPlusBarrier {
 public:
  explicit ZeroPlusBarrier(const GeneratingFunction& h, const BarrierOptions& options = {});

  HeteroclinicActions actions(double xi) const;
  BarrierPoint evaluate(double xi) const;
  double operator()(double xi) const { return evaluate(xi).value; }

  const AdvancingResult& heteroclinic() const { return heteroclinic_; }

 private:
  GeneratingFunction h_;
  BarrierOptions options_;
  AdvancingResult heteroclinic_;
};

/// Barrier for p/q, p/q+ or p/q-: the minimum over configurations in the
/// box between the Mather neighbours of xi, pinned at x_0 = xi, of the excess
/// action over the lower neighbour.
class RationalBarrier {
 public:
  RationalBarrier(const GeneratingFunction& h, long p, long q, SymbolVariant variant,
                  const BarrierOptions& options = {});

  BarrierPoint evaluate(double xi) const;
  double operator()(double xi) const { return evaluate(xi).value; }

  /// Sorted Mather points in [0, 1) resolved by the window.
  std::vector<double> mather_points() const;
  const Configuration& periodic_orbit() const { return orbit_; }
  /// Heteroclinic for the +/- variants; empty for the exact variant.
  const AdvancingResult& heteroclinic() const { return heteroclinic_; }

 private:
  struct MatherPoint {
    double value;
    bool on_orbit;
    long index;
    double shift;
  };

  BarrierPoint evaluate_exact(double xi) const;
  BarrierPoint evaluate_advancing(double xi) const;
  double neighbour(const MatherPoint& m, long j) const;

  GeneratingFunction h_;
  long p_;
  long q_;
  SymbolVariant variant_;
  BarrierOptions options_;
  Configuration orbit_;
  AdvancingResult heteroclinic_;
  std::vector<MatherPoint> points_;
  std::vector<MatherPoint> orbit_points_;
  // Orbit points before near-duplicates are merged.
  std::vector<MatherPoint> orbit_all_;
};

struct ConvergentStep {
  long p = 0;
  long q = 1;
  SymbolVariant variant = SymbolVariant::Plus;
  double value = 0.0;
  bool degenerate = false;
};

struct IrrationalValue {
  double value = 0.0;
  double error_estimate = 0.0;
  bool stable = false;
  std::vector<ConvergentStep> steps;
};

/// Barrier at irrational omega through successive convergents, each
/// evaluated with the variant pointing toward omega. Negative omega is
/// handled by reflecting x to -x.
class IrrationalBarrier {
 public:
  IrrationalBarrier(const GeneratingFunction& h, double omega, int convergents,
                    const BarrierOptions& options = {});

  IrrationalValue evaluate(double xi) const;

 private:
  struct Stage {
    DirichletApproximant approximant;
    SymbolVariant variant;
    std::shared_ptr<const RationalBarrier> barrier;
    bool degenerate = false;
  };
  const Stage& stage(std::size_t m) const;

  GeneratingFunction h_;
  double omega_;
  bool reflect_;
  BarrierOptions options_;
  std::vector<DirichletApproximant> approximants_;
  mutable std::mutex mutex_;
  mutable std::vector<std::shared_ptr<Stage>> stages_;
};

double peierls_zero_plus(const GeneratingFunction& h, double xi, const BarrierOptions& options = {});

double peierls_rational(const GeneratingFunction& h, long p, long q, SymbolVariant variant, double xi,
                        const BarrierOptions& options = {});

IrrationalValue peierls_irrational(const GeneratingFunction& h, double omega, double xi, int convergents,
                                   const BarrierOptions& options = {});

struct BarrierProfile {
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<char> converged;
  RotationSymbol symbol;
  double sup_value = 0.0;
  /// Worst residual, total iterations, and whether every point converged.
  SolveReport metadata;
};

/// Uniform grid xi_j = j / grid_size, j < grid_size; failed points carry NaN
/// and converged = 0.
BarrierProfile barrier_profile(const GeneratingFunction& h, const RotationSymbol& symbol, int grid_size,
                               const BarrierOptions& options = {}, int convergents = 12);

/// sup P <= tol. Throws Error(IncompleteProfile) if a point failed.
bool invariant_circle_exists(const BarrierProfile& profile, double tol);

}  // namespace peierls
