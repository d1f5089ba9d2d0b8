#pragma once

// Discrete action minimization on a chain x_0 .. x_N (or one period of a
// periodic chain) with pinned coordinates and optional box constraints.

#include <vector>

#include "peierls/configuration.hpp"
#include "peierls/generating.hpp"

namespace peierls::detail {

struct ChainProblem {
  const GeneratingFunction* h = nullptr;
  std::vector<double> x;
  std::vector<char> pinned;
  /// When set, x holds one period x_0 .. x_{q-1} with x_{i+q} = x_i + p.
  bool periodic = false;
  long p = 0;
  /// Empty, or per-coordinate bounds.
  std::vector<double> lower;
  std::vector<double> upper;
  /// Relaxation keeps x_{i-1} <= x_i <= x_{i+1}.
  bool monotone = false;

  std::size_t size() const { return x.size(); }
  std::size_t bond_count() const { return periodic ? x.size() : x.size() - 1; }
  /// Value at chain index j, extended periodically when `periodic`.
  double extended(long j) const;
};

struct ChainOptions {
  double tolerance = 1e-11;
  int warmup_sweeps = 20;
  int max_sweeps = 100000;
  int max_newton = 500;
};

ChainProblem make_chain(const GeneratingFunction& h, std::vector<double> x);

/// Compensated sum of h over all bonds.
double chain_action(const ChainProblem& chain);

/// d(action)/dx_i; pinned coordinates get 0.
std::vector<double> chain_gradient(const ChainProblem& chain);

/// Sup norm of the gradient over coordinates that are free and not held at
/// a bound by an outward-pointing gradient.
double projected_residual(const ChainProblem& chain, const std::vector<double>& gradient);

/// Dense second variation over all coordinates (pinned ones included); used
/// for eigenvalue checks on short chains.
std::vector<std::vector<double>> chain_hessian_dense(const ChainProblem& chain);

/// Smallest eigenvalue of the Hessian restricted to the free coordinates.
double min_hessian_eigenvalue(const ChainProblem& chain);

SolveReport solve_chain(ChainProblem& chain, const ChainOptions& options = {});

}  // namespace peierls::detail
