#include "chain_solver.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>

namespace peierls::detail {
namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct NeumaierSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + carry; }
};

long floor_div(long a, long b) {
  long d = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --d;
  return d;
}

bool has_box(const ChainProblem& c) { return !c.lower.empty(); }

// Local index of the bond endpoints; b connects b and b + 1.
double bond_value(const ChainProblem& c, long b) {
  return (*c.h)(c.extended(b), c.extended(b + 1));
}

// Bonds containing coordinate i, without repetition.
int bonds_of(const ChainProblem& c, long i, long out[2]) {
  const long n = static_cast<long>(c.size());
  if (c.periodic) {
    if (n == 1) {
      out[0] = 0;
      return 1;
    }
    out[0] = i - 1;
    out[1] = i;
    if (n == 2) {
      // Bonds -1 and 1 are the same bond up to translation; keep 0 and 1.
      out[0] = 0;
      out[1] = 1;
    }
    return 2;
  }
  int count = 0;
  if (i > 0) out[count++] = i - 1;
  if (i < n - 1) out[count++] = i;
  return count;
}

double local_energy(const ChainProblem& c, long i) {
  long bonds[2];
  const int m = bonds_of(c, i, bonds);
  double e = 0.0;
  for (int k = 0; k < m; ++k) e += bond_value(c, bonds[k]);
  return e;
}

// Upper bound on d11 + d22 + 2|d12| for the relaxation fallback step.
double curvature_majorant(const GeneratingFunction& h) {
  const auto& v = h.potential();
  double sup = 0.0;
  if (!v.is_zero()) {
    const int grid = 2048;
    for (int i = 0; i < grid; ++i) {
      sup = std::max(sup, std::abs(v.derivative(v.period() * i / grid, 2)));
    }
    for (const auto& r : v.fine_regions()) {
      for (int i = 0; i <= 256; ++i) sup = std::max(sup, std::abs(v.derivative(r.lo + r.length() * i / 256, 2)));
    }
  }
  return 4.0 + 1.5 * sup;
}

double clamp_to_box(const ChainProblem& c, std::size_t i, double v) {
  if (!has_box(c)) return v;
  return std::clamp(v, c.lower[i], c.upper[i]);
}

void relaxation_sweep(ChainProblem& c, double majorant) {
  const long n = static_cast<long>(c.size());
  long bonds[2];
  for (long i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    if (c.pinned[iu]) continue;
    const double current = c.x[iu];
    const double e0 = local_energy(c, i);
    // Gradient and curvature of the local energy.
    double g = 0.0;
    double curv = 0.0;
    const int m = bonds_of(c, i, bonds);
    for (int k = 0; k < m; ++k) {
      const long b = bonds[k];
      const double xl = c.extended(b);
      const double xr = c.extended(b + 1);
      const bool left_is_i = c.periodic ? ((b % n + n) % n == i) : (b == i);
      const bool right_is_i = c.periodic ? (((b + 1) % n + n) % n == i) : (b + 1 == i);
      if (left_is_i) {
        g += c.h->d1(xl, xr);
        curv += c.h->d11(xl, xr);
      }
      if (right_is_i) {
        g += c.h->d2(xl, xr);
        curv += c.h->d22(xl, xr);
      }
      if (left_is_i && right_is_i) curv += 2.0 * c.h->d12(xl, xr);
    }
    auto try_value = [&](double v) {
      v = clamp_to_box(c, iu, v);
      if (c.monotone && !c.periodic && i > 0 && i < n - 1) {
        const double lo = c.x[iu - 1];
        const double hi = c.x[iu + 1];
        if (!(v > lo && v < hi)) v = 0.5 * (lo + hi);
      }
      c.x[iu] = v;
      const double e = local_energy(c, i);
      if (e <= e0) return true;
      c.x[iu] = current;
      return false;
    };
    if (curv > 0.0 && try_value(current - g / curv)) continue;
    try_value(current - g / majorant);
  }
}

struct WorkingSet {
  std::vector<long> global_of_local;
  std::vector<long> local_of_global;
};

WorkingSet working_set(const ChainProblem& c, const std::vector<double>& g) {
  WorkingSet ws;
  ws.local_of_global.assign(c.size(), -1);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.pinned[i]) continue;
    if (has_box(c)) {
      if (c.x[i] <= c.lower[i] && g[i] > 0) continue;
      if (c.x[i] >= c.upper[i] && g[i] < 0) continue;
    }
    ws.local_of_global[i] = static_cast<long>(ws.global_of_local.size());
    ws.global_of_local.push_back(static_cast<long>(i));
  }
  return ws;
}

SparseMatrix working_hessian(const ChainProblem& c, const WorkingSet& ws) {
  const long n = static_cast<long>(c.size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(3 * ws.global_of_local.size() + 4);
  const long bonds = static_cast<long>(c.bond_count());
  for (long b = 0; b < bonds; ++b) {
    const double xl = c.extended(b);
    const double xr = c.extended(b + 1);
    const long il = c.periodic ? b % n : b;
    const long ir = c.periodic ? (b + 1) % n : b + 1;
    const long ll = ws.local_of_global[static_cast<std::size_t>(il)];
    const long lr = ws.local_of_global[static_cast<std::size_t>(ir)];
    const double h11 = c.h->d11(xl, xr);
    const double h22 = c.h->d22(xl, xr);
    const double h12 = c.h->d12(xl, xr);
    if (ll >= 0) trips.emplace_back(ll, ll, h11);
    if (lr >= 0) trips.emplace_back(lr, lr, h22);
    if (ll >= 0 && lr >= 0) {
      if (ll == lr) {
        trips.emplace_back(ll, ll, 2.0 * h12);
      } else {
        trips.emplace_back(ll, lr, h12);
        trips.emplace_back(lr, ll, h12);
      }
    }
  }
  const auto m = static_cast<Eigen::Index>(ws.global_of_local.size());
  SparseMatrix hess(m, m);
  hess.setFromTriplets(trips.begin(), trips.end());
  return hess;
}

double max_abs_diag(const SparseMatrix& m) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) d = std::max(d, std::abs(m.coeff(i, i)));
  return d;
}

}  // namespace

double ChainProblem::extended(long j) const {
  if (!periodic) return x[static_cast<std::size_t>(j)];
  const long q = static_cast<long>(x.size());
  const long wraps = floor_div(j, q);
  return x[static_cast<std::size_t>(j - wraps * q)] + static_cast<double>(wraps * p);
}

ChainProblem make_chain(const GeneratingFunction& h, std::vector<double> x) {
  ChainProblem c;
  c.h = &h;
  c.pinned.assign(x.size(), 0);
  c.x = std::move(x);
  return c;
}

double chain_action(const ChainProblem& c) {
  NeumaierSum s;
  const long bonds = static_cast<long>(c.bond_count());
  for (long b = 0; b < bonds; ++b) s.add(bond_value(c, b));
  return s.value();
}

std::vector<double> chain_gradient(const ChainProblem& c) {
  const long n = static_cast<long>(c.size());
  std::vector<double> g(c.size(), 0.0);
  const long bonds = static_cast<long>(c.bond_count());
  for (long b = 0; b < bonds; ++b) {
    const double xl = c.extended(b);
    const double xr = c.extended(b + 1);
    const long il = c.periodic ? b % n : b;
    const long ir = c.periodic ? (b + 1) % n : b + 1;
    g[static_cast<std::size_t>(il)] += c.h->d1(xl, xr);
    g[static_cast<std::size_t>(ir)] += c.h->d2(xl, xr);
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (c.pinned[i]) g[i] = 0.0;
  }
  return g;
}

double projected_residual(const ChainProblem& c, const std::vector<double>& g) {
  double r = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.pinned[i]) continue;
    if (has_box(c)) {
      if (c.x[i] <= c.lower[i] && g[i] > 0) continue;
      if (c.x[i] >= c.upper[i] && g[i] < 0) continue;
    }
    r = std::max(r, std::abs(g[i]));
  }
  return r;
}

std::vector<std::vector<double>> chain_hessian_dense(const ChainProblem& c) {
  ChainProblem all = c;
  all.pinned.assign(c.size(), 0);
  all.lower.clear();
  all.upper.clear();
  WorkingSet ws = working_set(all, std::vector<double>(c.size(), 0.0));
  SparseMatrix h = working_hessian(all, ws);
  Eigen::MatrixXd dense(h);
  std::vector<std::vector<double>> out(c.size(), std::vector<double>(c.size(), 0.0));
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j) out[i][j] = dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  return out;
}

double min_hessian_eigenvalue(const ChainProblem& c) {
  ChainProblem free = c;
  free.lower.clear();
  free.upper.clear();
  WorkingSet ws = working_set(free, std::vector<double>(c.size(), 0.0));
  SparseMatrix h = working_hessian(free, ws);
  if (h.rows() == 0) return std::numeric_limits<double>::infinity();
  if (h.rows() <= 400) {
    Eigen::MatrixXd dense(h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
  }
  // Sylvester inertia: the number of negative pivots of H - sigma I equals
  // the number of eigenvalues below sigma.
  double radius = 0.0;
  for (Eigen::Index k = 0; k < h.outerSize(); ++k) {
    double row = 0.0;
    for (SparseMatrix::InnerIterator it(h, k); it; ++it) row += std::abs(it.value());
    radius = std::max(radius, row);
  }
  double lo = -radius - 1.0;
  double hi = radius + 1.0;
  SparseMatrix identity(h.rows(), h.cols());
  identity.setIdentity();
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  ldlt.analyzePattern(h);
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    SparseMatrix shifted = h - mid * identity;
    ldlt.factorize(shifted);
    bool below = ldlt.info() != Eigen::Success;
    if (!below) below = (ldlt.vectorD().array() <= 0.0).any();
    (below ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

SolveReport solve_chain(ChainProblem& c, const ChainOptions& options) {
  SolveReport report;
  if (has_box(c)) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!c.pinned[i]) c.x[i] = std::clamp(c.x[i], c.lower[i], c.upper[i]);
    }
  }
  const double majorant = curvature_majorant(*c.h);
  int sweeps = 0;
  for (; sweeps < options.warmup_sweeps; ++sweeps) relaxation_sweep(c, majorant);

  double f = chain_action(c);
  double mu = 0.0;
  int newton = 0;
  std::vector<double> g = chain_gradient(c);
  double residual = projected_residual(c, g);
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  while (residual > options.tolerance) {
    if (newton >= options.max_newton || sweeps >= options.max_sweeps) break;
    ++newton;
    WorkingSet ws = working_set(c, g);
    const auto m = static_cast<Eigen::Index>(ws.global_of_local.size());
    SparseMatrix hess = working_hessian(c, ws);
    Eigen::VectorXd grad(m);
    for (Eigen::Index k = 0; k < m; ++k) grad(k) = g[static_cast<std::size_t>(ws.global_of_local[static_cast<std::size_t>(k)])];
    SparseMatrix identity(m, m);
    identity.setIdentity();
    const double scale = 1.0 + max_abs_diag(hess);
    bool accepted = false;
    ldlt.analyzePattern(hess);
    for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
      SparseMatrix shifted = hess + mu * identity;
      ldlt.factorize(shifted);
      const bool pd = ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all();
      if (!pd) {
        mu = mu == 0.0 ? 1e-8 * scale : mu * 10.0;
        continue;
      }
      Eigen::VectorXd step = ldlt.solve(-grad);
      ChainProblem trial = c;
      double predicted = 0.0;
      for (Eigen::Index k = 0; k < m; ++k) {
        const auto gi = static_cast<std::size_t>(ws.global_of_local[static_cast<std::size_t>(k)]);
        trial.x[gi] = clamp_to_box(c, gi, c.x[gi] + step(k));
        predicted += g[gi] * (trial.x[gi] - c.x[gi]);
      }
      const double ft = chain_action(trial);
      const double slack = 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f)) * std::sqrt(static_cast<double>(c.size()));
      std::vector<double> gt;
      bool accept = ft <= f + 1e-4 * predicted;
      if (!accept && ft <= f + slack) {
        gt = chain_gradient(trial);
        accept = projected_residual(trial, gt) < residual;
      }
      if (accept) {
        c.x.swap(trial.x);
        f = ft;
        g = gt.empty() ? chain_gradient(c) : std::move(gt);
        residual = projected_residual(c, g);
        mu = mu < 1e-14 * scale ? 0.0 : mu * 0.1;
        accepted = true;
      } else {
        mu = mu == 0.0 ? 1e-6 * scale : mu * 10.0;
      }
    }
    if (!accepted) {
      // Newton made no progress: fall back to relaxation for a while.
      for (int k = 0; k < 200 && sweeps < options.max_sweeps; ++k, ++sweeps) relaxation_sweep(c, majorant);
      f = chain_action(c);
      g = chain_gradient(c);
      residual = projected_residual(c, g);
      mu = 0.0;
    }
  }
  report.residual_inf = residual;
  report.iterations = sweeps + newton;
  report.converged = residual <= options.tolerance;
  report.action = f;
  return report;
}

}  // namespace peierls::detail
