#pragma once

// Riemannian gradient descent for H_N on (S^2)^N and the multi-start driver
// that maintains the minimum ledger.

#include "coulomb/energy.hpp"
#include "coulomb/ledger.hpp"

#include <cstdint>
#include <optional>
#include <span>

namespace coulomb {

struct MinimizeParams {
  int max_iters = 20000;
  /// Stop once max |grad component| <= grad_tol; 0 means 1e-10 * n.
  double grad_tol = 0.0;
  double initial_step = 1e-2;
  double backtrack_factor = 0.5;
  double armijo_c = 1e-4;
  int restarts = 32;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
  double tolerance_for(Eigen::Index n) const { return grad_tol > 0.0 ? grad_tol : 1e-10 * static_cast<double>(n); }
};

struct MinimizeResult {
  Configurationd config;
  double energy;
  double grad_norm;  ///< max |grad component| at the returned point
  int iterations;
  bool converged;
  bool stalled;      ///< line search could not decrease H above step 1e-16
};

/// Steepest descent in the tangent planes with renormalization as the
/// retraction. Trial steps come from the Barzilai-Borwein formula and are
/// backtracked until the Armijo condition holds; every accepted step
/// strictly decreases H. Decreases below 1e-13 n^2, where rounding of the
/// stored coordinates dominates, are measured by the trapezoid rule on the
/// tangent gradients instead of by differencing H.
MinimizeResult local_minimize(const Configurationd& start, const MinimizeParams& params);

/// max_i |component of the Riemannian gradient|
double gradient_inf_norm(const Configurationd& c);

struct EstimateResult {
  MinimumLedgerEntry entry;   ///< best configuration found by this call
  MinimizeResult best;
  double separation;
  bool separation_ok;         ///< min separation >= 2/sqrt(n-1) - 1e-6
  bool ledger_improved;
};

/// Best local minimum over `params.restarts` uniform random starts (restart
/// r seeded with split_seed(seed, r)) and the optional warm starts. Ties
/// within 1e-12 go to the first found, restarts before warm starts.
EstimateResult estimate_min(int n, const MinimizeParams& params,
                            std::span<const Configurationd> warm_starts = {},
                            MinimumLedger* ledger = nullptr);

/// Symmetric configurations with known energy for n in {2, 3, 4, 6, 12}:
/// antipodal pair, equatorial triangle, tetrahedron, octahedron, icosahedron.
std::optional<Configurationd> polyhedral_configuration(int n);

}  // namespace coulomb
