#pragma once

// Numerical checks of the concentration bounds for the Coulomb gas on S^2:
// the theorem-level quantities (kappa, C_beta, mean bound), the lower bound
// on log Z behind them, the local perturbation bound around a minimizer,
// the second-derivative bound along perturbation paths, and empirical
// deviation statistics of sampled configurations.
//
// Every "H - min H_N" below is measured against a ledger value, which is an
// upper surrogate of min H_N, so measured gaps can only understate the
// true ones.

#include "coulomb/energy.hpp"
#include "coulomb/gibbs.hpp"
#include "coulomb/ledger.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace coulomb {

struct TheoremQuantities {
  int n;
  double beta;
  double c;
  double kappa;          ///< c (beta/n) log n - log beta - 8 log n
  double log_prob_bound; ///< -kappa n, the log of the failure probability bound
  double prob_bound;     ///< exp(-kappa n); may underflow, use log_prob_bound
  double mean_bound;     ///< (n / beta)(log beta + 8 log n)
  double c_beta_sphere;  ///< n (log beta + 8 log n)
  double delta;          ///< c log n
  /// kappa <= 0: the probability statement carries no information.
  bool trivial;
};

TheoremQuantities theorem_quantities(int n, double beta, double c);

/// -n (1 + log beta + 2 log n + log 20): the value of
/// max_s (-beta s^2 + n log(s^2 / (20 n^3))) attained at s = sqrt(n / beta).
/// Throws std::logic_error if it ever falls below -c_beta_sphere.
double tight_log_z_lower_bound(int n, double beta);

/// Raised when a configuration handed to a minimizer-only check has a
/// gradient above 10 * grad_tol.
class NonMinimizerError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PerturbationTestSpec {
  int n = 2;
  double s = 1.0;  ///< in [0, sqrt(5 n) / 2]
  int trials = 1000;
  int boundary_trials = 1000;
  std::uint64_t seed = 0;

  void validate() const;
  /// s / (sqrt(5) n^{3/2}); every point moves at most arcsin(t).
  double t() const;
};

struct PerturbationReport {
  int n;
  double s;
  double t;
  double radius;       ///< arcsin(t)
  double bound;        ///< s^2
  int trials;
  int boundary_trials;
  int violations;
  double max_excess;   ///< max of H(perturbed) - H(minimizer)
  bool pass;
};

/// Moves each point of `minimizer` along an independent random geodesic by
/// an angle uniform in [0, arcsin t] (interior trials) or exactly arcsin t
/// (boundary trials) and checks H <= H(minimizer) + s^2 + 1e-9.
PerturbationReport check_perturbation_bound(const Configurationd& minimizer, const PerturbationTestSpec& spec,
                                            double grad_tol);

/// y_i(t) = sqrt(1 - a^2 t^2) x_i + a t v_i with unit tangent v_i at x_i.
/// scale a = 1 is the per-point unit reading; a = 1/sqrt(n) makes
/// (v_1, ..., v_n) a unit vector of R^{3n}.
class PerturbationPath {
 public:
  PerturbationPath(Configurationd base, Eigen::Matrix3Xd directions, double scale = 1.0);

  /// Random per-point unit tangent directions.
  template <typename Urbg>
  static PerturbationPath random(const Configurationd& base, Urbg& rng, double scale = 1.0);

  Configurationd at(double t) const;
  /// g(t) - g(0).
  double increment(double t) const;
  /// Central second difference with h = 1e-4 t.
  double second_derivative_fd(double t) const;
  /// Closed form sum_{i != j} (2 <g, g'>^2 / |g|^4 - (<g, g''> + |g'|^2) / |g|^2)
  /// with g = gamma_ij(t).
  double second_derivative_exact(double t) const;

  const Configurationd& base() const { return base_; }
  double scale() const { return scale_; }

 private:
  /// g(t + dt) - g(t) from closed-form pair distances along the path, so the
  /// rounding of normalized points never enters. Accurate relative to |dt|.
  double difference(double t, double dt) const;

  Configurationd base_;
  Eigen::Matrix3Xd directions_;
  double scale_;
};

struct SecondDerivativeReport {
  int n;
  int directions;
  std::vector<double> t_grid;
  double bound;                       ///< 10 n^3
  double max_second_derivative;       ///< finite differences, unit v_i
  double max_second_derivative_scaled;///< finite differences, v_i / sqrt(n)
  double max_fd_relative_error;       ///< finite differences vs closed form
  double max_growth_ratio;            ///< max (g(t) - g(0)) / (5 t^2 n^3)
  double min_increment;               ///< min g(t) - g(0)
  bool pass;
};

/// Second-derivative and growth checks along random perturbation paths.
/// The t grid must lie in (0, 1/(2n)].
SecondDerivativeReport check_second_derivative_bound(const Configurationd& minimizer,
                                                     std::span<const double> t_grid, int directions,
                                                     std::uint64_t seed, double grad_tol);

struct DeviationReport {
  int n;
  double c;
  double beta;
  double ledger_energy;
  int samples;
  int violations;      ///< samples with H - ledger > c log n
  double rate;
  double ci_low;       ///< 95% Wilson interval
  double ci_high;
  double log_theoretical_bound;
  bool trivial;        ///< kappa <= 0
  double lowest_energy;
  bool ledger_improvement;  ///< some sample beat the ledger
  bool pass;           ///< ci_low <= theoretical bound
};

DeviationReport empirical_deviation_rate(std::span<const double> energies, int n, double c, double beta,
                                         double ledger_energy);

/// Configuration form. The lowest sample is offered to `ledger` when it
/// beats the stored value; the report is computed against the value stored
/// before that update.
DeviationReport empirical_deviation_rate(std::span<const Configurationd> samples, int n, double c, double beta,
                                         MinimumLedger& ledger);

struct MeanGapReport {
  int n;
  double beta;
  int samples;
  double mean;
  double standard_error;
  double ledger_energy;
  double gap;    ///< mean - ledger
  double bound;  ///< (n / beta)(log beta + 8 log n)
  bool pass;     ///< gap <= bound + 3 standard errors
};

MeanGapReport mean_energy_gap(std::span<const double> energies, int n, double beta, double ledger_energy);
MeanGapReport mean_energy_gap(std::span<const Configurationd> samples, int n, double beta, const MinimumLedger& ledger);

struct LemmaSweepReport {
  int systems;
  int concentration_checks;
  int expectation_checks;
  int concentration_violations;
  int expectation_violations;
  int rejected_invalid_constants;  ///< deliberately invalid constants that were caught
  double worst_concentration_slack;
  double worst_expectation_slack;
  bool pass;
};

/// Random finite systems (1..max_states states, beta log-uniform in
/// [0.1, 100]) checked exactly against both concentration inequalities with
/// the tight constant and with enlarged constants.
LemmaSweepReport run_lemma_sweep(int systems, std::uint64_t seed, int max_states = 20);

/// 95% Wilson score interval for k successes out of n.
std::pair<double, double> wilson_interval(int successes, int trials);

template <typename Urbg>
PerturbationPath PerturbationPath::random(const Configurationd& base, Urbg& rng, double scale) {
  Eigen::Matrix3Xd v(3, base.size());
  for (Eigen::Index i = 0; i < base.size(); ++i) v.col(i) = random_tangent_unit(base.point(i), rng).vec();
  return PerturbationPath(base, std::move(v), scale);
}

}  // namespace coulomb
