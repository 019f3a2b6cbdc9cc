#pragma once

// Gibbs measures over finite state spaces.
//
// For a reference probability mu on {0, ..., M-1} and energies H,
//
//   P_beta(m) = mu(m) exp(-beta H(m)) / Z_beta,
//   Z_beta    = sum_m mu(m) exp(-beta H(m)).
//
// Everything is evaluated exactly by enumeration in log space, which makes
// the two concentration inequalities for the energy of P_beta checkable to
// rounding accuracy.

#include <cstddef>
#include <span>
#include <vector>

namespace coulomb {

class DiscreteGibbsSystem {
 public:
  /// `weights` must be strictly positive and sum to 1 within 1e-12; they are
  /// renormalized exactly. Energies may be +inf (excluded states) but their
  /// minimum must be finite.
  DiscreteGibbsSystem(std::vector<double> energies, std::vector<double> weights);

  /// Reference measure uniform over the states.
  static DiscreteGibbsSystem uniform(std::vector<double> energies);

  std::size_t size() const { return energies_.size(); }
  std::span<const double> energies() const { return energies_; }
  std::span<const double> weights() const { return weights_; }
  double inf_energy() const { return inf_energy_; }

 private:
  std::vector<double> energies_;
  std::vector<double> weights_;
  double inf_energy_;
};

struct GibbsQuantities {
  double beta;
  double log_z;
  double mean_energy;
  double inf_energy;
  /// Smallest admissible constant in log Z >= -beta inf H - C; always >= 0.
  double c_beta_tight;
};

GibbsQuantities compute_quantities(const DiscreteGibbsSystem& sys, double beta);

/// P_beta(m) for every state.
std::vector<double> gibbs_probabilities(const DiscreteGibbsSystem& sys, double beta);

/// Exact P_beta(H - inf H > delta).
double deviation_probability(const DiscreteGibbsSystem& sys, double beta, double delta);

/// Absolute slack allowed when checking a user constant against c_beta_tight.
inline constexpr double kConstantSlack = 1e-12;

enum class LemmaStatus { pass, violated, invalid_constant };

struct ConcentrationPoint {
  double delta;
  double probability;
  double log_bound;  ///< -beta delta + C
  bool holds;
};

struct ConcentrationReport {
  LemmaStatus status;
  double beta;
  double c_beta;
  double c_beta_tight;
  /// min over the grid of (log bound - log probability); +inf when every
  /// probability is zero.
  double worst_log_slack;
  std::vector<ConcentrationPoint> points;
};

/// Checks P_beta(H - inf H > delta) <= exp(-beta delta + c_beta) on a grid.
ConcentrationReport verify_concentration_lemma(const DiscreteGibbsSystem& sys, double beta,
                                               double c_beta, std::span<const double> delta_grid);

struct ExpectationReport {
  LemmaStatus status;
  double beta;
  double c_beta;
  double c_beta_tight;
  double gap;               ///< E_beta[H] - inf H
  double linear_bound;      ///< c_beta / beta
  double exponential_bound; ///< exp(c_beta) / beta
  double linear_slack;
  double exponential_slack;
};

/// Checks E_beta[H] - inf H <= c_beta / beta and <= exp(c_beta) / beta.
ExpectationReport verify_expectation_lemma(const DiscreteGibbsSystem& sys, double beta, double c_beta);

}  // namespace coulomb
