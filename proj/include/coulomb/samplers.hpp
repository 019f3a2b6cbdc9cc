#pragma once

// Random configurations on S^2: i.i.d. uniform points, zeros of the
// spherical Gaussian analytic function, the spherical ensemble, and the
// Coulomb gas at inverse temperature beta sampled by single-site Metropolis.

#include "coulomb/energy.hpp"
#include "coulomb/geometry.hpp"
#include "coulomb/polynomial.hpp"
#include "coulomb/random.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace coulomb {

Configurationd sample_uniform(int n, Rng& rng);

/// Counters for the probability-zero failure branches of the planar samplers.
struct SamplerStats {
  int resamples = 0;          ///< root finder failures or singular A
  int points_at_infinity = 0; ///< vanishing leading coefficient
};

/// Ascending coefficients sqrt(C(n, k)) xi_k, rescaled so that the largest
/// deterministic factor is 1. The binomial weights are formed in log space.
std::vector<Complex> elliptic_polynomial(int n, Rng& rng);

/// Zeros of sum_k sqrt(C(n, k)) xi[k] z^k on the sphere, n = xi.size() - 1.
/// Top coefficients with |xi_k| < 1e-12 lower the degree and each lost root
/// becomes the north pole. Returns nullopt if the root finder fails.
std::optional<Configurationd> gaf_zeros_from_xi(std::span<const Complex> xi, SamplerStats* stats = nullptr);

/// The n zeros of the degree-n elliptic polynomial mapped to the sphere.
/// A leading coefficient with |xi_n| < 1e-12 yields a point at the north pole.
Configurationd sample_gaf_zeros(int n, Rng& rng, SamplerStats* stats = nullptr);

/// Eigenvalues of A^{-1} B for independent complex Ginibre matrices A, B,
/// mapped to the sphere. A is resampled when its reciprocal condition
/// estimate drops below 1e-12.
Configurationd sample_spherical_ensemble(int n, Rng& rng, SamplerStats* stats = nullptr);

/// Metropolis acceptance for an energy change at inverse temperature beta.
template <typename Urbg>
bool metropolis_accept(double beta, double delta_energy, Urbg& rng) {
  if (delta_energy <= 0.0) return true;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return unif(rng) < std::exp(-beta * delta_energy);
}

/// Single-site Metropolis chain for exp(-beta H_N) against the uniform
/// product measure. The proposal is supplied per step and must be
/// symmetric; the current energy is tracked incrementally.
class MetropolisChain {
 public:
  MetropolisChain(Configurationd start, double beta, Rng rng);

  /// Picks a site uniformly, asks `propose(current_point, rng)` for a new
  /// position and applies the Metropolis rule. Coincident proposals are
  /// rejected. Returns whether the move was accepted.
  template <typename Proposal>
  bool step(Proposal&& propose) {
    std::uniform_int_distribution<Eigen::Index> site(0, state_.size() - 1);
    const Eigen::Index k = site(rng_);
    const SpherePointd candidate = propose(state_.point(k), rng_);
    ++proposals_;
    const auto delta = try_delta_energy_move(state_, k, candidate);
    if (!delta || !metropolis_accept(beta_, *delta, rng_)) return false;
    state_.set_point(k, candidate);
    energy_ += *delta;
    ++accepted_;
    return true;
  }

  const Configurationd& state() const { return state_; }
  double energy() const { return energy_; }
  double beta() const { return beta_; }
  void set_beta(double beta);
  Rng& rng() { return rng_; }
  std::int64_t proposals() const { return proposals_; }
  std::int64_t accepted() const { return accepted_; }

  /// Replaces the incrementally tracked energy by a full recomputation.
  void resync_energy();

 private:
  Configurationd state_;
  double beta_;
  Rng rng_;
  double energy_;
  std::int64_t proposals_ = 0;
  std::int64_t accepted_ = 0;
};

/// Geodesic proposal: uniform tangent direction, t uniform in (0, t_max].
/// Its density depends only on the geodesic distance, hence it is symmetric.
struct GeodesicProposal {
  double t_max;
  SpherePointd operator()(const SpherePointd& x, Rng& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double t = t_max * (1.0 - unif(rng));
    return geodesic_step(random_tangent_unit(x, rng), t);
  }
};

struct AnnealingStage {
  double beta;
  std::int64_t steps;
};

struct GibbsParams {
  int n = 2;
  double beta = 1.0;
  /// Total single-site proposals over all stages.
  std::int64_t steps = 0;
  /// Leading proposals (counted over all stages) during which the step size
  /// adapts and no samples are recorded. Must cover every non-final stage.
  std::int64_t burn_in = 0;
  double proposal_t = 0.5;
  double target_acceptance = 0.3;
  std::uint64_t seed = 0;
  /// Optional stages run in order; step counts sum to `steps` and the last
  /// beta equals `beta`. Empty means a single stage at `beta`.
  std::vector<AnnealingStage> annealing;
  /// Energy trace stride; 0 picks roughly 1000 trace points.
  std::int64_t trace_stride = 0;

  void validate() const;
};

/// `params` with a geometric schedule 1 -> beta over `stages` stages. Each
/// non-final stage gets burn_in / stages proposals; the final stage gets the
/// rest, so burn-in ends inside the final stage.
GibbsParams with_geometric_annealing(GibbsParams params, int stages = 8);

struct TracePoint {
  std::int64_t step;
  double energy;
};

struct ChainDiagnostics {
  double acceptance_rate = 0.0;              ///< over all proposals
  double post_burn_in_acceptance_rate = 0.0;
  std::vector<TracePoint> energy_trace;
  double final_proposal_t = 0.0;
  double best_energy_seen = 0.0;
  /// Energies recorded once per sweep (n proposals) after burn-in.
  std::vector<double> post_burn_in_energies;
  /// Largest energy held by the chain at any post-burn-in step.
  double max_post_burn_in_energy = 0.0;
  std::int64_t post_burn_in_steps = 0;
};

struct ChainResult {
  Configurationd state;
  ChainDiagnostics diagnostics;
};

/// Runs one chain. Without `start`, the chain starts from uniform points
/// drawn with the chain's own generator.
ChainResult mcmc_coulomb(const GibbsParams& params, std::optional<Configurationd> start = std::nullopt);

/// Independent chains. Chain 0 uses params.seed, chain i > 0 uses
/// split_seed(params.seed, i). Results are ordered by chain index regardless
/// of `threads`.
std::vector<ChainResult> run_replicas(const GibbsParams& params, int n_chains, unsigned threads = 1);

}  // namespace coulomb
