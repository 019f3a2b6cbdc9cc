#include "coulomb/samplers.hpp"

#include "coulomb/parallel.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace coulomb {

namespace {

constexpr int kMaxResamples = 100;

/// log sqrt(C(n, k)) for k = 0..n
std::vector<double> binomial_log_weights(int n) {
  std::vector<double> w(static_cast<std::size_t>(n) + 1);
  const double lg_n = std::lgamma(n + 1.0);
  for (int k = 0; k <= n; ++k) w[static_cast<std::size_t>(k)] = 0.5 * (lg_n - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
  return w;
}

}  // namespace

Configurationd sample_uniform(int n, Rng& rng) {
  if (n < 2) throw std::domain_error("sample_uniform: need n >= 2");
  std::normal_distribution<double> normal;
  Configurationd::Matrix m(3, n);
  for (int i = 0; i < n; ++i) {
    for (;;) {
      const Eigen::Vector3d g(normal(rng), normal(rng), normal(rng));
      const double norm = g.norm();
      if (norm < 1e-8) continue;
      m.col(i) = g / norm;
      break;
    }
  }
  return Configurationd(std::move(m));
}

std::vector<Complex> elliptic_polynomial(int n, Rng& rng) {
  if (n < 1) throw std::domain_error("elliptic_polynomial: need n >= 1");
  const auto log_weight = binomial_log_weights(n);
  const double top = *std::max_element(log_weight.begin(), log_weight.end());
  std::vector<Complex> coeffs(log_weight.size());
  for (std::size_t k = 0; k < coeffs.size(); ++k) coeffs[k] = std::exp(log_weight[k] - top) * complex_normal(rng);
  return coeffs;
}

std::optional<Configurationd> gaf_zeros_from_xi(std::span<const Complex> xi, SamplerStats* stats) {
  if (xi.size() < 3) throw std::domain_error("gaf_zeros_from_xi: need degree >= 2");
  const int n = static_cast<int>(xi.size()) - 1;
  const auto log_weight = binomial_log_weights(n);
  const double top = *std::max_element(log_weight.begin(), log_weight.end());
  // Vanishing top coefficients drop the degree; the lost roots sit at infinity.
  int at_infinity = 0;
  while (at_infinity < n && std::abs(xi[static_cast<std::size_t>(n - at_infinity)]) < 1e-12) ++at_infinity;
  std::vector<Complex> coeffs(static_cast<std::size_t>(n - at_infinity) + 1);
  for (std::size_t k = 0; k < coeffs.size(); ++k) coeffs[k] = std::exp(log_weight[k] - top) * xi[k];

  std::vector<Complex> roots;
  if (coeffs.size() >= 2) {
    RootResult r = aberth_roots(coeffs);
    if (!r.converged) return std::nullopt;
    roots = std::move(r.roots);
  }
  if (stats) stats->points_at_infinity += at_infinity;

  Configurationd::Matrix m(3, n);
  for (std::size_t i = 0; i < roots.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = plane_to_sphere(roots[i]).vec();
  for (int i = static_cast<int>(roots.size()); i < n; ++i)
    m.col(i) = plane_to_sphere(ExtendedComplex<double>::infinity()).vec();
  return Configurationd(std::move(m));
}

Configurationd sample_gaf_zeros(int n, Rng& rng, SamplerStats* stats) {
  if (n < 2) throw std::domain_error("sample_gaf_zeros: need n >= 2");
  for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
    std::vector<Complex> xi(static_cast<std::size_t>(n) + 1);
    for (auto& x : xi) x = complex_normal(rng);
    if (auto c = gaf_zeros_from_xi(xi, stats)) return std::move(*c);
    if (stats) ++stats->resamples;
  }
  throw std::runtime_error("sample_gaf_zeros: root finder failed " + std::to_string(kMaxResamples) + " times");
}

Configurationd sample_spherical_ensemble(int n, Rng& rng, SamplerStats* stats) {
  if (n < 2) throw std::domain_error("sample_spherical_ensemble: need n >= 2");
  for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
    Eigen::MatrixXcd a(n, n), b(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) a(i, j) = complex_normal(rng);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) b(i, j) = complex_normal(rng);

    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
    if (!(lu.rcond() >= 1e-12)) {
      if (stats) ++stats->resamples;
      continue;
    }
    const Eigen::MatrixXcd x = lu.solve(b);
    const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(x, false);
    if (solver.info() != Eigen::Success) {
      if (stats) ++stats->resamples;
      continue;
    }
    Configurationd::Matrix m(3, n);
    for (int i = 0; i < n; ++i) m.col(i) = plane_to_sphere(solver.eigenvalues()(i)).vec();
    return Configurationd(std::move(m));
  }
  throw std::runtime_error("sample_spherical_ensemble: A singular " + std::to_string(kMaxResamples) + " times");
}

MetropolisChain::MetropolisChain(Configurationd start, double beta, Rng rng)
    : state_(std::move(start)), beta_(beta), rng_(std::move(rng)), energy_(log_energy(state_)) {
  set_beta(beta);
}

void MetropolisChain::set_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::domain_error("MetropolisChain: beta must be positive");
  beta_ = beta;
}

void MetropolisChain::resync_energy() { energy_ = log_energy(state_); }

void GibbsParams::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("GibbsParams: " + what); };
  if (n < 2) fail("n must be >= 2");
  if (!(beta >= 1.0) || !std::isfinite(beta)) fail("beta must be >= 1");
  if (burn_in < 0) fail("burn_in must be >= 0");
  if (!(steps > burn_in)) fail("steps must exceed burn_in");
  if (!(proposal_t > 0.0 && proposal_t < 1.0)) fail("proposal_t must lie in (0, 1)");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) fail("target_acceptance must lie in (0, 1)");
  if (trace_stride < 0) fail("trace_stride must be >= 0");
  if (annealing.empty()) return;
  std::int64_t total = 0;
  double previous = 0.0;
  for (const auto& s : annealing) {
    if (!(s.beta > 0.0) || !std::isfinite(s.beta)) fail("annealing betas must be positive");
    if (s.beta < previous) fail("annealing betas must be nondecreasing");
    if (s.steps <= 0) fail("annealing stage steps must be positive");
    previous = s.beta;
    total += s.steps;
  }
  if (annealing.back().beta != beta) fail("final annealing beta must equal beta");
  if (total != steps) fail("annealing stage steps must sum to steps");
  if (burn_in < total - annealing.back().steps) fail("burn_in must cover every non-final annealing stage");
}

GibbsParams with_geometric_annealing(GibbsParams params, int stages) {
  if (stages < 1) throw std::invalid_argument("with_geometric_annealing: need at least one stage");
  params.annealing.clear();
  if (stages == 1) return params;
  const std::int64_t per_stage = params.burn_in / stages;
  if (per_stage <= 0) throw std::invalid_argument("with_geometric_annealing: burn_in too short for the schedule");
  for (int k = 0; k < stages - 1; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(stages - 1);
    params.annealing.push_back({std::pow(params.beta, frac), per_stage});
  }
  params.annealing.push_back({params.beta, params.steps - per_stage * (stages - 1)});
  return params;
}

ChainResult mcmc_coulomb(const GibbsParams& params, std::optional<Configurationd> start) {
  params.validate();
  Rng rng(params.seed);
  Configurationd initial = start ? std::move(*start) : sample_uniform(params.n, rng);
  if (initial.size() != params.n) throw std::invalid_argument("mcmc_coulomb: start has the wrong size");

  const std::vector<AnnealingStage> stages =
      params.annealing.empty() ? std::vector<AnnealingStage>{{params.beta, params.steps}} : params.annealing;
  MetropolisChain chain(std::move(initial), stages.front().beta, std::move(rng));

  const std::int64_t n = params.n;
  const std::int64_t stride = params.trace_stride > 0 ? params.trace_stride : std::max<std::int64_t>(1, params.steps / 1000);
  const std::int64_t resync_every = 200 * n;
  double log_t = std::log(params.proposal_t);
  constexpr double kMinLogT = -18.420680743952367;  // log(1e-8)

  ChainDiagnostics diag;
  diag.energy_trace.push_back({0, chain.energy()});
  diag.best_energy_seen = chain.energy();
  diag.max_post_burn_in_energy = -std::numeric_limits<double>::infinity();
  std::int64_t post_accepted = 0;
  std::int64_t step = 0;

  for (const auto& stage : stages) {
    chain.set_beta(stage.beta);
    for (std::int64_t j = 0; j < stage.steps; ++j) {
      const bool accepted = chain.step(GeodesicProposal{std::exp(log_t)});
      ++step;
      if (step <= params.burn_in) {
        // Robbins-Monro on log t_max; the gain restarts with every stage.
        const double gain = std::pow(1.0 + static_cast<double>(j) / static_cast<double>(n), -0.6);
        log_t = std::clamp(log_t + gain * ((accepted ? 1.0 : 0.0) - params.target_acceptance), kMinLogT, 0.0);
      } else {
        ++diag.post_burn_in_steps;
        if (accepted) ++post_accepted;
      }
      if (step % resync_every == 0) chain.resync_energy();
      const double e = chain.energy();
      diag.best_energy_seen = std::min(diag.best_energy_seen, e);
      if (step > params.burn_in) {
        diag.max_post_burn_in_energy = std::max(diag.max_post_burn_in_energy, e);
        if (diag.post_burn_in_steps % n == 0) diag.post_burn_in_energies.push_back(e);
      }
      if (step % stride == 0) diag.energy_trace.push_back({step, e});
    }
  }

  chain.resync_energy();
  diag.acceptance_rate = static_cast<double>(chain.accepted()) / static_cast<double>(chain.proposals());
  diag.post_burn_in_acceptance_rate =
      diag.post_burn_in_steps > 0 ? static_cast<double>(post_accepted) / static_cast<double>(diag.post_burn_in_steps) : 0.0;
  diag.final_proposal_t = std::exp(log_t);
  if (diag.energy_trace.back().step != step) diag.energy_trace.push_back({step, chain.energy()});
  return {chain.state(), std::move(diag)};
}

std::vector<ChainResult> run_replicas(const GibbsParams& params, int n_chains, unsigned threads) {
  if (n_chains < 1) throw std::invalid_argument("run_replicas: need at least one chain");
  params.validate();
  std::vector<std::optional<ChainResult>> slots(static_cast<std::size_t>(n_chains));
  parallel_for(slots.size(), threads, [&](std::size_t i) {
    GibbsParams p = params;
    if (i > 0) p.seed = split_seed(params.seed, i);
    slots[i] = mcmc_coulomb(p);
  });
  std::vector<ChainResult> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace coulomb
