#include "coulomb/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace coulomb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// log sum_m exp(a_m) over the entries selected by `keep`; -inf if none.
template <typename Keep>
double log_sum_exp(std::span<const double> a, Keep keep) {
  double top = -kInf;
  for (std::size_t m = 0; m < a.size(); ++m)
    if (keep(m)) top = std::max(top, a[m]);
  if (top == -kInf) return -kInf;
  double s = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m)
    if (keep(m)) s += std::exp(a[m] - top);
  return top + std::log(s);
}

/// log(w_m) - beta (E_m - inf E)
std::vector<double> log_terms(const DiscreteGibbsSystem& sys, double beta) {
  std::vector<double> a(sys.size());
  for (std::size_t m = 0; m < sys.size(); ++m) {
    const double gap = sys.energies()[m] - sys.inf_energy();
    a[m] = std::isinf(gap) ? -kInf : std::log(sys.weights()[m]) - beta * gap;
  }
  return a;
}

void require_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::domain_error("Gibbs: beta must be positive and finite");
}

double log_deviation_probability(const DiscreteGibbsSystem& sys, double beta, double delta) {
  const auto a = log_terms(sys, beta);
  const double all = log_sum_exp(a, [](std::size_t) { return true; });
  const double tail = log_sum_exp(
      a, [&](std::size_t m) { return sys.energies()[m] - sys.inf_energy() > delta; });
  return tail - all;
}

}  // namespace

DiscreteGibbsSystem::DiscreteGibbsSystem(std::vector<double> energies, std::vector<double> weights)
    : energies_(std::move(energies)), weights_(std::move(weights)), inf_energy_(kInf) {
  if (energies_.empty()) throw std::invalid_argument("DiscreteGibbsSystem: need at least one state");
  if (energies_.size() != weights_.size())
    throw std::invalid_argument("DiscreteGibbsSystem: energies and weights differ in length");
  double total = 0.0;
  for (const double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::invalid_argument("DiscreteGibbsSystem: weights must be strictly positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("DiscreteGibbsSystem: weights must sum to 1");
  for (double& w : weights_) w /= total;
  for (const double e : energies_) {
    if (std::isnan(e) || e == -kInf) throw std::invalid_argument("DiscreteGibbsSystem: invalid energy");
    inf_energy_ = std::min(inf_energy_, e);
  }
  if (!std::isfinite(inf_energy_)) throw std::invalid_argument("DiscreteGibbsSystem: minimum energy must be finite");
}

DiscreteGibbsSystem DiscreteGibbsSystem::uniform(std::vector<double> energies) {
  const std::size_t m = energies.size();
  if (m == 0) throw std::invalid_argument("DiscreteGibbsSystem: need at least one state");
  return DiscreteGibbsSystem(std::move(energies), std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

GibbsQuantities compute_quantities(const DiscreteGibbsSystem& sys, double beta) {
  require_beta(beta);
  const auto a = log_terms(sys, beta);
  const double lse = log_sum_exp(a, [](std::size_t) { return true; });

  // C = -log sum_m w_m exp(-beta gap_m). With sum w = 1 this is
  // -log1p(-s), s = sum_m w_m (1 - exp(-beta gap_m)), which is exactly zero
  // for constant energies; switch to the log-sum-exp form once s is large.
  double s = 0.0;
  for (std::size_t m = 0; m < sys.size(); ++m) {
    const double gap = sys.energies()[m] - sys.inf_energy();
    s += sys.weights()[m] * (std::isinf(gap) ? 1.0 : -std::expm1(-beta * gap));
  }
  const double c_tight = s < 0.5 ? -std::log1p(-s) : std::max(0.0, -lse);

  double mean_gap = 0.0;
  for (std::size_t m = 0; m < sys.size(); ++m) {
    if (a[m] == -kInf) continue;
    mean_gap += std::exp(a[m] - lse) * (sys.energies()[m] - sys.inf_energy());
  }
  return {beta, -beta * sys.inf_energy() - c_tight, sys.inf_energy() + mean_gap, sys.inf_energy(), c_tight};
}

std::vector<double> gibbs_probabilities(const DiscreteGibbsSystem& sys, double beta) {
  require_beta(beta);
  const auto a = log_terms(sys, beta);
  const double lse = log_sum_exp(a, [](std::size_t) { return true; });
  std::vector<double> p(a.size());
  for (std::size_t m = 0; m < a.size(); ++m) p[m] = std::exp(a[m] - lse);
  return p;
}

double deviation_probability(const DiscreteGibbsSystem& sys, double beta, double delta) {
  require_beta(beta);
  return std::exp(log_deviation_probability(sys, beta, delta));
}

ConcentrationReport verify_concentration_lemma(const DiscreteGibbsSystem& sys, double beta, double c_beta,
                                               std::span<const double> delta_grid) {
  const auto q = compute_quantities(sys, beta);
  ConcentrationReport r{LemmaStatus::pass, beta, c_beta, q.c_beta_tight, kInf, {}};
  if (c_beta < q.c_beta_tight - kConstantSlack) {
    r.status = LemmaStatus::invalid_constant;
    return r;
  }
  for (const double delta : delta_grid) {
    if (!(delta > 0.0)) throw std::domain_error("verify_concentration_lemma: delta must be positive");
    const double log_p = log_deviation_probability(sys, beta, delta);
    const double log_bound = -beta * delta + c_beta;
    const double slack = log_bound - log_p;
    const bool holds = slack >= -1e-12 * std::max(1.0, std::abs(log_bound));
    r.points.push_back({delta, std::exp(log_p), log_bound, holds});
    r.worst_log_slack = std::min(r.worst_log_slack, slack);
    if (!holds) r.status = LemmaStatus::violated;
  }
  return r;
}

ExpectationReport verify_expectation_lemma(const DiscreteGibbsSystem& sys, double beta, double c_beta) {
  const auto q = compute_quantities(sys, beta);
  ExpectationReport r{};
  r.beta = beta;
  r.c_beta = c_beta;
  r.c_beta_tight = q.c_beta_tight;
  r.gap = q.mean_energy - q.inf_energy;
  r.linear_bound = c_beta / beta;
  r.exponential_bound = std::exp(c_beta) / beta;
  r.linear_slack = r.linear_bound - r.gap;
  r.exponential_slack = r.exponential_bound - r.gap;
  if (c_beta < q.c_beta_tight - kConstantSlack) {
    r.status = LemmaStatus::invalid_constant;
    return r;
  }
  const double tol = 1e-12 * std::max(1.0, std::abs(q.mean_energy));
  r.status = (r.linear_slack >= -tol && r.exponential_slack >= -tol) ? LemmaStatus::pass : LemmaStatus::violated;
  return r;
}

}  // namespace coulomb
