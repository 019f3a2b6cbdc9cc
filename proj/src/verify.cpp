#include "coulomb/verify.hpp"

#include "coulomb/minimize.hpp"
#include "coulomb/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <tuple>

namespace coulomb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
  if (!ok) throw std::domain_error(what);
}

void require_minimizer(const Configurationd& c, double grad_tol) {
  const double g = gradient_inf_norm(c);
  if (g > 10.0 * grad_tol)
    throw NonMinimizerError("configuration is not a minimizer: gradient " + std::to_string(g) + " exceeds " +
                            std::to_string(10.0 * grad_tol));
}

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

TheoremQuantities theorem_quantities(int n, double beta, double c) {
  require(n >= 2, "theorem_quantities: need n >= 2");
  require(beta >= 1.0 && std::isfinite(beta), "theorem_quantities: need beta >= 1");
  require(c > 0.0 && std::isfinite(c), "theorem_quantities: need c > 0");
  const double N = n;
  const double log_n = std::log(N);
  TheoremQuantities q{};
  q.n = n;
  q.beta = beta;
  q.c = c;
  q.kappa = c * (beta / N) * log_n - std::log(beta) - 8.0 * log_n;
  q.log_prob_bound = -q.kappa * N;
  q.prob_bound = std::exp(q.log_prob_bound);
  q.c_beta_sphere = N * (std::log(beta) + 8.0 * log_n);
  q.mean_bound = q.c_beta_sphere / beta;
  q.delta = c * log_n;
  q.trivial = q.kappa <= 0.0;
  return q;
}

double tight_log_z_lower_bound(int n, double beta) {
  require(n >= 2, "tight_log_z_lower_bound: need n >= 2");
  require(beta >= 1.0 && std::isfinite(beta), "tight_log_z_lower_bound: need beta >= 1");
  const double N = n;
  const double value = -N * (1.0 + std::log(beta) + 2.0 * std::log(N) + std::log(20.0));
  const double rounded = -N * (std::log(beta) + 8.0 * std::log(N));
  if (!(value >= rounded)) throw std::logic_error("tight_log_z_lower_bound: rounding step violated");
  return value;
}

void PerturbationTestSpec::validate() const {
  require(n >= 2, "PerturbationTestSpec: need n >= 2");
  require(s >= 0.0 && s <= std::sqrt(5.0 * n) / 2.0, "PerturbationTestSpec: s must lie in [0, sqrt(5n)/2]");
  require(trials >= 0 && boundary_trials >= 0, "PerturbationTestSpec: trial counts must be >= 0");
}

double PerturbationTestSpec::t() const { return s / (std::sqrt(5.0) * std::pow(static_cast<double>(n), 1.5)); }

PerturbationReport check_perturbation_bound(const Configurationd& minimizer, const PerturbationTestSpec& spec,
                                            double grad_tol) {
  spec.validate();
  require(minimizer.size() == spec.n, "check_perturbation_bound: size mismatch");
  require_minimizer(minimizer, grad_tol);

  PerturbationReport r{};
  r.n = spec.n;
  r.s = spec.s;
  r.t = spec.t();
  r.radius = std::asin(r.t);
  r.bound = spec.s * spec.s;
  r.trials = spec.trials;
  r.boundary_trials = spec.boundary_trials;
  r.max_excess = -kInf;

  Rng rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int total = spec.trials + spec.boundary_trials;
  for (int trial = 0; trial < total; ++trial) {
    const bool boundary = trial >= spec.trials;
    Configurationd moved = minimizer;
    for (Eigen::Index i = 0; i < minimizer.size(); ++i) {
      const SpherePointd x = minimizer.point(i);
      const double angle = boundary ? r.radius : r.radius * unif(rng);
      moved.set_point(i, geodesic_step(random_tangent_unit(x, rng), std::sin(angle)));
    }
    const double excess = energy_difference(minimizer, moved);
    r.max_excess = std::max(r.max_excess, excess);
    if (excess > r.bound + 1e-9) ++r.violations;
  }
  r.pass = r.violations == 0;
  return r;
}

PerturbationPath::PerturbationPath(Configurationd base, Eigen::Matrix3Xd directions, double scale)
    : base_(std::move(base)), directions_(std::move(directions)), scale_(scale) {
  require(directions_.cols() == base_.size(), "PerturbationPath: one direction per point required");
  require(scale_ > 0.0 && scale_ <= 1.0, "PerturbationPath: scale must lie in (0, 1]");
  for (Eigen::Index i = 0; i < base_.size(); ++i) {
    // Validates orthogonality and unit length.
    TangentVectord::from_components(base_.point(i), directions_.col(i), true);
  }
}

Configurationd PerturbationPath::at(double t) const {
  const double u = scale_ * t;
  require(u >= 0.0 && u <= 1.0, "PerturbationPath: parameter out of range");
  Configurationd::Matrix m = std::sqrt((1.0 - u) * (1.0 + u)) * base_.matrix() + u * directions_;
  return Configurationd::normalized(std::move(m));
}

double PerturbationPath::difference(double t, double dt) const {
  // With u = a t, c = sqrt(1 - u^2) and P = |dx|^2, Q = <dx, dv>, R = |dv|^2:
  //   d^2(u) = c^2 P + 2 c u Q + u^2 R,
  //   d^2(u1) - d^2(u0) = du [(u1 + u0)(R - P) + 2 Q (c0 - u1 (u1 + u0) / (c1 + c0))],
  // which keeps its relative accuracy however small du is.
  const double u0 = scale_ * t, du = scale_ * dt, u1 = u0 + du;
  require(u0 >= 0.0 && u1 >= 0.0 && u0 <= 1.0 && u1 <= 1.0, "PerturbationPath: parameter out of range");
  const double c0 = std::sqrt((1.0 - u0) * (1.0 + u0)), c1 = std::sqrt((1.0 - u1) * (1.0 + u1));
  const double su = u1 + u0;
  const double q_coef = 2.0 * (c0 - u1 * su / (c1 + c0));
  const auto& x = base_.matrix();
  const Eigen::Index n = base_.size();
  std::vector<double> rows(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    double row = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Eigen::Vector3d dx = x.col(i) - x.col(j);
      const Eigen::Vector3d dv = directions_.col(i) - directions_.col(j);
      const double P = dx.squaredNorm(), Q = dx.dot(dv), R = dv.squaredNorm();
      const double d0 = c0 * c0 * P + 2.0 * c0 * u0 * Q + u0 * u0 * R;
      const double change = du * (su * (R - P) + q_coef * Q);
      if (!(d0 > 0.0) || !(d0 + change > 0.0)) throw CoincidentPointsError(i, j);
      row -= std::log1p(change / d0);
    }
    rows[static_cast<std::size_t>(i)] = row;
  }
  return detail::pairwise_sum(std::span<const double>(rows));
}

double PerturbationPath::increment(double t) const { return difference(0.0, t); }

double PerturbationPath::second_derivative_fd(double t) const {
  require(t > 0.0, "second_derivative_fd: need t > 0");
  const double h = 1e-4 * t;
  return (difference(t, h) + difference(t, -h)) / (h * h);
}

double PerturbationPath::second_derivative_exact(double t) const {
  const double a = scale_;
  const double c = std::sqrt((1.0 - a * t) * (1.0 + a * t));
  const double dc = -a * a * t / c;
  const double ddc = -a * a / (c * c * c);
  const auto& x = base_.matrix();
  double total = 0.0;
  for (Eigen::Index i = 0; i < base_.size(); ++i) {
    for (Eigen::Index j = i + 1; j < base_.size(); ++j) {
      const Eigen::Vector3d dx = x.col(i) - x.col(j);
      const Eigen::Vector3d dv = directions_.col(i) - directions_.col(j);
      const Eigen::Vector3d g = c * dx + a * t * dv;
      const Eigen::Vector3d g1 = dc * dx + a * dv;
      const Eigen::Vector3d g2 = ddc * dx;
      const double n2 = g.squaredNorm();
      const double p = g.dot(g1);
      total += 2.0 * (2.0 * p * p / (n2 * n2) - (g.dot(g2) + g1.squaredNorm()) / n2);
    }
  }
  return total;
}

SecondDerivativeReport check_second_derivative_bound(const Configurationd& minimizer,
                                                     std::span<const double> t_grid, int directions,
                                                     std::uint64_t seed, double grad_tol) {
  const int n = static_cast<int>(minimizer.size());
  require(directions >= 1, "check_second_derivative_bound: need at least one direction");
  require(!t_grid.empty(), "check_second_derivative_bound: empty t grid");
  for (const double t : t_grid)
    require(t > 0.0 && t <= 1.0 / (2.0 * n), "check_second_derivative_bound: t must lie in (0, 1/(2n)]");
  require_minimizer(minimizer, grad_tol);

  const double N = n;
  SecondDerivativeReport r{};
  r.n = n;
  r.directions = directions;
  r.t_grid.assign(t_grid.begin(), t_grid.end());
  r.bound = 10.0 * N * N * N;
  r.max_second_derivative = -kInf;
  r.max_second_derivative_scaled = -kInf;
  r.max_growth_ratio = -kInf;
  r.min_increment = kInf;
  r.pass = true;

  // A first-order term from the residual gradient may make g dip below g(0).
  const double grad = gradient_inf_norm(minimizer);
  Rng rng(seed);
  for (int d = 0; d < directions; ++d) {
    const PerturbationPath unit = PerturbationPath::random(minimizer, rng, 1.0);
    const PerturbationPath scaled = PerturbationPath::random(minimizer, rng, 1.0 / std::sqrt(N));
    for (const double t : t_grid) {
      const double fd = unit.second_derivative_fd(t);
      const double exact = unit.second_derivative_exact(t);
      r.max_second_derivative = std::max(r.max_second_derivative, fd);
      r.max_fd_relative_error = std::max(r.max_fd_relative_error, std::abs(fd - exact) / std::max(1.0, std::abs(exact)));
      r.max_second_derivative_scaled = std::max(r.max_second_derivative_scaled, scaled.second_derivative_fd(t));

      const double inc = unit.increment(t);
      r.min_increment = std::min(r.min_increment, inc);
      const double growth = inc / (5.0 * t * t * N * N * N);
      r.max_growth_ratio = std::max(r.max_growth_ratio, growth);

      const double dip_tol = 3.0 * grad * std::sqrt(3.0 * N) * t + 1e-12;
      if (fd > r.bound * (1.0 + 1e-4) || growth > 1.0 || inc < -dip_tol) r.pass = false;
    }
  }
  return r;
}

std::pair<double, double> wilson_interval(int successes, int trials) {
  if (trials <= 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double n = trials;
  const double p = successes / n;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {successes == 0 ? 0.0 : std::max(0.0, center - half), successes == trials ? 1.0 : std::min(1.0, center + half)};
}

DeviationReport empirical_deviation_rate(std::span<const double> energies, int n, double c, double beta,
                                         double ledger_energy) {
  require(!energies.empty(), "empirical_deviation_rate: no samples");
  const TheoremQuantities q = theorem_quantities(n, beta, c);
  DeviationReport r{};
  r.n = n;
  r.c = c;
  r.beta = beta;
  r.ledger_energy = ledger_energy;
  r.samples = static_cast<int>(energies.size());
  r.lowest_energy = kInf;
  for (const double e : energies) {
    if (e - ledger_energy > q.delta) ++r.violations;
    r.lowest_energy = std::min(r.lowest_energy, e);
  }
  r.ledger_improvement = r.lowest_energy < ledger_energy - kLedgerTieTolerance;
  r.rate = static_cast<double>(r.violations) / r.samples;
  std::tie(r.ci_low, r.ci_high) = wilson_interval(r.violations, r.samples);
  r.log_theoretical_bound = q.log_prob_bound;
  r.trivial = q.trivial;
  r.pass = r.trivial || r.ci_low <= std::exp(q.log_prob_bound);
  return r;
}

DeviationReport empirical_deviation_rate(std::span<const Configurationd> samples, int n, double c, double beta,
                                         MinimumLedger& ledger) {
  const auto entry = ledger.find(n);
  if (!entry) throw std::out_of_range("no ledger entry for n = " + std::to_string(n));
  std::vector<double> energies;
  energies.reserve(samples.size());
  for (const auto& s : samples) energies.push_back(log_energy(s));
  DeviationReport r = empirical_deviation_rate(energies, n, c, beta, entry->energy);
  if (r.ledger_improvement) {
    const auto best = std::min_element(energies.begin(), energies.end()) - energies.begin();
    ledger.offer(make_ledger_entry(samples[static_cast<std::size_t>(best)], LedgerSource::mcmc_refined));
  }
  return r;
}

MeanGapReport mean_energy_gap(std::span<const double> energies, int n, double beta, double ledger_energy) {
  require(!energies.empty(), "mean_energy_gap: no samples");
  const TheoremQuantities q = theorem_quantities(n, beta, 1.0);
  MeanGapReport r{};
  r.n = n;
  r.beta = beta;
  r.samples = static_cast<int>(energies.size());
  r.mean = mean_of(energies);
  double ss = 0.0;
  for (const double e : energies) ss += (e - r.mean) * (e - r.mean);
  r.standard_error = energies.size() > 1 ? std::sqrt(ss / (r.samples - 1.0) / r.samples) : 0.0;
  r.ledger_energy = ledger_energy;
  r.gap = r.mean - ledger_energy;
  r.bound = q.mean_bound;
  r.pass = r.gap <= r.bound + 3.0 * r.standard_error;
  return r;
}

MeanGapReport mean_energy_gap(std::span<const Configurationd> samples, int n, double beta, const MinimumLedger& ledger) {
  const auto entry = ledger.find(n);
  if (!entry) throw std::out_of_range("no ledger entry for n = " + std::to_string(n));
  std::vector<double> energies;
  for (const auto& s : samples) energies.push_back(log_energy(s));
  return mean_energy_gap(energies, n, beta, entry->energy);
}

LemmaSweepReport run_lemma_sweep(int systems, std::uint64_t seed, int max_states) {
  require(systems >= 1 && max_states >= 1, "run_lemma_sweep: invalid sizes");
  LemmaSweepReport r{};
  r.systems = systems;
  r.worst_concentration_slack = kInf;
  r.worst_expectation_slack = kInf;
  Rng rng(seed);
  std::uniform_int_distribution<int> states(1, max_states);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;

  for (int s = 0; s < systems; ++s) {
    const int m = states(rng);
    const double spread = std::pow(10.0, 2.0 * unif(rng) - 1.0);
    const double offset = 10.0 * normal(rng);
    std::vector<double> energies(static_cast<std::size_t>(m)), weights(static_cast<std::size_t>(m));
    const int flavour = s % 4;
    for (int k = 0; k < m; ++k) {
      double e = offset + spread * unif(rng);
      if (flavour == 1) e = offset + spread * std::round(3.0 * unif(rng));  // ties
      if (flavour == 2) e = offset;                                         // constant
      energies[static_cast<std::size_t>(k)] = e;
      weights[static_cast<std::size_t>(k)] = std::exp(1.5 * normal(rng));
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w /= total;
    const DiscreteGibbsSystem sys(energies, weights);
    const double beta = std::pow(10.0, -1.0 + 3.0 * unif(rng));
    const double tight = compute_quantities(sys, beta).c_beta_tight;

    const double range = *std::max_element(energies.begin(), energies.end()) - sys.inf_energy();
    std::vector<double> deltas;
    for (int k = 0; k < 24; ++k) deltas.push_back(std::pow(10.0, -4.0 + 5.0 * k / 23.0) * std::max(range, 1e-3));
    for (const double c : {tight, tight + 0.5 * unif(rng), tight + 5.0 * unif(rng)}) {
      std::vector<double> grid = deltas;
      if (c > 0.0) grid.push_back(c / beta);
      const auto conc = verify_concentration_lemma(sys, beta, c, grid);
      ++r.concentration_checks;
      if (conc.status != LemmaStatus::pass) ++r.concentration_violations;
      r.worst_concentration_slack = std::min(r.worst_concentration_slack, conc.worst_log_slack);

      const auto expct = verify_expectation_lemma(sys, beta, c);
      ++r.expectation_checks;
      if (expct.status != LemmaStatus::pass) ++r.expectation_violations;
      r.worst_expectation_slack = std::min(r.worst_expectation_slack, expct.linear_slack);
    }
    if (tight > 1e-6) {
      const auto bad = verify_expectation_lemma(sys, beta, 0.5 * tight);
      if (bad.status == LemmaStatus::invalid_constant) ++r.rejected_invalid_constants;
    }
  }
  r.pass = r.concentration_violations == 0 && r.expectation_violations == 0;
  return r;
}

}  // namespace coulomb
