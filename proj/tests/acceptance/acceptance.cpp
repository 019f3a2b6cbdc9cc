// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all
// criteria pass. Builds its own minimum ledger for n = 2..50 in memory.
#include "coulomb/energy.hpp"
#include "coulomb/gibbs.hpp"
#include "coulomb/ledger.hpp"
#include "coulomb/minimize.hpp"
#include "coulomb/parallel.hpp"
#include "coulomb/random.hpp"
#include "coulomb/samplers.hpp"
#include "coulomb/verify.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <string>
#include <vector>

using namespace coulomb;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

std::string strf(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

/// budget <= 0: no runtime limit.
void verdict(int id, bool pass, double secs, double budget, const std::string& detail) {
  const bool ok = pass && (budget <= 0 || secs < budget);
  failures += !ok;
  const std::string limit = budget > 0 ? strf("budget %.0fs", budget) : std::string("no budget");
  std::printf("AC%d %s  %.1fs (%s)  %s\n", id, ok ? "PASS" : "FAIL", secs, limit.c_str(), detail.c_str());
  std::fflush(stdout);
}

const std::vector<int> kPerturbationN = {2, 3, 4, 6, 12, 20};

unsigned threads() { return default_threads(); }

void ac1() {
  const auto t0 = Clock::now();
  const auto r = run_lemma_sweep(1000, 2024, 20);
  verdict(1, r.pass && r.concentration_violations == 0 && r.expectation_violations == 0, seconds_since(t0), 10,
          strf("%d systems, %d + %d checks, violations %d/%d", r.systems, r.concentration_checks,
               r.expectation_checks, r.concentration_violations, r.expectation_violations));
}

void ac2() {
  const auto t0 = Clock::now();
  MinimizeParams mp;
  mp.restarts = 32;
  mp.threads = threads();
  struct Known {
    int n;
    double energy, tol;
  };
  const double ico = static_cast<double>(oracle::naive_energy(oracle::make(oracle::icosahedron()).matrix()));
  const Known known[] = {{2, -2 * std::log(2.0), 1e-9},
                         {3, -3 * std::log(3.0), 1e-8},
                         {4, -6 * std::log(8.0 / 3.0), 1e-8},
                         {12, ico, 1e-6}};
  bool pass = true;
  std::string detail;
  for (const auto& k : known) {
    const double e = estimate_min(k.n, mp).entry.energy;
    // "matches or beats": only an excess counts against the minimizer.
    const double excess = k.n == 12 ? e - k.energy : std::abs(e - k.energy);
    pass &= excess <= k.tol;
    detail += strf("n=%d err %.1e  ", k.n, excess);
  }
  verdict(2, pass, seconds_since(t0), 60, detail);
}

void ac3(MinimumLedger& ledger) {
  const auto t0 = Clock::now();
  MinimizeParams mp;
  mp.restarts = 32;
  mp.threads = threads();
  int bad = 0;
  double worst = INFINITY;
  for (int n = 2; n <= 50; ++n) {
    if (const auto poly = polyhedral_configuration(n)) ledger.offer(make_ledger_entry(*poly, LedgerSource::analytic));
    estimate_min(n, mp, {}, &ledger);
    const auto c = ledger.find(n)->configuration();
    const double slack = min_separation(c) - separation_lower_bound(n);
    worst = std::min(worst, slack);
    bad += slack < -1e-6;
  }
  verdict(3, bad == 0, seconds_since(t0), 0, strf("n=2..50, %d below bound, min slack %.3e", bad, worst));
}

void ac4(const MinimumLedger& ledger) {
  const auto t0 = Clock::now();
  bool pass = true;
  int trials = 0, violations = 0;
  double worst = -INFINITY;
  for (const int n : kPerturbationN) {
    const auto c = ledger.find(n)->configuration();
    const double s_max = std::sqrt(5.0 * n) / 2;
    for (int k = 1; k <= 5; ++k) {
      PerturbationTestSpec spec;
      spec.n = n;
      spec.s = s_max * k / 5;
      spec.trials = 1000;
      spec.boundary_trials = 100;
      spec.seed = split_seed(n, k);
      const auto r = check_perturbation_bound(c, spec, 1e-6);
      pass &= r.pass;
      trials += r.trials + r.boundary_trials;
      violations += r.violations;
      worst = std::max(worst, r.max_excess - r.bound);
    }
  }
  verdict(4, pass && violations == 0, seconds_since(t0), 300,
          strf("%d trials, %d violations, max H - H_min - s^2 = %.3e", trials, violations, worst));
}

void ac5(const MinimumLedger& ledger) {
  const auto t0 = Clock::now();
  bool pass = true;
  double worst_ratio = 0.0, worst_growth = 0.0, worst_fd = 0.0;
  for (const int n : kPerturbationN) {
    std::vector<double> grid;
    const double t_max = 1.0 / (2.0 * n);
    for (int k = 0; k < 8; ++k) grid.push_back(t_max * std::pow(10.0, -4.0 * k / 7.0));
    const auto r = check_second_derivative_bound(ledger.find(n)->configuration(), grid, 16, n, 1e-6);
    pass &= r.pass && r.max_fd_relative_error < 1e-4;
    worst_ratio = std::max(worst_ratio, r.max_second_derivative / r.bound);
    worst_growth = std::max(worst_growth, r.max_growth_ratio);
    worst_fd = std::max(worst_fd, r.max_fd_relative_error);
  }
  verdict(5, pass, seconds_since(t0), 0,
          strf("max g''/(10n^3) %.3f, max growth/(5t^2n^3) %.3f, fd rel err %.1e", worst_ratio, worst_growth,
               worst_fd));
}

struct MeanCheck {
  double mean, se, exact;
};

template <typename Draw>
MeanCheck sample_mean(int n, int samples, std::uint64_t seed, Draw draw, double exact) {
  std::vector<double> e(samples);
  parallel_for(samples, threads(), [&](std::size_t k) {
    Rng rng(split_seed(seed, k));
    e[k] = log_energy(draw(n, rng));
  });
  const double mean = std::accumulate(e.begin(), e.end(), 0.0) / samples;
  double var = 0.0;
  for (const double x : e) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / (samples - 1) / samples), exact};
}

void ac6() {
  const auto t0 = Clock::now();
  const auto u = sample_mean(8, 10000, 1, [](int n, Rng& r) { return sample_uniform(n, r); }, mean_energy_uniform(8));
  const auto g = sample_mean(16, 200, 2, [](int n, Rng& r) { return sample_gaf_zeros(n, r); }, mean_energy_gaf(16));
  const auto d = sample_mean(16, 200, 3, [](int n, Rng& r) { return sample_spherical_ensemble(n, r); },
                             mean_energy_dpp(16));
  const bool pass = std::abs(u.mean - u.exact) <= 3 * u.se && std::abs(g.mean - g.exact) <= 3 * g.se &&
                    std::abs(d.mean - d.exact) <= 3 * d.se + 0.1;
  verdict(6, pass, seconds_since(t0), 600,
          strf("uniform %.3f/%.3f (%.1f se), gaf %.3f/%.3f (%.1f se), dpp %.3f/%.3f (%.1f se)", u.mean, u.exact,
               std::abs(u.mean - u.exact) / u.se, g.mean, g.exact, std::abs(g.mean - g.exact) / g.se, d.mean, d.exact,
               std::abs(d.mean - d.exact) / d.se));
}

void ac7(MinimumLedger& ledger) {
  const auto t0 = Clock::now();
  bool pass = true;
  std::string detail;
  for (const int n : {10, 20, 50}) {
    GibbsParams p;
    p.n = n;
    p.beta = n;
    p.steps = 200000;
    p.burn_in = 100000;
    p.seed = 7000 + n;
    const auto chains = run_replicas(with_geometric_annealing(p, 8), 64, threads());

    // Final states that beat the ledger lower it first, which only tightens
    // the window.
    for (const auto& c : chains) ledger.offer(make_ledger_entry(c.state, LedgerSource::mcmc_refined));
    const double h_min = ledger.find(n)->energy;
    const double window = 10.0 * std::log(double(n));

    std::vector<double> energies;
    int violations = 0;
    for (const auto& c : chains) {
      const auto& e = c.diagnostics.post_burn_in_energies;
      energies.insert(energies.end(), e.begin(), e.end());
      violations += c.diagnostics.max_post_burn_in_energy - h_min > window;
    }
    for (const double e : energies) violations += e - h_min > window;
    const auto gap = mean_energy_gap(energies, n, p.beta, h_min);
    pass &= violations == 0 && gap.pass && gap.gap <= gap.bound;
    detail += strf("n=%d viol %d gap %.2f/%.2f  ", n, violations, gap.gap, gap.bound);
  }

  const int n = 32;
  std::vector<double> uniform(1000);
  for (std::size_t k = 0; k < uniform.size(); ++k) {
    Rng rng(split_seed(32, k));
    uniform[k] = log_energy(sample_uniform(n, rng));
  }
  const auto r = empirical_deviation_rate(uniform, n, 10.0, n, ledger.find(n)->energy);
  pass &= r.rate >= 0.99;
  detail += strf("uniform n=32 rate %.3f (needs >= 0.99)", r.rate);
  verdict(7, pass, seconds_since(t0), 1800, detail);
}

/// Directional derivative of H along the geodesic through x_k with unit
/// tangent e, by central differences of exact single-site moves.
double fd_directional(const Configurationd& c, Eigen::Index k, const Eigen::Vector3d& e, double h) {
  const Eigen::Vector3d x = c.point(k).vec();
  const auto plus = SpherePointd::normalized(std::cos(h) * x + std::sin(h) * e);
  const auto minus = SpherePointd::normalized(std::cos(h) * x - std::sin(h) * e);
  return (delta_energy_move(c, k, plus) - delta_energy_move(c, k, minus)) / (2 * h);
}

void ac8() {
  const auto t0 = Clock::now();
  double worst_grad = 0.0;
  for (int s = 0; s < 100; ++s) {
    const int n = 2 + s % 31;
    const auto c = oracle::random_config(n, 500 + s);
    const auto g = riemannian_gradient_matrix(c);
    Eigen::Matrix3Xd fd = Eigen::Matrix3Xd::Zero(3, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::Vector3d x = c.point(k).vec();
      Eigen::Vector3d a = x.unitOrthogonal();
      Eigen::Vector3d b = x.cross(a);
      fd.col(k) = fd_directional(c, k, a, 1e-5) * a + fd_directional(c, k, b, 1e-5) * b;
    }
    worst_grad = std::max(worst_grad, (fd - g).norm() / g.norm());
  }

  double worst_delta = 0.0;
  Rng rng(split_seed(88, 1));
  auto c = oracle::random_config(24, 88);
  for (int m = 0; m < 10000; ++m) {
    const Eigen::Index k = std::uniform_int_distribution<Eigen::Index>(0, c.size() - 1)(rng);
    const auto p = sample_uniform(2, rng).point(0);
    const double delta = delta_energy_move(c, k, p);
    auto moved = c;
    moved.set_point(k, p);
    const double recomputed =
        static_cast<double>(oracle::naive_energy(moved.matrix()) - oracle::naive_energy(c.matrix()));
    worst_delta = std::max(worst_delta, std::abs(delta - recomputed));
    c = moved;
  }

  const auto verts = oracle::dodecahedron();
  const int m = static_cast<int>(verts.size());
  std::vector<SpherePointd> pts;
  for (const auto& v : verts) pts.push_back(SpherePointd::normalized(v));
  std::vector<double> energies;
  std::map<std::pair<int, int>, std::size_t> index;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i != j) {
        index[{i, j}] = energies.size();
        energies.push_back(-2.0 * std::log(chordal_distance(pts[i], pts[j])));
      }
  const double beta = 2.0;
  const auto exact = gibbs_probabilities(DiscreteGibbsSystem::uniform(energies), beta);
  auto vertex_of = [&](const SpherePointd& p) {
    for (int i = 0; i < m; ++i)
      if ((p.vec() - pts[i].vec()).norm() < 1e-12) return i;
    return -1;
  };
  const SpherePointd start[] = {pts[0], pts[1]};
  MetropolisChain chain(Configurationd::from_points(start), beta, Rng(2718));
  auto propose = [&](const SpherePointd&, Rng& r) { return pts[std::uniform_int_distribution<int>(0, m - 1)(r)]; };
  std::vector<double> counts(energies.size(), 0.0);
  const int steps = 1000000;
  for (int s = 0; s < 10000; ++s) chain.step(propose);
  for (int s = 0; s < steps; ++s) {
    chain.step(propose);
    counts[index.at({vertex_of(chain.state().point(0)), vertex_of(chain.state().point(1))})] += 1.0;
  }
  double tv = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) tv += std::abs(counts[k] / steps - exact[k]);
  tv /= 2;

  verdict(8, worst_grad < 1e-5 && worst_delta < 1e-9 && tv < 0.05, seconds_since(t0), 0,
          strf("gradient rel err %.1e, delta H err %.1e, bridge TV %.4f", worst_grad, worst_delta, tv));
}

}  // namespace

int main() {
  MinimumLedger ledger;
  ac1();
  ac2();
  ac3(ledger);
  ac4(ledger);
  ac5(ledger);
  ac6();
  ac7(ledger);
  ac8();
  std::printf("%s: %d of 8 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
