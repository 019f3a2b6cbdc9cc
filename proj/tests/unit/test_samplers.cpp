#include "coulomb/gibbs.hpp"
#include "coulomb/minimize.hpp"
#include "coulomb/samplers.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

using namespace coulomb;

namespace {

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double standard_error(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (const double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (v.size() - 1) / v.size());
}

template <typename Sampler>
std::vector<double> sample_energies(int n, int samples, std::uint64_t seed, Sampler sampler) {
  std::vector<double> e;
  for (int k = 0; k < samples; ++k) {
    Rng rng(split_seed(seed, k));
    e.push_back(log_energy(sampler(n, rng)));
  }
  return e;
}

/// log sqrt(C(n, k))
double log_binomial_weight(int n, int k) {
  return 0.5 * (std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

bool same_point_set(const Eigen::Matrix3Xd& a, const Eigen::Matrix3Xd& b, double tol) {
  std::vector<bool> used(static_cast<std::size_t>(b.cols()), false);
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    bool found = false;
    for (Eigen::Index j = 0; j < b.cols() && !found; ++j)
      if (!used[static_cast<std::size_t>(j)] && (a.col(i) - b.col(j)).norm() < tol)
        used[static_cast<std::size_t>(j)] = found = true;
    if (!found) return false;
  }
  return true;
}

GibbsParams small_params(int n, double beta, std::int64_t steps, std::uint64_t seed) {
  GibbsParams p;
  p.n = n;
  p.beta = beta;
  p.steps = steps;
  p.burn_in = steps / 2;
  p.seed = seed;
  return p;
}

}  // namespace

TEST(Uniform, SizeDeterminismAndMean) {
  Rng a(1), b(1);
  const auto x = sample_uniform(2, a);
  EXPECT_EQ(x.size(), 2);
  EXPECT_EQ(x.matrix(), sample_uniform(2, b).matrix());

  Rng rng(2);
  const auto big = sample_uniform(10000, rng);
  EXPECT_LT(big.matrix().rowwise().mean().norm(), 0.05);
  EXPECT_THROW(sample_uniform(1, rng), std::domain_error);
}

TEST(Gaf, ZerosFromCoefficientsRecoverKnownRoots) {
  const int n = 5;
  const std::vector<Complex> roots = {Complex(0.5, 0.1), Complex(-2.0, 1.0), Complex(0.0, -0.7), Complex(3.0, 3.0),
                                      Complex(-0.2, 0.0)};
  const auto a = poly_from_roots(roots, Complex(0.8, -0.3));
  std::vector<Complex> xi(a.size());
  for (int k = 0; k <= n; ++k) xi[k] = a[k] / std::exp(log_binomial_weight(n, k));
  const auto c = gaf_zeros_from_xi(xi);
  ASSERT_TRUE(c.has_value());
  Eigen::Matrix3Xd expected(3, n);
  for (int i = 0; i < n; ++i) expected.col(i) = plane_to_sphere(roots[i]).vec();
  EXPECT_TRUE(same_point_set(c->matrix(), expected, 1e-10));
}

TEST(Gaf, VanishingTopCoefficientsBecomeNorthPoles) {
  const std::vector<Complex> xi = {Complex(1.0), Complex(0.3, 0.2), Complex(-0.5), Complex(0.0), Complex(1e-13)};
  SamplerStats stats;
  const auto c = gaf_zeros_from_xi(xi, &stats);
  ASSERT_TRUE(c.has_value());
  EXPECT_EQ(c->size(), 4);
  EXPECT_EQ(stats.points_at_infinity, 2);
  int poles = 0;
  for (Eigen::Index i = 0; i < 4; ++i) poles += c->matrix().col(i) == Eigen::Vector3d(0, 0, 1);
  EXPECT_EQ(poles, 2);
}

TEST(Gaf, SizeAndDeterminism) {
  Rng a(5), b(5);
  for (int n : {2, 3, 16, 100}) {
    const auto x = sample_gaf_zeros(n, a);
    EXPECT_EQ(x.size(), n);
    EXPECT_EQ(x.matrix(), sample_gaf_zeros(n, b).matrix());
  }
}

TEST(Gaf, MeanEnergyMatchesClosedForm) {
  const auto e = sample_energies(16, 200, 77, [](int n, Rng& r) { return sample_gaf_zeros(n, r); });
  EXPECT_LE(std::abs(mean(e) - mean_energy_gaf(16)), 3 * standard_error(e));
}

TEST(SphericalEnsemble, SizeDeterminismAndMean) {
  Rng a(6), b(6);
  EXPECT_EQ(sample_spherical_ensemble(7, a).matrix(), sample_spherical_ensemble(7, b).matrix());
  const auto e = sample_energies(16, 200, 88, [](int n, Rng& r) { return sample_spherical_ensemble(n, r); });
  EXPECT_LE(std::abs(mean(e) - mean_energy_dpp(16)), 3 * standard_error(e) + 0.1);
}

TEST(Metropolis, AcceptRule) {
  Rng rng(1);
  EXPECT_TRUE(metropolis_accept(5.0, -1.0, rng));
  EXPECT_TRUE(metropolis_accept(5.0, 0.0, rng));
  int accepted = 0;
  for (int i = 0; i < 100000; ++i) accepted += metropolis_accept(2.0, 0.5, rng);
  EXPECT_NEAR(accepted / 1e5, std::exp(-1.0), 0.01);
}

TEST(GibbsParams, Validation) {
  auto p = small_params(5, 5.0, 1000, 0);
  EXPECT_NO_THROW(p.validate());
  auto bad = p;
  bad.beta = 0.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = p;
  bad.burn_in = 1000;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = p;
  bad.annealing = {{1.0, 400}, {5.0, 500}};
  EXPECT_THROW(bad.validate(), std::invalid_argument);  // sums to 900
  bad.annealing = {{2.0, 400}, {1.0, 600}};
  EXPECT_THROW(bad.validate(), std::invalid_argument);  // decreasing, wrong final beta
  bad.annealing = {{1.0, 600}, {5.0, 400}};
  EXPECT_THROW(bad.validate(), std::invalid_argument);  // burn-in ends inside stage 0
  bad.annealing = {{1.0, 400}, {5.0, 600}};
  EXPECT_NO_THROW(bad.validate());
}

TEST(GibbsParams, GeometricSchedule) {
  const auto p = with_geometric_annealing(small_params(10, 10.0, 8000, 0), 8);
  ASSERT_EQ(p.annealing.size(), 8u);
  EXPECT_DOUBLE_EQ(p.annealing.front().beta, 1.0);
  EXPECT_DOUBLE_EQ(p.annealing.back().beta, 10.0);
  std::int64_t total = 0;
  for (std::size_t k = 0; k < p.annealing.size(); ++k) {
    total += p.annealing[k].steps;
    if (k > 0) {
      EXPECT_NEAR(p.annealing[k].beta / p.annealing[k - 1].beta, std::pow(10.0, 1.0 / 7), 1e-12);
    }
  }
  EXPECT_EQ(total, 8000);
  EXPECT_NO_THROW(p.validate());
}

TEST(Mcmc, DiagnosticsInvariants) {
  const auto r = mcmc_coulomb(with_geometric_annealing(small_params(8, 8.0, 20000, 3)));
  const auto& d = r.diagnostics;
  EXPECT_GE(d.acceptance_rate, 0.0);
  EXPECT_LE(d.acceptance_rate, 1.0);
  EXPECT_FALSE(d.energy_trace.empty());
  EXPECT_EQ(d.energy_trace.back().step, 20000);
  EXPECT_EQ(d.post_burn_in_steps, 10000);
  EXPECT_EQ(d.post_burn_in_energies.size(), 10000u / 8);
  EXPECT_GT(d.final_proposal_t, 0.0);
  EXPECT_LE(d.best_energy_seen, log_energy(r.state) + 1e-9);
  EXPECT_NEAR(d.energy_trace.back().energy, log_energy(r.state), 1e-9);
}

TEST(Mcmc, TinyStepsAreAlmostAlwaysAccepted) {
  auto p = small_params(10, 10.0, 20000, 4);
  p.burn_in = 0;
  p.proposal_t = 1e-7;
  EXPECT_GT(mcmc_coulomb(p).diagnostics.acceptance_rate, 0.99);
}

TEST(Mcmc, Reproducible) {
  const auto p = with_geometric_annealing(small_params(6, 6.0, 5000, 9), 4);
  EXPECT_EQ(mcmc_coulomb(p).state.matrix(), mcmc_coulomb(p).state.matrix());
}

TEST(Replicas, SingleChainMatchesMcmcAndThreadsDoNotMatter) {
  const auto p = small_params(6, 6.0, 4000, 21);
  const auto one = run_replicas(p, 1);
  EXPECT_EQ(one[0].state.matrix(), mcmc_coulomb(p).state.matrix());
  const auto serial = run_replicas(p, 6, 1);
  const auto threaded = run_replicas(p, 6, 4);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(serial[i].state.matrix(), threaded[i].state.matrix());
  for (int i = 1; i < 6; ++i)
    EXPECT_GT(std::abs(log_energy(serial[i].state) - log_energy(serial[0].state)), 1e-12);
}

// Two points restricted to the dodecahedron vertices: the Metropolis chain
// with uniform vertex proposals against exact enumeration of the 380 states.
TEST(Mcmc, DiscreteBridgeMatchesEnumeration) {
  const auto verts = oracle::dodecahedron();
  const int m = static_cast<int>(verts.size());
  std::vector<SpherePointd> pts;
  for (const auto& v : verts) pts.push_back(SpherePointd::normalized(v));

  std::vector<double> energies;
  std::vector<std::pair<int, int>> states;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      states.push_back({i, j});
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
  MetropolisChain chain(Configurationd::from_points(start), beta, Rng(314));
  auto propose = [&](const SpherePointd&, Rng& rng) {
    return pts[std::uniform_int_distribution<int>(0, m - 1)(rng)];
  };
  std::map<std::pair<int, int>, double> counts;
  const int steps = 1000000;
  for (int s = 0; s < 10000; ++s) chain.step(propose);
  for (int s = 0; s < steps; ++s) {
    chain.step(propose);
    counts[{vertex_of(chain.state().point(0)), vertex_of(chain.state().point(1))}] += 1.0;
  }
  double tv = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) tv += std::abs(counts[states[k]] / steps - exact[k]);
  tv /= 2.0;
  EXPECT_LT(tv, 0.05);
  EXPECT_EQ(counts.count({-1, -1}), 0u);
}

TEST(Mcmc, WindowAtBetaEqualsNForTen) {
  MinimizeParams mp;
  mp.restarts = 8;
  const double h_min = estimate_min(10, mp).entry.energy;
  const auto r = mcmc_coulomb(with_geometric_annealing(small_params(10, 10.0, 200000, 10)));
  const auto& e = r.diagnostics.post_burn_in_energies;
  ASSERT_FALSE(e.empty());
  int inside = 0;
  for (const double x : e) inside += x - h_min <= 10.0 * std::log(10.0);
  EXPECT_GE(static_cast<double>(inside) / e.size(), 0.99);
}
