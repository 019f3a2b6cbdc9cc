#include "coulomb/minimize.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace coulomb;

namespace {

MinimizeParams restarts(int r, std::uint64_t seed = 0) {
  MinimizeParams p;
  p.restarts = r;
  p.seed = seed;
  return p;
}

}  // namespace

TEST(LocalMinimize, AntipodalPairIsAFixedPoint) {
  const auto c = oracle::make(oracle::antipodal());
  const auto r = local_minimize(c, MinimizeParams{});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_NEAR(r.energy, -2 * std::numbers::ln2, 1e-15);
}

TEST(LocalMinimize, NeverIncreasesEnergyAndStaysOnTheSphere) {
  for (int n : {5, 13, 30}) {
    const auto start = oracle::random_config(n, 40 + n);
    const auto r = local_minimize(start, MinimizeParams{});
    EXPECT_LE(r.energy, log_energy(start));
    EXPECT_TRUE(r.converged) << n;
    EXPECT_LE(r.grad_norm, 1e-10 * n);
    for (Eigen::Index i = 0; i < n; ++i) EXPECT_NEAR(r.config.matrix().col(i).norm(), 1.0, 1e-14);
  }
}

TEST(EstimateMin, SmallKnownMinima) {
  EXPECT_NEAR(estimate_min(2, restarts(4)).entry.energy, -2 * std::numbers::ln2, 1e-9);
  EXPECT_NEAR(estimate_min(3, restarts(20)).entry.energy, -3 * std::log(3.0), 1e-8);
  EXPECT_NEAR(estimate_min(4, restarts(20)).entry.energy, -6 * std::log(8.0 / 3.0), 1e-8);
}

TEST(EstimateMin, MatchesOrBeatsTheIcosahedron) {
  const double ico = log_energy(oracle::make(oracle::icosahedron()));
  const auto r = estimate_min(12, restarts(32));
  EXPECT_LE(r.entry.energy, ico + 1e-6);
  EXPECT_TRUE(r.separation_ok);
  EXPECT_EQ(r.entry.source, LedgerSource::optimizer);
}

TEST(EstimateMin, DeterministicAcrossThreadCounts) {
  auto a = restarts(8, 5), b = restarts(8, 5);
  b.threads = 4;
  EXPECT_EQ(estimate_min(9, a).entry.points, estimate_min(9, b).entry.points);
}

TEST(EstimateMin, WarmStartWinsAreMarked) {
  const Configurationd warm[] = {oracle::make(oracle::icosahedron())};
  const auto r = estimate_min(12, restarts(0), warm);
  EXPECT_EQ(r.entry.source, LedgerSource::mcmc_refined);
  EXPECT_THROW(estimate_min(12, restarts(0)), std::invalid_argument);
}

TEST(EstimateMin, LedgerValueNeverIncreases) {
  MinimumLedger ledger;
  double last = INFINITY;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    estimate_min(15, restarts(2, seed), {}, &ledger);
    const double v = ledger.find(15)->energy;
    EXPECT_LE(v, last);
    last = v;
  }
}

TEST(Polyhedra, EnergiesMatchExplicitCoordinates) {
  EXPECT_FALSE(polyhedral_configuration(5).has_value());
  const std::pair<int, oracle::Points> cases[] = {{2, oracle::antipodal()},
                                                  {3, oracle::triangle()},
                                                  {4, oracle::tetrahedron()},
                                                  {6, oracle::octahedron()},
                                                  {12, oracle::icosahedron()}};
  for (const auto& [n, pts] : cases) {
    const auto c = polyhedral_configuration(n);
    ASSERT_TRUE(c.has_value()) << n;
    EXPECT_NEAR(log_energy(*c), log_energy(oracle::make(pts)), 1e-12) << n;
  }
}

TEST(MinimizeParams, Validation) {
  MinimizeParams p;
  p.backtrack_factor = 1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.max_iters = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  EXPECT_DOUBLE_EQ(p.tolerance_for(10), 1e-9);
}
