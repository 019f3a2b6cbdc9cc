#include "coulomb/ledger.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <unistd.h>

using namespace coulomb;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("coulomb_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Ledger, DigestIsStableAndSensitive) {
  const auto a = oracle::make(oracle::tetrahedron());
  EXPECT_EQ(config_digest(a), config_digest(a));
  EXPECT_EQ(config_digest(a).size(), 64u);
  auto b = a;
  b.set_point(0, SpherePointd::normalized(a.point(0).vec() + Eigen::Vector3d(1e-12, 0, 0)));
  EXPECT_NE(config_digest(a), config_digest(b));
}

TEST(Ledger, OfferKeepsTheLowestAndIgnoresTies) {
  MinimumLedger ledger;
  const auto tet = oracle::make(oracle::tetrahedron());
  const auto other = oracle::random_config(4, 1);
  EXPECT_TRUE(ledger.offer(make_ledger_entry(other, LedgerSource::optimizer)));
  EXPECT_TRUE(ledger.offer(make_ledger_entry(tet, LedgerSource::analytic)));
  EXPECT_FALSE(ledger.offer(make_ledger_entry(other, LedgerSource::optimizer)));
  auto tie = make_ledger_entry(tet, LedgerSource::optimizer);
  tie.energy -= 0.5 * kLedgerTieTolerance;
  EXPECT_FALSE(ledger.offer(tie));
  EXPECT_EQ(ledger.find(4)->source, LedgerSource::analytic);
  EXPECT_FALSE(ledger.find(5).has_value());
}

TEST(Ledger, PersistsAndReloads) {
  const auto dir = temp_dir("persist");
  const fs::path path = dir / "ledger.json";
  {
    auto ledger = MinimumLedger::open(path);
    ledger.offer(make_ledger_entry(oracle::make(oracle::octahedron()), LedgerSource::analytic));
    ledger.offer(make_ledger_entry(oracle::random_config(7, 3), LedgerSource::optimizer));
  }
  EXPECT_FALSE(fs::exists(path.string() + ".tmp"));
  const auto back = MinimumLedger::open(path);
  ASSERT_TRUE(back.find(6).has_value());
  EXPECT_EQ(back.find(6)->energy, log_energy(oracle::make(oracle::octahedron())));
  EXPECT_EQ(back.find(7)->points, oracle::random_config(7, 3).matrix());
  EXPECT_EQ(back.entries().size(), 2u);
  std::ifstream in(path);
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("schema_version"), kLedgerSchemaVersion);
  fs::remove_all(dir);
}

TEST(Ledger, RejectsEntriesWhoseEnergyDisagrees) {
  MinimumLedger ledger;
  ledger.offer(make_ledger_entry(oracle::make(oracle::tetrahedron()), LedgerSource::analytic));
  auto j = ledger.to_json();
  j["entries"][0]["energy"] = -6.0;
  EXPECT_THROW(MinimumLedger::from_json(j), std::invalid_argument);
  j = ledger.to_json();
  j["schema_version"] = 99;
  EXPECT_THROW(MinimumLedger::from_json(j), std::invalid_argument);
}

TEST(Ledger, FailedWriteLeavesStateUnchanged) {
  const auto dir = temp_dir("fail");
  const fs::path path = dir / "missing_subdir" / "ledger.json";
  auto ledger = MinimumLedger::open(path);
  EXPECT_ANY_THROW(ledger.offer(make_ledger_entry(oracle::make(oracle::tetrahedron()), LedgerSource::analytic)));
  EXPECT_FALSE(ledger.find(4).has_value());
  fs::remove_all(dir);
}

TEST(Ledger, SourceNames) {
  for (const auto s : {LedgerSource::analytic, LedgerSource::optimizer, LedgerSource::mcmc_refined})
    EXPECT_EQ(ledger_source_from_string(to_string(s)), s);
  EXPECT_EQ(to_string(LedgerSource::mcmc_refined), "mcmc-refined");
  EXPECT_THROW(ledger_source_from_string("guess"), std::invalid_argument);
}

TEST(Ledger, DefaultPathFollowsEnvironment) {
  ::setenv(kLedgerPathEnv, "/tmp/some_ledger.json", 1);
  EXPECT_EQ(default_ledger_path(), fs::path("/tmp/some_ledger.json"));
  ::unsetenv(kLedgerPathEnv);
  EXPECT_EQ(default_ledger_path(), fs::path("coulomb_ledger.json"));
}
