#pragma once

// Persistent record of the lowest energy found so far for each N. It is the
// operational stand-in for min H_N: every "H - min H_N" computed elsewhere
// subtracts the ledger value, which can only overestimate the true minimum.

#include "coulomb/energy.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace coulomb {

enum class LedgerSource { analytic, optimizer, mcmc_refined };

std::string to_string(LedgerSource s);
LedgerSource ledger_source_from_string(const std::string& s);

struct MinimumLedgerEntry {
  int n = 0;
  double energy = 0.0;
  std::string digest;
  LedgerSource source = LedgerSource::optimizer;
  std::string timestamp;
  Eigen::Matrix3Xd points;

  Configurationd configuration() const { return Configurationd(points); }
};

/// Hex SHA-256 of the coordinates (column-major doubles, little endian).
std::string config_digest(const Configurationd& c);

/// Entry for `c` with its energy recomputed and the current UTC time.
MinimumLedgerEntry make_ledger_entry(const Configurationd& c, LedgerSource source);

/// Entries stored within this distance of the incumbent count as ties and
/// never replace it.
inline constexpr double kLedgerTieTolerance = 1e-12;

/// Thread-safe; updates are serialized and, when a path is attached,
/// written back atomically (temporary file + rename).
class MinimumLedger {
 public:
  MinimumLedger() = default;

  /// Attaches `path`; loads it when the file exists.
  static MinimumLedger open(const std::filesystem::path& path);

  MinimumLedger(const MinimumLedger& other);
  MinimumLedger& operator=(const MinimumLedger& other);

  std::optional<MinimumLedgerEntry> find(int n) const;
  std::vector<MinimumLedgerEntry> entries() const;

  /// Stores `entry` if it beats the incumbent by more than the tie
  /// tolerance; returns whether it did.
  bool offer(const MinimumLedgerEntry& entry);

  /// Writes to the attached path; no-op when none is attached.
  void save() const;
  const std::optional<std::filesystem::path>& path() const { return path_; }

  nlohmann::json to_json() const;
  /// Rejects entries whose stored energy disagrees with their points.
  static MinimumLedger from_json(const nlohmann::json& j);

 private:
  void save_locked() const;

  mutable std::mutex mutex_;
  std::map<int, MinimumLedgerEntry> entries_;
  std::optional<std::filesystem::path> path_;
};

inline constexpr int kLedgerSchemaVersion = 1;
inline constexpr const char* kLedgerPathEnv = "COULOMB_LEDGER";

/// $COULOMB_LEDGER, or coulomb_ledger.json in the working directory.
std::filesystem::path default_ledger_path();

}  // namespace coulomb
