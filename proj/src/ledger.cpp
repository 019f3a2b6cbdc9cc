#include "coulomb/ledger.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace coulomb {

std::string to_string(LedgerSource s) {
  switch (s) {
    case LedgerSource::analytic: return "analytic";
    case LedgerSource::optimizer: return "optimizer";
    case LedgerSource::mcmc_refined: return "mcmc-refined";
  }
  throw std::logic_error("unknown LedgerSource");
}

LedgerSource ledger_source_from_string(const std::string& s) {
  if (s == "analytic") return LedgerSource::analytic;
  if (s == "optimizer") return LedgerSource::optimizer;
  if (s == "mcmc-refined") return LedgerSource::mcmc_refined;
  throw std::invalid_argument("unknown ledger source '" + s + "'");
}

std::string config_digest(const Configurationd& c) {
  static_assert(std::endian::native == std::endian::little, "digest assumes little-endian doubles");
  const auto& m = c.matrix();
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double), md.data(), &len, EVP_sha256(),
                 nullptr) != 1)
    throw std::runtime_error("config_digest: SHA-256 failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return out.str();
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json entry_to_json(const MinimumLedgerEntry& e) {
  nlohmann::json pts = nlohmann::json::array();
  for (Eigen::Index i = 0; i < e.points.cols(); ++i)
    pts.push_back({e.points(0, i), e.points(1, i), e.points(2, i)});
  return {{"n", e.n},           {"energy", e.energy},       {"digest", e.digest},
          {"source", to_string(e.source)}, {"timestamp", e.timestamp}, {"points", pts}};
}

MinimumLedgerEntry entry_from_json(const nlohmann::json& j) {
  MinimumLedgerEntry e;
  e.n = j.at("n").get<int>();
  e.energy = j.at("energy").get<double>();
  e.digest = j.at("digest").get<std::string>();
  e.source = ledger_source_from_string(j.at("source").get<std::string>());
  e.timestamp = j.at("timestamp").get<std::string>();
  const auto& pts = j.at("points");
  if (static_cast<int>(pts.size()) != e.n) throw std::invalid_argument("ledger entry: point count differs from n");
  e.points.resize(3, e.n);
  for (int i = 0; i < e.n; ++i)
    for (int k = 0; k < 3; ++k) e.points(k, i) = pts.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k)).get<double>();
  const double recomputed = log_energy(e.configuration());
  if (std::abs(recomputed - e.energy) > 1e-9 * std::max(1.0, std::abs(recomputed)))
    throw std::invalid_argument("ledger entry for n=" + std::to_string(e.n) + ": energy does not match its points");
  return e;
}

}  // namespace

MinimumLedgerEntry make_ledger_entry(const Configurationd& c, LedgerSource source) {
  MinimumLedgerEntry e;
  e.n = static_cast<int>(c.size());
  e.energy = log_energy(c);
  e.digest = config_digest(c);
  e.source = source;
  e.timestamp = utc_timestamp();
  e.points = c.matrix();
  return e;
}

MinimumLedger::MinimumLedger(const MinimumLedger& other) {
  std::lock_guard lock(other.mutex_);
  entries_ = other.entries_;
  path_ = other.path_;
}

MinimumLedger& MinimumLedger::operator=(const MinimumLedger& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mutex_, other.mutex_);
  entries_ = other.entries_;
  path_ = other.path_;
  return *this;
}

MinimumLedger MinimumLedger::open(const std::filesystem::path& path) {
  MinimumLedger ledger;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read ledger " + path.string());
    ledger = from_json(nlohmann::json::parse(in));
  }
  ledger.path_ = path;
  return ledger;
}

std::optional<MinimumLedgerEntry> MinimumLedger::find(int n) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(n);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<MinimumLedgerEntry> MinimumLedger::entries() const {
  std::lock_guard lock(mutex_);
  std::vector<MinimumLedgerEntry> out;
  for (const auto& [n, e] : entries_) out.push_back(e);
  return out;
}

bool MinimumLedger::offer(const MinimumLedgerEntry& entry) {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(entry.n);
  if (it != entries_.end() && !(entry.energy < it->second.energy - kLedgerTieTolerance)) return false;
  auto previous = entries_;
  entries_[entry.n] = entry;
  try {
    save_locked();
  } catch (...) {
    entries_ = std::move(previous);
    throw;
  }
  return true;
}

void MinimumLedger::save() const {
  std::lock_guard lock(mutex_);
  save_locked();
}

void MinimumLedger::save_locked() const {
  if (!path_) return;
  nlohmann::json j = {{"schema_version", kLedgerSchemaVersion}, {"entries", nlohmann::json::array()}};
  for (const auto& [n, e] : entries_) j["entries"].push_back(entry_to_json(e));
  const std::filesystem::path tmp = path_->string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write ledger " + tmp.string());
    out << j.dump(2) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("failed writing ledger " + tmp.string());
  }
  std::filesystem::rename(tmp, *path_);
}

nlohmann::json MinimumLedger::to_json() const {
  std::lock_guard lock(mutex_);
  nlohmann::json j = {{"schema_version", kLedgerSchemaVersion}, {"entries", nlohmann::json::array()}};
  for (const auto& [n, e] : entries_) j["entries"].push_back(entry_to_json(e));
  return j;
}

MinimumLedger MinimumLedger::from_json(const nlohmann::json& j) {
  if (j.at("schema_version").get<int>() != kLedgerSchemaVersion)
    throw std::invalid_argument("ledger: unsupported schema_version");
  MinimumLedger ledger;
  for (const auto& item : j.at("entries")) {
    MinimumLedgerEntry e = entry_from_json(item);
    const auto it = ledger.entries_.find(e.n);
    if (it == ledger.entries_.end() || e.energy < it->second.energy) ledger.entries_[e.n] = std::move(e);
  }
  return ledger;
}

std::filesystem::path default_ledger_path() {
  if (const char* env = std::getenv(kLedgerPathEnv); env && *env) return env;
  return "coulomb_ledger.json";
}

}  // namespace coulomb
