#pragma once

// JSON form of the verification reports. Every report carries
//   {schema_version, check, n, beta, params, theoretical_bound,
//    empirical_value, ci, pass}
// plus check-specific detail under "details".

#include "coulomb/gibbs.hpp"
#include "coulomb/minimize.hpp"
#include "coulomb/verify.hpp"

#include "json.hpp"

#include <string>

namespace coulomb {

inline constexpr int kReportSchemaVersion = 1;

/// Note attached to every report measured against the ledger.
inline constexpr const char* kLedgerNote =
    "H - min is measured against the ledger value, an upper surrogate of the true minimum; "
    "violations can only be under-reported";

nlohmann::json to_json(const TheoremQuantities& q);
nlohmann::json to_json(const PerturbationReport& r);
nlohmann::json to_json(const SecondDerivativeReport& r);
nlohmann::json to_json(const DeviationReport& r);
nlohmann::json to_json(const MeanGapReport& r);
nlohmann::json to_json(const LemmaSweepReport& r);
nlohmann::json to_json(const EstimateResult& r);

/// Plain-text table of a report or an array of reports.
std::string render_table(const nlohmann::json& reports);

}  // namespace coulomb
