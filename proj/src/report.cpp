#include "coulomb/report.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace coulomb {

namespace {

using nlohmann::json;

/// JSON has no NaN or infinities; they become null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json base(const std::string& check, int n, double beta, json params, double theoretical, json empirical, json ci,
          bool pass) {
  return {{"schema_version", kReportSchemaVersion},
          {"check", check},
          {"n", n > 0 ? json(n) : json(nullptr)},
          {"beta", number(beta)},
          {"params", std::move(params)},
          {"theoretical_bound", theoretical},
          {"empirical_value", std::move(empirical)},
          {"ci", std::move(ci)},
          {"pass", pass}};
}

}  // namespace

json to_json(const TheoremQuantities& q) {
  json j = base("theorem", q.n, q.beta, {{"c", q.c}}, q.log_prob_bound, nullptr, nullptr, true);
  j["details"] = {{"kappa", q.kappa},
                  {"log_prob_bound", q.log_prob_bound},
                  {"prob_bound", q.prob_bound},
                  {"mean_bound", q.mean_bound},
                  {"c_beta", q.c_beta_sphere},
                  {"delta", q.delta},
                  {"trivial_bound_warning", q.trivial}};
  if (q.trivial) j["warning"] = "kappa <= 0: the probability bound is trivial for this c";
  return j;
}

json to_json(const PerturbationReport& r) {
  json j = base("perturbation", r.n, std::nan(""), {{"s", r.s}, {"trials", r.trials}, {"boundary_trials", r.boundary_trials}},
                r.bound, r.max_excess, nullptr, r.pass);
  j["details"] = {{"t", r.t}, {"radius", r.radius}, {"violations", r.violations}, {"note", kLedgerNote}};
  return j;
}

json to_json(const SecondDerivativeReport& r) {
  json j = base("second-derivative", r.n, std::nan(""), {{"directions", r.directions}, {"t_grid", r.t_grid}}, r.bound,
                r.max_second_derivative, nullptr, r.pass);
  j["details"] = {{"max_second_derivative_scaled_directions", r.max_second_derivative_scaled},
                  {"max_fd_relative_error", r.max_fd_relative_error},
                  {"max_growth_ratio", r.max_growth_ratio},
                  {"min_increment", r.min_increment},
                  {"direction_convention", "each v_i a unit tangent vector; v_i/sqrt(n) reported alongside"}};
  return j;
}

json to_json(const DeviationReport& r) {
  json j = base("deviation-rate", r.n, r.beta, {{"c", r.c}, {"samples", r.samples}}, r.log_theoretical_bound, r.rate,
                json::array({r.ci_low, r.ci_high}), r.pass);
  j["details"] = {{"violations", r.violations},
                  {"ledger_energy", r.ledger_energy},
                  {"lowest_energy", r.lowest_energy},
                  {"ledger_improvement", r.ledger_improvement},
                  {"trivial_bound_warning", r.trivial},
                  {"theoretical_bound_is_log", true},
                  {"note", kLedgerNote}};
  return j;
}

json to_json(const MeanGapReport& r) {
  json j = base("mean-gap", r.n, r.beta, {{"samples", r.samples}}, r.bound, r.gap,
                json::array({r.gap - 3.0 * r.standard_error, r.gap + 3.0 * r.standard_error}), r.pass);
  j["details"] = {{"mean", r.mean}, {"standard_error", r.standard_error}, {"ledger_energy", r.ledger_energy},
                  {"note", kLedgerNote}};
  return j;
}

json to_json(const LemmaSweepReport& r) {
  json j = base("lemmas", 0, std::nan(""), {{"systems", r.systems}}, 0.0,
                static_cast<double>(r.concentration_violations + r.expectation_violations), nullptr, r.pass);
  j["details"] = {{"concentration_checks", r.concentration_checks},
                  {"expectation_checks", r.expectation_checks},
                  {"concentration_violations", r.concentration_violations},
                  {"expectation_violations", r.expectation_violations},
                  {"rejected_invalid_constants", r.rejected_invalid_constants},
                  {"worst_concentration_log_slack", number(r.worst_concentration_slack)},
                  {"worst_expectation_slack", number(r.worst_expectation_slack)}};
  return j;
}

json to_json(const EstimateResult& r) {
  const double bound = separation_lower_bound(r.entry.n);
  json j = base("separation", r.entry.n, std::nan(""), json::object(), bound, r.separation, nullptr, r.separation_ok);
  j["details"] = {{"energy", r.entry.energy},
                  {"gradient_inf_norm", r.best.grad_norm},
                  {"converged", r.best.converged},
                  {"stalled", r.best.stalled},
                  {"iterations", r.best.iterations},
                  {"digest", r.entry.digest},
                  {"source", to_string(r.entry.source)},
                  {"ledger_improved", r.ledger_improved}};
  return j;
}

std::string render_table(const json& reports) {
  const json list = reports.is_array() ? reports : json::array({reports});
  std::ostringstream out;
  out << std::left << std::setw(30) << "check" << std::setw(6) << "n" << std::setw(12) << "beta" << std::setw(18)
      << "theoretical" << std::setw(18) << "empirical" << "pass\n";
  auto cell = [](const json& v) -> std::string {
    if (v.is_null()) return "-";
    if (v.is_number()) {
      std::ostringstream s;
      s << std::setprecision(8) << v.get<double>();
      return s.str();
    }
    return v.dump();
  };
  for (const auto& r : list) {
    out << std::left << std::setw(30) << r.value("check", std::string("?")) << std::setw(6) << cell(r.value("n", json()))
        << std::setw(12) << cell(r.value("beta", json())) << std::setw(18) << cell(r.value("theoretical_bound", json()))
        << std::setw(18) << cell(r.value("empirical_value", json())) << (r.value("pass", false) ? "yes" : "NO") << '\n';
    if (r.contains("warning")) out << "  warning: " << r["warning"].get<std::string>() << '\n';
  }
  return out.str();
}

}  // namespace coulomb
