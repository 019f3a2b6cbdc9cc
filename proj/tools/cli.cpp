#include "cli.hpp"

#include "coulomb/energy.hpp"
#include "coulomb/ledger.hpp"
#include "coulomb/minimize.hpp"
#include "coulomb/parallel.hpp"
#include "coulomb/random.hpp"
#include "coulomb/report.hpp"
#include "coulomb/samplers.hpp"
#include "coulomb/verify.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace coulomb::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

/// Bad configuration or usage; exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A hard check failed or an output could not be written; exit code 1.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string strf(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string strf(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  va_list copy;
  va_copy(copy, args);
  const int len = std::vsnprintf(nullptr, 0, fmt, copy);
  va_end(copy);
  std::string s(static_cast<std::size_t>(len) + 1, '\0');
  std::vsnprintf(s.data(), s.size(), fmt, args);
  va_end(args);
  s.pop_back();
  return s;
}

// ---------------------------------------------------------------------------
// Config fields
//
// Every command owns a registry of fields. Each field has a JSON key, an
// optional command-line flag bound to a shadow copy of the config, and a
// dump rule for echoing. Resolution order: defaults, then the config file,
// then flags given explicitly on the command line.

template <typename Cfg>
class Fields {
 public:
  explicit Fields(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_, "JSON config file; flags given explicitly override it");
  }
  Fields(const Fields&) = delete;
  Fields& operator=(const Fields&) = delete;

  /// `flag` empty: config file only.
  template <typename Member>
  void add(const std::string& key, const std::string& flag, Member member, const std::string& help) {
    using T = std::remove_cvref_t<decltype(std::declval<Cfg&>().*member)>;
    Field f;
    f.key = key;
    if (!flag.empty()) {
      if constexpr (std::is_same_v<T, bool>)
        f.opt = app_->add_flag(flag, shadow_.*member, help);
      else
        f.opt = app_->add_option(flag, shadow_.*member, help);
    }
    f.load = [key, member](Cfg& c, const json& j) { c.*member = j.at(key).template get<T>(); };
    f.from_flag = [this, member](Cfg& c) { c.*member = shadow_.*member; };
    f.dump = [key, member](const Cfg& c, json& j) { j[key] = c.*member; };
    fields_.push_back(std::move(f));
  }

  CLI::App* app() const { return app_; }

  Cfg resolve() const {
    Cfg c;
    if (!config_path_.empty()) {
      const json file = read_config(config_path_);
      std::set<std::string> known;
      for (const auto& f : fields_) known.insert(f.key);
      for (const auto& [key, value] : file.items())
        if (!known.count(key)) throw ConfigError("config " + config_path_ + ": unknown field '" + key + "'");
      for (const auto& f : fields_) {
        if (!file.contains(f.key)) continue;
        try {
          f.load(c, file);
        } catch (const json::exception& e) {
          throw ConfigError("config " + config_path_ + ": field '" + f.key + "': " + e.what());
        }
      }
    }
    for (const auto& f : fields_)
      if (f.opt && f.opt->count() > 0) f.from_flag(c);
    return c;
  }

  json dump(const Cfg& c) const {
    json j = json::object();
    for (const auto& f : fields_) f.dump(c, j);
    return j;
  }

 private:
  struct Field {
    std::string key;
    CLI::Option* opt = nullptr;
    std::function<void(Cfg&, const json&)> load;
    std::function<void(Cfg&)> from_flag;
    std::function<void(const Cfg&, json&)> dump;
  };

  static json read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config " + path + ": top level must be an object");
    return j;
  }

  CLI::App* app_;
  Cfg shadow_;
  std::string config_path_;
  std::vector<Field> fields_;
};

struct Common {
  std::uint64_t seed = 0;
  std::string out = ".";
  unsigned threads = default_threads();
  std::string ledger;  ///< empty: $COULOMB_LEDGER or the default file
};

template <typename Cfg>
void add_common(Fields<Cfg>& f) {
  f.add("seed", "--seed", &Common::seed, "master seed");
  f.add("out", "--out", &Common::out, "output directory");
  f.add("threads", "--threads", &Common::threads, "worker threads");
  f.add("ledger", "--ledger", &Common::ledger, "minimum ledger (default $COULOMB_LEDGER)");
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void check_common(const Common& c) {
  require(c.threads >= 1, "threads must be >= 1");
  require(!c.out.empty(), "out must not be empty");
}

fs::path ledger_path(const Common& c) { return c.ledger.empty() ? default_ledger_path() : fs::path(c.ledger); }

// ---------------------------------------------------------------------------
// Output

fs::path output_dir(const Common& c) {
  const fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RunError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) throw RunError("cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// One row per point: sample_id, point_id, x, y, z.
std::string configurations_csv(std::span<const Configurationd> samples) {
  std::string s = strf("# schema_version: %d\nsample_id,point_id,x,y,z\n", kSchemaVersion);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& m = samples[k].matrix();
    for (Eigen::Index i = 0; i < m.cols(); ++i)
      s += strf("%zu,%ld,%.17g,%.17g,%.17g\n", k, static_cast<long>(i), m(0, i), m(1, i), m(2, i));
  }
  return s;
}

json artifact(const std::string& command, json config) {
  return {{"schema_version", kSchemaVersion}, {"command", command}, {"config", std::move(config)}};
}

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double standard_error(std::span<const double> v) {
  if (v.size() < 2) return std::nan("");
  const double m = mean_of(v);
  double ss = 0.0;
  for (const double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

/// JSON has no NaN; it becomes null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------------------
// Sampling

const std::set<std::string> kSamplers = {"uniform", "gaf", "spherical-ensemble", "coulomb"};

struct GibbsFields {
  double beta = 0.0;           ///< 0: beta = n
  std::int64_t steps = 0;      ///< 0: 20000 n
  std::int64_t burn_in = -1;   ///< < 0: steps / 2
  double proposal_t = 0.5;
  double target_acceptance = 0.3;
  int annealing_stages = 8;    ///< geometric 1 -> beta; 1 disables
  std::vector<std::vector<double>> annealing;  ///< explicit [beta, steps] stages
  std::int64_t trace_stride = 0;
};

template <typename Cfg>
void add_gibbs(Fields<Cfg>& f) {
  f.add("beta", "--beta", &GibbsFields::beta, "inverse temperature (0: n)");
  f.add("steps", "--steps", &GibbsFields::steps, "single-site proposals per chain (0: 20000 n)");
  f.add("burn_in", "--burn-in", &GibbsFields::burn_in, "burn-in proposals (negative: steps / 2)");
  f.add("proposal_t", "--proposal-t", &GibbsFields::proposal_t, "initial geodesic step bound");
  f.add("target_acceptance", "--target-acceptance", &GibbsFields::target_acceptance, "burn-in acceptance target");
  f.add("annealing_stages", "--annealing-stages", &GibbsFields::annealing_stages,
        "geometric stages from beta = 1 (1: none)");
  f.add("annealing", "", &GibbsFields::annealing, "explicit [beta, steps] stages");
  f.add("trace_stride", "--trace-stride", &GibbsFields::trace_stride, "energy trace stride (0: steps / 1000)");
}

GibbsParams gibbs_params(const GibbsFields& g, int n, std::uint64_t seed) {
  GibbsParams p;
  p.n = n;
  p.beta = g.beta > 0.0 ? g.beta : static_cast<double>(n);
  p.steps = g.steps > 0 ? g.steps : 20000 * static_cast<std::int64_t>(n);
  p.burn_in = g.burn_in >= 0 ? g.burn_in : p.steps / 2;
  p.proposal_t = g.proposal_t;
  p.target_acceptance = g.target_acceptance;
  p.seed = seed;
  p.trace_stride = g.trace_stride;
  if (!g.annealing.empty()) {
    for (const auto& stage : g.annealing) {
      require(stage.size() == 2 && stage[1] == std::floor(stage[1]), "annealing stages must be [beta, steps] pairs");
      p.annealing.push_back({stage[0], static_cast<std::int64_t>(stage[1])});
    }
  } else if (g.annealing_stages > 1) {
    try {
      p = with_geometric_annealing(p, g.annealing_stages);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return p;
}

struct Draws {
  std::vector<Configurationd> configs;
  SamplerStats stats;
};

/// Sample k draws from the generator seeded with split_seed(seed, k).
Draws draw_baseline(const std::string& sampler, int n, int samples, std::uint64_t seed, unsigned threads) {
  std::vector<std::optional<Configurationd>> slots(static_cast<std::size_t>(samples));
  std::vector<SamplerStats> stats(slots.size());
  parallel_for(slots.size(), threads, [&](std::size_t k) {
    Rng rng(split_seed(seed, k));
    if (sampler == "uniform")
      slots[k] = sample_uniform(n, rng);
    else if (sampler == "gaf")
      slots[k] = sample_gaf_zeros(n, rng, &stats[k]);
    else
      slots[k] = sample_spherical_ensemble(n, rng, &stats[k]);
  });
  Draws d;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    d.configs.push_back(std::move(*slots[k]));
    d.stats.resamples += stats[k].resamples;
    d.stats.points_at_infinity += stats[k].points_at_infinity;
  }
  return d;
}

std::optional<double> closed_form_mean(const std::string& sampler, int n) {
  if (sampler == "uniform") return mean_energy_uniform<double>(n);
  if (sampler == "gaf") return mean_energy_gaf<double>(n);
  if (sampler == "spherical-ensemble") return mean_energy_dpp<double>(n);
  return std::nullopt;
}

std::vector<double> energies_of(std::span<const Configurationd> configs, unsigned threads) {
  std::vector<double> e(configs.size());
  parallel_for(configs.size(), threads, [&](std::size_t k) { e[k] = log_energy(configs[k]); });
  return e;
}

json chain_json(const ChainDiagnostics& d) {
  json trace = json::array();
  for (const auto& p : d.energy_trace) trace.push_back({p.step, p.energy});
  return {{"acceptance_rate", d.acceptance_rate},
          {"post_burn_in_acceptance_rate", d.post_burn_in_acceptance_rate},
          {"final_proposal_t", d.final_proposal_t},
          {"best_energy_seen", d.best_energy_seen},
          {"max_post_burn_in_energy", d.max_post_burn_in_energy},
          {"post_burn_in_mean_energy",
           d.post_burn_in_energies.empty() ? json(nullptr) : json(mean_of(d.post_burn_in_energies))},
          {"energy_trace", std::move(trace)}};
}

struct SampleConfig : Common, GibbsFields {
  std::string sampler;
  int n = 10;
  int samples = 1;
};

int cmd_sample(const Fields<SampleConfig>& fields, std::ostream& out) {
  const SampleConfig cfg = fields.resolve();
  check_common(cfg);
  require(kSamplers.count(cfg.sampler) > 0,
          "unknown sampler '" + cfg.sampler + "' (expected uniform, gaf, spherical-ensemble or coulomb)");
  require(cfg.n >= 2, "n must be >= 2");
  require(cfg.samples >= 1, "samples must be >= 1");

  json summary = artifact("sample", fields.dump(cfg));
  std::vector<Configurationd> configs;
  if (cfg.sampler == "coulomb") {
    const GibbsParams p = gibbs_params(cfg, cfg.n, cfg.seed);
    auto chains = run_replicas(p, cfg.samples, cfg.threads);
    json diag = json::array();
    for (auto& c : chains) {
      diag.push_back(chain_json(c.diagnostics));
      configs.push_back(std::move(c.state));
    }
    summary["beta"] = p.beta;
    summary["steps"] = p.steps;
    summary["burn_in"] = p.burn_in;
    summary["chains"] = std::move(diag);
  } else {
    Draws d = draw_baseline(cfg.sampler, cfg.n, cfg.samples, cfg.seed, cfg.threads);
    configs = std::move(d.configs);
    summary["stats"] = {{"resamples", d.stats.resamples}, {"points_at_infinity", d.stats.points_at_infinity}};
  }

  const auto energies = energies_of(configs, cfg.threads);
  const double mean = mean_of(energies);
  const double se = standard_error(energies);
  const auto reference = closed_form_mean(cfg.sampler, cfg.n);
  summary["sampler"] = cfg.sampler;
  summary["n"] = cfg.n;
  summary["samples"] = cfg.samples;
  summary["energies"] = energies;
  summary["mean_energy"] = mean;
  summary["standard_error"] = number_or_null(se);
  summary["closed_form_mean"] = reference ? json(*reference) : json(nullptr);

  const fs::path dir = output_dir(cfg);
  write_text(dir / "samples.csv", configurations_csv(configs));
  write_json(dir / "summary.json", summary);

  out << strf("sampler %s  n %d  samples %d  mean energy %.10f", cfg.sampler.c_str(), cfg.n, cfg.samples, mean);
  if (std::isfinite(se)) out << strf("  se %.3g", se);
  if (reference) out << strf("  closed form %.10f", *reference);
  out << "\nwrote " << (dir / "samples.csv").string() << " and " << (dir / "summary.json").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Minimization

struct MinimizeConfig : Common {
  std::vector<int> n{2};
  int restarts = 32;
  int max_iters = 20000;
  double grad_tol = 0.0;
  double initial_step = 1e-2;
};

int cmd_minimize(const Fields<MinimizeConfig>& fields, std::ostream& out, std::ostream& err) {
  const MinimizeConfig cfg = fields.resolve();
  check_common(cfg);
  require(!cfg.n.empty(), "n must list at least one size");
  for (const int n : cfg.n) require(n >= 2, "n must be >= 2");

  MinimizeParams params;
  params.restarts = cfg.restarts;
  params.max_iters = cfg.max_iters;
  params.grad_tol = cfg.grad_tol;
  params.initial_step = cfg.initial_step;
  params.seed = cfg.seed;
  params.threads = cfg.threads;
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const fs::path dir = output_dir(cfg);
  MinimumLedger ledger;
  try {
    ledger = MinimumLedger::open(ledger_path(cfg));
  } catch (const std::exception& e) {
    throw RunError("cannot load ledger " + ledger_path(cfg).string() + ": " + e.what());
  }

  bool all_ok = true;
  for (const int n : cfg.n) {
    std::optional<EstimateResult> result;
    try {
      if (auto poly = polyhedral_configuration(n)) ledger.offer(make_ledger_entry(*poly, LedgerSource::analytic));
      result = estimate_min(n, params, {}, &ledger);
    } catch (const std::exception& e) {
      throw RunError(strf("n %d: ", n) + e.what());
    }
    const EstimateResult& r = *result;
    const auto stored = ledger.find(n);
    const double bound = separation_lower_bound(n);
    out << strf("n %d  energy %.10f  gradient %.3e  separation %.10f >= %.10f %s", n, r.best.energy,
                r.best.grad_norm, r.separation, bound - 1e-6, r.separation_ok ? "ok" : "FAILED");
    if (stored) out << strf("  ledger %.10f (%s)", stored->energy, to_string(stored->source).c_str());
    out << '\n';
    if (!r.separation_ok) {
      err << strf("n %d: separation %.10f is below 2/sqrt(n-1) = %.10f\n", n, r.separation, bound);
      all_ok = false;
    }
    const Configurationd best[] = {r.best.config};
    write_text(dir / strf("minimum_n%d.csv", n), configurations_csv(best));
    json report = to_json(r);
    report["config"] = fields.dump(cfg);
    write_json(dir / strf("minimize_n%d.json", n), report);
  }
  return all_ok ? kExitOk : kExitAssertion;
}

// ---------------------------------------------------------------------------
// Verification

const std::vector<std::string> kChecks = {"lemmas", "perturbation", "second-derivative", "theorem", "baselines"};

struct VerifyConfig : Common, GibbsFields {
  std::vector<std::string> checks = kChecks;
  std::vector<int> n{2, 3, 4, 6, 12, 20};
  int systems = 1000;
  int max_states = 20;
  int s_values = 5;
  int trials = 1000;
  int boundary_trials = 1000;
  int t_points = 8;
  int directions = 16;
  double grad_tol = 1e-6;
  double c = 10.0;
  int chains = 0;  ///< Coulomb chains per n for the theorem check; 0 skips sampling
  int uniform_samples = 10000;
  int baseline_samples = 200;
};

bool wants(const VerifyConfig& cfg, const std::string& check) {
  return std::find(cfg.checks.begin(), cfg.checks.end(), check) != cfg.checks.end();
}

json baseline_report(const std::string& sampler, int n, int samples, std::uint64_t seed, unsigned threads) {
  const Draws d = draw_baseline(sampler, n, samples, seed, threads);
  const auto e = energies_of(d.configs, threads);
  const double mean = mean_of(e);
  const double se = standard_error(e);
  const double reference = *closed_form_mean(sampler, n);
  // The determinantal closed form carries an O(1/n) correction.
  const double slack = sampler == "spherical-ensemble" ? 0.1 : 0.0;
  const bool pass = std::abs(mean - reference) <= 3.0 * se + slack;
  return {{"schema_version", kReportSchemaVersion},
          {"check", "baseline-" + sampler},
          {"n", n},
          {"beta", nullptr},
          {"params", {{"samples", samples}, {"slack", slack}}},
          {"theoretical_bound", reference},
          {"empirical_value", mean},
          {"ci", json::array({mean - 3.0 * se, mean + 3.0 * se})},
          {"pass", pass},
          {"details",
           {{"standard_error", se},
            {"resamples", d.stats.resamples},
            {"points_at_infinity", d.stats.points_at_infinity}}}};
}

std::vector<double> log_spaced_grid(double hi, double ratio, int points) {
  std::vector<double> g;
  for (int k = 0; k < points; ++k) {
    const double frac = points > 1 ? static_cast<double>(k) / (points - 1) : 1.0;
    g.push_back(hi * std::pow(ratio, 1.0 - frac));
  }
  return g;
}

int cmd_verify(const Fields<VerifyConfig>& fields, std::ostream& out, std::ostream& err) {
  const VerifyConfig cfg = fields.resolve();
  check_common(cfg);
  for (const auto& c : cfg.checks)
    require(std::find(kChecks.begin(), kChecks.end(), c) != kChecks.end(),
            "unknown check '" + c + "' (expected lemmas, perturbation, second-derivative, theorem or baselines)");
  for (const int n : cfg.n) require(n >= 2, "n must be >= 2");
  require(cfg.systems >= 1 && cfg.max_states >= 1, "systems and max_states must be >= 1");
  require(cfg.s_values >= 1 && cfg.trials >= 0 && cfg.boundary_trials >= 0, "invalid perturbation trial counts");
  require(cfg.t_points >= 1 && cfg.directions >= 1, "t_points and directions must be >= 1");
  require(cfg.grad_tol > 0.0, "grad_tol must be positive");
  require(cfg.c > 0.0, "c must be positive");
  require(cfg.chains >= 0, "chains must be >= 0");
  require(cfg.uniform_samples >= 2 && cfg.baseline_samples >= 2, "baseline sample counts must be >= 2");

  const fs::path ledger_file = ledger_path(cfg);
  MinimumLedger ledger;
  const bool needs_ledger =
      wants(cfg, "perturbation") || wants(cfg, "second-derivative") || (wants(cfg, "theorem") && cfg.chains > 0);
  if (needs_ledger) {
    try {
      ledger = MinimumLedger::open(ledger_file);
    } catch (const std::exception& e) {
      throw RunError("cannot load ledger " + ledger_file.string() + ": " + e.what());
    }
    std::vector<int> missing;
    for (const int n : cfg.n)
      if (!ledger.find(n)) missing.push_back(n);
    if (!missing.empty()) {
      err << "error: ledger " << ledger_file.string() << " has no entry for n =";
      for (const int n : missing) err << ' ' << n;
      err << "\nrun first:\n";
      for (const int n : missing) err << "  coulomb minimize --n " << n << " --ledger " << ledger_file.string() << '\n';
      return kExitUsage;
    }
  }

  json reports = json::array();
  auto record = [&](json r) { reports.push_back(std::move(r)); };
  auto failure = [&](const std::string& check, int n, const std::string& what) {
    record({{"schema_version", kReportSchemaVersion}, {"check", check}, {"n", n}, {"beta", nullptr},
            {"params", json::object()}, {"theoretical_bound", nullptr}, {"empirical_value", nullptr},
            {"ci", nullptr}, {"pass", false}, {"details", {{"error", what}}}});
  };

  if (wants(cfg, "lemmas")) record(to_json(run_lemma_sweep(cfg.systems, cfg.seed, cfg.max_states)));

  for (const int n : cfg.n) {
    if (wants(cfg, "perturbation") || wants(cfg, "second-derivative")) {
      const Configurationd minimizer = ledger.find(n)->configuration();
      if (wants(cfg, "perturbation")) {
        const double s_max = std::sqrt(5.0 * n) / 2.0;
        for (int k = 1; k <= cfg.s_values; ++k) {
          PerturbationTestSpec spec;
          spec.n = n;
          spec.s = s_max * k / cfg.s_values;
          spec.trials = cfg.trials;
          spec.boundary_trials = cfg.boundary_trials;
          spec.seed = split_seed(cfg.seed, static_cast<std::uint64_t>(n * 64 + k));
          try {
            record(to_json(check_perturbation_bound(minimizer, spec, cfg.grad_tol)));
          } catch (const NonMinimizerError& e) {
            failure("perturbation", n, e.what());
            break;
          }
        }
      }
      if (wants(cfg, "second-derivative")) {
        const auto grid = log_spaced_grid(1.0 / (2.0 * n), 1e-3, cfg.t_points);
        try {
          record(to_json(check_second_derivative_bound(minimizer, grid, cfg.directions,
                                                       split_seed(cfg.seed, static_cast<std::uint64_t>(n)),
                                                       cfg.grad_tol)));
        } catch (const NonMinimizerError& e) {
          failure("second-derivative", n, e.what());
        }
      }
    }

    if (wants(cfg, "theorem")) {
      const double beta = cfg.beta > 0.0 ? cfg.beta : static_cast<double>(n);
      json q = to_json(theorem_quantities(n, beta, cfg.c));
      try {
        q["details"]["tight_log_z_lower_bound"] = tight_log_z_lower_bound(n, beta);
      } catch (const std::logic_error& e) {
        q["pass"] = false;
        q["details"]["error"] = e.what();
      }
      record(std::move(q));
      if (cfg.chains > 0) {
        const GibbsParams p = gibbs_params(cfg, n, split_seed(cfg.seed, static_cast<std::uint64_t>(n)));
        const auto chains = run_replicas(p, cfg.chains, cfg.threads);
        std::vector<double> energies;
        std::vector<double> chain_means;
        for (const auto& c : chains) {
          const auto& e = c.diagnostics.post_burn_in_energies;
          energies.insert(energies.end(), e.begin(), e.end());
          if (!e.empty()) chain_means.push_back(mean_of(e));
        }
        const double ledger_energy = ledger.find(n)->energy;
        record(to_json(empirical_deviation_rate(energies, n, cfg.c, p.beta, ledger_energy)));
        record(to_json(mean_energy_gap(chain_means, n, p.beta, ledger_energy)));
        // Offer the final chain states; an improvement only lowers later gaps.
        for (const auto& c : chains) ledger.offer(make_ledger_entry(c.state, LedgerSource::mcmc_refined));
      }
    }
  }

  if (wants(cfg, "baselines")) {
    record(baseline_report("uniform", 8, cfg.uniform_samples, split_seed(cfg.seed, 1), cfg.threads));
    record(baseline_report("gaf", 16, cfg.baseline_samples, split_seed(cfg.seed, 2), cfg.threads));
    record(baseline_report("spherical-ensemble", 16, cfg.baseline_samples, split_seed(cfg.seed, 3), cfg.threads));
  }

  bool pass = true;
  for (const auto& r : reports) pass = pass && r.value("pass", false);

  const fs::path dir = output_dir(cfg);
  json doc = artifact("verify", fields.dump(cfg));
  doc["reports"] = reports;
  doc["pass"] = pass;
  write_json(dir / "verify.json", doc);
  out << render_table(reports);
  out << (pass ? "all hard checks passed\n" : "some hard checks FAILED\n");
  return pass ? kExitOk : kExitAssertion;
}

// ---------------------------------------------------------------------------
// Baselines

struct BaselinesConfig : Common, GibbsFields {
  int n = 16;
  int samples = 200;
  int chains = 16;
};

int cmd_baselines(const Fields<BaselinesConfig>& fields, std::ostream& out) {
  const BaselinesConfig cfg = fields.resolve();
  check_common(cfg);
  require(cfg.n >= 2, "n must be >= 2");
  require(cfg.samples >= 2 && cfg.chains >= 2, "samples and chains must be >= 2");

  struct Row {
    std::string sampler;
    int samples;
    double mean;
    double se;
  };
  std::vector<Row> rows;
  std::uint64_t stream = 0;
  for (const std::string sampler : {"uniform", "gaf", "spherical-ensemble"}) {
    const Draws d = draw_baseline(sampler, cfg.n, cfg.samples, split_seed(cfg.seed, stream++), cfg.threads);
    const auto e = energies_of(d.configs, cfg.threads);
    rows.push_back({sampler, cfg.samples, mean_of(e), standard_error(e)});
  }
  const GibbsParams p = gibbs_params(cfg, cfg.n, split_seed(cfg.seed, stream));
  std::vector<Configurationd> finals;
  for (auto& c : run_replicas(p, cfg.chains, cfg.threads)) finals.push_back(std::move(c.state));
  const auto e = energies_of(finals, cfg.threads);
  rows.push_back({"coulomb", cfg.chains, mean_of(e), standard_error(e)});

  const double ref_uniform = mean_energy_uniform<double>(cfg.n);
  const double ref_gaf = mean_energy_gaf<double>(cfg.n);
  const double ref_dpp = mean_energy_dpp<double>(cfg.n);
  MinimumLedger ledger = MinimumLedger::open(ledger_path(cfg));
  const auto stored = ledger.find(cfg.n);

  std::string csv = strf("# schema_version: %d\nsampler,samples,mean,standard_error,minus_uniform,minus_gaf,minus_dpp\n",
                         kSchemaVersion);
  json table = json::array();
  out << strf("n %d  closed forms: uniform %.6f  gaf %.6f  spherical ensemble %.6f", cfg.n, ref_uniform, ref_gaf,
              ref_dpp);
  if (stored) out << strf("  ledger minimum %.6f", stored->energy);
  out << strf("\n%-20s %8s %14s %10s %12s %12s %12s\n", "sampler", "samples", "mean", "se", "-uniform", "-gaf", "-dpp");
  for (const auto& r : rows) {
    out << strf("%-20s %8d %14.6f %10.4f %12.4f %12.4f %12.4f\n", r.sampler.c_str(), r.samples, r.mean, r.se,
                r.mean - ref_uniform, r.mean - ref_gaf, r.mean - ref_dpp);
    csv += strf("%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.sampler.c_str(), r.samples, r.mean, r.se,
                r.mean - ref_uniform, r.mean - ref_gaf, r.mean - ref_dpp);
    table.push_back({{"sampler", r.sampler}, {"samples", r.samples}, {"mean", r.mean}, {"standard_error", r.se}});
  }

  json doc = artifact("baselines", fields.dump(cfg));
  doc["n"] = cfg.n;
  doc["beta"] = p.beta;
  doc["closed_forms"] = {{"uniform", ref_uniform}, {"gaf", ref_gaf}, {"spherical_ensemble", ref_dpp}};
  doc["ledger_minimum"] = stored ? json(stored->energy) : json(nullptr);
  doc["rows"] = std::move(table);
  const fs::path dir = output_dir(cfg);
  write_text(dir / "baselines.csv", csv);
  write_json(dir / "baselines.json", doc);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Report

int cmd_report(const std::vector<std::string>& files, const std::string& out_dir, std::ostream& out) {
  std::string text;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read " + file);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(file + ": " + e.what());
    }
    // A verify document holds its reports under "reports".
    const json& reports = j.is_object() && j.contains("reports") ? j["reports"] : j;
    text += file + "\n" + render_table(reports) + "\n";
  }
  out << text;
  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw RunError("cannot create output directory " + dir.string());
    write_text(dir / "report.txt", text);
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Coulomb gas on the sphere: sampling, minimization and bound verification", "coulomb");
  app.require_subcommand(1);

  Fields<SampleConfig> sample(app.add_subcommand("sample", "draw configurations from one sampler"));
  add_common(sample);
  add_gibbs(sample);
  sample.add("sampler", "--sampler", &SampleConfig::sampler, "uniform, gaf, spherical-ensemble or coulomb");
  sample.add("n", "--n", &SampleConfig::n, "points per configuration");
  sample.add("samples", "--samples", &SampleConfig::samples, "configurations (chains for coulomb)");

  Fields<MinimizeConfig> minimize(app.add_subcommand("minimize", "multi-start minimization and ledger update"));
  add_common(minimize);
  minimize.add("n", "--n", &MinimizeConfig::n, "sizes to minimize");
  minimize.add("restarts", "--restarts", &MinimizeConfig::restarts, "random starts per size");
  minimize.add("max_iters", "--max-iters", &MinimizeConfig::max_iters, "iterations per start");
  minimize.add("grad_tol", "--grad-tol", &MinimizeConfig::grad_tol, "gradient tolerance (0: 1e-10 n)");
  minimize.add("initial_step", "--initial-step", &MinimizeConfig::initial_step, "first trial step");

  Fields<VerifyConfig> verify(app.add_subcommand("verify", "run the verification checks"));
  add_common(verify);
  add_gibbs(verify);
  verify.add("checks", "--checks", &VerifyConfig::checks,
             "subset of lemmas, perturbation, second-derivative, theorem, baselines");
  verify.add("n", "--n", &VerifyConfig::n, "sizes for the per-n checks");
  verify.add("systems", "--systems", &VerifyConfig::systems, "random finite systems in the lemma sweep");
  verify.add("max_states", "--max-states", &VerifyConfig::max_states, "states per finite system");
  verify.add("s_values", "--s-values", &VerifyConfig::s_values, "perturbation sizes s per n");
  verify.add("trials", "--trials", &VerifyConfig::trials, "interior perturbation trials per s");
  verify.add("boundary_trials", "--boundary-trials", &VerifyConfig::boundary_trials, "boundary trials per s");
  verify.add("t_points", "--t-points", &VerifyConfig::t_points, "t grid size for the second-derivative check");
  verify.add("directions", "--directions", &VerifyConfig::directions, "random paths per n");
  verify.add("grad_tol", "--grad-tol", &VerifyConfig::grad_tol, "gradient tolerance for ledger minimizers");
  verify.add("c", "--c", &VerifyConfig::c, "deviation constant c");
  verify.add("chains", "--chains", &VerifyConfig::chains, "Coulomb chains per n for the theorem check");
  verify.add("uniform_samples", "--uniform-samples", &VerifyConfig::uniform_samples, "uniform baseline samples");
  verify.add("baseline_samples", "--baseline-samples", &VerifyConfig::baseline_samples,
             "GAF and spherical ensemble samples");

  Fields<BaselinesConfig> baselines(app.add_subcommand("baselines", "mean energies of all samplers vs closed forms"));
  add_common(baselines);
  add_gibbs(baselines);
  baselines.add("n", "--n", &BaselinesConfig::n, "points per configuration");
  baselines.add("samples", "--samples", &BaselinesConfig::samples, "samples per baseline sampler");
  baselines.add("chains", "--chains", &BaselinesConfig::chains, "Coulomb chains");

  CLI::App* report = app.add_subcommand("report", "render JSON reports as tables");
  std::vector<std::string> report_files;
  std::string report_out;
  std::string report_config;
  std::uint64_t report_seed = 0;
  report->add_option("files", report_files, "report JSON files")->required();
  report->add_option("--out", report_out, "also write report.txt here");
  report->add_option("--config", report_config, "accepted for uniformity; unused");
  report->add_option("--seed", report_seed, "accepted for uniformity; unused");

  std::vector<std::string> reversed(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (sample.app()->parsed()) return cmd_sample(sample, out);
    if (minimize.app()->parsed()) return cmd_minimize(minimize, out, err);
    if (verify.app()->parsed()) return cmd_verify(verify, out, err);
    if (baselines.app()->parsed()) return cmd_baselines(baselines, out);
    if (report->parsed()) return cmd_report(report_files, report_out, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const RunError& e) {
    err << "error: " << e.what() << '\n';
    return kExitAssertion;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitAssertion;
  }
  return kExitUsage;
}

int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr); }

}  // namespace coulomb::cli
