#include "coulomb/minimize.hpp"

#include "coulomb/parallel.hpp"
#include "coulomb/random.hpp"
#include "coulomb/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace coulomb {

void MinimizeParams::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("MinimizeParams: " + what); };
  if (max_iters <= 0) fail("max_iters must be positive");
  if (grad_tol < 0.0) fail("grad_tol must be >= 0");
  if (!(initial_step > 0.0)) fail("initial_step must be positive");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) fail("backtrack_factor must lie in (0, 1)");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) fail("armijo_c must lie in (0, 1)");
  if (restarts < 0) fail("restarts must be >= 0");
}

double gradient_inf_norm(const Configurationd& c) { return riemannian_gradient_matrix(c).cwiseAbs().maxCoeff(); }

namespace {

Configurationd::Matrix retract(const Configurationd::Matrix& x, const Configurationd::Matrix& step) {
  Configurationd::Matrix y = x + step;
  y.colwise().normalize();
  return y;
}

}  // namespace

MinimizeResult local_minimize(const Configurationd& start, const MinimizeParams& params) {
  params.validate();
  const double tol = params.tolerance_for(start.size());
  constexpr double kMinStep = 1e-16;
  constexpr double kMaxStep = 1e6;
  const double n = static_cast<double>(start.size());
  const double resolution = 1e-13 * n * n;

  Configurationd x = start;
  Configurationd::Matrix g = riemannian_gradient_matrix(x);
  double alpha = params.initial_step;
  MinimizeResult r{x, 0.0, g.cwiseAbs().maxCoeff(), 0, false, false};

  for (int it = 0; it < params.max_iters; ++it) {
    if (r.grad_norm <= tol) {
      r.converged = true;
      break;
    }
    const double gg = g.squaredNorm();
    std::optional<Configurationd> next;
    Configurationd::Matrix g_next;
    double step = alpha;
    while (step >= kMinStep) {
      try {
        Configurationd y(retract(x.matrix(), -step * g));
        double decrease;
        if (step * gg > resolution) {
          decrease = energy_difference(x, y);
          if (decrease < 0.0 && decrease <= -params.armijo_c * step * gg) g_next = riemannian_gradient_matrix(y);
        } else {
          // Rounding of the stored radii moves H by about `resolution`; the
          // trapezoid rule on tangent gradients does not see the radii.
          g_next = riemannian_gradient_matrix(y);
          decrease = 0.5 * (g + g_next).cwiseProduct(y.matrix() - x.matrix()).sum();
        }
        if (decrease < 0.0 && decrease <= -params.armijo_c * step * gg) {
          next.emplace(std::move(y));
          break;
        }
      } catch (const CoincidentPointsError&) {
      }
      step *= params.backtrack_factor;
    }
    if (!next) {
      r.stalled = true;
      break;
    }
    const Configurationd::Matrix s = next->matrix() - x.matrix();
    const double sy = s.cwiseProduct(g_next - g).sum();
    // Barzilai-Borwein trial step for the next iteration.
    alpha = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, kMinStep, kMaxStep) : std::min(step * 2.0, kMaxStep);
    x = std::move(*next);
    g = g_next;
    r.grad_norm = g.cwiseAbs().maxCoeff();
    r.iterations = it + 1;
  }
  if (!r.converged && r.grad_norm <= tol) r.converged = true;
  r.energy = log_energy(x);
  r.config = std::move(x);
  return r;
}

EstimateResult estimate_min(int n, const MinimizeParams& params, std::span<const Configurationd> warm_starts,
                            MinimumLedger* ledger) {
  if (n < 2) throw std::domain_error("estimate_min: need n >= 2");
  params.validate();
  for (const auto& w : warm_starts)
    if (w.size() != n) throw std::invalid_argument("estimate_min: warm start has the wrong size");
  const std::size_t restarts = static_cast<std::size_t>(params.restarts);
  const std::size_t total = restarts + warm_starts.size();
  if (total == 0) throw std::invalid_argument("estimate_min: no restarts and no warm starts");

  std::vector<std::optional<MinimizeResult>> results(total);
  MinimizeParams inner = params;
  inner.threads = 1;
  parallel_for(total, params.threads, [&](std::size_t i) {
    if (i < restarts) {
      Rng rng(split_seed(params.seed, i));
      results[i] = local_minimize(sample_uniform(n, rng), inner);
    } else {
      results[i] = local_minimize(warm_starts[i - restarts], inner);
    }
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < total; ++i)
    if (results[i]->energy < results[best]->energy - kLedgerTieTolerance) best = i;

  EstimateResult out{make_ledger_entry(results[best]->config,
                                       best < restarts ? LedgerSource::optimizer : LedgerSource::mcmc_refined),
                     std::move(*results[best]), 0.0, false, false};
  out.separation = min_separation(out.best.config);
  out.separation_ok = out.separation >= separation_lower_bound(n) - 1e-6;
  if (ledger) out.ledger_improved = ledger->offer(out.entry);
  return out;
}

std::optional<Configurationd> polyhedral_configuration(int n) {
  Configurationd::Matrix m(3, n);
  switch (n) {
    case 2:
      m << 0, 0, 0, 0, 1, -1;
      break;
    case 3:
      for (int i = 0; i < 3; ++i) {
        const double a = 2.0 * std::numbers::pi * i / 3.0;
        m.col(i) << std::cos(a), std::sin(a), 0.0;
      }
      break;
    case 4:
      m << 1, 1, -1, -1,
           1, -1, 1, -1,
           1, -1, -1, 1;
      break;
    case 6:
      m << 1, -1, 0, 0, 0, 0,
           0, 0, 1, -1, 0, 0,
           0, 0, 0, 0, 1, -1;
      break;
    case 12: {
      const double phi = std::numbers::phi;
      int k = 0;
      for (const double a : {-1.0, 1.0})
        for (const double b : {-phi, phi}) {
          m.col(k++) << 0.0, a, b;
          m.col(k++) << a, b, 0.0;
          m.col(k++) << b, 0.0, a;
        }
      break;
    }
    default:
      return std::nullopt;
  }
  return Configurationd::normalized(std::move(m));
}

}  // namespace coulomb
