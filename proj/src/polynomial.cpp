#include "coulomb/polynomial.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace coulomb {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Evaluation {
  Complex newton;  // p / p'
  bool small;      // |p| is at rounding level
};

/// Horner for p and p' plus the running bound sum |a_k| |z|^k.
Evaluation evaluate(std::span<const Complex> a, Complex z) {
  const std::size_t n = a.size() - 1;
  Complex p = a[n];
  Complex dp = 0.0;
  double bound = std::abs(a[n]);
  const double r = std::abs(z);
  for (std::size_t k = n; k-- > 0;) {
    dp = dp * z + p;
    p = p * z + a[k];
    bound = bound * r + std::abs(a[k]);
  }
  const bool small = std::abs(p) <= 4.0 * static_cast<double>(n) * kEps * bound;
  if (dp == Complex(0.0)) return {Complex(std::max(r, 1.0) * 1e-3), small};
  return {p / dp, small};
}

/// Same quantities for |z| > 1 via q(w) = w^n p(1/w):
///   p / p' = 1 / (w (n - w q'(w) / q(w))).
Evaluation evaluate_reversed(std::span<const Complex> reversed, Complex z) {
  const std::size_t n = reversed.size() - 1;
  const Complex w = 1.0 / z;
  Complex q = reversed[n];
  Complex dq = 0.0;
  double bound = std::abs(reversed[n]);
  const double r = std::abs(w);
  for (std::size_t k = n; k-- > 0;) {
    dq = dq * w + q;
    q = q * w + reversed[k];
    bound = bound * r + std::abs(reversed[k]);
  }
  const bool small = std::abs(q) <= 4.0 * static_cast<double>(n) * kEps * bound;
  if (q == Complex(0.0)) return {Complex(0.0), true};
  const Complex denom = w * (static_cast<double>(n) - w * dq / q);
  if (denom == Complex(0.0)) return {Complex(std::abs(z) * 1e-3), small};
  return {1.0 / denom, small};
}

/// Starting points on circles read off the upper convex hull of
/// (k, log |a_k|).
std::vector<Complex> initial_guesses(std::span<const Complex> a) {
  const std::size_t n = a.size() - 1;
  std::vector<std::size_t> hull;
  std::vector<double> la(a.size());
  for (std::size_t k = 0; k <= n; ++k) la[k] = a[k] == Complex(0.0) ? -std::numeric_limits<double>::infinity() : std::log(std::abs(a[k]));
  for (std::size_t k = 0; k <= n; ++k) {
    if (std::isinf(la[k])) continue;
    while (hull.size() >= 2) {
      const std::size_t i = hull[hull.size() - 2];
      const std::size_t j = hull.back();
      // Drop j if it lies on or below the chord from i to k.
      const double cross = (static_cast<double>(j) - static_cast<double>(i)) * (la[k] - la[i]) -
                           (static_cast<double>(k) - static_cast<double>(i)) * (la[j] - la[i]);
      if (cross >= 0.0) hull.pop_back(); else break;
    }
    hull.push_back(k);
  }
  std::vector<Complex> z;
  z.reserve(n);
  const double sigma = 0.7;
  for (std::size_t e = 0; e + 1 < hull.size(); ++e) {
    const std::size_t k0 = hull[e];
    const std::size_t k1 = hull[e + 1];
    const std::size_t m = k1 - k0;
    const double radius = std::exp((la[k0] - la[k1]) / static_cast<double>(m));
    for (std::size_t j = 0; j < m; ++j) {
      const double angle = 2.0 * std::numbers::pi * (static_cast<double>(j) / static_cast<double>(m) +
                                                     static_cast<double>(e) / static_cast<double>(n)) + sigma;
      z.push_back(std::polar(radius, angle));
    }
  }
  return z;
}

}  // namespace

Complex poly_eval(std::span<const Complex> coeffs, Complex z) {
  Complex p = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;) p = p * z + coeffs[k];
  return p;
}

RootResult aberth_roots(std::span<const Complex> coeffs, const AberthOptions& opts) {
  if (coeffs.size() < 2) throw std::invalid_argument("aberth_roots: polynomial must have degree >= 1");
  if (coeffs.back() == Complex(0.0)) throw std::invalid_argument("aberth_roots: leading coefficient is zero");

  RootResult result;
  // Exact zero roots from vanishing low-order coefficients.
  std::size_t zeros = 0;
  while (coeffs[zeros] == Complex(0.0)) ++zeros;
  result.roots.assign(zeros, Complex(0.0));
  const std::span<const Complex> a = coeffs.subspan(zeros);
  const std::size_t n = a.size() - 1;
  if (n == 0) {
    result.converged = true;
    return result;
  }
  if (n == 1) {
    result.roots.push_back(-a[0] / a[1]);
    result.converged = true;
    return result;
  }

  const std::vector<Complex> reversed(a.rbegin(), a.rend());
  std::vector<Complex> z = initial_guesses(a);
  std::vector<char> done(n, 0);
  std::size_t remaining = n;

  for (int it = 0; it < opts.max_iterations && remaining > 0; ++it) {
    result.iterations = it + 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      const Evaluation ev = std::abs(z[i]) <= 1.0 ? evaluate(a, z[i]) : evaluate_reversed(reversed, z[i]);
      if (ev.small) {
        done[i] = 1;
        --remaining;
        continue;
      }
      Complex s = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) s += 1.0 / (z[i] - z[j]);
      const Complex step = ev.newton / (1.0 - ev.newton * s);
      z[i] -= step;
      if (std::abs(step) <= kEps * std::abs(z[i])) {
        done[i] = 1;
        --remaining;
      }
    }
  }
  result.converged = remaining == 0 &&
                     std::all_of(z.begin(), z.end(), [](Complex w) { return std::isfinite(w.real()) && std::isfinite(w.imag()); });
  result.roots.insert(result.roots.end(), z.begin(), z.end());
  return result;
}

std::vector<Complex> companion_roots(std::span<const Complex> coeffs) {
  if (coeffs.size() < 2 || coeffs.back() == Complex(0.0))
    throw std::invalid_argument("companion_roots: need degree >= 1 with nonzero leading coefficient");
  const Eigen::Index n = static_cast<Eigen::Index>(coeffs.size()) - 1;
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index i = 1; i < n; ++i) c(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) c(i, n - 1) = -coeffs[static_cast<std::size_t>(i)] / coeffs.back();
  // Diagonal balancing by powers of two; without it the eigenvalues of
  // companions with widely spread coefficients lose most of their digits.
  for (bool done = false; !done;) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double col = c.col(i).cwiseAbs().sum() - std::abs(c(i, i));
      const double row = c.row(i).cwiseAbs().sum() - std::abs(c(i, i));
      if (col == 0.0 || row == 0.0) continue;
      double f = 1.0;
      double ci = col;
      while (ci < row / 2) ci *= 4, f *= 2;
      while (ci >= row * 2) ci /= 4, f /= 2;
      if ((ci + row) / f < 0.95 * (col + row)) {
        done = false;
        c.row(i) /= f;
        c.col(i) *= f;
      }
    }
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(c, false);
  if (solver.info() != Eigen::Success) throw std::runtime_error("companion_roots: eigen solver failed");
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

std::vector<Complex> poly_from_roots(std::span<const Complex> roots, Complex lead) {
  std::vector<Complex> p{lead};
  for (const Complex r : roots) {
    p.push_back(0.0);
    for (std::size_t k = p.size() - 1; k > 0; --k) p[k] = p[k - 1] - r * p[k];
    p[0] = -r * p[0];
  }
  return p;
}

}  // namespace coulomb
