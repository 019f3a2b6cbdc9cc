#include "coulomb/polynomial.hpp"
#include "coulomb/random.hpp"
#include "coulomb/samplers.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace coulomb;

namespace {

/// Largest distance in a greedy nearest matching of two root sets.
double match_distance(std::vector<Complex> a, std::vector<Complex> b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (const Complex& z : a) {
    auto it = std::min_element(b.begin(), b.end(),
                               [&](const Complex& u, const Complex& v) { return std::abs(u - z) < std::abs(v - z); });
    worst = std::max(worst, std::abs(*it - z) / std::max(1.0, std::abs(z)));
    b.erase(it);
  }
  return worst;
}

double max_abs(const std::vector<Complex>& v) {
  double m = 0.0;
  for (const auto& z : v) m = std::max(m, std::abs(z));
  return m;
}

}  // namespace

TEST(Polynomial, EvalAndFromRoots) {
  const std::vector<Complex> roots = {1.0, Complex(0, 2), -3.0};
  const auto c = poly_from_roots(roots, 2.0);
  ASSERT_EQ(c.size(), 4u);
  EXPECT_EQ(c.back(), Complex(2.0));
  for (const auto& r : roots) EXPECT_LT(std::abs(poly_eval(c, r)), 1e-12);
  EXPECT_EQ(poly_eval(c, 0.0), c[0]);
}

TEST(Aberth, LinearAndZeroRoots) {
  const std::vector<Complex> linear = {Complex(2, 1), 1.0};
  const auto r = aberth_roots(linear);
  ASSERT_TRUE(r.converged);
  EXPECT_LT(std::abs(r.roots[0] - Complex(-2, -1)), 1e-15);

  // z^3 (z - 1)
  const std::vector<Complex> c = {0.0, 0.0, 0.0, -1.0, 1.0};
  const auto s = aberth_roots(c);
  ASSERT_TRUE(s.converged);
  EXPECT_LT(match_distance(s.roots, {0.0, 0.0, 0.0, 1.0}), 1e-14);
}

TEST(Aberth, RootsOfUnity) {
  for (int n : {2, 5, 16, 64}) {
    std::vector<Complex> c(static_cast<std::size_t>(n) + 1, 0.0);
    c[0] = -1.0;
    c.back() = 1.0;
    const auto r = aberth_roots(c);
    ASSERT_TRUE(r.converged) << n;
    for (const auto& z : r.roots) EXPECT_NEAR(std::abs(z), 1.0, 1e-13);
    EXPECT_LT(match_distance(r.roots, companion_roots(c)), 1e-10);
  }
}

TEST(Aberth, WideRootSpread) {
  std::vector<Complex> roots;
  for (int k = -6; k <= 6; ++k) roots.push_back(std::polar(std::pow(10.0, k), 0.3 * k));
  const auto c = poly_from_roots(roots);
  const auto r = aberth_roots(c);
  ASSERT_TRUE(r.converged);
  for (const auto& z : roots) {
    double best = INFINITY;
    for (const auto& w : r.roots) best = std::min(best, std::abs(w - z) / std::abs(z));
    EXPECT_LT(best, 1e-8);
  }
}

TEST(Aberth, VietaRoundTripOnEllipticPolynomials) {
  Rng rng(8);
  for (int n = 2; n <= 32; ++n) {
    const auto c = elliptic_polynomial(n, rng);
    const auto r = aberth_roots(c);
    ASSERT_TRUE(r.converged) << n;
    ASSERT_EQ(r.roots.size(), static_cast<std::size_t>(n));
    const auto back = poly_from_roots(r.roots, c.back());
    const double scale = max_abs(c);
    for (std::size_t k = 0; k < c.size(); ++k) EXPECT_LT(std::abs(back[k] - c[k]) / scale, 1e-6) << n << " " << k;
  }
}

TEST(Aberth, AgreesWithCompanionMatrix) {
  Rng rng(19);
  for (int n : {4, 16, 50, 120}) {
    const auto c = elliptic_polynomial(n, rng);
    const auto r = aberth_roots(c);
    ASSERT_TRUE(r.converged) << n;
    EXPECT_LT(match_distance(r.roots, companion_roots(c)), 1e-7) << n;
  }
}

TEST(Aberth, HighDegreeConverges) {
  Rng rng(4);
  for (int n : {300, 1000}) {
    const auto c = elliptic_polynomial(n, rng);
    const auto r = aberth_roots(c);
    EXPECT_TRUE(r.converged) << n;
    EXPECT_EQ(r.roots.size(), static_cast<std::size_t>(n));
  }
}

TEST(Aberth, RejectsDegenerateInput) {
  const std::vector<Complex> constant = {1.0};
  EXPECT_THROW(aberth_roots(constant), std::invalid_argument);
  const std::vector<Complex> zero_lead = {1.0, 0.0};
  EXPECT_THROW(aberth_roots(zero_lead), std::invalid_argument);
}
