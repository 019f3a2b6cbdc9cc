#pragma once

// Roots of dense complex polynomials.

#include <complex>
#include <span>
#include <vector>

namespace coulomb {

using Complex = std::complex<double>;

struct AberthOptions {
  int max_iterations = 1000;
};

struct RootResult {
  std::vector<Complex> roots;
  int iterations = 0;
  bool converged = false;
};

/// Roots of sum_k coeffs[k] z^k (ascending order, leading coefficient
/// nonzero) by simultaneous Aberth-Ehrlich iteration. Starting points are
/// placed on circles whose radii come from the Newton polygon of the
/// coefficient moduli; points with |z| > 1 are evaluated through the
/// reversed polynomial so that wide root spreads stay well conditioned.
RootResult aberth_roots(std::span<const Complex> coeffs, const AberthOptions& opts = {});

/// Eigenvalues of the companion matrix; an independent route for checking.
std::vector<Complex> companion_roots(std::span<const Complex> coeffs);

/// Ascending coefficients of lead * prod_i (z - roots[i]).
std::vector<Complex> poly_from_roots(std::span<const Complex> roots, Complex lead = 1.0);

/// Horner evaluation of sum_k coeffs[k] z^k.
Complex poly_eval(std::span<const Complex> coeffs, Complex z);

}  // namespace coulomb
