#pragma once

// Logarithmic energy of point configurations on S^2.
//
// The energy sums over ORDERED pairs,
//
//   H_N(x) = sum_{i != j} log(1 / |x_i - x_j|),
//
// so every unordered pair is counted twice. All closed forms in this header
// follow the same convention.

#include "coulomb/geometry.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace coulomb {

/// Raised when an energy is requested for a configuration with two
/// coincident points (the energy would be +inf).
class CoincidentPointsError : public std::domain_error {
 public:
  CoincidentPointsError(Eigen::Index i, Eigen::Index j)
      : std::domain_error("coincident points " + std::to_string(i) + " and " + std::to_string(j) +
                          ": logarithmic energy is infinite"),
        i_(i),
        j_(j) {}
  Eigen::Index first() const { return i_; }
  Eigen::Index second() const { return j_; }

 private:
  Eigen::Index i_, j_;
};

/// N >= 2 points on the sphere, stored as the columns of a 3 x N matrix.
template <typename Scalar>
class Configuration {
 public:
  using Matrix = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

  explicit Configuration(Matrix points) : points_(std::move(points)) {
    if (points_.cols() < 2) throw std::invalid_argument("Configuration: need at least two points");
    for (Eigen::Index i = 0; i < points_.cols(); ++i) {
      if (!(std::abs(points_.col(i).squaredNorm() - Scalar(1)) <= unit_tolerance<Scalar>()))
        throw std::domain_error("Configuration: point " + std::to_string(i) + " is not on the sphere");
    }
  }

  static Configuration from_points(std::span<const SpherePoint<Scalar>> pts) {
    Matrix m(3, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = pts[i].vec();
    return Configuration(std::move(m));
  }

  /// Radially projects every column of `m` onto the sphere.
  static Configuration normalized(Matrix m) {
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
      const Scalar n = m.col(i).norm();
      if (!(n > Scalar(0))) throw std::domain_error("Configuration: zero column cannot be normalized");
      m.col(i) /= n;
    }
    return Configuration(std::move(m));
  }

  Eigen::Index size() const { return points_.cols(); }
  const Matrix& matrix() const { return points_; }

  SpherePoint<Scalar> point(Eigen::Index i) const {
    return SpherePoint<Scalar>::from_unit(points_.col(i));
  }
  void set_point(Eigen::Index i, const SpherePoint<Scalar>& p) { points_.col(i) = p.vec(); }

  template <typename Other>
  Configuration<Other> cast() const {
    return Configuration<Other>::normalized(points_.template cast<Other>());
  }

 private:
  Matrix points_;
};

using Configurationd = Configuration<double>;

/// Threads used by the O(N^2) kernels. Results are bit-identical for any
/// thread count: rows are summed sequentially and combined in a fixed tree.
struct EnergyOptions {
  unsigned threads = 1;
};

namespace detail {

/// Pairwise (cascade) summation in a fixed order.
template <typename Scalar>
Scalar pairwise_sum(std::span<const Scalar> v) {
  if (v.size() <= 8) {
    Scalar s(0);
    for (const Scalar x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

template <typename Fn>
void for_each_row(Eigen::Index n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n < 64) {
    for (Eigen::Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      // Strided assignment balances the triangular workload.
      for (Eigen::Index i = t; i < n; i += threads) fn(i);
    });
  }
}

template <typename Scalar>
Scalar coincidence_threshold() {
  const Scalar d = std::max(Scalar(1e-300), std::numeric_limits<Scalar>::min());
  return d * d;
}

/// Row sums r_i = sum_{j > i} log(1 / |x_i - x_j|); throws on coincidence.
template <typename Scalar>
std::vector<Scalar> upper_row_sums(const Configuration<Scalar>& c, const EnergyOptions& opts) {
  const auto& x = c.matrix();
  const Eigen::Index n = c.size();
  std::vector<Scalar> rows(static_cast<std::size_t>(n), Scalar(0));
  std::vector<char> bad(static_cast<std::size_t>(n), 0);
  std::vector<Eigen::Index> partner(static_cast<std::size_t>(n), -1);
  const Scalar eps2 = coincidence_threshold<Scalar>();
  for_each_row(n, opts.threads, [&](Eigen::Index i) {
    Scalar s(0);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Scalar d2 = (x.col(i) - x.col(j)).squaredNorm();
      if (d2 <= eps2) {
        bad[static_cast<std::size_t>(i)] = 1;
        partner[static_cast<std::size_t>(i)] = j;
        return;
      }
      s -= std::log(d2);
    }
    rows[static_cast<std::size_t>(i)] = s / 2;
  });
  for (Eigen::Index i = 0; i < n; ++i)
    if (bad[static_cast<std::size_t>(i)]) throw CoincidentPointsError(i, partner[static_cast<std::size_t>(i)]);
  return rows;
}

}  // namespace detail

template <typename Scalar>
Scalar log_energy(const Configuration<Scalar>& c, const EnergyOptions& opts = {}) {
  const auto rows = detail::upper_row_sums(c, opts);
  return 2 * detail::pairwise_sum(std::span<const Scalar>(rows));
}

template <typename Scalar>
struct EnergyBreakdown {
  Scalar total;
  /// per_point[i] = 2 sum_{j != i} log(1/|x_i - x_j|), so total = sum / 2.
  std::vector<Scalar> per_point;
  Scalar min_separation;
};

template <typename Scalar>
EnergyBreakdown<Scalar> energy_breakdown(const Configuration<Scalar>& c) {
  const auto& x = c.matrix();
  const Eigen::Index n = c.size();
  EnergyBreakdown<Scalar> out{Scalar(0), std::vector<Scalar>(static_cast<std::size_t>(n), Scalar(0)),
                              std::numeric_limits<Scalar>::infinity()};
  const Scalar eps2 = detail::coincidence_threshold<Scalar>();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Scalar d2 = (x.col(i) - x.col(j)).squaredNorm();
      if (d2 <= eps2) throw CoincidentPointsError(i, j);
      const Scalar e = -std::log(d2);  // 2 log(1/d)
      out.per_point[static_cast<std::size_t>(i)] += e;
      out.per_point[static_cast<std::size_t>(j)] += e;
      out.min_separation = std::min(out.min_separation, std::sqrt(d2));
    }
  }
  out.total = detail::pairwise_sum(std::span<const Scalar>(out.per_point)) / 2;
  return out;
}

/// H(c with x_k := p) - H(c), or nullopt when p coincides with another point.
/// Costs O(N): only the 2(N - 1) ordered pairs involving k change.
template <typename Scalar>
std::optional<Scalar> try_delta_energy_move(const Configuration<Scalar>& c, Eigen::Index k,
                                            const SpherePoint<Scalar>& p) {
  const auto& x = c.matrix();
  const Eigen::Index n = c.size();
  const Scalar eps2 = detail::coincidence_threshold<Scalar>();
  Scalar delta(0);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == k) continue;
    const Scalar d2_new = (p.vec() - x.col(j)).squaredNorm();
    if (d2_new <= eps2) return std::nullopt;
    const Scalar d2_old = (x.col(k) - x.col(j)).squaredNorm();
    // 2 [log(1/d_new) - log(1/d_old)] = log(d_old^2 / d_new^2)
    delta += std::log(d2_old / d2_new);
  }
  return delta;
}

template <typename Scalar>
Scalar delta_energy_move(const Configuration<Scalar>& c, Eigen::Index k, const SpherePoint<Scalar>& p) {
  if (k < 0 || k >= c.size()) throw std::out_of_range("delta_energy_move: index out of range");
  if (auto d = try_delta_energy_move(c, k, p)) return *d;
  for (Eigen::Index j = 0; j < c.size(); ++j)
    if (j != k && (p.vec() - c.matrix().col(j)).squaredNorm() <= detail::coincidence_threshold<Scalar>())
      throw CoincidentPointsError(k, j);
  throw std::logic_error("delta_energy_move: unreachable");
}

/// H(b) - H(a) summed pair by pair as -log1p((d_b^2 - d_a^2) / d_a^2), with
/// d_b^2 - d_a^2 formed from the coordinate displacements. The error of each
/// term is relative to the displacement, so close configurations resolve
/// far below the rounding error of H itself.
template <typename Scalar>
Scalar energy_difference(const Configuration<Scalar>& a, const Configuration<Scalar>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("energy_difference: size mismatch");
  const auto& x = a.matrix();
  const auto& y = b.matrix();
  const Eigen::Index n = a.size();
  const Scalar eps2 = detail::coincidence_threshold<Scalar>();
  std::vector<Scalar> rows(static_cast<std::size_t>(n), Scalar(0));
  for (Eigen::Index i = 0; i < n; ++i) {
    Scalar s(0);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto pa = (x.col(i) - x.col(j)).eval();
      const auto pb = (y.col(i) - y.col(j)).eval();
      const Scalar da = pa.squaredNorm();
      const Scalar db = pb.squaredNorm();
      if (da <= eps2 || db <= eps2) throw CoincidentPointsError(i, j);
      const Scalar change = ((y.col(i) - x.col(i)) - (y.col(j) - x.col(j))).dot(pb + pa);
      using std::log1p;
      s -= log1p(change / da);
    }
    rows[static_cast<std::size_t>(i)] = s;
  }
  return detail::pairwise_sum(std::span<const Scalar>(rows));
}

/// Euclidean gradient -2 sum_{j != i} (x_i - x_j) / |x_i - x_j|^2 projected
/// onto the tangent plane at each x_i, returned as a 3 x N matrix.
template <typename Scalar>
typename Configuration<Scalar>::Matrix riemannian_gradient_matrix(const Configuration<Scalar>& c) {
  const auto& x = c.matrix();
  const Eigen::Index n = c.size();
  const Scalar eps2 = detail::coincidence_threshold<Scalar>();
  typename Configuration<Scalar>::Matrix g = Configuration<Scalar>::Matrix::Zero(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Vector3<Scalar> diff = x.col(i) - x.col(j);
      const Scalar d2 = diff.squaredNorm();
      if (d2 <= eps2) throw CoincidentPointsError(i, j);
      const Vector3<Scalar> f = (2 / d2) * diff;
      g.col(i) -= f;
      g.col(j) += f;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto xi = x.col(i);
    g.col(i) -= xi.dot(g.col(i)) * xi;
  }
  return g;
}

template <typename Scalar>
std::vector<TangentVector<Scalar>> riemannian_gradient(const Configuration<Scalar>& c) {
  const auto g = riemannian_gradient_matrix(c);
  std::vector<TangentVector<Scalar>> out;
  out.reserve(static_cast<std::size_t>(c.size()));
  for (Eigen::Index i = 0; i < c.size(); ++i)
    out.push_back(TangentVector<Scalar>::project(c.point(i), g.col(i)));
  return out;
}

/// min_{i != j} |x_i - x_j|; zero for duplicated points.
template <typename Scalar>
Scalar min_separation(const Configuration<Scalar>& c) {
  const auto& x = c.matrix();
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index i = 0; i < c.size(); ++i)
    for (Eigen::Index j = i + 1; j < c.size(); ++j)
      best = std::min(best, (x.col(i) - x.col(j)).squaredNorm());
  return std::sqrt(best);
}

/// Lower bound 2 / sqrt(N - 1) on the separation of an energy minimizer.
template <typename Scalar = double>
Scalar separation_lower_bound(Eigen::Index n) {
  return Scalar(2) / std::sqrt(static_cast<Scalar>(n - 1));
}

template <typename Scalar>
struct AsymptoticConstants {
  Scalar v_log;        ///< continuous minimal energy 1/2 - log 2
  Scalar c_log_upper;  ///< conjectured-sharp upper bound for the order-N coefficient
  Scalar c_log_lower;  ///< best known lower bound for the order-N coefficient
  Scalar euler_gamma;
};

template <typename Scalar = double>
AsymptoticConstants<Scalar> asymptotic_constants() {
  const Scalar ln2 = std::numbers::ln2_v<Scalar>;
  const Scalar upper = 2 * ln2 + std::log(Scalar(2) / Scalar(3)) / 2 +
                       3 * (std::log(std::numbers::pi_v<Scalar>) / 2 - std::lgamma(Scalar(1) / Scalar(3)));
  return {Scalar(0.5) - ln2, upper, Scalar(-0.2232823526), std::numbers::egamma_v<Scalar>};
}

/// V_log N^2 - (1/2) N log N + c_log N, i.e. the large-N expansion of the
/// minimal energy with its o(N) remainder dropped. Only a sanity band at
/// finite N.
template <typename Scalar = double>
Scalar asymptotic_min_estimate(Eigen::Index n, Scalar c_log) {
  if (n < 2) throw std::domain_error("asymptotic_min_estimate: need N >= 2");
  const Scalar N = static_cast<Scalar>(n);
  return asymptotic_constants<Scalar>().v_log * N * N - N * std::log(N) / 2 + c_log * N;
}

/// Exact mean energy of N i.i.d. uniform points.
template <typename Scalar = double>
Scalar mean_energy_uniform(Eigen::Index n) {
  if (n < 2) throw std::domain_error("mean_energy_uniform: need N >= 2");
  const Scalar N = static_cast<Scalar>(n);
  return asymptotic_constants<Scalar>().v_log * N * N + (std::numbers::ln2_v<Scalar> - Scalar(0.5)) * N;
}

/// Exact mean energy of the zeros of the degree-N elliptic polynomial.
template <typename Scalar = double>
Scalar mean_energy_gaf(Eigen::Index n) {
  if (n < 2) throw std::domain_error("mean_energy_gaf: need N >= 2");
  const Scalar N = static_cast<Scalar>(n);
  return mean_energy_uniform<Scalar>(n) - N * std::log(N) / 2;
}

/// Mean energy of the spherical ensemble up to an O(1/N) remainder.
template <typename Scalar = double>
Scalar mean_energy_dpp(Eigen::Index n) {
  if (n < 2) throw std::domain_error("mean_energy_dpp: need N >= 2");
  const Scalar N = static_cast<Scalar>(n);
  const auto k = asymptotic_constants<Scalar>();
  return k.v_log * N * N - N * std::log(N) / 2 + (std::numbers::ln2_v<Scalar> - k.euler_gamma / 2) * N -
         Scalar(0.25);
}

}  // namespace coulomb
