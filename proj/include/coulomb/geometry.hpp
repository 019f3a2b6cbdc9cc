#pragma once

// Primitives on the unit sphere S^2 in R^3: points, tangent vectors,
// geodesic and chordal distances, caps, geodesic steps and the
// stereographic correspondence with the extended complex plane.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace coulomb {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

/// Tolerance used when checking the |x| = 1 invariant of a SpherePoint.
template <typename Scalar>
constexpr Scalar unit_tolerance() {
  if constexpr (sizeof(Scalar) > sizeof(double)) {
    return Scalar(1e-15);
  } else {
    return Scalar(1e-12);
  }
}

template <typename Scalar>
class SpherePoint {
 public:
  using Vec = Vector3<Scalar>;

  /// North pole (0, 0, 1).
  SpherePoint() : v_(Scalar(0), Scalar(0), Scalar(1)) {}

  /// Validates that `v` already lies on the sphere.
  static SpherePoint from_unit(const Vec& v) {
    if (!(std::abs(v.squaredNorm() - Scalar(1)) <= unit_tolerance<Scalar>()))
      throw std::domain_error("SpherePoint: vector is not of unit length");
    return SpherePoint(v);
  }

  /// Projects a nonzero vector radially onto the sphere.
  static SpherePoint normalized(const Vec& v) {
    const Scalar norm = v.norm();
    if (!(norm > Scalar(0)) || !std::isfinite(static_cast<double>(norm)))
      throw std::domain_error("SpherePoint: cannot normalize a zero or non-finite vector");
    return SpherePoint(v / norm);
  }

  static SpherePoint from_unit(Scalar x, Scalar y, Scalar z) { return from_unit(Vec(x, y, z)); }

  const Vec& vec() const { return v_; }
  Scalar x() const { return v_.x(); }
  Scalar y() const { return v_.y(); }
  Scalar z() const { return v_.z(); }

  SpherePoint antipode() const { return SpherePoint(-v_); }

  template <typename Other>
  SpherePoint<Other> cast() const {
    return SpherePoint<Other>::normalized(v_.template cast<Other>());
  }

  friend bool operator==(const SpherePoint& a, const SpherePoint& b) { return a.v_ == b.v_; }

 private:
  explicit SpherePoint(const Vec& v) : v_(v) {}
  Vec v_;
};

/// A vector in the tangent plane at `base`.
template <typename Scalar>
class TangentVector {
 public:
  using Vec = Vector3<Scalar>;

  /// Removes the normal component of `w` at `base`.
  static TangentVector project(const SpherePoint<Scalar>& base, const Vec& w) {
    Vec v = w - base.vec().dot(w) * base.vec();
    // One more pass brings the residual normal component down to rounding level.
    v -= base.vec().dot(v) * base.vec();
    return TangentVector(base, v, false);
  }

  /// Validates orthogonality; `unit` additionally requires |v| = 1.
  static TangentVector from_components(const SpherePoint<Scalar>& base, const Vec& v,
                                       bool unit = false) {
    const Scalar scale = std::max(Scalar(1), v.norm());
    if (!(std::abs(base.vec().dot(v)) <= unit_tolerance<Scalar>() * scale))
      throw std::domain_error("TangentVector: vector is not orthogonal to its base point");
    if (unit && !(std::abs(v.norm() - Scalar(1)) <= unit_tolerance<Scalar>()))
      throw std::domain_error("TangentVector: vector marked unit is not of unit length");
    return TangentVector(base, v, unit);
  }

  const SpherePoint<Scalar>& base() const { return base_; }
  const Vec& vec() const { return v_; }
  bool is_unit() const { return unit_; }
  Scalar norm() const { return v_.norm(); }

  /// Unit vector in the same direction; throws on a zero vector.
  TangentVector normalized() const {
    const Scalar n = v_.norm();
    if (!(n > Scalar(0))) throw std::domain_error("TangentVector: cannot normalize zero vector");
    return TangentVector(base_, v_ / n, true);
  }

 private:
  TangentVector(const SpherePoint<Scalar>& base, const Vec& v, bool unit)
      : base_(base), v_(v), unit_(unit) {}

  SpherePoint<Scalar> base_;
  Vec v_;
  bool unit_;
};

/// Closed geodesic ball B(center, radius).
template <typename Scalar>
class GeodesicBall {
 public:
  GeodesicBall(const SpherePoint<Scalar>& center, Scalar radius) : center_(center), radius_(radius) {
    if (!(radius >= Scalar(0) && radius <= std::numbers::pi_v<Scalar>))
      throw std::domain_error("GeodesicBall: radius must lie in [0, pi]");
  }

  const SpherePoint<Scalar>& center() const { return center_; }
  Scalar radius() const { return radius_; }

 private:
  SpherePoint<Scalar> center_;
  Scalar radius_;
};

/// Great-circle distance in [0, pi].
///
/// Evaluated as atan2(|a x b|, <a, b>), which equals arccos of the clamped
/// inner product but keeps full relative accuracy for nearly identical or
/// nearly antipodal points.
template <typename Scalar>
Scalar geodesic_distance(const SpherePoint<Scalar>& a, const SpherePoint<Scalar>& b) {
  const Scalar cross = a.vec().cross(b.vec()).norm();
  const Scalar dot = std::clamp(a.vec().dot(b.vec()), Scalar(-1), Scalar(1));
  return std::atan2(cross, dot);
}

template <typename Scalar>
Scalar chordal_distance(const SpherePoint<Scalar>& a, const SpherePoint<Scalar>& b) {
  return (a.vec() - b.vec()).norm();
}

template <typename Scalar>
bool contains(const GeodesicBall<Scalar>& ball, const SpherePoint<Scalar>& p) {
  return geodesic_distance(ball.center(), p) <= ball.radius();
}

/// Normalized area sigma(B(x, r)) = sin^2(r / 2), with sigma(S^2) = 1.
template <typename Scalar>
Scalar cap_normalized_area(Scalar radius) {
  if (!(radius >= Scalar(0) && radius <= std::numbers::pi_v<Scalar>))
    throw std::domain_error("cap_normalized_area: radius must lie in [0, pi]");
  const Scalar s = std::sin(radius / 2);
  return s * s;
}

template <typename Scalar>
Scalar cap_normalized_area(const GeodesicBall<Scalar>& ball) {
  return cap_normalized_area(ball.radius());
}

/// Uniformly distributed unit tangent vector at `base`.
template <typename Scalar, typename Urbg>
TangentVector<Scalar> random_tangent_unit(const SpherePoint<Scalar>& base, Urbg& rng) {
  std::normal_distribution<double> normal;
  for (;;) {
    const Vector3<Scalar> g(Scalar(normal(rng)), Scalar(normal(rng)), Scalar(normal(rng)));
    const auto t = TangentVector<Scalar>::project(base, g);
    if (t.norm() >= Scalar(1e-8)) return t.normalized();
  }
}

/// The curve sqrt(1 - t^2) x + t v, whose length from x is arcsin(t).
template <typename Scalar>
SpherePoint<Scalar> geodesic_step(const TangentVector<Scalar>& v, Scalar t) {
  if (!(t >= Scalar(0) && t <= Scalar(1)))
    throw std::domain_error("geodesic_step: t must lie in [0, 1]");
  if (!(std::abs(v.norm() - Scalar(1)) <= unit_tolerance<Scalar>()))
    throw std::domain_error("geodesic_step: direction must be a unit tangent vector");
  if (t == Scalar(0)) return v.base();
  const Vector3<Scalar> p = std::sqrt((Scalar(1) - t) * (Scalar(1) + t)) * v.base().vec() + t * v.vec();
  return SpherePoint<Scalar>::normalized(p);
}

template <typename Scalar>
SpherePoint<Scalar> geodesic_step(const SpherePoint<Scalar>& base, const TangentVector<Scalar>& v,
                                  Scalar t) {
  if (!(v.base() == base)) throw std::domain_error("geodesic_step: tangent vector based elsewhere");
  return geodesic_step(v, t);
}

/// A point of the extended complex plane C u {inf}.
template <typename Scalar>
class ExtendedComplex {
 public:
  ExtendedComplex(std::complex<Scalar> z) : z_(z), infinite_(false) {}  // NOLINT: implicit by intent
  static ExtendedComplex infinity() { return ExtendedComplex(); }

  bool is_infinity() const { return infinite_; }
  std::complex<Scalar> value() const {
    if (infinite_) throw std::logic_error("ExtendedComplex: point at infinity has no finite value");
    return z_;
  }

 private:
  ExtendedComplex() : z_(0), infinite_(true) {}
  std::complex<Scalar> z_;
  bool infinite_;
};

/// Inverse stereographic projection from the north pole: 0 maps to the south
/// pole, the unit circle to the equator and infinity to (0, 0, 1).
template <typename Scalar>
SpherePoint<Scalar> plane_to_sphere(const ExtendedComplex<Scalar>& w) {
  if (w.is_infinity()) return SpherePoint<Scalar>::from_unit(Scalar(0), Scalar(0), Scalar(1));
  const std::complex<Scalar> z = w.value();
  const Scalar r2 = std::norm(z);
  if (!std::isfinite(static_cast<double>(r2)))
    return SpherePoint<Scalar>::from_unit(Scalar(0), Scalar(0), Scalar(1));
  const Scalar d = Scalar(1) + r2;
  return SpherePoint<Scalar>::normalized(
      Vector3<Scalar>(2 * z.real() / d, 2 * z.imag() / d, (r2 - Scalar(1)) / d));
}

template <typename Scalar>
SpherePoint<Scalar> plane_to_sphere(std::complex<Scalar> z) {
  return plane_to_sphere(ExtendedComplex<Scalar>(z));
}

/// Stereographic projection from the north pole; the pole maps to infinity.
template <typename Scalar>
ExtendedComplex<Scalar> sphere_to_plane(const SpherePoint<Scalar>& p) {
  const Scalar rho2 = p.x() * p.x() + p.y() * p.y();
  const std::complex<Scalar> xy(p.x(), p.y());
  if (p.z() <= Scalar(0)) return ExtendedComplex<Scalar>(xy / (Scalar(1) - p.z()));
  if (rho2 == Scalar(0)) return ExtendedComplex<Scalar>::infinity();
  // (x + iy) / (1 - z) rewritten to avoid cancellation near the pole.
  return ExtendedComplex<Scalar>(xy * (Scalar(1) + p.z()) / rho2);
}

using SpherePointd = SpherePoint<double>;
using TangentVectord = TangentVector<double>;

}  // namespace coulomb
