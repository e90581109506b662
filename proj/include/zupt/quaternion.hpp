#ifndef ZUPT_QUATERNION_HPP_
#define ZUPT_QUATERNION_HPP_

#include <algorithm>
#include <cmath>
#include <random>

#include "zupt/error.hpp"
#include "zupt/types.hpp"

namespace zupt
{

/// Unit-norm slack accepted by operations that require a rotation.
inline constexpr double kUnitNormTolerance = 1e-6;

enum class IncrementMode
{
  exponential,   ///< q ⊗ exp(ω·dt), exact for constant body rate
  omega_matrix,  ///< first-order (I + ½Ω(ω·dt)) q, then renormalized
};

inline Mat3 skew(const Vec3 & v)
{
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
    v.z(), 0.0, -v.x(),
    -v.y(), v.x(), 0.0;
  return m;
}

inline void require_unit(const Quat & q)
{
  if (std::abs(q.norm() - 1.0) > kUnitNormTolerance) {
    throw ContractError("quaternion is not unit norm (|q| = " + std::to_string(q.norm()) + ")");
  }
}

/// Quaternion of the rotation vector `theta` (axis * angle).
inline Quat quat_exp(const Vec3 & theta)
{
  const double angle = theta.norm();
  if (angle < 1e-8) {
    // second-order series, exact to double precision in this range
    Quat q(1.0 - angle * angle / 8.0, 0.5 * theta.x(), 0.5 * theta.y(), 0.5 * theta.z());
    q.normalize();
    return q;
  }
  const double half = 0.5 * angle;
  const Vec3 axis = theta / angle;
  const double s = std::sin(half);
  return Quat(std::cos(half), s * axis.x(), s * axis.y(), s * axis.z());
}

/// Rotation vector of a unit quaternion, angle in [0, π].
inline Vec3 quat_log(const Quat & q_in)
{
  Quat q = q_in;
  if (q.w() < 0.0) {q.coeffs() = -q.coeffs();}
  const Vec3 xyz = q.vec();
  const double sn = xyz.norm();
  if (sn < 1e-12) {
    return 2.0 * xyz / q.w();
  }
  const double angle = 2.0 * std::atan2(sn, q.w());
  return xyz * (angle / sn);
}

/// R(q)·v.
inline Vec3 quat_rotate(const Quat & q, const Vec3 & v)
{
  require_unit(q);
  return q * v;
}

/**
 * @brief Attitude update by a body-frame angular rate held for `dt`.
 *
 * Result is renormalized in both modes.
 */
inline Quat quat_increment(
  const Quat & q, const Vec3 & omega, double dt,
  IncrementMode mode = IncrementMode::exponential)
{
  require_unit(q);
  if (!(dt > 0.0)) {throw ContractError("quat_increment requires dt > 0");}
  const Vec3 theta = omega * dt;
  Quat out;
  if (mode == IncrementMode::exponential) {
    out = q * quat_exp(theta);
  } else {
    // q ⊗ (1, θ/2) written as a 4x4 linear map on q
    const Quat dq(1.0, 0.5 * theta.x(), 0.5 * theta.y(), 0.5 * theta.z());
    out = q * dq;
  }
  out.normalize();
  return out;
}

/// Z-Y-X (yaw, pitch, roll) Euler angles to a body-to-nav quaternion.
inline Quat quat_from_rpy(double roll, double pitch, double yaw)
{
  return Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())) *
         Quat(Eigen::AngleAxisd(pitch, Vec3::UnitY())) *
         Quat(Eigen::AngleAxisd(roll, Vec3::UnitX()));
}

/// Roll, pitch, yaw of a body-to-nav quaternion (inverse of quat_from_rpy).
inline Vec3 quat_to_rpy(const Quat & q)
{
  const Mat3 r = q.toRotationMatrix();
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {roll, pitch, yaw};
}

/// Uniformly distributed rotation: normalized 4-D Gaussian draw.
template<typename Rng>
Quat random_rotation(Rng & rng)
{
  std::normal_distribution<double> n(0.0, 1.0);
  Quat q;
  do {
    q = Quat(n(rng), n(rng), n(rng), n(rng));
  } while (q.norm() < 1e-6);
  q.normalize();
  return q;
}

}  // namespace zupt

#endif  // ZUPT_QUATERNION_HPP_
