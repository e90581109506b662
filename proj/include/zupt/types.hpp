#ifndef ZUPT_TYPES_HPP_
#define ZUPT_TYPES_HPP_

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zupt/error.hpp"

namespace zupt
{

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
/// Hamilton, scalar-first, rotates body-frame vectors into the navigation frame.
using Quat = Eigen::Quaterniond;

/// Standard gravity [m/s^2].
inline constexpr double kStandardGravity = 9.80665;
inline constexpr double kDefaultRateHz = 200.0;

/// One IMU reading. `accel` is specific force [m/s^2], `gyro` angular rate [rad/s],
/// both in the IMU frame.
struct ImuSample
{
  double t{0.0};
  Vec3 accel{Vec3::Zero()};
  Vec3 gyro{Vec3::Zero()};
};

inline bool is_finite(const Vec3 & v) { return v.allFinite(); }

/**
 * @brief Validated, fixed-rate IMU log.
 *
 * Timestamps are strictly increasing and every sample period lies within half a
 * nominal period of 1/rate_hz. Instances are immutable once constructed.
 */
class ImuSequence
{
public:
  ImuSequence(std::vector<ImuSample> samples, double rate_hz)
  : samples_(std::move(samples)), rate_hz_(rate_hz)
  {
    validate();
  }

  std::size_t size() const noexcept { return samples_.size(); }
  double rate_hz() const noexcept { return rate_hz_; }
  double dt() const noexcept { return 1.0 / rate_hz_; }
  const ImuSample & operator[](std::size_t k) const { return samples_[k]; }
  const std::vector<ImuSample> & samples() const noexcept { return samples_; }
  auto begin() const noexcept { return samples_.begin(); }
  auto end() const noexcept { return samples_.end(); }

  double duration() const { return samples_.back().t - samples_.front().t; }

  /// Samples [first, first + count) as a new sequence at the same rate.
  ImuSequence slice(std::size_t first, std::size_t count) const
  {
    if (first + count > samples_.size() || count == 0) {
      throw ContractError("ImuSequence::slice out of range");
    }
    return ImuSequence(
      std::vector<ImuSample>(samples_.begin() + first, samples_.begin() + first + count),
      rate_hz_);
  }

private:
  void validate() const
  {
    if (samples_.empty()) {throw ValidationError("IMU sequence is empty");}
    if (!(rate_hz_ > 0.0) || !std::isfinite(rate_hz_)) {
      throw ValidationError("IMU rate must be positive");
    }
    const double period = 1.0 / rate_hz_;
    for (std::size_t k = 0; k < samples_.size(); ++k) {
      const auto & s = samples_[k];
      if (!std::isfinite(s.t) || s.t < 0.0 || !is_finite(s.accel) || !is_finite(s.gyro)) {
        throw ValidationError("non-finite or negative-time IMU sample at index " + std::to_string(k));
      }
      if (k == 0) {continue;}
      const double step = s.t - samples_[k - 1].t;
      if (!(step > 0.0)) {
        throw ValidationError("timestamps not strictly increasing at index " + std::to_string(k));
      }
      if (std::abs(step - period) >= 0.5 * period) {
        throw ValidationError(
                "sample period at index " + std::to_string(k) + " deviates from 1/rate by half a period or more");
      }
    }
  }

  std::vector<ImuSample> samples_;
  double rate_hz_;
};

/// Per-timestep binary zero-velocity flags (1 = stationary).
using Flags = std::vector<std::uint8_t>;

struct Marker
{
  double t{0.0};
  Vec3 position{Vec3::Zero()};
};

/// Reference positions, optional zero-velocity labels and optional marker events.
struct GroundTruth
{
  std::vector<double> times;
  std::vector<Vec3> positions;
  std::optional<Flags> labels;
  std::vector<Marker> markers;

  std::size_t size() const noexcept { return times.size(); }

  void validate() const
  {
    if (times.size() != positions.size()) {
      throw ValidationError("ground truth times and positions differ in length");
    }
    if (labels && labels->size() != times.size()) {
      throw ValidationError("ground truth labels differ in length from positions");
    }
    for (std::size_t k = 1; k < times.size(); ++k) {
      if (!(times[k] > times[k - 1])) {
        throw ValidationError("ground truth times not strictly increasing at index " + std::to_string(k));
      }
    }
  }
};

/// Navigation state (nominal part of the filter).
struct NavState
{
  Vec3 p{Vec3::Zero()};
  Vec3 v{Vec3::Zero()};
  Quat q{Quat::Identity()};

  bool finite() const { return p.allFinite() && v.allFinite() && q.coeffs().allFinite(); }
};

/// Timestamped filter output, one entry per IMU sample.
struct Trajectory
{
  std::vector<double> times;
  std::vector<NavState> states;

  std::size_t size() const noexcept { return times.size(); }
};

}  // namespace zupt

#endif  // ZUPT_TYPES_HPP_
