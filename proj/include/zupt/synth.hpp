#ifndef ZUPT_SYNTH_HPP_
#define ZUPT_SYNTH_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "zupt/csv.hpp"
#include "zupt/error.hpp"
#include "zupt/quaternion.hpp"
#include "zupt/types.hpp"

namespace zupt::synth
{

enum class MotionKind { walk, run, shuffle, stair, crawl };
enum class PathKind { straight, circuit };

/**
 * @brief How IMU samples are derived from the foot kinematics.
 *
 * `strapdown_exact` builds sample k from the discrete pose sequence so that the
 * strapdown recursion (p += v·dt, v += (R(q_prev)·a - g)·dt, q ⊗= exp(ω·dt))
 * reproduces the sampled poses exactly. `point` evaluates the analytic specific
 * force and body rate at t_k, as a physical sensor would.
 */
enum class Sampling { strapdown_exact, point };

struct GaitProfile
{
  MotionKind motion_kind{MotionKind::walk};
  double cadence_hz{0.9};        ///< gait cycles of the instrumented foot per second; 0 = pure rest
  double stride_m{1.4};          ///< horizontal displacement per cycle
  double stance_fraction{0.6};
  double swing_height_m{0.12};
  double rotation_intensity{6.0};  ///< peak toe-off and heel-strike pitch rate [rad/s]
  double stance_rotation{0.02};    ///< heel-to-toe roll rate during stance [rad/s]
  double glide_rotation{0.2};      ///< pitch rate while the foot glides mid-swing [rad/s]
  double swing_ramp_fraction{0.3}; ///< share of the swing spent in each push-off/landing ramp
  double rise_per_stride_m{0.0};
  double accel_noise_std{0.0};
  double gyro_noise_std{0.0};
  double duration_s{10.0};
  double rest_s{1.0};            ///< dwell before the first and after the last cycle
  double rate_hz{kDefaultRateHz};
  PathKind path{PathKind::straight};
  int strides_per_lap{12};
  Sampling sampling{Sampling::strapdown_exact};

  void validate() const
  {
    auto bad = [](const char * what) {throw ContractError(std::string("gait profile: ") + what);};
    if (!(cadence_hz >= 0.0)) {bad("cadence must be non-negative");}
    if (!(stride_m >= 0.0) || !(swing_height_m >= 0.0) || !(rotation_intensity >= 0.0) ||
      !(stance_rotation >= 0.0) || !(glide_rotation >= 0.0))
    {
      bad("stride, swing height and rotation rates must be non-negative");
    }
    if (!(stance_fraction > 0.2 && stance_fraction < 0.8)) {bad("stance_fraction must lie in (0.2, 0.8)");}
    if (!(accel_noise_std >= 0.0) || !(gyro_noise_std >= 0.0)) {bad("noise must be non-negative");}
    if (!(duration_s > 0.0) || !(rest_s >= 0.0) || !(rate_hz > 0.0)) {bad("durations and rate must be positive");}
    if (strides_per_lap < 3) {bad("strides_per_lap must be at least 3");}
    if (!(swing_ramp_fraction > 0.0 && swing_ramp_fraction <= 0.5)) {bad("swing_ramp_fraction must lie in (0, 0.5]");}
  }

  static GaitProfile preset(MotionKind kind)
  {
    GaitProfile p;
    p.motion_kind = kind;
    switch (kind) {
      case MotionKind::walk:
        break;
      case MotionKind::run:
        p.cadence_hz = 1.4;
        p.stride_m = 2.4;
        p.stance_fraction = 0.35;
        p.swing_height_m = 0.2;
        p.rotation_intensity = 10.0;
        p.stance_rotation = 0.6;
        p.glide_rotation = 2.0;
        break;
      case MotionKind::shuffle:
        p.cadence_hz = 0.8;
        p.stride_m = 0.4;
        p.stance_fraction = 0.5;
        p.swing_height_m = 0.02;
        p.rotation_intensity = 1.0;
        p.stance_rotation = 0.02;
        p.glide_rotation = 0.1;
        break;
      case MotionKind::stair:
        p.cadence_hz = 0.6;
        p.stride_m = 0.6;
        p.stance_fraction = 0.55;
        p.swing_height_m = 0.1;
        p.rotation_intensity = 1.5;
        p.stance_rotation = 0.02;
        p.glide_rotation = 0.1;
        p.rise_per_stride_m = 0.34;
        break;
      case MotionKind::crawl:
        p.cadence_hz = 0.5;
        p.stride_m = 0.5;
        p.stance_fraction = 0.5;
        p.swing_height_m = 0.04;
        p.rotation_intensity = 0.15;
        p.stance_rotation = 0.01;
        p.glide_rotation = 0.02;
        break;
    }
    return p;
  }
};

struct SynthResult
{
  ImuSequence imu;
  GroundTruth gt;
  std::vector<Vec3> velocities;  ///< per-sample reference velocity
  std::vector<Quat> attitudes;   ///< per-sample reference attitude
};

namespace detail
{

// quintic rise 0 -> 1 with zero first and second derivative at both ends
inline double rise(double u) { return u * u * u * (10.0 + u * (-15.0 + 6.0 * u)); }
inline double rise_d(double u) { return 30.0 * u * u * (1.0 - u) * (1.0 - u); }
inline double rise_dd(double u) { return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u); }
// ∫₀ˣ rise
inline double rise_int(double x) { return x * x * x * x * (2.5 + x * (-3.0 + x)); }

// sin² pulse on [0, 1] and its integral
inline double pulse(double x)
{
  const double s = std::sin(std::numbers::pi * x);
  return s * s;
}
inline double pulse_int(double x) { return 0.5 * x - std::sin(2.0 * std::numbers::pi * x) / (4.0 * std::numbers::pi); }

// zero-mean wiggle on [0, 1] with unit peak, and its integral
inline double wiggle(double x)
{
  constexpr double peak = 0.649519052838329;  // 3√3/8
  const double s = std::sin(std::numbers::pi * x);
  return std::sin(2.0 * std::numbers::pi * x) * s * s / peak;
}
inline double wiggle_int(double x)
{
  constexpr double peak = 0.649519052838329;
  constexpr double pi = std::numbers::pi;
  return (-std::cos(2.0 * pi * x) / (4.0 * pi) + std::cos(4.0 * pi * x) / (16.0 * pi) + 3.0 / (16.0 * pi)) / peak;
}

struct Pose
{
  Vec3 p{Vec3::Zero()};
  Vec3 v{Vec3::Zero()};
  Vec3 a{Vec3::Zero()};
  double yaw{0.0};
  double yaw_rate{0.0};
  double pitch{0.0};
  double pitch_rate{0.0};
  int dwell{-1};  ///< dwell-interval index, -1 during swing

  Quat attitude() const
  {
    return Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())) * Quat(Eigen::AngleAxisd(pitch, Vec3::UnitY()));
  }

  Vec3 body_rate() const
  {
    return {-std::sin(pitch) * yaw_rate, pitch_rate, std::cos(pitch) * yaw_rate};
  }
};

/**
 * @brief Analytic foot kinematics of a profile.
 *
 * Each cycle is a stance (foot fixed, rolling heel-to-toe at a constant pitch
 * rate) followed by a swing. The swing has three phases over the normalized
 * time u ∈ [0, 1]: a push-off ramp, a glide at constant speed and height with
 * slow pitch rotation, and a landing ramp. Ramps carry the toe-off and
 * heel-strike pitch wiggles. Pitch rate is continuous across phases.
 */
class Kinematics
{
public:
  explicit Kinematics(const GaitProfile & prof) : prof_(prof)
  {
    if (prof.cadence_hz > 0.0) {
      period_ = 1.0 / prof.cadence_hz;
      cycles_ = static_cast<int>(std::floor((prof.duration_s - 2.0 * prof.rest_s) / period_ + 1e-12));
      cycles_ = std::max(cycles_, 0);
    }
    stance_ = prof.stance_fraction * period_;
    swing_ = period_ - stance_;
    ramp_ = prof.swing_ramp_fraction;
    speed_ = 1.0 / (1.0 - ramp_);
    turn_ = prof.path == PathKind::circuit ? 2.0 * std::numbers::pi / prof.strides_per_lap : 0.0;
    footholds_.push_back(Vec3::Zero());
    for (int c = 0; c < cycles_; ++c) {
      const double chord = heading(c) + 0.5 * turn_;
      footholds_.push_back(
        footholds_.back() +
        Vec3(prof.stride_m * std::cos(chord), prof.stride_m * std::sin(chord), prof.rise_per_stride_m));
    }
    // symmetric ramp pulse that returns the pitch to zero by the end of the swing
    if (swing_ > 0.0) {
      const double st = prof.stance_rotation;
      restore_ = (st * stance_ / swing_ + st * ramp_ - prof.glide_rotation * (1.0 - ramp_)) / ramp_;
    }
  }

  int cycles() const { return cycles_; }

  Pose at(double t) const
  {
    Pose pose;
    const double local = t - prof_.rest_s;
    if (cycles_ == 0 || local < 0.0) {
      pose.p = footholds_.front();
      pose.dwell = 0;
      return pose;
    }
    if (local >= cycles_ * period_) {
      pose.p = footholds_.back();
      pose.yaw = heading(cycles_);
      pose.dwell = cycles_;
      return pose;
    }
    const int c = std::min(static_cast<int>(std::floor(local / period_)), cycles_ - 1);
    const double within = local - c * period_;
    if (within <= stance_) {
      pose.p = footholds_[static_cast<std::size_t>(c)];
      pose.yaw = heading(c);
      pose.pitch = -prof_.stance_rotation * within;
      pose.pitch_rate = -prof_.stance_rotation;
      pose.dwell = c;
      return pose;
    }
    const double u = (within - stance_) / swing_;
    const Vec3 & from = footholds_[static_cast<std::size_t>(c)];
    const Vec3 step = footholds_[static_cast<std::size_t>(c) + 1] - from;
    const double inv = 1.0 / swing_;
    const double h = prof_.swing_height_m;

    const Profile prog = progress(u);
    const Profile lift = height(u);
    pose.p = from + prog.value * step + Vec3(0.0, 0.0, h * lift.value);
    pose.v = (prog.rate * step + Vec3(0.0, 0.0, h * lift.rate)) * inv;
    pose.a = (prog.accel * step + Vec3(0.0, 0.0, h * lift.accel)) * inv * inv;
    pose.yaw = heading(c) + prog.value * turn_;
    pose.yaw_rate = prog.rate * turn_ * inv;
    const auto [angle, rate] = swing_pitch(u);
    pose.pitch = -prof_.stance_rotation * stance_ + angle;
    pose.pitch_rate = rate;
    pose.dwell = -1;
    return pose;
  }

private:
  struct Profile
  {
    double value;
    double rate;   ///< d/du
    double accel;  ///< d²/du²
  };

  double heading(int c) const { return c * turn_; }

  /// Fraction of the step covered: plateau-shaped speed, C² at the joints.
  Profile progress(double u) const
  {
    const double a = ramp_;
    if (u < a) {
      const double x = u / a;
      return {speed_ * a * rise_int(x), speed_ * rise(x), speed_ * rise_d(x) / a};
    }
    if (u <= 1.0 - a) {
      return {speed_ * (0.5 * a + (u - a)), speed_, 0.0};
    }
    const double x = (1.0 - u) / a;
    return {1.0 - speed_ * a * rise_int(x), speed_ * rise(x), -speed_ * rise_d(x) / a};
  }

  /// Normalized foot clearance: lift during push-off, hold, lower during landing.
  Profile height(double u) const
  {
    const double a = ramp_;
    if (u < a) {
      const double x = u / a;
      return {rise(x), rise_d(x) / a, rise_dd(x) / (a * a)};
    }
    if (u <= 1.0 - a) {return {1.0, 0.0, 0.0};}
    const double x = (1.0 - u) / a;
    return {rise(x), -rise_d(x) / a, rise_dd(x) / (a * a)};
  }

  /// Pitch change since swing start and pitch rate [rad/s].
  std::pair<double, double> swing_pitch(double u) const
  {
    const double a = ramp_;
    const double st = prof_.stance_rotation;
    const double gl = prof_.glide_rotation;
    // rate(u) = -st·(1 - w) + gl·w + pulses, w = progress speed / speed_
    const Profile prog = progress(u);
    const double w = prog.rate / speed_;
    const double w_int = prog.value / speed_;
    double rate = -st * (1.0 - w) + gl * w;
    double integral = -st * (u - w_int) + gl * w_int;
    // toe-off and heel-strike wiggles of opposite sense plus the restoring pulse
    const double amp = prof_.rotation_intensity;
    const double x1 = std::min(u, a) / a;
    rate += u < a ? amp * wiggle(x1) + restore_ * pulse(x1) : 0.0;
    integral += a * (amp * wiggle_int(x1) + restore_ * pulse_int(x1));
    if (u > 1.0 - a) {
      const double x2 = (u - (1.0 - a)) / a;
      rate += -amp * wiggle(x2) + restore_ * pulse(x2);
      integral += a * (-amp * wiggle_int(x2) + restore_ * pulse_int(x2));
    }
    return {integral * swing_, rate};
  }

  GaitProfile prof_;
  double period_{0.0};
  double stance_{0.0};
  double swing_{0.0};
  double ramp_{0.3};
  double speed_{1.0};
  double turn_{0.0};
  double restore_{0.0};
  int cycles_{0};
  std::vector<Vec3> footholds_;
};

}  // namespace detail

/**
 * @brief Synthesize an IMU log and its exact ground truth.
 *
 * The gravity vector is (0, 0, g) in a z-up navigation frame. The sensor starts
 * level with zero yaw at the origin. Labels mark samples k whose interval
 * [t_k, t_{k+1}] lies inside one dwell (rest or stance).
 */
inline SynthResult generate(const GaitProfile & prof, std::uint64_t seed, double gravity = kStandardGravity)
{
  prof.validate();
  const detail::Kinematics kin(prof);
  const double dt = 1.0 / prof.rate_hz;
  const auto n = static_cast<std::size_t>(std::floor(prof.duration_s * prof.rate_hz + 1e-9)) + 1;
  const Vec3 g(0.0, 0.0, gravity);

  std::vector<detail::Pose> poses(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {poses[k] = kin.at(static_cast<double>(k) * dt);}

  std::vector<ImuSample> samples(n);
  GroundTruth gt;
  gt.times.resize(n);
  gt.positions.resize(n);
  Flags labels(n);
  std::vector<Vec3> velocities(n);
  std::vector<Quat> attitudes(n);

  if (prof.sampling == Sampling::strapdown_exact) {
    std::vector<Vec3> vd(n);
    std::vector<Quat> q(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {q[k] = poses[k].attitude();}
    for (std::size_t k = 0; k < n; ++k) {vd[k] = (poses[k + 1].p - poses[k].p) / dt;}
    for (std::size_t k = 0; k < n; ++k) {
      ImuSample & s = samples[k];
      s.t = static_cast<double>(k) * dt;
      if (k == 0) {
        s.accel = q[0].conjugate() * g;
        s.gyro = Vec3::Zero();
      } else {
        s.accel = q[k - 1].conjugate() * ((vd[k] - vd[k - 1]) / dt + g);
        s.gyro = quat_log(q[k - 1].conjugate() * q[k]) / dt;
      }
      velocities[k] = vd[k];
      attitudes[k] = q[k];
    }
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      const auto & pose = poses[k];
      const Quat q = pose.attitude();
      ImuSample & s = samples[k];
      s.t = static_cast<double>(k) * dt;
      s.accel = q.conjugate() * (pose.a + g);
      s.gyro = pose.body_rate();
      velocities[k] = pose.v;
      attitudes[k] = q;
    }
  }

  for (std::size_t k = 0; k < n; ++k) {
    gt.times[k] = samples[k].t;
    gt.positions[k] = poses[k].p;
    labels[k] = static_cast<std::uint8_t>(poses[k].dwell >= 0 && poses[k].dwell == poses[k + 1].dwell);
  }
  gt.labels = labels;

  if (prof.accel_noise_std > 0.0 || prof.gyro_noise_std > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> na(0.0, prof.accel_noise_std > 0.0 ? prof.accel_noise_std : 1.0);
    std::normal_distribution<double> ng(0.0, prof.gyro_noise_std > 0.0 ? prof.gyro_noise_std : 1.0);
    for (auto & s : samples) {
      if (prof.accel_noise_std > 0.0) {
        for (int i = 0; i < 3; ++i) {s.accel[i] += na(rng);}
      }
      if (prof.gyro_noise_std > 0.0) {
        for (int i = 0; i < 3; ++i) {s.gyro[i] += ng(rng);}
      }
    }
  }

  return {ImuSequence(std::move(samples), prof.rate_hz), std::move(gt), std::move(velocities), std::move(attitudes)};
}

// --- profile file: `key = value` -------------------------------------------

inline MotionKind parse_motion(const std::string & s)
{
  if (s == "walk") {return MotionKind::walk;}
  if (s == "run") {return MotionKind::run;}
  if (s == "shuffle") {return MotionKind::shuffle;}
  if (s == "stair") {return MotionKind::stair;}
  if (s == "crawl") {return MotionKind::crawl;}
  throw ContractError("unknown motion kind '" + s + "'");
}

inline const char * to_string(MotionKind k)
{
  switch (k) {
    case MotionKind::walk: return "walk";
    case MotionKind::run: return "run";
    case MotionKind::shuffle: return "shuffle";
    case MotionKind::stair: return "stair";
    case MotionKind::crawl: return "crawl";
  }
  return "?";
}

/**
 * @brief Read a profile. `motion_kind` (when present, first) selects the preset
 * the remaining keys override.
 */
inline GaitProfile read_profile(std::istream & in)
{
  GaitProfile p;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {line.erase(hash);}
    const auto trimmed = csv::trim(line);
    if (trimmed.empty()) {continue;}
    const auto eq = trimmed.find('=');
    if (eq == std::string_view::npos) {throw ParseError("expected 'key = value'", lineno);}
    const std::string key(csv::trim(trimmed.substr(0, eq)));
    const std::string value(csv::trim(trimmed.substr(eq + 1)));
    auto num = [&] {return csv::parse_double(value, lineno);};
    if (key == "motion_kind") {
      p = GaitProfile::preset(parse_motion(value));
    } else if (key == "path") {
      if (value == "straight") {
        p.path = PathKind::straight;
      } else if (value == "circuit") {
        p.path = PathKind::circuit;
      } else {
        throw ParseError("path must be 'straight' or 'circuit'", lineno);
      }
    } else if (key == "sampling") {
      if (value == "strapdown_exact") {
        p.sampling = Sampling::strapdown_exact;
      } else if (value == "point") {
        p.sampling = Sampling::point;
      } else {
        throw ParseError("sampling must be 'strapdown_exact' or 'point'", lineno);
      }
    } else if (key == "cadence_hz") {p.cadence_hz = num();
    } else if (key == "stride_m") {p.stride_m = num();
    } else if (key == "stance_fraction") {p.stance_fraction = num();
    } else if (key == "swing_height_m") {p.swing_height_m = num();
    } else if (key == "rotation_intensity") {p.rotation_intensity = num();
    } else if (key == "stance_rotation") {p.stance_rotation = num();
    } else if (key == "glide_rotation") {p.glide_rotation = num();
    } else if (key == "swing_ramp_fraction") {p.swing_ramp_fraction = num();
    } else if (key == "rise_per_stride_m") {p.rise_per_stride_m = num();
    } else if (key == "accel_noise_std") {p.accel_noise_std = num();
    } else if (key == "gyro_noise_std") {p.gyro_noise_std = num();
    } else if (key == "duration_s") {p.duration_s = num();
    } else if (key == "rest_s") {p.rest_s = num();
    } else if (key == "rate_hz") {p.rate_hz = num();
    } else if (key == "strides_per_lap") {p.strides_per_lap = static_cast<int>(num());
    } else {
      throw ParseError("unknown gait profile key '" + key + "'", lineno);
    }
  }
  p.validate();
  return p;
}

inline GaitProfile load_profile(const std::string & path)
{
  auto in = csv::open_in(path);
  return read_profile(in);
}

}  // namespace zupt::synth

#endif  // ZUPT_SYNTH_HPP_
