#ifndef ZUPT_ESKF_HPP_
#define ZUPT_ESKF_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "zupt/csv.hpp"
#include "zupt/error.hpp"
#include "zupt/quaternion.hpp"
#include "zupt/types.hpp"

namespace zupt::eskf
{

using Mat9 = Eigen::Matrix<double, 9, 9>;
using Vec9 = Eigen::Matrix<double, 9, 1>;

/// Covariance of the error state (δp, δv, δθ). δθ is a body-frame rotation vector.
struct ErrorState
{
  Mat9 cov{Mat9::Zero()};
};

/**
 * @brief Filter parameters.
 *
 * The navigation frame is z-up, so at rest the specific force reads +g on the
 * nav z axis and `gravity` is (0, 0, +g).
 */
struct EskfConfig
{
  Vec3 gravity{0.0, 0.0, kStandardGravity};
  double accel_noise_std{0.02};
  double gyro_noise_std{0.002};
  double zupt_noise_std{0.01};
  Vec9 initial_cov_diag{(Vec9() << 0, 0, 0, 1e-4, 1e-4, 1e-4, 1e-6, 1e-6, 1e-6).finished()};
  IncrementMode increment_mode{IncrementMode::exponential};

  void validate() const
  {
    if (!(accel_noise_std > 0.0) || !(gyro_noise_std > 0.0) || !(zupt_noise_std > 0.0)) {
      throw ContractError("ESKF noise standard deviations must be positive");
    }
    if (!gravity.allFinite() || !initial_cov_diag.allFinite() || (initial_cov_diag.array() < 0.0).any()) {
      throw ContractError("ESKF gravity and initial covariance must be finite and non-negative");
    }
  }

  ErrorState initial_error() const
  {
    ErrorState e;
    e.cov = initial_cov_diag.asDiagonal();
    return e;
  }
};

/**
 * @brief Strapdown step of the nominal state plus covariance prediction.
 *
 * Position advances with the previous velocity; velocity with the specific
 * force rotated by the previous attitude.
 */
inline std::pair<NavState, ErrorState> propagate(
  const NavState & state, const ErrorState & err, const ImuSample & sample, double dt,
  const EskfConfig & cfg, std::size_t step = 0)
{
  if (!(dt > 0.0)) {throw ContractError("propagate requires dt > 0");}
  const Mat3 r = state.q.toRotationMatrix();

  NavState next;
  next.p = state.p + state.v * dt;
  next.v = state.v + (r * sample.accel - cfg.gravity) * dt;
  next.q = quat_increment(state.q, sample.gyro, dt, cfg.increment_mode);

  Mat9 f = Mat9::Identity();
  f.block<3, 3>(0, 3) = Mat3::Identity() * dt;
  f.block<3, 3>(3, 6) = -r * skew(sample.accel) * dt;
  f.block<3, 3>(6, 6) = Mat3::Identity() - skew(sample.gyro * dt);

  const double qv = cfg.accel_noise_std * cfg.accel_noise_std * dt * dt;
  const double qt = cfg.gyro_noise_std * cfg.gyro_noise_std * dt * dt;

  ErrorState next_err;
  next_err.cov = f * err.cov * f.transpose();
  next_err.cov.block<3, 3>(3, 3).diagonal().array() += qv;
  next_err.cov.block<3, 3>(6, 6).diagonal().array() += qt;
  next_err.cov = 0.5 * (next_err.cov + next_err.cov.transpose()).eval();

  if (!next.finite() || !next_err.cov.allFinite()) {
    throw DivergenceError("non-finite navigation state", step);
  }
  return {next, next_err};
}

/**
 * @brief Zero-velocity pseudo-measurement update.
 *
 * Measures v = 0 with H = [0 I 0]; the error estimate is injected into the
 * nominal state and reset, covariance is updated in Joseph form.
 */
inline std::pair<NavState, ErrorState> zupt_update(
  const NavState & state, const ErrorState & err, const EskfConfig & cfg)
{
  const double r = cfg.zupt_noise_std * cfg.zupt_noise_std;
  const Mat3 s = err.cov.block<3, 3>(3, 3) + r * Mat3::Identity();
  Eigen::LLT<Mat3> llt(s);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("ZUPT innovation covariance is not positive definite");
  }
  // K = P Hᵀ S⁻¹
  const Eigen::Matrix<double, 9, 3> pht = err.cov.block<9, 3>(0, 3);
  const Eigen::Matrix<double, 9, 3> gain = llt.solve(pht.transpose()).transpose();
  const Vec3 innovation = -state.v;
  const Vec9 dx = gain * innovation;

  NavState next = state;
  next.p += dx.segment<3>(0);
  next.v += dx.segment<3>(3);
  const Vec3 dtheta = dx.segment<3>(6);
  if (!dtheta.isZero(0.0)) {
    next.q = state.q * quat_exp(dtheta);
    next.q.normalize();
  }

  Mat9 ikh = Mat9::Identity();
  ikh.block<9, 3>(0, 3) -= gain;
  ErrorState next_err;
  next_err.cov = ikh * err.cov * ikh.transpose() + r * gain * gain.transpose();
  next_err.cov = 0.5 * (next_err.cov + next_err.cov.transpose()).eval();

  if (!next.finite() || !next_err.cov.allFinite()) {
    throw NumericalError("non-finite state after ZUPT");
  }
  return {next, next_err};
}

/**
 * @brief Mutable filter instance for one sequence.
 *
 * Single-threaded; may be moved between threads when idle.
 */
class Eskf
{
public:
  Eskf(const EskfConfig & cfg, const NavState & init)
  : cfg_(cfg), state_(init), err_(cfg.initial_error())
  {
    cfg_.validate();
    require_unit(init.q);
  }

  void propagate(const ImuSample & sample, double dt, std::size_t step = 0)
  {
    std::tie(state_, err_) = eskf::propagate(state_, err_, sample, dt, cfg_, step);
  }

  void zupt()
  {
    std::tie(state_, err_) = eskf::zupt_update(state_, err_, cfg_);
  }

  const NavState & state() const noexcept { return state_; }
  const ErrorState & error() const noexcept { return err_; }
  const EskfConfig & config() const noexcept { return cfg_; }

private:
  EskfConfig cfg_;
  NavState state_;
  ErrorState err_;
};

/**
 * @brief Run the zero-velocity-aided INS over a whole sequence.
 *
 * Sample 0 holds the initial state (updated when flagged); each later sample
 * k is propagated over t[k]-t[k-1] and then updated when flag[k] is set.
 */
inline Trajectory run_ins(const ImuSequence & seq, const Flags & zv, const EskfConfig & cfg, const NavState & init)
{
  if (zv.size() != seq.size()) {
    throw ContractError("zero-velocity flags differ in length from the IMU sequence");
  }
  Eskf filter(cfg, init);
  Trajectory traj;
  traj.times.reserve(seq.size());
  traj.states.reserve(seq.size());
  for (std::size_t k = 0; k < seq.size(); ++k) {
    if (k > 0) {filter.propagate(seq[k], seq[k].t - seq[k - 1].t, k);}
    if (zv[k]) {filter.zupt();}
    traj.times.push_back(seq[k].t);
    traj.states.push_back(filter.state());
  }
  return traj;
}

/// Samples needed to span `seconds` at the sequence rate.
inline std::size_t samples_for(const ImuSequence & seq, double seconds)
{
  return static_cast<std::size_t>(std::ceil(seconds * seq.rate_hz() - 1e-9));
}

/**
 * @brief Level the initial attitude from a resting prefix.
 *
 * Roll and pitch align the mean specific force with the nav z axis, yaw is 0,
 * position and velocity are 0. Uses the first 0.5 s of `seq`.
 */
inline NavState init_from_rest(const ImuSequence & seq, const EskfConfig & cfg, double rest_s = 0.5)
{
  const std::size_t n = samples_for(seq, rest_s);
  if (n == 0 || seq.size() < n) {
    throw ContractError("rest prefix shorter than " + std::to_string(rest_s) + " s");
  }
  Vec3 mean = Vec3::Zero();
  for (std::size_t k = 0; k < n; ++k) {mean += seq[k].accel;}
  mean /= static_cast<double>(n);
  const double g = cfg.gravity.norm();
  if (std::abs(mean.norm() - g) > 0.2 * g) {
    throw ValidationError("IMU not at rest: mean specific force " + std::to_string(mean.norm()) + " m/s^2");
  }
  const double roll = std::atan2(mean.y(), mean.z());
  const double pitch = std::atan2(-mean.x(), std::hypot(mean.y(), mean.z()));
  NavState s;
  s.q = quat_from_rpy(roll, pitch, 0.0);
  return s;
}

// --- config file: `key = value` lines, '#' starts a comment -----------------

inline EskfConfig read_config(std::istream & in)
{
  EskfConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  auto numbers = [&](std::istringstream & ss, int count) {
      std::vector<double> v;
      std::string tok;
      while (ss >> tok) {v.push_back(csv::parse_double(tok, lineno));}
      if (static_cast<int>(v.size()) != count) {
        throw ParseError("expected " + std::to_string(count) + " values", lineno);
      }
      return v;
    };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {line.erase(hash);}
    const auto trimmed = csv::trim(line);
    if (trimmed.empty()) {continue;}
    const auto eq = trimmed.find('=');
    if (eq == std::string_view::npos) {throw ParseError("expected 'key = value'", lineno);}
    const std::string key(csv::trim(trimmed.substr(0, eq)));
    std::istringstream ss{std::string(trimmed.substr(eq + 1))};
    if (key == "gravity") {
      const auto v = numbers(ss, 3);
      cfg.gravity = Vec3(v[0], v[1], v[2]);
    } else if (key == "accel_noise_std") {
      cfg.accel_noise_std = numbers(ss, 1)[0];
    } else if (key == "gyro_noise_std") {
      cfg.gyro_noise_std = numbers(ss, 1)[0];
    } else if (key == "zupt_noise_std") {
      cfg.zupt_noise_std = numbers(ss, 1)[0];
    } else if (key == "initial_cov_diag") {
      const auto v = numbers(ss, 9);
      for (int i = 0; i < 9; ++i) {cfg.initial_cov_diag[i] = v[static_cast<std::size_t>(i)];}
    } else if (key == "increment_mode") {
      std::string mode;
      ss >> mode;
      if (mode == "exponential") {
        cfg.increment_mode = IncrementMode::exponential;
      } else if (mode == "omega_matrix") {
        cfg.increment_mode = IncrementMode::omega_matrix;
      } else {
        throw ParseError("increment_mode must be 'exponential' or 'omega_matrix'", lineno);
      }
    } else {
      throw ParseError("unknown ESKF config key '" + key + "'", lineno);
    }
  }
  cfg.validate();
  return cfg;
}

inline EskfConfig load_config(const std::string & path)
{
  auto in = csv::open_in(path);
  return read_config(in);
}

inline void write_config(std::ostream & os, const EskfConfig & cfg)
{
  using csv::format_double;
  os << "gravity = " << format_double(cfg.gravity.x()) << ' ' << format_double(cfg.gravity.y()) << ' '
     << format_double(cfg.gravity.z()) << '\n';
  os << "accel_noise_std = " << format_double(cfg.accel_noise_std) << '\n';
  os << "gyro_noise_std = " << format_double(cfg.gyro_noise_std) << '\n';
  os << "zupt_noise_std = " << format_double(cfg.zupt_noise_std) << '\n';
  os << "initial_cov_diag =";
  for (int i = 0; i < 9; ++i) {os << ' ' << format_double(cfg.initial_cov_diag[i]);}
  os << '\n';
  os << "increment_mode = "
     << (cfg.increment_mode == IncrementMode::exponential ? "exponential" : "omega_matrix") << '\n';
}

// --- trajectory CSV ----------------------------------------------------------

inline void write_trajectory_csv(std::ostream & os, const Trajectory & traj)
{
  os << "t,px,py,pz,vx,vy,vz,qw,qx,qy,qz\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto & s = traj.states[k];
    csv::write_double(os, traj.times[k]);
    for (int i = 0; i < 3; ++i) {os << ','; csv::write_double(os, s.p[i]);}
    for (int i = 0; i < 3; ++i) {os << ','; csv::write_double(os, s.v[i]);}
    for (double c : {s.q.w(), s.q.x(), s.q.y(), s.q.z()}) {os << ','; csv::write_double(os, c);}
    os << '\n';
  }
}

inline Trajectory read_trajectory_csv(std::istream & in)
{
  const auto table = csv::read_table(in);
  if (!csv::header_is(
      table.header, {"t", "px", "py", "pz", "vx", "vy", "vz", "qw", "qx", "qy", "qz"}))
  {
    throw ParseError("trajectory CSV header must be 't,px,py,pz,vx,vy,vz,qw,qx,qy,qz'", 1);
  }
  Trajectory traj;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto & row = table.rows[r];
    if (r > 0 && !(row[0] > traj.times.back())) {
      throw ValidationError("time not strictly increasing at row " + std::to_string(r + 1));
    }
    NavState s;
    s.p = Vec3(row[1], row[2], row[3]);
    s.v = Vec3(row[4], row[5], row[6]);
    s.q = Quat(row[7], row[8], row[9], row[10]);
    traj.times.push_back(row[0]);
    traj.states.push_back(s);
  }
  return traj;
}

}  // namespace zupt::eskf

#endif  // ZUPT_ESKF_HPP_
