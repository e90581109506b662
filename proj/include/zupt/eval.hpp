#ifndef ZUPT_EVAL_HPP_
#define ZUPT_EVAL_HPP_

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "zupt/csv.hpp"
#include "zupt/error.hpp"
#include "zupt/types.hpp"

namespace zupt::eval
{

/// Pre-alignment applied to the estimate before residuals are formed.
enum class Align
{
  none,
  translation,  ///< shift so the first overlapping positions coincide
  yaw,          ///< least-squares rotation about z plus translation
  rigid,        ///< least-squares rotation plus translation
};

inline Align parse_align(std::string_view s)
{
  if (s == "none") {return Align::none;}
  if (s == "trans") {return Align::translation;}
  if (s == "yaw") {return Align::yaw;}
  if (s == "rigid") {return Align::rigid;}
  throw ContractError("unknown alignment '" + std::string(s) + "'");
}

inline std::string_view to_string(Align a)
{
  switch (a) {
    case Align::none: return "none";
    case Align::translation: return "trans";
    case Align::yaw: return "yaw";
    case Align::rigid: return "rigid";
  }
  return "?";
}

/// x ↦ scale·R·x + t
struct RigidTransform
{
  Mat3 rotation{Mat3::Identity()};
  Vec3 translation{Vec3::Zero()};
  double scale{1.0};

  Vec3 apply(const Vec3 & x) const { return scale * (rotation * x) + translation; }
};

/**
 * @brief Closed-form least-squares alignment of corresponding point sets.
 *
 * Minimizes Σ‖dst_i − (s·R·src_i + t)‖² over rotations R (det = +1), translations
 * t and, when `with_scale`, s > 0 (Umeyama's similarity solution).
 */
inline RigidTransform rigid_align(std::span<const Vec3> src, std::span<const Vec3> dst, bool with_scale = false)
{
  if (src.size() != dst.size()) {throw ContractError("rigid_align: point lists differ in length");}
  if (src.size() < 3) {throw ContractError("rigid_align: need at least 3 correspondences");}
  const double n = static_cast<double>(src.size());
  Vec3 mu_s = Vec3::Zero();
  Vec3 mu_d = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mu_s += src[i];
    mu_d += dst[i];
  }
  mu_s /= n;
  mu_d /= n;

  Mat3 cov = Mat3::Zero();
  Mat3 scatter_s = Mat3::Zero();
  Mat3 scatter_d = Mat3::Zero();
  double var_s = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec3 ds = src[i] - mu_s;
    const Vec3 dd = dst[i] - mu_d;
    cov += dd * ds.transpose();
    scatter_s += ds * ds.transpose();
    scatter_d += dd * dd.transpose();
    var_s += ds.squaredNorm();
  }
  cov /= n;
  var_s /= n;

  auto rank_deficient = [](const Mat3 & scatter) {
      const Eigen::JacobiSVD<Mat3> svd(scatter);
      const auto sv = svd.singularValues();
      return !(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0];
    };
  if (rank_deficient(scatter_s) || rank_deficient(scatter_d)) {
    throw NumericalError("rigid_align: degenerate (collinear or coincident) point configuration");
  }

  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 sign = Vec3::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {sign[2] = -1.0;}

  RigidTransform tf;
  tf.rotation = svd.matrixU() * sign.asDiagonal() * svd.matrixV().transpose();
  tf.scale = with_scale ? svd.singularValues().dot(sign) / var_s : 1.0;
  tf.translation = mu_d - tf.scale * (tf.rotation * mu_s);
  return tf;
}

/// Rotation about z plus translation minimizing Σ‖dst − (R·src + t)‖².
inline RigidTransform yaw_align(std::span<const Vec3> src, std::span<const Vec3> dst)
{
  if (src.size() != dst.size() || src.empty()) {throw ContractError("yaw_align: bad point lists");}
  const double n = static_cast<double>(src.size());
  Vec3 mu_s = Vec3::Zero();
  Vec3 mu_d = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mu_s += src[i];
    mu_d += dst[i];
  }
  mu_s /= n;
  mu_d /= n;
  double sin_acc = 0.0;
  double cos_acc = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec3 a = src[i] - mu_s;
    const Vec3 b = dst[i] - mu_d;
    cos_acc += a.x() * b.x() + a.y() * b.y();
    sin_acc += a.x() * b.y() - a.y() * b.x();
  }
  RigidTransform tf;
  const double yaw = (sin_acc == 0.0 && cos_acc == 0.0) ? 0.0 : std::atan2(sin_acc, cos_acc);
  tf.rotation = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  tf.translation = mu_d - tf.rotation * mu_s;
  return tf;
}

/// Linear interpolation of a position track; `t` must lie within [times.front(), times.back()].
inline Vec3 interpolate(const std::vector<double> & times, const std::vector<Vec3> & positions, double t)
{
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end()) {return positions.back();}
  const auto hi = static_cast<std::size_t>(it - times.begin());
  if (*it == t || hi == 0) {return positions[hi];}
  const std::size_t lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  return positions[lo] + w * (positions[hi] - positions[lo]);
}

inline std::vector<Vec3> positions_of(const Trajectory & traj)
{
  std::vector<Vec3> p;
  p.reserve(traj.size());
  for (const auto & s : traj.states) {p.push_back(s.p);}
  return p;
}

struct MarkerError
{
  std::size_t marker{0};
  double error_m{0.0};
};

struct ErrorReport
{
  int dims{2};
  double armse{0.0};      ///< armse_2d or armse_3d according to `dims`
  double armse_2d{0.0};
  double armse_3d{0.0};
  double end_error{0.0};      ///< final-position error after alignment (per `dims`)
  double end_error_raw{0.0};  ///< final-position error without alignment (per `dims`)
  std::size_t samples{0};
  std::vector<MarkerError> per_marker;
};

/**
 * @brief RMS position error of a trajectory against ground truth.
 *
 * Ground truth is linearly interpolated to the trajectory timestamps that fall
 * inside its span; the alignment is fitted on those pairs in 3D.
 */
inline ErrorReport armse(const Trajectory & traj, const GroundTruth & gt, int dims = 2, Align align = Align::yaw)
{
  if (dims != 2 && dims != 3) {throw ContractError("dims must be 2 or 3");}
  gt.validate();
  if (gt.size() < 2 || traj.size() == 0) {throw ValidationError("armse needs at least two ground-truth samples");}
  const double g0 = gt.times.front();
  const double g1 = gt.times.back();
  std::vector<Vec3> est;
  std::vector<Vec3> ref;
  double t_first = 0.0;
  double t_last = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    if (t < g0 || t > g1) {continue;}
    if (est.empty()) {t_first = t;}
    t_last = t;
    est.push_back(traj.states[k].p);
    ref.push_back(interpolate(gt.times, gt.positions, t));
  }
  if (est.size() < 2 || (t_last - t_first) < 0.9 * (g1 - g0)) {
    throw ValidationError("trajectory overlaps less than 90% of the ground-truth span");
  }

  RigidTransform tf;
  switch (align) {
    case Align::none: break;
    case Align::translation: tf.translation = ref.front() - est.front(); break;
    case Align::yaw: tf = yaw_align(est, ref); break;
    case Align::rigid: tf = rigid_align(est, ref, false); break;
  }

  ErrorReport rep;
  rep.dims = dims;
  rep.samples = est.size();
  double sum2 = 0.0;
  double sum3 = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const Vec3 r = tf.apply(est[i]) - ref[i];
    sum2 += r.head<2>().squaredNorm();
    sum3 += r.squaredNorm();
  }
  rep.armse_2d = std::sqrt(sum2 / static_cast<double>(est.size()));
  rep.armse_3d = std::sqrt(sum3 / static_cast<double>(est.size()));
  rep.armse = dims == 2 ? rep.armse_2d : rep.armse_3d;
  const Vec3 end_aligned = tf.apply(est.back()) - ref.back();
  const Vec3 end_raw = est.back() - ref.back();
  rep.end_error = dims == 2 ? end_aligned.head<2>().norm() : end_aligned.norm();
  rep.end_error_raw = dims == 2 ? end_raw.head<2>().norm() : end_raw.norm();
  return rep;
}

struct MarkerResult
{
  std::vector<MarkerError> errors;
  std::vector<std::size_t> skipped;  ///< markers outside the trajectory span
};

/// Distance between the interpolated trajectory and each marker position.
inline MarkerResult marker_errors(const Trajectory & traj, std::span<const Marker> markers)
{
  MarkerResult out;
  if (traj.size() == 0) {
    for (std::size_t i = 0; i < markers.size(); ++i) {out.skipped.push_back(i);}
    return out;
  }
  const auto pos = positions_of(traj);
  for (std::size_t i = 0; i < markers.size(); ++i) {
    const double t = markers[i].t;
    if (t < traj.times.front() || t > traj.times.back()) {
      out.skipped.push_back(i);
      continue;
    }
    out.errors.push_back({i, (interpolate(traj.times, pos, t) - markers[i].position).norm()});
  }
  return out;
}

inline void write_report(std::ostream & os, const ErrorReport & r)
{
  os << "dims = " << r.dims << '\n';
  os << "armse = " << csv::format_double(r.armse) << '\n';
  os << "armse_2d = " << csv::format_double(r.armse_2d) << '\n';
  os << "armse_3d = " << csv::format_double(r.armse_3d) << '\n';
  os << "end_error = " << csv::format_double(r.end_error) << '\n';
  os << "end_error_raw = " << csv::format_double(r.end_error_raw) << '\n';
  os << "samples = " << r.samples << '\n';
  for (const auto & m : r.per_marker) {
    os << "marker_" << m.marker << " = " << csv::format_double(m.error_m) << '\n';
  }
}

inline constexpr std::string_view kReportCsvHeader = "armse_2d,armse_3d,end_error,end_error_raw,samples";

inline void write_report_row(std::ostream & os, const ErrorReport & r)
{
  csv::write_double(os, r.armse_2d);
  os << ',';
  csv::write_double(os, r.armse_3d);
  os << ',';
  csv::write_double(os, r.end_error);
  os << ',';
  csv::write_double(os, r.end_error_raw);
  os << ',' << r.samples << '\n';
}

}  // namespace zupt::eval

#endif  // ZUPT_EVAL_HPP_
