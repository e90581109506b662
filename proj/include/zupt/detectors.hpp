#ifndef ZUPT_DETECTORS_HPP_
#define ZUPT_DETECTORS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "zupt/csv.hpp"
#include "zupt/error.hpp"
#include "zupt/types.hpp"

namespace zupt::detect
{

/// Window and noise parameters shared by the classical detectors.
struct DetectorParams
{
  std::size_t window_w{5};
  double sigma_a{9.8e-4};    ///< accel noise std [m/s^2]
  double sigma_w{8.726e-5};  ///< gyro noise std [rad/s]
  double gravity_g{kStandardGravity};

  void validate() const
  {
    if (window_w < 2) {throw ContractError("detector window must be at least 2 samples");}
    if (!(sigma_a > 0.0) || !(sigma_w > 0.0)) {throw ContractError("detector sigmas must be positive");}
  }
};

/// Per-timestep statistic and stationary flag.
struct ZvDecision
{
  std::vector<double> statistic;
  Flags flag;

  std::size_t size() const noexcept { return flag.size(); }
};

enum class DetectorId { shoe, ared, amvd, mbgtd };

inline std::string_view to_string(DetectorId id)
{
  switch (id) {
    case DetectorId::shoe: return "shoe";
    case DetectorId::ared: return "ared";
    case DetectorId::amvd: return "amvd";
    case DetectorId::mbgtd: return "mbgtd";
  }
  return "?";
}

inline DetectorId parse_detector(std::string_view name)
{
  if (name == "shoe") {return DetectorId::shoe;}
  if (name == "ared") {return DetectorId::ared;}
  if (name == "amvd") {return DetectorId::amvd;}
  if (name == "mbgtd") {return DetectorId::mbgtd;}
  throw ContractError("unknown detector '" + std::string(name) + "'");
}

/// flag[k] = statistic[k] <= gamma.
inline Flags threshold_flags(const std::vector<double> & statistic, double gamma)
{
  Flags f(statistic.size());
  std::transform(
    statistic.begin(), statistic.end(), f.begin(),
    [gamma](double s) {return static_cast<std::uint8_t>(s <= gamma);});
  return f;
}

namespace detail
{

inline void require_length(const ImuSequence & seq, const DetectorParams & params)
{
  params.validate();
  if (seq.size() < params.window_w) {
    throw ContractError(
            "sequence of " + std::to_string(seq.size()) + " samples is shorter than the detector window (" +
            std::to_string(params.window_w) + ")");
  }
}

/// Evaluates `window_stat(k)` for every complete window and replicates the last
/// computable value over the final W-1 timesteps.
template<typename F>
std::vector<double> sliding(const ImuSequence & seq, std::size_t w, F && window_stat)
{
  const std::size_t n = seq.size();
  std::vector<double> out(n);
  const std::size_t last = n - w;
  for (std::size_t k = 0; k <= last; ++k) {out[k] = window_stat(k);}
  std::fill(out.begin() + last + 1, out.end(), out[last]);
  return out;
}

inline Vec3 mean_accel(const ImuSequence & seq, std::size_t k, std::size_t w)
{
  Vec3 m = Vec3::Zero();
  for (std::size_t n = k; n < k + w; ++n) {m += seq[n].accel;}
  return m / static_cast<double>(w);
}

}  // namespace detail

/// SHOE statistic (generalized likelihood ratio test on accel and gyro).
inline std::vector<double> shoe_statistic(const ImuSequence & seq, const DetectorParams & params)
{
  detail::require_length(seq, params);
  const std::size_t w = params.window_w;
  const double inv_va = 1.0 / (params.sigma_a * params.sigma_a);
  const double inv_vw = 1.0 / (params.sigma_w * params.sigma_w);
  return detail::sliding(
    seq, w, [&](std::size_t k) {
      const Vec3 mean = detail::mean_accel(seq, k, w);
      const double mean_norm = mean.norm();
      // a zero mean has no direction; the gravity term is dropped
      const Vec3 gdir = mean_norm > 0.0 ? Vec3(params.gravity_g * mean / mean_norm) : Vec3::Zero();
      double sum = 0.0;
      for (std::size_t n = k; n < k + w; ++n) {
        sum += inv_va * (seq[n].accel - gdir).squaredNorm() + inv_vw * seq[n].gyro.squaredNorm();
      }
      return sum / static_cast<double>(w);
    });
}

/// ARED statistic: windowed mean of squared gyro norm.
inline std::vector<double> ared_statistic(const ImuSequence & seq, const DetectorParams & params)
{
  detail::require_length(seq, params);
  const std::size_t w = params.window_w;
  return detail::sliding(
    seq, w, [&](std::size_t k) {
      double sum = 0.0;
      for (std::size_t n = k; n < k + w; ++n) {sum += seq[n].gyro.squaredNorm();}
      return sum / static_cast<double>(w);
    });
}

/// AMVD statistic: windowed accel variance (trace of the biased covariance).
inline std::vector<double> amvd_statistic(const ImuSequence & seq, const DetectorParams & params)
{
  detail::require_length(seq, params);
  const std::size_t w = params.window_w;
  return detail::sliding(
    seq, w, [&](std::size_t k) {
      const Vec3 mean = detail::mean_accel(seq, k, w);
      double sum = 0.0;
      for (std::size_t n = k; n < k + w; ++n) {sum += (seq[n].accel - mean).squaredNorm();}
      return sum / static_cast<double>(w);
    });
}

/**
 * @brief MBGTD statistic.
 *
 * The window holds samples k..e with e = k+W-1. For every split k <= i < j <= e the
 * mean Euclidean distance between accel samples of [i, j-1] and [j, e] is formed;
 * the statistic is the largest of these means.
 */
inline std::vector<double> mbgtd_statistic(const ImuSequence & seq, const DetectorParams & params)
{
  detail::require_length(seq, params);
  const std::size_t w = params.window_w;
  Eigen::MatrixXd dist(w, w);
  std::vector<double> tail(w);
  return detail::sliding(
    seq, w, [&](std::size_t k) {
      for (std::size_t a = 0; a < w; ++a) {
        dist(a, a) = 0.0;
        for (std::size_t b = a + 1; b < w; ++b) {
          dist(a, b) = dist(b, a) = (seq[k + a].accel - seq[k + b].accel).norm();
        }
      }
      double best = 0.0;
      for (std::size_t j = 1; j < w; ++j) {
        // tail[m] = sum of distances from sample m to the second sub-window [j, w-1]
        for (std::size_t m = 0; m < j; ++m) {
          tail[m] = dist.row(static_cast<Eigen::Index>(m)).segment(
            static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(w - j)).sum();
        }
        double acc = 0.0;
        const double right = static_cast<double>(w - j);
        for (std::size_t i = j; i-- > 0; ) {
          acc += tail[i];
          best = std::max(best, acc / (static_cast<double>(j - i) * right));
        }
      }
      return best;
    });
}

inline std::vector<double> statistic(DetectorId id, const ImuSequence & seq, const DetectorParams & params)
{
  switch (id) {
    case DetectorId::shoe: return shoe_statistic(seq, params);
    case DetectorId::ared: return ared_statistic(seq, params);
    case DetectorId::amvd: return amvd_statistic(seq, params);
    case DetectorId::mbgtd: return mbgtd_statistic(seq, params);
  }
  throw ContractError("unknown detector");
}

inline ZvDecision run_detector(DetectorId id, const ImuSequence & seq, const DetectorParams & params, double gamma)
{
  ZvDecision d;
  d.statistic = statistic(id, seq, params);
  d.flag = threshold_flags(d.statistic, gamma);
  return d;
}

inline ZvDecision shoe(const ImuSequence & seq, const DetectorParams & params, double gamma)
{
  return run_detector(DetectorId::shoe, seq, params, gamma);
}

inline ZvDecision ared(const ImuSequence & seq, const DetectorParams & params, double gamma_w)
{
  return run_detector(DetectorId::ared, seq, params, gamma_w);
}

inline ZvDecision amvd(const ImuSequence & seq, const DetectorParams & params, double gamma_v)
{
  return run_detector(DetectorId::amvd, seq, params, gamma_v);
}

inline ZvDecision mbgtd(const ImuSequence & seq, const DetectorParams & params, double gamma_m)
{
  return run_detector(DetectorId::mbgtd, seq, params, gamma_m);
}

/**
 * @brief Zero-velocity labels from differentiated reference positions.
 *
 * Speed uses central differences in the interior and one-sided differences at
 * the two ends; flag[k] = speed[k] <= gamma_v.
 */
inline ZvDecision velocity_labeler(const GroundTruth & gt, double gamma_v)
{
  gt.validate();
  const std::size_t n = gt.size();
  if (n < 3) {throw ContractError("velocity labeler needs at least 3 position samples");}
  ZvDecision d;
  d.statistic.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = k + 1 == n ? n - 1 : k + 1;
    d.statistic[k] = ((gt.positions[hi] - gt.positions[lo]) / (gt.times[hi] - gt.times[lo])).norm();
  }
  d.flag = threshold_flags(d.statistic, gamma_v);
  return d;
}

/// `count` thresholds spaced geometrically over [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, std::size_t count)
{
  if (!(lo > 0.0) || !(hi >= lo) || count == 0) {
    throw ContractError("log grid needs 0 < lo <= hi and count >= 1");
  }
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  // exponents in log10 so decade points come out exact
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < count; ++i) {
    const double e = a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
    grid[i] = std::pow(10.0, e);
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

/// `t,statistic,flag` rows, one per sample.
inline void write_decision_csv(std::ostream & os, const std::vector<double> & times, const ZvDecision & d)
{
  if (times.size() != d.size() || d.statistic.size() != d.size()) {
    throw ContractError("decision and time vectors differ in length");
  }
  os << "t,statistic,flag\n";
  for (std::size_t k = 0; k < d.size(); ++k) {
    csv::write_double(os, times[k]);
    os << ',';
    csv::write_double(os, d.statistic[k]);
    os << ',' << int(d.flag[k]) << '\n';
  }
}

inline std::vector<double> sample_times(const ImuSequence & seq)
{
  std::vector<double> t;
  t.reserve(seq.size());
  for (const auto & s : seq) {t.push_back(s.t);}
  return t;
}

}  // namespace zupt::detect

#endif  // ZUPT_DETECTORS_HPP_
