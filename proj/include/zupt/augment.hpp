#ifndef ZUPT_AUGMENT_HPP_
#define ZUPT_AUGMENT_HPP_

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "zupt/csv.hpp"
#include "zupt/error.hpp"
#include "zupt/quaternion.hpp"
#include "zupt/types.hpp"

namespace zupt::augment
{

/// Rows are timesteps, columns (ax, ay, az, gx, gy, gz).
using Window = Eigen::Matrix<double, Eigen::Dynamic, 6>;

struct AugmentConfig
{
  bool rotation{true};
  double scale_min{0.92};
  double scale_max{1.02};
  double jitter_std{0.075};
  std::uint64_t rng_seed{0};

  void validate() const
  {
    if (!(scale_min > 0.0) || !(scale_max >= scale_min)) {
      throw ContractError("augmentation scale range must be positive and ordered");
    }
    if (!(jitter_std >= 0.0)) {throw ContractError("jitter_std must be non-negative");}
  }

  /// No-op configuration.
  static AugmentConfig identity()
  {
    AugmentConfig c;
    c.rotation = false;
    c.scale_min = c.scale_max = 1.0;
    c.jitter_std = 0.0;
    return c;
  }
};

/// splitmix64 step, used to derive independent per-window seeds.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index)
{
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Applies the same rotation to every accel and gyro row.
inline Window rotate_window(const Window & w, const Quat & q)
{
  const Mat3 r = q.toRotationMatrix();
  Window out(w.rows(), 6);
  out.leftCols<3>() = w.leftCols<3>() * r.transpose();
  out.rightCols<3>() = w.rightCols<3>() * r.transpose();
  return out;
}

/**
 * @brief Random rotation, amplitude scaling and per-element Gaussian jitter.
 *
 * One rotation and one scale factor per window; jitter is added after scaling.
 */
inline Window augment_window(const Window & window, const AugmentConfig & cfg)
{
  cfg.validate();
  std::mt19937_64 rng(cfg.rng_seed);
  Window out = cfg.rotation ? rotate_window(window, random_rotation(rng)) : window;
  if (cfg.scale_max > cfg.scale_min) {
    std::uniform_real_distribution<double> scale(cfg.scale_min, cfg.scale_max);
    out *= scale(rng);
  } else if (cfg.scale_min != 1.0) {
    out *= cfg.scale_min;
  }
  if (cfg.jitter_std > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.jitter_std);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      for (Eigen::Index c = 0; c < 6; ++c) {out(r, c) += noise(rng);}
    }
  }
  return out;
}

inline Window window_from_sequence(const ImuSequence & seq, std::size_t start, std::size_t len)
{
  if (start + len > seq.size()) {throw ContractError("window exceeds sequence");}
  Window w(static_cast<Eigen::Index>(len), 6);
  for (std::size_t k = 0; k < len; ++k) {
    const auto & s = seq[start + k];
    w.row(static_cast<Eigen::Index>(k)) << s.accel.transpose(), s.gyro.transpose();
  }
  return w;
}

struct LabeledWindow
{
  std::size_t start{0};
  Window data;
  std::uint8_t label{0};  ///< flag at the final timestep
};

/// `count` windows with start indices drawn uniformly from [0, N - window_len].
inline std::vector<LabeledWindow> extract_windows(
  const ImuSequence & seq, const Flags & labels, std::size_t window_len, std::size_t count,
  std::uint64_t seed)
{
  if (labels.size() != seq.size()) {throw ContractError("labels differ in length from sequence");}
  if (window_len == 0 || window_len > seq.size()) {
    throw ContractError(
            "window length " + std::to_string(window_len) + " exceeds sequence length " +
            std::to_string(seq.size()));
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, seq.size() - window_len);
  std::vector<LabeledWindow> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t start = pick(rng);
    out.push_back({start, window_from_sequence(seq, start, window_len), labels[start + window_len - 1]});
  }
  return out;
}

/// `window,step,ax,ay,az,gx,gy,gz,label` rows for trainer ingestion.
inline void write_windows_csv(std::ostream & os, const std::vector<LabeledWindow> & windows)
{
  os << "window,step,ax,ay,az,gx,gy,gz,label\n";
  for (std::size_t n = 0; n < windows.size(); ++n) {
    const auto & w = windows[n];
    for (Eigen::Index r = 0; r < w.data.rows(); ++r) {
      os << n << ',' << r;
      for (Eigen::Index c = 0; c < 6; ++c) {
        os << ',';
        csv::write_double(os, w.data(r, c));
      }
      os << ',' << int(w.label) << '\n';
    }
  }
}

}  // namespace zupt::augment

#endif  // ZUPT_AUGMENT_HPP_
