#ifndef ZUPT_THRESHOLD_HPP_
#define ZUPT_THRESHOLD_HPP_

#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "zupt/detectors.hpp"
#include "zupt/error.hpp"
#include "zupt/eskf.hpp"
#include "zupt/eval.hpp"
#include "zupt/types.hpp"

namespace zupt::detect
{

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ScoringOptions
{
  DetectorParams params{};
  std::optional<NavState> init{};  ///< leveled from the first 0.5 s when absent
  eval::Align align{eval::Align::yaw};
  int dims{2};
};

struct GammaScore
{
  double gamma{0.0};
  double armse{kInf};  ///< +inf when the INS diverged
};

struct ThresholdResult
{
  double best_gamma{0.0};
  double best_armse{kInf};
  std::vector<GammaScore> scores;  ///< in grid order
};

/// ARMSE of the INS driven by one detector at one threshold; +inf on divergence.
inline double score_threshold(
  const ImuSequence & seq, const GroundTruth & gt, const std::vector<double> & statistic, double gamma,
  const eskf::EskfConfig & cfg, const NavState & init, const ScoringOptions & opt)
{
  try {
    const auto traj = eskf::run_ins(seq, threshold_flags(statistic, gamma), cfg, init);
    const double e = eval::armse(traj, gt, opt.dims, opt.align).armse;
    return std::isfinite(e) ? e : kInf;
  } catch (const DivergenceError &) {
    return kInf;
  } catch (const NumericalError &) {
    return kInf;
  }
}

/**
 * @brief Grid search for the detector threshold minimizing trial ARMSE.
 *
 * Ties go to the smaller threshold.
 */
inline ThresholdResult optimize_threshold(
  const ImuSequence & seq, const GroundTruth & gt, DetectorId detector, const std::vector<double> & grid,
  const eskf::EskfConfig & cfg, const ScoringOptions & opt = {})
{
  if (grid.empty()) {throw ContractError("threshold grid is empty");}
  gt.validate();
  if (gt.size() == 0 || gt.times.front() > seq[0].t + 0.5 * seq.dt() ||
    gt.times.back() < seq.samples().back().t - 0.5 * seq.dt())
  {
    throw ContractError("ground truth does not cover the IMU time span");
  }
  const auto stat = statistic(detector, seq, opt.params);
  const NavState init = opt.init ? *opt.init : eskf::init_from_rest(seq, cfg);

  std::vector<std::future<double>> jobs;
  jobs.reserve(grid.size());
  for (double gamma : grid) {
    jobs.push_back(
      std::async(
        std::launch::async, [&, gamma] {
          return score_threshold(seq, gt, stat, gamma, cfg, init, opt);
        }));
  }
  ThresholdResult res;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const GammaScore s{grid[i], jobs[i].get()};
    res.scores.push_back(s);
    const bool better = s.armse < res.best_armse ||
      (s.armse == res.best_armse && (res.scores.size() == 1 || s.gamma < res.best_gamma));
    if (better) {
      res.best_gamma = s.gamma;
      res.best_armse = s.armse;
    }
  }
  return res;
}

struct Trial
{
  std::string name;
  ImuSequence seq;
  GroundTruth gt;
};

struct SweepTable
{
  std::vector<std::string> trials;
  std::vector<double> grid;
  std::vector<std::vector<double>> armse;  ///< [trial][gamma]

  /// Mean ARMSE over trials for grid column `g`.
  double aggregate(std::size_t g) const
  {
    double sum = 0.0;
    for (const auto & row : armse) {sum += row[g];}
    return sum / static_cast<double>(armse.size());
  }

  std::size_t pooled_best() const
  {
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
      if (aggregate(g) < aggregate(best)) {best = g;}
    }
    return best;
  }

  /// Mean over trials of each trial's own minimum.
  double mean_of_optima() const
  {
    double sum = 0.0;
    for (const auto & row : armse) {
      double m = kInf;
      for (double e : row) {m = std::min(m, e);}
      sum += m;
    }
    return sum / static_cast<double>(armse.size());
  }

  std::size_t trial_best(std::size_t trial) const
  {
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
      if (armse[trial][g] < armse[trial][best]) {best = g;}
    }
    return best;
  }
};

/// Error-vs-threshold table over several trials.
inline SweepTable sweep(
  const std::vector<Trial> & trials, DetectorId detector, const std::vector<double> & grid,
  const eskf::EskfConfig & cfg, const ScoringOptions & opt = {})
{
  SweepTable table;
  table.grid = grid;
  for (const auto & trial : trials) {
    const auto res = optimize_threshold(trial.seq, trial.gt, detector, grid, cfg, opt);
    table.trials.push_back(trial.name);
    std::vector<double> row;
    for (const auto & s : res.scores) {row.push_back(s.armse);}
    table.armse.push_back(std::move(row));
  }
  return table;
}

/// Tidy `trial,gamma,armse` rows; aggregate rows use trial name `ALL`.
inline void write_sweep_csv(std::ostream & os, const SweepTable & table)
{
  os << "trial,gamma,armse\n";
  auto put = [&os](double x) {
      if (std::isinf(x)) {
        os << "inf";
      } else {
        csv::write_double(os, x);
      }
    };
  for (std::size_t t = 0; t < table.trials.size(); ++t) {
    for (std::size_t g = 0; g < table.grid.size(); ++g) {
      os << table.trials[t] << ',';
      csv::write_double(os, table.grid[g]);
      os << ',';
      put(table.armse[t][g]);
      os << '\n';
    }
  }
  for (std::size_t g = 0; g < table.grid.size(); ++g) {
    os << "ALL,";
    csv::write_double(os, table.grid[g]);
    os << ',';
    put(table.aggregate(g));
    os << '\n';
  }
}

}  // namespace zupt::detect

#endif  // ZUPT_THRESHOLD_HPP_
