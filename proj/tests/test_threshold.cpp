#include <gtest/gtest.h>

#include <sstream>

#include "zupt/synth.hpp"
#include "zupt/threshold.hpp"

using namespace zupt;
using namespace zupt::detect;

namespace
{

synth::SynthResult short_walk(std::uint64_t seed = 1)
{
  auto prof = synth::GaitProfile::preset(synth::MotionKind::walk);
  prof.duration_s = 8;
  prof.sampling = synth::Sampling::point;
  prof.accel_noise_std = 0.02;
  prof.gyro_noise_std = 0.002;
  return synth::generate(prof, seed);
}

}  // namespace

TEST(OptimizeThreshold, SingletonGrid)
{
  const auto r = short_walk();
  const auto res = optimize_threshold(r.imu, r.gt, DetectorId::shoe, {1e5}, {});
  ASSERT_EQ(res.scores.size(), 1u);
  EXPECT_EQ(res.best_gamma, 1e5);
  EXPECT_TRUE(std::isfinite(res.best_armse));
}

TEST(OptimizeThreshold, TiesGoToSmallerGamma)
{
  // every threshold below the minimum statistic flags nothing, so they all tie
  const auto r = short_walk();
  const auto res = optimize_threshold(r.imu, r.gt, DetectorId::shoe, {1e-6, 1e-9, 1e-7, 1e-8}, {});
  for (const auto & s : res.scores) {EXPECT_EQ(s.armse, res.scores[0].armse);}
  EXPECT_EQ(res.best_gamma, 1e-9);
}

TEST(OptimizeThreshold, GridOrderAndBest)
{
  const auto r = short_walk();
  const auto grid = log_grid(1e3, 1e9, 13);
  const auto res = optimize_threshold(r.imu, r.gt, DetectorId::shoe, grid, {});
  ASSERT_EQ(res.scores.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(res.scores[i].gamma, grid[i]);
    EXPECT_GE(res.scores[i].armse, res.best_armse);
  }
  EXPECT_LT(res.best_armse, 0.5);
}

TEST(ScoreThreshold, DivergenceScoresInfinity)
{
  // one enormous sample blows the strapdown state up
  auto r = short_walk();
  auto samples = r.imu.samples();
  samples[900].accel = Vec3(1e300, 1e300, 1e300);
  const ImuSequence bad(std::move(samples), r.imu.rate_hz());
  const std::vector<double> stat(bad.size(), 1.0);
  eskf::EskfConfig cfg;
  NavState init;
  EXPECT_EQ(score_threshold(bad, r.gt, stat, 0.5, cfg, init, {}), kInf);
  const auto res = optimize_threshold(bad, r.gt, DetectorId::ared, {1e-3, 1e-1}, cfg, {{}, init});
  for (const auto & s : res.scores) {EXPECT_EQ(s.armse, kInf);}
}

TEST(OptimizeThreshold, RejectsBadInputs)
{
  const auto r = short_walk();
  EXPECT_THROW((void)optimize_threshold(r.imu, r.gt, DetectorId::shoe, {}, {}), ContractError);
  auto gt = r.gt;
  gt.times.resize(gt.times.size() / 2);
  gt.positions.resize(gt.times.size());
  gt.labels.reset();
  EXPECT_THROW((void)optimize_threshold(r.imu, gt, DetectorId::shoe, {1.0}, {}), ContractError);
}

TEST(Sweep, PooledAndCsv)
{
  std::vector<Trial> trials;
  for (std::uint64_t s : {1, 2}) {
    auto r = short_walk(s);
    trials.push_back({"walk" + std::to_string(s), r.imu, r.gt});
  }
  const auto grid = log_grid(1e4, 1e8, 5);
  const auto table = sweep(trials, DetectorId::shoe, grid, {});
  ASSERT_EQ(table.armse.size(), 2u);
  const std::size_t pooled = table.pooled_best();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    EXPECT_DOUBLE_EQ(table.aggregate(g), 0.5 * (table.armse[0][g] + table.armse[1][g]));
    EXPECT_GE(table.aggregate(g), table.aggregate(pooled));
  }
  EXPECT_LE(table.mean_of_optima(), table.aggregate(pooled));

  std::ostringstream out;
  write_sweep_csv(out, table);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "trial,gamma,armse");
  std::size_t rows = 0;
  std::size_t all = 0;
  while (std::getline(in, line)) {
    ++rows;
    all += line.rfind("ALL,", 0) == 0;
  }
  EXPECT_EQ(rows, 3 * grid.size());
  EXPECT_EQ(all, grid.size());
}
