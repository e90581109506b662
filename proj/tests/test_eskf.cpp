#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <numbers>
#include <random>
#include <sstream>

#include "test_util.hpp"
#include "zupt/eskf.hpp"
#include "zupt/synth.hpp"

using namespace zupt;
using namespace zupt::eskf;
using testutil::constant_seq;

namespace
{

constexpr double g0 = kStandardGravity;

ImuSample sample(const Vec3 & a, const Vec3 & w)
{
  ImuSample s;
  s.accel = a;
  s.gyro = w;
  return s;
}

void expect_psd_symmetric(const Mat9 & p)
{
  ASSERT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  Eigen::SelfAdjointEigenSolver<Mat9> es(p);
  ASSERT_GE(es.eigenvalues().minCoeff(), -1e-9);
}

/// Rest at attitude q for n samples.
ImuSequence rest_at(const Quat & q, std::size_t n)
{
  return constant_seq(n, q.conjugate() * Vec3(0, 0, g0), Vec3::Zero());
}

}  // namespace

TEST(Propagate, RestIsStationary)
{
  const EskfConfig cfg;
  NavState s;
  s.p = Vec3(1, 2, 3);
  const auto [next, err] = propagate(s, cfg.initial_error(), sample(Vec3(0, 0, g0), Vec3::Zero()), 0.005, cfg);
  EXPECT_EQ(next.p, s.p);
  EXPECT_EQ(next.v, Vec3::Zero());
  EXPECT_TRUE(next.q.isApprox(Quat::Identity(), 0.0));
}

TEST(Propagate, PreviousVelocityConvention)
{
  const EskfConfig cfg;
  const auto [next, err] = propagate({}, cfg.initial_error(), sample(Vec3(1, 0, g0), Vec3::Zero()), 0.005, cfg);
  EXPECT_EQ(next.p, Vec3::Zero());
  EXPECT_DOUBLE_EQ(next.v.x(), 0.005);
  EXPECT_DOUBLE_EQ(next.v.y(), 0.0);
  EXPECT_NEAR(next.v.z(), 0.0, 1e-15);
  const auto [after, err2] = propagate(next, err, sample(Vec3(0, 0, g0), Vec3::Zero()), 0.005, cfg);
  EXPECT_DOUBLE_EQ(after.p.x(), 0.005 * 0.005);
}

TEST(Propagate, TraceGrows)
{
  const EskfConfig cfg;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  NavState s;
  ErrorState e = cfg.initial_error();
  for (int k = 0; k < 500; ++k) {
    const auto [ns, ne] = propagate(s, e, sample(Vec3(n(rng), n(rng), g0 + n(rng)), Vec3(n(rng), n(rng), n(rng))), 0.005, cfg);
    ASSERT_GT(ne.cov.trace(), e.cov.trace());
    expect_psd_symmetric(ne.cov);
    s = ns;
    e = ne;
  }
}

TEST(Propagate, DivergenceCarriesStep)
{
  const EskfConfig cfg;
  try {
    (void)propagate({}, cfg.initial_error(), sample(Vec3(1e308, 0, 0), Vec3::Zero()), 1e10, cfg, 42);
    FAIL() << "expected divergence";
  } catch (const DivergenceError & e) {
    EXPECT_EQ(e.step(), 42u);
  }
}

TEST(Zupt, ZeroVelocityLeavesStateUnchanged)
{
  EskfConfig cfg;
  NavState s;
  s.p = Vec3(0.1, -0.2, 0.3);
  s.q = quat_from_rpy(0.1, 0.2, 0.3);
  ErrorState e = cfg.initial_error();
  for (int k = 0; k < 20; ++k) {
    std::tie(s, e) = propagate(s, e, sample(s.q.conjugate() * Vec3(0, 0, g0), Vec3::Zero()), 0.005, cfg);
  }
  s.v = Vec3::Zero();
  const auto [next, ne] = zupt_update(s, e, cfg);
  EXPECT_EQ(next.p, s.p);
  EXPECT_EQ(next.v, s.v);
  EXPECT_EQ(next.q.coeffs(), s.q.coeffs());
  for (int i = 3; i < 6; ++i) {EXPECT_LT(ne.cov(i, i), e.cov(i, i));}
}

TEST(Zupt, ScalarAnalogue)
{
  // velocity x decoupled: prior variance 1, measurement variance 1, v = 0.4
  EskfConfig cfg;
  cfg.zupt_noise_std = 1.0;
  ErrorState e;
  e.cov(3, 3) = 1.0;
  NavState s;
  s.v = Vec3(0.4, 0, 0);
  const auto [next, ne] = zupt_update(s, e, cfg);
  EXPECT_DOUBLE_EQ(next.v.x(), 0.2);
  EXPECT_DOUBLE_EQ(ne.cov(3, 3), 0.5);
  EXPECT_EQ(next.p, Vec3::Zero());
}

TEST(Zupt, YawVarianceUnchangedWhenLevel)
{
  // level and still: yaw error has no path into velocity, so the update cannot see it
  EskfConfig cfg;
  NavState s;
  ErrorState e = cfg.initial_error();
  for (int k = 0; k < 200; ++k) {
    std::tie(s, e) = propagate(s, e, sample(Vec3(0, 0, g0), Vec3::Zero()), 0.005, cfg);
  }
  s.v = Vec3(0.01, -0.02, 0.0);
  const double yaw_before = e.cov(8, 8);
  const auto [next, ne] = zupt_update(s, e, cfg);
  EXPECT_EQ(ne.cov(8, 8), yaw_before);
  EXPECT_LT(ne.cov(3, 3), e.cov(3, 3));
  EXPECT_EQ((e.cov.block<1, 3>(8, 3).norm()), 0.0);
}

TEST(Zupt, NeverIncreasesDiagonalAndKeepsPsd)
{
  EskfConfig cfg;
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  NavState s;
  ErrorState e = cfg.initial_error();
  for (int k = 0; k < 2000; ++k) {
    std::tie(s, e) = propagate(s, e, sample(Vec3(n(rng), n(rng), g0 + n(rng)), Vec3(n(rng), n(rng), n(rng))), 0.005, cfg);
    if (k % 3 == 0) {
      const auto [ns, ne] = zupt_update(s, e, cfg);
      for (int i = 0; i < 9; ++i) {ASSERT_LE(ne.cov(i, i), e.cov(i, i) * (1 + 1e-12) + 1e-18) << i;}
      expect_psd_symmetric(ne.cov);
      s = ns;
      e = ne;
    }
  }
}

TEST(Zupt, SingularInnovationRejected)
{
  EskfConfig cfg;
  ErrorState e;
  e.cov(3, 3) = std::nan("");
  EXPECT_THROW((void)zupt_update({}, e, cfg), NumericalError);
}

TEST(RunIns, ContinuousZuptAtRest)
{
  const auto seq = rest_at(Quat::Identity(), 2000);
  const auto traj = run_ins(seq, Flags(seq.size(), 1), {}, {});
  for (const auto & st : traj.states) {ASSERT_LT(st.p.norm(), 1e-3);}
}

TEST(RunIns, RestAtAnyAttitudeDoesNotDrift)
{
  std::mt19937_64 rng(19);
  const EskfConfig cfg;
  for (int i = 0; i < 20; ++i) {
    const Quat q = random_rotation(rng);
    const auto seq = rest_at(q, 2001);
    const NavState init = init_from_rest(seq, cfg);
    const auto traj = run_ins(seq, Flags(seq.size(), 0), cfg, init);
    EXPECT_LT(traj.states.back().v.norm(), 1e-3);
  }
}

TEST(RunIns, LengthMismatchRejected)
{
  const auto seq = rest_at(Quat::Identity(), 10);
  EXPECT_THROW((void)run_ins(seq, Flags(9, 0), {}, {}), ContractError);
}

TEST(RunIns, Deterministic)
{
  auto prof = synth::GaitProfile::preset(synth::MotionKind::walk);
  prof.accel_noise_std = 0.02;
  prof.gyro_noise_std = 0.002;
  const auto r = synth::generate(prof, 3);
  const EskfConfig cfg;
  const auto init = init_from_rest(r.imu, cfg);
  const auto a = run_ins(r.imu, *r.gt.labels, cfg, init);
  const auto b = run_ins(r.imu, *r.gt.labels, cfg, init);
  std::ostringstream sa, sb;
  write_trajectory_csv(sa, a);
  write_trajectory_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(RunIns, ResetBoundedError)
{
  auto prof = synth::GaitProfile::preset(synth::MotionKind::walk);
  prof.duration_s = 30;
  prof.sampling = synth::Sampling::point;
  const auto r = synth::generate(prof, 1);
  const EskfConfig cfg;
  NavState init;
  init.q = r.attitudes[0];
  const auto& labels = *r.gt.labels;
  const auto traj = run_ins(r.imu, labels, cfg, init);
  double zupt_max = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    zupt_max = std::max(zupt_max, (traj.states[k].p - r.gt.positions[k]).head<2>().norm());
  }
  // open-loop from the true state at each lift-off to the next footfall
  double swing_max = 0.0;
  std::size_t swings = 0;
  for (std::size_t k = 1; k < labels.size(); ++k) {
    if (!(labels[k - 1] && !labels[k])) {continue;}
    NavState s;
    s.p = r.gt.positions[k - 1];
    s.q = r.attitudes[k - 1];
    ErrorState e = cfg.initial_error();
    for (std::size_t j = k; j < labels.size(); ++j) {
      std::tie(s, e) = propagate(s, e, r.imu[j], r.imu.dt(), cfg);
      swing_max = std::max(swing_max, (s.p - r.gt.positions[j]).head<2>().norm());
      if (labels[j]) {break;}
    }
    ++swings;
  }
  ASSERT_GT(swings, 10u);
  ASSERT_GT(swing_max, 0.0);
  EXPECT_LT(zupt_max, 10.0 * swing_max);
}

TEST(InitFromRest, Level)
{
  const auto s = init_from_rest(rest_at(Quat::Identity(), 100), {});
  EXPECT_LT(s.q.angularDistance(Quat::Identity()), 1e-12);
  EXPECT_EQ(s.p, Vec3::Zero());
  EXPECT_EQ(s.v, Vec3::Zero());
}

TEST(InitFromRest, PitchedThirtyDegrees)
{
  const double th = std::numbers::pi / 6;
  const auto seq = constant_seq(100, Vec3(-g0 * std::sin(th), 0, g0 * std::cos(th)), Vec3::Zero());
  const auto s = init_from_rest(seq, {});
  const Vec3 rpy = quat_to_rpy(s.q);
  EXPECT_NEAR(rpy.y(), th, 0.1 * std::numbers::pi / 180);
  EXPECT_NEAR(rpy.x(), 0.0, 1e-12);
  EXPECT_NEAR(rpy.z(), 0.0, 1e-12);
}

TEST(InitFromRest, ShakingRejected)
{
  const auto seq = constant_seq(100, Vec3(0, 0, 2 * g0), Vec3::Zero());
  try {
    (void)init_from_rest(seq, {});
    FAIL() << "expected rejection";
  } catch (const ValidationError & e) {
    EXPECT_NE(std::string(e.what()).find("not at rest"), std::string::npos);
  }
  EXPECT_THROW((void)init_from_rest(rest_at(Quat::Identity(), 50), {}), ContractError);
}

TEST(Config, RoundTripAndErrors)
{
  EskfConfig cfg;
  cfg.accel_noise_std = 0.05;
  cfg.initial_cov_diag[7] = 3e-6;
  cfg.increment_mode = IncrementMode::omega_matrix;
  std::ostringstream out;
  write_config(out, cfg);
  std::istringstream in("# filter\n" + out.str());
  const auto back = read_config(in);
  EXPECT_EQ(back.accel_noise_std, 0.05);
  EXPECT_EQ(back.initial_cov_diag, cfg.initial_cov_diag);
  EXPECT_EQ(back.gravity, cfg.gravity);
  EXPECT_EQ(back.increment_mode, IncrementMode::omega_matrix);

  std::istringstream bad("accel_noise_std = 0.1\nbias_states = 1\n");
  try {
    (void)read_config(bad);
    FAIL();
  } catch (const ParseError & e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream neg("zupt_noise_std = -1\n");
  EXPECT_THROW((void)read_config(neg), ContractError);
}

TEST(TrajectoryCsv, RoundTrip)
{
  Trajectory t;
  for (int k = 0; k < 10; ++k) {
    NavState s;
    s.p = Vec3(k, 0.1 * k, -0.3);
    s.v = Vec3(1.0 / 3, 0, k);
    s.q = quat_from_rpy(0.01 * k, 0.2, -0.1);
    t.times.push_back(k * 0.005);
    t.states.push_back(s);
  }
  std::ostringstream out;
  write_trajectory_csv(out, t);
  std::istringstream in(out.str());
  const auto back = read_trajectory_csv(in);
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_EQ(back.states[k].p, t.states[k].p);
    EXPECT_EQ(back.states[k].v, t.states[k].v);
    EXPECT_EQ(back.states[k].q.coeffs(), t.states[k].q.coeffs());
  }
}
