#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "zupt/eval.hpp"
#include "zupt/quaternion.hpp"

using namespace zupt;
using namespace zupt::eval;

namespace
{

struct Pair
{
  Trajectory traj;
  GroundTruth gt;
};

/// Wandering 3D path sampled at 100 Hz, estimate identical to the reference.
Pair make_pair(std::size_t n = 500)
{
  Pair out;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = 0.01 * static_cast<double>(k);
    const Vec3 p(std::cos(t) * t, std::sin(1.3 * t), 0.1 * t * t);
    out.gt.times.push_back(t);
    out.gt.positions.push_back(p);
    NavState s;
    s.p = p;
    out.traj.times.push_back(t);
    out.traj.states.push_back(s);
  }
  return out;
}

void transform(Trajectory & traj, const Mat3 & r, const Vec3 & t)
{
  for (auto & s : traj.states) {s.p = r * s.p + t;}
}

}  // namespace

TEST(Armse, IdenticalIsZero)
{
  const auto d = make_pair();
  for (auto a : {Align::none, Align::translation, Align::yaw, Align::rigid}) {
    const auto r = armse(d.traj, d.gt, 3, a);
    EXPECT_LT(r.armse, 1e-12) << to_string(a);
    EXPECT_LT(r.end_error, 1e-12);
  }
}

TEST(Armse, ConstantOffset)
{
  auto d = make_pair();
  transform(d.traj, Mat3::Identity(), Vec3(0.3, 0.4, 0.0));
  const auto r = armse(d.traj, d.gt, 2, Align::none);
  EXPECT_NEAR(r.armse, 0.5, 1e-12);
  EXPECT_NEAR(r.end_error_raw, 0.5, 1e-12);
  EXPECT_LT(armse(d.traj, d.gt, 2, Align::translation).armse, 1e-12);
}

TEST(Armse, YawAlignmentInvariance)
{
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  for (int i = 0; i < 20; ++i) {
    auto d = make_pair();
    const Mat3 r = Eigen::AngleAxisd(u(rng), Vec3::UnitZ()).toRotationMatrix();
    transform(d.traj, r, Vec3(u(rng), u(rng), 0.2 * u(rng)));
    const auto rep = armse(d.traj, d.gt, 3, Align::yaw);
    EXPECT_LT(rep.armse, 1e-9);
    EXPECT_GT(rep.end_error_raw, 0.0);
  }
}

TEST(RigidAlign, RecoversTransform)
{
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Mat3 r = random_rotation(rng).toRotationMatrix();
    const Vec3 t(n(rng), n(rng), n(rng));
    std::vector<Vec3> src(20);
    std::vector<Vec3> dst(20);
    for (std::size_t k = 0; k < src.size(); ++k) {
      src[k] = Vec3(n(rng), n(rng), n(rng));
      dst[k] = r * src[k] + t;
    }
    const auto tf = rigid_align(src, dst);
    EXPECT_LT((tf.rotation - r).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((tf.translation - t).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(tf.rotation.determinant(), 1.0, 1e-12);

    for (auto & d : dst) {d = 2.5 * d;}
    const auto sim = rigid_align(src, dst, true);
    EXPECT_NEAR(sim.scale, 2.5, 1e-9);
  }
}

TEST(RigidAlign, ReflectionNotReturned)
{
  std::vector<Vec3> src{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}};
  std::vector<Vec3> dst;
  for (const auto & p : src) {dst.emplace_back(-p.x(), p.y(), p.z());}
  const auto tf = rigid_align(src, dst);
  EXPECT_NEAR(tf.rotation.determinant(), 1.0, 1e-12);
}

TEST(RigidAlign, ResidualNoWorseThanIdentity)
{
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<Vec3> src(15);
    std::vector<Vec3> dst(15);
    for (std::size_t k = 0; k < src.size(); ++k) {
      src[k] = Vec3(n(rng), n(rng), n(rng));
      dst[k] = Vec3(n(rng), n(rng), n(rng));
    }
    const auto tf = rigid_align(src, dst);
    double aligned = 0.0;
    double raw = 0.0;
    for (std::size_t k = 0; k < src.size(); ++k) {
      aligned += (tf.apply(src[k]) - dst[k]).squaredNorm();
      raw += (src[k] - dst[k]).squaredNorm();
    }
    EXPECT_LE(aligned, raw + 1e-12);
  }
}

TEST(RigidAlign, DegenerateRejected)
{
  std::vector<Vec3> line{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}};
  std::vector<Vec3> ok{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  EXPECT_THROW((void)rigid_align(line, ok), NumericalError);
  EXPECT_THROW((void)rigid_align(ok, line), NumericalError);
  EXPECT_THROW((void)rigid_align(std::span(ok).first(2), std::span(ok).first(2)), ContractError);
}

TEST(Armse, OverlapRequired)
{
  auto d = make_pair(100);
  d.traj.times.resize(80);
  d.traj.states.resize(80);
  EXPECT_THROW((void)armse(d.traj, d.gt, 2, Align::none), ValidationError);
  d = make_pair(100);
  d.traj.times.resize(95);
  d.traj.states.resize(95);
  EXPECT_NO_THROW((void)armse(d.traj, d.gt, 2, Align::none));
}

TEST(Armse, InterpolatesGroundTruth)
{
  auto d = make_pair(101);
  GroundTruth coarse;
  for (std::size_t k = 0; k < 101; k += 10) {
    coarse.times.push_back(d.gt.times[k]);
    coarse.positions.push_back(Vec3(d.gt.times[k], 0, 0));
  }
  for (std::size_t k = 0; k < d.traj.size(); ++k) {d.traj.states[k].p = Vec3(d.traj.times[k], 0, 0);}
  EXPECT_LT(armse(d.traj, coarse, 3, Align::none).armse, 1e-12);
}

TEST(Markers, ErrorsAndSkips)
{
  const auto d = make_pair();
  std::vector<Marker> markers{
    {1.0, d.gt.positions[100]},
    {2.0, d.gt.positions[200] + Vec3(0, 1, 0)},
    {-1.0, Vec3::Zero()},
    {100.0, Vec3::Zero()},
  };
  const auto r = marker_errors(d.traj, markers);
  ASSERT_EQ(r.errors.size(), 2u);
  EXPECT_NEAR(r.errors[0].error_m, 0.0, 1e-12);
  EXPECT_NEAR(r.errors[1].error_m, 1.0, 1e-12);
  EXPECT_EQ(r.skipped, (std::vector<std::size_t>{2, 3}));
}
