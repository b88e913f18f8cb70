#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "surfelmesh/denoise.hpp"

using namespace sm;

namespace {

Surfel at(const Vec3d& p, const Vec3d& n = Vec3d::UnitZ(), double r = 0.01) {
  Surfel s;
  s.p = s.p_bar = p;
  s.n = n.normalized();
  s.r = r;
  return s;
}

void link(SurfelCloud& c, SurfelId a, SurfelId b) {
  c[a].neighbors[c[a].neighbor_count++] = b;
}

}  // namespace

TEST(Neighbors, FourClosestKept) {
  const double r = 0.01;
  SurfelCloud cloud;
  SurfelId s = cloud.add(at(Vec3d::Zero(), Vec3d::UnitZ(), r));
  std::vector<SurfelId> cand;
  for (int k = 1; k <= 5; ++k) cand.push_back(cloud.add(at(Vec3d(k * r / 10, 0, 0), Vec3d::UnitZ(), r)));
  // One candidate through the existing list, four through the index image.
  link(cloud, s, cand[4]);
  AssociationResult a;
  a.width = a.height = 3;
  a.class_of_surfel.assign(cloud.capacity(), AssocClass::kUnobserved);
  a.class_of_surfel[s] = AssocClass::kSupported;
  a.projected_pixel.assign(cloud.capacity(), -1);
  a.projected_pixel[s] = 4;
  a.index_image = Image<SurfelId>(3, 3, kNoSurfel);
  a.index_image(0, 1) = cand[2];
  a.index_image(2, 1) = cand[0];
  a.index_image(1, 0) = cand[3];
  a.index_image(1, 2) = cand[1];
  update_neighbors(cloud, a, DenoiseConfig{});
  ASSERT_EQ(cloud[s].neighbor_count, 4);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(cloud[s].neighbors[k], cand[k]);
}

TEST(Neighbors, FarCandidateRejectedAndIsolatedEmpty) {
  const double r = 0.01;
  SurfelCloud cloud;
  SurfelId s = cloud.add(at(Vec3d::Zero(), Vec3d::UnitZ(), r));
  SurfelId far = cloud.add(at(Vec3d(2.5 * r, 0, 0), Vec3d::UnitZ(), r));
  AssociationResult a;
  a.width = a.height = 3;
  a.class_of_surfel.assign(2, AssocClass::kSupported);
  a.projected_pixel = {4, -1};
  a.index_image = Image<SurfelId>(3, 3, kNoSurfel);
  a.index_image(2, 1) = far;
  update_neighbors(cloud, a, DenoiseConfig{});
  EXPECT_EQ(cloud[s].neighbor_count, 0);
}

TEST(Neighbors, StaleEntriesArePruned) {
  SurfelCloud cloud;
  SurfelId s = cloud.add(at(Vec3d::Zero()));
  SurfelId n = cloud.add(at(Vec3d(0.005, 0, 0)));
  link(cloud, s, n);
  cloud.remove(n);
  // Slot reused far away.
  SurfelId reused = cloud.add(at(Vec3d(1, 0, 0)));
  ASSERT_EQ(reused, n);
  AssociationResult a;
  update_neighbors(cloud, a, DenoiseConfig{});
  EXPECT_EQ(cloud[s].neighbor_count, 0);
}

TEST(Cost, Values) {
  DenoiseConfig c;
  SurfelCloud cloud;
  for (int i = 0; i < 3; ++i) cloud.add(at(Vec3d(0.01 * i, 0, 1)));
  link(cloud, 0, 1);
  link(cloud, 1, 0);
  link(cloud, 1, 2);
  EXPECT_EQ(cost(cloud, c), 0.0);
  // Lone displaced surfel: C = d^2.
  SurfelCloud one;
  SurfelId id = one.add(at(Vec3d(0, 0, 1)));
  one[id].p_bar.y() += 0.3;
  EXPECT_NEAR(cost(one, c), 0.09, 1e-15);
  // Offsets orthogonal to the normals cost nothing regardless of spacing.
  cloud[2].p_bar.x() += 0.5;
  EXPECT_NEAR(cost(cloud, c), 0.25, 1e-15);
}

TEST(Gradient, ZeroOnPlaneAndParallelMatchesSerial) {
  DenoiseConfig c;
  SurfelCloud cloud;
  for (int i = 0; i < 9; ++i) cloud.add(at(Vec3d(0.01 * (i % 3), 0.01 * (i / 3), 1)));
  for (int i = 0; i < 9; ++i) link(cloud, i, (i + 1) % 9), link(cloud, i, (i + 3) % 9);
  for (const Vec3d& g : cost_gradient(cloud, c)) EXPECT_EQ(g, Vec3d::Zero());
  std::mt19937 rng(2);
  for (SurfelId i = 0; i < 9; ++i) cloud[i].p_bar += Vec3d(rng() % 7, rng() % 5, rng() % 3) * 1e-3;
  auto a = cost_gradient(cloud, c), b = serial::cost_gradient(cloud, c);
  for (SurfelId i = 0; i < 9; ++i) EXPECT_NEAR((a[i] - b[i]).norm(), 0, 1e-15);
}

TEST(Denoise, ChainMatchesDirectMinimizer) {
  DenoiseConfig c;
  const double h = 0.004;
  SurfelCloud cloud;
  for (int i = 0; i < 3; ++i) cloud.add(at(Vec3d(0.01 * i, 0, i == 1 ? h : 0)));
  link(cloud, 0, 1);
  link(cloud, 1, 0);
  link(cloud, 1, 2);
  link(cloud, 2, 1);
  // C is quadratic in the 9 coordinates: solve grad C = 0 from its
  // finite-difference Hessian.
  Eigen::Matrix<double, 9, 9> H;
  Eigen::Matrix<double, 9, 1> g0;
  auto grad = [&](SurfelCloud& cc) {
    auto g = cost_gradient(cc, c);
    Eigen::Matrix<double, 9, 1> v;
    for (int i = 0; i < 3; ++i) v.segment<3>(3 * i) = g[i];
    return v;
  };
  SurfelCloud base = cloud;
  g0 = grad(base);
  for (int k = 0; k < 9; ++k) {
    SurfelCloud cc = base;
    cc[k / 3].p_bar[k % 3] += 1.0;
    H.col(k) = grad(cc) - g0;
  }
  Eigen::Matrix<double, 9, 1> sol = -H.completeOrthogonalDecomposition().solve(g0);
  for (int it = 0; it < 5000; ++it) denoise_iteration(cloud, 0, c);
  for (int i = 0; i < 3; ++i) {
    Vec3d expect = base[i].p_bar + Vec3d(sol.segment<3>(3 * i));
    EXPECT_NEAR(cloud[i].p_bar.z(), expect.z(), 1e-10) << i;
  }
  EXPECT_LT(cloud[1].p_bar.z(), h);
  EXPECT_GT(cloud[1].p_bar.z(), 0.0);
}

TEST(Denoise, ActiveWindowGatesUpdates) {
  DenoiseConfig c;
  SurfelCloud cloud;
  SurfelId id = cloud.add(at(Vec3d(0, 0, 1)));
  cloud[id].p_bar.z() += 0.01;
  cloud[id].t = 0;
  Vec3d before = cloud[id].p_bar;
  EXPECT_EQ(denoise_iteration(cloud, c.active_window + 1, c), 0u);
  EXPECT_EQ(cloud[id].p_bar, before);
  EXPECT_EQ(denoise_iteration(cloud, c.active_window, c), 1u);
  EXPECT_LT(cloud[id].p_bar.z(), before.z());
}

TEST(Deformation, EqualOffsetsAreRigid) {
  DenoiseConfig c;
  SurfelCloud cloud;
  for (int i = 0; i < 20; ++i) cloud.add(at(Vec3d(0.013 * i, 0.007 * (i % 4), 1.1)));
  for (int i = 0; i < 20; ++i) link(cloud, i, (i + 1) % 20), link(cloud, i, (i + 7) % 20);
  std::map<SurfelId, Vec3d> off;
  const Vec3d v(0.1, -0.03, 0.007);
  for (SurfelId i = 0; i < 20; ++i) off[i] = v;
  SurfelCloud before = cloud;
  apply_deformation(cloud, off, c);
  for (SurfelId i = 0; i < 20; ++i) {
    EXPECT_EQ(cloud[i].p, Vec3d(before[i].p + v));
    EXPECT_EQ(cloud[i].p_bar, Vec3d(before[i].p_bar + v));
  }
}

TEST(Deformation, ZeroOffsetsChangeNothing) {
  DenoiseConfig c;
  SurfelCloud cloud;
  cloud.add(at(Vec3d(0, 0, 1)));
  cloud.add(at(Vec3d(0.01, 0, 1)));
  link(cloud, 0, 1);
  SurfelCloud before = cloud;
  EXPECT_TRUE(apply_deformation(cloud, {{0, Vec3d::Zero()}}, c).empty());
  EXPECT_EQ(cloud[0].p, before[0].p);
}

TEST(Deformation, TwoSurfelSimulation) {
  DenoiseConfig c;
  SurfelCloud cloud;
  cloud.add(at(Vec3d(0, 0, 1)));
  cloud.add(at(Vec3d(0.01, 0, 1)));
  link(cloud, 0, 1);
  link(cloud, 1, 0);
  const Vec3d v(0.02, 0, 0);
  // Reference: each surfel takes the mean of its neighbor set every step.
  Vec3d a = v, b = Vec3d::Zero();
  for (int i = 0; i < c.deform_smooth_iters; ++i) std::swap(a, b);
  apply_deformation(cloud, {{0, v}, {1, Vec3d::Zero()}}, c);
  EXPECT_EQ(cloud[0].delta_p, a);
  EXPECT_EQ(cloud[1].delta_p, b);
}

TEST(Deformation, UnknownIdThrows) {
  SurfelCloud cloud;
  cloud.add(at(Vec3d::Zero()));
  EXPECT_THROW(apply_deformation(cloud, {{5, Vec3d::Zero()}}, DenoiseConfig{}), std::invalid_argument);
}
