#include "actor/body.hpp"
#include "actor/error.hpp"

#include "support.hpp"

#include <doctest.h>

#include <numbers>

using namespace actor;
using body::FramePose;
using body::Skeleton;
using rot::Mat3;
using rot::Vec3;
using std::numbers::pi;

namespace {

FramePose identity_pose(int joints) {
  FramePose f;
  f.rotations.assign(joints, rot::Rot6D());
  return f;
}

FramePose random_pose(std::mt19937_64& rng, int joints) {
  FramePose f;
  std::normal_distribution<double> n(0.0, 1.0);
  for (int j = 0; j < joints; ++j) f.rotations.push_back(rot::matrix_to_sixd(rot::random_rotation(rng)));
  f.displacement = Vec3(n(rng), n(rng), n(rng));
  return f;
}

// World transform of joint j by walking the chain from the root outward.
std::pair<Mat3, Vec3> chain_transform(const Skeleton& s, const FramePose& pose, int j) {
  std::vector<int> path;
  for (int k = j; k >= 0; k = s.parents[k]) path.insert(path.begin(), k);
  Mat3 R = Mat3::Identity();
  Vec3 p = Vec3::Zero();
  for (int k : path) {
    if (s.parents[k] >= 0) p = p + R * s.rest_offsets[k];
    R = R * rot::sixd_to_matrix(pose.rotations[k]).m;
  }
  return {R, p};
}

}  // namespace

TEST_CASE("standard skeleton layout") {
  auto s = Skeleton::standard();
  CHECK_NOTHROW(s.validate());
  CHECK(s.joint_count() == 24);
  CHECK(s.surface_count() == 192);
  CHECK(s.parents[0] == -1);
  auto rest = body::forward_kinematics(s, identity_pose(24), false);
  double top = -1e9, bottom = 1e9;
  for (const auto& p : rest) {
    top = std::max(top, p.y());
    bottom = std::min(bottom, p.y());
  }
  CHECK(top - bottom > 1.4);
  CHECK(top - bottom < 2.0);
}

TEST_CASE("invalid skeletons are rejected") {
  auto s = Skeleton::chain(3);
  s.parents[1] = 2;
  CHECK_THROWS_AS(s.validate(), Error);
  auto t = Skeleton::chain(3);
  t.rest_offsets.pop_back();
  CHECK_THROWS_AS(t.validate(), Error);
}

TEST_CASE("identity pose stacks rest offsets") {
  auto s = Skeleton::chain(4, 0.5);
  auto pos = body::forward_kinematics(s, identity_pose(4), false);
  for (int j = 0; j < 4; ++j) CHECK((pos[j] - Vec3(0, 0.5 * j, 0)).norm() < 1e-12);
}

TEST_CASE("two-bone chain with the parent turned a quarter about z") {
  auto s = Skeleton::chain(3);
  auto pose = identity_pose(3);
  pose.rotations[1] = rot::matrix_to_sixd(rot::axis_angle_to_matrix(rot::AxisAngle(Vec3(0, 0, pi / 2))));
  pose.displacement = Vec3(0.5, -2, 3);
  auto pos = body::forward_kinematics(s, pose, true);
  CHECK((pos[2] - (Vec3(-1, 1, 0) + pose.displacement)).norm() < 1e-12);
}

TEST_CASE("half turn of the root negates x and z") {
  auto s = Skeleton::standard();
  auto rest = body::forward_kinematics(s, identity_pose(24), false);
  auto pose = identity_pose(24);
  pose.rotations[0] = rot::matrix_to_sixd(rot::rotation_about_y(pi));
  auto turned = body::forward_kinematics(s, pose, false);
  for (int j = 0; j < 24; ++j) CHECK((turned[j] - Vec3(-rest[j].x(), rest[j].y(), -rest[j].z())).norm() < 1e-12);
}

TEST_CASE("surface points match an explicit per-point transform") {
  auto s = Skeleton::standard();
  std::mt19937_64 rng(1);
  auto rest_pts = body::surface_points(s, identity_pose(24));
  auto rest_joints = body::forward_kinematics(s, identity_pose(24), false);
  int k = 0;
  for (int j = 0; j < 24; ++j)
    for (const auto& off : s.surface_offsets[j]) CHECK((rest_pts[k++] - (rest_joints[j] + off)).norm() < 1e-12);

  for (int trial = 0; trial < 20; ++trial) {
    auto pose = random_pose(rng, 24);
    auto pts = body::surface_points(s, pose);
    double worst = 0.0;
    k = 0;
    for (int j = 0; j < 24; ++j) {
      auto [R, p] = chain_transform(s, pose, j);
      for (const auto& off : s.surface_offsets[j]) worst = std::max(worst, (pts[k++] - (p + R * off)).norm());
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("bone lengths and rigid attachments are pose invariant") {
  auto s = Skeleton::standard();
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    auto pose = random_pose(rng, 24);
    auto pos = body::forward_kinematics(s, pose, true);
    for (int j = 1; j < 24; ++j)
      CHECK(std::abs((pos[j] - pos[s.parents[j]]).norm() - s.rest_offsets[j].norm()) < 1e-6);
    if (trial % 100 == 0) {
      auto pts = body::surface_points(s, pose);
      auto d = (pts[8 * 5] - pts[8 * 5 + 7]).norm();
      auto d0 = (s.surface_offsets[5][0] - s.surface_offsets[5][7]).norm();
      CHECK(std::abs(d - d0) < 1e-9);
    }
  }
}

TEST_CASE("forward kinematics is equivariant to a global rotation") {
  auto s = Skeleton::standard();
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    auto pose = random_pose(rng, 24);
    auto G = rot::random_rotation(rng);
    auto moved = pose;
    moved.rotations[0] = rot::matrix_to_sixd(G * rot::sixd_to_matrix(pose.rotations[0]));
    moved.displacement = G * pose.displacement;
    auto a = body::forward_kinematics(s, pose, true);
    auto b = body::forward_kinematics(s, moved, true);
    double worst = 0.0;
    for (int j = 0; j < 24; ++j) worst = std::max(worst, (b[j] - G * a[j]).norm());
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("canonicalize frontal") {
  std::mt19937_64 rng(4);
  auto m = testing::random_motion(rng, 6, 24);
  // Make frame 0 face +z, then check a quarter turn about y is undone.
  auto frontal = body::canonicalize_frontal(m);
  auto f0 = rot::sixd_to_matrix(frontal.frames[0].rotations[0]) * Vec3(0, 0, 1);
  CHECK(std::abs(f0.x()) < 1e-9);
  CHECK(f0.z() > 0);

  auto again = body::canonicalize_frontal(frontal);
  for (int t = 0; t < 6; ++t) {
    CHECK(rot::geodesic_distance(rot::sixd_to_matrix(again.frames[t].rotations[0]),
                                 rot::sixd_to_matrix(frontal.frames[t].rotations[0])) < 1e-6);
    CHECK((again.frames[t].displacement - frontal.frames[t].displacement).norm() < 1e-6);
  }

  auto G = rot::rotation_about_y(pi / 2);
  auto turned = frontal;
  for (auto& f : turned.frames) {
    f.rotations[0] = rot::matrix_to_sixd(G * rot::sixd_to_matrix(f.rotations[0]));
    f.displacement = G * f.displacement;
  }
  auto back = body::canonicalize_frontal(turned);
  for (int t = 0; t < 6; ++t) {
    CHECK(rot::geodesic_distance(rot::sixd_to_matrix(back.frames[t].rotations[0]),
                                 rot::sixd_to_matrix(frontal.frames[t].rotations[0])) < 1e-6);
    CHECK((back.frames[t].displacement - frontal.frames[t].displacement).norm() < 1e-6);
    for (int j = 1; j < 24; ++j) CHECK((back.frames[t].rotations[j].values - m.frames[t].rotations[j].values).norm() == 0.0);
  }
}

TEST_CASE("canonicalize leaves a vertical facing direction alone") {
  std::mt19937_64 rng(5);
  auto m = testing::random_motion(rng, 3, 2);
  m.frames[0].rotations[0] = rot::matrix_to_sixd(rot::axis_angle_to_matrix(rot::AxisAngle(Vec3(pi / 2, 0, 0))));
  auto c = body::canonicalize_frontal(m);
  for (int t = 0; t < 3; ++t) CHECK((c.frames[t].rotations[0].values - m.frames[t].rotations[0].values).norm() == 0.0);
}

TEST_CASE("root centering") {
  std::vector<body::PointCloud> cloud{{Vec3(1, 2, 3), Vec3(1, 3, 3)}};
  auto c = body::root_center(cloud);
  CHECK((c[0][0]).norm() == 0.0);
  CHECK((c[0][1] - Vec3(0, 1, 0)).norm() == 0.0);
  auto same = body::root_center(c);
  CHECK((same[0][1] - c[0][1]).norm() == 0.0);

  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<body::PointCloud> pts(5, body::PointCloud(7));
  std::vector<Vec3> roots(5);
  for (int t = 0; t < 5; ++t) {
    roots[t] = Vec3(n(rng), n(rng), n(rng));
    for (auto& p : pts[t]) p = Vec3(n(rng), n(rng), n(rng));
  }
  auto out = body::root_center(pts, roots);
  for (int t = 0; t < 5; ++t)
    for (int i = 0; i < 7; ++i)
      for (int k = 0; k < 3; ++k) CHECK(out[t][i][k] == pts[t][i][k] - roots[t][k]);
  CHECK_THROWS_AS(body::root_center(pts, std::vector<Vec3>(2)), Error);
}

TEST_CASE("tensor body model matches scalar kinematics") {
  auto s = Skeleton::standard();
  body::RigidSkeletonBody model(s);
  std::mt19937_64 rng(7);
  auto m = testing::random_motion(rng, 4, 24);
  auto mats = rot::sixd_to_matrix(body::rotations_tensor(m));
  auto joints = model.joints(mats, body::displacement_tensor(m));
  auto surf = model.surface(mats);
  for (int t = 0; t < 4; ++t) {
    auto pos = body::forward_kinematics(s, m.frames[t], true);
    auto pts = body::surface_points(s, m.frames[t]);
    for (int j = 0; j < 24; ++j)
      for (int k = 0; k < 3; ++k) CHECK(joints[t][j][k].item<double>() == doctest::Approx(pos[j][k]).epsilon(1e-9));
    for (int i = 0; i < 192; i += 17)
      for (int k = 0; k < 3; ++k) CHECK(surf[t][i][k].item<double>() == doctest::Approx(pts[i][k]).epsilon(1e-9));
  }
}

TEST_CASE("body model gradients match finite differences") {
  body::RigidSkeletonBody model(Skeleton::chain(4, 0.7, 0.1));
  std::mt19937_64 rng(8);
  auto m = testing::random_motion(rng, 2, 4);
  auto six = body::rotations_tensor(m).clone().requires_grad_(true);
  auto weights = torch::randn({2, 32, 3}, torch::kDouble);
  auto f = [&](const torch::Tensor& x) {
    auto mats = rot::sixd_to_matrix(x);
    return (model.surface(mats) * weights).sum() + model.joints(mats, {}).pow(2).sum();
  };
  f(six).backward();
  auto grad = six.grad();
  torch::NoGradGuard ng;
  auto flat = six.detach().clone().view(-1);
  double worst = 0.0;
  const double h = 1e-6;
  for (int64_t i = 0; i < flat.numel(); ++i) {
    auto p = flat.clone(), q = flat.clone();
    p[i] += h;
    q[i] -= h;
    double fd = (f(p.view_as(six)).item<double>() - f(q.view_as(six)).item<double>()) / (2 * h);
    double an = grad.view(-1)[i].item<double>();
    worst = std::max(worst, std::abs(fd - an) / std::max(1e-3, std::abs(fd) + std::abs(an)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("skeleton json round trip") {
  auto s = Skeleton::standard();
  auto back = Skeleton::from_json_text(s.to_json_text());
  CHECK(back.names == s.names);
  CHECK(back.parents == s.parents);
  for (int j = 0; j < 24; ++j) CHECK(back.rest_offsets[j] == s.rest_offsets[j]);
  CHECK_THROWS_AS(Skeleton::from_json_text("{not json"), Error);
}

TEST_CASE("motion validation") {
  std::mt19937_64 rng(9);
  auto m = testing::random_motion(rng, 3, 24);
  CHECK_NOTHROW(body::validate_motion(m, 24));
  CHECK_THROWS_AS(body::validate_motion(m, 23), Error);
  body::Motion empty;
  CHECK_THROWS_AS(body::validate_motion(empty, 24), Error);
}
