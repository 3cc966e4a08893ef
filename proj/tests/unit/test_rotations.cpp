#include "actor/error.hpp"
#include "actor/rotations.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace actor::rot;
using std::numbers::pi;

namespace {

Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix(); }

double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("6D to matrix fixed points") {
  CHECK(max_abs(sixd_to_matrix(Rot6D(Vec3(1, 0, 0), Vec3(0, 1, 0))).m - Mat3::Identity()) < 1e-12);
  CHECK(max_abs(sixd_to_matrix(Rot6D(Vec3(2, 0, 0), Vec3(0, 3, 0))).m - Mat3::Identity()) < 1e-12);
}

TEST_CASE("matrix to 6D reads off the first two columns") {
  auto id = matrix_to_sixd(RotMatrix::identity());
  Eigen::Matrix<double, 6, 1> expect;
  expect << 1, 0, 0, 0, 1, 0;
  CHECK((id.values - expect).norm() < 1e-12);
  auto z90 = matrix_to_sixd(RotMatrix(rot_z(pi / 2)));
  expect << 0, 1, 0, -1, 0, 0;
  CHECK((z90.values - expect).norm() < 1e-12);
}

TEST_CASE("degenerate 6D input is rejected") {
  CHECK_THROWS_AS(sixd_to_matrix(Rot6D(Vec3(1, 0, 0), Vec3(2, 0, 0))), actor::Error);
  CHECK_THROWS_AS(sixd_to_matrix(Rot6D(Vec3(0, 0, 0), Vec3(0, 1, 0))), actor::Error);
}

TEST_CASE("6D scale invariance") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> s(0.1, 10.0);
  for (int i = 0; i < 200; ++i) {
    auto r = matrix_to_sixd(random_rotation(rng));
    Rot6D scaled(r.first() * s(rng), r.second() * s(rng));
    CHECK(max_abs(sixd_to_matrix(scaled).m - sixd_to_matrix(r).m) < 1e-8);
  }
}

TEST_CASE("axis-angle closed cases") {
  CHECK(max_abs(axis_angle_to_matrix(AxisAngle(Vec3::Zero())).m - Mat3::Identity()) < 1e-15);
  Vec3 y = axis_angle_to_matrix(AxisAngle(Vec3(0, 0, pi / 2))) * Vec3(1, 0, 0);
  CHECK((y - Vec3(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("quaternion closed cases") {
  CHECK(max_abs(quaternion_to_matrix(Quaternion{1, 0, 0, 0}).m - Mat3::Identity()) < 1e-15);
  Quaternion q{std::cos(pi / 4), 0, 0, std::sin(pi / 4)};
  CHECK(max_abs(quaternion_to_matrix(q).m - rot_z(pi / 2)) < 1e-12);
}

TEST_CASE("axis-angle agrees with the quaternion path and with Eigen") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.5);
  for (int i = 0; i < 1000; ++i) {
    AxisAngle a(Vec3(n(rng), n(rng), n(rng)));
    Mat3 direct = axis_angle_to_matrix(a).m;
    Mat3 via_q = quaternion_to_matrix(axis_angle_to_quaternion(a)).m;
    CHECK(max_abs(direct - via_q) < 1e-8);
    Mat3 eigen = Eigen::AngleAxisd(a.angle(), a.v.normalized()).toRotationMatrix();
    CHECK(max_abs(direct - eigen) < 1e-10);
  }
}

TEST_CASE("geodesic distance") {
  CHECK(geodesic_distance(RotMatrix::identity(), RotMatrix::identity()) < 1e-12);
  CHECK(geodesic_distance(RotMatrix::identity(), RotMatrix(rot_z(pi / 2))) == doctest::Approx(pi / 2).epsilon(1e-12));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    auto a = random_rotation(rng), b = random_rotation(rng);
    Eigen::Quaterniond qa(a.m), qb(b.m);
    double oracle = 2.0 * std::acos(std::min(1.0, std::abs(qa.dot(qb))));
    CHECK(std::abs(geodesic_distance(a, b) - oracle) < 1e-7);
  }
}

TEST_CASE("round trips through every representation") {
  std::mt19937_64 rng(4);
  double worst = 0.0;
  bool orthonormal = true;
  for (int i = 0; i < 10000; ++i) {
    auto m = random_rotation(rng);
    auto six = sixd_to_matrix(matrix_to_sixd(m));
    auto quat = quaternion_to_matrix(matrix_to_quaternion(m));
    auto aa = axis_angle_to_matrix(matrix_to_axis_angle(m));
    auto aq = axis_angle_to_matrix(quaternion_to_axis_angle(matrix_to_quaternion(m)));
    for (const auto& r : {six, quat, aa, aq}) {
      worst = std::max(worst, geodesic_distance(r, m));
      orthonormal = orthonormal && is_rotation(r.m, 1e-6);
    }
  }
  CHECK(worst < 1e-6);
  CHECK(orthonormal);
}

TEST_CASE("quaternion sign is canonical") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) CHECK(matrix_to_quaternion(random_rotation(rng)).w >= 0.0);
}

TEST_CASE("random rotations are uniform enough") {
  // For Haar measure the trace has mean 0 and E[tr^2] = 1.
  std::mt19937_64 rng(6);
  double s = 0, s2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double tr = random_rotation(rng).m.trace();
    s += tr;
    s2 += tr * tr;
  }
  CHECK(std::abs(s / n) < 0.05);
  CHECK(std::abs(s2 / n - 1.0) < 0.05);
}

TEST_CASE("6D is continuous where axis-angle jumps") {
  // Rotation about a fixed axis swept through a full turn.
  const Vec3 axis = Vec3(1, 2, 3).normalized();
  auto sweep = [&](int steps) {
    double max6 = 0, maxaa = 0;
    Rot6D prev6 = matrix_to_sixd(RotMatrix::identity());
    AxisAngle prevaa;
    for (int k = 1; k <= steps; ++k) {
      RotMatrix m(Eigen::AngleAxisd(2 * pi * k / steps, axis).toRotationMatrix());
      auto s = matrix_to_sixd(m);
      auto a = matrix_to_axis_angle(m);
      max6 = std::max(max6, (s.values - prev6.values).norm());
      maxaa = std::max(maxaa, (a.v - prevaa.v).norm());
      prev6 = s;
      prevaa = a;
    }
    return std::pair{max6, maxaa};
  };
  auto [c6, caa] = sweep(1000);
  auto [f6, faa] = sweep(8000);
  CHECK(f6 < c6 * 0.2);
  CHECK(faa > 6.0);  // the canonical vector flips from ~pi*n to ~-pi*n
  CHECK(caa > 6.0);
}

TEST_CASE("tensor conversions match the scalar layer") {
  std::mt19937_64 rng(7);
  std::vector<double> buf;
  std::vector<Mat3> mats;
  for (int i = 0; i < 50; ++i) {
    mats.push_back(random_rotation(rng).m);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) buf.push_back(mats.back()(r, c));
  }
  auto t = torch::tensor(buf, torch::kDouble).reshape({50, 3, 3});
  for (auto rep : {RotationRep::AxisAngle, RotationRep::Quaternion, RotationRep::Matrix, RotationRep::SixD}) {
    auto back = rep_to_matrix(matrix_to_rep(t, rep), rep);
    CHECK((back - t).abs().max().item<double>() < 1e-9);
    CHECK(matrix_to_rep(t, rep).size(-1) == rep_dim(rep));
    CHECK(rep_from_name(rep_name(rep)) == rep);
  }
  auto six = matrix_to_sixd(t);
  for (int i = 0; i < 50; ++i) {
    auto s = matrix_to_sixd(RotMatrix(mats[i]));
    for (int k = 0; k < 6; ++k) CHECK(six[i][k].item<double>() == doctest::Approx(s.values[k]).epsilon(1e-12));
  }
}

TEST_CASE("tensor axis-angle is smooth at zero") {
  auto aa = torch::zeros({3}, torch::TensorOptions().dtype(torch::kDouble).requires_grad(true));
  auto m = axis_angle_to_matrix(aa);
  m.sum().backward();
  CHECK(torch::isfinite(aa.grad()).all().item<bool>());
  CHECK((m - torch::eye(3, torch::kDouble)).abs().max().item<double>() < 1e-15);
}
