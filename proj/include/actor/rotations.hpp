#pragma once

// Rotation representations and conversions.
//
// Two layers live here. The scalar layer works on single rotations in
// double precision (Eigen) and is what the body model, data generators and
// tests use. The batched layer works on torch tensors of arbitrary leading
// shape, is differentiable, and is what the network and losses use.

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <torch/torch.h>

#include <random>
#include <string_view>

namespace actor::rot {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Continuous 6D representation: the first two columns of a rotation matrix,
// stacked as (c0.x, c0.y, c0.z, c1.x, c1.y, c1.z).
struct Rot6D {
  Eigen::Matrix<double, 6, 1> values = (Eigen::Matrix<double, 6, 1>() << 1, 0, 0, 0, 1, 0).finished();

  Rot6D() = default;
  explicit Rot6D(const Eigen::Matrix<double, 6, 1>& v) : values(v) {}
  Rot6D(const Vec3& first, const Vec3& second) { values << first, second; }

  Vec3 first() const { return values.head<3>(); }
  Vec3 second() const { return values.tail<3>(); }
};

struct RotMatrix {
  Mat3 m = Mat3::Identity();

  RotMatrix() = default;
  explicit RotMatrix(const Mat3& mat) : m(mat) {}

  static RotMatrix identity() { return RotMatrix{}; }
  RotMatrix operator*(const RotMatrix& other) const { return RotMatrix(m * other.m); }
  Vec3 operator*(const Vec3& v) const { return m * v; }
  RotMatrix transpose() const { return RotMatrix(m.transpose()); }
};

// Unit quaternion, canonical sign w >= 0.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double dot(const Quaternion& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
  double norm() const;
  Quaternion normalized() const;
  Quaternion canonical() const;
};

// Axis scaled by angle (radians).
struct AxisAngle {
  Vec3 v = Vec3::Zero();

  AxisAngle() = default;
  explicit AxisAngle(const Vec3& vec) : v(vec) {}
  AxisAngle(const Vec3& axis, double angle) : v(axis.normalized() * angle) {}

  double angle() const { return v.norm(); }
};

// Residual threshold below which Gram-Schmidt is considered degenerate.
inline constexpr double kDegenerateResidual = 1e-8;

RotMatrix sixd_to_matrix(const Rot6D& r);
Rot6D matrix_to_sixd(const RotMatrix& m);
RotMatrix axis_angle_to_matrix(const AxisAngle& a);
RotMatrix quaternion_to_matrix(const Quaternion& q);
Quaternion matrix_to_quaternion(const RotMatrix& m);
Quaternion axis_angle_to_quaternion(const AxisAngle& a);
AxisAngle quaternion_to_axis_angle(const Quaternion& q);
AxisAngle matrix_to_axis_angle(const RotMatrix& m);

// Angle of m1^T m2 in [0, pi].
double geodesic_distance(const RotMatrix& m1, const RotMatrix& m2);

// Max-abs deviation of R^T R from identity, and |det - 1|, both within tol.
bool is_rotation(const Mat3& m, double tol);

RotMatrix rotation_about_y(double angle);

// Uniform (Haar) rotation sample.
RotMatrix random_rotation(std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Batched, differentiable tensor versions. Trailing dims carry the rotation.

enum class RotationRep { AxisAngle, Quaternion, Matrix, SixD };

int rep_dim(RotationRep rep);
std::string_view rep_name(RotationRep rep);
RotationRep rep_from_name(std::string_view name);

// [..., 6] -> [..., 3, 3] via Gram-Schmidt.
torch::Tensor sixd_to_matrix(const torch::Tensor& r6);
// [..., 3, 3] -> [..., 6]
torch::Tensor matrix_to_sixd(const torch::Tensor& m);
// [..., 3] -> [..., 3, 3]; smooth through the zero rotation.
torch::Tensor axis_angle_to_matrix(const torch::Tensor& aa);
// [..., 4] (w, x, y, z) -> [..., 3, 3]; the input is normalized first.
torch::Tensor quaternion_to_matrix(const torch::Tensor& q);

// Encode rotation matrices [..., 3, 3] as [..., rep_dim]. Not differentiable
// for AxisAngle/Quaternion (used on data only).
torch::Tensor matrix_to_rep(const torch::Tensor& m, RotationRep rep);
// Decode [..., rep_dim] to [..., 3, 3]. Differentiable. The Matrix rep is
// passed through unprojected.
torch::Tensor rep_to_matrix(const torch::Tensor& r, RotationRep rep);

}  // namespace actor::rot
