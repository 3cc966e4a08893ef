#include "actor/rotations.hpp"

#include "actor/error.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace actor::rot {

double Quaternion::norm() const { return std::sqrt(dot(*this)); }

Quaternion Quaternion::normalized() const {
  const double n = norm();
  return {w / n, x / n, y / n, z / n};
}

Quaternion Quaternion::canonical() const {
  if (w < 0.0) return {-w, -x, -y, -z};
  return *this;
}

RotMatrix sixd_to_matrix(const Rot6D& r) {
  if (!r.values.allFinite()) throw Error(ErrorCode::DegenerateInput, "non-finite 6D rotation");
  const Vec3 a1 = r.first();
  const Vec3 a2 = r.second();
  const double n1 = a1.norm();
  if (n1 < kDegenerateResidual) throw Error(ErrorCode::DegenerateInput, "first 6D column is zero");
  const Vec3 b1 = a1 / n1;
  const Vec3 residual = a2 - b1.dot(a2) * b1;
  const double n2 = residual.norm();
  if (n2 < kDegenerateResidual) throw Error(ErrorCode::DegenerateInput, "6D columns are parallel");
  const Vec3 b2 = residual / n2;
  Mat3 m;
  m.col(0) = b1;
  m.col(1) = b2;
  m.col(2) = b1.cross(b2);
  return RotMatrix(m);
}

Rot6D matrix_to_sixd(const RotMatrix& m) {
  if (!is_rotation(m.m, 1e-4)) throw Error(ErrorCode::InvalidRotation, "matrix is not a rotation");
  return Rot6D(m.m.col(0), m.m.col(1));
}

RotMatrix quaternion_to_matrix(const Quaternion& q_in) {
  const Quaternion q = q_in.normalized();
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Mat3 m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return RotMatrix(m);
}

Quaternion matrix_to_quaternion(const RotMatrix& rm) {
  // Shepperd: branch on the largest of (trace, diagonal) for stability.
  const Mat3& m = rm.m;
  const double tr = m.trace();
  Quaternion q;
  if (tr >= m(0, 0) && tr >= m(1, 1) && tr >= m(2, 2)) {
    const double s = std::sqrt(1.0 + tr) * 2.0;
    q = {0.25 * s, (m(2, 1) - m(1, 2)) / s, (m(0, 2) - m(2, 0)) / s, (m(1, 0) - m(0, 1)) / s};
  } else if (m(0, 0) >= m(1, 1) && m(0, 0) >= m(2, 2)) {
    const double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2.0;
    q = {(m(2, 1) - m(1, 2)) / s, 0.25 * s, (m(0, 1) + m(1, 0)) / s, (m(0, 2) + m(2, 0)) / s};
  } else if (m(1, 1) >= m(2, 2)) {
    const double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2.0;
    q = {(m(0, 2) - m(2, 0)) / s, (m(0, 1) + m(1, 0)) / s, 0.25 * s, (m(1, 2) + m(2, 1)) / s};
  } else {
    const double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2.0;
    q = {(m(1, 0) - m(0, 1)) / s, (m(0, 2) + m(2, 0)) / s, (m(1, 2) + m(2, 1)) / s, 0.25 * s};
  }
  return q.normalized().canonical();
}

Quaternion axis_angle_to_quaternion(const AxisAngle& a) {
  const double angle = a.angle();
  if (angle < 1e-12) {
    // First-order: sin(angle/2)/angle -> 1/2.
    return Quaternion{1.0, 0.5 * a.v.x(), 0.5 * a.v.y(), 0.5 * a.v.z()}.normalized().canonical();
  }
  const double s = std::sin(0.5 * angle) / angle;
  return Quaternion{std::cos(0.5 * angle), s * a.v.x(), s * a.v.y(), s * a.v.z()}.canonical();
}

AxisAngle quaternion_to_axis_angle(const Quaternion& q_in) {
  const Quaternion q = q_in.normalized().canonical();
  const Vec3 v(q.x, q.y, q.z);
  const double s = v.norm();
  if (s < 1e-12) return AxisAngle(v * (2.0 / q.w));
  const double angle = 2.0 * std::atan2(s, q.w);  // in [0, pi] since w >= 0
  return AxisAngle(v * (angle / s));
}

RotMatrix axis_angle_to_matrix(const AxisAngle& a) {
  // Rodrigues.
  const double angle = a.angle();
  Mat3 k;
  k << 0, -a.v.z(), a.v.y(), a.v.z(), 0, -a.v.x(), -a.v.y(), a.v.x(), 0;
  double s, c;
  if (angle < 1e-8) {
    s = 1.0 - angle * angle / 6.0;
    c = 0.5 - angle * angle / 24.0;
  } else {
    s = std::sin(angle) / angle;
    c = (1.0 - std::cos(angle)) / (angle * angle);
  }
  return RotMatrix(Mat3::Identity() + s * k + c * k * k);
}

AxisAngle matrix_to_axis_angle(const RotMatrix& m) {
  return quaternion_to_axis_angle(matrix_to_quaternion(m));
}

double geodesic_distance(const RotMatrix& m1, const RotMatrix& m2) {
  const Mat3 r = m1.m.transpose() * m2.m;
  const Vec3 axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double sin_term = 0.5 * axis.norm();
  const double cos_term = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  return std::atan2(sin_term, cos_term);
}

bool is_rotation(const Mat3& m, double tol) {
  if (!m.allFinite()) return false;
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(m.determinant() - 1.0) <= tol;
}

RotMatrix rotation_about_y(double angle) {
  return axis_angle_to_matrix(AxisAngle(Vec3(0.0, angle, 0.0)));
}

RotMatrix random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Quaternion q{normal(rng), normal(rng), normal(rng), normal(rng)};
  return quaternion_to_matrix(q.normalized());
}

// ---------------------------------------------------------------------------

int rep_dim(RotationRep rep) {
  switch (rep) {
    case RotationRep::AxisAngle: return 3;
    case RotationRep::Quaternion: return 4;
    case RotationRep::Matrix: return 9;
    case RotationRep::SixD: return 6;
  }
  return 6;
}

std::string_view rep_name(RotationRep rep) {
  switch (rep) {
    case RotationRep::AxisAngle: return "axis_angle";
    case RotationRep::Quaternion: return "quaternion";
    case RotationRep::Matrix: return "matrix";
    case RotationRep::SixD: return "rot6d";
  }
  return "rot6d";
}

RotationRep rep_from_name(std::string_view name) {
  if (name == "axis_angle") return RotationRep::AxisAngle;
  if (name == "quaternion") return RotationRep::Quaternion;
  if (name == "matrix") return RotationRep::Matrix;
  if (name == "rot6d") return RotationRep::SixD;
  throw Error(ErrorCode::InvalidConfig, "unknown rotation representation '" + std::string(name) + "'");
}

torch::Tensor sixd_to_matrix(const torch::Tensor& r6) {
  namespace F = torch::nn::functional;
  auto a1 = r6.narrow(-1, 0, 3);
  auto a2 = r6.narrow(-1, 3, 3);
  auto b1 = F::normalize(a1, F::NormalizeFuncOptions().dim(-1).eps(1e-12));
  auto b2 = a2 - (b1 * a2).sum(-1, true) * b1;
  b2 = F::normalize(b2, F::NormalizeFuncOptions().dim(-1).eps(1e-12));
  auto b3 = torch::cross(b1, b2, -1);
  return torch::stack({b1, b2, b3}, -1);
}

torch::Tensor matrix_to_sixd(const torch::Tensor& m) {
  return torch::cat({m.select(-1, 0), m.select(-1, 1)}, -1);
}

torch::Tensor quaternion_to_matrix(const torch::Tensor& q_in) {
  auto q = q_in / q_in.norm(2, -1, true).clamp_min(1e-12);
  auto w = q.select(-1, 0), x = q.select(-1, 1), y = q.select(-1, 2), z = q.select(-1, 3);
  auto row0 = torch::stack({1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)}, -1);
  auto row1 = torch::stack({2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)}, -1);
  auto row2 = torch::stack({2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}, -1);
  return torch::stack({row0, row1, row2}, -2);
}

torch::Tensor axis_angle_to_matrix(const torch::Tensor& aa) {
  // Through the quaternion (cos(t/2), sin(t/2)/t * v), with a series
  // expansion of sin(t/2)/t near zero so the gradient stays finite.
  auto angle_sq = (aa * aa).sum(-1, true);
  auto small = angle_sq < 1e-12;
  auto angle = torch::sqrt(torch::where(small, torch::ones_like(angle_sq), angle_sq));
  auto half_sinc = torch::where(small, 0.5 - angle_sq / 48.0, torch::sin(0.5 * angle) / angle);
  auto w = torch::where(small, 1.0 - angle_sq / 8.0, torch::cos(0.5 * angle));
  return quaternion_to_matrix(torch::cat({w, aa * half_sinc}, -1));
}

namespace {

torch::Tensor per_rotation(const torch::Tensor& m, int out_dim,
                           const std::function<void(const RotMatrix&, double*)>& fn) {
  auto flat = m.to(torch::kDouble).contiguous().reshape({-1, 3, 3});
  const auto n = flat.size(0);
  auto out = torch::empty({n, out_dim}, torch::kDouble);
  auto in_acc = flat.accessor<double, 3>();
  auto out_ptr = out.data_ptr<double>();
  for (int64_t i = 0; i < n; ++i) {
    Mat3 mat;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) mat(r, c) = in_acc[i][r][c];
    fn(RotMatrix(mat), out_ptr + i * out_dim);
  }
  auto sizes = m.sizes().vec();
  sizes.pop_back();
  sizes.back() = out_dim;
  return out.reshape(sizes).to(m.scalar_type());
}

}  // namespace

torch::Tensor matrix_to_rep(const torch::Tensor& m, RotationRep rep) {
  switch (rep) {
    case RotationRep::SixD: return matrix_to_sixd(m);
    case RotationRep::Matrix: return m.flatten(-2);
    case RotationRep::Quaternion:
      return per_rotation(m, 4, [](const RotMatrix& r, double* out) {
        const auto q = matrix_to_quaternion(r);
        out[0] = q.w, out[1] = q.x, out[2] = q.y, out[3] = q.z;
      });
    case RotationRep::AxisAngle:
      return per_rotation(m, 3, [](const RotMatrix& r, double* out) {
        const auto a = matrix_to_axis_angle(r);
        out[0] = a.v.x(), out[1] = a.v.y(), out[2] = a.v.z();
      });
  }
  return matrix_to_sixd(m);
}

torch::Tensor rep_to_matrix(const torch::Tensor& r, RotationRep rep) {
  switch (rep) {
    case RotationRep::SixD: return sixd_to_matrix(r);
    case RotationRep::Matrix: {
      auto sizes = r.sizes().vec();
      sizes.back() = 3;
      sizes.push_back(3);
      return r.reshape(sizes);
    }
    case RotationRep::Quaternion: return quaternion_to_matrix(r);
    case RotationRep::AxisAngle: return axis_angle_to_matrix(r);
  }
  return sixd_to_matrix(r);
}

}  // namespace actor::rot
