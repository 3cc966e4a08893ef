#include "actor/body.hpp"

#include "actor/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace actor::body {

using nlohmann::json;

namespace {

std::vector<Vec3> box_corners(double r) {
  std::vector<Vec3> corners;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) corners.emplace_back(sx * r, sy * r, sz * r);
  return corners;
}

}  // namespace

int Skeleton::surface_count() const {
  int n = 0;
  for (const auto& s : surface_offsets) n += static_cast<int>(s.size());
  return n;
}

void Skeleton::validate() const {
  const auto n = parents.size();
  if (n == 0) throw Error(ErrorCode::InvalidConfig, "skeleton has no joints");
  if (rest_offsets.size() != n || surface_offsets.size() != n || names.size() != n)
    throw Error(ErrorCode::InvalidConfig, "skeleton arrays disagree in length");
  if (parents[0] != -1) throw Error(ErrorCode::InvalidConfig, "joint 0 must be the root");
  for (std::size_t j = 1; j < n; ++j) {
    if (parents[j] < 0 || parents[j] >= static_cast<int>(j))
      throw Error(ErrorCode::InvalidConfig, "joint " + std::to_string(j) + " must have a parent with a smaller index");
  }
  for (const auto& o : rest_offsets)
    if (!o.allFinite()) throw Error(ErrorCode::InvalidConfig, "non-finite rest offset");
  if (surface_count() < static_cast<int>(n))
    throw Error(ErrorCode::InvalidConfig, "need at least one surface point per joint on average");
}

Skeleton Skeleton::standard() {
  struct Row {
    const char* name;
    int parent;
    Vec3 offset;
  };
  // +x is the body's left, +y up, +z forward.
  const Row rows[] = {
      {"pelvis", -1, {0.0, 0.0, 0.0}},
      {"left_hip", 0, {0.07, -0.09, 0.0}},
      {"right_hip", 0, {-0.07, -0.09, 0.0}},
      {"spine1", 0, {0.0, 0.11, -0.02}},
      {"left_knee", 1, {0.01, -0.38, 0.0}},
      {"right_knee", 2, {-0.01, -0.38, 0.0}},
      {"spine2", 3, {0.0, 0.13, 0.01}},
      {"left_ankle", 4, {0.0, -0.40, -0.04}},
      {"right_ankle", 5, {0.0, -0.40, -0.04}},
      {"spine3", 6, {0.0, 0.05, 0.02}},
      {"left_foot", 7, {0.02, -0.05, 0.12}},
      {"right_foot", 8, {-0.02, -0.05, 0.12}},
      {"neck", 9, {0.0, 0.21, -0.03}},
      {"left_collar", 9, {0.08, 0.12, -0.02}},
      {"right_collar", 9, {-0.08, 0.12, -0.02}},
      {"head", 12, {0.0, 0.09, 0.05}},
      {"left_shoulder", 13, {0.12, 0.04, -0.01}},
      {"right_shoulder", 14, {-0.12, 0.04, -0.01}},
      {"left_elbow", 16, {0.26, 0.0, -0.02}},
      {"right_elbow", 17, {-0.26, 0.0, -0.02}},
      {"left_wrist", 18, {0.25, 0.0, 0.0}},
      {"right_wrist", 19, {-0.25, 0.0, 0.0}},
      {"left_hand", 20, {0.08, -0.01, 0.0}},
      {"right_hand", 21, {-0.08, -0.01, 0.0}},
  };
  Skeleton s;
  for (const auto& r : rows) {
    s.names.emplace_back(r.name);
    s.parents.push_back(r.parent);
    s.rest_offsets.push_back(r.offset);
    s.surface_offsets.push_back(box_corners(0.05));
  }
  s.validate();
  return s;
}

Skeleton Skeleton::chain(int joints, double bone_length, double surface_radius) {
  Skeleton s;
  for (int j = 0; j < joints; ++j) {
    s.names.push_back("j" + std::to_string(j));
    s.parents.push_back(j - 1);
    s.rest_offsets.emplace_back(0.0, j == 0 ? 0.0 : bone_length, 0.0);
    s.surface_offsets.push_back(box_corners(surface_radius));
  }
  s.validate();
  return s;
}

Skeleton Skeleton::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("skeleton config: ") + e.what());
  }
  Skeleton s;
  const double radius = doc.value("surface_radius", 0.05);
  for (const auto& j : doc.at("joints")) {
    s.names.push_back(j.value("name", "joint" + std::to_string(s.names.size())));
    s.parents.push_back(j.at("parent").get<int>());
    const auto off = j.at("offset").get<std::vector<double>>();
    if (off.size() != 3) throw Error(ErrorCode::InvalidConfig, "offset must have 3 components");
    s.rest_offsets.emplace_back(off[0], off[1], off[2]);
    if (j.contains("surface")) {
      std::vector<Vec3> pts;
      for (const auto& p : j.at("surface")) {
        const auto v = p.get<std::vector<double>>();
        if (v.size() != 3) throw Error(ErrorCode::InvalidConfig, "surface point must have 3 components");
        pts.emplace_back(v[0], v[1], v[2]);
      }
      s.surface_offsets.push_back(std::move(pts));
    } else {
      s.surface_offsets.push_back(box_corners(radius));
    }
  }
  s.validate();
  return s;
}

Skeleton Skeleton::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open skeleton config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string Skeleton::to_json_text() const {
  json doc;
  doc["joints"] = json::array();
  for (int j = 0; j < joint_count(); ++j) {
    json row{{"name", names[j]}, {"parent", parents[j]},
             {"offset", {rest_offsets[j].x(), rest_offsets[j].y(), rest_offsets[j].z()}}};
    row["surface"] = json::array();
    for (const auto& p : surface_offsets[j]) row["surface"].push_back({p.x(), p.y(), p.z()});
    doc["joints"].push_back(row);
  }
  return doc.dump(2);
}

// ---------------------------------------------------------------------------

namespace {

void check_pose(const Skeleton& skeleton, const FramePose& pose) {
  if (static_cast<int>(pose.rotations.size()) != skeleton.joint_count())
    throw Error(ErrorCode::ShapeMismatch, "pose has " + std::to_string(pose.rotations.size()) +
                                              " rotations, skeleton has " + std::to_string(skeleton.joint_count()));
}

}  // namespace

std::vector<rot::RotMatrix> global_rotations(const Skeleton& skeleton, const FramePose& pose) {
  check_pose(skeleton, pose);
  std::vector<rot::RotMatrix> global(skeleton.joint_count());
  for (int j = 0; j < skeleton.joint_count(); ++j) {
    const auto local = rot::sixd_to_matrix(pose.rotations[j]);
    const int p = skeleton.parents[j];
    global[j] = p < 0 ? local : global[p] * local;
  }
  return global;
}

PointCloud forward_kinematics(const Skeleton& skeleton, const FramePose& pose, bool apply_displacement) {
  const auto global = global_rotations(skeleton, pose);
  PointCloud pos(skeleton.joint_count());
  for (int j = 0; j < skeleton.joint_count(); ++j) {
    const int p = skeleton.parents[j];
    if (p < 0) {
      pos[j] = apply_displacement ? pose.displacement : Vec3::Zero();
    } else {
      pos[j] = pos[p] + global[p] * skeleton.rest_offsets[j];
    }
  }
  return pos;
}

PointCloud surface_points(const Skeleton& skeleton, const FramePose& pose) {
  const auto global = global_rotations(skeleton, pose);
  const auto joints = forward_kinematics(skeleton, pose, false);
  PointCloud pts;
  pts.reserve(skeleton.surface_count());
  for (int j = 0; j < skeleton.joint_count(); ++j)
    for (const auto& local : skeleton.surface_offsets[j]) pts.push_back(joints[j] + global[j] * local);
  return pts;
}

Motion canonicalize_frontal(const Motion& motion) {
  if (motion.frames.empty()) return motion;
  const auto root0 = rot::sixd_to_matrix(motion.frames.front().rotations.front());
  const Vec3 facing = root0 * Vec3(0.0, 0.0, 1.0);
  const double horizontal = std::hypot(facing.x(), facing.z());
  if (horizontal < 1e-6) return motion;
  const auto g = rot::rotation_about_y(-std::atan2(facing.x(), facing.z()));
  Motion out = motion;
  for (auto& frame : out.frames) {
    frame.rotations.front() = rot::matrix_to_sixd(g * rot::sixd_to_matrix(frame.rotations.front()));
    frame.displacement = g * frame.displacement;
  }
  return out;
}

std::vector<PointCloud> root_center(const std::vector<PointCloud>& cloud, const std::vector<Vec3>& roots) {
  if (cloud.size() != roots.size()) throw Error(ErrorCode::ShapeMismatch, "one root per frame required");
  std::vector<PointCloud> out = cloud;
  for (std::size_t t = 0; t < out.size(); ++t)
    for (auto& p : out[t]) p -= roots[t];
  return out;
}

std::vector<PointCloud> root_center(const std::vector<PointCloud>& cloud) {
  std::vector<Vec3> roots;
  roots.reserve(cloud.size());
  for (const auto& frame : cloud) roots.push_back(frame.empty() ? Vec3::Zero() : frame.front());
  return root_center(cloud, roots);
}

torch::Tensor rotations_tensor(const Motion& motion) {
  const int T = motion.length();
  const int J = motion.joint_count();
  auto out = torch::empty({T, J, 6}, torch::kDouble);
  auto acc = out.accessor<double, 3>();
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < J; ++j)
      for (int k = 0; k < 6; ++k) acc[t][j][k] = motion.frames[t].rotations[j].values[k];
  return out;
}

torch::Tensor displacement_tensor(const Motion& motion) {
  const int T = motion.length();
  auto out = torch::empty({T, 3}, torch::kDouble);
  auto acc = out.accessor<double, 2>();
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < 3; ++k) acc[t][k] = motion.frames[t].displacement[k];
  return out;
}

Motion motion_from_tensors(const torch::Tensor& rot6d, const torch::Tensor& displacement, int action, double fps) {
  auto r = rot6d.detach().to(torch::kDouble).contiguous();
  auto d = displacement.detach().to(torch::kDouble).contiguous();
  if (r.dim() != 3 || r.size(2) != 6 || d.dim() != 2 || d.size(1) != 3 || d.size(0) != r.size(0))
    throw Error(ErrorCode::ShapeMismatch, "expected [T, J, 6] rotations and [T, 3] displacement");
  Motion m;
  m.action = action;
  m.fps = fps;
  const auto T = r.size(0), J = r.size(1);
  auto ra = r.accessor<double, 3>();
  auto da = d.accessor<double, 2>();
  m.frames.resize(T);
  for (int64_t t = 0; t < T; ++t) {
    auto& f = m.frames[t];
    f.rotations.resize(J);
    for (int64_t j = 0; j < J; ++j)
      for (int k = 0; k < 6; ++k) f.rotations[j].values[k] = ra[t][j][k];
    f.displacement = Vec3(da[t][0], da[t][1], da[t][2]);
  }
  return m;
}

void validate_motion(const Motion& motion, int joint_count) {
  if (motion.frames.empty()) throw Error(ErrorCode::EmptySequence, "motion has no frames");
  for (const auto& f : motion.frames) {
    if (static_cast<int>(f.rotations.size()) != joint_count)
      throw Error(ErrorCode::ShapeMismatch, "frame joint count differs from skeleton");
    if (!f.displacement.allFinite()) throw Error(ErrorCode::DegenerateInput, "non-finite displacement");
    for (const auto& r : f.rotations) (void)rot::sixd_to_matrix(r);
  }
}

// ---------------------------------------------------------------------------

RigidSkeletonBody::RigidSkeletonBody(Skeleton skeleton) : skeleton_(std::move(skeleton)) {
  skeleton_.validate();
  const int J = skeleton_.joint_count();
  offsets_ = torch::empty({J, 3}, torch::kDouble);
  for (int j = 0; j < J; ++j)
    for (int k = 0; k < 3; ++k) offsets_[j][k] = skeleton_.rest_offsets[j][k];
  const int S = skeleton_.surface_count();
  surface_local_ = torch::empty({S, 3}, torch::kDouble);
  surface_joint_ = torch::empty({S}, torch::kLong);
  int s = 0;
  for (int j = 0; j < J; ++j) {
    for (const auto& p : skeleton_.surface_offsets[j]) {
      for (int k = 0; k < 3; ++k) surface_local_[s][k] = p[k];
      surface_joint_[s] = j;
      ++s;
    }
  }
}

std::pair<torch::Tensor, torch::Tensor> RigidSkeletonBody::pose_chain(const torch::Tensor& rotations) const {
  const int J = skeleton_.joint_count();
  if (rotations.dim() < 3 || rotations.size(-3) != J || rotations.size(-1) != 3 || rotations.size(-2) != 3)
    throw Error(ErrorCode::ShapeMismatch, "expected rotations of shape [..., " + std::to_string(J) + ", 3, 3]");
  auto offsets = offsets_.to(rotations.options());
  std::vector<torch::Tensor> global(J), pos(J);
  for (int j = 0; j < J; ++j) {
    auto local = rotations.select(-3, j);
    const int p = skeleton_.parents[j];
    if (p < 0) {
      global[j] = local;
      pos[j] = torch::zeros_like(local.select(-1, 0));
    } else {
      global[j] = torch::matmul(global[p], local);
      pos[j] = pos[p] + torch::matmul(global[p], offsets[j].unsqueeze(-1)).squeeze(-1);
    }
  }
  return {torch::stack(global, -3), torch::stack(pos, -2)};
}

torch::Tensor RigidSkeletonBody::joints(const torch::Tensor& rotations, const torch::Tensor& displacement) const {
  auto pos = pose_chain(rotations).second;
  if (displacement.defined()) pos = pos + displacement.unsqueeze(-2);
  return pos;
}

torch::Tensor RigidSkeletonBody::surface(const torch::Tensor& rotations) const {
  auto [global, pos] = pose_chain(rotations);
  auto idx = surface_joint_.to(rotations.device());
  auto owner_rot = global.index_select(-3, idx);   // [..., S, 3, 3]
  auto owner_pos = pos.index_select(-2, idx);      // [..., S, 3]
  auto local = surface_local_.to(rotations.options());
  return owner_pos + torch::matmul(owner_rot, local.unsqueeze(-1)).squeeze(-1);
}

}  // namespace actor::body
