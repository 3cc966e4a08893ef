#pragma once

#include "actor/rotations.hpp"

#include <torch/torch.h>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace actor::body {

using rot::Vec3;

// Kinematic tree. Joints are stored in topological order: parent[j] < j,
// joint 0 is the root (parent -1). Vertical axis +y, facing axis +z.
struct Skeleton {
  std::vector<std::string> names;
  std::vector<int> parents;
  std::vector<Vec3> rest_offsets;
  // Points rigidly attached to each joint's frame, in that frame.
  std::vector<std::vector<Vec3>> surface_offsets;

  int joint_count() const { return static_cast<int>(parents.size()); }
  int surface_count() const;

  // Throws InvalidConfig when any structural invariant is violated.
  void validate() const;

  // 24-joint, SMPL-like topology of a ~1.7 m figure, 8 surface points per
  // joint (box corners, 5 cm half-extent).
  static Skeleton standard();
  // Simple chain with equal (0, bone_length, 0) offsets; handy for tests.
  static Skeleton chain(int joints, double bone_length = 1.0, double surface_radius = 0.05);

  static Skeleton from_json_text(const std::string& text);
  static Skeleton load(const std::filesystem::path& path);
  std::string to_json_text() const;
};

struct FramePose {
  std::vector<rot::Rot6D> rotations;  // one per joint; [0] is the global rotation
  Vec3 displacement = Vec3::Zero();   // root translation D_t, meters
};

struct Motion {
  std::vector<FramePose> frames;
  int action = 0;
  double fps = 20.0;

  int length() const { return static_cast<int>(frames.size()); }
  int joint_count() const { return frames.empty() ? 0 : static_cast<int>(frames.front().rotations.size()); }
};

using PointCloud = std::vector<Vec3>;

// Joint positions for one frame. The root sits at the displacement when
// apply_displacement is set, otherwise at the origin.
PointCloud forward_kinematics(const Skeleton& skeleton, const FramePose& pose, bool apply_displacement);

// Global (world) rotation of every joint.
std::vector<rot::RotMatrix> global_rotations(const Skeleton& skeleton, const FramePose& pose);

// Root-centered surface points for one frame.
PointCloud surface_points(const Skeleton& skeleton, const FramePose& pose);

// Rotate the whole motion about +y so that frame 0 faces +z.
Motion canonicalize_frontal(const Motion& motion);

// Subtract root[t] from every point of frame t.
std::vector<PointCloud> root_center(const std::vector<PointCloud>& cloud, const std::vector<Vec3>& roots);
// Same, with the root taken as point 0 of each frame (joint clouds).
std::vector<PointCloud> root_center(const std::vector<PointCloud>& cloud);

// Motion <-> tensors ([T, J, 6] rotations, [T, 3] displacement, float64).
torch::Tensor rotations_tensor(const Motion& motion);
torch::Tensor displacement_tensor(const Motion& motion);
Motion motion_from_tensors(const torch::Tensor& rot6d, const torch::Tensor& displacement, int action, double fps);

// Throws ShapeMismatch/DegenerateInput when the motion is not well formed.
void validate_motion(const Motion& motion, int joint_count);

// ---------------------------------------------------------------------------
// Differentiable body model used by the geometric losses. Only the mean
// shape is modelled.
class BodyModel {
 public:
  virtual ~BodyModel() = default;

  virtual int joint_count() const = 0;
  virtual int surface_count() const = 0;

  // rotations [..., J, 3, 3], displacement [..., 3] or undefined -> [..., J, 3]
  virtual torch::Tensor joints(const torch::Tensor& rotations, const torch::Tensor& displacement) const = 0;
  // rotations [..., J, 3, 3] -> root-centered [..., S, 3]
  virtual torch::Tensor surface(const torch::Tensor& rotations) const = 0;
};

class RigidSkeletonBody final : public BodyModel {
 public:
  explicit RigidSkeletonBody(Skeleton skeleton);

  int joint_count() const override { return skeleton_.joint_count(); }
  int surface_count() const override { return skeleton_.surface_count(); }
  const Skeleton& skeleton() const { return skeleton_; }

  torch::Tensor joints(const torch::Tensor& rotations, const torch::Tensor& displacement) const override;
  torch::Tensor surface(const torch::Tensor& rotations) const override;

 private:
  // Global rotations [..., J, 3, 3] and root-relative joint positions [..., J, 3].
  std::pair<torch::Tensor, torch::Tensor> pose_chain(const torch::Tensor& rotations) const;

  Skeleton skeleton_;
  torch::Tensor offsets_;          // [J, 3]
  torch::Tensor surface_local_;    // [S, 3]
  torch::Tensor surface_joint_;    // [S] owning joint index
};

}  // namespace actor::body
