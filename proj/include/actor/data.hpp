#pragma once

#include "actor/body.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace actor::data {

using body::Motion;

inline constexpr const char* kMotionFormatVersion = "motion-v1";
inline constexpr const char* kDatasetFormatVersion = "dataset-v1";

// Per-sequence variation of a procedural action.
struct GeneratorParams {
  double amplitude = 1.0;
  double speed = 1.0;
  double phase = 0.0;
};

// Closed-form action generator over the standard 24-joint skeleton.
struct ActionGenerator {
  std::string name;
  // Local joint rotations (axis-angle) and root displacement at time t (s).
  void (*pose_at)(const GeneratorParams& params, double t, std::vector<rot::Vec3>& axis_angles, rot::Vec3& displacement);
};

const std::vector<ActionGenerator>& builtin_generators();
const ActionGenerator& find_generator(const std::string& name);

// Noise-free motion from a generator; frame 0's root sits at the origin.
Motion synthesize(const ActionGenerator& generator, const GeneratorParams& params, int frames, double fps, int action);

struct DatasetSpec {
  std::vector<std::string> actions = {"wave_left_arm", "wave_right_arm", "squat", "walk_in_place", "reach_forward"};
  int sequences_per_action = 100;
  int duration_min = 60;
  int duration_max = 60;  // equal to duration_min for fixed-length data
  double rotation_noise_std = 0.05;
  double translation_noise_std = 0.01;
  uint64_t seed = 0;
  double train_fraction = 0.8;
  double fps = 20.0;

  void validate() const;
};

enum class Split { Train, Test };

struct Dataset {
  std::vector<std::string> action_names;
  std::vector<Motion> motions;
  std::vector<Split> splits;

  int num_actions() const { return static_cast<int>(action_names.size()); }
  std::vector<Motion> subset(Split split) const;
  std::vector<Motion> train() const { return subset(Split::Train); }
  std::vector<Motion> test() const { return subset(Split::Test); }
};

// Deterministic given spec.seed. Stratified train/test split per action.
Dataset generate_dataset(const DatasetSpec& spec);

// Compose every joint rotation with exp(n), n ~ N(0, rot_std^2 I), and
// jitter displacement by N(0, trans_std^2 I); independent per frame.
Motion add_noise(const Motion& motion, double rot_std, double trans_std, std::mt19937_64& rng);

// Binary container: magic, JSON header (format_version, action, fps, array
// shapes), then little-endian float64 payloads "rot6d" [T,J,6] and "trans" [T,3].
void save_motion(const Motion& motion, const std::filesystem::path& path);
Motion load_motion(const std::filesystem::path& path);

// Directory with manifest.json plus one motion file per sequence.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// Stratified subsample keeping `fraction` of every class (at least one each).
std::vector<Motion> stratified_fraction(const std::vector<Motion>& motions, double fraction, uint64_t seed);

}  // namespace actor::data
