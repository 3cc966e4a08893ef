#include "actor/data.hpp"

#include "actor/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

namespace actor::data {

using nlohmann::json;
using rot::Vec3;

static_assert(std::endian::native == std::endian::little, "motion files are written in host byte order");

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Standard skeleton joint indices.
enum Joint : int {
  kPelvis = 0, kLeftHip = 1, kRightHip = 2, kSpine1 = 3, kLeftKnee = 4, kRightKnee = 5,
  kLeftAnkle = 7, kRightAnkle = 8, kLeftShoulder = 16, kRightShoulder = 17, kLeftElbow = 18, kRightElbow = 19,
};
constexpr int kJoints = 24;
constexpr double kArmDown = 1.2;  // shoulder roll that lowers the arms from T-pose

void rest(std::vector<Vec3>& aa, Vec3& disp) {
  aa.assign(kJoints, Vec3::Zero());
  aa[kLeftShoulder] = Vec3(0, 0, -kArmDown);
  aa[kRightShoulder] = Vec3(0, 0, kArmDown);
  disp.setZero();
}

// Raised arm with the forearm swinging side to side.
void wave_left_arm(const GeneratorParams& p, double t, std::vector<Vec3>& aa, Vec3& disp) {
  rest(aa, disp);
  const double w = kTwoPi * 1.2 * p.speed;
  aa[kLeftShoulder] = Vec3(0, 0, 0.9);
  aa[kLeftElbow] = Vec3(0, 0, 0.8 + 0.6 * p.amplitude * std::sin(w * t + p.phase));
}

void wave_right_arm(const GeneratorParams& p, double t, std::vector<Vec3>& aa, Vec3& disp) {
  rest(aa, disp);
  const double w = kTwoPi * 1.2 * p.speed;
  aa[kRightShoulder] = Vec3(0, 0, -0.9);
  aa[kRightElbow] = Vec3(0, 0, -(0.8 + 0.6 * p.amplitude * std::sin(w * t + p.phase)));
}

void squat(const GeneratorParams& p, double t, std::vector<Vec3>& aa, Vec3& disp) {
  rest(aa, disp);
  const double w = kTwoPi * 0.5 * p.speed;
  const double s = p.amplitude * 0.5 * (1.0 - std::cos(w * t + p.phase));
  aa[kLeftHip] = aa[kRightHip] = Vec3(-1.1 * s, 0, 0);
  aa[kLeftKnee] = aa[kRightKnee] = Vec3(1.8 * s, 0, 0);
  aa[kLeftAnkle] = aa[kRightAnkle] = Vec3(-0.7 * s, 0, 0);
  aa[kSpine1] = Vec3(0.3 * s, 0, 0);
  disp = Vec3(0, -0.35 * s, 0);
}

// Alternating leg and arm swing with a vertical root bounce.
void walk_in_place(const GeneratorParams& p, double t, std::vector<Vec3>& aa, Vec3& disp) {
  rest(aa, disp);
  const double theta = kTwoPi * 1.0 * p.speed * t + p.phase;
  const double a = p.amplitude;
  aa[kLeftHip] = Vec3(-0.6 * a * std::sin(theta), 0, 0);
  aa[kRightHip] = Vec3(0.6 * a * std::sin(theta), 0, 0);
  aa[kLeftKnee] = Vec3(0.4 * a * (1.0 + std::sin(theta)), 0, 0);
  aa[kRightKnee] = Vec3(0.4 * a * (1.0 - std::sin(theta)), 0, 0);
  aa[kLeftShoulder] = Vec3(0.4 * a * std::sin(theta), 0, -kArmDown);
  aa[kRightShoulder] = Vec3(-0.4 * a * std::sin(theta), 0, kArmDown);
  disp = Vec3(0, 0.03 * a * 0.5 * (1.0 - std::cos(2.0 * theta)), 0);
}

// Both arms reach forward while the body drifts towards +z.
void reach_forward(const GeneratorParams& p, double t, std::vector<Vec3>& aa, Vec3& disp) {
  rest(aa, disp);
  const double w = kTwoPi * 0.4 * p.speed;
  const double r = p.amplitude * 0.5 * (1.0 - std::cos(w * t + p.phase));
  aa[kLeftShoulder] = Vec3(0, -1.5 * r, -kArmDown * (1.0 - r));
  aa[kRightShoulder] = Vec3(0, 1.5 * r, kArmDown * (1.0 - r));
  aa[kSpine1] = Vec3(0.25 * r, 0, 0);
  disp = Vec3(0, 0, 0.25 * r + 0.05 * p.amplitude * t);
}

body::FramePose frame_from(const std::vector<Vec3>& aa, const Vec3& disp) {
  body::FramePose f;
  f.rotations.reserve(aa.size());
  for (const auto& v : aa) f.rotations.push_back(rot::matrix_to_sixd(rot::axis_angle_to_matrix(rot::AxisAngle(v))));
  f.displacement = disp;
  return f;
}

}  // namespace

const std::vector<ActionGenerator>& builtin_generators() {
  static const std::vector<ActionGenerator> generators = {
      {"wave_left_arm", &wave_left_arm}, {"wave_right_arm", &wave_right_arm}, {"squat", &squat},
      {"walk_in_place", &walk_in_place}, {"reach_forward", &reach_forward},
  };
  return generators;
}

const ActionGenerator& find_generator(const std::string& name) {
  for (const auto& g : builtin_generators())
    if (g.name == name) return g;
  throw Error(ErrorCode::InvalidSpec, "unknown action generator '" + name + "'");
}

Motion synthesize(const ActionGenerator& generator, const GeneratorParams& params, int frames, double fps, int action) {
  Motion m;
  m.action = action;
  m.fps = fps;
  m.frames.reserve(frames);
  std::vector<Vec3> aa;
  Vec3 disp, origin;
  generator.pose_at(params, 0.0, aa, origin);
  for (int t = 0; t < frames; ++t) {
    generator.pose_at(params, t / fps, aa, disp);
    m.frames.push_back(frame_from(aa, disp - origin));
  }
  return m;
}

void DatasetSpec::validate() const {
  if (actions.size() < 2) throw Error(ErrorCode::InvalidSpec, "need at least two actions");
  for (const auto& a : actions) (void)find_generator(a);
  if (sequences_per_action < 2) throw Error(ErrorCode::InvalidSpec, "need at least two sequences per action");
  if (duration_min < 8 || duration_max < duration_min)
    throw Error(ErrorCode::InvalidSpec, "durations must satisfy 8 <= min <= max");
  if (rotation_noise_std < 0.0 || translation_noise_std < 0.0)
    throw Error(ErrorCode::InvalidSpec, "noise std must be non-negative");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error(ErrorCode::InvalidSpec, "train_fraction must be in (0, 1)");
  if (!(fps > 0.0)) throw Error(ErrorCode::InvalidSpec, "fps must be positive");
}

std::vector<Motion> Dataset::subset(Split split) const {
  std::vector<Motion> out;
  for (std::size_t i = 0; i < motions.size(); ++i)
    if (splits[i] == split) out.push_back(motions[i]);
  return out;
}

Dataset generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.action_names = spec.actions;
  const int n = spec.sequences_per_action;
  const int n_train = std::clamp(static_cast<int>(std::lround(spec.train_fraction * n)), 1, n - 1);
  for (int a = 0; a < static_cast<int>(spec.actions.size()); ++a) {
    const auto& gen = find_generator(spec.actions[a]);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::seed_seq split_seed{spec.seed, uint64_t{0x5EED}, static_cast<uint64_t>(a)};
    std::mt19937_64 split_rng(split_seed);
    std::shuffle(order.begin(), order.end(), split_rng);
    std::vector<Split> split_of(n, Split::Test);
    for (int k = 0; k < n_train; ++k) split_of[order[k]] = Split::Train;

    for (int i = 0; i < n; ++i) {
      // Independent stream per sequence so generation can be parallelized.
      std::seed_seq seq_seed{spec.seed, static_cast<uint64_t>(a), static_cast<uint64_t>(i)};
      std::mt19937_64 rng(seq_seed);
      std::uniform_real_distribution<double> amp(0.75, 1.25), speed(0.8, 1.2), phase(0.0, kTwoPi);
      GeneratorParams params{amp(rng), speed(rng), phase(rng)};
      std::uniform_int_distribution<int> dur(spec.duration_min, spec.duration_max);
      const int frames = dur(rng);
      auto motion = synthesize(gen, params, frames, spec.fps, a);
      if (spec.rotation_noise_std > 0.0 || spec.translation_noise_std > 0.0)
        motion = add_noise(motion, spec.rotation_noise_std, spec.translation_noise_std, rng);
      ds.motions.push_back(std::move(motion));
      ds.splits.push_back(split_of[i]);
    }
  }
  return ds;
}

Motion add_noise(const Motion& motion, double rot_std, double trans_std, std::mt19937_64& rng) {
  if (rot_std < 0.0 || trans_std < 0.0) throw Error(ErrorCode::InvalidSpec, "noise std must be non-negative");
  if (rot_std == 0.0 && trans_std == 0.0) return motion;
  std::normal_distribution<double> normal(0.0, 1.0);
  Motion out = motion;
  for (auto& frame : out.frames) {
    for (auto& r : frame.rotations) {
      const Vec3 n(rot_std * normal(rng), rot_std * normal(rng), rot_std * normal(rng));
      r = rot::matrix_to_sixd(rot::sixd_to_matrix(r) * rot::axis_angle_to_matrix(rot::AxisAngle(n)));
    }
    frame.displacement += Vec3(trans_std * normal(rng), trans_std * normal(rng), trans_std * normal(rng));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'A', 'C', 'T', 'M', 'O', 'T', 'N', '\0'};

void write_doubles(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

}  // namespace

void save_motion(const Motion& motion, const std::filesystem::path& path) {
  if (motion.frames.empty()) throw Error(ErrorCode::EmptySequence, "refusing to save an empty motion");
  const int T = motion.length();
  const int J = motion.joint_count();
  std::vector<double> rot6d, trans;
  rot6d.reserve(static_cast<std::size_t>(T) * J * 6);
  trans.reserve(static_cast<std::size_t>(T) * 3);
  for (const auto& f : motion.frames) {
    for (const auto& r : f.rotations) rot6d.insert(rot6d.end(), r.values.data(), r.values.data() + 6);
    trans.insert(trans.end(), f.displacement.data(), f.displacement.data() + 3);
  }
  json header{{"format_version", kMotionFormatVersion},
              {"action", motion.action},
              {"fps", motion.fps},
              {"arrays", json::array({json{{"name", "rot6d"}, {"dtype", "<f8"}, {"shape", {T, J, 6}}},
                                      json{{"name", "trans"}, {"dtype", "<f8"}, {"shape", {T, 3}}}})}};
  const std::string text = header.dump();
  const uint64_t header_len = text.size();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::CorruptFile, "cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  write_doubles(out, rot6d);
  write_doubles(out, trans);
  if (!out) throw Error(ErrorCode::CorruptFile, "failed writing " + path.string());
}

Motion load_motion(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::CorruptFile, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto corrupt = [&](const std::string& why) { return Error(ErrorCode::CorruptFile, path.string() + ": " + why); };
  if (bytes.size() < sizeof(kMagic) + sizeof(uint64_t) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw corrupt("not a motion file");
  uint64_t header_len = 0;
  std::memcpy(&header_len, bytes.data() + sizeof(kMagic), sizeof(header_len));
  const std::size_t header_start = sizeof(kMagic) + sizeof(uint64_t);
  if (header_len > bytes.size() - header_start) throw corrupt("truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(header_start, header_len));
  } catch (const json::exception&) {
    throw corrupt("unreadable header");
  }
  const auto version = header.value("format_version", std::string{});
  if (version != kMotionFormatVersion)
    throw Error(ErrorCode::VersionMismatch, path.string() + ": expected " + kMotionFormatVersion + ", found '" + version + "'");
  int T = 0, J = 0;
  Motion m;
  try {
    m.action = header.at("action").get<int>();
    m.fps = header.at("fps").get<double>();
    const auto& arrays = header.at("arrays");
    const auto rshape = arrays.at(0).at("shape").get<std::vector<int>>();
    const auto tshape = arrays.at(1).at("shape").get<std::vector<int>>();
    if (rshape.size() != 3 || rshape[2] != 6 || tshape.size() != 2 || tshape[1] != 3 || tshape[0] != rshape[0])
      throw corrupt("inconsistent array shapes");
    T = rshape[0];
    J = rshape[1];
  } catch (const json::exception&) {
    throw corrupt("malformed header");
  }
  if (T < 1 || J < 1) throw corrupt("empty arrays");
  const std::size_t n_rot = static_cast<std::size_t>(T) * J * 6, n_trans = static_cast<std::size_t>(T) * 3;
  const std::size_t payload = (n_rot + n_trans) * sizeof(double);
  if (bytes.size() - header_start - header_len != payload) throw corrupt("payload size mismatch");
  const char* p = bytes.data() + header_start + header_len;
  std::vector<double> rot6d(n_rot), trans(n_trans);
  std::memcpy(rot6d.data(), p, n_rot * sizeof(double));
  std::memcpy(trans.data(), p + n_rot * sizeof(double), n_trans * sizeof(double));
  m.frames.resize(T);
  for (int t = 0; t < T; ++t) {
    auto& f = m.frames[t];
    f.rotations.resize(J);
    for (int j = 0; j < J; ++j)
      for (int k = 0; k < 6; ++k) f.rotations[j].values[k] = rot6d[(static_cast<std::size_t>(t) * J + j) * 6 + k];
    f.displacement = Vec3(trans[t * 3], trans[t * 3 + 1], trans[t * 3 + 2]);
  }
  return m;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "motions");
  json manifest{{"format_version", kDatasetFormatVersion}, {"action_names", dataset.action_names}, {"files", json::array()}};
  for (std::size_t i = 0; i < dataset.motions.size(); ++i) {
    const bool train = dataset.splits[i] == Split::Train;
    char name[64];
    std::snprintf(name, sizeof(name), "motions/%06zu.motion", i);
    save_motion(dataset.motions[i], dir / name);
    manifest["files"].push_back({{"path", name}, {"action", dataset.motions[i].action}, {"split", train ? "train" : "test"}});
  }
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::CorruptFile, "failed writing manifest in " + dir.string());
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error(ErrorCode::CorruptFile, "no manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception&) {
    throw Error(ErrorCode::CorruptFile, "unreadable manifest in " + dir.string());
  }
  if (manifest.value("format_version", std::string{}) != kDatasetFormatVersion)
    throw Error(ErrorCode::VersionMismatch, "dataset manifest version is not " + std::string(kDatasetFormatVersion));
  Dataset ds;
  try {
    ds.action_names = manifest.at("action_names").get<std::vector<std::string>>();
    for (const auto& f : manifest.at("files")) {
      auto m = load_motion(dir / f.at("path").get<std::string>());
      if (m.action != f.at("action").get<int>()) throw Error(ErrorCode::CorruptFile, "manifest/action mismatch");
      if (m.action < 0 || m.action >= ds.num_actions()) throw Error(ErrorCode::CorruptFile, "action label out of range");
      ds.motions.push_back(std::move(m));
      ds.splits.push_back(f.at("split").get<std::string>() == "train" ? Split::Train : Split::Test);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("malformed manifest: ") + e.what());
  }
  return ds;
}

std::vector<Motion> stratified_fraction(const std::vector<Motion>& motions, double fraction, uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorCode::InvalidSpec, "fraction must be in (0, 1]");
  if (fraction == 1.0) return motions;
  int num_actions = 0;
  for (const auto& m : motions) num_actions = std::max(num_actions, m.action + 1);
  std::mt19937_64 rng(seed);
  std::vector<Motion> out;
  for (int a = 0; a < num_actions; ++a) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < motions.size(); ++i)
      if (motions[i].action == a) idx.push_back(i);
    if (idx.empty()) continue;
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(fraction * idx.size())));
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    for (auto i : idx) out.push_back(motions[i]);
  }
  return out;
}

}  // namespace actor::data
