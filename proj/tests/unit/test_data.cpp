#include "actor/data.hpp"
#include "actor/error.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace actor;
using rot::Vec3;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("actor_data_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool same_motion(const body::Motion& a, const body::Motion& b) {
  if (a.length() != b.length() || a.action != b.action || a.fps != b.fps) return false;
  for (int t = 0; t < a.length(); ++t) {
    if (a.frames[t].displacement != b.frames[t].displacement) return false;
    for (int j = 0; j < a.joint_count(); ++j)
      if (a.frames[t].rotations[j].values != b.frames[t].rotations[j].values) return false;
  }
  return true;
}

data::DatasetSpec small_spec() {
  data::DatasetSpec s;
  s.sequences_per_action = 10;
  s.duration_min = s.duration_max = 20;
  s.seed = 3;
  return s;
}

}  // namespace

TEST_CASE("generation is deterministic") {
  auto a = data::generate_dataset(small_spec());
  auto b = data::generate_dataset(small_spec());
  REQUIRE(a.motions.size() == b.motions.size());
  for (std::size_t i = 0; i < a.motions.size(); ++i) {
    CHECK(same_motion(a.motions[i], b.motions[i]));
    CHECK(a.splits[i] == b.splits[i]);
  }
  auto other = small_spec();
  other.seed = 4;
  CHECK_FALSE(same_motion(data::generate_dataset(other).motions[0], a.motions[0]));
}

TEST_CASE("stratified 80/20 split") {
  data::DatasetSpec s;
  s.duration_min = s.duration_max = 8;
  auto ds = data::generate_dataset(s);
  CHECK(ds.motions.size() == 500);
  CHECK(ds.train().size() == 400);
  CHECK(ds.test().size() == 100);
  std::vector<int> train(5), test(5);
  for (const auto& m : ds.train()) ++train[m.action];
  for (const auto& m : ds.test()) ++test[m.action];
  for (int a = 0; a < 5; ++a) {
    CHECK(train[a] == 80);
    CHECK(test[a] == 20);
  }
}

TEST_CASE("noise-free motions follow the wave formula") {
  data::GeneratorParams p{1.1, 0.9, 0.4};
  const double fps = 20.0;
  auto m = data::synthesize(data::find_generator("wave_left_arm"), p, 30, fps, 0);
  for (int t = 0; t < 30; ++t) {
    double angle = 0.8 + 0.6 * 1.1 * std::sin(2 * std::numbers::pi * 1.2 * 0.9 * t / fps + 0.4);
    Eigen::Matrix3d expect = Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix();
    auto got = rot::sixd_to_matrix(m.frames[t].rotations[18]).m;  // left elbow
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(m.frames[t].displacement.norm() == 0.0);
  }
}

TEST_CASE("noise-free reach drifts forward from the origin") {
  data::GeneratorParams p{1.0, 1.0, 0.0};
  auto m = data::synthesize(data::find_generator("reach_forward"), p, 40, 20.0, 0);
  CHECK(m.frames[0].displacement.norm() == 0.0);
  for (int t = 0; t < 40; ++t) {
    double time = t / 20.0;
    double r = 0.5 * (1 - std::cos(2 * std::numbers::pi * 0.4 * time));
    CHECK(m.frames[t].displacement.z() == doctest::Approx(0.25 * r + 0.05 * time).epsilon(1e-12));
  }
}

TEST_CASE("squat and walk move the root vertically") {
  data::GeneratorParams p;
  for (const char* name : {"squat", "walk_in_place"}) {
    auto m = data::synthesize(data::find_generator(name), p, 40, 20.0, 0);
    double lo = 0, hi = 0;
    for (const auto& f : m.frames) {
      lo = std::min(lo, f.displacement.y());
      hi = std::max(hi, f.displacement.y());
      CHECK(f.displacement.x() == 0.0);
    }
    CHECK(hi - lo > 0.01);
  }
}

TEST_CASE("generated motions are valid and already frontal") {
  auto ds = data::generate_dataset(small_spec());
  for (const auto& m : ds.motions) {
    CHECK_NOTHROW(body::validate_motion(m, 24));
    auto c = body::canonicalize_frontal(m);
    auto cc = body::canonicalize_frontal(c);
    for (int t = 0; t < m.length(); t += 5)
      CHECK(rot::geodesic_distance(rot::sixd_to_matrix(c.frames[t].rotations[0]),
                                   rot::sixd_to_matrix(cc.frames[t].rotations[0])) < 1e-6);
  }
}

TEST_CASE("noise-free classes are separable by nearest centroid") {
  data::DatasetSpec spec;
  spec.rotation_noise_std = spec.translation_noise_std = 0.0;
  auto ds = data::generate_dataset(spec);
  auto sk = body::Skeleton::standard();
  auto features = [&](const body::Motion& m) {
    Eigen::VectorXd v(m.length() * 24 * 3);
    int k = 0;
    for (const auto& f : m.frames)
      for (const auto& p : body::forward_kinematics(sk, f, true)) v.segment<3>(3 * k++) = p;
    return v;
  };
  std::vector<Eigen::VectorXd> centroid(5, Eigen::VectorXd::Zero(60 * 72));
  std::vector<int> count(5);
  for (const auto& m : ds.train()) {
    centroid[m.action] += features(m);
    ++count[m.action];
  }
  for (int a = 0; a < 5; ++a) centroid[a] /= count[a];
  int correct = 0;
  auto test = ds.test();
  for (const auto& m : test) {
    auto f = features(m);
    int best = 0;
    for (int a = 1; a < 5; ++a)
      if ((f - centroid[a]).squaredNorm() < (f - centroid[best]).squaredNorm()) best = a;
    correct += best == m.action;
  }
  INFO("correct ", correct, " of ", test.size());
  CHECK(100.0 * correct / test.size() > 95.0);
}

TEST_CASE("invalid specs") {
  auto s = small_spec();
  s.actions = {"squat"};
  CHECK_THROWS_AS(data::generate_dataset(s), Error);
  s = small_spec();
  s.duration_min = 4;
  CHECK_THROWS_AS(data::generate_dataset(s), Error);
  s = small_spec();
  s.rotation_noise_std = -1;
  CHECK_THROWS_AS(data::generate_dataset(s), Error);
  s = small_spec();
  s.actions.push_back("cartwheel");
  CHECK_THROWS_AS(data::generate_dataset(s), Error);
}

TEST_CASE("noise") {
  std::mt19937_64 rng(1);
  auto m = testing::random_motion(rng, 5, 24);
  auto same = data::add_noise(m, 0.0, 0.0, rng);
  CHECK(same_motion(m, same));

  std::mt19937_64 r1(9), r2(9);
  CHECK(same_motion(data::add_noise(m, 0.1, 0.1, r1), data::add_noise(m, 0.1, 0.1, r2)));

  // The composed perturbation angle is |n| for n ~ N(0, s^2 I3): mean 2 s sqrt(2/pi).
  const double s = 0.05;
  body::Motion still;
  still.frames.assign(10000, body::FramePose{{rot::Rot6D()}, Vec3::Zero()});
  auto noisy = data::add_noise(still, s, 0.01, rng);
  double mean = 0.0, trans = 0.0;
  for (const auto& f : noisy.frames) {
    mean += rot::geodesic_distance(rot::RotMatrix::identity(), rot::sixd_to_matrix(f.rotations[0]));
    trans += f.displacement.squaredNorm();
  }
  mean /= 10000;
  CHECK(std::abs(mean / (2 * s * std::sqrt(2 / std::numbers::pi)) - 1.0) < 0.05);
  CHECK(std::abs(std::sqrt(trans / 30000) / 0.01 - 1.0) < 0.05);
  CHECK(noisy.action == still.action);
}

TEST_CASE("motion file round trip") {
  std::mt19937_64 rng(2);
  auto m = testing::random_motion(rng, 7, 24, 3);
  m.fps = 30.0;
  auto path = scratch("m.motion");
  data::save_motion(m, path);
  CHECK(same_motion(m, data::load_motion(path)));

  auto bytes = file_bytes(path);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
  }
  try {
    data::load_motion(path);
    FAIL("expected CorruptFile");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CorruptFile);
  }

  auto pos = bytes.find("motion-v1");
  REQUIRE(pos != std::string::npos);
  bytes[pos + 8] = '9';
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  try {
    data::load_motion(path);
    FAIL("expected VersionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::VersionMismatch);
  }
  CHECK_THROWS_AS(data::load_motion(scratch("missing.motion")), Error);
}

TEST_CASE("dataset directory round trip") {
  auto ds = data::generate_dataset(small_spec());
  auto dir = scratch("ds");
  data::save_dataset(ds, dir);
  auto back = data::load_dataset(dir);
  CHECK(back.action_names == ds.action_names);
  REQUIRE(back.motions.size() == ds.motions.size());
  for (std::size_t i = 0; i < ds.motions.size(); ++i) {
    CHECK(same_motion(back.motions[i], ds.motions[i]));
    CHECK(back.splits[i] == ds.splits[i]);
  }
  fs::remove_all(dir.parent_path());
}

TEST_CASE("stratified fraction keeps every class") {
  auto train = data::generate_dataset(small_spec()).train();
  auto part = data::stratified_fraction(train, 0.1, 1);
  std::vector<int> count(5);
  for (const auto& m : part) ++count[m.action];
  for (int c : count) CHECK(c >= 1);
  CHECK(part.size() <= 10);
}
