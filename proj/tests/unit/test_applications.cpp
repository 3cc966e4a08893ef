#include "actor/applications.hpp"
#include "actor/data.hpp"
#include "actor/error.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace actor;
using rot::Vec3;

namespace {

body::Motion still_motion(int frames, int joints) {
  body::Motion m;
  m.frames.assign(frames, body::FramePose{std::vector<rot::Rot6D>(joints), Vec3::Zero()});
  return m;
}

model::ActorModel tiny_model() {
  torch::manual_seed(3);
  auto c = testing::tiny_config(24, 3);
  auto m = model::build_variant(c);
  m->to(torch::kDouble);
  return m;
}

double motion_distance(const body::Motion& a, const body::Motion& b) {
  return (body::rotations_tensor(a) - body::rotations_tensor(b)).norm().item<double>();
}

}  // namespace

TEST_CASE("jitter of smooth motions") {
  auto sk = body::Skeleton::chain(4);
  auto m = still_motion(10, 4);
  CHECK(apps::jitter_score(m, sk) == 0.0);

  for (int t = 0; t < 10; ++t) m.frames[t].displacement = Vec3(0.3 * t, -0.1 * t, 0.05 * t);
  CHECK(apps::jitter_score(m, sk) < 1e-24);

  // Rigid sinusoidal sway: every joint's second difference is
  // -4 sin^2(w/2) A sin(w t).
  const double A = 0.2, w = 0.7;
  double expect = 0.0;
  for (int t = 0; t < 10; ++t) m.frames[t].displacement = Vec3(A * std::sin(w * t), 0, 0);
  for (int t = 1; t < 9; ++t) expect += std::pow(4 * std::pow(std::sin(w / 2), 2) * A * std::sin(w * t), 2);
  expect /= 8;
  CHECK(std::abs(apps::jitter_score(m, sk) - expect) < 1e-6);

  CHECK_THROWS_AS(apps::jitter_score(still_motion(2, 4), sk), Error);
}

TEST_CASE("noise raises jitter") {
  data::GeneratorParams p;
  auto clean = data::synthesize(data::find_generator("squat"), p, 40, 20.0, 2);
  std::mt19937_64 rng(1);
  auto noisy = data::add_noise(clean, 0.05, 0.01, rng);
  CHECK(apps::jitter_score(noisy) > 2 * apps::jitter_score(clean));
}

TEST_CASE("denoise keeps length and is deterministic") {
  auto model = tiny_model();
  std::mt19937_64 rng(2);
  for (int T : {60, 80, 100}) {
    auto m = testing::random_motion(rng, T, 24, 1);
    auto a = apps::denoise(model, m, 1);
    auto b = apps::denoise(model, m, 1);
    CHECK(a.length() == T);
    CHECK(a.action == 1);
    CHECK(motion_distance(a, b) == 0.0);
  }
}

TEST_CASE("latent interpolation") {
  auto model = tiny_model();
  std::mt19937_64 rng(3);
  auto m1 = testing::random_motion(rng, 30, 24, 2);
  auto m2 = testing::random_motion(rng, 40, 24, 2);
  CHECK(motion_distance(apps::interpolate_latent(model, m1, m2, 2, 0.0), apps::denoise(model, m1, 2)) < 1e-12);
  auto half = apps::interpolate_latent(model, m1, m2, 2, 0.5);
  CHECK(half.length() == 30);  // first motion's duration
  CHECK_NOTHROW(body::validate_motion(half, 24));
  CHECK(apps::interpolate_latent(model, m1, m2, 2, 1.0).length() == 30);

  auto x = apps::interpolate_latent(model, m1, m2, 2, 0.3);
  auto y = apps::interpolate_latent(model, m1, m2, 2, 0.301);
  CHECK(motion_distance(x, y) < 1e-2 * body::rotations_tensor(x).norm().item<double>());

  try {
    apps::interpolate_latent(model, m1, m2, 2, 1.5);
    FAIL("expected AlphaOutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AlphaOutOfRange);
  }
  auto other = m2;
  other.action = 0;
  try {
    apps::interpolate_latent(model, m1, other, 2, 0.5);
    FAIL("expected ActionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ActionMismatch);
  }
}

TEST_CASE("mix names") {
  CHECK(apps::mix_name(apps::TrainingMix::RealOnly) == "real_only");
  CHECK(apps::mix_name(apps::TrainingMix::GenOnly) == "gen_only");
  CHECK(apps::mix_name(apps::TrainingMix::InterpOnly) == "interp_only");
  CHECK(apps::mix_name(apps::TrainingMix::RealPlusGen) == "real_plus_gen");
}
