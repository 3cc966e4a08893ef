#include "actor/error.hpp"
#include "actor/losses.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace actor;
using rot::Vec3;

namespace {

const body::Skeleton& skeleton() {
  static const auto s = body::Skeleton::standard();
  return s;
}

const body::RigidSkeletonBody& body_model() {
  static const body::RigidSkeletonBody b(skeleton());
  return b;
}

// Sum over frames of squared distances between root-centred FK point sets.
double fk_oracle(const body::Motion& a, const body::Motion& b, bool surface) {
  double s = 0.0;
  for (int t = 0; t < a.length(); ++t) {
    auto pa = surface ? body::surface_points(skeleton(), a.frames[t]) : body::forward_kinematics(skeleton(), a.frames[t], false);
    auto pb = surface ? body::surface_points(skeleton(), b.frames[t]) : body::forward_kinematics(skeleton(), b.frames[t], false);
    for (std::size_t i = 0; i < pa.size(); ++i)
      for (int k = 0; k < 3; ++k) s += (pa[i][k] - pb[i][k]) * (pa[i][k] - pb[i][k]);
  }
  return s;
}

}  // namespace

TEST_CASE("pose loss") {
  std::mt19937_64 rng(1);
  auto gt = testing::random_motion(rng, 5, 24);
  CHECK(losses::loss_pose(gt, gt) == 0.0);
  auto off = gt;
  off.frames[2].rotations[7].values[3] += 1.0;
  CHECK(losses::loss_pose(gt, off) == doctest::Approx(1.0).epsilon(1e-12));

  auto pred = testing::random_motion(rng, 5, 24);
  double s = 0.0;
  for (int t = 0; t < 5; ++t) {
    for (int j = 0; j < 24; ++j)
      for (int k = 0; k < 6; ++k) {
        double d = gt.frames[t].rotations[j].values[k] - pred.frames[t].rotations[j].values[k];
        s += d * d;
      }
    for (int k = 0; k < 3; ++k) {
      double d = gt.frames[t].displacement[k] - pred.frames[t].displacement[k];
      s += d * d;
    }
  }
  CHECK(std::abs(losses::loss_pose(gt, pred) - s) < 1e-9);
  CHECK_THROWS_AS(losses::loss_pose(gt, testing::random_motion(rng, 4, 24)), Error);
}

TEST_CASE("vertex and joint losses") {
  std::mt19937_64 rng(2);
  auto gt = testing::random_motion(rng, 4, 24);
  auto pred = testing::random_motion(rng, 4, 24);
  CHECK(losses::loss_vertices(gt, gt, body_model()) == 0.0);
  CHECK(losses::loss_joints(gt, gt, body_model()) == 0.0);

  auto shifted = gt;
  for (auto& f : shifted.frames) f.displacement += Vec3(1, 0, 0);
  CHECK(losses::loss_vertices(gt, shifted, body_model()) == 0.0);
  CHECK(losses::loss_joints(gt, shifted, body_model()) == 0.0);

  double v = losses::loss_vertices(gt, pred, body_model());
  double j = losses::loss_joints(gt, pred, body_model());
  CHECK(std::abs(v - fk_oracle(gt, pred, true)) < 1e-6);
  CHECK(std::abs(j - fk_oracle(gt, pred, false)) < 1e-6);

  // A common translation of both motions changes nothing.
  auto gt2 = gt, pred2 = pred;
  for (auto* m : {&gt2, &pred2})
    for (auto& f : m->frames) f.displacement += Vec3(0.3, -2, 5);
  CHECK(std::abs(losses::loss_vertices(gt2, pred2, body_model()) - v) < 1e-9);
  CHECK(std::abs(losses::loss_joints(gt2, pred2, body_model()) - j) < 1e-9);
}

TEST_CASE("kl closed forms") {
  CHECK(losses::kl_loss(std::vector<double>{0, 0}, std::vector<double>{0, 0}) == 0.0);
  CHECK(losses::kl_loss(std::vector<double>{1}, std::vector<double>{0}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(losses::kl_loss(std::vector<double>{1}, std::vector<double>{0, 0}), Error);
  auto mu = torch::tensor({{1.0, 0.0}, {0.0, 0.0}}, torch::kDouble);
  auto lv = torch::zeros({2, 2}, torch::kDouble);
  CHECK(losses::kl_loss(mu, lv).item<double>() == doctest::Approx(0.25));  // batch mean
}

TEST_CASE("kl matches a Monte-Carlo estimate") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.5, 1.0);
  const int d = 4, draws = 1000000;
  for (int pair = 0; pair < 20; ++pair) {
    std::vector<double> mu(d), lv(d);
    for (int i = 0; i < d; ++i) {
      mu[i] = n(rng);
      lv[i] = u(rng);
    }
    // E_q[log q(z) - log p(z)] with z ~ q.
    double acc = 0.0;
    for (int s = 0; s < draws; ++s) {
      double lr = 0.0;
      for (int i = 0; i < d; ++i) {
        double e = n(rng);
        double z = mu[i] + std::exp(0.5 * lv[i]) * e;
        lr += -0.5 * lv[i] - 0.5 * e * e + 0.5 * z * z;
      }
      acc += lr;
    }
    double closed = losses::kl_loss(mu, lv);
    CHECK(std::abs(acc / draws - closed) / closed < 0.01);
  }
}

TEST_CASE("kl is non-negative and convex in the mean") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(3), b(3), mid(3), lv(3);
    for (int i = 0; i < 3; ++i) {
      a[i] = n(rng);
      b[i] = n(rng);
      mid[i] = 0.5 * (a[i] + b[i]);
      lv[i] = n(rng);
    }
    CHECK(losses::kl_loss(a, lv) >= 0.0);
    CHECK(losses::kl_loss(mid, lv) <= 0.5 * (losses::kl_loss(a, lv) + losses::kl_loss(b, lv)) + 1e-12);
  }
}

TEST_CASE("total loss") {
  std::mt19937_64 rng(5);
  auto gt = testing::random_motion(rng, 3, 24);
  losses::LossWeights w;
  CHECK(losses::total_loss(gt, gt, {0.0}, {0.0}, w, body_model()).total == 0.0);

  losses::LossWeights kl_only;
  kl_only.rotations = kl_only.vertices = false;
  kl_only.displacement = true;
  CHECK(losses::total_loss(gt, gt, {1.0}, {0.0}, kl_only, body_model()).total == doctest::Approx(5e-6).epsilon(1e-12));

  auto pred = testing::random_motion(rng, 3, 24);
  std::vector<double> mu{0.3, -0.1}, lv{0.2, -0.4};
  double expect = losses::loss_pose(gt, pred) + losses::loss_vertices(gt, pred, body_model()) + 1e-5 * losses::kl_loss(mu, lv);
  CHECK(std::abs(losses::total_loss(gt, pred, mu, lv, w, body_model()).total - expect) < 1e-9);

  losses::LossWeights none;
  none.rotations = none.displacement = none.vertices = none.joints = false;
  CHECK_THROWS_AS(none.validate(), Error);
}

TEST_CASE("batched loss agrees with the motion-level terms") {
  std::mt19937_64 rng(6);
  model::ModelConfig c;
  c.num_actions = 1;
  auto gt = testing::random_motion(rng, 7, 24);
  auto pred = testing::random_motion(rng, 7, 24);
  auto fg = model::motion_features(gt, c).unsqueeze(0);
  auto fp = model::motion_features(pred, c).unsqueeze(0);
  auto valid = torch::ones({1, 7}, torch::kBool);
  auto mu = torch::zeros({1, 4}, torch::kDouble), lv = torch::zeros({1, 4}, torch::kDouble);
  losses::LossWeights w;
  w.joints = true;
  auto l = losses::compute(c, body_model(), fg, fp, valid, mu, lv, w);
  CHECK(l.rotations.item<double>() == doctest::Approx(losses::loss_rotations(gt, pred)).epsilon(1e-9));
  CHECK(l.displacement.item<double>() == doctest::Approx(losses::loss_displacement(gt, pred)).epsilon(1e-9));
  CHECK(l.vertices.item<double>() == doctest::Approx(losses::loss_vertices(gt, pred, body_model())).epsilon(1e-9));
  CHECK(l.joints.item<double>() == doctest::Approx(losses::loss_joints(gt, pred, body_model())).epsilon(1e-9));

  w.time_reduction = losses::TimeReduction::Mean;
  auto m = losses::compute(c, body_model(), fg, fp, valid, mu, lv, w);
  CHECK(m.rotations.item<double>() == doctest::Approx(l.rotations.item<double>() / 7).epsilon(1e-12));
  w.time_reduction = losses::TimeReduction::ElementMean;
  auto e = losses::compute(c, body_model(), fg, fp, valid, mu, lv, w);
  CHECK(e.rotations.item<double>() == doctest::Approx(l.rotations.item<double>() / (7 * 24 * 6)).epsilon(1e-12));
  CHECK(e.vertices.item<double>() == doctest::Approx(l.vertices.item<double>() / (7 * 192 * 3)).epsilon(1e-12));
}

TEST_CASE("padded frames contribute nothing") {
  std::mt19937_64 rng(7);
  model::ModelConfig c;
  auto gt = testing::random_motion(rng, 5, 24), pred = testing::random_motion(rng, 5, 24);
  auto fg = torch::cat({model::motion_features(gt, c), torch::randn({3, c.frame_dim()}, torch::kDouble)}).unsqueeze(0);
  auto fp = torch::cat({model::motion_features(pred, c), torch::randn({3, c.frame_dim()}, torch::kDouble)}).unsqueeze(0);
  auto valid = model::length_mask({5, 8}).narrow(0, 0, 1);
  auto mu = torch::zeros({1, 2}, torch::kDouble);
  auto l = losses::compute(c, body_model(), fg, fp, valid, mu, mu, {});
  CHECK(l.rotations.item<double>() == doctest::Approx(losses::loss_rotations(gt, pred)).epsilon(1e-9));
}
