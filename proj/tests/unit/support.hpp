#pragma once

#include "actor/body.hpp"
#include "actor/model.hpp"
#include "actor/rotations.hpp"

#include <random>

namespace testing {

inline actor::body::Motion random_motion(std::mt19937_64& rng, int frames, int joints, int action = 0) {
  std::normal_distribution<double> n(0.0, 1.0);
  actor::body::Motion m;
  m.action = action;
  for (int t = 0; t < frames; ++t) {
    actor::body::FramePose f;
    for (int j = 0; j < joints; ++j) f.rotations.push_back(actor::rot::matrix_to_sixd(actor::rot::random_rotation(rng)));
    f.displacement = actor::rot::Vec3(n(rng), n(rng), n(rng)) * 0.1;
    m.frames.push_back(f);
  }
  return m;
}

inline actor::model::ModelConfig tiny_config(int joints = 3, int actions = 3) {
  actor::model::ModelConfig c;
  c.latent_dim = 8;
  c.layers = 1;
  c.heads = 2;
  c.ff_dim = 16;
  c.dropout = 0.0;
  c.num_actions = actions;
  c.num_joints = joints;
  return c;
}

}  // namespace testing
