#include "actor/applications.hpp"

#include "actor/data.hpp"
#include "actor/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

namespace actor::apps {

body::Motion denoise(model::ActorModel& model, const body::Motion& motion, int action) {
  const auto code = model::encode(model, motion, action);
  return model::decode(model, code.mu, action, motion.length(), motion.fps);
}

double jitter_score(const body::Motion& motion, const body::Skeleton& skeleton) {
  const int t = motion.length();
  if (t < 3) throw Error(ErrorCode::TooShort, "jitter needs at least three frames, got " + std::to_string(t));
  std::vector<body::PointCloud> joints;
  joints.reserve(t);
  for (const auto& f : motion.frames) joints.push_back(body::forward_kinematics(skeleton, f, true));
  const auto j = joints.front().size();
  double total = 0.0;
  for (int k = 1; k + 1 < t; ++k)
    for (std::size_t i = 0; i < j; ++i) total += (joints[k + 1][i] - 2.0 * joints[k][i] + joints[k - 1][i]).squaredNorm();
  return total / (static_cast<double>(t - 2) * static_cast<double>(j));
}

double jitter_score(const body::Motion& motion) {
  static const body::Skeleton skeleton = body::Skeleton::standard();
  return jitter_score(motion, skeleton);
}

body::Motion interpolate_latent(model::ActorModel& model, const body::Motion& m1, const body::Motion& m2, int action,
                                double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in [0, 1]");
  if (m1.action != action || m2.action != action)
    throw Error(ErrorCode::ActionMismatch, "both motions must carry action " + std::to_string(action));
  const auto a = model::encode(model, m1, action).mu;
  const auto b = model::encode(model, m2, action).mu;
  return model::decode(model, (1.0 - alpha) * a + alpha * b, action, m1.length(), m1.fps);
}

std::string_view mix_name(TrainingMix mix) {
  switch (mix) {
    case TrainingMix::RealOnly: return "real_only";
    case TrainingMix::GenOnly: return "gen_only";
    case TrainingMix::InterpOnly: return "interp_only";
    case TrainingMix::RealPlusGen: return "real_plus_gen";
  }
  return "?";
}

namespace {

std::vector<int> balanced_actions(std::size_t count, int num_actions, int offset) {
  std::vector<int> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = static_cast<int>((k + offset) % num_actions);
  return out;
}

std::vector<body::Motion> generated_set(model::ActorModel& model, std::size_t count, int duration, uint64_t seed) {
  const int a = model->config().num_actions;
  auto gen = model::make_generator(seed);
  return model::generate_batch(model, balanced_actions(count, a, 0), std::vector<int>(count, duration), gen);
}

std::vector<body::Motion> interpolated_set(model::ActorModel& model, const std::vector<body::Motion>& real,
                                           uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < real.size(); ++i) by_class[real[i].action].push_back(i);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> alpha(0.0, 1.0);
  std::vector<body::Motion> out;
  out.reserve(real.size());
  for (const auto& m : real) {
    const auto& peers = by_class[m.action];
    const auto& other = real[peers[std::uniform_int_distribution<std::size_t>(0, peers.size() - 1)(rng)]];
    out.push_back(interpolate_latent(model, m, other, m.action, alpha(rng)));
  }
  return out;
}

eval::Recognizer train_mix(const std::vector<body::Motion>& real, model::ActorModel& model, const AugmentConfig& c) {
  auto rc = c.recognizer;
  rc.num_actions = model->config().num_actions;
  rc.num_joints = model->config().num_joints;
  switch (c.mix) {
    case TrainingMix::RealOnly: return eval::train_recognizer(real, rc);
    case TrainingMix::GenOnly: return eval::train_recognizer(generated_set(model, real.size(), c.duration, c.seed), rc);
    case TrainingMix::InterpOnly: return eval::train_recognizer(interpolated_set(model, real, c.seed), rc);
    case TrainingMix::RealPlusGen: {
      const int half = std::max(1, rc.batch_size / 2);
      const auto per_epoch = static_cast<int>((real.size() + half - 1) / half);
      const int steps = std::max(rc.epochs * per_epoch, rc.min_steps);
      std::vector<std::size_t> order(real.size());
      std::size_t cursor = real.size();
      const int a = rc.num_actions;
      return eval::train_recognizer(
          [&](std::mt19937_64& rng) {
            std::vector<body::Motion> batch;
            for (int k = 0; k < half; ++k) {
              if (cursor >= real.size()) {
                for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
              }
              batch.push_back(real[order[cursor++]]);
            }
            const int offset = std::uniform_int_distribution<int>(0, a - 1)(rng);
            auto gen = model::make_generator(rng());
            auto fresh = model::generate_batch(model, balanced_actions(half, a, offset),
                                               std::vector<int>(half, c.duration), gen);
            batch.insert(batch.end(), fresh.begin(), fresh.end());
            return batch;
          },
          steps, rc);
    }
  }
  throw Error(ErrorCode::InvalidConfig, "unknown training mix");
}

}  // namespace

AugmentResult augment_train_classifier(const std::vector<body::Motion>& real_train,
                                       const std::vector<body::Motion>& real_test, model::ActorModel model,
                                       const AugmentConfig& config) {
  if (!(config.fraction > 0.0 && config.fraction <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "fraction must lie in (0, 1]");
  const auto real = config.fraction < 1.0 ? data::stratified_fraction(real_train, config.fraction, config.seed) : real_train;
  AugmentResult result;
  result.recognizer = train_mix(real, model, config);
  result.test_accuracy = eval::accuracy(result.recognizer, real_test);
  return result;
}

AccuracyTable augmentation_table(const std::vector<body::Motion>& real_train, const std::vector<body::Motion>& real_test,
                                 model::ActorModel model, const AugmentConfig& base) {
  std::vector<body::Motion> train_denoised, test_denoised;
  for (const auto& m : real_train) train_denoised.push_back(denoise(model, m, m.action));
  for (const auto& m : real_test) test_denoised.push_back(denoise(model, m, m.action));

  AccuracyTable t;
  t.columns = {"Real_orig", "Real_denoised"};
  t.note = "Real_denoised test motions are denoised with their ground-truth labels; "
           "that column is not a benchmark improvement.";
  auto add_row = [&](const std::string& label, const std::vector<body::Motion>& train, TrainingMix mix) {
    auto c = base;
    c.mix = mix;
    auto r = train_mix(train, model, c);
    t.rows.push_back(label);
    t.values.push_back({eval::accuracy(r, real_test), eval::accuracy(r, test_denoised)});
  };
  add_row("Real_orig", real_train, TrainingMix::RealOnly);
  add_row("Real_denoised", train_denoised, TrainingMix::RealOnly);
  add_row("Real_interpolated", real_train, TrainingMix::InterpOnly);
  add_row("Generated", real_train, TrainingMix::GenOnly);
  add_row("Real_orig+Generated", real_train, TrainingMix::RealPlusGen);
  return t;
}

nlohmann::json AccuracyTable::to_json() const {
  nlohmann::json j{{"columns", columns}, {"note", note}, {"rows", nlohmann::json::array()}};
  for (std::size_t r = 0; r < rows.size(); ++r) j["rows"].push_back({{"train", rows[r]}, {"accuracy", values[r]}});
  return j;
}

std::string AccuracyTable::table() const {
  std::size_t width = 10;
  for (const auto& r : rows) width = std::max(width, r.size());
  std::ostringstream os;
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(s.size(), w), ' ');
    return s;
  };
  os << "| " << pad("Train \\ Test", width) << " |";
  for (const auto& c : columns) os << ' ' << pad(c, 13) << " |";
  os << '\n' << '|' << std::string(width + 2, '-') << '|';
  for (std::size_t c = 0; c < columns.size(); ++c) os << std::string(15, '-') << '|';
  os << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    os << "| " << pad(rows[r], width) << " |";
    for (double v : values[r]) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.1f", v);
      os << ' ' << pad(buf, 13) << " |";
    }
    os << '\n';
  }
  if (!note.empty()) os << "\nNote: " << note << '\n';
  return os.str();
}

}  // namespace actor::apps
