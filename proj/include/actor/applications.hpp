#pragma once

#include "actor/body.hpp"
#include "actor/eval.hpp"
#include "actor/model.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace actor::apps {

// Encode to the posterior mean, decode with the same action and length.
body::Motion denoise(model::ActorModel& model, const body::Motion& motion, int action);

// Mean over interior frames and joints of ||p[t+1] - 2 p[t] + p[t-1]||^2 for
// world joint positions. Throws TooShort below three frames.
double jitter_score(const body::Motion& motion, const body::Skeleton& skeleton);
double jitter_score(const body::Motion& motion);  // standard skeleton

// Decodes (1 - alpha) mu1 + alpha mu2 with m1's duration.
body::Motion interpolate_latent(model::ActorModel& model, const body::Motion& m1, const body::Motion& m2, int action,
                                double alpha);

enum class TrainingMix { RealOnly, GenOnly, InterpOnly, RealPlusGen };
std::string_view mix_name(TrainingMix mix);

struct AugmentConfig {
  TrainingMix mix = TrainingMix::RealOnly;
  double fraction = 1.0;  // stratified share of the real training set
  int duration = 60;      // length of generated motions
  eval::RecognizerConfig recognizer;
  uint64_t seed = 0;
};

struct AugmentResult {
  eval::Recognizer recognizer{nullptr};
  double test_accuracy = 0.0;
};

// Trains the evaluation recognizer on the chosen mixture and scores it on
// real_test. RealPlusGen minibatches are half real, half freshly generated
// with balanced labels; GenOnly and InterpOnly build a set the size of the
// (fraction-reduced) real set.
AugmentResult augment_train_classifier(const std::vector<body::Motion>& real_train,
                                       const std::vector<body::Motion>& real_test, model::ActorModel model,
                                       const AugmentConfig& config);

// Train-set rows x test-set columns accuracy matrix.
struct AccuracyTable {
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> values;  // percent
  std::string note;

  nlohmann::json to_json() const;
  std::string table() const;
};

// Rows Real_orig, Real_denoised, Real_interpolated, Generated,
// Real_orig+Generated; columns Real_orig, Real_denoised (the test set
// denoised with its known labels).
AccuracyTable augmentation_table(const std::vector<body::Motion>& real_train, const std::vector<body::Motion>& real_test,
                                 model::ActorModel model, const AugmentConfig& base);

}  // namespace actor::apps
