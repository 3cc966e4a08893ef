#pragma once

#include "actor/body.hpp"
#include "actor/model.hpp"

#include <Eigen/Dense>
#include <json.hpp>
#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace actor::eval {

enum class FeatureSource { RealTrain, RealTest, Generated };

struct FeatureSet {
  Eigen::MatrixXd features;  // N x F
  std::vector<int> labels;
  FeatureSource source = FeatureSource::Generated;

  int64_t size() const { return features.rows(); }
  int64_t dim() const { return features.cols(); }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Recognizer: stacked GRU over per-frame 6D rotations (+ displacement); the
// final hidden state of the top layer is the feature vector.

struct RecognizerConfig {
  int num_actions = 0;  // taken from the training labels when 0
  int num_joints = 24;
  int hidden = 64;
  int layers = 2;
  int epochs = 40;
  int batch_size = 32;
  double learning_rate = 1e-3;
  int min_crop = 20;   // shortest random crop seen during training
  int min_steps = 0;   // lower bound on optimizer steps for small sets
  uint64_t seed = 0;
};

class RecognizerImpl : public torch::nn::Module {
 public:
  explicit RecognizerImpl(const RecognizerConfig& config);

  // features [B, T, F], valid [B, T] -> (features [B, hidden], logits [B, A])
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& features, const torch::Tensor& valid);

  const RecognizerConfig& config() const { return config_; }

 private:
  RecognizerConfig config_;
  torch::nn::GRU gru_{nullptr};
  torch::nn::Linear head_{nullptr};
};

TORCH_MODULE(Recognizer);

// Per-frame recognizer input for a motion, [T, J*6 + 3] float.
torch::Tensor recognizer_input(const body::Motion& motion);

// Trains on random crops of the labeled motions. Throws InsufficientData
// with fewer than two classes.
Recognizer train_recognizer(const std::vector<body::Motion>& motions, RecognizerConfig config);

// Custom minibatch mixtures: `next_batch` is called once per optimizer step.
// config.num_actions must be set.
using BatchSource = std::function<std::vector<body::Motion>(std::mt19937_64& rng)>;
Recognizer train_recognizer(const BatchSource& next_batch, int steps, RecognizerConfig config);

FeatureSet extract_features(Recognizer& recognizer, const std::vector<body::Motion>& motions,
                            FeatureSource source = FeatureSource::Generated);
std::vector<int> predict(Recognizer& recognizer, const std::vector<body::Motion>& motions);

// Percent of argmax-correct predictions; ties go to the lowest class index.
double accuracy(Recognizer& recognizer, const std::vector<body::Motion>& motions);
double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);
int argmax(const float* logits, int count);

void save_recognizer(Recognizer& recognizer, const std::filesystem::path& path);
Recognizer load_recognizer(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Metrics

inline constexpr double kEigenFloor = 1e-10;
inline constexpr double kCovarianceRidge = 1e-6;  // added when N <= F

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // unbiased
};
Moments moments(const Eigen::MatrixXd& features);

// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}).
double frechet_distance(const Moments& a, const Moments& b);
double fid(const FeatureSet& a, const FeatureSet& b);
double fid(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Mean L2 distance over `pairs` index pairs drawn uniformly with replacement.
double diversity(const Eigen::MatrixXd& features, int pairs, std::mt19937_64& rng);
// Mean over classes of the within-class diversity.
double multimodality(const Eigen::MatrixXd& features, const std::vector<int>& labels, int pairs_per_class,
                     std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Multi-seed protocol

struct Stat {
  double mean = 0.0;
  double ci95 = 0.0;
};
// mean and 1.96 * std / sqrt(n), population std.
Stat summarize(const std::vector<double>& values);

struct MetricRow {
  std::string label;
  Stat fid_train, fid_test, accuracy, diversity, multimodality;
};

struct EvalReport {
  std::vector<MetricRow> rows;
  int seeds = 0;
  int per_action_count = 0;

  nlohmann::json to_json() const;
  // One row per method, value^{±ci} cells.
  std::string table() const;
};

struct EvalConfig {
  int per_action_count = 40;
  int duration = 60;
  int seeds = 20;
  int diversity_pairs = 200;
  int multimodality_pairs = 20;
  uint64_t seed = 0;
};

// Produces motions for the requested actions; must be deterministic in seed.
using Sampler = std::function<std::vector<body::Motion>(const std::vector<int>& actions, int duration, uint64_t seed)>;

Sampler model_sampler(model::ActorModel model);

// Every seed draws a balanced generated set and scores it against the real
// train/test features.
MetricRow evaluate_sampler(const Sampler& sampler, int num_actions, Recognizer& recognizer,
                           const std::vector<body::Motion>& real_train,
                           const std::vector<body::Motion>& real_test, const EvalConfig& config,
                           const std::string& label = "ACTOR");
MetricRow evaluate(model::ActorModel model, Recognizer& recognizer, const std::vector<body::Motion>& real_train,
                   const std::vector<body::Motion>& real_test, const EvalConfig& config,
                   const std::string& label = "ACTOR");
// The real test set scored as if it were generated.
MetricRow evaluate_real(Recognizer& recognizer, const std::vector<body::Motion>& real_train,
                        const std::vector<body::Motion>& real_test, const EvalConfig& config);

// Recognition accuracy on a balanced generated set of one duration.
double generated_accuracy(const Sampler& sampler, int num_actions, Recognizer& recognizer, int duration,
                          int per_action_count, uint64_t seed);

std::string format_stat(const Stat& s, int precision = 2);

}  // namespace actor::eval
