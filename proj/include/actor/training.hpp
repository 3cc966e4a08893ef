#pragma once

#include "actor/body.hpp"
#include "actor/data.hpp"
#include "actor/losses.hpp"
#include "actor/model.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace actor::training {

inline constexpr const char* kCheckpointVersion = "actor-ckpt-v1";

struct DurationRange {
  int min = 60;
  int max = 100;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 20;
  int epochs = 500;
  // AdamW defaults (betas 0.9/0.999, eps 1e-8, decay 1e-2).
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  losses::LossWeights loss;
  int fixed_duration = 60;
  std::optional<DurationRange> variable_range;  // finetuning only
  uint64_t seed = 0;
  int checkpoint_every = 0;  // epochs; 0 disables periodic checkpoints
  double grad_clip = 0.0;    // max global norm; 0 disables

  void validate() const;
};

struct Checkpoint {
  model::ModelConfig model_config;
  std::vector<std::string> action_names;
  TrainConfig train_config;
  model::ActorModel model{nullptr};
  int64_t step = 0;
  int64_t epoch = 0;
  int pretrain_duration = 0;  // fixed duration of pretraining, 0 if none
  bool variable_finetuned = false;
  std::string sampler_state;          // minibatch sampler (mt19937_64 text form)
  torch::Tensor latent_rng_state;     // reparameterization generator
  torch::Tensor global_rng_state;     // default CPU generator (dropout, init)
};

struct TrainHistory {
  std::vector<double> step_total;
  std::vector<std::map<std::string, double>> epoch_means;  // per loss term
};

struct TrainResult {
  Checkpoint checkpoint;
  TrainHistory history;
};

struct TrainHooks {
  std::function<void(int epoch, const std::map<std::string, double>& means)> on_epoch;
  // Periodic and final checkpoints land here when set (atomic replace).
  std::optional<std::filesystem::path> checkpoint_path;
  // Observes the duration of each minibatch (variable-length finetuning).
  std::function<void(int duration)> on_batch_duration;
};

// Fresh model (initialized from config.seed) trained on fixed-length crops.
TrainResult train(const model::ModelConfig& model_config, const data::Dataset& dataset, const TrainConfig& config,
                  const body::BodyModel& body, const TrainHooks& hooks = {});

// Continue from a checkpoint with per-minibatch durations drawn uniformly
// from `range`. Warns on stderr when the checkpoint was never pretrained.
TrainResult finetune_variable(const Checkpoint& checkpoint, const data::Dataset& dataset, DurationRange range,
                              int epochs, const body::BodyModel& body, const TrainHooks& hooks = {});

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
// With `expected`, a checkpoint whose model config differs is rejected.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<model::ModelConfig>& expected = std::nullopt);

// Deep copy (weights cloned).
Checkpoint clone_checkpoint(const Checkpoint& checkpoint);

}  // namespace actor::training
