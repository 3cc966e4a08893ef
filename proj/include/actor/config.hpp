#pragma once

// JSON (de)serialization of every user-facing config. Parsing starts from
// a base value and overrides only the keys present.

#include "actor/ablation.hpp"
#include "actor/data.hpp"
#include "actor/eval.hpp"
#include "actor/losses.hpp"
#include "actor/model.hpp"
#include "actor/training.hpp"

#include <json.hpp>

#include <filesystem>

namespace actor::config {

using nlohmann::json;

json to_json(const model::ModelConfig& c);
json to_json(const losses::LossWeights& w);
json to_json(const training::TrainConfig& c);
json to_json(const data::DatasetSpec& s);

model::ModelConfig model_config_from_json(const json& j, model::ModelConfig base = {});
losses::LossWeights loss_weights_from_json(const json& j, losses::LossWeights base = {});
training::TrainConfig train_config_from_json(const json& j, training::TrainConfig base = {});
data::DatasetSpec dataset_spec_from_json(const json& j, data::DatasetSpec base = {});

json to_json(const eval::EvalConfig& c);
json to_json(const eval::RecognizerConfig& c);
eval::EvalConfig eval_config_from_json(const json& j, eval::EvalConfig base = {});
eval::RecognizerConfig recognizer_config_from_json(const json& j, eval::RecognizerConfig base = {});

// Experiment file: {"model": {...}, "train": {...}, "eval": {...},
// "recognizer": {...}, "ablation": {"finetune_epochs", "range", "durations"}}.
// Every section and key is optional.
struct Experiment {
  model::ModelConfig model;
  training::TrainConfig train;
  eval::EvalConfig eval;
  eval::RecognizerConfig recognizer;
  ablation::AblationConfig ablation() const;
  int finetune_epochs = 100;
  training::DurationRange range{60, 100};
  std::vector<int> durations = ablation::AblationConfig{}.durations;
};
json to_json(const Experiment& e);
Experiment experiment_from_json(const json& j, Experiment base = {});

json read_json_file(const std::filesystem::path& path);

}  // namespace actor::config
