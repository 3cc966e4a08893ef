#pragma once

// Sweep grids over loss terms, architecture variants, KL weight, batch size,
// depth, rotation representation and training duration. Each grid point
// trains a fresh model and is scored with the evaluation protocol.

#include "actor/applications.hpp"
#include "actor/data.hpp"
#include "actor/eval.hpp"
#include "actor/training.hpp"

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace actor::ablation {

enum class Suite { Loss, Arch, Kl, Batch, Layers, RotRep, Duration };

std::string_view suite_name(Suite s);
Suite suite_from_name(std::string_view name);  // InvalidConfig on unknown names

struct AblationConfig {
  model::ModelConfig model;     // base; grid points override single fields
  training::TrainConfig train;  // base
  eval::EvalConfig eval;
  // Duration suite: fixed-length pretraining, then variable finetuning.
  training::DurationRange range{60, 100};
  int finetune_epochs = 100;
  std::vector<int> durations = {40, 45, 50, 55, 60, 65, 70, 75, 80, 85, 90, 95, 100, 105, 110, 115, 120};
};

struct GridPoint {
  std::string label;
  model::ModelConfig model;
  training::TrainConfig train;
};

// Row labels and configs in table order. The duration suite has a single
// point covering both the fixed and the finetuned model.
std::vector<GridPoint> grid(Suite suite, const AblationConfig& config);

struct PointResult {
  std::string label;
  bool ok = true;
  std::string failure;  // error text when the run did not finish
  eval::MetricRow metrics;
  // Duration suite only: generated-motion accuracy per duration.
  std::vector<double> fixed_accuracy;
  std::vector<double> variable_accuracy;

  nlohmann::json to_json() const;
  static PointResult from_json(const nlohmann::json& j);
};

// Trains and scores one grid point. Training errors (divergence included)
// are recorded in the result instead of propagating.
PointResult run_point(Suite suite, std::size_t index, const data::Dataset& dataset, const AblationConfig& config,
                      eval::Recognizer& recognizer, const body::BodyModel& body);

struct SuiteResult {
  Suite suite = Suite::Loss;
  eval::MetricRow real;
  std::vector<PointResult> points;
  std::vector<int> durations;

  nlohmann::json to_json() const;
  std::string table() const;
};

// Sequential run over the whole grid.
SuiteResult run_suite(Suite suite, const data::Dataset& dataset, const AblationConfig& config,
                      eval::Recognizer& recognizer, const body::BodyModel& body);

// Assembles a result from independently computed points (grid order).
SuiteResult assemble(Suite suite, const AblationConfig& config, eval::Recognizer& recognizer,
                     const data::Dataset& dataset, std::vector<PointResult> points);

}  // namespace actor::ablation
