#include "actor/config.hpp"

#include "actor/error.hpp"

#include <fstream>

namespace actor::config {

namespace {

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string(what) + ": " + e.what());
  }
}

const char* reduction_name(losses::TimeReduction r) {
  switch (r) {
    case losses::TimeReduction::Sum: return "sum";
    case losses::TimeReduction::Mean: return "mean";
    case losses::TimeReduction::ElementMean: return "element_mean";
  }
  return "sum";
}

}  // namespace

json to_json(const model::ModelConfig& c) {
  return {{"latent_dim", c.latent_dim},
          {"layers", c.layers},
          {"heads", c.heads},
          {"ff_dim", c.ff_dim},
          {"dropout", c.dropout},
          {"activation", "gelu"},
          {"num_actions", c.num_actions},
          {"num_joints", c.num_joints},
          {"rotation", std::string(rot::rep_name(c.rotation))},
          {"use_translation", c.use_translation},
          {"variant", std::string(model::variant_name(c.variant))},
          {"fixed_length", c.fixed_length}};
}

model::ModelConfig model_config_from_json(const json& j, model::ModelConfig c) {
  return guarded("model config", [&] {
    take(j, "latent_dim", c.latent_dim);
    take(j, "layers", c.layers);
    take(j, "heads", c.heads);
    take(j, "ff_dim", c.ff_dim);
    take(j, "dropout", c.dropout);
    take(j, "num_actions", c.num_actions);
    take(j, "num_joints", c.num_joints);
    take(j, "use_translation", c.use_translation);
    take(j, "fixed_length", c.fixed_length);
    if (j.contains("activation") && j.at("activation").get<std::string>() != "gelu")
      throw Error(ErrorCode::InvalidConfig, "only the gelu activation is supported");
    if (j.contains("rotation")) c.rotation = rot::rep_from_name(j.at("rotation").get<std::string>());
    if (j.contains("variant")) c.variant = model::variant_from_name(j.at("variant").get<std::string>());
    return c;
  });
}

json to_json(const losses::LossWeights& w) {
  return {{"lambda_kl", w.lambda_kl},       {"rotations", w.rotations}, {"displacement", w.displacement},
          {"vertices", w.vertices},         {"joints", w.joints},
          {"time_reduction", reduction_name(w.time_reduction)}};
}

losses::LossWeights loss_weights_from_json(const json& j, losses::LossWeights w) {
  return guarded("loss weights", [&] {
    take(j, "lambda_kl", w.lambda_kl);
    take(j, "rotations", w.rotations);
    take(j, "displacement", w.displacement);
    take(j, "vertices", w.vertices);
    take(j, "joints", w.joints);
    if (j.contains("time_reduction")) {
      const auto r = j.at("time_reduction").get<std::string>();
      if (r == "sum") w.time_reduction = losses::TimeReduction::Sum;
      else if (r == "mean") w.time_reduction = losses::TimeReduction::Mean;
      else if (r == "element_mean") w.time_reduction = losses::TimeReduction::ElementMean;
      else throw Error(ErrorCode::InvalidConfig, "time_reduction must be sum, mean or element_mean");
    }
    return w;
  });
}

json to_json(const training::TrainConfig& c) {
  json j{{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
         {"epochs", c.epochs},               {"weight_decay", c.weight_decay},
         {"beta1", c.beta1},                 {"beta2", c.beta2},
         {"loss", to_json(c.loss)},          {"fixed_duration", c.fixed_duration},
         {"seed", c.seed},                   {"checkpoint_every", c.checkpoint_every},
         {"grad_clip", c.grad_clip}};
  if (c.variable_range) j["variable_range"] = {c.variable_range->min, c.variable_range->max};
  return j;
}

training::TrainConfig train_config_from_json(const json& j, training::TrainConfig c) {
  return guarded("train config", [&] {
    take(j, "learning_rate", c.learning_rate);
    take(j, "batch_size", c.batch_size);
    take(j, "epochs", c.epochs);
    take(j, "weight_decay", c.weight_decay);
    take(j, "beta1", c.beta1);
    take(j, "beta2", c.beta2);
    take(j, "fixed_duration", c.fixed_duration);
    take(j, "seed", c.seed);
    take(j, "checkpoint_every", c.checkpoint_every);
    take(j, "grad_clip", c.grad_clip);
    if (j.contains("loss")) c.loss = loss_weights_from_json(j.at("loss"), c.loss);
    if (j.contains("variable_range")) {
      const auto r = j.at("variable_range").get<std::vector<int>>();
      if (r.size() != 2) throw Error(ErrorCode::InvalidConfig, "variable_range needs [min, max]");
      c.variable_range = training::DurationRange{r[0], r[1]};
    }
    return c;
  });
}

json to_json(const data::DatasetSpec& s) {
  return {{"actions", s.actions},
          {"sequences_per_action", s.sequences_per_action},
          {"duration", {s.duration_min, s.duration_max}},
          {"rotation_noise_std", s.rotation_noise_std},
          {"translation_noise_std", s.translation_noise_std},
          {"seed", s.seed},
          {"train_fraction", s.train_fraction},
          {"fps", s.fps}};
}

data::DatasetSpec dataset_spec_from_json(const json& j, data::DatasetSpec s) {
  return guarded("dataset spec", [&] {
    take(j, "actions", s.actions);
    take(j, "sequences_per_action", s.sequences_per_action);
    take(j, "rotation_noise_std", s.rotation_noise_std);
    take(j, "translation_noise_std", s.translation_noise_std);
    take(j, "seed", s.seed);
    take(j, "train_fraction", s.train_fraction);
    take(j, "fps", s.fps);
    if (j.contains("duration")) {
      const auto& d = j.at("duration");
      if (d.is_number_integer()) {
        s.duration_min = s.duration_max = d.get<int>();
      } else {
        const auto r = d.get<std::vector<int>>();
        if (r.size() != 2) throw Error(ErrorCode::InvalidSpec, "duration needs T or [T_min, T_max]");
        s.duration_min = r[0];
        s.duration_max = r[1];
      }
    }
    return s;
  });
}

json to_json(const eval::EvalConfig& c) {
  return {{"per_action_count", c.per_action_count}, {"duration", c.duration},
          {"seeds", c.seeds},                       {"diversity_pairs", c.diversity_pairs},
          {"multimodality_pairs", c.multimodality_pairs}, {"seed", c.seed}};
}

eval::EvalConfig eval_config_from_json(const json& j, eval::EvalConfig c) {
  return guarded("eval config", [&] {
    take(j, "per_action_count", c.per_action_count);
    take(j, "duration", c.duration);
    take(j, "seeds", c.seeds);
    take(j, "diversity_pairs", c.diversity_pairs);
    take(j, "multimodality_pairs", c.multimodality_pairs);
    take(j, "seed", c.seed);
    return c;
  });
}

json to_json(const eval::RecognizerConfig& c) {
  return {{"hidden", c.hidden},     {"layers", c.layers},       {"epochs", c.epochs},
          {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate}, {"min_crop", c.min_crop},
          {"min_steps", c.min_steps}, {"seed", c.seed}};
}

eval::RecognizerConfig recognizer_config_from_json(const json& j, eval::RecognizerConfig c) {
  return guarded("recognizer config", [&] {
    take(j, "hidden", c.hidden);
    take(j, "layers", c.layers);
    take(j, "epochs", c.epochs);
    take(j, "batch_size", c.batch_size);
    take(j, "learning_rate", c.learning_rate);
    take(j, "min_crop", c.min_crop);
    take(j, "min_steps", c.min_steps);
    take(j, "seed", c.seed);
    return c;
  });
}

ablation::AblationConfig Experiment::ablation() const {
  ablation::AblationConfig a;
  a.model = model;
  a.train = train;
  a.eval = eval;
  a.range = range;
  a.finetune_epochs = finetune_epochs;
  a.durations = durations;
  return a;
}

json to_json(const Experiment& e) {
  return {{"model", to_json(e.model)},
          {"train", to_json(e.train)},
          {"eval", to_json(e.eval)},
          {"recognizer", to_json(e.recognizer)},
          {"ablation",
           {{"finetune_epochs", e.finetune_epochs}, {"range", {e.range.min, e.range.max}}, {"durations", e.durations}}}};
}

Experiment experiment_from_json(const json& j, Experiment e) {
  return guarded("experiment", [&] {
    if (j.contains("model")) e.model = model_config_from_json(j.at("model"), e.model);
    if (j.contains("train")) e.train = train_config_from_json(j.at("train"), e.train);
    if (j.contains("eval")) e.eval = eval_config_from_json(j.at("eval"), e.eval);
    if (j.contains("recognizer")) e.recognizer = recognizer_config_from_json(j.at("recognizer"), e.recognizer);
    if (j.contains("ablation")) {
      const auto& a = j.at("ablation");
      take(a, "finetune_epochs", e.finetune_epochs);
      take(a, "durations", e.durations);
      if (a.contains("range")) {
        const auto r = a.at("range").get<std::vector<int>>();
        if (r.size() != 2) throw Error(ErrorCode::InvalidConfig, "range needs [min, max]");
        e.range = {r[0], r[1]};
      }
    }
    return e;
  });
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open " + path.string());
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

}  // namespace actor::config
