#include "actor/training.hpp"

#include "actor/config.hpp"
#include "actor/error.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>
#include <iostream>
#include <random>
#include <sstream>

namespace actor::training {

using model::ActorModel;
using torch::Tensor;

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || batch_size <= 0 || epochs < 0 || fixed_duration <= 0 || weight_decay < 0.0 ||
      checkpoint_every < 0 || grad_clip < 0.0)
    throw Error(ErrorCode::InvalidConfig, "training hyperparameters must be positive");
  if (variable_range && (variable_range->min < 1 || variable_range->max < variable_range->min))
    throw Error(ErrorCode::InvalidConfig, "variable_range must satisfy 1 <= min <= max");
  loss.validate();
}

namespace {

struct Sample {
  Tensor features;  // [T, F]
  int64_t action;
};

std::vector<Sample> prepare(const std::vector<data::Motion>& motions, const model::ModelConfig& config) {
  std::vector<Sample> out;
  out.reserve(motions.size());
  for (const auto& m : motions) out.push_back({model::motion_features(m, config).to(torch::kFloat), m.action});
  return out;
}

at::Generator default_generator() { return at::detail::getDefaultCPUGenerator(); }

std::string sampler_to_string(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void restore_sampler(std::mt19937_64& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
}

void check_dataset(const model::ModelConfig& config, const data::Dataset& dataset) {
  if (config.num_actions != dataset.num_actions())
    throw Error(ErrorCode::ActionSetMismatch, "model has " + std::to_string(config.num_actions) + " actions, dataset has " +
                                                  std::to_string(dataset.num_actions()));
  for (const auto& m : dataset.motions) {
    if (m.joint_count() != config.num_joints) throw Error(ErrorCode::ShapeMismatch, "dataset joint count differs from model");
    if (m.action < 0 || m.action >= config.num_actions) throw Error(ErrorCode::ActionSetMismatch, "label out of range");
  }
}

void run_epochs(Checkpoint& ck, const std::vector<Sample>& samples, const TrainConfig& cfg,
                std::optional<DurationRange> range, int epochs, const body::BodyModel& body, const TrainHooks& hooks,
                TrainHistory& history) {
  if (samples.empty()) throw Error(ErrorCode::InsufficientData, "no training sequences");
  auto model = ck.model;
  model->train();
  torch::optim::AdamW optimizer(
      model->parameters(),
      torch::optim::AdamWOptions(cfg.learning_rate).betas({cfg.beta1, cfg.beta2}).weight_decay(cfg.weight_decay));

  std::mt19937_64 sampler(cfg.seed);
  if (!ck.sampler_state.empty()) restore_sampler(sampler, ck.sampler_state);
  auto latent_gen = model::make_generator(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  if (ck.latent_rng_state.defined()) latent_gen.set_state(ck.latent_rng_state);
  if (ck.global_rng_state.defined()) default_generator().set_state(ck.global_rng_state);

  const auto& mc = ck.model_config;
  std::vector<std::size_t> order(samples.size());
  for (int e = 0; e < epochs; ++e) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), sampler);
    std::map<std::string, double> sums;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      int duration = cfg.fixed_duration;
      if (range) duration = std::uniform_int_distribution<int>(range->min, range->max)(sampler);
      if (hooks.on_batch_duration) hooks.on_batch_duration(duration);
      std::vector<Tensor> feats;
      std::vector<int64_t> actions;
      for (auto k = start; k < end; ++k) {
        const auto& s = samples[order[k]];
        const int64_t len = std::min<int64_t>(duration, s.features.size(0));
        const int64_t offset = std::uniform_int_distribution<int64_t>(0, s.features.size(0) - len)(sampler);
        feats.push_back(s.features.narrow(0, offset, len));
        actions.push_back(s.action);
      }
      auto batch = model::collate(feats, actions, model->dtype());
      auto out = model->forward(batch, latent_gen);
      auto terms = losses::compute(mc, body, batch.features, out.features, batch.valid, out.mu, out.logvar, cfg.loss);
      const double total = terms.total.item<double>();
      if (!std::isfinite(total))
        throw Error(ErrorCode::DivergedLoss, "non-finite loss at step " + std::to_string(ck.step) +
                                                 (hooks.checkpoint_path ? "; last good checkpoint kept at " +
                                                                              hooks.checkpoint_path->string()
                                                                        : std::string{}));
      optimizer.zero_grad();
      terms.total.backward();
      if (cfg.grad_clip > 0.0) torch::nn::utils::clip_grad_norm_(model->parameters(), cfg.grad_clip);
      optimizer.step();
      ++ck.step;
      ++batches;
      history.step_total.push_back(total);
      for (const auto& [name, value] : terms.values()) sums[name] += value;
    }
    for (auto& [name, value] : sums) value /= batches;
    history.epoch_means.push_back(sums);
    ++ck.epoch;
    ck.sampler_state = sampler_to_string(sampler);
    ck.latent_rng_state = latent_gen.get_state();
    ck.global_rng_state = default_generator().get_state();
    if (hooks.checkpoint_path && cfg.checkpoint_every > 0 && (e + 1) % cfg.checkpoint_every == 0)
      save_checkpoint(ck, *hooks.checkpoint_path);
    if (hooks.on_epoch) hooks.on_epoch(static_cast<int>(ck.epoch), sums);
  }
  ck.sampler_state = sampler_to_string(sampler);
  ck.latent_rng_state = latent_gen.get_state();
  ck.global_rng_state = default_generator().get_state();
  model->eval();
  if (hooks.checkpoint_path) save_checkpoint(ck, *hooks.checkpoint_path);
}

}  // namespace

TrainResult train(const model::ModelConfig& model_config, const data::Dataset& dataset, const TrainConfig& config,
                  const body::BodyModel& body, const TrainHooks& hooks) {
  config.validate();
  model_config.validate();
  check_dataset(model_config, dataset);
  if (body.joint_count() != model_config.num_joints)
    throw Error(ErrorCode::ShapeMismatch, "body model joint count differs from model");
  torch::manual_seed(config.seed);
  TrainResult result;
  auto& ck = result.checkpoint;
  ck.model_config = model_config;
  ck.action_names = dataset.action_names;
  ck.train_config = config;
  ck.model = model::build_variant(model_config);
  ck.pretrain_duration = config.fixed_duration;
  ck.global_rng_state = default_generator().get_state();
  run_epochs(ck, prepare(dataset.train(), model_config), config, std::nullopt, config.epochs, body, hooks,
             result.history);
  return result;
}

TrainResult finetune_variable(const Checkpoint& checkpoint, const data::Dataset& dataset, DurationRange range,
                              int epochs, const body::BodyModel& body, const TrainHooks& hooks) {
  if (!checkpoint.model) throw Error(ErrorCode::IncompatibleCheckpoint, "checkpoint holds no model");
  if (checkpoint.model_config.variant == model::Variant::FullyConnected)
    throw Error(ErrorCode::IncompatibleCheckpoint, "fixed-length model cannot be finetuned on variable durations");
  check_dataset(checkpoint.model_config, dataset);
  TrainConfig cfg = checkpoint.train_config;
  cfg.variable_range = range;
  cfg.epochs = epochs;
  cfg.validate();
  int longest = 0;
  const auto train_set = dataset.train();
  for (const auto& m : train_set) longest = std::max(longest, m.length());
  if (longest < range.max)
    throw Error(ErrorCode::InvalidConfig, "dataset sequences are shorter than the requested maximum duration " +
                                              std::to_string(range.max));
  if (checkpoint.step == 0 || checkpoint.pretrain_duration == 0)
    std::cerr << "warning: variable-length finetuning from an untrained model tends to converge poorly; "
                 "pretrain at a fixed duration first\n";
  TrainResult result;
  result.checkpoint = clone_checkpoint(checkpoint);
  result.checkpoint.train_config = cfg;
  result.checkpoint.variable_finetuned = true;
  run_epochs(result.checkpoint, prepare(train_set, checkpoint.model_config), cfg, range, epochs, body, hooks,
             result.history);
  return result;
}

// ---------------------------------------------------------------------------

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  if (!ck.model) throw Error(ErrorCode::IncompatibleCheckpoint, "checkpoint holds no model");
  config::json meta{{"format_version", kCheckpointVersion},
                    {"model_config", config::to_json(ck.model_config)},
                    {"train_config", config::to_json(ck.train_config)},
                    {"action_names", ck.action_names},
                    {"step", ck.step},
                    {"epoch", ck.epoch},
                    {"pretrain_duration", ck.pretrain_duration},
                    {"variable_finetuned", ck.variable_finetuned},
                    {"sampler_state", ck.sampler_state}};
  torch::serialize::OutputArchive archive;
  archive.write("meta", c10::IValue(meta.dump()));
  torch::serialize::OutputArchive weights;
  ck.model->save(weights);
  archive.write("model", weights);
  if (ck.latent_rng_state.defined()) archive.write("latent_rng_state", ck.latent_rng_state);
  if (ck.global_rng_state.defined()) archive.write("global_rng_state", ck.global_rng_state);
  auto tmp = path;
  tmp += ".tmp";
  try {
    archive.save_to(tmp.string());
  } catch (const c10::Error& e) {
    throw Error(ErrorCode::CorruptFile, "cannot write checkpoint " + path.string() + ": " + e.what_without_backtrace());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<model::ModelConfig>& expected) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::CorruptFile, "no checkpoint at " + path.string());
  torch::serialize::InputArchive archive;
  config::json meta;
  try {
    archive.load_from(path.string());
    c10::IValue meta_value;
    archive.read("meta", meta_value);
    meta = config::json::parse(meta_value.toStringRef());
  } catch (const c10::Error& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": " + e.what_without_backtrace());
  } catch (const config::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": unreadable metadata");
  }
  const auto version = meta.value("format_version", std::string{});
  if (version != kCheckpointVersion)
    throw Error(ErrorCode::VersionMismatch, path.string() + ": expected " + kCheckpointVersion + ", found '" + version + "'");
  Checkpoint ck;
  try {
    ck.model_config = config::model_config_from_json(meta.at("model_config"));
    ck.train_config = config::train_config_from_json(meta.at("train_config"));
    ck.action_names = meta.at("action_names").get<std::vector<std::string>>();
    ck.step = meta.at("step").get<int64_t>();
    ck.epoch = meta.at("epoch").get<int64_t>();
    ck.pretrain_duration = meta.at("pretrain_duration").get<int>();
    ck.variable_finetuned = meta.at("variable_finetuned").get<bool>();
    ck.sampler_state = meta.at("sampler_state").get<std::string>();
  } catch (const config::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": incomplete metadata");
  }
  if (expected && !(*expected == ck.model_config))
    throw Error(ErrorCode::IncompatibleCheckpoint, "checkpoint architecture differs from the requested one");
  ck.model = model::build_variant(ck.model_config);
  try {
    torch::serialize::InputArchive weights;
    archive.read("model", weights);
    ck.model->load(weights);
    Tensor state;
    if (archive.try_read("latent_rng_state", state)) ck.latent_rng_state = state.clone();
    Tensor global;
    if (archive.try_read("global_rng_state", global)) ck.global_rng_state = global.clone();
  } catch (const c10::Error& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": " + e.what_without_backtrace());
  }
  ck.model->eval();
  return ck;
}

Checkpoint clone_checkpoint(const Checkpoint& src) {
  Checkpoint ck = src;
  ck.model = model::build_variant(src.model_config);
  torch::NoGradGuard no_grad;
  auto dst_params = ck.model->named_parameters();
  for (const auto& p : src.model->named_parameters()) dst_params[p.key()].copy_(p.value());
  if (src.latent_rng_state.defined()) ck.latent_rng_state = src.latent_rng_state.clone();
  if (src.global_rng_state.defined()) ck.global_rng_state = src.global_rng_state.clone();
  ck.model->train(src.model->is_training());
  return ck;
}

}  // namespace actor::training
