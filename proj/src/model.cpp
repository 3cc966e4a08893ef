#include "actor/model.hpp"

#include "actor/error.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>

namespace actor::model {

namespace nn = torch::nn;
using torch::Tensor;

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::Actor: return "actor";
    case Variant::Gru: return "gru";
    case Variant::FullyConnected: return "fully_connected";
    case Variant::AutoregressiveDecoder: return "autoregressive_decoder";
    case Variant::MeanPoolEncoder: return "mean_pool_encoder";
    case Variant::OnehotConcatDecoder: return "onehot_concat_decoder";
  }
  return "actor";
}

Variant variant_from_name(std::string_view name) {
  for (auto v : {Variant::Actor, Variant::Gru, Variant::FullyConnected, Variant::AutoregressiveDecoder,
                 Variant::MeanPoolEncoder, Variant::OnehotConcatDecoder}) {
    if (variant_name(v) == name) return v;
  }
  throw Error(ErrorCode::UnknownVariant, "unknown model variant '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  if (latent_dim <= 0 || layers <= 0 || heads <= 0 || ff_dim <= 0 || num_actions <= 0 || num_joints <= 0 ||
      fixed_length <= 0)
    throw Error(ErrorCode::InvalidConfig, "model sizes must be positive");
  if (latent_dim % heads != 0) throw Error(ErrorCode::InvalidConfig, "latent_dim must be divisible by heads");
  if (latent_dim % 2 != 0) throw Error(ErrorCode::InvalidConfig, "latent_dim must be even");
  if (dropout < 0.0 || dropout >= 1.0) throw Error(ErrorCode::InvalidConfig, "dropout must be in [0, 1)");
}

Tensor positional_encoding(int64_t length, int64_t dim, int64_t offset, torch::Dtype dtype) {
  auto pe = torch::empty({length, dim}, torch::kDouble);
  auto acc = pe.accessor<double, 2>();
  for (int64_t t = 0; t < length; ++t) {
    const double pos = static_cast<double>(t + offset);
    for (int64_t i = 0; 2 * i < dim; ++i) {
      const double freq = std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(dim));
      acc[t][2 * i] = std::sin(pos / freq);
      if (2 * i + 1 < dim) acc[t][2 * i + 1] = std::cos(pos / freq);
    }
  }
  return pe.to(dtype);
}

Tensor motion_features(const body::Motion& motion, const ModelConfig& config) {
  if (motion.joint_count() != config.num_joints)
    throw Error(ErrorCode::ShapeMismatch, "motion has " + std::to_string(motion.joint_count()) + " joints, model expects " +
                                              std::to_string(config.num_joints));
  const auto T = motion.length();
  auto mats = rot::sixd_to_matrix(body::rotations_tensor(motion));
  auto rots = rot::matrix_to_rep(mats, config.rotation).reshape({T, -1});
  if (!config.use_translation) return rots;
  return torch::cat({rots, body::displacement_tensor(motion)}, 1);
}

body::Motion features_to_motion(const Tensor& features, const ModelConfig& config, int action, double fps) {
  auto f = features.detach().to(torch::kDouble);
  const auto T = f.size(0);
  const int rd = config.rotation_dim();
  auto rots = f.narrow(1, 0, config.num_joints * rd).reshape({T, config.num_joints, rd});
  auto mats = rot::rep_to_matrix(rots, config.rotation);
  auto sixd = rot::matrix_to_sixd(rot::sixd_to_matrix(rot::matrix_to_sixd(mats)));
  auto disp = config.use_translation ? f.narrow(1, config.num_joints * rd, 3) : torch::zeros({T, 3}, torch::kDouble);
  return body::motion_from_tensors(sixd, disp, action, fps);
}

Tensor length_mask(const std::vector<int64_t>& lengths) {
  int64_t max_len = 0;
  for (auto l : lengths) max_len = std::max(max_len, l);
  auto steps = torch::arange(max_len, torch::kLong).unsqueeze(0);
  auto lens = torch::tensor(lengths, torch::kLong).unsqueeze(1);
  return steps < lens;
}

MotionBatch collate(const std::vector<Tensor>& features, const std::vector<int64_t>& actions, torch::Dtype dtype) {
  if (features.empty()) throw Error(ErrorCode::EmptyInput, "empty batch");
  if (features.size() != actions.size()) throw Error(ErrorCode::ShapeMismatch, "one action per sequence required");
  std::vector<int64_t> lengths;
  for (const auto& f : features) {
    if (f.size(0) < 1) throw Error(ErrorCode::EmptySequence, "sequence with no frames");
    lengths.push_back(f.size(0));
  }
  MotionBatch batch;
  batch.valid = length_mask(lengths);
  const auto B = static_cast<int64_t>(features.size());
  batch.features = torch::zeros({B, batch.valid.size(1), features.front().size(1)}, dtype);
  for (int64_t b = 0; b < B; ++b) batch.features[b].narrow(0, 0, lengths[b]).copy_(features[b]);
  batch.actions = torch::tensor(actions, torch::kLong);
  return batch;
}

Tensor reparameterize(const Tensor& mu, const Tensor& logvar, std::optional<at::Generator> gen) {
  auto eps = torch::randn(mu.sizes(), gen, mu.options());
  return mu + torch::exp(0.5 * logvar) * eps;
}

at::Generator make_generator(uint64_t seed) { return at::make_generator<at::CPUGeneratorImpl>(seed); }

namespace {

Tensor onehot(const Tensor& actions, int num_actions, const torch::TensorOptions& opts) {
  return torch::one_hot(actions, num_actions).to(opts.dtype());
}

nn::TransformerEncoderLayerOptions encoder_layer(const ModelConfig& c) {
  return nn::TransformerEncoderLayerOptions(c.latent_dim, c.heads)
      .dim_feedforward(c.ff_dim)
      .dropout(c.dropout)
      .activation(torch::kGELU);
}

nn::TransformerDecoderLayerOptions decoder_layer(const ModelConfig& c) {
  return nn::TransformerDecoderLayerOptions(c.latent_dim, c.heads)
      .dim_feedforward(c.ff_dim)
      .dropout(c.dropout)
      .activation(torch::kGELU);
}

Tensor token_init(const ModelConfig& c) { return torch::randn({c.num_actions, c.latent_dim}) * 0.02; }

Tensor causal_mask(int64_t length, const torch::TensorOptions& opts) {
  return torch::triu(torch::full({length, length}, -std::numeric_limits<double>::infinity(), opts), 1);
}

// --- encoders --------------------------------------------------------------

// Distribution-parameter tokens prepended to the embedded frames; the first
// two encoder outputs are mu and logvar.
class TokenTransformerEncoder final : public MotionEncoder {
 public:
  explicit TokenTransformerEncoder(const ModelConfig& c) : d_(c.latent_dim) {
    embed_ = register_module("embed", nn::Linear(c.frame_dim(), c.latent_dim));
    mu_token_ = register_parameter("mu_token", token_init(c));
    sigma_token_ = register_parameter("sigma_token", token_init(c));
    transformer_ = register_module("transformer", nn::TransformerEncoder(nn::TransformerEncoderOptions(encoder_layer(c), c.layers)));
    dropout_ = register_module("dropout", nn::Dropout(c.dropout));
  }

  std::pair<Tensor, Tensor> encode(const MotionBatch& batch) override {
    const auto B = batch.size();
    const auto T = batch.max_length();
    auto x = embed_->forward(batch.features);
    auto tokens = torch::stack({mu_token_.index_select(0, batch.actions), sigma_token_.index_select(0, batch.actions)}, 1);
    auto seq = torch::cat({tokens, x}, 1) + positional_encoding(T + 2, d_, 0, x.scalar_type()).unsqueeze(0);
    seq = dropout_->forward(seq).transpose(0, 1);
    auto padding = torch::cat({torch::zeros({B, 2}, torch::kBool), batch.valid.logical_not()}, 1);
    auto out = transformer_->forward(seq, {}, padding);
    return {out[0], out[1]};
  }

 private:
  int64_t d_;
  nn::Linear embed_{nullptr};
  Tensor mu_token_, sigma_token_;
  nn::TransformerEncoder transformer_{nullptr};
  nn::Dropout dropout_{nullptr};
};

// Temporal mean of encoder outputs followed by two linear heads.
class MeanPoolTransformerEncoder final : public MotionEncoder {
 public:
  explicit MeanPoolTransformerEncoder(const ModelConfig& c) : d_(c.latent_dim) {
    embed_ = register_module("embed", nn::Linear(c.frame_dim(), c.latent_dim));
    transformer_ = register_module("transformer", nn::TransformerEncoder(nn::TransformerEncoderOptions(encoder_layer(c), c.layers)));
    dropout_ = register_module("dropout", nn::Dropout(c.dropout));
    mu_head_ = register_module("mu_head", nn::Linear(c.latent_dim, c.latent_dim));
    logvar_head_ = register_module("logvar_head", nn::Linear(c.latent_dim, c.latent_dim));
  }

  std::pair<Tensor, Tensor> encode(const MotionBatch& batch) override {
    const auto T = batch.max_length();
    auto x = embed_->forward(batch.features) + positional_encoding(T, d_, 0, batch.features.scalar_type()).unsqueeze(0);
    x = dropout_->forward(x).transpose(0, 1);
    auto out = transformer_->forward(x, {}, batch.valid.logical_not()).transpose(0, 1);
    auto w = batch.valid.to(out.scalar_type()).unsqueeze(-1);
    auto pooled = (out * w).sum(1) / w.sum(1);
    return {mu_head_->forward(pooled), logvar_head_->forward(pooled)};
  }

 private:
  int64_t d_;
  nn::Linear embed_{nullptr}, mu_head_{nullptr}, logvar_head_{nullptr};
  nn::TransformerEncoder transformer_{nullptr};
  nn::Dropout dropout_{nullptr};
};

class GruEncoder final : public MotionEncoder {
 public:
  explicit GruEncoder(const ModelConfig& c) : num_actions_(c.num_actions) {
    gru_ = register_module("gru", nn::GRU(nn::GRUOptions(c.frame_dim() + c.num_actions, c.latent_dim)
                                             .num_layers(c.layers)
                                             .batch_first(true)
                                             .dropout(c.layers > 1 ? c.dropout : 0.0)));
    mu_head_ = register_module("mu_head", nn::Linear(c.latent_dim, c.latent_dim));
    logvar_head_ = register_module("logvar_head", nn::Linear(c.latent_dim, c.latent_dim));
  }

  std::pair<Tensor, Tensor> encode(const MotionBatch& batch) override {
    const auto T = batch.max_length();
    auto cond = onehot(batch.actions, num_actions_, batch.features.options()).unsqueeze(1).expand({-1, T, -1});
    auto out = std::get<0>(gru_->forward(torch::cat({batch.features, cond}, 2)));
    // The GRU is causal, so the state at the last valid frame ignores padding.
    auto last = (batch.lengths() - 1).view({-1, 1, 1}).expand({-1, 1, out.size(2)});
    auto h = out.gather(1, last).squeeze(1);
    return {mu_head_->forward(h), logvar_head_->forward(h)};
  }

 private:
  int num_actions_;
  nn::GRU gru_{nullptr};
  nn::Linear mu_head_{nullptr}, logvar_head_{nullptr};
};

void require_fixed_length(const Tensor& valid, int fixed_length) {
  if (valid.size(1) != fixed_length || !valid.all().item<bool>())
    throw Error(ErrorCode::FixedLengthOnly, "fully connected model only handles sequences of exactly " +
                                                std::to_string(fixed_length) + " frames");
}

class MlpEncoder final : public MotionEncoder {
 public:
  explicit MlpEncoder(const ModelConfig& c) : num_actions_(c.num_actions), fixed_length_(c.fixed_length) {
    body_ = register_module("body", nn::Sequential(nn::Linear(c.frame_dim() * c.fixed_length + c.num_actions, c.ff_dim),
                                                   nn::GELU(), nn::Dropout(c.dropout), nn::Linear(c.ff_dim, c.ff_dim),
                                                   nn::GELU()));
    mu_head_ = register_module("mu_head", nn::Linear(c.ff_dim, c.latent_dim));
    logvar_head_ = register_module("logvar_head", nn::Linear(c.ff_dim, c.latent_dim));
  }

  std::pair<Tensor, Tensor> encode(const MotionBatch& batch) override {
    require_fixed_length(batch.valid, fixed_length_);
    auto x = torch::cat({batch.features.flatten(1), onehot(batch.actions, num_actions_, batch.features.options())}, 1);
    auto h = body_->forward(x);
    return {mu_head_->forward(h), logvar_head_->forward(h)};
  }

 private:
  int num_actions_, fixed_length_;
  nn::Sequential body_{nullptr};
  nn::Linear mu_head_{nullptr}, logvar_head_{nullptr};
};

// --- decoders --------------------------------------------------------------

// Latent (shifted by the per-action bias token, or projected together with a
// one-hot label) is the single key/value; T positional encodings are the
// queries. All frames are produced at once.
class OneShotTransformerDecoder final : public MotionDecoder {
 public:
  OneShotTransformerDecoder(const ModelConfig& c, bool bias_token)
      : d_(c.latent_dim), num_actions_(c.num_actions), bias_token_(bias_token) {
    if (bias_token_) {
      bias_token_param_ = register_parameter("bias_token", token_init(c));
    } else {
      latent_proj_ = register_module("latent_proj", nn::Linear(c.latent_dim + c.num_actions, c.latent_dim));
    }
    transformer_ = register_module("transformer", nn::TransformerDecoder(nn::TransformerDecoderOptions(decoder_layer(c), c.layers)));
    dropout_ = register_module("dropout", nn::Dropout(c.dropout));
    out_ = register_module("out", nn::Linear(c.latent_dim, c.frame_dim()));
  }

  Tensor decode(const Tensor& z, const Tensor& actions, const Tensor& valid) override {
    const auto B = valid.size(0);
    const auto T = valid.size(1);
    Tensor memory = bias_token_ ? z + bias_token_param_.index_select(0, actions)
                                : latent_proj_->forward(torch::cat({z, onehot(actions, num_actions_, z.options())}, 1));
    auto queries = positional_encoding(T, d_, 0, z.scalar_type()).unsqueeze(1).expand({T, B, d_});
    queries = dropout_->forward(queries);
    auto out = transformer_->forward(queries, memory.unsqueeze(0), {}, {}, valid.logical_not()).transpose(0, 1);
    return out_->forward(out) * valid.to(z.scalar_type()).unsqueeze(-1);
  }

 private:
  int64_t d_;
  int num_actions_;
  bool bias_token_;
  Tensor bias_token_param_;
  nn::Linear latent_proj_{nullptr}, out_{nullptr};
  nn::TransformerDecoder transformer_{nullptr};
  nn::Dropout dropout_{nullptr};
};

// Causal Transformer decoder. Query t is the embedding of frame t-1 (a
// learned start vector for t = 0) plus PE(t).
class AutoregressiveTransformerDecoder final : public MotionDecoder {
 public:
  explicit AutoregressiveTransformerDecoder(const ModelConfig& c) : d_(c.latent_dim) {
    bias_token_ = register_parameter("bias_token", token_init(c));
    start_ = register_parameter("start", torch::randn({c.latent_dim}) * 0.02);
    in_embed_ = register_module("in_embed", nn::Linear(c.frame_dim(), c.latent_dim));
    transformer_ = register_module("transformer", nn::TransformerDecoder(nn::TransformerDecoderOptions(decoder_layer(c), c.layers)));
    dropout_ = register_module("dropout", nn::Dropout(c.dropout));
    out_ = register_module("out", nn::Linear(c.latent_dim, c.frame_dim()));
  }

  Tensor decode_train(const Tensor& z, const Tensor& actions, const Tensor& valid, const Tensor& target) override {
    const auto T = valid.size(1);
    auto memory = (z + bias_token_.index_select(0, actions)).unsqueeze(0);
    auto out = run(previous_frames(target.narrow(1, 0, T - 1), z.size(0)), memory, valid.logical_not());
    return out_->forward(out) * valid.to(z.scalar_type()).unsqueeze(-1);
  }

  Tensor decode(const Tensor& z, const Tensor& actions, const Tensor& valid) override {
    const auto B = valid.size(0);
    const auto T = valid.size(1);
    auto memory = (z + bias_token_.index_select(0, actions)).unsqueeze(0);
    std::vector<Tensor> frames;
    for (int64_t t = 0; t < T; ++t) {
      auto so_far = frames.empty() ? torch::zeros({B, 0, out_->options.out_features()}, z.options()) : torch::stack(frames, 1);
      auto out = run(previous_frames(so_far, B), memory, {});
      frames.push_back(out_->forward(out.select(1, t)));
    }
    return torch::stack(frames, 1) * valid.to(z.scalar_type()).unsqueeze(-1);
  }

 private:
  Tensor previous_frames(const Tensor& frames, int64_t batch) {
    auto start = start_.view({1, 1, -1}).expand({batch, 1, d_});
    return torch::cat({start, in_embed_->forward(frames)}, 1);
  }

  Tensor run(const Tensor& queries, const Tensor& memory, const Tensor& padding) {
    const auto T = queries.size(1);
    auto q = queries + positional_encoding(T, d_, 0, queries.scalar_type()).unsqueeze(0);
    q = dropout_->forward(q).transpose(0, 1);
    return transformer_->forward(q, memory, causal_mask(T, q.options()), {}, padding).transpose(0, 1);
  }

  int64_t d_;
  Tensor bias_token_, start_;
  nn::Linear in_embed_{nullptr}, out_{nullptr};
  nn::TransformerDecoder transformer_{nullptr};
  nn::Dropout dropout_{nullptr};
};

class GruDecoder final : public MotionDecoder {
 public:
  explicit GruDecoder(const ModelConfig& c) : d_(c.latent_dim), num_actions_(c.num_actions) {
    in_proj_ = register_module("in_proj", nn::Linear(c.latent_dim + c.num_actions, c.latent_dim));
    gru_ = register_module("gru", nn::GRU(nn::GRUOptions(c.latent_dim, c.latent_dim)
                                             .num_layers(c.layers)
                                             .batch_first(true)
                                             .dropout(c.layers > 1 ? c.dropout : 0.0)));
    dropout_ = register_module("dropout", nn::Dropout(c.dropout));
    out_ = register_module("out", nn::Linear(c.latent_dim, c.frame_dim()));
  }

  Tensor decode(const Tensor& z, const Tensor& actions, const Tensor& valid) override {
    const auto T = valid.size(1);
    auto h = in_proj_->forward(torch::cat({z, onehot(actions, num_actions_, z.options())}, 1));
    auto x = h.unsqueeze(1) + positional_encoding(T, d_, 0, z.scalar_type()).unsqueeze(0);
    auto out = std::get<0>(gru_->forward(dropout_->forward(x)));
    return out_->forward(out) * valid.to(z.scalar_type()).unsqueeze(-1);
  }

 private:
  int64_t d_;
  int num_actions_;
  nn::Linear in_proj_{nullptr}, out_{nullptr};
  nn::GRU gru_{nullptr};
  nn::Dropout dropout_{nullptr};
};

class MlpDecoder final : public MotionDecoder {
 public:
  explicit MlpDecoder(const ModelConfig& c)
      : num_actions_(c.num_actions), fixed_length_(c.fixed_length), frame_dim_(c.frame_dim()) {
    body_ = register_module("body", nn::Sequential(nn::Linear(c.latent_dim + c.num_actions, c.ff_dim), nn::GELU(),
                                                   nn::Dropout(c.dropout), nn::Linear(c.ff_dim, c.ff_dim), nn::GELU(),
                                                   nn::Linear(c.ff_dim, c.fixed_length * c.frame_dim())));
  }

  Tensor decode(const Tensor& z, const Tensor& actions, const Tensor& valid) override {
    require_fixed_length(valid, fixed_length_);
    auto out = body_->forward(torch::cat({z, onehot(actions, num_actions_, z.options())}, 1));
    return out.view({z.size(0), fixed_length_, frame_dim_});
  }

 private:
  int num_actions_, fixed_length_, frame_dim_;
  nn::Sequential body_{nullptr};
};

}  // namespace

ActorModelImpl::ActorModelImpl(const ModelConfig& config) : config_(config) {
  config_.validate();
  switch (config_.variant) {
    case Variant::Actor:
      encoder_ = std::make_shared<TokenTransformerEncoder>(config_);
      decoder_ = std::make_shared<OneShotTransformerDecoder>(config_, true);
      break;
    case Variant::MeanPoolEncoder:
      encoder_ = std::make_shared<MeanPoolTransformerEncoder>(config_);
      decoder_ = std::make_shared<OneShotTransformerDecoder>(config_, true);
      break;
    case Variant::OnehotConcatDecoder:
      encoder_ = std::make_shared<TokenTransformerEncoder>(config_);
      decoder_ = std::make_shared<OneShotTransformerDecoder>(config_, false);
      break;
    case Variant::AutoregressiveDecoder:
      encoder_ = std::make_shared<TokenTransformerEncoder>(config_);
      decoder_ = std::make_shared<AutoregressiveTransformerDecoder>(config_);
      break;
    case Variant::Gru:
      encoder_ = std::make_shared<GruEncoder>(config_);
      decoder_ = std::make_shared<GruDecoder>(config_);
      break;
    case Variant::FullyConnected:
      encoder_ = std::make_shared<MlpEncoder>(config_);
      decoder_ = std::make_shared<MlpDecoder>(config_);
      break;
  }
  register_module("encoder", encoder_);
  register_module("decoder", decoder_);
}

torch::Dtype ActorModelImpl::dtype() const { return parameters().front().scalar_type(); }

void ActorModelImpl::check_actions(const Tensor& actions) const {
  if (actions.numel() == 0) return;
  const auto lo = actions.min().item<int64_t>();
  const auto hi = actions.max().item<int64_t>();
  if (lo < 0 || hi >= config_.num_actions)
    throw Error(ErrorCode::UnknownAction, "action outside [0, " + std::to_string(config_.num_actions) + ")");
}

void ActorModelImpl::check_length(int64_t length) const {
  if (length < 1) throw Error(ErrorCode::NonPositiveDuration, "duration must be at least one frame");
}

std::pair<Tensor, Tensor> ActorModelImpl::encode(const MotionBatch& batch) {
  check_actions(batch.actions);
  if (batch.max_length() < 1 || batch.lengths().min().item<int64_t>() < 1)
    throw Error(ErrorCode::EmptySequence, "cannot encode an empty sequence");
  auto [mu, logvar] = encoder_->encode(batch);
  return {mu, logvar.clamp(kLogvarMin, kLogvarMax)};
}

Tensor ActorModelImpl::decode(const Tensor& z, const Tensor& actions, const Tensor& valid) {
  check_actions(actions);
  check_length(valid.size(1));
  return decoder_->decode(z, actions, valid);
}

ActorModelImpl::Output ActorModelImpl::forward(const MotionBatch& batch, std::optional<at::Generator> gen) {
  Output out;
  std::tie(out.mu, out.logvar) = encode(batch);
  out.z = reparameterize(out.mu, out.logvar, gen);
  out.features = decoder_->decode_train(out.z, batch.actions, batch.valid, batch.features);
  return out;
}

ActorModel build_variant(const ModelConfig& config) { return ActorModel(config); }

// ---------------------------------------------------------------------------

namespace {

class InferenceScope {
 public:
  explicit InferenceScope(ActorModel& model) : model_(model), was_training_(model->is_training()) {
    if (was_training_) model_->eval();
  }
  ~InferenceScope() {
    if (was_training_) model_->train();
  }
  InferenceScope(const InferenceScope&) = delete;
  InferenceScope& operator=(const InferenceScope&) = delete;

 private:
  ActorModel& model_;
  bool was_training_;
  torch::NoGradGuard no_grad_;
};

}  // namespace

LatentCode encode(ActorModel& model, const body::Motion& motion, int action) {
  InferenceScope scope(model);
  if (motion.length() < 1) throw Error(ErrorCode::EmptySequence, "cannot encode an empty motion");
  auto batch = collate({motion_features(motion, model->config())}, {action}, model->dtype());
  auto [mu, logvar] = model->encode(batch);
  return {mu[0], mu[0], logvar[0]};
}

body::Motion decode(ActorModel& model, const Tensor& z, int action, int duration, double fps) {
  InferenceScope scope(model);
  if (duration < 1) throw Error(ErrorCode::NonPositiveDuration, "duration must be at least one frame");
  auto valid = torch::ones({1, duration}, torch::kBool);
  auto out = model->decode(z.to(model->dtype()).view({1, -1}), torch::tensor({int64_t{action}}), valid);
  return features_to_motion(out[0], model->config(), action, fps);
}

std::vector<body::Motion> generate_batch(ActorModel& model, const std::vector<int>& actions,
                                         const std::vector<int>& durations, at::Generator& gen, double fps) {
  InferenceScope scope(model);
  if (actions.size() != durations.size()) throw Error(ErrorCode::ShapeMismatch, "one duration per action required");
  if (actions.empty()) return {};
  std::vector<int64_t> lengths(durations.begin(), durations.end());
  for (auto l : lengths)
    if (l < 1) throw Error(ErrorCode::NonPositiveDuration, "duration must be at least one frame");
  const auto B = static_cast<int64_t>(actions.size());
  auto z = torch::randn({B, model->config().latent_dim}, gen, torch::TensorOptions().dtype(model->dtype()));
  auto acts = torch::tensor(std::vector<int64_t>(actions.begin(), actions.end()), torch::kLong);
  auto out = model->decode(z, acts, length_mask(lengths));
  std::vector<body::Motion> motions;
  motions.reserve(actions.size());
  for (int64_t b = 0; b < B; ++b)
    motions.push_back(features_to_motion(out[b].narrow(0, 0, lengths[b]), model->config(), actions[b], fps));
  return motions;
}

body::Motion generate(ActorModel& model, int action, int duration, at::Generator& gen, double fps) {
  return generate_batch(model, {action}, {duration}, gen, fps).front();
}

}  // namespace actor::model
