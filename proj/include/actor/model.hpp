#pragma once

#include "actor/body.hpp"
#include "actor/rotations.hpp"

#include <torch/torch.h>

#include <memory>
#include <optional>
#include <string_view>
#include <vector>

namespace actor::model {

enum class Variant {
  Actor,                  // token-pooled Transformer encoder, one-shot decoder with action bias
  Gru,                    // GRU encoder-decoder
  FullyConnected,         // fixed-length MLP autoencoder
  AutoregressiveDecoder,  // Transformer decoder, causal, teacher forced
  MeanPoolEncoder,        // no distribution tokens; temporal mean -> linear heads
  OnehotConcatDecoder,    // no bias token; [z, onehot(a)] -> linear -> memory
};

std::string_view variant_name(Variant v);
Variant variant_from_name(std::string_view name);

struct ModelConfig {
  int latent_dim = 256;
  int layers = 8;
  int heads = 4;
  int ff_dim = 1024;
  double dropout = 0.1;
  int num_actions = 1;
  int num_joints = 24;
  rot::RotationRep rotation = rot::RotationRep::SixD;
  bool use_translation = true;
  Variant variant = Variant::Actor;
  int fixed_length = 60;  // only used by FullyConnected

  int rotation_dim() const { return rot::rep_dim(rotation); }
  // Per-frame feature width: joints * rotation_dim (+ 3 for displacement).
  int frame_dim() const { return num_joints * rotation_dim() + (use_translation ? 3 : 0); }
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

inline constexpr double kLogvarMin = -20.0;
inline constexpr double kLogvarMax = 10.0;

// PE[t, 2i] = sin(t / 10000^(2i/d)), PE[t, 2i+1] = cos(...), t = offset..offset+length-1.
torch::Tensor positional_encoding(int64_t length, int64_t dim, int64_t offset = 0,
                                  torch::Dtype dtype = torch::kFloat);

// Per-frame features of a motion in the model's rotation representation, [T, F] float64.
torch::Tensor motion_features(const body::Motion& motion, const ModelConfig& config);
// Inverse of motion_features; rotations are projected back to valid 6D.
body::Motion features_to_motion(const torch::Tensor& features, const ModelConfig& config, int action,
                                double fps = 20.0);

// Zero-padded minibatch. valid[b, t] is true for real frames.
struct MotionBatch {
  torch::Tensor features;  // [B, T, F]
  torch::Tensor valid;     // [B, T] bool
  torch::Tensor actions;   // [B] int64

  int64_t size() const { return features.size(0); }
  int64_t max_length() const { return features.size(1); }
  torch::Tensor lengths() const { return valid.sum(1); }
};

MotionBatch collate(const std::vector<torch::Tensor>& features, const std::vector<int64_t>& actions,
                    torch::Dtype dtype = torch::kFloat);
// Validity mask for the given lengths, padded to the longest.
torch::Tensor length_mask(const std::vector<int64_t>& lengths);

struct LatentCode {
  torch::Tensor z;
  torch::Tensor mu;
  torch::Tensor logvar;
};

// z = mu + exp(logvar / 2) * eps, eps ~ N(0, I) drawn from gen (global generator when unset).
torch::Tensor reparameterize(const torch::Tensor& mu, const torch::Tensor& logvar,
                             std::optional<at::Generator> gen = std::nullopt);

class MotionEncoder : public torch::nn::Module {
 public:
  // Returns (mu, raw logvar), each [B, d].
  virtual std::pair<torch::Tensor, torch::Tensor> encode(const MotionBatch& batch) = 0;
};

class MotionDecoder : public torch::nn::Module {
 public:
  // z [B, d], actions [B], valid [B, T] -> [B, T, F], zero at padded frames.
  virtual torch::Tensor decode(const torch::Tensor& z, const torch::Tensor& actions, const torch::Tensor& valid) = 0;
  // Training-time decode. Only the autoregressive decoder uses the target.
  virtual torch::Tensor decode_train(const torch::Tensor& z, const torch::Tensor& actions, const torch::Tensor& valid,
                                     const torch::Tensor& /*target*/) {
    return decode(z, actions, valid);
  }
};

class ActorModelImpl : public torch::nn::Module {
 public:
  explicit ActorModelImpl(const ModelConfig& config);

  struct Output {
    torch::Tensor features;  // [B, T, F]
    torch::Tensor mu;
    torch::Tensor logvar;
    torch::Tensor z;
  };

  // mu and clamped logvar, [B, d] each.
  std::pair<torch::Tensor, torch::Tensor> encode(const MotionBatch& batch);
  torch::Tensor decode(const torch::Tensor& z, const torch::Tensor& actions, const torch::Tensor& valid);
  // encode -> reparameterize -> decode (teacher forced for the autoregressive variant).
  Output forward(const MotionBatch& batch, std::optional<at::Generator> gen = std::nullopt);

  const ModelConfig& config() const { return config_; }
  torch::Dtype dtype() const;

  MotionEncoder& encoder() { return *encoder_; }
  MotionDecoder& decoder() { return *decoder_; }

 private:
  void check_actions(const torch::Tensor& actions) const;
  void check_length(int64_t length) const;

  ModelConfig config_;
  std::shared_ptr<MotionEncoder> encoder_;
  std::shared_ptr<MotionDecoder> decoder_;
};

TORCH_MODULE(ActorModel);

// Builds any variant; throws UnknownVariant/InvalidConfig on bad configs.
ActorModel build_variant(const ModelConfig& config);

// ---------------------------------------------------------------------------
// Single-motion inference helpers. They run without autograd and in eval
// mode (a model left in training mode is switched for the call).

LatentCode encode(ActorModel& model, const body::Motion& motion, int action);
body::Motion decode(ActorModel& model, const torch::Tensor& z, int action, int duration, double fps = 20.0);
body::Motion generate(ActorModel& model, int action, int duration, at::Generator& gen, double fps = 20.0);
std::vector<body::Motion> generate_batch(ActorModel& model, const std::vector<int>& actions,
                                         const std::vector<int>& durations, at::Generator& gen, double fps = 20.0);

// Seeded CPU generator.
at::Generator make_generator(uint64_t seed);

}  // namespace actor::model
