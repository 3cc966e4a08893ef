#pragma once

#include "actor/body.hpp"
#include "actor/model.hpp"

#include <torch/torch.h>

#include <map>
#include <string>

namespace actor::losses {

// Reconstruction reduction per sequence: Sum over frames and coordinates,
// Mean over frames of per-frame sums, ElementMean over frames and coordinates.
enum class TimeReduction { Sum, Mean, ElementMean };

struct LossWeights {
  double lambda_kl = 1e-5;
  bool rotations = true;     // L_R
  bool displacement = true;  // L_D (only when the model carries translation)
  bool vertices = true;      // L_V
  bool joints = false;       // L_J, ablation only
  TimeReduction time_reduction = TimeReduction::Sum;

  void validate() const;
};

// Scalar tensors; disabled terms are zero. total = sum of enabled
// reconstruction terms + lambda_kl * kl.
struct LossBreakdown {
  torch::Tensor total;
  torch::Tensor rotations;
  torch::Tensor displacement;
  torch::Tensor vertices;
  torch::Tensor joints;
  torch::Tensor kl;

  std::map<std::string, double> values() const;
};

// 0.5 * sum_i (exp(logvar_i) + mu_i^2 - 1 - logvar_i) over the last dim,
// averaged over any leading batch dims.
torch::Tensor kl_loss(const torch::Tensor& mu, const torch::Tensor& logvar);
double kl_loss(const std::vector<double>& mu, const std::vector<double>& logvar);

// Batched objective on model features. Each reconstruction term is reduced
// per sequence as selected by weights.time_reduction, then averaged over
// the batch; padded frames contribute nothing.
LossBreakdown compute(const model::ModelConfig& config, const body::BodyModel& body, const torch::Tensor& target,
                      const torch::Tensor& prediction, const torch::Tensor& valid, const torch::Tensor& mu,
                      const torch::Tensor& logvar, const LossWeights& weights);

// ---------------------------------------------------------------------------
// Motion-level forms, float64.

// Sum over frames of squared L2 over the 6D rotations and, when
// include_displacement, the displacements.
double loss_pose(const body::Motion& gt, const body::Motion& pred, bool include_displacement = true);
double loss_rotations(const body::Motion& gt, const body::Motion& pred);
double loss_displacement(const body::Motion& gt, const body::Motion& pred);
// Root-centered surface points / joints, squared L2 summed over frames.
double loss_vertices(const body::Motion& gt, const body::Motion& pred, const body::BodyModel& body);
double loss_joints(const body::Motion& gt, const body::Motion& pred, const body::BodyModel& body);

struct TotalLoss {
  double total = 0.0;
  std::map<std::string, double> terms;
};

TotalLoss total_loss(const body::Motion& gt, const body::Motion& pred, const std::vector<double>& mu,
                     const std::vector<double>& logvar, const LossWeights& weights, const body::BodyModel& body);

}  // namespace actor::losses
