#include "actor/losses.hpp"

#include "actor/error.hpp"

namespace actor::losses {

using torch::Tensor;

void LossWeights::validate() const {
  if (lambda_kl < 0.0) throw Error(ErrorCode::InvalidConfig, "lambda_kl must be non-negative");
  if (!rotations && !displacement && !vertices && !joints)
    throw Error(ErrorCode::InvalidConfig, "at least one reconstruction term must be enabled");
}

std::map<std::string, double> LossBreakdown::values() const {
  auto v = [](const Tensor& t) { return t.defined() ? t.item<double>() : 0.0; };
  return {{"total", v(total)},       {"rotations", v(rotations)}, {"displacement", v(displacement)},
          {"vertices", v(vertices)}, {"joints", v(joints)},       {"kl", v(kl)}};
}

Tensor kl_loss(const Tensor& mu, const Tensor& logvar) {
  auto per = 0.5 * (torch::exp(logvar) + mu.pow(2) - 1.0 - logvar).sum(-1);
  return per.dim() == 0 ? per : per.mean();
}

double kl_loss(const std::vector<double>& mu, const std::vector<double>& logvar) {
  if (mu.size() != logvar.size()) throw Error(ErrorCode::ShapeMismatch, "mu and logvar differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) s += std::exp(logvar[i]) + mu[i] * mu[i] - 1.0 - logvar[i];
  return 0.5 * s;
}

namespace {

// [B, T] per-frame squared errors over `coords` coordinates -> masked,
// reduced over time, batch mean.
Tensor reduce_frames(const Tensor& squared_per_frame, const Tensor& valid, TimeReduction reduction, int64_t coords) {
  auto w = valid.to(squared_per_frame.scalar_type());
  auto per_seq = (squared_per_frame * w).sum(1);
  if (reduction == TimeReduction::Mean) per_seq = per_seq / w.sum(1);
  if (reduction == TimeReduction::ElementMean) per_seq = per_seq / (w.sum(1) * static_cast<double>(coords));
  return per_seq.mean();
}

}  // namespace

LossBreakdown compute(const model::ModelConfig& config, const body::BodyModel& body, const Tensor& target,
                      const Tensor& prediction, const Tensor& valid, const Tensor& mu, const Tensor& logvar,
                      const LossWeights& weights) {
  if (target.sizes() != prediction.sizes())
    throw Error(ErrorCode::LengthMismatch, "prediction and target shapes differ");
  const auto B = target.size(0);
  const auto T = target.size(1);
  const int J = config.num_joints;
  const int rd = config.rotation_dim();
  auto zero = torch::zeros({}, prediction.options());

  LossBreakdown out;
  out.rotations = out.displacement = out.vertices = out.joints = zero;

  auto gt_rot = target.narrow(2, 0, J * rd);
  auto pr_rot = prediction.narrow(2, 0, J * rd);
  if (weights.rotations)
    out.rotations = reduce_frames((gt_rot - pr_rot).pow(2).sum(-1), valid, weights.time_reduction, J * rd);
  if (weights.displacement && config.use_translation) {
    auto diff = target.narrow(2, J * rd, 3) - prediction.narrow(2, J * rd, 3);
    out.displacement = reduce_frames(diff.pow(2).sum(-1), valid, weights.time_reduction, 3);
  }
  if (weights.vertices || weights.joints) {
    torch::Tensor gt_mats;
    {
      torch::NoGradGuard no_grad;
      gt_mats = rot::rep_to_matrix(gt_rot.reshape({B, T, J, rd}), config.rotation);
    }
    auto pr_mats = rot::rep_to_matrix(pr_rot.reshape({B, T, J, rd}), config.rotation);
    if (weights.vertices) {
      torch::Tensor gt_v;
      {
        torch::NoGradGuard no_grad;
        gt_v = body.surface(gt_mats);
      }
      auto diff = gt_v - body.surface(pr_mats);
      out.vertices = reduce_frames(diff.pow(2).sum({-1, -2}), valid, weights.time_reduction, diff.size(-2) * 3);
    }
    if (weights.joints) {
      torch::Tensor gt_j;
      {
        torch::NoGradGuard no_grad;
        gt_j = body.joints(gt_mats, {});
      }
      auto diff = gt_j - body.joints(pr_mats, {});
      out.joints = reduce_frames(diff.pow(2).sum({-1, -2}), valid, weights.time_reduction, diff.size(-2) * 3);
    }
  }
  out.kl = kl_loss(mu, logvar);
  out.total = out.rotations + out.displacement + out.vertices + out.joints + weights.lambda_kl * out.kl;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_lengths(const body::Motion& gt, const body::Motion& pred) {
  if (gt.length() != pred.length())
    throw Error(ErrorCode::LengthMismatch, "motions have " + std::to_string(gt.length()) + " and " +
                                               std::to_string(pred.length()) + " frames");
  if (gt.joint_count() != pred.joint_count()) throw Error(ErrorCode::LengthMismatch, "joint counts differ");
}

Tensor rotation_matrices(const body::Motion& m) { return rot::sixd_to_matrix(body::rotations_tensor(m)); }

}  // namespace

double loss_rotations(const body::Motion& gt, const body::Motion& pred) {
  check_lengths(gt, pred);
  double s = 0.0;
  for (int t = 0; t < gt.length(); ++t)
    for (int j = 0; j < gt.joint_count(); ++j)
      s += (gt.frames[t].rotations[j].values - pred.frames[t].rotations[j].values).squaredNorm();
  return s;
}

double loss_displacement(const body::Motion& gt, const body::Motion& pred) {
  check_lengths(gt, pred);
  double s = 0.0;
  for (int t = 0; t < gt.length(); ++t) s += (gt.frames[t].displacement - pred.frames[t].displacement).squaredNorm();
  return s;
}

double loss_pose(const body::Motion& gt, const body::Motion& pred, bool include_displacement) {
  return loss_rotations(gt, pred) + (include_displacement ? loss_displacement(gt, pred) : 0.0);
}

double loss_vertices(const body::Motion& gt, const body::Motion& pred, const body::BodyModel& body) {
  check_lengths(gt, pred);
  torch::NoGradGuard no_grad;
  return (body.surface(rotation_matrices(gt)) - body.surface(rotation_matrices(pred))).pow(2).sum().item<double>();
}

double loss_joints(const body::Motion& gt, const body::Motion& pred, const body::BodyModel& body) {
  check_lengths(gt, pred);
  torch::NoGradGuard no_grad;
  return (body.joints(rotation_matrices(gt), {}) - body.joints(rotation_matrices(pred), {})).pow(2).sum().item<double>();
}

TotalLoss total_loss(const body::Motion& gt, const body::Motion& pred, const std::vector<double>& mu,
                     const std::vector<double>& logvar, const LossWeights& weights, const body::BodyModel& body) {
  weights.validate();
  TotalLoss out;
  out.terms["rotations"] = weights.rotations ? loss_rotations(gt, pred) : 0.0;
  out.terms["displacement"] = weights.displacement ? loss_displacement(gt, pred) : 0.0;
  out.terms["vertices"] = weights.vertices ? loss_vertices(gt, pred, body) : 0.0;
  out.terms["joints"] = weights.joints ? loss_joints(gt, pred, body) : 0.0;
  out.terms["weighted_kl"] = weights.lambda_kl * kl_loss(mu, logvar);
  for (const auto& [name, value] : out.terms) out.total += value;
  return out;
}

}  // namespace actor::losses
