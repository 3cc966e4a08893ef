#include "actor/ablation.hpp"

#include "actor/error.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace actor::ablation {

std::string_view suite_name(Suite s) {
  switch (s) {
    case Suite::Loss: return "loss";
    case Suite::Arch: return "arch";
    case Suite::Kl: return "kl";
    case Suite::Batch: return "batch";
    case Suite::Layers: return "layers";
    case Suite::RotRep: return "rotrep";
    case Suite::Duration: return "duration";
  }
  return "?";
}

Suite suite_from_name(std::string_view name) {
  for (auto s : {Suite::Loss, Suite::Arch, Suite::Kl, Suite::Batch, Suite::Layers, Suite::RotRep, Suite::Duration})
    if (suite_name(s) == name) return s;
  throw Error(ErrorCode::InvalidConfig, "unknown ablation suite '" + std::string(name) + "'");
}

std::vector<GridPoint> grid(Suite suite, const AblationConfig& c) {
  std::vector<GridPoint> out;
  auto point = [&](std::string label) -> GridPoint& {
    out.push_back({std::move(label), c.model, c.train});
    return out.back();
  };
  switch (suite) {
    case Suite::Loss: {
      // The displacement term stays on in every row.
      auto losses = [&](std::string label, bool r, bool v, bool j) {
        auto& p = point(std::move(label));
        p.train.loss.rotations = r;
        p.train.loss.vertices = v;
        p.train.loss.joints = j;
      };
      losses("L_J", false, false, true);
      losses("L_R", true, false, false);
      losses("L_V", false, true, false);
      losses("L_R+L_V", true, true, false);
      break;
    }
    case Suite::Arch: {
      auto arch = [&](std::string label, model::Variant v) { point(std::move(label)).model.variant = v; };
      arch("Fully connected", model::Variant::FullyConnected);
      arch("GRU", model::Variant::Gru);
      arch("Transformer", model::Variant::Actor);
      arch("a) w/ autoreg. decoder", model::Variant::AutoregressiveDecoder);
      arch("b) w/out mu_a^token, Sigma_a^token", model::Variant::MeanPoolEncoder);
      arch("c) w/out b_a^token", model::Variant::OnehotConcatDecoder);
      for (auto& p : out) p.model.fixed_length = c.train.fixed_duration;
      break;
    }
    case Suite::Kl:
      for (int e = 3; e <= 7; ++e) point("λ_KL=1e-" + std::to_string(e)).train.loss.lambda_kl = std::pow(10.0, -e);
      break;
    case Suite::Batch:
      for (int b : {10, 20, 30, 40}) point("Batch size = " + std::to_string(b)).train.batch_size = b;
      break;
    case Suite::Layers:
      for (int l : {2, 4, 6, 8}) point(std::to_string(l) + "-layers").model.layers = l;
      break;
    case Suite::RotRep: {
      auto rep = [&](std::string label, rot::RotationRep r) { point(std::move(label)).model.rotation = r; };
      rep("Axis-angle", rot::RotationRep::AxisAngle);
      rep("Quaternion", rot::RotationRep::Quaternion);
      rep("Rotation matrix", rot::RotationRep::Matrix);
      rep("6D continuous", rot::RotationRep::SixD);
      break;
    }
    case Suite::Duration:
      point("Fixed T=" + std::to_string(c.train.fixed_duration) + " vs variable [" + std::to_string(c.range.min) +
            ", " + std::to_string(c.range.max) + "]");
      break;
  }
  return out;
}

namespace {

std::vector<double> accuracy_by_duration(model::ActorModel model, eval::Recognizer& recognizer,
                                         const AblationConfig& c) {
  std::vector<double> out;
  const auto sampler = eval::model_sampler(model);
  for (int t : c.durations)
    out.push_back(eval::generated_accuracy(sampler, model->config().num_actions, recognizer, t,
                                           c.eval.per_action_count, c.eval.seed));
  return out;
}

}  // namespace

PointResult run_point(Suite suite, std::size_t index, const data::Dataset& dataset, const AblationConfig& config,
                      eval::Recognizer& recognizer, const body::BodyModel& body) {
  const auto points = grid(suite, config);
  if (index >= points.size()) throw Error(ErrorCode::InvalidConfig, "grid index out of range");
  const auto& p = points[index];
  PointResult r;
  r.label = p.label;
  try {
    auto trained = training::train(p.model, dataset, p.train, body);
    if (suite == Suite::Duration) {
      r.fixed_accuracy = accuracy_by_duration(trained.checkpoint.model, recognizer, config);
      auto tuned = training::finetune_variable(trained.checkpoint, dataset, config.range, config.finetune_epochs, body);
      r.variable_accuracy = accuracy_by_duration(tuned.checkpoint.model, recognizer, config);
    } else {
      r.metrics = eval::evaluate(trained.checkpoint.model, recognizer, dataset.train(), dataset.test(), config.eval,
                                 p.label);
    }
  } catch (const Error& e) {
    r.ok = false;
    r.failure = e.what();
  }
  r.metrics.label = p.label;
  return r;
}

SuiteResult assemble(Suite suite, const AblationConfig& config, eval::Recognizer& recognizer,
                     const data::Dataset& dataset, std::vector<PointResult> points) {
  SuiteResult s;
  s.suite = suite;
  s.points = std::move(points);
  s.durations = config.durations;
  if (suite != Suite::Duration) s.real = eval::evaluate_real(recognizer, dataset.train(), dataset.test(), config.eval);
  return s;
}

SuiteResult run_suite(Suite suite, const data::Dataset& dataset, const AblationConfig& config,
                      eval::Recognizer& recognizer, const body::BodyModel& body) {
  std::vector<PointResult> points;
  const auto g = grid(suite, config);
  for (std::size_t i = 0; i < g.size(); ++i) points.push_back(run_point(suite, i, dataset, config, recognizer, body));
  return assemble(suite, config, recognizer, dataset, std::move(points));
}

namespace {

nlohmann::json stat_json(const eval::Stat& s) { return {{"mean", s.mean}, {"ci95", s.ci95}}; }
eval::Stat stat_from(const nlohmann::json& j) { return {j.at("mean").get<double>(), j.at("ci95").get<double>()}; }

nlohmann::json row_json(const eval::MetricRow& r) {
  return {{"label", r.label},
          {"fid_train", stat_json(r.fid_train)},
          {"fid_test", stat_json(r.fid_test)},
          {"accuracy", stat_json(r.accuracy)},
          {"diversity", stat_json(r.diversity)},
          {"multimodality", stat_json(r.multimodality)}};
}

}  // namespace

nlohmann::json PointResult::to_json() const {
  nlohmann::json j{{"label", label}, {"ok", ok}, {"failure", failure}, {"metrics", row_json(metrics)}};
  if (!fixed_accuracy.empty()) j["fixed_accuracy"] = fixed_accuracy;
  if (!variable_accuracy.empty()) j["variable_accuracy"] = variable_accuracy;
  return j;
}

PointResult PointResult::from_json(const nlohmann::json& j) {
  try {
    PointResult r;
    r.label = j.at("label");
    r.ok = j.at("ok");
    r.failure = j.at("failure");
    const auto& m = j.at("metrics");
    r.metrics = {m.at("label"),          stat_from(m.at("fid_train")), stat_from(m.at("fid_test")),
                 stat_from(m.at("accuracy")), stat_from(m.at("diversity")), stat_from(m.at("multimodality"))};
    if (j.contains("fixed_accuracy")) r.fixed_accuracy = j.at("fixed_accuracy").get<std::vector<double>>();
    if (j.contains("variable_accuracy")) r.variable_accuracy = j.at("variable_accuracy").get<std::vector<double>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("malformed grid point result: ") + e.what());
  }
}

nlohmann::json SuiteResult::to_json() const {
  nlohmann::json j{{"suite", std::string(suite_name(suite))}, {"points", nlohmann::json::array()}};
  if (suite == Suite::Duration) j["durations"] = durations;
  else j["real"] = row_json(real);
  for (const auto& p : points) j["points"].push_back(p.to_json());
  return j;
}

std::string SuiteResult::table() const {
  std::ostringstream os;
  if (suite == Suite::Duration) {
    os << "| Duration | Fixed | Variable |\n|----------|-------|----------|\n";
    const auto& p = points.front();
    if (!p.ok) return os.str() + "| " + p.label + " | failed: " + p.failure + " |\n";
    for (std::size_t i = 0; i < durations.size(); ++i) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "| %d | %.1f | %.1f |\n", durations[i], p.fixed_accuracy[i], p.variable_accuracy[i]);
      os << buf;
    }
    os << "\n" << p.label << "; cells are recognition accuracy (%) of generated motions.\n";
    return os.str();
  }
  eval::EvalReport report;
  report.rows.push_back(real);
  std::vector<std::string> failures;
  for (const auto& p : points) {
    if (p.ok) {
      report.rows.push_back(p.metrics);
    } else {
      eval::MetricRow r;
      r.label = p.label + " (failed)";
      report.rows.push_back(r);
      failures.push_back(p.label + ": " + p.failure);
    }
  }
  os << report.table();
  for (const auto& f : failures) os << "failed run " << f << '\n';
  return os.str();
}

}  // namespace actor::ablation
