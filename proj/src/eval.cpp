#include "actor/eval.hpp"

#include "actor/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace actor::eval {

using torch::Tensor;

void FeatureSet::validate() const {
  if (static_cast<int64_t>(labels.size()) != features.rows())
    throw Error(ErrorCode::ShapeMismatch, "feature rows and labels differ in count");
  if (!features.allFinite()) throw Error(ErrorCode::DegenerateMoments, "non-finite features");
}

// ---------------------------------------------------------------------------

RecognizerImpl::RecognizerImpl(const RecognizerConfig& config) : config_(config) {
  if (config.num_actions < 2) throw Error(ErrorCode::InsufficientData, "recognizer needs at least two classes");
  if (config.hidden <= 0 || config.layers <= 0) throw Error(ErrorCode::InvalidConfig, "bad recognizer size");
  const int input = config.num_joints * 6 + 3;
  gru_ = register_module(
      "gru", torch::nn::GRU(torch::nn::GRUOptions(input, config.hidden).num_layers(config.layers).batch_first(true)));
  head_ = register_module("head", torch::nn::Linear(config.hidden, config.num_actions));
}

std::pair<Tensor, Tensor> RecognizerImpl::forward(const Tensor& features, const Tensor& valid) {
  auto out = std::get<0>(gru_->forward(features));  // [B, T, H]
  const auto b = out.size(0);
  auto last = (valid.sum(1) - 1).clamp_min(0).view({b, 1, 1}).expand({b, 1, out.size(2)});
  auto feats = out.gather(1, last).squeeze(1);
  return {feats, head_->forward(feats)};
}

Tensor recognizer_input(const body::Motion& motion) {
  model::ModelConfig cfg;
  cfg.num_joints = motion.joint_count();
  cfg.rotation = rot::RotationRep::SixD;
  cfg.use_translation = true;
  return model::motion_features(motion, cfg).to(torch::kFloat);
}

namespace {

std::vector<Tensor> inputs_of(const std::vector<body::Motion>& motions) {
  std::vector<Tensor> out;
  out.reserve(motions.size());
  for (const auto& m : motions) out.push_back(recognizer_input(m));
  return out;
}

// Runs the frozen recognizer in chunks; returns (features, logits) stacked.
std::pair<Tensor, Tensor> run(Recognizer& recognizer, const std::vector<body::Motion>& motions) {
  torch::NoGradGuard no_grad;
  const bool was_training = recognizer->is_training();
  recognizer->eval();
  const auto inputs = inputs_of(motions);
  std::vector<Tensor> feats, logits;
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < inputs.size(); start += kChunk) {
    const auto end = std::min(inputs.size(), start + kChunk);
    std::vector<Tensor> part(inputs.begin() + start, inputs.begin() + end);
    auto batch = model::collate(part, std::vector<int64_t>(part.size(), 0), torch::kFloat);
    auto [f, l] = recognizer->forward(batch.features, batch.valid);
    feats.push_back(f);
    logits.push_back(l);
  }
  recognizer->train(was_training);
  return {torch::cat(feats), torch::cat(logits)};
}

using TensorBatch = std::pair<std::vector<Tensor>, std::vector<int64_t>>;

// Half of the samples are cut to a random sub-window.
Tensor random_crop(const Tensor& x, int min_crop, std::mt19937_64& rng) {
  const int64_t t = x.size(0);
  int64_t len = t;
  if (std::bernoulli_distribution(0.5)(rng))
    len = std::uniform_int_distribution<int64_t>(std::min<int64_t>(min_crop, t), t)(rng);
  const auto offset = std::uniform_int_distribution<int64_t>(0, t - len)(rng);
  return x.narrow(0, offset, len);
}

Recognizer fit(const RecognizerConfig& config, std::mt19937_64& rng, int steps,
               const std::function<TensorBatch(std::mt19937_64&)>& next) {
  torch::manual_seed(config.seed);
  Recognizer net(config);
  net->train();
  torch::optim::AdamW optimizer(net->parameters(), torch::optim::AdamWOptions(config.learning_rate));
  for (int step = 0; step < steps; ++step) {
    auto [inputs, labels] = next(rng);
    for (auto& x : inputs) x = random_crop(x, config.min_crop, rng);
    auto batch = model::collate(inputs, labels, torch::kFloat);
    auto logits = net->forward(batch.features, batch.valid).second;
    auto loss = torch::nn::functional::cross_entropy(logits, batch.actions);
    optimizer.zero_grad();
    loss.backward();
    optimizer.step();
  }
  net->eval();
  return net;
}

}  // namespace

Recognizer train_recognizer(const std::vector<body::Motion>& motions, RecognizerConfig config) {
  std::set<int> classes;
  for (const auto& m : motions) classes.insert(m.action);
  if (classes.size() < 2) throw Error(ErrorCode::InsufficientData, "recognizer needs at least two classes");
  if (*classes.begin() < 0) throw Error(ErrorCode::UnknownAction, "negative action label");
  if (config.num_actions == 0) config.num_actions = *classes.rbegin() + 1;
  if (*classes.rbegin() >= config.num_actions) throw Error(ErrorCode::UnknownAction, "label beyond num_actions");
  config.num_joints = motions.front().joint_count();

  const auto inputs = inputs_of(motions);
  const std::size_t n = inputs.size();
  const auto per_epoch = static_cast<int>((n + config.batch_size - 1) / config.batch_size);
  const int steps = std::max(config.epochs * per_epoch, config.min_steps);
  std::vector<std::size_t> order(n);
  std::size_t cursor = n;  // forces a shuffle on the first call
  std::mt19937_64 rng(config.seed);
  return fit(config, rng, steps, [&](std::mt19937_64& r) {
    if (cursor >= n) {
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), r);
      cursor = 0;
    }
    TensorBatch batch;
    const auto end = std::min(n, cursor + static_cast<std::size_t>(config.batch_size));
    for (; cursor < end; ++cursor) {
      batch.first.push_back(inputs[order[cursor]]);
      batch.second.push_back(motions[order[cursor]].action);
    }
    return batch;
  });
}

Recognizer train_recognizer(const BatchSource& next_batch, int steps, RecognizerConfig config) {
  if (config.num_actions < 2) throw Error(ErrorCode::InsufficientData, "recognizer needs at least two classes");
  std::mt19937_64 rng(config.seed);
  bool first = true;
  return fit(config, rng, steps, [&](std::mt19937_64& r) {
    const auto motions = next_batch(r);
    if (motions.empty()) throw Error(ErrorCode::EmptyInput, "empty minibatch");
    for (const auto& m : motions)
      if (m.action < 0 || m.action >= config.num_actions) throw Error(ErrorCode::UnknownAction, "label out of range");
    if (first && motions.front().joint_count() != config.num_joints)
      throw Error(ErrorCode::ShapeMismatch, "recognizer joint count differs from the motions");
    first = false;
    TensorBatch batch;
    for (const auto& m : motions) {
      batch.first.push_back(recognizer_input(m));
      batch.second.push_back(m.action);
    }
    return batch;
  });
}

FeatureSet extract_features(Recognizer& recognizer, const std::vector<body::Motion>& motions, FeatureSource source) {
  FeatureSet out;
  out.source = source;
  if (motions.empty()) {
    out.features.resize(0, recognizer->config().hidden);
    return out;
  }
  auto feats = run(recognizer, motions).first.to(torch::kDouble).contiguous();
  out.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      feats.data_ptr<double>(), feats.size(0), feats.size(1));
  for (const auto& m : motions) out.labels.push_back(m.action);
  return out;
}

int argmax(const float* logits, int count) {
  int best = 0;
  for (int i = 1; i < count; ++i)
    if (logits[i] > logits[best]) best = i;
  return best;
}

std::vector<int> predict(Recognizer& recognizer, const std::vector<body::Motion>& motions) {
  std::vector<int> out;
  if (motions.empty()) return out;
  auto logits = run(recognizer, motions).second.contiguous();
  const int a = static_cast<int>(logits.size(1));
  const float* p = logits.data_ptr<float>();
  for (int64_t i = 0; i < logits.size(0); ++i) out.push_back(argmax(p + i * a, a));
  return out;
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (labels.empty()) throw Error(ErrorCode::EmptyInput, "accuracy of an empty set");
  if (predictions.size() != labels.size()) throw Error(ErrorCode::ShapeMismatch, "prediction/label count differs");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predictions[i] == labels[i];
  return 100.0 * static_cast<double>(correct) / static_cast<double>(labels.size());
}

double accuracy(Recognizer& recognizer, const std::vector<body::Motion>& motions) {
  if (motions.empty()) throw Error(ErrorCode::EmptyInput, "accuracy of an empty set");
  std::vector<int> labels;
  for (const auto& m : motions) labels.push_back(m.action);
  return accuracy(predict(recognizer, motions), labels);
}

void save_recognizer(Recognizer& recognizer, const std::filesystem::path& path) {
  const auto& c = recognizer->config();
  nlohmann::json meta{{"format_version", "recognizer-v1"}, {"num_actions", c.num_actions},
                      {"num_joints", c.num_joints},     {"hidden", c.hidden},
                      {"layers", c.layers},             {"epochs", c.epochs},
                      {"batch_size", c.batch_size},     {"learning_rate", c.learning_rate},
                      {"min_crop", c.min_crop},         {"min_steps", c.min_steps},
                      {"seed", c.seed}};
  torch::serialize::OutputArchive archive;
  archive.write("meta", c10::IValue(meta.dump()));
  torch::serialize::OutputArchive weights;
  recognizer->save(weights);
  archive.write("model", weights);
  auto tmp = path;
  tmp += ".tmp";
  archive.save_to(tmp.string());
  std::filesystem::rename(tmp, path);
}

Recognizer load_recognizer(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::CorruptFile, "no recognizer at " + path.string());
  try {
    torch::serialize::InputArchive archive;
    archive.load_from(path.string());
    c10::IValue meta_value;
    archive.read("meta", meta_value);
    const auto meta = nlohmann::json::parse(meta_value.toStringRef());
    if (meta.value("format_version", std::string{}) != "recognizer-v1")
      throw Error(ErrorCode::VersionMismatch, path.string() + ": not a recognizer-v1 file");
    RecognizerConfig c;
    c.num_actions = meta.at("num_actions");
    c.num_joints = meta.at("num_joints");
    c.hidden = meta.at("hidden");
    c.layers = meta.at("layers");
    c.epochs = meta.at("epochs");
    c.batch_size = meta.at("batch_size");
    c.learning_rate = meta.at("learning_rate");
    c.min_crop = meta.at("min_crop");
    c.min_steps = meta.at("min_steps");
    c.seed = meta.at("seed");
    Recognizer net(c);
    torch::serialize::InputArchive weights;
    archive.read("model", weights);
    net->load(weights);
    net->eval();
    return net;
  } catch (const c10::Error& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": " + e.what_without_backtrace());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": unreadable metadata");
  }
}

// ---------------------------------------------------------------------------

Moments moments(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) throw Error(ErrorCode::InsufficientSamples, "moment estimation needs at least two samples");
  Moments m;
  m.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - m.mean.transpose();
  m.covariance = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
  if (x.rows() <= x.cols()) m.covariance.diagonal().array() += kCovarianceRidge;
  return m;
}

namespace {

// Symmetric PSD square root; negative numerical eigenvalues are clamped.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double* trace = nullptr) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::DegenerateMoments, "eigendecomposition failed");
  Eigen::VectorXd root = eig.eigenvalues().unaryExpr([](double v) { return v < kEigenFloor ? 0.0 : std::sqrt(v); });
  if (trace) *trace = root.sum();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const Moments& a, const Moments& b) {
  if (a.mean.size() != b.mean.size()) throw Error(ErrorCode::ShapeMismatch, "feature dimensions differ");
  if (!a.covariance.allFinite() || !b.covariance.allFinite())
    throw Error(ErrorCode::DegenerateMoments, "non-finite covariance");
  // Tr((S_a S_b)^{1/2}) = Tr((R S_b R)^{1/2}) with R = S_a^{1/2}.
  const Eigen::MatrixXd root_a = psd_sqrt(a.covariance);
  double trace_cross = 0.0;
  psd_sqrt(root_a * b.covariance * root_a, &trace_cross);
  const double d =
      (a.mean - b.mean).squaredNorm() + a.covariance.trace() + b.covariance.trace() - 2.0 * trace_cross;
  if (!std::isfinite(d)) throw Error(ErrorCode::DegenerateMoments, "non-finite Frechet distance");
  return d;
}

double fid(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return frechet_distance(moments(a), moments(b)); }

double fid(const FeatureSet& a, const FeatureSet& b) {
  a.validate();
  b.validate();
  return fid(a.features, b.features);
}

double diversity(const Eigen::MatrixXd& x, int pairs, std::mt19937_64& rng) {
  if (x.rows() < 2 || pairs <= 0) throw Error(ErrorCode::InsufficientSamples, "diversity needs two samples");
  std::uniform_int_distribution<Eigen::Index> pick(0, x.rows() - 1);
  double total = 0.0;
  for (int p = 0; p < pairs; ++p) {
    const auto i = pick(rng);
    const auto j = pick(rng);
    total += (x.row(i) - x.row(j)).norm();
  }
  return total / pairs;
}

double multimodality(const Eigen::MatrixXd& x, const std::vector<int>& labels, int pairs_per_class,
                     std::mt19937_64& rng) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows())
    throw Error(ErrorCode::ShapeMismatch, "feature rows and labels differ in count");
  std::map<int, std::vector<Eigen::Index>> by_class;
  for (Eigen::Index i = 0; i < x.rows(); ++i) by_class[labels[i]].push_back(i);
  if (by_class.empty()) throw Error(ErrorCode::InsufficientSamples, "multimodality of an empty set");
  double total = 0.0;
  for (const auto& [label, rows] : by_class) {
    if (rows.size() < 2)
      throw Error(ErrorCode::InsufficientSamples, "class " + std::to_string(label) + " has fewer than two samples");
    Eigen::MatrixXd sub(rows.size(), x.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) sub.row(k) = x.row(rows[k]);
    total += diversity(sub, pairs_per_class, rng);
  }
  return total / static_cast<double>(by_class.size());
}

// ---------------------------------------------------------------------------

Stat summarize(const std::vector<double>& v) {
  if (v.empty()) throw Error(ErrorCode::EmptyInput, "no values to summarize");
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= v.size();
  return {mean, 1.96 * std::sqrt(var) / std::sqrt(static_cast<double>(v.size()))};
}

std::string format_stat(const Stat& s, int precision) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.*f^{±%.*f}", precision, s.mean, precision, s.ci95);
  return buf;
}

nlohmann::json EvalReport::to_json() const {
  auto stat = [](const Stat& s) { return nlohmann::json{{"mean", s.mean}, {"ci95", s.ci95}}; };
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows)
    rows_json.push_back({{"label", r.label},
                         {"fid_train", stat(r.fid_train)},
                         {"fid_test", stat(r.fid_test)},
                         {"accuracy", stat(r.accuracy)},
                         {"diversity", stat(r.diversity)},
                         {"multimodality", stat(r.multimodality)}});
  return {{"seeds", seeds}, {"per_action_count", per_action_count}, {"rows", rows_json}};
}

namespace {

// Display width in code points (UTF-8 continuation bytes do not count).
std::size_t display_width(const std::string& s) {
  return std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; });
}

}  // namespace

std::string EvalReport::table() const {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, display_width(r.label));
  std::ostringstream os;
  auto pad = [](std::string s, std::size_t w) { return s + std::string(w - std::min(w, display_width(s)), ' '); };
  os << "| " << pad("Method", width) << " | FID_tr | FID_test | Acc. | Div. | Multimod. |\n";
  os << "|" << std::string(width + 2, '-') << "|--------|----------|------|------|-----------|\n";
  for (const auto& r : rows)
    os << "| " << pad(r.label, width) << " | " << format_stat(r.fid_train) << " | " << format_stat(r.fid_test) << " | "
       << format_stat(r.accuracy, 1) << " | " << format_stat(r.diversity) << " | " << format_stat(r.multimodality)
       << " |\n";
  return os.str();
}

Sampler model_sampler(model::ActorModel model) {
  return [model](const std::vector<int>& actions, int duration, uint64_t seed) mutable {
    auto gen = model::make_generator(seed);
    return model::generate_batch(model, actions, std::vector<int>(actions.size(), duration), gen);
  };
}

namespace {

uint64_t seed_for(uint64_t master, int s) {
  std::seed_seq seq{master, static_cast<uint64_t>(s), uint64_t{0xE7A1}};
  std::mt19937_64 rng(seq);
  return rng();
}

struct SeedMetrics {
  std::vector<double> fid_train, fid_test, accuracy, diversity, multimodality;

  MetricRow row(const std::string& label) const {
    return {label, summarize(fid_train), summarize(fid_test), summarize(accuracy), summarize(diversity),
            summarize(multimodality)};
  }
};

void score(SeedMetrics& out, const FeatureSet& generated, const std::vector<int>& predictions, const Moments& train,
           const Moments& test, const EvalConfig& config, uint64_t seed) {
  const auto m = moments(generated.features);
  out.fid_train.push_back(frechet_distance(train, m));
  out.fid_test.push_back(frechet_distance(test, m));
  out.accuracy.push_back(accuracy(predictions, generated.labels));
  std::mt19937_64 rng(seed);
  out.diversity.push_back(diversity(generated.features, config.diversity_pairs, rng));
  out.multimodality.push_back(multimodality(generated.features, generated.labels, config.multimodality_pairs, rng));
}

void check(const EvalConfig& c) {
  if (c.per_action_count < 2 || c.seeds < 1 || c.duration < 1 || c.diversity_pairs < 1 || c.multimodality_pairs < 1)
    throw Error(ErrorCode::InvalidConfig, "evaluation counts must be positive (>= 2 samples per action)");
}

}  // namespace

MetricRow evaluate_sampler(const Sampler& sampler, int num_actions, Recognizer& recognizer,
                           const std::vector<body::Motion>& real_train,
                           const std::vector<body::Motion>& real_test, const EvalConfig& config,
                           const std::string& label) {
  check(config);
  if (num_actions != recognizer->config().num_actions)
    throw Error(ErrorCode::ActionSetMismatch, "generator has " + std::to_string(num_actions) +
                                                  " actions, recognizer has " +
                                                  std::to_string(recognizer->config().num_actions));
  const auto train = moments(extract_features(recognizer, real_train, FeatureSource::RealTrain).features);
  const auto test = moments(extract_features(recognizer, real_test, FeatureSource::RealTest).features);
  std::vector<int> actions;
  for (int a = 0; a < num_actions; ++a)
    for (int k = 0; k < config.per_action_count; ++k) actions.push_back(a);
  SeedMetrics metrics;
  for (int s = 0; s < config.seeds; ++s) {
    const auto seed = seed_for(config.seed, s);
    const auto motions = sampler(actions, config.duration, seed);
    if (motions.size() != actions.size()) throw Error(ErrorCode::ShapeMismatch, "sampler returned a wrong count");
    auto generated = extract_features(recognizer, motions, FeatureSource::Generated);
    generated.labels = actions;
    score(metrics, generated, predict(recognizer, motions), train, test, config, seed);
  }
  return metrics.row(label);
}

double generated_accuracy(const Sampler& sampler, int num_actions, Recognizer& recognizer, int duration,
                          int per_action_count, uint64_t seed) {
  std::vector<int> actions;
  for (int a = 0; a < num_actions; ++a)
    for (int k = 0; k < per_action_count; ++k) actions.push_back(a);
  const auto motions = sampler(actions, duration, seed);
  for (const auto& m : motions)
    if (m.length() != duration) throw Error(ErrorCode::LengthMismatch, "sampler returned a wrong duration");
  return accuracy(predict(recognizer, motions), actions);
}

MetricRow evaluate(model::ActorModel model, Recognizer& recognizer, const std::vector<body::Motion>& real_train,
                   const std::vector<body::Motion>& real_test, const EvalConfig& config, const std::string& label) {
  return evaluate_sampler(model_sampler(model), model->config().num_actions, recognizer, real_train, real_test, config,
                          label);
}

MetricRow evaluate_real(Recognizer& recognizer, const std::vector<body::Motion>& real_train,
                        const std::vector<body::Motion>& real_test, const EvalConfig& config) {
  check(config);
  const auto train = moments(extract_features(recognizer, real_train, FeatureSource::RealTrain).features);
  const auto test_set = extract_features(recognizer, real_test, FeatureSource::RealTest);
  const auto test = moments(test_set.features);
  const auto predictions = predict(recognizer, real_test);
  SeedMetrics metrics;
  for (int s = 0; s < config.seeds; ++s) score(metrics, test_set, predictions, train, test, config, seed_for(config.seed, s));
  return metrics.row("Real");
}

}  // namespace actor::eval
