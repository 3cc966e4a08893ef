// Command-line entry point: dataset generation, training, finetuning,
// generation, evaluation, ablation sweeps, denoising and trajectory plots.

#include "actor/ablation.hpp"
#include "actor/applications.hpp"
#include "actor/config.hpp"
#include "actor/data.hpp"
#include "actor/error.hpp"
#include "actor/eval.hpp"
#include "actor/training.hpp"

#include <CLI11.hpp>

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

extern char** environ;

namespace fs = std::filesystem;
using namespace actor;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDiverged = 3;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::DivergedLoss: return kExitDiverged;
    case ErrorCode::InvalidConfig:
    case ErrorCode::UnknownAction:
    case ErrorCode::UnknownVariant:
    case ErrorCode::AlphaOutOfRange: return kExitUsage;
    default: return kExitData;
  }
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::CorruptFile, "cannot write " + path.string());
    out << text;
  }
  fs::rename(tmp, path);
}

config::Experiment load_experiment(const std::string& path) {
  if (path.empty()) return {};
  return config::experiment_from_json(config::read_json_file(path));
}

int resolve_action(const std::string& text, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == text) return static_cast<int>(i);
  char* end = nullptr;
  const long id = std::strtol(text.c_str(), &end, 10);
  if (!text.empty() && *end == '\0' && id >= 0 && id < static_cast<long>(names.size())) return static_cast<int>(id);
  throw Error(ErrorCode::UnknownAction, "unknown action '" + text + "'");
}

// Loads the recognizer at `path` when it exists; otherwise trains one on the
// training split (and stores it at `path` when given).
eval::Recognizer obtain_recognizer(const std::string& path, const data::Dataset& ds, eval::RecognizerConfig rc) {
  if (!path.empty() && fs::exists(path)) {
    auto r = eval::load_recognizer(path);
    if (r->config().num_actions != ds.num_actions())
      throw Error(ErrorCode::ActionSetMismatch, "recognizer and dataset action sets differ");
    return r;
  }
  rc.num_actions = ds.num_actions();
  auto r = eval::train_recognizer(ds.train(), rc);
  if (!path.empty()) eval::save_recognizer(r, path);
  return r;
}

void print_epoch(int epoch, const std::map<std::string, double>& means) {
  std::printf("epoch %d", epoch);
  for (const auto& [name, value] : means) std::printf(" %s=%.6g", name.c_str(), value);
  std::printf("\n");
  std::fflush(stdout);
}

void write_report(const fs::path& out, const std::string& table, const nlohmann::json& j) {
  if (out.extension() == ".json") {
    write_file(out, j.dump(2) + "\n");
    return;
  }
  write_file(out, table);
  auto sibling = out;
  sibling += ".json";
  write_file(sibling, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Static trajectory strips: one panel per world axis, one polyline per joint.

std::string trajectory_svg(const body::Motion& motion, const body::Skeleton& skeleton,
                           const std::vector<std::string>& joints) {
  std::vector<int> ids;
  for (const auto& name : joints) {
    auto it = std::find(skeleton.names.begin(), skeleton.names.end(), name);
    if (it == skeleton.names.end()) throw Error(ErrorCode::InvalidConfig, "unknown joint '" + name + "'");
    ids.push_back(static_cast<int>(it - skeleton.names.begin()));
  }
  std::vector<body::PointCloud> world;
  for (const auto& f : motion.frames) world.push_back(body::forward_kinematics(skeleton, f, true));
  const int t = motion.length();
  constexpr double kWidth = 720, kPanel = 160, kMargin = 40;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};
  static const char* kAxes[] = {"x", "y", "z"};
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth + 2 * kMargin << "\" height=\""
     << 3 * kPanel + 4 * kMargin << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int axis = 0; axis < 3; ++axis) {
    double lo = 1e30, hi = -1e30;
    for (int id : ids)
      for (int k = 0; k < t; ++k) {
        lo = std::min(lo, world[k][id][axis]);
        hi = std::max(hi, world[k][id][axis]);
      }
    if (hi - lo < 1e-6) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double top = kMargin + axis * (kPanel + kMargin);
    os << "<rect x=\"" << kMargin << "\" y=\"" << top << "\" width=\"" << kWidth << "\" height=\"" << kPanel
       << "\" fill=\"none\" stroke=\"#888\"/>\n";
    os << "<text x=\"" << 4 << "\" y=\"" << top + kPanel / 2 << "\">" << kAxes[axis] << "</text>\n";
    for (std::size_t j = 0; j < ids.size(); ++j) {
      os << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << kColors[j % 7] << "\" points=\"";
      for (int k = 0; k < t; ++k) {
        const double x = kMargin + (t > 1 ? kWidth * k / (t - 1) : 0.0);
        const double y = top + kPanel * (1.0 - (world[k][ids[j]][axis] - lo) / (hi - lo));
        os << x << ',' << y << (k + 1 < t ? " " : "");
      }
      os << "\"/>\n";
    }
  }
  const double legend = 3 * (kPanel + kMargin) + kMargin - 10;
  for (std::size_t j = 0; j < ids.size(); ++j)
    os << "<text x=\"" << kMargin + 110.0 * j << "\" y=\"" << legend << "\" fill=\"" << kColors[j % 7] << "\">"
       << joints[j] << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Ablation workers: each grid point in its own process, merged by index.

int worker_count() {
  const char* env = std::getenv("ACTOR_NUM_WORKERS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n < 1 ? 1 : n;
}

std::vector<ablation::PointResult> run_points_in_workers(const std::string& suite, std::size_t count,
                                                          const fs::path& data, const fs::path& experiment,
                                                          const fs::path& recognizer, const fs::path& work,
                                                          int workers) {
  std::vector<ablation::PointResult> results(count);
  std::vector<std::pair<pid_t, std::size_t>> running;
  std::size_t next = 0;
  auto reap = [&](pid_t pid, int status) {
    for (auto it = running.begin(); it != running.end(); ++it) {
      if (it->first != pid) continue;
      const auto index = it->second;
      running.erase(it);
      const auto path = work / ("point_" + std::to_string(index) + ".json");
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0 || !fs::exists(path))
        throw Error(ErrorCode::CorruptFile, "ablation worker for grid point " + std::to_string(index) + " failed");
      results[index] = ablation::PointResult::from_json(config::read_json_file(path));
      return;
    }
  };
  while (next < count || !running.empty()) {
    while (next < count && static_cast<int>(running.size()) < workers) {
      const auto out = work / ("point_" + std::to_string(next) + ".json");
      std::vector<std::string> args = {"actor",         "ablate-point",       "--suite",
                                       suite,           "--index",            std::to_string(next),
                                       "--data",        data.string(),        "--experiment",
                                       experiment.string(), "--recognizer", recognizer.string(),
                                       "--out",         out.string()};
      std::vector<char*> argv;
      for (auto& a : args) argv.push_back(a.data());
      argv.push_back(nullptr);
      pid_t pid = 0;
      if (posix_spawn(&pid, "/proc/self/exe", nullptr, nullptr, argv.data(), environ) != 0)
        throw Error(ErrorCode::CorruptFile, "cannot start an ablation worker");
      running.emplace_back(pid, next++);
    }
    int status = 0;
    const pid_t pid = waitpid(-1, &status, 0);
    if (pid < 0) throw Error(ErrorCode::CorruptFile, "lost track of ablation workers");
    reap(pid, status);
  }
  return results;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Action-conditioned human motion generation"};
  app.require_subcommand(1);

  // gen-data
  std::string spec_path, out;
  auto* gen_data = app.add_subcommand("gen-data", "Synthesize a labeled motion dataset");
  gen_data->add_option("--spec", spec_path, "Dataset spec (JSON)");
  gen_data->add_option("--out", out, "Output directory")->required();
  std::optional<uint64_t> data_seed;
  gen_data->add_option("--seed", data_seed, "Override the spec seed");

  // train
  std::string config_path, data_dir;
  std::optional<int> epochs, batch_size;
  std::optional<uint64_t> seed;
  std::optional<double> lr;
  auto* train = app.add_subcommand("train", "Train at a fixed sequence length");
  train->add_option("--config", config_path, "Experiment config (JSON)");
  train->add_option("--data", data_dir, "Dataset directory")->required();
  train->add_option("--out", out, "Checkpoint path")->required();
  train->add_option("--epochs", epochs, "Override train.epochs");
  train->add_option("--batch-size", batch_size, "Override train.batch_size");
  train->add_option("--lr", lr, "Override train.learning_rate");
  train->add_option("--seed", seed, "Override train.seed");

  // finetune-var
  std::string ckpt_path;
  std::vector<int> range = {60, 100};
  int ft_epochs = 100;
  auto* finetune = app.add_subcommand("finetune-var", "Finetune a checkpoint on variable durations");
  finetune->add_option("--ckpt", ckpt_path, "Pretrained checkpoint")->required();
  finetune->add_option("--data", data_dir, "Dataset directory")->required();
  finetune->add_option("--range", range, "Duration range T_min T_max")->expected(2);
  finetune->add_option("--epochs", ft_epochs, "Finetuning epochs");
  finetune->add_option("--out", out, "Output checkpoint (default: overwrite --ckpt)");

  // generate
  std::string action;
  int duration = 60;
  uint64_t gen_seed = 0;
  double fps = 20.0;
  auto* generate = app.add_subcommand("generate", "Sample one motion for an action");
  generate->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  generate->add_option("--action", action, "Action name or index")->required();
  generate->add_option("--duration", duration, "Number of frames");
  generate->add_option("--seed", gen_seed, "Latent sampling seed");
  generate->add_option("--fps", fps, "Frame rate stored in the file");
  generate->add_option("--out", out, "Motion file")->required();

  // evaluate
  std::string recognizer_path;
  std::optional<int> seeds, per_action;
  auto* evaluate = app.add_subcommand("evaluate", "Score generations against the real data");
  evaluate->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  evaluate->add_option("--data", data_dir, "Dataset directory")->required();
  evaluate->add_option("--config", config_path, "Experiment config (eval/recognizer sections)");
  evaluate->add_option("--seeds", seeds, "Generation seeds");
  evaluate->add_option("--per-action", per_action, "Generated motions per action and seed");
  evaluate->add_option("--recognizer", recognizer_path, "Recognizer file (trained and stored when missing)");
  evaluate->add_option("--out", out, "Report path (table; JSON alongside, or JSON only for .json)")->required();

  // ablate
  std::string suite_name;
  auto* ablate = app.add_subcommand("ablate", "Run an ablation grid");
  ablate->add_option("--suite", suite_name, "loss|arch|kl|batch|layers|rotrep|duration")
      ->required()
      ->check(CLI::IsMember({"loss", "arch", "kl", "batch", "layers", "rotrep", "duration"}));
  ablate->add_option("--data", data_dir, "Dataset directory")->required();
  ablate->add_option("--config", config_path, "Experiment config (JSON)");
  ablate->add_option("--epochs", epochs, "Override train.epochs for every grid point");
  ablate->add_option("--seeds", seeds, "Override eval.seeds");
  ablate->add_option("--recognizer", recognizer_path, "Recognizer file (trained and stored when missing)");
  ablate->add_option("--out", out, "Table path (JSON alongside)");

  // ablate-point (internal: one grid point, used by parallel workers)
  std::string experiment_path;
  std::size_t index = 0;
  auto* ablate_point = app.add_subcommand("ablate-point", "");
  ablate_point->group("");
  ablate_point->add_option("--suite", suite_name)->required();
  ablate_point->add_option("--index", index)->required();
  ablate_point->add_option("--data", data_dir)->required();
  ablate_point->add_option("--experiment", experiment_path)->required();
  ablate_point->add_option("--recognizer", recognizer_path)->required();
  ablate_point->add_option("--out", out)->required();

  // denoise
  std::string in_path;
  bool report_jitter = false;
  auto* denoise = app.add_subcommand("denoise", "Encode-decode a motion through the posterior mean");
  denoise->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  denoise->add_option("--in", in_path, "Input motion file")->required();
  denoise->add_option("--action", action, "Action name or index (default: the file's label)");
  denoise->add_option("--out", out, "Output motion file")->required();
  denoise->add_flag("--report-jitter", report_jitter, "Print jitter before and after");

  // augment
  auto* augment = app.add_subcommand("augment", "Recognizer accuracy for real/denoised/generated training sets");
  augment->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  augment->add_option("--data", data_dir, "Dataset directory")->required();
  augment->add_option("--config", config_path, "Experiment config (recognizer section)");
  augment->add_option("--out", out, "Table path (JSON alongside)")->required();

  // plot
  std::vector<std::string> plot_joints = {"pelvis", "head", "left_wrist", "right_wrist", "left_ankle", "right_ankle"};
  auto* plot = app.add_subcommand("plot", "Static joint-trajectory strips (SVG)");
  plot->add_option("--in", in_path, "Motion file")->required();
  plot->add_option("--out", out, "SVG path")->required();
  plot->add_option("--joints", plot_joints, "Joints to draw");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    const body::RigidSkeletonBody body(body::Skeleton::standard());

    if (*gen_data) {
      data::DatasetSpec spec;
      if (!spec_path.empty()) spec = config::dataset_spec_from_json(config::read_json_file(spec_path));
      if (data_seed) spec.seed = *data_seed;
      data::save_dataset(data::generate_dataset(spec), out);
      std::printf("wrote %d actions x %d sequences to %s\n", static_cast<int>(spec.actions.size()),
                  spec.sequences_per_action, out.c_str());
    } else if (*train) {
      auto exp = load_experiment(config_path);
      if (epochs) exp.train.epochs = *epochs;
      if (batch_size) exp.train.batch_size = *batch_size;
      if (lr) exp.train.learning_rate = *lr;
      if (seed) exp.train.seed = *seed;
      const auto ds = data::load_dataset(data_dir);
      exp.model.num_actions = ds.num_actions();
      exp.model.num_joints = ds.motions.front().joint_count();
      training::TrainHooks hooks;
      hooks.on_epoch = print_epoch;
      hooks.checkpoint_path = fs::path(out);
      training::train(exp.model, ds, exp.train, body, hooks);
      std::printf("saved %s\n", out.c_str());
    } else if (*finetune) {
      if (range.size() != 2) throw Error(ErrorCode::InvalidConfig, "--range needs T_min T_max");
      const auto ck = training::load_checkpoint(ckpt_path);
      const auto ds = data::load_dataset(data_dir);
      training::TrainHooks hooks;
      hooks.on_epoch = print_epoch;
      hooks.checkpoint_path = fs::path(out.empty() ? ckpt_path : out);
      training::finetune_variable(ck, ds, {range[0], range[1]}, ft_epochs, body, hooks);
      std::printf("saved %s\n", hooks.checkpoint_path->c_str());
    } else if (*generate) {
      auto ck = training::load_checkpoint(ckpt_path);
      const int a = resolve_action(action, ck.action_names);
      auto gen = model::make_generator(gen_seed);
      const auto motion = model::generate(ck.model, a, duration, gen, fps);
      data::save_motion(motion, out);
      std::printf("wrote %s (%s, %d frames)\n", out.c_str(), ck.action_names[a].c_str(), duration);
    } else if (*evaluate) {
      auto exp = load_experiment(config_path);
      if (seeds) exp.eval.seeds = *seeds;
      if (per_action) exp.eval.per_action_count = *per_action;
      auto ck = training::load_checkpoint(ckpt_path);
      const auto ds = data::load_dataset(data_dir);
      if (ck.action_names != ds.action_names)
        throw Error(ErrorCode::ActionSetMismatch, "checkpoint and dataset action sets differ");
      auto rec = obtain_recognizer(recognizer_path, ds, exp.recognizer);
      eval::EvalReport report;
      report.seeds = exp.eval.seeds;
      report.per_action_count = exp.eval.per_action_count;
      const auto train_set = ds.train();
      const auto test_set = ds.test();
      report.rows.push_back(eval::evaluate_real(rec, train_set, test_set, exp.eval));
      report.rows.push_back(eval::evaluate(ck.model, rec, train_set, test_set, exp.eval,
                                           std::string(model::variant_name(ck.model_config.variant))));
      const auto table = report.table();
      std::fputs(table.c_str(), stdout);
      write_report(out, table, report.to_json());
    } else if (*ablate) {
      auto exp = load_experiment(config_path);
      if (epochs) exp.train.epochs = *epochs;
      if (seeds) exp.eval.seeds = *seeds;
      const auto suite = ablation::suite_from_name(suite_name);
      const auto ds = data::load_dataset(data_dir);
      exp.model.num_actions = ds.num_actions();
      exp.model.num_joints = ds.motions.front().joint_count();
      auto rec = obtain_recognizer(recognizer_path, ds, exp.recognizer);
      const auto config = exp.ablation();
      const auto count = ablation::grid(suite, config).size();
      const int workers = std::min<int>(worker_count(), static_cast<int>(count));
      std::vector<ablation::PointResult> points;
      if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
          points.push_back(ablation::run_point(suite, i, ds, config, rec, body));
          std::printf("[%zu/%zu] %s%s\n", i + 1, count, points.back().label.c_str(),
                      points.back().ok ? "" : " (failed)");
          std::fflush(stdout);
        }
      } else {
        char pattern[] = "/tmp/actor-ablate-XXXXXX";
        if (!mkdtemp(pattern)) throw Error(ErrorCode::CorruptFile, "cannot create a work directory");
        const fs::path work(pattern);
        const auto exp_file = work / "experiment.json";
        const auto rec_file = work / "recognizer.pt";
        write_file(exp_file, config::to_json(exp).dump(2));
        eval::save_recognizer(rec, rec_file);
        points = run_points_in_workers(suite_name, count, fs::absolute(data_dir), exp_file, rec_file, work, workers);
        fs::remove_all(work);
      }
      const auto result = ablation::assemble(suite, config, rec, ds, std::move(points));
      const auto table = result.table();
      std::fputs(table.c_str(), stdout);
      if (!out.empty()) write_report(out, table, result.to_json());
    } else if (*ablate_point) {
      const auto exp = config::experiment_from_json(config::read_json_file(experiment_path));
      const auto ds = data::load_dataset(data_dir);
      auto rec = eval::load_recognizer(recognizer_path);
      const auto r = ablation::run_point(ablation::suite_from_name(suite_name), index, ds, exp.ablation(), rec, body);
      write_file(out, r.to_json().dump());
    } else if (*denoise) {
      auto ck = training::load_checkpoint(ckpt_path);
      const auto motion = data::load_motion(in_path);
      const int a = action.empty() ? motion.action : resolve_action(action, ck.action_names);
      if (a < 0 || a >= ck.model_config.num_actions) throw Error(ErrorCode::UnknownAction, "action out of range");
      const auto clean = apps::denoise(ck.model, motion, a);
      data::save_motion(clean, out);
      if (report_jitter)
        std::printf("jitter_in=%.6g jitter_out=%.6g\n", apps::jitter_score(motion), apps::jitter_score(clean));
    } else if (*augment) {
      const auto exp = load_experiment(config_path);
      auto ck = training::load_checkpoint(ckpt_path);
      const auto ds = data::load_dataset(data_dir);
      if (ck.action_names != ds.action_names)
        throw Error(ErrorCode::ActionSetMismatch, "checkpoint and dataset action sets differ");
      apps::AugmentConfig ac;
      ac.recognizer = exp.recognizer;
      ac.duration = exp.eval.duration;
      ac.seed = exp.recognizer.seed;
      const auto t = apps::augmentation_table(ds.train(), ds.test(), ck.model, ac);
      std::fputs(t.table().c_str(), stdout);
      write_report(out, t.table(), t.to_json());
    } else if (*plot) {
      const auto motion = data::load_motion(in_path);
      if (fs::path(out).extension() != ".svg") throw Error(ErrorCode::InvalidConfig, "plot writes SVG (.svg) files");
      write_file(out, trajectory_svg(motion, body.skeleton(), plot_joints));
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitOk;
}
