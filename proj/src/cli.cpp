#include "tempcycle/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>

#include "tempcycle/config.hpp"
#include "tempcycle/data.hpp"
#include "tempcycle/eval.hpp"
#include "tempcycle/infer.hpp"
#include "tempcycle/log.hpp"
#include "tempcycle/synth.hpp"
#include "tempcycle/trainer.hpp"

namespace tempcycle {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Refuses to clobber a non-empty output unless --overwrite was given, in
// which case the old output is removed first.
void prepare_output_dir(const fs::path& dir, bool overwrite) {
  if (fs::exists(dir) && !(fs::is_directory(dir) && fs::is_empty(dir))) {
    if (!overwrite) throw std::runtime_error("refusing to overwrite existing output " + dir.string() + " (pass --overwrite)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

void prepare_output_file(const fs::path& file, bool overwrite) {
  if (fs::exists(file)) {
    if (!overwrite) throw std::runtime_error("refusing to overwrite existing output " + file.string() + " (pass --overwrite)");
    fs::remove(file);
  }
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

void log_config(const TrainConfig& config) {
  std::string line;
  for (const auto& [k, v] : config_to_map(config)) line += " " + k + "=" + v;
  log::info("resolved config:", line);
  log::info("master seed: ", config.seed);
}

struct SynthArgs {
  SynthOptions options;
  std::string out;
  bool smoke = false;
  bool overwrite = false;
};

int run_synth(const SynthArgs& a) {
  auto o = a.options;
  if (a.smoke) {
    o.train_videos = 2;
    o.test_videos = 2;
    o.frames_per_video = 15;
    o.size = 36;
  }
  log::info("synth: seed=", o.seed, " train_videos=", o.train_videos, " test_videos=", o.test_videos,
            " frames=", o.frames_per_video, " size=", o.size);
  log::info("master seed: ", o.seed);
  prepare_output_dir(a.out, a.overwrite);
  synth_corpus(a.out, o);
  log::info("wrote ", (fs::path(a.out) / "manifest.json").string());
  return kExitOk;
}

struct TrainArgs {
  std::string config_file, data_x, data_y, out, resume;
  bool baseline = false, smoke = false, overwrite = false;
};

int run_train(const TrainArgs& a) {
  TrainConfig config = a.smoke ? smoke_preset() : TrainConfig{};
  if (!a.config_file.empty()) config = load_train_config(a.config_file, config);
  if (a.baseline) config.baseline = true;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  std::optional<TrainState> state;
  if (!a.resume.empty()) {
    state = TrainState::load(a.resume);
    log::info("resuming from ", a.resume, " at step ", state->step);
    config = state->config;
    fs::create_directories(a.out);
  } else {
    prepare_output_dir(a.out, a.overwrite);
  }
  log_config(config);

  const auto x_set = scan_videos(a.data_x);
  const auto y_set = scan_videos(a.data_y);
  const auto x = load_triplets(x_set, config.triplet_stride, config.resolved_load_size());
  const auto y = load_triplets(y_set, config.triplet_stride, config.resolved_load_size());
  log::info("triplets: X=", x.size(), " Y=", y.size());
  if (!state) state = TrainState::create(config);

  const auto final_ckpt = train(*state, x, y, a.out, [](int64_t step, int64_t epoch, const LossReport& r) {
    log::debug("step ", step, " epoch ", epoch, " G=", r.total_generators, " D=", r.total_discriminators);
  });
  log::info("final checkpoint: ", final_ckpt.string());
  return kExitOk;
}

struct TranslateArgs {
  std::string checkpoint, in, out, direction = "x2y";
  bool overwrite = false;
};

int run_translate(const TranslateArgs& a) {
  const auto direction = parse_direction(a.direction);
  log::info("translate: checkpoint=", a.checkpoint, " direction=", a.direction);
  const auto model = load_generator(a.checkpoint, direction);
  log_config(model.config);
  prepare_output_dir(a.out, a.overwrite);
  const auto n = translate_video(a.checkpoint, a.in, a.out, direction);
  log::info("translated ", n, " frames into ", a.out);
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint, baseline, data, report;
  bool overwrite = false;
};

int run_eval(const EvalArgs& a) {
  const auto model = load_generator(a.checkpoint, Direction::XtoY);
  log_config(model.config);
  prepare_output_file(a.report, a.overwrite);
  std::optional<fs::path> baseline;
  if (!a.baseline.empty()) baseline = a.baseline;
  const auto report = compare_models(a.checkpoint, baseline, a.data);
  report.write_csv(a.report);
  auto summary_path = fs::path(a.report);
  summary_path.replace_extension(".summary.json");
  std::ofstream(summary_path) << report.summary_json() << '\n';
  log::info("videos: ", report.rows.size(), " mean flicker: ", report.mean_flicker);
  if (report.flicker_ratio) {
    log::info("baseline mean flicker: ", *report.mean_baseline_flicker, " ratio: ", *report.flicker_ratio);
  }
  std::cout << report.summary_json() << '\n';
  return kExitOk;
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv) {
  CLI::App app{"Temporally consistent unpaired video translation (tempCycleGAN) toolkit", "tempcycle"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "debug | info | warn | error")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}));

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic two-domain video corpus");
  synth_cmd->add_option("--out", synth.out, "Output root")->required();
  synth_cmd->add_option("--seed", synth.options.seed, "Master seed");
  synth_cmd->add_option("--train-videos", synth.options.train_videos, "Training videos per domain");
  synth_cmd->add_option("--test-videos", synth.options.test_videos, "Test videos per domain");
  synth_cmd->add_option("--frames", synth.options.frames_per_video, "Frames per video");
  synth_cmd->add_option("--size", synth.options.size, "Frame edge in pixels (multiple of 4)");
  synth_cmd->add_flag("--smoke", synth.smoke, "Tiny corpus for the smoke preset");
  synth_cmd->add_flag("--overwrite", synth.overwrite, "Replace an existing output directory");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train tempCycleGAN (or the per-frame baseline)");
  train_cmd->add_option("--config", train_args.config_file, "Flat key = value config file");
  train_cmd->add_option("--data-x", train_args.data_x, "Domain X split directory")->required();
  train_cmd->add_option("--data-y", train_args.data_y, "Domain Y split directory")->required();
  train_cmd->add_option("--out", train_args.out, "Run directory")->required();
  train_cmd->add_option("--resume", train_args.resume, "Checkpoint to resume from");
  train_cmd->add_flag("--baseline", train_args.baseline, "Per-frame CycleGAN baseline");
  train_cmd->add_flag("--smoke", train_args.smoke, "32x32, width 0.25, 2 epochs preset (config file overrides)");
  train_cmd->add_flag("--overwrite", train_args.overwrite, "Replace an existing run directory");

  TranslateArgs tr;
  auto* tr_cmd = app.add_subcommand("translate", "Translate a frame directory with a trained generator");
  tr_cmd->add_option("--checkpoint", tr.checkpoint, "Checkpoint file")->required();
  tr_cmd->add_option("--in", tr.in, "Input video directory")->required();
  tr_cmd->add_option("--out", tr.out, "Output directory")->required();
  tr_cmd->add_option("--direction", tr.direction, "x2y | y2x")->check(CLI::IsMember({"x2y", "y2x"}));
  tr_cmd->add_flag("--overwrite", tr.overwrite, "Replace an existing output directory");

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "Flicker and cycle-reconstruction report on a test split");
  ev_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  ev_cmd->add_option("--baseline", ev.baseline, "Baseline checkpoint to compare against");
  ev_cmd->add_option("--data", ev.data, "Domain X test split directory")->required();
  ev_cmd->add_option("--report", ev.report, "Report CSV path")->required();
  ev_cmd->add_flag("--overwrite", ev.overwrite, "Replace an existing report");

  try {
    app.parse(argc, argv);
    log::threshold() = log::parse_level(log_level);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "tempcycle: usage error: " << e.what() << '\n';
    const CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    std::cerr << failing->help();
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "tempcycle: usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (train_cmd->parsed()) return run_train(train_args);
    if (tr_cmd->parsed()) return run_translate(tr);
    if (ev_cmd->parsed()) return run_eval(ev);
  } catch (const ConfigError& e) {
    log::error("config: ", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    log::error(e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}

int parse_and_dispatch(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"tempcycle"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_and_dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace tempcycle
