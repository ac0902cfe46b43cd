// locolab: command-line entry point for the quadruped pipeline.
//
// Exit codes: 0 success, 1 invalid configuration or arguments, 2 runtime
// failure (including an interrupted evaluation or a failed eval gate).
// LOCOLAB_LOG_LEVEL = error | warn | info | debug (default info).

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "locolab/adapt/adapt.h"
#include "locolab/config/config.h"
#include "locolab/errors.h"
#include "locolab/eval/eval.h"
#include "locolab/motion/motion.h"
#include "locolab/ppo/bundle.h"
#include "locolab/ppo/trainer.h"

namespace fs = std::filesystem;

namespace locolab::cli {
namespace {

enum class LogLevel { kError, kWarn, kInfo, kDebug };

LogLevel g_level = LogLevel::kInfo;

LogLevel LevelFromEnv() {
  const char* raw = std::getenv("LOCOLAB_LOG_LEVEL");
  if (raw == nullptr) return LogLevel::kInfo;
  const std::string v = raw;
  if (v == "error") return LogLevel::kError;
  if (v == "warn") return LogLevel::kWarn;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void Log(LogLevel level, const std::string& message) {
  if (level > g_level) return;
  static const char* kTags[] = {"error", "warn", "info", "debug"};
  std::cerr << "[" << kTags[static_cast<int>(level)] << "] " << message
            << std::endl;
}

// Invalid configuration or usage: exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::atomic<bool> g_stop{false};
extern "C" void OnSigint(int) { g_stop.store(true); }

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::optional<std::string> out_dir;
  bool dry_run = false;
};

struct Options {
  // gen-mocap has none; retarget / mirror
  std::string input;
  std::string output;
  // train-teacher
  std::optional<int> iterations;
  bool resume = false;
  // distill
  std::string teacher;
  std::string student;
  std::optional<int> epochs;
  // evaluate
  std::string bundle;
  std::optional<std::string> agent;
  std::vector<std::string> cells;
  std::string eval_dir;
};

config::RunConfig Resolve(const GlobalOptions& g) {
  config::RunConfig c;
  try {
    if (!g.config_path.empty()) c = config::LoadRunConfig(g.config_path);
  } catch (const IoError& e) {
    throw UsageError(e.what());
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  } catch (const SchemaVersionMismatch& e) {
    throw UsageError(e.what());
  }
  if (g.seed) c.seed = *g.seed;
  if (g.deterministic) c.deterministic = true;
  if (g.out_dir) c.out_dir = *g.out_dir;
  return c;
}

void CheckAndPrint(const config::RunConfig& c, const std::string& command) {
  const auto problems = c.Problems();
  if (!problems.empty()) {
    std::string message = "invalid config:";
    for (const auto& p : problems) message += "\n  - " + p;
    throw UsageError(message);
  }
  if (!c.deterministic)
    Log(LogLevel::kWarn,
        "deterministic=false has no effect; every command runs "
        "single-threaded");
  std::cout << "# locolab " << command << ", resolved config\n"
            << config::ToJsonText(c) << std::endl;
}

void EnsureDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

void EnsureParent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) EnsureDir(parent.string());
}

void RequireFile(const std::string& path, const std::string& hint) {
  if (!fs::is_regular_file(path))
    throw IoError("'" + path + "' does not exist; " + hint);
}

std::vector<std::string> ClipFiles(const std::string& dir) {
  std::vector<std::string> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".clip")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<motion::MotionClip> LoadClips(const config::RunConfig& c) {
  std::vector<motion::MotionClip> clips;
  for (const auto& f : ClipFiles(c.Path(c.clips_dir)))
    clips.push_back(motion::LoadClip(f));
  return clips;
}

// A bundle file that does not parse is the wrong file, not a missing one.
ppo::PolicyBundle LoadBundle(const std::string& path, const std::string& hint) {
  RequireFile(path, hint);
  try {
    return ppo::PolicyBundle::Load(path);
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw BundleMismatch("'" + path + "' is not a usable bundle: " + e.what());
  }
}

int CmdGenMocap(const config::RunConfig& c, bool dry_run) {
  const std::string dir = c.Path(c.clips_dir);
  std::map<std::string, int> seen;
  std::vector<std::pair<std::string, motion::MotionClip>> out;
  for (std::size_t i = 0; i < c.motion.gaits.size(); ++i) {
    const motion::GaitParams& g = c.motion.gaits[i];
    std::string stem = ToString(g.label);
    if (seen[stem]++ > 0) stem += "_" + std::to_string(i);
    if (dry_run) {
      out.emplace_back(stem, motion::MotionClip{});
      continue;
    }
    motion::MotionClip clip =
        motion::SynthGait(g, c.motion.frames, c.motion.frame_rate,
                          c.env.morphology);
    if (c.motion.mirror) out.emplace_back(stem + "_mirror", motion::Mirror(clip));
    out.emplace_back(stem, std::move(clip));
  }
  if (dry_run) {
    std::cout << "dry run: would write " << out.size() * (c.motion.mirror ? 2 : 1)
              << " clips to " << dir << std::endl;
    return 0;
  }
  EnsureDir(dir);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [stem, clip] : out) {
    const std::string path = (fs::path(dir) / (stem + ".clip")).string();
    motion::SaveClip(clip, path);
    Log(LogLevel::kInfo, "wrote " + path);
  }
  return 0;
}

int CmdRetarget(const config::RunConfig& c, const Options& o, bool dry_run) {
  RequireFile(o.input, "pass an existing clip file");
  const motion::MotionClip clip = motion::LoadClip(o.input);
  const motion::MotionClip result = motion::Retarget(clip, c.env.morphology);
  if (dry_run) {
    std::cout << "dry run: retarget ok, " << result.frames.size()
              << " frames" << std::endl;
    return 0;
  }
  EnsureParent(o.output);
  motion::SaveClip(result, o.output);
  Log(LogLevel::kInfo, "wrote " + o.output);
  return 0;
}

int CmdMirror(const Options& o, bool dry_run) {
  RequireFile(o.input, "pass an existing clip file");
  const motion::MotionClip result = motion::Mirror(motion::LoadClip(o.input));
  if (dry_run) {
    std::cout << "dry run: mirror ok" << std::endl;
    return 0;
  }
  EnsureParent(o.output);
  motion::SaveClip(result, o.output);
  Log(LogLevel::kInfo, "wrote " + o.output);
  return 0;
}

std::string TrainerCheckpoint(const config::RunConfig& c) {
  return (fs::path(c.Path(c.checkpoint_dir)) / "trainer.ckpt").string();
}
std::string TeacherBundle(const config::RunConfig& c) {
  return (fs::path(c.Path(c.checkpoint_dir)) / "teacher.bundle").string();
}
std::string StudentBundle(const config::RunConfig& c) {
  return (fs::path(c.Path(c.checkpoint_dir)) / "student.bundle").string();
}

int CmdTrainTeacher(const config::RunConfig& c, const Options& o,
                    bool dry_run) {
  const ppo::TrainConfig train = c.ResolvedTrain();
  const std::string ckpt = TrainerCheckpoint(c);
  if (train.amp_enabled && ClipFiles(c.Path(c.clips_dir)).empty())
    throw IoError("no .clip files in '" + c.Path(c.clips_dir) +
                  "'; run `locolab gen-mocap` with the same config first");
  if (o.resume) RequireFile(ckpt, "train without --resume first");
  if (dry_run) {
    std::cout << "dry run: train-teacher ok" << std::endl;
    return 0;
  }
  const std::vector<motion::MotionClip> clips = LoadClips(c);
  EnsureDir(c.Path(c.checkpoint_dir));
  EnsureDir(c.Path(c.log_dir));
  ppo::TeacherTrainer trainer =
      o.resume ? ppo::TeacherTrainer::LoadCheckpoint(ckpt, train, clips)
               : ppo::TeacherTrainer(train, clips);
  if (o.resume)
    Log(LogLevel::kInfo,
        "resuming at iteration " + std::to_string(trainer.iteration()));
  ppo::TrainOutputs outputs;
  outputs.log_path = (fs::path(c.Path(c.log_dir)) / "train.csv").string();
  outputs.checkpoint_path = ckpt;
  outputs.checkpoint_every = c.checkpoint_every;
  outputs.bundle_path = TeacherBundle(c);
  ppo::TrainTeacher(trainer, outputs, [](const ppo::IterationStats& s) {
    const LogLevel level =
        s.iteration % 10 == 0 ? LogLevel::kInfo : LogLevel::kDebug;
    std::ostringstream line;
    line << "iter " << s.iteration << " task " << s.mean_task_reward
         << " style " << s.mean_style_reward << " level " << s.mean_level
         << " disc_loss " << s.disc_loss;
    Log(level, line.str());
  });
  Log(LogLevel::kInfo, "wrote " + outputs.bundle_path);
  return 0;
}

int CmdDistill(const config::RunConfig& c, const Options& o, bool dry_run) {
  const std::string teacher_path = o.teacher.empty() ? TeacherBundle(c) : o.teacher;
  const std::string student_path = o.student.empty() ? StudentBundle(c) : o.student;
  ppo::PolicyBundle bundle =
      LoadBundle(teacher_path, "run `locolab train-teacher` first");
  if (dry_run) {
    std::cout << "dry run: distill ok" << std::endl;
    return 0;
  }
  const adapt::DistillConfig distill = c.ResolvedDistill();
  const adapt::EnvFactory factory = adapt::LocomotionEnvFactory(
      c.DistillEnv(), c.distill_terrain_kinds, c.distill_level);
  EnsureDir(c.Path(c.log_dir));
  const std::string log_path =
      (fs::path(c.Path(c.log_dir)) / "distill.csv").string();
  std::ofstream log(log_path);
  if (!log) throw IoError("cannot open '" + log_path + "'");
  log << adapt::DistillCsvHeader() << '\n';
  const adapt::DistillResult result = adapt::Distill(
      bundle, distill, factory, [&](const adapt::DistillEpochStats& s) {
        log << adapt::DistillCsvRow(s) << '\n' << std::flush;
        std::ostringstream line;
        line << "epoch " << s.epoch << " samples " << s.samples
             << " train_mse " << s.train_mse << " validation_mse "
             << s.validation_mse;
        Log(LogLevel::kInfo, line.str());
      });
  EnsureParent(student_path);
  bundle.Save(student_path);
  std::ostringstream summary;
  summary << "validation mse " << result.initial_validation_mse << " -> "
          << result.final_validation_mse();
  Log(LogLevel::kInfo, summary.str());
  if (distill.validation_steps > 0) {
    const double gap = adapt::PairedActionGap(
        bundle, factory, distill.validation_envs, distill.validation_steps,
        MixSeed(c.seed, 17));
    Log(LogLevel::kInfo, "paired action gap " + std::to_string(gap) + " rad");
  }
  Log(LogLevel::kInfo, "wrote " + student_path);
  return 0;
}

std::unique_ptr<eval::Agent> MakeAgent(const std::string& name,
                                       const ppo::PolicyBundle* bundle) {
  if (name == "scripted_fall") return std::make_unique<eval::AlwaysFallsAgent>();
  if (name == "scripted_oracle") return std::make_unique<eval::TeleportAgent>();
  return std::make_unique<eval::PolicyAgent>(*bundle, name == "student");
}

int CmdEvaluate(config::RunConfig c, const Options& o, bool dry_run) {
  const std::string agent_name = c.eval_agent;
  const bool needs_bundle =
      agent_name == "student" || agent_name == "teacher";
  std::optional<ppo::PolicyBundle> bundle;
  if (needs_bundle) {
    const std::string path =
        !o.bundle.empty() ? o.bundle
                          : (agent_name == "student" ? StudentBundle(c)
                                                     : TeacherBundle(c));
    bundle = LoadBundle(path, agent_name == "student"
                                  ? "run `locolab distill` first"
                                  : "run `locolab train-teacher` first");
  }
  std::unique_ptr<eval::Agent> agent =
      MakeAgent(agent_name, bundle ? &*bundle : nullptr);
  if (dry_run) {
    std::cout << "dry run: evaluate ok" << std::endl;
    return 0;
  }
  const eval::EvalConfig config = c.ResolvedEval();
  const std::string dir =
      o.eval_dir.empty() ? (fs::path(c.out_dir) / "eval").string() : o.eval_dir;
  EnsureDir(dir);

  std::signal(SIGINT, OnSigint);
  const eval::MetricsReport report = eval::RunEval(*agent, config, &g_stop);
  std::signal(SIGINT, SIG_DFL);

  const std::string metrics_path = (fs::path(dir) / "metrics.csv").string();
  const std::string report_path = (fs::path(dir) / "report.csv").string();
  std::ofstream metrics(metrics_path);
  std::ofstream rep(report_path);
  if (!metrics || !rep) throw IoError("cannot write reports under '" + dir + "'");
  eval::WriteMetricsCsv(metrics, report, config);
  eval::WriteReportCsv(rep, report);
  metrics.close();
  rep.close();
  eval::WriteReportTable(std::cout, report);
  Log(LogLevel::kInfo, "wrote " + metrics_path + " and " + report_path);

  if (!report.complete) {
    Log(LogLevel::kError, "interrupted; partial report written");
    return 2;
  }
  if (std::isfinite(c.eval_min_success_rate)) {
    bool failed = false;
    for (const auto& cell : report.cells) {
      if (cell.success_rate.mean < c.eval_min_success_rate) {
        failed = true;
        Log(LogLevel::kError, "gate failed: " + cell.cell.Name() + " seed " +
                                  std::to_string(cell.seed) + " success " +
                                  std::to_string(cell.success_rate.mean));
      }
    }
    if (failed) return 2;
  }
  return 0;
}

int Main(int argc, char** argv) {
  g_level = LevelFromEnv();
  CLI::App app{"locolab: planar quadruped locomotion lab"};
  app.require_subcommand(1);
  GlobalOptions g;
  Options o;
  app.add_option("--config", g.config_path, "JSON run config")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_flag("--deterministic", g.deterministic,
               "single-threaded deterministic mode");
  app.add_option("--out-dir", g.out_dir, "output root (overrides the config)");
  app.add_flag("--dry-run", g.dry_run, "validate and exit without side effects");

  CLI::App* gen = app.add_subcommand("gen-mocap", "write synthetic gait clips");
  CLI::App* retarget = app.add_subcommand("retarget", "retarget a clip");
  retarget->add_option("input", o.input, "source clip")->required();
  retarget->add_option("output", o.output, "retargeted clip")->required();
  CLI::App* mirror = app.add_subcommand("mirror", "mirror a clip");
  mirror->add_option("input", o.input, "source clip")->required();
  mirror->add_option("output", o.output, "mirrored clip")->required();
  CLI::App* train = app.add_subcommand("train-teacher", "train the teacher");
  train->add_option("--iterations", o.iterations, "total iterations");
  train->add_flag("--resume", o.resume, "continue from the trainer checkpoint");
  CLI::App* distill = app.add_subcommand("distill", "train the student");
  distill->add_option("--teacher", o.teacher, "teacher bundle");
  distill->add_option("--output", o.student, "student bundle");
  distill->add_option("--epochs", o.epochs, "distillation epochs");
  CLI::App* evaluate = app.add_subcommand("evaluate", "run the eval suite");
  evaluate->add_option("--bundle", o.bundle, "policy bundle");
  evaluate->add_option("--agent", o.agent,
                       "student, teacher, scripted_fall or scripted_oracle");
  evaluate->add_option("--cells", o.cells, "cells as kind:difficulty:command")
      ->delimiter(',');
  evaluate->add_option("--eval-dir", o.eval_dir,
                       "report directory (default <out_dir>/eval)");
  for (CLI::App* sub : {gen, retarget, mirror, train, distill, evaluate})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    config::RunConfig c = Resolve(g);
    if (o.iterations) c.train.iterations = *o.iterations;
    if (o.epochs) c.distill.epochs = *o.epochs;
    if (o.agent) c.eval_agent = *o.agent;
    if (!o.cells.empty()) {
      c.eval.cells.clear();
      try {
        for (const auto& s : o.cells)
          c.eval.cells.push_back(eval::EvalCellFromString(s));
      } catch (const ConfigError& e) {
        throw UsageError(std::string("--cells: ") + e.what());
      }
    }
    const std::string name = app.get_subcommands().front()->get_name();
    CheckAndPrint(c, name);
    if (*gen) return CmdGenMocap(c, g.dry_run);
    if (*retarget) return CmdRetarget(c, o, g.dry_run);
    if (*mirror) return CmdMirror(o, g.dry_run);
    if (*train) return CmdTrainTeacher(c, o, g.dry_run);
    if (*distill) return CmdDistill(c, o, g.dry_run);
    return CmdEvaluate(c, o, g.dry_run);
  } catch (const UsageError& e) {
    Log(LogLevel::kError, e.what());
    return 1;
  } catch (const std::exception& e) {
    Log(LogLevel::kError, e.what());
    return 2;
  }
}

}  // namespace
}  // namespace locolab::cli

int main(int argc, char** argv) { return locolab::cli::Main(argc, argv); }
