#include "locolab/eval/eval.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "locolab/errors.h"
#include "locolab/sim/kinematics.h"

namespace locolab::eval {

namespace {

std::string Fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

std::string Fmt(const std::optional<double>& v) {
  return v ? Fmt(*v) : std::string();
}

Metric Summarize(const std::vector<double>& samples) {
  Metric m;
  if (samples.size() >= 2) {
    const Interval ci = ConfidenceInterval(samples);
    m.mean = ci.mean;
    m.half_width = ci.half_width;
  } else if (!samples.empty()) {
    m.mean = samples.front();
  }
  return m;
}

// Pitches the trunk past the fall threshold.
void TipOver(ppo::LocomotionEnv& env) {
  sim::RobotState s = env.state();
  s.base_pitch = 1.5;
  env.set_state(s);
}

// Standing pose at spawn + command * (elapsed + dt), moving at the command.
void Teleport(ppo::LocomotionEnv& env) {
  const double dt = env.physics().ControlDt();
  const double x = env.config().spawn_x +
                   env.command() * dt * (env.episode_steps() + 1);
  sim::RobotState s = sim::StandingState(
      env.config().morphology, env.terrain(), x,
      sim::NominalJointAngles(env.config().morphology));
  s.base_lin_vel.x() = env.command();
  s.time = env.state().time;
  s.step_count = env.state().step_count;
  env.set_state(s);
}

}  // namespace

double AvgPower(const std::vector<Eigen::VectorXd>& torques,
                const std::vector<Eigen::VectorXd>& joint_vels) {
  if (torques.size() != joint_vels.size())
    throw DimMismatch("torque and joint velocity series differ in length");
  if (torques.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t t = 0; t < torques.size(); ++t) {
    if (torques[t].size() != joint_vels[t].size())
      throw DimMismatch("torque and joint velocity vectors differ in size");
    total += torques[t].cwiseProduct(joint_vels[t]).cwiseMax(0.0).sum();
  }
  return total / static_cast<double>(torques.size());
}

double AvgPower(const TrialRecord& record) {
  std::vector<Eigen::VectorXd> tau(record.torques.begin(), record.torques.end());
  std::vector<Eigen::VectorXd> qd(record.joint_vels.begin(),
                                  record.joint_vels.end());
  return AvgPower(tau, qd);
}

double Ttf(const TrialRecord& record, double t_max) {
  if (!(t_max > 0.0)) throw InvalidRange("t_max must be > 0");
  return record.fell ? record.fall_time / t_max : 1.0;
}

bool Success(const TrialRecord& record) {
  return record.reached_goal && !record.fell && record.elapsed <= record.t_max;
}

double TrackingAcc(const TrialRecord& record,
                   const ppo::RewardWeights& weights) {
  if (record.task_rewards.empty()) return 0.0;
  double sum = 0.0;
  for (double r : record.task_rewards) sum += r;
  return 100.0 * sum / static_cast<double>(record.task_rewards.size()) /
         weights.MaxTaskReward();
}

Interval ConfidenceInterval(const std::vector<double>& samples) {
  const std::size_t n = samples.size();
  if (n < 2)
    throw InsufficientSamples("a confidence interval needs at least 2 samples");
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return {mean, 1.96 * sd / std::sqrt(static_cast<double>(n))};
}

Eigen::VectorXd AlwaysFallsAgent::Act(ppo::LocomotionEnv& env) {
  TipOver(env);
  return Eigen::VectorXd::Zero(sim::kNumJoints);
}

Eigen::VectorXd TeleportAgent::Act(ppo::LocomotionEnv& env) {
  Teleport(env);
  return Eigen::VectorXd::Zero(sim::kNumJoints);
}

ScheduledAgent::ScheduledAgent(std::vector<bool> falls, double fall_after)
    : falls_(std::move(falls)), fall_after_(fall_after) {
  if (falls_.empty()) throw ConfigError("fall schedule must not be empty");
}

Eigen::VectorXd ScheduledAgent::Act(ppo::LocomotionEnv& env) {
  const double elapsed = env.episode_steps() * env.physics().ControlDt();
  if (falls_[static_cast<std::size_t>(trial_) % falls_.size()] &&
      elapsed >= fall_after_ - 1e-12)
    TipOver(env);
  else
    Teleport(env);
  return Eigen::VectorXd::Zero(sim::kNumJoints);
}

PolicyAgent::PolicyAgent(const ppo::PolicyBundle& bundle, bool student)
    : bundle_(bundle),
      student_(student),
      history_(bundle.nets.history_length),
      nominal_(sim::JointVector::Zero()) {
  if (student_) adapt::CheckStudent(bundle_);
}

void PolicyAgent::BeginTrial(int /*trial*/) { history_.Clear(); }

Eigen::VectorXd PolicyAgent::Act(ppo::LocomotionEnv& env) {
  nominal_ = sim::NominalJointAngles(env.config().morphology);
  const Eigen::VectorXd obs = ppo::ObsVector(env.obs(), nominal_);
  if (!student_)
    return adapt::TeacherAct(bundle_, ppo::PrivilegedVector(env.Privileged()),
                             obs);
  history_.Push(obs);
  return adapt::StudentAct(bundle_, history_, obs);
}

std::string EvalCell::Name() const {
  std::ostringstream out;
  out << terrain::ToString(kind) << ':' << difficulty << ':' << Fmt(command);
  return out.str();
}

EvalCell EvalCellFromString(const std::string& text) {
  std::istringstream in(text);
  std::string kind, difficulty, command;
  if (!std::getline(in, kind, ':') || !std::getline(in, difficulty, ':') ||
      !std::getline(in, command) || command.empty())
    throw ConfigError("cell '" + text + "' is not kind:difficulty:command");
  EvalCell cell;
  cell.kind = terrain::TerrainKindFromString(kind);
  try {
    std::size_t used = 0;
    cell.difficulty = std::stoi(difficulty, &used);
    if (used != difficulty.size()) throw std::invalid_argument(difficulty);
    cell.command = std::stod(command, &used);
    if (used != command.size()) throw std::invalid_argument(command);
  } catch (const std::logic_error&) {
    throw ConfigError("cell '" + text + "' has a malformed number");
  }
  return cell;
}

std::vector<EvalCell> DefaultSuite(const std::vector<double>& commands) {
  std::vector<EvalCell> cells;
  for (int k = 0; k < terrain::kNumTerrainKinds; ++k)
    for (double c : commands)
      cells.push_back({static_cast<terrain::TerrainKind>(k),
                       terrain::kMaxDifficulty, c});
  return cells;
}

void EvalConfig::Validate() const {
  env.Validate();
  if (cells.empty()) throw ConfigError("evaluation needs at least one cell");
  for (const EvalCell& c : cells) {
    if (c.difficulty < 0 || c.difficulty > terrain::kMaxDifficulty)
      throw InvalidDifficulty("cell " + c.Name() + " difficulty out of 0..9");
    if (!(c.command > 0.0))
      throw ConfigError("cell " + c.Name() + " needs a positive command");
  }
  if (n_trials < 1) throw ConfigError("eval.n_trials must be >= 1");
  if (seeds.empty()) throw ConfigError("eval.seeds must not be empty");
  if (!(goal_distance > 0.0) ||
      env.spawn_x + goal_distance > terrain::kBlockLength)
    throw ConfigError("eval.goal_distance must be > 0 and end inside the block");
  if (!(time_slack >= 0.0)) throw ConfigError("eval.time_slack must be >= 0");
  if (!(success_gate >= 0.0 && success_gate <= 1.0))
    throw ConfigError("eval.success_gate must lie in [0, 1]");
}

double EvalConfig::TMax(double command) const {
  return goal_distance / command * (1.0 + time_slack);
}

TrialResult RunTrial(Agent& agent, const EvalConfig& config, int cell_index,
                     std::uint64_t seed, int trial) {
  const EvalCell& cell = config.cells.at(static_cast<std::size_t>(cell_index));
  const double t_max = config.TMax(cell.command);
  ppo::EnvConfig env_config = config.env;
  env_config.fixed_command = cell.command;
  env_config.curriculum = false;
  env_config.episode_seconds = 2.0 * t_max + 1.0;
  ppo::LocomotionEnv env(
      env_config, cell.kind, cell.difficulty,
      MixSeed(MixSeed(seed, static_cast<std::uint64_t>(cell_index)),
              static_cast<std::uint64_t>(trial)));
  const double dt = env.physics().ControlDt();
  const double start_x = env.state().base_pos.x();

  TrialResult result;
  result.seed = seed;
  result.cell = cell_index;
  result.trial = trial;
  TrialRecord& r = result.record;
  r.kind = cell.kind;
  r.difficulty = cell.difficulty;
  r.command = cell.command;
  r.t_max = t_max;
  agent.BeginTrial(trial);
  const int max_steps = static_cast<int>(std::floor(t_max / dt + 1e-9));
  for (int step = 0; step < max_steps; ++step) {
    const Eigen::VectorXd action = agent.Act(env);
    const ppo::StepOutcome out = env.Step(action);
    r.elapsed = (step + 1) * dt;
    r.torques.push_back(env.state().applied_torque);
    r.joint_vels.push_back(env.state().joint_vels);
    r.velocities.push_back(env.state().base_lin_vel.x());
    r.task_rewards.push_back(out.task_reward);
    r.distance = std::max(0.0, env.state().base_pos.x() - start_x);
    if (out.episode && out.episode->fell) {
      r.fell = true;
      r.fall_time = r.elapsed;
      break;
    }
    if (r.distance >= config.goal_distance) {
      r.reached_goal = true;
      break;
    }
  }
  return result;
}

std::vector<CellReport> Aggregate(const std::vector<TrialResult>& trials,
                                  const EvalConfig& config) {
  std::vector<CellReport> out;
  for (std::uint64_t seed : config.seeds) {
    for (std::size_t c = 0; c < config.cells.size(); ++c) {
      std::vector<double> success, ttf, acc, power;
      for (const TrialResult& t : trials) {
        if (t.seed != seed || t.cell != static_cast<int>(c)) continue;
        success.push_back(Success(t.record) ? 1.0 : 0.0);
        ttf.push_back(Ttf(t.record, t.record.t_max));
        acc.push_back(TrackingAcc(t.record, config.env.reward));
        power.push_back(AvgPower(t.record));
      }
      if (success.empty()) continue;
      CellReport r;
      r.seed = seed;
      r.cell = config.cells[c];
      r.n_trials = static_cast<int>(success.size());
      r.success_rate = Summarize(success);
      r.ttf = Summarize(ttf);
      if (r.success_rate.mean >= config.success_gate) {
        r.acc_percent = Summarize(acc);
        r.avg_power = Summarize(power);
      }
      out.push_back(r);
    }
  }
  return out;
}

MetricsReport RunEval(Agent& agent, const EvalConfig& config,
                      const std::atomic<bool>* stop) {
  config.Validate();
  MetricsReport report;
  for (std::uint64_t seed : config.seeds) {
    for (std::size_t c = 0; c < config.cells.size(); ++c) {
      for (int trial = 0; trial < config.n_trials; ++trial) {
        if (stop && stop->load()) {
          report.complete = false;
          report.cells = Aggregate(report.trials, config);
          return report;
        }
        report.trials.push_back(
            RunTrial(agent, config, static_cast<int>(c), seed, trial));
      }
    }
  }
  report.cells = Aggregate(report.trials, config);
  return report;
}

std::string MetricsCsvHeader() {
  return "seed,terrain,difficulty,command,trial,fell,fall_time,reached_goal,"
         "elapsed,t_max,distance,success,ttf,acc_percent,avg_power_w";
}

void WriteMetricsCsv(std::ostream& out, const MetricsReport& report,
                     const EvalConfig& config) {
  out << MetricsCsvHeader() << '\n';
  for (const TrialResult& t : report.trials) {
    const TrialRecord& r = t.record;
    out << t.seed << ',' << terrain::ToString(r.kind) << ',' << r.difficulty
        << ',' << Fmt(r.command) << ',' << t.trial << ',' << r.fell << ','
        << Fmt(r.fall_time) << ',' << r.reached_goal << ',' << Fmt(r.elapsed)
        << ',' << Fmt(r.t_max) << ',' << Fmt(r.distance) << ',' << Success(r)
        << ',' << Fmt(Ttf(r, r.t_max)) << ','
        << Fmt(TrackingAcc(r, config.env.reward)) << ',' << Fmt(AvgPower(r))
        << '\n';
  }
}

std::string ReportCsvHeader() {
  return "seed,terrain,difficulty,command,n_trials,success_rate,"
         "success_rate_ci95,ttf,ttf_ci95,acc_percent,acc_percent_ci95,"
         "avg_power_w,avg_power_w_ci95";
}

void WriteReportCsv(std::ostream& out, const MetricsReport& report) {
  out << ReportCsvHeader() << '\n';
  for (const CellReport& c : report.cells) {
    out << c.seed << ',' << terrain::ToString(c.cell.kind) << ','
        << c.cell.difficulty << ',' << Fmt(c.cell.command) << ',' << c.n_trials
        << ',' << Fmt(c.success_rate.mean) << ','
        << Fmt(c.success_rate.half_width) << ',' << Fmt(c.ttf.mean) << ','
        << Fmt(c.ttf.half_width);
    for (const auto& m : {c.acc_percent, c.avg_power}) {
      if (m)
        out << ',' << Fmt(m->mean) << ',' << Fmt(m->half_width);
      else
        out << ",,";
    }
    out << '\n';
  }
}

void WriteReportTable(std::ostream& out, const MetricsReport& report) {
  auto cell = [](const std::optional<Metric>& m, int precision) {
    if (!m) return std::string("-");
    std::ostringstream s;
    s << std::fixed << std::setprecision(precision) << m->mean;
    if (m->half_width) s << " +- " << *m->half_width;
    return s.str();
  };
  out << std::left << std::setw(6) << "seed" << std::setw(28) << "cell"
      << std::setw(8) << "trials" << std::setw(20) << "success"
      << std::setw(20) << "ttf" << std::setw(22) << "acc %" << "power W\n";
  for (const CellReport& c : report.cells)
    out << std::left << std::setw(6) << c.seed << std::setw(28)
        << c.cell.Name() << std::setw(8) << c.n_trials << std::setw(20)
        << cell(c.success_rate, 3) << std::setw(20) << cell(c.ttf, 3)
        << std::setw(22) << cell(c.acc_percent, 2) << cell(c.avg_power, 2)
        << '\n';
  if (!report.complete) out << "(interrupted: partial report)\n";
}

}  // namespace locolab::eval
