#ifndef LOCOLAB_EVAL_EVAL_H_
#define LOCOLAB_EVAL_EVAL_H_

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "locolab/adapt/adapt.h"
#include "locolab/ppo/bundle.h"
#include "locolab/ppo/env.h"
#include "locolab/ppo/reward.h"

namespace locolab::eval {

struct TrialRecord {
  terrain::TerrainKind kind = terrain::TerrainKind::kPlane;
  int difficulty = 0;
  double command = 0.0;   // m/s
  bool fell = false;
  double fall_time = 0.0;  // s, meaningful when fell
  bool reached_goal = false;
  double elapsed = 0.0;    // s
  double t_max = 0.0;      // s
  double distance = 0.0;   // m, forward progress
  // Per control step.
  std::vector<sim::JointVector> torques;
  std::vector<sim::JointVector> joint_vels;
  std::vector<double> velocities;
  std::vector<double> task_rewards;
};

// Time average of sum_i max(0, tau_i * qdot_i). Throws DimMismatch.
double AvgPower(const std::vector<Eigen::VectorXd>& torques,
                const std::vector<Eigen::VectorXd>& joint_vels);
double AvgPower(const TrialRecord& record);
// fell ? fall_time / t_max : 1.
double Ttf(const TrialRecord& record, double t_max);
bool Success(const TrialRecord& record);
// 100 * mean task reward / (w_v + w_omega); 0 for a record without steps.
double TrackingAcc(const TrialRecord& record,
                   const ppo::RewardWeights& weights);

struct Interval {
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 * sample sd / sqrt(n)
};
// Throws InsufficientSamples when there are fewer than two samples.
Interval ConfidenceInterval(const std::vector<double>& samples);

// Decides the actions for one trial at a time.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual void BeginTrial(int trial) { (void)trial; }
  // May inspect or override the environment before the step.
  virtual Eigen::VectorXd Act(ppo::LocomotionEnv& env) = 0;
};

// Holds the nominal pose; trunk driven into the ground on the first step.
class AlwaysFallsAgent : public Agent {
 public:
  std::string name() const override { return "scripted_fall"; }
  Eigen::VectorXd Act(ppo::LocomotionEnv& env) override;
};

// Moves the standing robot forward at exactly the commanded speed.
class TeleportAgent : public Agent {
 public:
  std::string name() const override { return "scripted_oracle"; }
  Eigen::VectorXd Act(ppo::LocomotionEnv& env) override;
};

// Trial k teleports, or falls at `fall_after` seconds when
// falls[k % falls.size()] is set.
class ScheduledAgent : public Agent {
 public:
  ScheduledAgent(std::vector<bool> falls, double fall_after);
  std::string name() const override { return "scripted_schedule"; }
  void BeginTrial(int trial) override { trial_ = trial; }
  Eigen::VectorXd Act(ppo::LocomotionEnv& env) override;

 private:
  std::vector<bool> falls_;
  double fall_after_;
  int trial_ = 0;
};

// Deterministic policy means; the student path uses the history predictor.
class PolicyAgent : public Agent {
 public:
  // Throws BundleMismatch when `student` is set and the bundle has no
  // matching student.
  PolicyAgent(const ppo::PolicyBundle& bundle, bool student);
  std::string name() const override { return student_ ? "student" : "teacher"; }
  void BeginTrial(int trial) override;
  Eigen::VectorXd Act(ppo::LocomotionEnv& env) override;

 private:
  const ppo::PolicyBundle& bundle_;
  bool student_;
  adapt::HistoryBuffer history_;
  sim::JointVector nominal_;
};

struct EvalCell {
  terrain::TerrainKind kind = terrain::TerrainKind::kPlane;
  int difficulty = 0;
  double command = 0.5;  // m/s

  // "kind:difficulty:command", e.g. "stairs:9:0.5".
  std::string Name() const;
  friend bool operator==(const EvalCell&, const EvalCell&) = default;
};
// Throws ConfigError.
EvalCell EvalCellFromString(const std::string& text);
// Every terrain at difficulty 9 for each command.
std::vector<EvalCell> DefaultSuite(const std::vector<double>& commands = {
                                       0.5, 1.0, 1.5});

struct EvalConfig {
  ppo::EnvConfig env;  // episode_seconds and curriculum are overridden
  std::vector<EvalCell> cells = DefaultSuite();
  int n_trials = 10;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  double goal_distance = 8.0;  // m from spawn
  double time_slack = 0.5;     // t_max = goal_distance / command * (1 + slack)
  double success_gate = 0.6;   // power and accuracy reported at or above

  void Validate() const;
  double TMax(double command) const;
};

struct TrialResult {
  std::uint64_t seed = 0;
  int cell = 0;  // index into EvalConfig::cells
  int trial = 0;
  TrialRecord record;
};

// One trial of `cell` with a fresh environment seeded from (seed, cell, trial).
TrialResult RunTrial(Agent& agent, const EvalConfig& config, int cell_index,
                     std::uint64_t seed, int trial);

struct Metric {
  double mean = 0.0;
  std::optional<double> half_width;  // absent for fewer than two trials
};

struct CellReport {
  std::uint64_t seed = 0;
  EvalCell cell;
  int n_trials = 0;
  Metric success_rate;
  Metric ttf;
  // Absent when the success rate is below the gate.
  std::optional<Metric> acc_percent;
  std::optional<Metric> avg_power;
};

struct MetricsReport {
  std::vector<TrialResult> trials;
  std::vector<CellReport> cells;  // one per (seed, cell), seed-major
  bool complete = true;           // false when interrupted
};

// Pure fold over trial results.
std::vector<CellReport> Aggregate(const std::vector<TrialResult>& trials,
                                  const EvalConfig& config);

// Runs n_trials per cell per seed. Stops early, with complete = false, when
// `stop` becomes true.
MetricsReport RunEval(Agent& agent, const EvalConfig& config,
                      const std::atomic<bool>* stop = nullptr);

// Fixed column order; numbers use a fixed precision.
std::string MetricsCsvHeader();
void WriteMetricsCsv(std::ostream& out, const MetricsReport& report,
                     const EvalConfig& config);
std::string ReportCsvHeader();
void WriteReportCsv(std::ostream& out, const MetricsReport& report);
void WriteReportTable(std::ostream& out, const MetricsReport& report);

}  // namespace locolab::eval

#endif  // LOCOLAB_EVAL_EVAL_H_
