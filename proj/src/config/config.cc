#include "locolab/config/config.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "locolab/errors.h"

using nlohmann::json;

namespace nlohmann {

template <>
struct adl_serializer<locolab::sim::JointVector> {
  static void to_json(json& j, const locolab::sim::JointVector& v) {
    j = json::array();
    for (double x : v) j.push_back(x);
  }
  static void from_json(const json& j, locolab::sim::JointVector& v) {
    if (!j.is_array() || j.size() != locolab::sim::kNumJoints)
      throw locolab::ConfigError("expected an array of 8 numbers");
    for (int i = 0; i < locolab::sim::kNumJoints; ++i) v[i] = j[i].get<double>();
  }
};

}  // namespace nlohmann

// Enums travel as their names; unknown names throw ConfigError.
#define LOCOLAB_JSON_ENUM(Type, FromString)                           \
  inline void to_json(json& j, const Type& v) { j = ToString(v); }    \
  inline void from_json(const json& j, Type& v) {                     \
    v = FromString(j.get<std::string>());                             \
  }

#define LOCOLAB_JSON_STRUCT(Type, ...) \
  NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Type, __VA_ARGS__)

namespace locolab::nn {
LOCOLAB_JSON_ENUM(Activation, ActivationFromString)
}  // namespace locolab::nn

namespace locolab::terrain {
LOCOLAB_JSON_ENUM(TerrainKind, TerrainKindFromString)
LOCOLAB_JSON_STRUCT(CommandRange, lo, hi)
}  // namespace locolab::terrain

namespace locolab::motion {
LOCOLAB_JSON_ENUM(GaitLabel, GaitLabelFromString)
LOCOLAB_JSON_STRUCT(GaitParams, label, period, duty_factor, phase_offsets,
                    step_length, step_height, base_height, forward_vel)
}  // namespace locolab::motion

namespace locolab::sim {
LOCOLAB_JSON_STRUCT(RobotMorphology, trunk_mass, trunk_inertia, trunk_length,
                    leg_attach_x, thigh_length, shank_length, thigh_mass,
                    shank_mass, joint_torque_limit, hip_min, hip_max, knee_min,
                    knee_max)
LOCOLAB_JSON_STRUCT(PhysicsParams, gravity, friction_coeff, motor_gain_scale,
                    mass_scale, kp, kd, dt_physics, substeps_per_control)
LOCOLAB_JSON_STRUCT(Range, lo, hi)
LOCOLAB_JSON_STRUCT(RandomizationRanges, friction_coeff, mass_scale,
                    motor_gain_scale)
LOCOLAB_JSON_STRUCT(PerturbationSpec, lin_vel_kick, ang_vel_kick, torque_noise,
                    interval)
LOCOLAB_JSON_STRUCT(NoiseSpec, joint_angle, joint_vel, projected_gravity,
                    pitch_rate)
}  // namespace locolab::sim

namespace locolab::amp {
LOCOLAB_JSON_ENUM(PenaltyMode, PenaltyModeFromString)
LOCOLAB_JSON_STRUCT(DiscriminatorConfig, hidden, activation, w_gp,
                    learning_rate, batch_size, penalty_mode, max_grad_norm)
}  // namespace locolab::amp

namespace locolab::ppo {
LOCOLAB_JSON_STRUCT(RewardWeights, w_goal, w_style, w_v, w_omega)
LOCOLAB_JSON_STRUCT(PpoHyper, gamma, lambda, clip, epochs, minibatches,
                    learning_rate, entropy_coef, max_grad_norm, horizon, n_envs)
LOCOLAB_JSON_STRUCT(NetworkConfig, policy_hidden, value_hidden, encoder_hidden,
                    latent_dim, predictor_hidden, history_length, init_std)

// fixed_command is null when commands are sampled.
void to_json(json& j, const EnvConfig& c) {
  j = json{{"morphology", c.morphology},
           {"physics", c.physics},
           {"randomize", c.randomize},
           {"randomization", c.randomization},
           {"noise", c.noise},
           {"perturb", c.perturb},
           {"perturbation", c.perturbation},
           {"command_ranges", c.command_ranges},
           {"fixed_command", nullptr},
           {"episode_seconds", c.episode_seconds},
           {"fall_pitch", c.fall_pitch},
           {"spawn_x", c.spawn_x},
           {"action_limit", c.action_limit},
           {"curriculum", c.curriculum},
           {"reward", c.reward}};
  if (std::isfinite(c.fixed_command)) j["fixed_command"] = c.fixed_command;
}

void from_json(const json& j, EnvConfig& c) {
  j.at("morphology").get_to(c.morphology);
  j.at("physics").get_to(c.physics);
  j.at("randomize").get_to(c.randomize);
  j.at("randomization").get_to(c.randomization);
  j.at("noise").get_to(c.noise);
  j.at("perturb").get_to(c.perturb);
  j.at("perturbation").get_to(c.perturbation);
  j.at("command_ranges").get_to(c.command_ranges);
  c.fixed_command = j.at("fixed_command").is_null()
                        ? std::numeric_limits<double>::quiet_NaN()
                        : j.at("fixed_command").get<double>();
  j.at("episode_seconds").get_to(c.episode_seconds);
  j.at("fall_pitch").get_to(c.fall_pitch);
  j.at("spawn_x").get_to(c.spawn_x);
  j.at("action_limit").get_to(c.action_limit);
  j.at("curriculum").get_to(c.curriculum);
  j.at("reward").get_to(c.reward);
}
}  // namespace locolab::ppo

namespace locolab::adapt {
LOCOLAB_JSON_ENUM(DistillMode, DistillModeFromString)
}  // namespace locolab::adapt

namespace locolab::eval {
void to_json(json& j, const EvalCell& c) { j = c.Name(); }
void from_json(const json& j, EvalCell& c) {
  c = EvalCellFromString(j.get<std::string>());
}
}  // namespace locolab::eval

namespace locolab::config {

namespace {

json TrainJson(const ppo::TrainConfig& t) {
  return {{"ppo", t.ppo},
          {"nets", t.nets},
          {"disc", t.disc},
          {"terrain_kinds", t.terrain_kinds},
          {"initial_level", t.initial_level},
          {"amp_enabled", t.amp_enabled},
          {"freeze_discriminator", t.freeze_discriminator},
          {"policy_pair_capacity", t.policy_pair_capacity},
          {"iterations", t.iterations}};
}

void TrainFromJson(const json& j, ppo::TrainConfig& t) {
  j.at("ppo").get_to(t.ppo);
  j.at("nets").get_to(t.nets);
  j.at("disc").get_to(t.disc);
  j.at("terrain_kinds").get_to(t.terrain_kinds);
  j.at("initial_level").get_to(t.initial_level);
  j.at("amp_enabled").get_to(t.amp_enabled);
  j.at("freeze_discriminator").get_to(t.freeze_discriminator);
  j.at("policy_pair_capacity").get_to(t.policy_pair_capacity);
  j.at("iterations").get_to(t.iterations);
}

json DistillJson(const RunConfig& c) {
  const adapt::DistillConfig& d = c.distill;
  json j = {{"epochs", d.epochs},
            {"n_envs", d.n_envs},
            {"steps_per_epoch", d.steps_per_epoch},
            {"validation_envs", d.validation_envs},
            {"validation_steps", d.validation_steps},
            {"updates_per_epoch", d.updates_per_epoch},
            {"batch_size", d.batch_size},
            {"learning_rate", d.learning_rate},
            {"max_grad_norm", d.max_grad_norm},
            {"dataset_capacity", d.dataset_capacity},
            {"mode", d.mode},
            {"terrain_kinds", c.distill_terrain_kinds},
            {"level", c.distill_level},
            {"episode_seconds", nullptr}};
  if (std::isfinite(c.distill_episode_seconds))
    j["episode_seconds"] = c.distill_episode_seconds;
  return j;
}

void DistillFromJson(const json& j, RunConfig& c) {
  adapt::DistillConfig& d = c.distill;
  j.at("epochs").get_to(d.epochs);
  j.at("n_envs").get_to(d.n_envs);
  j.at("steps_per_epoch").get_to(d.steps_per_epoch);
  j.at("validation_envs").get_to(d.validation_envs);
  j.at("validation_steps").get_to(d.validation_steps);
  j.at("updates_per_epoch").get_to(d.updates_per_epoch);
  j.at("batch_size").get_to(d.batch_size);
  j.at("learning_rate").get_to(d.learning_rate);
  j.at("max_grad_norm").get_to(d.max_grad_norm);
  j.at("dataset_capacity").get_to(d.dataset_capacity);
  j.at("mode").get_to(d.mode);
  j.at("terrain_kinds").get_to(c.distill_terrain_kinds);
  j.at("level").get_to(c.distill_level);
  c.distill_episode_seconds = j.at("episode_seconds").is_null()
                                  ? std::numeric_limits<double>::quiet_NaN()
                                  : j.at("episode_seconds").get<double>();
}

json EvalJson(const RunConfig& c) {
  const eval::EvalConfig& e = c.eval;
  json j = {{"agent", c.eval_agent},
            {"cells", e.cells},
            {"n_trials", e.n_trials},
            {"seeds", e.seeds},
            {"goal_distance", e.goal_distance},
            {"time_slack", e.time_slack},
            {"success_gate", e.success_gate},
            {"min_success_rate", nullptr}};
  if (std::isfinite(c.eval_min_success_rate))
    j["min_success_rate"] = c.eval_min_success_rate;
  return j;
}

void EvalFromJson(const json& j, RunConfig& c) {
  eval::EvalConfig& e = c.eval;
  j.at("agent").get_to(c.eval_agent);
  j.at("cells").get_to(e.cells);
  j.at("n_trials").get_to(e.n_trials);
  j.at("seeds").get_to(e.seeds);
  j.at("goal_distance").get_to(e.goal_distance);
  j.at("time_slack").get_to(e.time_slack);
  j.at("success_gate").get_to(e.success_gate);
  c.eval_min_success_rate = j.at("min_success_rate").is_null()
                                ? std::numeric_limits<double>::quiet_NaN()
                                : j.at("min_success_rate").get<double>();
}

json ToJson(const RunConfig& c) {
  return {{"schema_version", c.schema_version},
          {"seed", c.seed},
          {"deterministic", c.deterministic},
          {"out_dir", c.out_dir},
          {"clips_dir", c.clips_dir},
          {"checkpoint_dir", c.checkpoint_dir},
          {"log_dir", c.log_dir},
          {"checkpoint_every", c.checkpoint_every},
          {"motion",
           {{"gaits", c.motion.gaits},
            {"frames", c.motion.frames},
            {"frame_rate", c.motion.frame_rate},
            {"mirror", c.motion.mirror}}},
          {"env", c.env},
          {"train", TrainJson(c.train)},
          {"distill", DistillJson(c)},
          {"eval", EvalJson(c)}};
}

RunConfig FromFullJson(const json& j) {
  RunConfig c;
  j.at("schema_version").get_to(c.schema_version);
  j.at("seed").get_to(c.seed);
  j.at("deterministic").get_to(c.deterministic);
  j.at("out_dir").get_to(c.out_dir);
  j.at("clips_dir").get_to(c.clips_dir);
  j.at("checkpoint_dir").get_to(c.checkpoint_dir);
  j.at("log_dir").get_to(c.log_dir);
  j.at("checkpoint_every").get_to(c.checkpoint_every);
  const json& m = j.at("motion");
  m.at("gaits").get_to(c.motion.gaits);
  m.at("frames").get_to(c.motion.frames);
  m.at("frame_rate").get_to(c.motion.frame_rate);
  m.at("mirror").get_to(c.motion.mirror);
  j.at("env").get_to(c.env);
  TrainFromJson(j.at("train"), c.train);
  DistillFromJson(j.at("distill"), c);
  EvalFromJson(j.at("eval"), c);
  return c;
}

bool SameKind(const json& schema, const json& value) {
  if (schema.is_null()) return value.is_null() || value.is_number();
  if (schema.is_number()) return value.is_number();
  return schema.type() == value.type();
}

// Checks `user` against the defaults and overlays it. Objects merge key by
// key; anything else replaces the default wholesale.
void Overlay(json& base, const json& user, const std::string& path) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown key '" + key + "'");
    json& slot = base[it.key()];
    if (!SameKind(slot, *it))
      throw ConfigError("key '" + key + "' has the wrong type (expected " +
                        std::string(slot.type_name()) + ")");
    if (slot.is_object()) {
      Overlay(slot, *it, key);
    } else if (slot.is_array() && !slot.empty() && slot[0].is_object()) {
      // Object elements are overlaid on a copy of the first default.
      const json element = slot[0];
      json merged = json::array();
      for (std::size_t i = 0; i < it->size(); ++i) {
        const std::string at = key + "[" + std::to_string(i) + "]";
        if (!(*it)[i].is_object())
          throw ConfigError("key '" + at + "' must be an object");
        json e = element;
        Overlay(e, (*it)[i], at);
        merged.push_back(std::move(e));
      }
      slot = std::move(merged);
    } else {
      slot = *it;
    }
  }
}

template <typename F>
void Check(std::vector<std::string>& problems, const std::string& where,
           F&& check) {
  try {
    check();
  } catch (const Error& e) {
    problems.push_back(where + ": " + e.what());
  }
}

}  // namespace

ppo::TrainConfig RunConfig::ResolvedTrain() const {
  ppo::TrainConfig t = train;
  t.env = env;
  t.seed = seed;
  return t;
}

adapt::DistillConfig RunConfig::ResolvedDistill() const {
  adapt::DistillConfig d = distill;
  d.seed = seed;
  return d;
}

eval::EvalConfig RunConfig::ResolvedEval() const {
  eval::EvalConfig e = eval;
  e.env = env;
  return e;
}

ppo::EnvConfig RunConfig::DistillEnv() const {
  ppo::EnvConfig e = env;
  if (std::isfinite(distill_episode_seconds))
    e.episode_seconds = distill_episode_seconds;
  return e;
}

std::string RunConfig::Path(const std::string& dir) const {
  const std::filesystem::path p(dir);
  return p.is_absolute() ? p.string() : (std::filesystem::path(out_dir) / p).string();
}

std::vector<std::string> RunConfig::Problems() const {
  std::vector<std::string> problems;
  if (schema_version != kRunConfigSchemaVersion)
    problems.push_back("schema_version must be " +
                       std::to_string(kRunConfigSchemaVersion));
  if (out_dir.empty()) problems.push_back("out_dir must not be empty");
  if (checkpoint_every < 1) problems.push_back("checkpoint_every must be >= 1");
  if (motion.gaits.empty()) problems.push_back("motion.gaits must not be empty");
  for (std::size_t i = 0; i < motion.gaits.size(); ++i)
    Check(problems, "motion.gaits[" + std::to_string(i) + "]",
          [&] { motion.gaits[i].Validate(); });
  if (motion.frames < 2) problems.push_back("motion.frames must be >= 2");
  if (!(motion.frame_rate > 0.0))
    problems.push_back("motion.frame_rate must be > 0");
  for (const std::string& p : ResolvedTrain().Problems())
    problems.push_back("train: " + p);
  Check(problems, "distill", [&] { distill.Validate(); });
  if (distill_terrain_kinds.empty())
    problems.push_back("distill.terrain_kinds must not be empty");
  if (distill_level < 0 || distill_level > terrain::kMaxDifficulty)
    problems.push_back("distill.level must be in 0..9");
  if (std::isfinite(distill_episode_seconds) && !(distill_episode_seconds > 0.0))
    problems.push_back("distill.episode_seconds must be > 0");
  Check(problems, "eval", [&] { ResolvedEval().Validate(); });
  if (eval_agent != "student" && eval_agent != "teacher" &&
      eval_agent != "scripted_fall" && eval_agent != "scripted_oracle")
    problems.push_back(
        "eval.agent must be student, teacher, scripted_fall or "
        "scripted_oracle");
  if (std::isfinite(eval_min_success_rate) &&
      (eval_min_success_rate < 0.0 || eval_min_success_rate > 1.0))
    problems.push_back("eval.min_success_rate must be in [0, 1]");
  return problems;
}

void RunConfig::Validate() const {
  const auto problems = Problems();
  if (problems.empty()) return;
  std::string message = "invalid config:";
  for (const auto& p : problems) message += "\n  - " + p;
  throw ConfigError(message);
}

RunConfig FromJsonText(const std::string& text) {
  json user;
  try {
    user = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!user.is_object()) throw ConfigError("config must be a JSON object");
  if (user.contains("schema_version")) {
    if (!user["schema_version"].is_number_integer())
      throw ConfigError("schema_version must be an integer");
    const int version = user["schema_version"].get<int>();
    if (version != kRunConfigSchemaVersion)
      throw SchemaVersionMismatch("config schema_version " +
                                  std::to_string(version) + " (expected " +
                                  std::to_string(kRunConfigSchemaVersion) + ")");
  }
  json full = ToJson(RunConfig{});
  Overlay(full, user, "");
  try {
    return FromFullJson(full);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return FromJsonText(text.str());
}

std::string ToJsonText(const RunConfig& config) {
  return ToJson(config).dump(2);
}

}  // namespace locolab::config
