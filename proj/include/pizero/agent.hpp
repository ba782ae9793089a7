#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "pizero/abstract_model.hpp"
#include "pizero/envs.hpp"
#include "pizero/planner.hpp"

namespace pizero {

struct AgentConfig {
  ModelConfig model;
  PlannerConfig planner;
  /// When off, the abstract action is the argmax of the root prediction
  /// logits (reactive ablation).
  bool use_planner = true;

  void validate() const;
  friend bool operator==(const AgentConfig&, const AgentConfig&) = default;
};

struct AgentStep {
  envs::EnvAction action;
  std::vector<double> action_params;
  std::size_t abstract_action = 0;
  Memory memory;
};

struct TraceStep {
  std::vector<double> observation;
  std::size_t abstract_action = 0;
  envs::EnvAction action;
  double reward = 0.0;
};

struct EpisodeRecord {
  std::uint64_t seed = 0;
  double score = 0.0;
  std::size_t steps = 0;
  std::vector<TraceStep> trace;
};

/// Random streams of one episode, all derived from the episode seed.
struct EpisodeStreams {
  explicit EpisodeStreams(std::uint64_t episode_seed);

  std::uint64_t env_seed;
  Rng search;
  Rng noise;
};

class Agent {
 public:
  Agent(const AgentConfig& config, const envs::EnvSpec& env);

  const AgentConfig& config() const { return config_; }
  const envs::EnvSpec& env_spec() const { return env_; }
  const AbstractModel& model() const { return model_; }

  /// encode -> plan -> decode -> update memory.
  AgentStep step(std::span<const double> theta, const Memory& memory,
                 std::span<const double> observation, Rng& search_rng, Rng& noise_rng) const;

 private:
  AgentConfig config_;
  envs::EnvSpec env_;
  AbstractModel model_;
};

/// Builds a freshly initialized environment for an episode seed.
using EnvFactory = std::function<std::unique_ptr<envs::Environment>(std::uint64_t)>;

EnvFactory env_factory(const envs::EnvParams& params);

/// Plays one episode of at most `horizon` steps with memory starting at zero.
EpisodeRecord run_episode(const Agent& agent, std::span<const double> theta,
                          const EnvFactory& factory, std::uint64_t episode_seed,
                          bool record_trace = false);

/// Plays an episode with an arbitrary policy; used for fixtures and baselines.
using Policy = std::function<envs::EnvAction(std::span<const double> observation, std::size_t t)>;
EpisodeRecord play_episode(envs::Environment& env, const Policy& policy);

}  // namespace pizero
