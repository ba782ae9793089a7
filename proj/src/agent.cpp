#include "pizero/agent.hpp"

#include "pizero/error.hpp"
#include "pizero/rng.hpp"

namespace pizero {

namespace {
constexpr std::uint64_t kEnvStream = 1;
constexpr std::uint64_t kSearchStream = 2;
constexpr std::uint64_t kNoiseStream = 3;
}  // namespace

void AgentConfig::validate() const {
  model.validate();
  if (planner.budget < 1) throw ConfigError("simulation budget must be >= 1");
  if (planner.chance_nodes != model.chance_nodes) {
    throw ConfigError("planner and model disagree on chance nodes");
  }
}

EpisodeStreams::EpisodeStreams(std::uint64_t episode_seed)
    : env_seed(mix_seed(episode_seed, kEnvStream)),
      search(episode_seed, kSearchStream),
      noise(episode_seed, kNoiseStream) {}

Agent::Agent(const AgentConfig& config, const envs::EnvSpec& env)
    : config_(config), env_(env), model_(config.model, env.observation_dim, env.action_dim) {
  config_.validate();
}

AgentStep Agent::step(std::span<const double> theta, const Memory& memory,
                      std::span<const double> observation, Rng& search_rng,
                      Rng& noise_rng) const {
  const AbstractState root = model_.encode(theta, memory, observation);

  std::size_t abstract_action = 0;
  if (config_.use_planner) {
    const BoundModel bound(model_, theta);
    abstract_action = run_search(bound, root, config_.planner, search_rng).action;
  } else {
    abstract_action = nn::argmax(model_.predict(theta, root).logits);
  }

  std::vector<double> noise(config_.model.noise_width);
  for (double& v : noise) v = noise_rng.normal();

  AgentStep out;
  out.abstract_action = abstract_action;
  out.action_params = model_.decode(theta, root, abstract_action, noise);
  out.action = envs::interpret_action(env_, out.action_params);
  out.memory = model_.memory_update(theta, memory, observation,
                                    envs::encode_action(env_, out.action));
  return out;
}

EnvFactory env_factory(const envs::EnvParams& params) {
  return [params](std::uint64_t seed) {
    auto env = envs::make_env(params);
    env->reset(seed);
    return env;
  };
}

EpisodeRecord run_episode(const Agent& agent, std::span<const double> theta,
                          const EnvFactory& factory, std::uint64_t episode_seed,
                          bool record_trace) {
  EpisodeStreams streams(episode_seed);
  auto env = factory(streams.env_seed);
  const std::size_t horizon = env->spec().horizon;

  EpisodeRecord record;
  record.seed = episode_seed;
  Memory memory = agent.model().initial_memory();
  while (record.steps < horizon && !env->done()) {
    const auto observation = env->observe();
    AgentStep step = agent.step(theta, memory, observation, streams.search, streams.noise);
    const auto result = env->step(step.action);
    record.score += result.reward;
    ++record.steps;
    if (record_trace) {
      record.trace.push_back({observation, step.abstract_action, step.action, result.reward});
    }
    memory = std::move(step.memory);
  }
  return record;
}

EpisodeRecord play_episode(envs::Environment& env, const Policy& policy) {
  EpisodeRecord record;
  const std::size_t horizon = env.spec().horizon;
  while (record.steps < horizon && !env.done()) {
    const auto observation = env.observe();
    const auto action = policy(observation, record.steps);
    const auto result = env.step(action);
    record.score += result.reward;
    ++record.steps;
    record.trace.push_back({observation, 0, action, result.reward});
  }
  return record;
}

}  // namespace pizero
