#include <doctest.h>

#include <sstream>

#include "pizero/agent.hpp"
#include "pizero/error.hpp"

using namespace pizero;

namespace {

AgentConfig small_config(bool planner) {
  AgentConfig c;
  c.model.state_dim = 4;
  c.model.memory_dim = 4;
  c.model.abstract_actions = 4;
  c.model.hidden_layers = 1;
  c.model.hidden_width = 8;
  c.use_planner = planner;
  return c;
}

// Action 0 is the only rewarding abstract action, while the prediction head
// prefers action 1. The decoder maps abstract action a to direction a.
std::vector<double> rigged_theta(const AbstractModel& m) {
  const std::size_t D = 4, k = 4, H = 8;
  auto p = m.zero_params();
  auto dyn = p.component("dynamics");
  const std::size_t Wh = 2 * D * k;
  const std::size_t bz = 3 * D * k + 3 * D * D + D;
  for (std::size_t i = 0; i < D; ++i) dyn[bz + i] = 10.0;  // update gate open
  dyn[Wh + 0 * k + 0] = 3.0;                                // s'_0 = tanh(3) only for action 0
  const std::size_t reward = 3 * D * k + 3 * D * D + 3 * D;
  dyn[reward + 0] = 1.0;
  auto pred = p.component("prediction");
  pred[H * D + H + (1 + k) * H + 2] = 1.0;  // logit of action 1
  auto dec = p.component("decoder");
  for (std::size_t a = 0; a < k; ++a) {
    dec[a * (D + k) + D + a] = 1.0;
    dec[H * (D + k) + H + a * H + a] = 1.0;
  }
  return p.values;
}

}  // namespace

TEST_CASE("zero parameters choose action 0 and keep memory at zero") {
  const auto spec = envs::env_spec(envs::EnvParams{});
  for (bool planner : {true, false}) {
    AgentConfig c;
    c.use_planner = planner;
    const Agent agent(c, spec);
    const auto theta = agent.model().zero_params().values;
    auto env = envs::make_env(envs::EnvParams{});
    env->reset(3);
    Rng s(1, 1), n(1, 2);
    const auto step = agent.step(theta, agent.model().initial_memory(), env->observe(), s, n);
    CHECK(step.abstract_action == 0);
    CHECK(std::get<std::size_t>(step.action) == 0);
    CHECK(step.memory.values == std::vector<double>(64, 0.0));

    const Memory m{std::vector<double>(64, 2.0)};
    const auto halved = agent.step(theta, m, env->observe(), s, n);
    CHECK(halved.memory.values == std::vector<double>(64, 1.0));
  }
}

TEST_CASE("planner-off ablation differs on a rigged model") {
  const auto spec = envs::env_spec(envs::EnvParams{});
  const Agent on(small_config(true), spec);
  const Agent off(small_config(false), spec);
  const auto theta = rigged_theta(on.model());
  auto env = envs::make_env(envs::EnvParams{});
  env->reset(5);
  const auto obs = env->observe();
  Rng s(0, 0), n(0, 1);
  const auto a = on.step(theta, on.model().initial_memory(), obs, s, n);
  const auto b = off.step(theta, off.model().initial_memory(), obs, s, n);
  CHECK(a.abstract_action == 0);
  CHECK(b.abstract_action == 1);
  CHECK(std::get<std::size_t>(a.action) == 0);
  CHECK(std::get<std::size_t>(b.action) == 1);
}

TEST_CASE("agent step is deterministic") {
  const auto spec = envs::env_spec(envs::EnvParams{});
  AgentConfig c = small_config(true);
  c.model.noise_width = 3;
  c.model.chance_nodes = true;
  c.planner.chance_nodes = true;
  const Agent agent(c, spec);
  const auto theta = agent.model().initialize_params(9).values;
  auto env = envs::make_env(envs::EnvParams{});
  env->reset(1);
  Rng s1(4, 2), n1(4, 3), s2(4, 2), n2(4, 3);
  const auto x = agent.step(theta, agent.model().initial_memory(), env->observe(), s1, n1);
  const auto y = agent.step(theta, agent.model().initial_memory(), env->observe(), s2, n2);
  CHECK(x.action_params == y.action_params);
  CHECK(x.memory == y.memory);
}

TEST_CASE("episodes are pure functions of parameters and seed") {
  for (auto kind : {envs::EnvKind::tsp, envs::EnvKind::collect, envs::EnvKind::g2048,
                    envs::EnvKind::flp}) {
    envs::EnvParams params;
    params.kind = kind;
    params.g2048_max_steps = 50;
    const Agent agent(small_config(true), envs::env_spec(params));
    const auto theta = agent.model().initialize_params(2).values;
    const auto factory = env_factory(params);
    const auto a = run_episode(agent, theta, factory, 17, true);
    run_episode(agent, theta, factory, 18);  // memory must not leak across episodes
    const auto b = run_episode(agent, theta, factory, 17, true);
    CHECK(a.score == b.score);
    CHECK(a.steps == b.steps);
    double sum = 0.0;
    for (const auto& t : a.trace) sum += t.reward;
    CHECK(sum == a.score);
  }
}

TEST_CASE("collect scores stay in range") {
  const envs::EnvParams params;
  const Agent agent(small_config(false), envs::env_spec(params));
  const auto factory = env_factory(params);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto theta = agent.model().initialize_params(seed).values;
    const auto r = run_episode(agent, theta, factory, seed);
    CHECK(r.score >= -5.0);
    CHECK(r.score <= 0.0);
    CHECK(r.steps == 20);
  }
}

TEST_CASE("identity policy on the unit square") {
  std::istringstream in("0 0\n1 0\n1 1\n0 1\n");
  auto env = envs::make_tsp_env(envs::tsp_from_cities(envs::read_points(in)));
  const auto record = play_episode(*env, [](std::span<const double>, std::size_t t) {
    return envs::EnvAction{t};
  });
  CHECK(record.score == doctest::Approx(-4.0).epsilon(1e-12));
  CHECK(record.steps == 4);
}

TEST_CASE("agent config validation") {
  AgentConfig c;
  c.planner.budget = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.planner.budget = 10;
  c.planner.chance_nodes = true;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
