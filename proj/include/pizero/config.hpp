#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pizero/agent.hpp"
#include "pizero/envs.hpp"
#include "pizero/es.hpp"

namespace pizero::cli {

/// Everything a run needs. Defaults follow the published hyperparameter
/// table where it gives a value (lr 1e-3, sigma 0.1, batch 1000 episodes,
/// 1 hidden layer of 64, state dim 64, 4 abstract actions, 3 chance
/// outcomes, budget 10, 5 trials).
struct RunConfig {
  // environment
  std::string env = "collect";
  std::size_t tsp_cities = 10;
  std::size_t collect_size = 8;
  std::size_t collect_coins = 5;
  std::size_t collect_horizon = 20;
  std::size_t g2048_max_steps = 500;
  std::size_t flp_clients = 20;
  std::size_t flp_facilities = 5;
  // agent
  std::size_t state_dim = 64;
  std::size_t memory_dim = 64;
  std::size_t abstract_actions = 4;
  std::size_t chance_outcomes = 3;
  std::size_t hidden_layers = 1;
  std::size_t hidden_width = 64;
  std::size_t noise_width = 0;
  bool chance_nodes = false;
  bool planner = true;
  std::size_t budget = 10;
  double discount = 1.0;
  double c1 = 1.25;
  double c2 = 19652.0;
  // evolution strategies
  double learning_rate = 1e-3;
  double sigma = 0.1;
  std::size_t batch_size = 1000;
  /// Antithetic pairs per generation; 0 derives batch_size / (2 * episodes_per_eval).
  std::size_t pairs = 0;
  std::size_t episodes_per_eval = 1;
  bool rank_shaping = false;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // experiment
  std::uint64_t seed = 0;
  std::size_t trials = 5;
  std::size_t generations = 100;
  std::size_t eval_episodes = 10;
  double confidence = 0.95;
  std::size_t ci_resamples = 2000;
  std::size_t threads = 1;
  std::string output_dir = "run";
  std::string label;
  bool resume = false;
  // distributed
  std::size_t rank = 0;
  std::size_t world = 1;
  std::string peers;
  std::size_t timeout_ms = 120000;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  void validate() const;
  std::size_t population() const;
  envs::EnvParams env_params() const;
  AgentConfig agent_config() const;
  es::EsConfig es_config(std::uint64_t trial_seed) const;
  std::vector<std::string> peer_list() const;
  std::string method_label() const;
};

struct ConfigKey {
  std::string name;
  std::string description;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
  /// Part of the parameter layout; changing it invalidates checkpoints.
  bool architectural = false;
};

const std::vector<ConfigKey>& config_keys();

/// Prefix for environment-variable overrides, e.g. PIZERO_SIGMA=0.05.
inline constexpr const char* kEnvPrefix = "PIZERO_";

void set_value(RunConfig& config, const std::string& key, const std::string& value);
std::string get_value(const RunConfig& config, const std::string& key);

/// "key = value" lines; '#' comments and blank lines are ignored.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config_file(const std::string& path, RunConfig base = {});
std::string serialize_config(const RunConfig& config);
/// Applies PIZERO_<KEY> variables found through `lookup`.
void apply_env_overrides(RunConfig& config,
                         const std::function<const char*(const std::string&)>& lookup);

/// Table of keys, defaults and descriptions for --help.
std::string defaults_table();

/// Hash of every architectural key; stored in checkpoints.
std::uint64_t config_hash(const RunConfig& config);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(const std::string& text);

}  // namespace pizero::cli
