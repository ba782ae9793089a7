#include "pizero/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "pizero/error.hpp"

namespace pizero::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_unsigned(const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("'" + text + "' is not a non-negative integer");
  return value;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "on" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "off" || text == "no" || text == "0") return false;
  throw ConfigError("'" + text + "' is not a boolean (true/false, on/off)");
}

ConfigKey size_key(std::string name, std::string description, std::size_t RunConfig::*field,
                   bool architectural = false) {
  return {std::move(name), std::move(description),
          [field](const RunConfig& c) { return std::to_string(c.*field); },
          [field](RunConfig& c, const std::string& v) { c.*field = parse_unsigned<std::size_t>(v); },
          architectural};
}

ConfigKey u64_key(std::string name, std::string description, std::uint64_t RunConfig::*field) {
  return {std::move(name), std::move(description),
          [field](const RunConfig& c) { return std::to_string(c.*field); },
          [field](RunConfig& c, const std::string& v) {
            c.*field = parse_unsigned<std::uint64_t>(v);
          },
          false};
}

ConfigKey double_key(std::string name, std::string description, double RunConfig::*field) {
  return {std::move(name), std::move(description),
          [field](const RunConfig& c) { return format_double(c.*field); },
          [field](RunConfig& c, const std::string& v) { c.*field = parse_double(v); }, false};
}

ConfigKey bool_key(std::string name, std::string description, bool RunConfig::*field,
                   bool architectural = false) {
  return {std::move(name), std::move(description),
          [field](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); },
          [field](RunConfig& c, const std::string& v) { c.*field = parse_bool(v); },
          architectural};
}

ConfigKey string_key(std::string name, std::string description, std::string RunConfig::*field,
                     bool architectural = false) {
  return {std::move(name), std::move(description),
          [field](const RunConfig& c) { return c.*field; },
          [field](RunConfig& c, const std::string& v) { c.*field = v; }, architectural};
}

std::vector<ConfigKey> build_keys() {
  using R = RunConfig;
  std::vector<ConfigKey> keys = {
      string_key("env", "environment: tsp, collect, 2048, flp", &R::env, true),
      size_key("tsp_cities", "TSP city count", &R::tsp_cities, true),
      size_key("collect_size", "Collect grid side length", &R::collect_size, true),
      size_key("collect_coins", "Collect coin count", &R::collect_coins),
      size_key("collect_horizon", "Collect episode length", &R::collect_horizon),
      size_key("g2048_max_steps", "2048 episode step cap", &R::g2048_max_steps),
      size_key("flp_clients", "FLP client count", &R::flp_clients, true),
      size_key("flp_facilities", "FLP facilities to place", &R::flp_facilities, true),
      size_key("state_dim", "abstract state dimension", &R::state_dim, true),
      size_key("memory_dim", "recurrent memory width", &R::memory_dim, true),
      size_key("abstract_actions", "abstract actions k", &R::abstract_actions, true),
      size_key("chance_outcomes", "abstract chance outcomes c", &R::chance_outcomes, true),
      size_key("hidden_layers", "hidden layers per feedforward net", &R::hidden_layers, true),
      size_key("hidden_width", "neurons per hidden layer", &R::hidden_width, true),
      size_key("noise_width", "decoder latent noise width (0 = off)", &R::noise_width, true),
      bool_key("chance_nodes", "search with chance nodes", &R::chance_nodes, true),
      bool_key("planner", "plan with MCTS (off = reactive ablation)", &R::planner),
      size_key("budget", "MCTS simulation budget", &R::budget),
      double_key("discount", "search discount", &R::discount),
      double_key("c1", "pUCT constant c1", &R::c1),
      double_key("c2", "pUCT constant c2", &R::c2),
      double_key("learning_rate", "Adam learning rate", &R::learning_rate),
      double_key("sigma", "perturbation standard deviation", &R::sigma),
      size_key("batch_size", "episodes per generation", &R::batch_size),
      size_key("pairs", "antithetic pairs per generation (0 = from batch_size)", &R::pairs),
      size_key("episodes_per_eval", "episodes averaged per evaluation", &R::episodes_per_eval),
      bool_key("rank_shaping", "centered-rank fitness shaping", &R::rank_shaping),
      double_key("adam_beta1", "Adam beta1", &R::adam_beta1),
      double_key("adam_beta2", "Adam beta2", &R::adam_beta2),
      double_key("adam_epsilon", "Adam epsilon", &R::adam_epsilon),
      u64_key("seed", "master seed", &R::seed),
      size_key("trials", "independent training runs", &R::trials),
      size_key("generations", "generations per trial", &R::generations),
      size_key("eval_episodes", "episodes scoring theta each generation (0 = off)",
               &R::eval_episodes),
      double_key("confidence", "confidence level of CI bands", &R::confidence),
      size_key("ci_resamples", "bootstrap resamples", &R::ci_resamples),
      size_key("threads", "worker threads", &R::threads),
      string_key("output_dir", "run directory", &R::output_dir),
      string_key("label", "method label for plot data (default: env/planner)", &R::label),
      bool_key("resume", "continue from checkpoints in output_dir", &R::resume),
      size_key("rank", "this worker's rank", &R::rank),
      size_key("world", "number of workers", &R::world),
      string_key("peers", "comma-separated host:port per rank", &R::peers),
      size_key("timeout_ms", "peer timeout in milliseconds", &R::timeout_ms),
  };
  return keys;
}

const ConfigKey& find_key(const std::string& name) {
  const auto& keys = config_keys();
  const auto it =
      std::find_if(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.name == name; });
  if (it == keys.end()) throw ConfigError("unknown configuration key '" + name + "'");
  return *it;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

double parse_double(const std::string& text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("'" + text + "' is not a number");
  return value;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

void set_value(RunConfig& config, const std::string& key, const std::string& value) {
  try {
    find_key(key).set(config, value);
  } catch (const ConfigError& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

std::string get_value(const RunConfig& config, const std::string& key) {
  return find_key(key).get(config);
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    }
    try {
      set_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::move(base));
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  for (const auto& key : config_keys()) out += key.name + " = " + key.get(config) + "\n";
  return out;
}

void apply_env_overrides(RunConfig& config,
                         const std::function<const char*(const std::string&)>& lookup) {
  for (const auto& key : config_keys()) {
    std::string var = kEnvPrefix;
    for (char c : key.name) var += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (const char* value = lookup(var)) set_value(config, key.name, value);
  }
}

std::string defaults_table() {
  const RunConfig defaults;
  std::ostringstream out;
  out << "Configuration keys (config file 'key = value', env " << kEnvPrefix
      << "<KEY>, or --key value):\n";
  for (const auto& key : config_keys()) {
    std::string value = key.get(defaults);
    if (value.empty()) value = "\"\"";
    out << "  " << key.name << std::string(key.name.size() < 18 ? 18 - key.name.size() : 1, ' ')
        << value << std::string(value.size() < 10 ? 10 - value.size() : 1, ' ')
        << key.description << "\n";
  }
  return out.str();
}

std::uint64_t config_hash(const RunConfig& config) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (const auto& key : config_keys()) {
    if (!key.architectural) continue;
    for (char c : key.name + "=" + key.get(config) + ";") {
      hash ^= static_cast<unsigned char>(c);
      hash *= 0x100000001b3ull;
    }
  }
  return hash;
}

void RunConfig::validate() const {
  envs::parse_env_kind(env);
  agent_config().validate();
  es_config(seed).validate();
  if (trials == 0) throw ConfigError("trials must be >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must lie in (0, 1)");
  if (ci_resamples == 0) throw ConfigError("ci_resamples must be >= 1");
  if (world == 0 || rank >= world) throw ConfigError("rank must be < world");
  if (world > 1 && peer_list().size() != world) {
    throw ConfigError("peers must list exactly one host:port per rank");
  }
  if (world > population()) throw ConfigError("more workers than antithetic pairs");
  envs::make_env(env_params());
}

std::size_t RunConfig::population() const {
  if (pairs > 0) return pairs;
  const std::size_t per_pair = 2 * std::max<std::size_t>(1, episodes_per_eval);
  if (batch_size < per_pair) throw ConfigError("batch_size is too small for one antithetic pair");
  return batch_size / per_pair;
}

envs::EnvParams RunConfig::env_params() const {
  envs::EnvParams p;
  p.kind = envs::parse_env_kind(env);
  p.tsp_cities = tsp_cities;
  p.collect_size = collect_size;
  p.collect_coins = collect_coins;
  p.collect_horizon = collect_horizon;
  p.g2048_max_steps = g2048_max_steps;
  p.flp_clients = flp_clients;
  p.flp_facilities = flp_facilities;
  return p;
}

AgentConfig RunConfig::agent_config() const {
  AgentConfig a;
  a.model = {state_dim, memory_dim, abstract_actions, chance_outcomes,
             hidden_layers, hidden_width, noise_width, chance_nodes};
  a.planner = {budget, discount, c1, c2, chance_nodes};
  a.use_planner = planner;
  return a;
}

es::EsConfig RunConfig::es_config(std::uint64_t trial_seed) const {
  es::EsConfig e;
  e.sigma = sigma;
  e.learning_rate = learning_rate;
  e.pairs = population();
  e.episodes_per_eval = episodes_per_eval;
  e.seed = trial_seed;
  e.rank_shaping = rank_shaping;
  e.beta1 = adam_beta1;
  e.beta2 = adam_beta2;
  e.epsilon = adam_epsilon;
  e.threads = threads;
  e.timeout = std::chrono::milliseconds(timeout_ms);
  return e;
}

std::vector<std::string> RunConfig::peer_list() const {
  std::vector<std::string> out;
  std::istringstream in(peers);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string RunConfig::method_label() const {
  if (!label.empty()) return label;
  return env + (planner ? "/planner" : "/reactive");
}

}  // namespace pizero::cli
