#include "pizero/abstract_model.hpp"

#include <cmath>
#include <string>

#include "pizero/error.hpp"
#include "pizero/rng.hpp"

namespace pizero {

namespace {

constexpr std::uint64_t kInitTag = 0x494e4954504152ull;

std::string mlp_shape(const nn::MlpSpec& s) {
  std::string out = "mlp " + std::to_string(s.input_dim);
  for (std::size_t i = 0; i < s.hidden_layers; ++i) out += "->" + std::to_string(s.hidden_width);
  return out + "->" + std::to_string(s.output_dim);
}

std::string gru_shape(const nn::GruSpec& s) {
  return "gru in=" + std::to_string(s.input_dim) + " hidden=" + std::to_string(s.hidden_dim);
}

// Draws a rows x cols block ~ Normal(0, 1/cols) from the running Gaussian
// stream and advances `cursor`.
void init_matrix(std::span<double> out, std::size_t cols, std::uint64_t seed,
                 std::uint64_t stream, std::size_t& cursor) {
  fill_gaussian(seed, stream, cursor, out);
  cursor += out.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
  for (double& v : out) v *= scale;
}

void init_mlp(std::span<double> params, const nn::MlpSpec& spec, std::uint64_t seed,
              std::uint64_t stream, std::size_t& cursor) {
  std::size_t offset = 0;
  std::size_t cols = spec.input_dim;
  for (std::size_t layer = 0; layer <= spec.hidden_layers; ++layer) {
    const std::size_t rows = layer == spec.hidden_layers ? spec.output_dim : spec.hidden_width;
    init_matrix(params.subspan(offset, rows * cols), cols, seed, stream, cursor);
    offset += rows * cols;
    std::fill_n(params.begin() + static_cast<std::ptrdiff_t>(offset), rows, 0.0);
    offset += rows;
    cols = rows;
  }
}

void init_gru(std::span<double> params, const nn::GruSpec& spec, std::uint64_t seed,
              std::uint64_t stream, std::size_t& cursor) {
  const std::size_t h = spec.hidden_dim;
  const std::size_t in = spec.input_dim;
  std::size_t offset = 0;
  for (int gate = 0; gate < 3; ++gate, offset += h * in) {
    init_matrix(params.subspan(offset, h * in), in, seed, stream, cursor);
  }
  for (int gate = 0; gate < 3; ++gate, offset += h * h) {
    init_matrix(params.subspan(offset, h * h), h, seed, stream, cursor);
  }
  std::fill(params.begin() + static_cast<std::ptrdiff_t>(offset), params.end(), 0.0);
}

std::vector<double> concat(std::span<const double> a, std::span<const double> b,
                           std::span<const double> c = {}) {
  std::vector<double> out;
  out.reserve(a.size() + b.size() + c.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  out.insert(out.end(), c.begin(), c.end());
  return out;
}

}  // namespace

void ModelConfig::validate() const {
  if (state_dim == 0 || memory_dim == 0) throw ConfigError("state and memory dims must be >= 1");
  if (abstract_actions < 2) throw ConfigError("abstract_actions must be >= 2");
  if (chance_outcomes < 1) throw ConfigError("chance_outcomes must be >= 1");
  if (hidden_layers > 0 && hidden_width == 0) throw ConfigError("hidden_width must be >= 1");
}

AbstractModel::AbstractModel(const ModelConfig& config, std::size_t observation_dim,
                             std::size_t action_dim)
    : config_(config), observation_dim_(observation_dim), action_dim_(action_dim) {
  config_.validate();
  if (observation_dim == 0 || action_dim == 0) {
    throw ConfigError("observation and action dims must be >= 1");
  }
  const std::size_t d = config_.state_dim;
  const std::size_t k = config_.abstract_actions;
  const auto hidden = [&](std::size_t in, std::size_t out) {
    return nn::MlpSpec{in, config_.hidden_layers, config_.hidden_width, out};
  };
  const auto linear = [](std::size_t in, std::size_t out) {
    return nn::MlpSpec{in, 0, 0, out};
  };

  encoder_ = hidden(config_.memory_dim + observation_dim, d);
  dynamics_ = {k, d};
  reward_ = linear(d, 1);
  prediction_ = hidden(d, 1 + k);
  chance_prior_ = linear(d, config_.chance_outcomes);
  chance_dynamics_ = {config_.chance_outcomes, d};
  decoder_ = hidden(d + k + config_.noise_width, action_dim);
  memory_ = {observation_dim + action_dim, config_.memory_dim};

  auto layout = std::make_shared<ParamLayout>();
  auto place = [](Window& w, std::size_t& cursor, std::size_t size) {
    w = {cursor, size};
    cursor += size;
  };

  std::size_t cursor = layout->add("encoder", encoder_.param_count(), mlp_shape(encoder_));
  encoder_w_ = {cursor, encoder_.param_count()};

  cursor = layout->add("dynamics", dynamics_.param_count() + reward_.param_count(),
                       gru_shape(dynamics_) + " + reward " + mlp_shape(reward_));
  place(dynamics_w_, cursor, dynamics_.param_count());
  place(reward_w_, cursor, reward_.param_count());

  cursor = layout->add("prediction", prediction_.param_count(), mlp_shape(prediction_));
  prediction_w_ = {cursor, prediction_.param_count()};

  if (config_.chance_nodes) {
    cursor = layout->add(
        "chance",
        chance_prior_.param_count() + chance_dynamics_.param_count() + reward_.param_count(),
        "prior " + mlp_shape(chance_prior_) + " + " + gru_shape(chance_dynamics_) +
            " + reward " + mlp_shape(reward_));
    place(chance_prior_w_, cursor, chance_prior_.param_count());
    place(chance_dynamics_w_, cursor, chance_dynamics_.param_count());
    place(chance_reward_w_, cursor, reward_.param_count());
  }

  cursor = layout->add("decoder", decoder_.param_count(), mlp_shape(decoder_));
  decoder_w_ = {cursor, decoder_.param_count()};

  cursor = layout->add("memory", memory_.param_count(), gru_shape(memory_));
  memory_w_ = {cursor, memory_.param_count()};

  layout_ = std::move(layout);
}

ParamVector AbstractModel::zero_params() const {
  return {layout_, std::vector<double>(layout_->total_size(), 0.0)};
}

ParamVector AbstractModel::initialize_params(std::uint64_t seed) const {
  ParamVector params = zero_params();
  const std::span<double> all(params.values);
  const auto sub = [&](Window w) { return all.subspan(w.offset, w.size); };
  std::uint64_t component = 0;
  const auto stream = [&] { return mix_seed(kInitTag, component++); };

  std::size_t cursor = 0;
  init_mlp(sub(encoder_w_), encoder_, seed, stream(), cursor);
  cursor = 0;
  const std::uint64_t dynamics_stream = stream();
  init_gru(sub(dynamics_w_), dynamics_, seed, dynamics_stream, cursor);
  init_mlp(sub(reward_w_), reward_, seed, dynamics_stream, cursor);
  cursor = 0;
  init_mlp(sub(prediction_w_), prediction_, seed, stream(), cursor);
  if (config_.chance_nodes) {
    cursor = 0;
    const std::uint64_t chance_stream = stream();
    init_mlp(sub(chance_prior_w_), chance_prior_, seed, chance_stream, cursor);
    init_gru(sub(chance_dynamics_w_), chance_dynamics_, seed, chance_stream, cursor);
    init_mlp(sub(chance_reward_w_), reward_, seed, chance_stream, cursor);
  }
  cursor = 0;
  init_mlp(sub(decoder_w_), decoder_, seed, stream(), cursor);
  cursor = 0;
  init_gru(sub(memory_w_), memory_, seed, stream(), cursor);
  return params;
}

Memory AbstractModel::initial_memory() const {
  return {std::vector<double>(config_.memory_dim, 0.0)};
}

std::span<const double> AbstractModel::window(std::span<const double> theta, Window w) const {
  check_theta(theta);
  return theta.subspan(w.offset, w.size);
}

void AbstractModel::check_theta(std::span<const double> theta) const {
  if (theta.size() != layout_->total_size()) {
    throw ConfigError("parameter vector has length " + std::to_string(theta.size()) +
                      ", layout expects " + std::to_string(layout_->total_size()));
  }
}

void AbstractModel::check_state(const AbstractState& state) const {
  if (state.values.size() != config_.state_dim) {
    throw ConfigError("abstract state has dimension " + std::to_string(state.values.size()) +
                      ", expected " + std::to_string(config_.state_dim));
  }
}

std::span<const double> AbstractModel::encoder_params(std::span<const double> t) const {
  return window(t, encoder_w_);
}
std::span<const double> AbstractModel::dynamics_params(std::span<const double> t) const {
  return window(t, dynamics_w_);
}
std::span<const double> AbstractModel::reward_params(std::span<const double> t) const {
  return window(t, reward_w_);
}
std::span<const double> AbstractModel::prediction_params(std::span<const double> t) const {
  return window(t, prediction_w_);
}
std::span<const double> AbstractModel::chance_prior_params(std::span<const double> t) const {
  if (!config_.chance_nodes) throw ConfigError("model was built without chance nodes");
  return window(t, chance_prior_w_);
}
std::span<const double> AbstractModel::chance_dynamics_params(std::span<const double> t) const {
  if (!config_.chance_nodes) throw ConfigError("model was built without chance nodes");
  return window(t, chance_dynamics_w_);
}
std::span<const double> AbstractModel::chance_reward_params(std::span<const double> t) const {
  if (!config_.chance_nodes) throw ConfigError("model was built without chance nodes");
  return window(t, chance_reward_w_);
}
std::span<const double> AbstractModel::decoder_params(std::span<const double> t) const {
  return window(t, decoder_w_);
}
std::span<const double> AbstractModel::memory_params(std::span<const double> t) const {
  return window(t, memory_w_);
}

AbstractState AbstractModel::encode(std::span<const double> theta, const Memory& memory,
                                    std::span<const double> observation) const {
  if (memory.values.size() != config_.memory_dim) throw ConfigError("memory dimension mismatch");
  if (observation.size() != observation_dim_) {
    throw ConfigError("observation has length " + std::to_string(observation.size()) +
                      ", expected " + std::to_string(observation_dim_));
  }
  const auto input = concat(memory.values, observation);
  return {nn::mlp_forward(encoder_params(theta), encoder_, input)};
}

Transition AbstractModel::dynamics(std::span<const double> theta, const AbstractState& state,
                                   std::size_t action) const {
  check_state(state);
  const auto input = nn::one_hot(action, config_.abstract_actions);
  AbstractState next{nn::gru_forward(dynamics_params(theta), dynamics_, state.values, input)};
  const double reward = nn::mlp_forward(reward_params(theta), reward_, next.values)[0];
  return {reward, std::move(next)};
}

Prediction AbstractModel::predict(std::span<const double> theta,
                                  const AbstractState& state) const {
  check_state(state);
  auto out = nn::mlp_forward(prediction_params(theta), prediction_, state.values);
  return {out[0], std::vector<double>(out.begin() + 1, out.end())};
}

std::vector<double> AbstractModel::chance_prior(std::span<const double> theta,
                                                const AbstractState& afterstate) const {
  check_state(afterstate);
  return nn::softmax(
      nn::mlp_forward(chance_prior_params(theta), chance_prior_, afterstate.values));
}

Transition AbstractModel::chance_dynamics(std::span<const double> theta,
                                          const AbstractState& afterstate,
                                          std::size_t outcome) const {
  check_state(afterstate);
  const auto input = nn::one_hot(outcome, config_.chance_outcomes);
  AbstractState next{nn::gru_forward(chance_dynamics_params(theta), chance_dynamics_,
                                     afterstate.values, input)};
  const double reward = nn::mlp_forward(chance_reward_params(theta), reward_, next.values)[0];
  return {reward, std::move(next)};
}

std::vector<double> AbstractModel::decode(std::span<const double> theta,
                                          const AbstractState& root,
                                          std::size_t abstract_action,
                                          std::span<const double> noise) const {
  check_state(root);
  if (noise.size() != config_.noise_width) {
    throw ConfigError("decoder noise has width " + std::to_string(noise.size()) +
                      ", expected " + std::to_string(config_.noise_width));
  }
  const auto input =
      concat(root.values, nn::one_hot(abstract_action, config_.abstract_actions), noise);
  return nn::mlp_forward(decoder_params(theta), decoder_, input);
}

Memory AbstractModel::memory_update(std::span<const double> theta, const Memory& memory,
                                    std::span<const double> observation,
                                    std::span<const double> action) const {
  if (observation.size() != observation_dim_ || action.size() != action_dim_) {
    throw ConfigError("memory_update: observation/action dimension mismatch");
  }
  const auto input = concat(observation, action);
  return {nn::gru_forward(memory_params(theta), memory_, memory.values, input)};
}

}  // namespace pizero
