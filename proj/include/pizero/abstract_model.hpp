#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "pizero/abstract.hpp"
#include "pizero/nn.hpp"
#include "pizero/param_layout.hpp"

namespace pizero {

struct Memory {
  std::vector<double> values;
  friend bool operator==(const Memory&, const Memory&) = default;
};

struct ModelConfig {
  std::size_t state_dim = 64;
  std::size_t memory_dim = 64;
  std::size_t abstract_actions = 4;
  std::size_t chance_outcomes = 3;
  std::size_t hidden_layers = 1;
  std::size_t hidden_width = 64;
  /// Width of the latent noise fed to the decoder; 0 disables it.
  std::size_t noise_width = 0;
  /// Adds the chance block (afterstate outcome prior and transition).
  bool chance_nodes = false;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// The learned functions of the agent, all reading slices of one flat
/// parameter vector:
///
///   encoder          mlp(memory ++ observation) -> state
///   dynamics         gru(state, one_hot(action)) -> state', linear(state') -> reward
///   prediction       mlp(state) -> value, k logits
///   chance           softmax(linear(afterstate)) -> outcome prior,
///                    gru(afterstate, one_hot(outcome)) -> state', linear -> reward
///   decoder          mlp(root state ++ one_hot(action) ++ noise) -> action parameters
///   memory           gru(memory, observation ++ action) -> memory'
class AbstractModel {
 public:
  AbstractModel(const ModelConfig& config, std::size_t observation_dim,
                std::size_t action_dim);

  const ModelConfig& config() const { return config_; }
  std::size_t observation_dim() const { return observation_dim_; }
  std::size_t action_dim() const { return action_dim_; }
  const std::shared_ptr<const ParamLayout>& layout() const { return layout_; }
  std::size_t param_count() const { return layout_->total_size(); }

  const nn::MlpSpec& encoder_spec() const { return encoder_; }
  const nn::GruSpec& dynamics_spec() const { return dynamics_; }
  const nn::MlpSpec& reward_spec() const { return reward_; }
  const nn::MlpSpec& prediction_spec() const { return prediction_; }
  const nn::MlpSpec& chance_prior_spec() const { return chance_prior_; }
  const nn::GruSpec& chance_dynamics_spec() const { return chance_dynamics_; }
  const nn::MlpSpec& decoder_spec() const { return decoder_; }
  const nn::GruSpec& memory_spec() const { return memory_; }

  /// Weights ~ Normal(0, 1/fan_in), biases zero. Each component draws from its
  /// own stream of `seed`, so every worker derives the same vector.
  ParamVector initialize_params(std::uint64_t seed) const;
  ParamVector zero_params() const;

  Memory initial_memory() const;

  AbstractState encode(std::span<const double> theta, const Memory& memory,
                       std::span<const double> observation) const;
  Transition dynamics(std::span<const double> theta, const AbstractState& state,
                      std::size_t action) const;
  Prediction predict(std::span<const double> theta, const AbstractState& state) const;
  std::vector<double> chance_prior(std::span<const double> theta,
                                   const AbstractState& afterstate) const;
  Transition chance_dynamics(std::span<const double> theta, const AbstractState& afterstate,
                             std::size_t outcome) const;
  /// Raw action parameters; the environment adapter interprets them.
  std::vector<double> decode(std::span<const double> theta, const AbstractState& root,
                             std::size_t abstract_action,
                             std::span<const double> noise) const;
  Memory memory_update(std::span<const double> theta, const Memory& memory,
                       std::span<const double> observation,
                       std::span<const double> action) const;

  // Parameter windows, exposed for tests and reference evaluations.
  std::span<const double> encoder_params(std::span<const double> theta) const;
  std::span<const double> dynamics_params(std::span<const double> theta) const;
  std::span<const double> reward_params(std::span<const double> theta) const;
  std::span<const double> prediction_params(std::span<const double> theta) const;
  std::span<const double> chance_prior_params(std::span<const double> theta) const;
  std::span<const double> chance_dynamics_params(std::span<const double> theta) const;
  std::span<const double> chance_reward_params(std::span<const double> theta) const;
  std::span<const double> decoder_params(std::span<const double> theta) const;
  std::span<const double> memory_params(std::span<const double> theta) const;

 private:
  struct Window {
    std::size_t offset = 0;
    std::size_t size = 0;
  };
  std::span<const double> window(std::span<const double> theta, Window w) const;
  void check_theta(std::span<const double> theta) const;
  void check_state(const AbstractState& state) const;

  ModelConfig config_;
  std::size_t observation_dim_;
  std::size_t action_dim_;
  std::shared_ptr<const ParamLayout> layout_;

  nn::MlpSpec encoder_, reward_, prediction_, chance_prior_, decoder_;
  nn::GruSpec dynamics_, chance_dynamics_, memory_;
  Window encoder_w_, dynamics_w_, reward_w_, prediction_w_, chance_prior_w_,
      chance_dynamics_w_, chance_reward_w_, decoder_w_, memory_w_;
};

/// An AbstractModel with its parameters fixed, as seen by the planner.
class BoundModel final : public SearchModel {
 public:
  BoundModel(const AbstractModel& model, std::span<const double> theta)
      : model_(model), theta_(theta) {}

  std::size_t num_actions() const override { return model_.config().abstract_actions; }
  std::size_t num_outcomes() const override { return model_.config().chance_outcomes; }
  Transition dynamics(const AbstractState& state, std::size_t action) const override {
    return model_.dynamics(theta_, state, action);
  }
  Prediction predict(const AbstractState& state) const override {
    return model_.predict(theta_, state);
  }
  std::vector<double> chance_prior(const AbstractState& afterstate) const override {
    return model_.chance_prior(theta_, afterstate);
  }
  Transition chance_dynamics(const AbstractState& afterstate,
                             std::size_t outcome) const override {
    return model_.chance_dynamics(theta_, afterstate, outcome);
  }

 private:
  const AbstractModel& model_;
  std::span<const double> theta_;
};

}  // namespace pizero
