#pragma once

#include <cstddef>
#include <vector>

namespace pizero {

/// A point in the learned search space. Carries no environment information.
struct AbstractState {
  std::vector<double> values;
  friend bool operator==(const AbstractState&, const AbstractState&) = default;
};

struct Transition {
  double reward = 0.0;
  AbstractState next;
};

struct Prediction {
  double value = 0.0;
  std::vector<double> logits;
};

/// What the planner may query: abstract states and action/outcome indices
/// only. Implementations must be deterministic.
class SearchModel {
 public:
  virtual ~SearchModel() = default;

  virtual std::size_t num_actions() const = 0;
  virtual std::size_t num_outcomes() const = 0;
  virtual Transition dynamics(const AbstractState& state, std::size_t action) const = 0;
  virtual Prediction predict(const AbstractState& state) const = 0;
  /// Probabilities over chance outcomes of an afterstate.
  virtual std::vector<double> chance_prior(const AbstractState& afterstate) const = 0;
  virtual Transition chance_dynamics(const AbstractState& afterstate,
                                     std::size_t outcome) const = 0;
};

}  // namespace pizero
