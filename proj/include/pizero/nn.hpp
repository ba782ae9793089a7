#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pizero::nn {

enum class Activation { tanh, linear };

/// Fully connected network. Each layer stores a row-major (out x in) weight
/// matrix followed by its bias; hidden layers apply `hidden_activation`, the
/// output layer is linear.
struct MlpSpec {
  std::size_t input_dim = 1;
  std::size_t hidden_layers = 1;
  std::size_t hidden_width = 64;
  std::size_t output_dim = 1;
  Activation hidden_activation = Activation::tanh;

  std::size_t param_count() const;
  void validate() const;
  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// Gated recurrent unit. Parameter order: W_r, W_z, W_h (hidden x input),
/// U_r, U_z, U_h (hidden x hidden), b_r, b_z, b_h.
struct GruSpec {
  std::size_t input_dim = 1;
  std::size_t hidden_dim = 1;

  std::size_t param_count() const;
  void validate() const;
  friend bool operator==(const GruSpec&, const GruSpec&) = default;
};

std::vector<double> mlp_forward(std::span<const double> params, const MlpSpec& spec,
                                std::span<const double> input);

/// h' = (1 - z) * h + z * tanh(W_h x + U_h (r * h) + b_h)
std::vector<double> gru_forward(std::span<const double> params, const GruSpec& spec,
                                std::span<const double> hidden,
                                std::span<const double> input);

std::vector<double> one_hot(std::size_t index, std::size_t n);

/// n standard-normal variates from the counter-based stream (seed, stream).
std::vector<double> seeded_gaussian(std::uint64_t seed, std::uint64_t stream,
                                    std::size_t n);

std::vector<double> softmax(std::span<const double> logits);

/// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);

double sigmoid(double x);

}  // namespace pizero::nn
