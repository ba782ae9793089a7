#include "pizero/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pizero/error.hpp"
#include "pizero/rng.hpp"

namespace pizero::nn {

namespace {

void require_length(std::size_t actual, std::size_t expected, const char* what) {
  if (actual != expected) {
    throw ConfigError(std::string(what) + ": expected length " + std::to_string(expected) +
                      ", got " + std::to_string(actual));
  }
}

// out = W x + b, with W row-major (rows x cols) followed by b in `params`.
void affine(const double* params, std::size_t rows, std::size_t cols, const double* x,
            double* out) {
  const double* bias = params + rows * cols;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = params + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    out[r] = acc + bias[r];
  }
}

// out += W x, no bias.
void accumulate_matvec(const double* weights, std::size_t rows, std::size_t cols,
                       const double* x, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = weights + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    out[r] += acc;
  }
}

}  // namespace

std::size_t MlpSpec::param_count() const {
  if (hidden_layers == 0) return output_dim * input_dim + output_dim;
  std::size_t count = hidden_width * input_dim + hidden_width;
  count += (hidden_layers - 1) * (hidden_width * hidden_width + hidden_width);
  count += output_dim * hidden_width + output_dim;
  return count;
}

void MlpSpec::validate() const {
  if (input_dim == 0 || output_dim == 0 || (hidden_layers > 0 && hidden_width == 0)) {
    throw ConfigError("MlpSpec: all dimensions must be at least 1");
  }
}

std::size_t GruSpec::param_count() const {
  return 3 * (hidden_dim * input_dim + hidden_dim * hidden_dim + hidden_dim);
}

void GruSpec::validate() const {
  if (input_dim == 0 || hidden_dim == 0) throw ConfigError("GruSpec: dimensions must be at least 1");
}

std::vector<double> mlp_forward(std::span<const double> params, const MlpSpec& spec,
                                std::span<const double> input) {
  spec.validate();
  require_length(input.size(), spec.input_dim, "mlp_forward input");
  require_length(params.size(), spec.param_count(), "mlp_forward params");

  std::vector<double> current(input.begin(), input.end());
  std::vector<double> next;
  const double* p = params.data();
  for (std::size_t layer = 0; layer <= spec.hidden_layers; ++layer) {
    const bool is_output = layer == spec.hidden_layers;
    const std::size_t rows = is_output ? spec.output_dim : spec.hidden_width;
    const std::size_t cols = current.size();
    next.assign(rows, 0.0);
    affine(p, rows, cols, current.data(), next.data());
    p += rows * cols + rows;
    if (!is_output && spec.hidden_activation == Activation::tanh) {
      for (double& v : next) v = std::tanh(v);
    }
    current.swap(next);
  }
  return current;
}

std::vector<double> gru_forward(std::span<const double> params, const GruSpec& spec,
                                std::span<const double> hidden,
                                std::span<const double> input) {
  spec.validate();
  require_length(hidden.size(), spec.hidden_dim, "gru_forward hidden");
  require_length(input.size(), spec.input_dim, "gru_forward input");
  require_length(params.size(), spec.param_count(), "gru_forward params");

  const std::size_t h = spec.hidden_dim;
  const std::size_t in = spec.input_dim;
  const double* w_r = params.data();
  const double* w_z = w_r + h * in;
  const double* w_h = w_z + h * in;
  const double* u_r = w_h + h * in;
  const double* u_z = u_r + h * h;
  const double* u_h = u_z + h * h;
  const double* b_r = u_h + h * h;
  const double* b_z = b_r + h;
  const double* b_h = b_z + h;

  std::vector<double> reset(b_r, b_r + h);
  std::vector<double> update(b_z, b_z + h);
  std::vector<double> candidate(b_h, b_h + h);
  accumulate_matvec(w_r, h, in, input.data(), reset.data());
  accumulate_matvec(u_r, h, h, hidden.data(), reset.data());
  accumulate_matvec(w_z, h, in, input.data(), update.data());
  accumulate_matvec(u_z, h, h, hidden.data(), update.data());
  for (std::size_t i = 0; i < h; ++i) {
    reset[i] = sigmoid(reset[i]);
    update[i] = sigmoid(update[i]);
  }

  std::vector<double> gated(h);
  for (std::size_t i = 0; i < h; ++i) gated[i] = reset[i] * hidden[i];
  accumulate_matvec(w_h, h, in, input.data(), candidate.data());
  accumulate_matvec(u_h, h, h, gated.data(), candidate.data());

  std::vector<double> out(h);
  for (std::size_t i = 0; i < h; ++i) {
    out[i] = (1.0 - update[i]) * hidden[i] + update[i] * std::tanh(candidate[i]);
  }
  return out;
}

std::vector<double> one_hot(std::size_t index, std::size_t n) {
  if (index >= n) {
    throw ConfigError("one_hot: index " + std::to_string(index) + " out of range for " +
                      std::to_string(n));
  }
  std::vector<double> v(n, 0.0);
  v[index] = 1.0;
  return v;
}

std::vector<double> seeded_gaussian(std::uint64_t seed, std::uint64_t stream, std::size_t n) {
  std::vector<double> out(n);
  fill_gaussian(seed, stream, 0, out);
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace pizero::nn
