#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pizero/transport.hpp"

namespace pizero::es {

struct EsConfig {
  double sigma = 0.1;
  double learning_rate = 1e-3;
  /// Antithetic pairs per generation, |I|.
  std::size_t pairs = 500;
  /// Episodes averaged into one evaluation of f.
  std::size_t episodes_per_eval = 1;
  std::uint64_t seed = 0;
  /// Replace deltas by centered ranks in [-0.5, 0.5] before the update.
  bool rank_shaping = false;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Threads for episode evaluation and gradient assembly within a worker.
  std::size_t threads = 1;
  std::chrono::milliseconds timeout{120000};

  void validate() const;
};

/// f(params, episode_seed): one episode score. Must be thread-safe.
using Objective = std::function<double(std::span<const double>, std::uint64_t)>;

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState zeros(std::size_t n, double beta1 = 0.9, double beta2 = 0.999,
                         double epsilon = 1e-8);
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Bias-corrected Adam, ascending: theta += lr * m_hat / (sqrt(v_hat) + eps).
void adam_update(AdamState& state, std::span<double> theta, std::span<const double> gradient,
                 double learning_rate);

/// Stream id of perturbation z_i in a generation.
std::uint64_t perturbation_stream(std::uint64_t generation, std::uint64_t pair);
/// Seed of episode e of pair i, shared by both signs of the pair.
std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t generation, std::uint64_t pair,
                           std::uint64_t episode);
std::vector<double> perturbation(std::uint64_t seed, std::uint64_t generation,
                                 std::uint64_t pair, std::size_t n);

struct DeltaEval {
  double delta = 0.0;
  double plus = 0.0;
  double minus = 0.0;
};

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// delta = f(theta + sigma z) - f(theta - sigma z), each side averaged over
/// the given episode seeds. Throws EvaluationError on a non-finite score.
DeltaEval antithetic_delta(const Objective& f, std::span<const double> theta,
                           std::span<const double> z, double sigma,
                           std::span<const std::uint64_t> episode_seeds);

/// Ranks mapped linearly onto [-0.5, 0.5]; ties broken by index.
std::vector<double> centered_ranks(std::span<const double> values);

/// g = 1 / (2 sigma |I|) * sum_i delta_i z_i, regenerating every z_i from
/// (seed, generation, i). Summation runs in pair order for each coordinate,
/// so the result does not depend on `threads`.
std::vector<double> pseudogradient(std::span<const double> deltas, std::uint64_t seed,
                                   std::uint64_t generation, double sigma, std::size_t n,
                                   bool rank_shaping, std::size_t threads = 1);

/// 64-bit FNV-1a over the IEEE bytes of a vector.
std::uint64_t fingerprint(std::span<const double> values);

struct WorkerState {
  std::vector<double> theta;
  AdamState adam;
  std::uint64_t generation = 0;
};

struct GenerationReport {
  std::uint64_t generation = 0;
  /// Mean of all 2|I| perturbed evaluations.
  double mean_score = 0.0;
  double gradient_norm = 0.0;
  double wall_seconds = 0.0;
  /// Fingerprint of theta after the update.
  std::uint64_t fingerprint = 0;
};

/// One ES worker. Rank r evaluates a contiguous block of pairs, shares its
/// deltas through an allgather and applies the same update as every other
/// rank. Without a transport the worker runs the whole population serially.
///
/// Each message carries the worker's deltas followed by two control words:
/// its fixed-point sum of perturbed scores and the fingerprint of the theta
/// it evaluated. Diverged fingerprints raise ProtocolError.
class EsWorker {
 public:
  EsWorker(EsConfig config, Objective objective, WorkerState initial,
           Transport* transport = nullptr);

  GenerationReport step();
  /// Final fingerprint exchange, so divergence in the last generation is
  /// still caught.
  void finish();

  const WorkerState& state() const { return state_; }
  const EsConfig& config() const { return config_; }
  /// Pairs [first, second) evaluated by this rank.
  std::pair<std::size_t, std::size_t> own_pairs() const { return own_pairs(rank()); }
  std::pair<std::size_t, std::size_t> own_pairs(std::size_t rank) const;

  /// Test hook: after the allgather of `generation`, add `offset` to this
  /// worker's local copy of delta `pair`.
  void inject_delta_fault(std::uint64_t generation, std::size_t pair, double offset);

 private:
  std::size_t rank() const;
  std::size_t world() const;

  EsConfig config_;
  Objective objective_;
  WorkerState state_;
  Transport* transport_;
  std::optional<Allgather> allgather_;
  struct Fault {
    std::uint64_t generation;
    std::size_t pair;
    double offset;
  };
  std::optional<Fault> fault_;
};

/// Runs generations until `on_generation` returns false, then closes with a
/// fingerprint exchange.
void worker_loop(EsWorker& worker,
                 const std::function<bool(const GenerationReport&)>& on_generation);

/// Fixed-point representation used to sum scores identically on any
/// partition of the population.
std::int64_t to_fixed(double score);
double from_fixed(std::int64_t fixed);

}  // namespace pizero::es
