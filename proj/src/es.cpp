#include "pizero/es.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "pizero/error.hpp"
#include "pizero/parallel.hpp"
#include "pizero/rng.hpp"

namespace pizero::es {

namespace {

constexpr std::uint64_t kPerturbationTag = 0x50455254555242ull;
constexpr std::uint64_t kEpisodeTag = 0x455049534f4445ull;
constexpr double kFixedScale = 16777216.0;  // 2^24
constexpr std::size_t kGradientBlock = 4096;
constexpr std::size_t kControlWords = 2;

}  // namespace

void EsConfig::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (pairs == 0) throw ConfigError("population must contain at least one pair");
  if (episodes_per_eval == 0) throw ConfigError("episodes_per_eval must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
}

AdamState AdamState::zeros(std::size_t n, double beta1, double beta2, double epsilon) {
  return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0, beta1, beta2, epsilon};
}

void adam_update(AdamState& s, std::span<double> theta, std::span<const double> g,
                 double learning_rate) {
  if (theta.size() != g.size() || s.m.size() != g.size() || s.v.size() != g.size()) {
    throw ConfigError("adam_update: dimension mismatch");
  }
  s.step += 1;
  const double t = static_cast<double>(s.step);
  const double m_correction = 1.0 - std::pow(s.beta1, t);
  const double v_correction = 1.0 - std::pow(s.beta2, t);
  for (std::size_t i = 0; i < g.size(); ++i) {
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g[i];
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g[i] * g[i];
    const double m_hat = s.m[i] / m_correction;
    const double v_hat = s.v[i] / v_correction;
    theta[i] += learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
  }
}

std::uint64_t perturbation_stream(std::uint64_t generation, std::uint64_t pair) {
  return mix_seed(mix_seed(kPerturbationTag, generation), pair);
}

std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t generation, std::uint64_t pair,
                           std::uint64_t episode) {
  return mix_seed(mix_seed(mix_seed(mix_seed(seed, kEpisodeTag), generation), pair), episode);
}

std::vector<double> perturbation(std::uint64_t seed, std::uint64_t generation,
                                 std::uint64_t pair, std::size_t n) {
  std::vector<double> z(n);
  fill_gaussian(seed, perturbation_stream(generation, pair), 0, z);
  return z;
}

DeltaEval antithetic_delta(const Objective& f, std::span<const double> theta,
                           std::span<const double> z, double sigma,
                           std::span<const std::uint64_t> episode_seeds) {
  if (z.size() != theta.size()) throw ConfigError("antithetic_delta: |z| != |theta|");
  if (episode_seeds.empty()) throw ConfigError("antithetic_delta: no episodes");
  std::vector<double> plus(theta.size()), minus(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    plus[j] = theta[j] + sigma * z[j];
    minus[j] = theta[j] - sigma * z[j];
  }
  const auto evaluate = [&](const std::vector<double>& x, const char* sign) {
    double total = 0.0;
    for (const std::uint64_t seed : episode_seeds) {
      const double score = f(x, seed);
      if (!std::isfinite(score)) {
        throw EvaluationError(std::string("non-finite score at ") + sign +
                              " perturbation, episode seed " + std::to_string(seed));
      }
      total += score;
    }
    return total / static_cast<double>(episode_seeds.size());
  };
  DeltaEval out;
  out.plus = evaluate(plus, "+");
  out.minus = evaluate(minus, "-");
  out.delta = out.plus - out.minus;
  return out;
}

std::vector<double> centered_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  for (std::size_t rank = 0; rank < n; ++rank) {
    out[order[rank]] = static_cast<double>(rank) / static_cast<double>(n - 1) - 0.5;
  }
  return out;
}

std::vector<double> pseudogradient(std::span<const double> deltas, std::uint64_t seed,
                                   std::uint64_t generation, double sigma, std::size_t n,
                                   bool rank_shaping, std::size_t threads) {
  std::vector<double> weights(deltas.begin(), deltas.end());
  if (rank_shaping) weights = centered_ranks(deltas);
  std::vector<double> gradient(n, 0.0);
  if (weights.empty()) return gradient;
  const double scale = 2.0 * sigma * static_cast<double>(weights.size());

  const std::size_t blocks = (n + kGradientBlock - 1) / kGradientBlock;
  parallel_for(blocks, threads, [&](std::size_t block) {
    const std::size_t lo = block * kGradientBlock;
    const std::size_t len = std::min(kGradientBlock, n - lo);
    const std::span<double> acc(gradient.data() + lo, len);
    std::vector<double> z(len);
    for (std::size_t i = 0; i < weights.size(); ++i) {
      fill_gaussian(seed, perturbation_stream(generation, i), lo, z);
      const double w = weights[i];
      for (std::size_t j = 0; j < len; ++j) acc[j] += w * z[j];
    }
    for (double& v : acc) v /= scale;
  });
  return gradient;
}

std::uint64_t fingerprint(std::span<const double> values) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (const double v : values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      hash ^= bits & 0xff;
      hash *= 0x100000001b3ull;
      bits >>= 8;
    }
  }
  return hash;
}

std::int64_t to_fixed(double score) {
  if (!(std::fabs(score) < 0x1.0p38)) {
    throw EvaluationError("score " + std::to_string(score) + " outside the fixed-point range");
  }
  return std::llround(score * kFixedScale);
}

double from_fixed(std::int64_t fixed) { return static_cast<double>(fixed) / kFixedScale; }

EsWorker::EsWorker(EsConfig config, Objective objective, WorkerState initial,
                   Transport* transport)
    : config_(config),
      objective_(std::move(objective)),
      state_(std::move(initial)),
      transport_(transport) {
  config_.validate();
  if (state_.adam.m.size() != state_.theta.size() ||
      state_.adam.v.size() != state_.theta.size()) {
    throw ConfigError("EsWorker: Adam state does not match theta");
  }
  if (transport_) {
    if (world() > config_.pairs) throw ConfigError("more workers than antithetic pairs");
    allgather_.emplace(*transport_, config_.timeout);
  }
}

std::size_t EsWorker::rank() const { return transport_ ? transport_->rank() : 0; }
std::size_t EsWorker::world() const { return transport_ ? transport_->world() : 1; }

std::pair<std::size_t, std::size_t> EsWorker::own_pairs(std::size_t r) const {
  const std::size_t p = config_.pairs;
  const std::size_t w = world();
  return {r * p / w, (r + 1) * p / w};
}

void EsWorker::inject_delta_fault(std::uint64_t generation, std::size_t pair, double offset) {
  fault_ = Fault{generation, pair, offset};
}

GenerationReport EsWorker::step() {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t generation = state_.generation;
  const std::size_t n = state_.theta.size();
  const auto [lo, hi] = own_pairs();

  std::vector<double> own_deltas(hi - lo);
  std::vector<std::int64_t> own_scores(hi - lo);
  parallel_for(hi - lo, config_.threads, [&](std::size_t j) {
    const std::size_t pair = lo + j;
    const auto z = perturbation(config_.seed, generation, pair, n);
    std::vector<std::uint64_t> seeds(config_.episodes_per_eval);
    for (std::size_t e = 0; e < seeds.size(); ++e) {
      seeds[e] = episode_seed(config_.seed, generation, pair, e);
    }
    const DeltaEval eval = antithetic_delta(objective_, state_.theta, z, config_.sigma, seeds);
    own_deltas[j] = eval.delta;
    own_scores[j] = to_fixed(eval.plus) + to_fixed(eval.minus);
  });

  const std::uint64_t own_fingerprint = fingerprint(state_.theta);
  std::vector<double> payload = own_deltas;
  payload.push_back(
      std::bit_cast<double>(std::accumulate(own_scores.begin(), own_scores.end(), std::int64_t{0})));
  payload.push_back(std::bit_cast<double>(own_fingerprint));

  std::vector<std::vector<double>> gathered;
  if (allgather_) {
    gathered = allgather_->run(generation, payload);
  } else {
    gathered.push_back(std::move(payload));
  }

  std::vector<double> deltas;
  deltas.reserve(config_.pairs);
  std::int64_t score_sum = 0;
  for (std::size_t r = 0; r < gathered.size(); ++r) {
    const auto [rlo, rhi] = own_pairs(r);
    const auto& part = gathered[r];
    if (part.size() != rhi - rlo + kControlWords) {
      throw ProtocolError("rank " + std::to_string(r) + " sent " + std::to_string(part.size()) +
                          " values for " + std::to_string(rhi - rlo) + " pairs");
    }
    const auto peer_fingerprint = std::bit_cast<std::uint64_t>(part.back());
    if (peer_fingerprint != own_fingerprint) {
      throw ProtocolError("parameter fingerprint mismatch at generation " +
                          std::to_string(generation) + ": rank " + std::to_string(rank()) +
                          " has " + std::to_string(own_fingerprint) + ", rank " +
                          std::to_string(r) + " has " + std::to_string(peer_fingerprint));
    }
    score_sum += std::bit_cast<std::int64_t>(part[part.size() - 2]);
    deltas.insert(deltas.end(), part.begin(), part.end() - kControlWords);
  }

  if (fault_ && fault_->generation == generation) deltas.at(fault_->pair) += fault_->offset;

  const auto gradient = pseudogradient(deltas, config_.seed, generation, config_.sigma, n,
                                       config_.rank_shaping, config_.threads);
  adam_update(state_.adam, state_.theta, gradient, config_.learning_rate);
  state_.generation += 1;

  GenerationReport report;
  report.generation = generation;
  report.mean_score = from_fixed(score_sum) / (2.0 * static_cast<double>(config_.pairs));
  report.gradient_norm =
      std::sqrt(std::inner_product(gradient.begin(), gradient.end(), gradient.begin(), 0.0));
  report.fingerprint = fingerprint(state_.theta);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void EsWorker::finish() {
  if (!allgather_) return;
  const std::uint64_t own = fingerprint(state_.theta);
  const std::vector<double> payload{std::bit_cast<double>(std::int64_t{0}),
                                    std::bit_cast<double>(own)};
  const auto gathered = allgather_->run(state_.generation, payload);
  for (std::size_t r = 0; r < gathered.size(); ++r) {
    if (gathered[r].size() != kControlWords ||
        std::bit_cast<std::uint64_t>(gathered[r].back()) != own) {
      throw ProtocolError("parameter fingerprint mismatch after generation " +
                          std::to_string(state_.generation) + " with rank " + std::to_string(r));
    }
  }
}

void worker_loop(EsWorker& worker,
                 const std::function<bool(const GenerationReport&)>& on_generation) {
  for (;;) {
    const GenerationReport report = worker.step();
    if (!on_generation(report)) break;
  }
  worker.finish();
}

}  // namespace pizero::es
