#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "pizero/config.hpp"
#include "pizero/es.hpp"
#include "pizero/transport.hpp"

namespace pizero::cli {

inline constexpr const char* kCurveHeader = "generation,mean,ci_low,ci_high,score_at_theta";
inline constexpr const char* kTrialsHeader = "trial,generation,mean_perturbed,score_at_theta";
inline constexpr const char* kPlotHeader = "method,generation,mean,ci_low,ci_high";

struct TrainHooks {
  /// Replaces the TCP transport built from rank/world/peers.
  es::Transport* transport = nullptr;
  /// Called on every rank when a trial finishes.
  std::function<void(std::size_t trial, const es::WorkerState&)> on_trial_end;
};

/// Trains `trials` independent runs and writes, on rank 0:
///   trials.csv       one row per trial and generation
///   curve.csv        mean and BCa band across trials per generation
///   trial_<t>.ckpt   latest state of each trial
///   config.txt       the effective configuration
///   train.log        timings
void cmd_train(const RunConfig& config, std::ostream& log, const TrainHooks& hooks = {});

/// Objective used by training: score of one episode under parameters theta.
es::Objective make_objective(const RunConfig& config);
/// Initial parameters of a trial; identical on every worker.
std::vector<double> initial_theta(const RunConfig& config, std::size_t trial);
std::uint64_t trial_seed(const RunConfig& config, std::size_t trial);
/// Fixed evaluation episodes used for score_at_theta and cmd_eval.
std::uint64_t eval_episode_seed(std::uint64_t seed, std::size_t episode);
/// Mean score of theta over `episodes` fixed evaluation episodes.
double evaluate_theta(const RunConfig& config, const std::vector<double>& theta,
                      std::size_t episodes, std::uint64_t seed);

struct EvalSummary {
  std::vector<double> scores;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Scores a checkpoint trained under `config`. Refuses checkpoints whose
/// architecture hash differs and zero episodes.
EvalSummary cmd_eval(const RunConfig& config, const std::string& checkpoint,
                     std::size_t episodes, std::uint64_t seed);

/// Merges run directories into rows of kPlotHeader, recomputing the band
/// from each run's trials.csv.
void cmd_plotdata(const std::vector<std::string>& run_dirs, std::ostream& out);

struct TrialRow {
  std::size_t trial = 0;
  std::uint64_t generation = 0;
  double mean_perturbed = 0.0;
  double score_at_theta = 0.0;
};

std::vector<TrialRow> read_trials_csv(const std::string& path);
/// Curve rows (kCurveHeader) computed from trial rows.
std::string curve_csv(const RunConfig& config, const std::vector<TrialRow>& rows);

}  // namespace pizero::cli
