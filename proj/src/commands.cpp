#include "pizero/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "pizero/agent.hpp"
#include "pizero/checkpoint.hpp"
#include "pizero/error.hpp"
#include "pizero/parallel.hpp"
#include "pizero/rng.hpp"
#include "pizero/stats.hpp"

namespace pizero::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kInitSeedTag = 0x54484554413030ull;
constexpr std::uint64_t kEvalTag = 0x4556414c5541ull;

Agent make_agent(const RunConfig& config) {
  return Agent(config.agent_config(), envs::env_spec(config.env_params()));
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string trials_csv(std::vector<TrialRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const TrialRow& a, const TrialRow& b) {
    return a.trial != b.trial ? a.trial < b.trial : a.generation < b.generation;
  });
  std::string out = std::string(kTrialsHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.trial) + "," + std::to_string(r.generation) + "," +
           format_double(r.mean_perturbed) + "," + format_double(r.score_at_theta) + "\n";
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::size_t parse_index(const std::string& text, const std::string& where) {
  std::size_t pos = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size()) throw ConfigError(where + ": bad integer '" + text + "'");
  return static_cast<std::size_t>(value);
}

std::unique_ptr<es::Transport> make_tcp_transport(const RunConfig& config) {
  const auto peers = config.peer_list();
  const auto [host, port] = es::split_host_port(peers.at(config.rank));
  es::TcpListener listener(host, port);
  return std::make_unique<es::TcpTransport>(config.rank, peers, std::move(listener),
                                        std::chrono::milliseconds(config.timeout_ms));
}

}  // namespace

std::uint64_t trial_seed(const RunConfig& config, std::size_t trial) {
  return mix_seed(config.seed, trial);
}

std::vector<double> initial_theta(const RunConfig& config, std::size_t trial) {
  const Agent agent = make_agent(config);
  return agent.model().initialize_params(mix_seed(trial_seed(config, trial), kInitSeedTag)).values;
}

es::Objective make_objective(const RunConfig& config) {
  auto agent = std::make_shared<const Agent>(make_agent(config));
  auto factory = std::make_shared<const EnvFactory>(env_factory(config.env_params()));
  return [agent, factory](std::span<const double> theta, std::uint64_t seed) {
    return run_episode(*agent, theta, *factory, seed).score;
  };
}

std::uint64_t eval_episode_seed(std::uint64_t seed, std::size_t episode) {
  return mix_seed(mix_seed(seed, kEvalTag), episode);
}

namespace {

std::vector<double> evaluate_scores(const es::Objective& f, const std::vector<double>& theta,
                                    std::size_t episodes, std::uint64_t seed,
                                    std::size_t threads) {
  std::vector<double> scores(episodes);
  parallel_for(episodes, threads,
               [&](std::size_t e) { scores[e] = f(theta, eval_episode_seed(seed, e)); });
  return scores;
}

}  // namespace

double evaluate_theta(const RunConfig& config, const std::vector<double>& theta,
                      std::size_t episodes, std::uint64_t seed) {
  if (episodes == 0) return std::numeric_limits<double>::quiet_NaN();
  const auto scores = evaluate_scores(make_objective(config), theta, episodes, seed, config.threads);
  return stats::mean(scores);
}

std::vector<TrialRow> read_trials_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != kTrialsHeader) {
    throw ConfigError(path + ": expected header '" + kTrialsHeader + "'");
  }
  std::vector<TrialRow> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(number);
    const auto f = split_csv(line);
    if (f.size() != 4) throw ConfigError(where + ": expected 4 fields");
    TrialRow row;
    row.trial = parse_index(f[0], where);
    row.generation = parse_index(f[1], where);
    try {
      row.mean_perturbed = parse_double(f[2]);
      row.score_at_theta = parse_double(f[3]);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
    rows.push_back(row);
  }
  return rows;
}

namespace {

struct GenerationRows {
  std::vector<double> perturbed;
  std::vector<double> at_theta;
};

std::map<std::uint64_t, GenerationRows> group_by_generation(std::vector<TrialRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const TrialRow& a, const TrialRow& b) {
    return a.generation != b.generation ? a.generation < b.generation : a.trial < b.trial;
  });
  std::map<std::uint64_t, GenerationRows> grouped;
  for (const auto& r : rows) {
    auto& g = grouped[r.generation];
    g.perturbed.push_back(r.mean_perturbed);
    g.at_theta.push_back(r.score_at_theta);
  }
  return grouped;
}

std::uint64_t curve_seed(const RunConfig& config, std::uint64_t generation) {
  return mix_seed(config.seed, generation);
}

}  // namespace

std::string curve_csv(const RunConfig& config, const std::vector<TrialRow>& rows) {
  std::string out = std::string(kCurveHeader) + "\n";
  for (auto& [generation, g] : group_by_generation(rows)) {
    const auto point = stats::summarize(generation, g.perturbed, config.confidence,
                                        config.ci_resamples, curve_seed(config, generation));
    out += std::to_string(generation) + "," + format_double(point.mean) + "," +
           format_double(point.ci_low) + "," + format_double(point.ci_high) + "," +
           format_double(stats::mean(g.at_theta)) + "\n";
  }
  return out;
}

void cmd_train(const RunConfig& config, std::ostream& log, const TrainHooks& hooks) {
  config.validate();
  if (config.resume && config.world > 1) {
    throw ConfigError("resume is only supported for serial runs");
  }
  const bool writer = config.rank == 0;
  const fs::path dir(config.output_dir);
  if (writer) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
      throw ConfigError("cannot create output directory " + dir.string());
    }
    write_text_atomic(dir / "config.txt", serialize_config(config));
  }

  std::unique_ptr<es::Transport> owned;
  es::Transport* transport = hooks.transport;
  if (!transport && config.world > 1) {
    owned = make_tcp_transport(config);
    transport = owned.get();
  }

  std::ofstream log_file;
  if (writer) log_file.open(dir / "train.log", config.resume ? std::ios::app : std::ios::trunc);
  const auto note = [&](const std::string& line) {
    log << line << "\n";
    if (log_file) log_file << line << "\n" << std::flush;
  };

  std::vector<TrialRow> rows;
  if (writer && config.resume && fs::exists(dir / "trials.csv")) {
    rows = read_trials_csv((dir / "trials.csv").string());
  }

  const std::uint64_t hash = config_hash(config);
  const auto objective = make_objective(config);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t trial = 0; trial < config.trials; ++trial) {
    const fs::path ckpt = dir / ("trial_" + std::to_string(trial) + ".ckpt");
    es::WorkerState state;
    if (config.resume && fs::exists(ckpt)) {
      const auto c = read_checkpoint(ckpt.string());
      if (c.config_hash != hash) {
        throw CheckpointError(ckpt.string() + " was written by a different architecture");
      }
      state = c.state;
      note("trial " + std::to_string(trial) + " resumed at generation " +
           std::to_string(state.generation));
    } else {
      state.theta = initial_theta(config, trial);
      state.adam = es::AdamState::zeros(state.theta.size(), config.adam_beta1, config.adam_beta2,
                                        config.adam_epsilon);
    }
    std::erase_if(rows, [&](const TrialRow& r) {
      return r.trial == trial && r.generation >= state.generation;
    });

    es::EsWorker worker(config.es_config(trial_seed(config, trial)), objective, std::move(state),
                        transport);
    while (worker.state().generation < config.generations) {
      const auto start = std::chrono::steady_clock::now();
      const double at_theta =
          writer ? evaluate_theta(config, worker.state().theta, config.eval_episodes, config.seed)
                 : nan;
      const auto report = worker.step();
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (!writer) continue;
      rows.push_back({trial, report.generation, report.mean_score, at_theta});
      write_checkpoint(ckpt.string(), Checkpoint{hash, worker.state()});
      write_text_atomic(dir / "trials.csv", trials_csv(rows));
      note("trial " + std::to_string(trial) + " generation " + std::to_string(report.generation) +
           " mean_perturbed " + format_double(report.mean_score) + " score_at_theta " +
           format_double(at_theta) + " grad_norm " + format_double(report.gradient_norm) +
           " seconds " + format_double(seconds));
    }
    worker.finish();
    if (hooks.on_trial_end) hooks.on_trial_end(trial, worker.state());
  }

  if (writer) {
    write_text_atomic(dir / "trials.csv", trials_csv(rows));
    write_text_atomic(dir / "curve.csv", curve_csv(config, rows));
  }
}

EvalSummary cmd_eval(const RunConfig& config, const std::string& checkpoint,
                     std::size_t episodes, std::uint64_t seed) {
  if (episodes == 0) throw ConfigError("eval needs at least one episode");
  const auto c = read_checkpoint(checkpoint);
  if (c.config_hash != config_hash(config)) {
    throw CheckpointError(checkpoint + " does not match the configured architecture");
  }
  const auto expected = make_agent(config).model().layout()->total_size();
  if (c.state.theta.size() != expected) {
    throw CheckpointError(checkpoint + " holds " + std::to_string(c.state.theta.size()) +
                          " parameters, expected " + std::to_string(expected));
  }
  EvalSummary summary;
  summary.scores = evaluate_scores(make_objective(config), c.state.theta, episodes, seed,
                                   config.threads);
  const auto point = stats::summarize(0, summary.scores, config.confidence, config.ci_resamples,
                                      mix_seed(seed, kEvalTag));
  summary.mean = point.mean;
  summary.ci_low = point.ci_low;
  summary.ci_high = point.ci_high;
  return summary;
}

void cmd_plotdata(const std::vector<std::string>& run_dirs, std::ostream& out) {
  if (run_dirs.empty()) throw ConfigError("plot-data needs at least one run directory");
  struct Run {
    std::string dir;
    RunConfig config;
    std::vector<TrialRow> rows;
    std::set<std::uint64_t> grid;
  };
  std::vector<Run> runs;
  for (const auto& d : run_dirs) {
    Run run;
    run.dir = d;
    run.config = load_config_file((fs::path(d) / "config.txt").string());
    run.rows = read_trials_csv((fs::path(d) / "trials.csv").string());
    for (const auto& r : run.rows) run.grid.insert(r.generation);
    runs.push_back(std::move(run));
  }
  std::vector<std::string> offenders;
  for (const auto& run : runs) {
    if (run.grid != runs.front().grid) offenders.push_back(run.dir);
  }
  if (!offenders.empty()) {
    std::string message = "generation grids differ from " + runs.front().dir + ":";
    for (const auto& o : offenders) message += " " + o;
    throw ConfigError(message);
  }
  out << kPlotHeader << "\n";
  for (const auto& run : runs) {
    const auto label = run.config.method_label();
    for (auto& [generation, g] : group_by_generation(run.rows)) {
      const auto point =
          stats::summarize(generation, g.perturbed, run.config.confidence,
                           run.config.ci_resamples, curve_seed(run.config, generation));
      out << label << "," << generation << "," << format_double(point.mean) << ","
          << format_double(point.ci_low) << "," << format_double(point.ci_high) << "\n";
    }
  }
}

}  // namespace pizero::cli
