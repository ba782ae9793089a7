// Command line front end: train, eval, plot-data.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pizero/commands.hpp"
#include "pizero/config.hpp"
#include "pizero/error.hpp"

namespace {

using pizero::cli::RunConfig;

struct ConfigFlags {
  std::string file;
  std::map<std::string, std::optional<std::string>> values;

  void attach(CLI::App& app) {
    app.add_option("--config", file, "key = value configuration file");
    for (const auto& key : pizero::cli::config_keys()) {
      values[key.name];
      app.add_option("--" + key.name, values[key.name], key.description);
    }
  }

  // defaults < file < PIZERO_* environment < flags
  RunConfig resolve(const std::string& fallback_file = {}) const {
    RunConfig config;
    const std::string path = file.empty() ? fallback_file : file;
    if (!path.empty()) config = pizero::cli::load_config_file(path, config);
    pizero::cli::apply_env_overrides(config,
                                     [](const std::string& name) { return std::getenv(name.c_str()); });
    for (const auto& [name, value] : values) {
      if (value) pizero::cli::set_value(config, name, *value);
    }
    return config;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PiZero: planning in a learned abstract space, trained by evolution strategies"};
  app.require_subcommand(1);
  app.footer(pizero::cli::defaults_table());

  ConfigFlags train_flags;
  auto* train = app.add_subcommand("train", "train for the configured number of trials");
  train_flags.attach(*train);

  ConfigFlags eval_flags;
  std::string checkpoint;
  std::size_t episodes = 100;
  std::uint64_t eval_seed = 1;
  auto* eval = app.add_subcommand("eval", "score a checkpoint");
  eval_flags.attach(*eval);
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--episodes", episodes, "evaluation episodes");
  eval->add_option("--eval_seed", eval_seed, "seed of the evaluation episodes");

  std::vector<std::string> run_dirs;
  std::string output;
  auto* plot = app.add_subcommand("plot-data", "merge run directories into one CSV");
  plot->add_option("runs", run_dirs, "run directories")->required();
  plot->add_option("-o,--output", output, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      pizero::cli::cmd_train(train_flags.resolve(), std::cout);
    } else if (*eval) {
      const auto beside = std::filesystem::path(checkpoint).parent_path() / "config.txt";
      const auto config =
          eval_flags.resolve(std::filesystem::exists(beside) ? beside.string() : std::string());
      const auto summary = pizero::cli::cmd_eval(config, checkpoint, episodes, eval_seed);
      std::cout << "episodes," << summary.scores.size() << "\n"
                << "mean," << pizero::cli::format_double(summary.mean) << "\n"
                << "ci_low," << pizero::cli::format_double(summary.ci_low) << "\n"
                << "ci_high," << pizero::cli::format_double(summary.ci_high) << "\n";
    } else if (*plot) {
      if (output.empty()) {
        pizero::cli::cmd_plotdata(run_dirs, std::cout);
      } else {
        std::ofstream out(output);
        if (!out) throw pizero::ConfigError("cannot write " + output);
        pizero::cli::cmd_plotdata(run_dirs, out);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
