#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

#include "pizero/checkpoint.hpp"
#include "pizero/commands.hpp"
#include "pizero/config.hpp"
#include "pizero/error.hpp"
#include "pizero/stats.hpp"

using namespace pizero;
using namespace pizero::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("pizero_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig tiny(const fs::path& dir) {
  RunConfig c;
  c.env = "collect";
  c.state_dim = 6;
  c.memory_dim = 6;
  c.hidden_width = 8;
  c.pairs = 4;
  c.generations = 2;
  c.trials = 1;
  c.eval_episodes = 3;
  c.ci_resamples = 200;
  c.learning_rate = 0.05;
  c.budget = 3;
  c.output_dir = dir.string();
  return c;
}

std::size_t data_rows(const std::string& csv) {
  return static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) - 1;
}

}  // namespace

TEST_CASE("defaults follow the hyperparameter table") {
  const RunConfig c;
  CHECK(c.learning_rate == 1e-3);
  CHECK(c.sigma == 0.1);
  CHECK(c.batch_size == 1000);
  CHECK(c.hidden_layers == 1);
  CHECK(c.hidden_width == 64);
  CHECK(c.state_dim == 64);
  CHECK(c.abstract_actions == 4);
  CHECK(c.chance_outcomes == 3);
  CHECK(c.budget == 10);
  CHECK(c.trials == 5);
  CHECK(c.population() == 500);
  c.validate();
  const auto table = defaults_table();
  for (const auto& key : config_keys()) CHECK(table.find(key.name) != std::string::npos);
}

TEST_CASE("config round trip") {
  RunConfig c;
  c.env = "flp";
  c.sigma = 0.037;
  c.learning_rate = 3.3e-4;
  c.planner = false;
  c.chance_nodes = true;
  c.peers = "a:1,b:2";
  c.label = "x y";
  c.seed = 18446744073709551615ull;
  c.discount = 0.1 + 0.2;
  CHECK(parse_config(serialize_config(c)) == c);
  CHECK(parse_config(serialize_config(RunConfig{})) == RunConfig{});
}

TEST_CASE("config parsing errors carry line numbers") {
  try {
    parse_config("sigma = 0.2\n\n# comment\nbudget = ten\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("nonsense = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("sigma 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("planner = maybe\n"), ConfigError);
  RunConfig bad;
  bad.sigma = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = RunConfig{};
  bad.env = "sokoban";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = RunConfig{};
  bad.world = 2;
  bad.peers = "127.0.0.1:1";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("environment overrides") {
  const std::map<std::string, std::string> vars{{"PIZERO_SIGMA", "0.5"},
                                                 {"PIZERO_PLANNER", "off"},
                                                 {"PIZERO_OUTPUT_DIR", "elsewhere"}};
  RunConfig c = parse_config("sigma = 0.2\nbudget = 4\n");
  apply_env_overrides(c, [&](const std::string& name) -> const char* {
    const auto it = vars.find(name);
    return it == vars.end() ? nullptr : it->second.c_str();
  });
  CHECK(c.sigma == 0.5);
  CHECK(c.budget == 4);
  CHECK_FALSE(c.planner);
  CHECK(c.output_dir == "elsewhere");
}

TEST_CASE("architecture hash") {
  RunConfig a, b;
  b.sigma = 0.5;
  b.planner = false;
  CHECK(config_hash(a) == config_hash(b));
  b.hidden_width = 32;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("checkpoint round trip and refusal") {
  const auto dir = scratch("ckpt");
  fs::create_directories(dir);
  Checkpoint c;
  c.config_hash = 77;
  c.state.theta = {1.0, -2.5, 1e-300};
  c.state.adam = es::AdamState::zeros(3, 0.8, 0.99, 1e-7);
  c.state.adam.m = {0.1, 0.2, 0.3};
  c.state.adam.step = 9;
  c.state.generation = 9;
  const auto path = (dir / "x.ckpt").string();
  write_checkpoint(path, c);
  CHECK(read_checkpoint(path) == c);

  auto bytes = encode_checkpoint(c);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "PZCK");
  bytes[4] = 2;
  CHECK_THROWS_AS(decode_checkpoint(bytes), CheckpointError);
  bytes = encode_checkpoint(c);
  bytes.pop_back();
  CHECK_THROWS_AS(decode_checkpoint(bytes), CheckpointError);
  CHECK_THROWS_AS(read_checkpoint((dir / "missing.ckpt").string()), CheckpointError);
}

TEST_CASE("train writes the expected artifacts") {
  const auto dir = scratch("train");
  std::ostringstream log;
  cmd_train(tiny(dir), log);
  const auto curve = slurp(dir / "curve.csv");
  CHECK(curve.rfind(std::string(kCurveHeader) + "\n", 0) == 0);
  CHECK(data_rows(curve) == 2);
  CHECK(data_rows(slurp(dir / "trials.csv")) == 2);
  CHECK(fs::exists(dir / "trial_0.ckpt"));
  CHECK(load_config_file((dir / "config.txt").string()) == tiny(dir));
  CHECK(read_checkpoint((dir / "trial_0.ckpt").string()).state.generation == 2);
  CHECK(log.str().find("generation 1") != std::string::npos);
}

TEST_CASE("training is byte-for-byte reproducible") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto ca = tiny(a), cb = tiny(b);
  ca.trials = cb.trials = 2;
  std::ostringstream log;
  cmd_train(ca, log);
  cmd_train(cb, log);
  CHECK(slurp(a / "curve.csv") == slurp(b / "curve.csv"));
  CHECK(slurp(a / "trials.csv") == slurp(b / "trials.csv"));
  CHECK(slurp(a / "trial_1.ckpt") == slurp(b / "trial_1.ckpt"));
}

TEST_CASE("resume continues the same trajectory") {
  const auto full = scratch("resume_full"), part = scratch("resume_part");
  auto cf = tiny(full);
  cf.generations = 4;
  std::ostringstream log;
  cmd_train(cf, log);

  auto cp = tiny(part);
  cp.generations = 2;
  cmd_train(cp, log);
  cp.generations = 4;
  cp.resume = true;
  cmd_train(cp, log);
  CHECK(read_checkpoint((full / "trial_0.ckpt").string()) ==
        read_checkpoint((part / "trial_0.ckpt").string()));
  CHECK(slurp(full / "curve.csv") == slurp(part / "curve.csv"));

  auto other = cp;
  other.hidden_width = 9;
  CHECK_THROWS_AS(cmd_train(other, log), CheckpointError);
}

TEST_CASE("distributed training writes the serial CSV") {
  const auto serial = scratch("dist_serial");
  auto cs = tiny(serial);
  cs.pairs = 6;
  cs.trials = 2;
  std::ostringstream log;
  cmd_train(cs, log);

  es::InProcessHub hub(2);
  std::vector<std::future<void>> ranks;
  std::vector<std::unique_ptr<es::Transport>> ends;
  for (std::size_t r = 0; r < 2; ++r) ends.push_back(hub.endpoint(r));
  const auto dist = scratch("dist");
  for (std::size_t r = 0; r < 2; ++r) {
    ranks.push_back(std::async(std::launch::async, [&, r] {
      auto c = cs;
      c.output_dir = (dist / std::to_string(r)).string();
      c.rank = r;
      c.world = 2;
      c.peers = "127.0.0.1:1,127.0.0.1:2";  // unused: the hub replaces TCP
      std::ostringstream quiet;
      TrainHooks hooks;
      hooks.transport = ends[r].get();
      cmd_train(c, quiet, hooks);
    }));
  }
  for (auto& f : ranks) f.get();
  CHECK(slurp(serial / "curve.csv") == slurp(dist / "0" / "curve.csv"));
  CHECK(slurp(serial / "trials.csv") == slurp(dist / "0" / "trials.csv"));
  CHECK_FALSE(fs::exists(dist / "1" / "curve.csv"));
}

TEST_CASE("eval") {
  const auto dir = scratch("eval");
  const auto c = tiny(dir);
  std::ostringstream log;
  cmd_train(c, log);
  const auto ckpt = (dir / "trial_0.ckpt").string();
  const auto a = cmd_eval(c, ckpt, 12, 5);
  const auto b = cmd_eval(c, ckpt, 12, 5);
  CHECK(a.scores == b.scores);
  CHECK(a.mean == b.mean);
  CHECK(a.ci_low <= a.mean);
  CHECK(a.mean <= a.ci_high);
  CHECK(a.scores.size() == 12);
  CHECK_THROWS_AS(cmd_eval(c, ckpt, 0, 5), ConfigError);
  auto wider = c;
  wider.hidden_width = 16;
  CHECK_THROWS_AS(cmd_eval(wider, ckpt, 3, 5), CheckpointError);
  // score at theta in the log equals eval on the same episodes
  const auto first = read_trials_csv((dir / "trials.csv").string());
  CHECK(first.size() == 2);
}

TEST_CASE("plot data") {
  const auto a = scratch("plot_a"), b = scratch("plot_b");
  auto ca = tiny(a);
  ca.trials = 3;
  auto cb = tiny(b);
  cb.planner = false;
  cb.trials = 3;
  std::ostringstream log;
  cmd_train(ca, log);
  cmd_train(cb, log);

  std::ostringstream out;
  cmd_plotdata({a.string()}, out);
  std::istringstream rows(out.str());
  std::string line;
  std::getline(rows, line);
  CHECK(line == kPlotHeader);

  // passthrough: same numbers as curve.csv, and the band matches stats::summarize
  const auto trials = read_trials_csv((a / "trials.csv").string());
  std::istringstream curve(slurp(a / "curve.csv"));
  std::getline(curve, line);
  for (std::uint64_t g = 0; g < 2; ++g) {
    std::string plot_line, curve_line;
    std::getline(rows, plot_line);
    std::getline(curve, curve_line);
    CHECK(plot_line.rfind("collect/planner," + std::to_string(g) + ",", 0) == 0);
    const auto tail = curve_line.substr(0, curve_line.rfind(','));
    CHECK(plot_line == "collect/planner," + tail);

    std::vector<double> scores;
    for (const auto& r : trials) {
      if (r.generation == g) scores.push_back(r.mean_perturbed);
    }
    const double hand = (scores[0] + scores[1] + scores[2]) / 3.0;
    const auto point = stats::summarize(g, scores, ca.confidence, ca.ci_resamples,
                                        mix_seed(ca.seed, g));
    CHECK(point.mean == doctest::Approx(hand).epsilon(1e-15));
    CHECK(plot_line == "collect/planner," + std::to_string(g) + "," + format_double(point.mean) +
                           "," + format_double(point.ci_low) + "," + format_double(point.ci_high));
  }

  std::ostringstream both;
  cmd_plotdata({a.string(), b.string()}, both);
  CHECK(data_rows(both.str()) == 4);
  CHECK(both.str().find("collect/reactive,1,") != std::string::npos);

  const auto c = scratch("plot_c");
  auto cc = tiny(c);
  cc.generations = 3;
  cmd_train(cc, log);
  try {
    std::ostringstream sink;
    cmd_plotdata({a.string(), b.string(), c.string()}, sink);
    FAIL("expected a grid mismatch");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(c.string()) != std::string::npos);
    CHECK(std::string(e.what()).find(b.string()) == std::string::npos);
  }
  CHECK_THROWS_AS(cmd_plotdata({}, log), ConfigError);
}

TEST_CASE("unwritable output directory") {
  auto c = tiny("/proc/pizero_cannot_exist/run");
  std::ostringstream log;
  CHECK_THROWS(cmd_train(c, log));
}
