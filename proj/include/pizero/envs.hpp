#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pizero/rng.hpp"

namespace pizero::envs {

enum class EnvKind { tsp, collect, g2048, flp };

std::string to_string(EnvKind kind);
EnvKind parse_env_kind(const std::string& name);

enum class ActionKind { discrete, continuous };

struct EnvSpec {
  std::size_t observation_dim = 0;
  ActionKind action_kind = ActionKind::discrete;
  /// Number of discrete actions, or the dimension of a continuous action.
  std::size_t action_dim = 0;
  std::size_t horizon = 1;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

using EnvAction = std::variant<std::size_t, Point>;

struct StepResult {
  double reward = 0.0;
  bool done = false;
};

/// Directions shared by Collect and 2048.
enum Direction : std::size_t { up = 0, down = 1, left = 2, right = 3 };

struct EnvParams {
  EnvKind kind = EnvKind::collect;
  std::size_t tsp_cities = 10;
  std::size_t collect_size = 8;
  std::size_t collect_coins = 5;
  std::size_t collect_horizon = 20;
  std::size_t g2048_max_steps = 500;
  std::size_t flp_clients = 20;
  std::size_t flp_facilities = 5;

  friend bool operator==(const EnvParams&, const EnvParams&) = default;
};

// ---------------------------------------------------------------- TSP

struct TspState {
  std::vector<Point> cities;
  std::vector<std::size_t> order;
  std::size_t t = 0;
};

/// Closed tour through `order`, including the edge back to the start.
double tour_length(std::span<const Point> cities, std::span<const std::size_t> order);
TspState tsp_reset(std::size_t n, Rng& rng);
TspState tsp_from_cities(std::vector<Point> cities);
/// Swaps the city at position t with city `city`. The negated tour length is
/// paid on the final step.
double tsp_step(TspState& state, std::size_t city);
/// Row-major city matrix followed by t / n.
std::vector<double> tsp_observe(const TspState& state);

// ---------------------------------------------------------------- Collect

struct CollectState {
  std::size_t size = 8;
  std::vector<bool> coins;  // row-major occupancy
  std::size_t agent_row = 0;
  std::size_t agent_col = 0;
  std::size_t t = 0;
  std::size_t horizon = 20;

  std::size_t remaining() const;
};

CollectState collect_reset(std::size_t size, std::size_t coins, std::size_t horizon, Rng& rng);
/// Moves one tile (clamped at the border), collecting any coin entered. Minus
/// the remaining coin count is paid on the final step.
double collect_step(CollectState& state, std::size_t direction);
/// Coin plane followed by agent plane.
std::vector<double> collect_observe(const CollectState& state);

// ---------------------------------------------------------------- 2048

/// Row-major exponents; 0 is empty, e is the tile 2^e.
using Board = std::array<std::uint8_t, 16>;

struct SlideResult {
  Board board{};
  double reward = 0.0;
  bool moved = false;
};

SlideResult g2048_slide(const Board& board, std::size_t direction);
/// Fills one uniformly chosen empty cell with 2 (p = 0.9) or 4.
Board g2048_spawn(const Board& afterstate, Rng& rng);
bool g2048_can_move(const Board& board);
Board g2048_reset(Rng& rng);
std::vector<double> g2048_observe(const Board& board);

// ---------------------------------------------------------------- FLP

struct FlpState {
  std::vector<Point> clients;
  std::vector<Point> facilities;
  std::size_t max_facilities = 5;
};

/// max over clients of the distance to the nearest facility.
double flp_objective(std::span<const Point> clients, std::span<const Point> facilities);
FlpState flp_reset(std::size_t clients, std::size_t facilities, Rng& rng);
double flp_step(FlpState& state, Point p);
/// Clients, facilities placed so far (zero-padded), placed / max.
std::vector<double> flp_observe(const FlpState& state);

// ---------------------------------------------------------------- Runtime

class Environment {
 public:
  virtual ~Environment() = default;
  virtual EnvSpec spec() const = 0;
  virtual void reset(std::uint64_t seed) = 0;
  virtual std::vector<double> observe() const = 0;
  /// Actions of the wrong kind or out of range are no-ops worth 0 reward.
  virtual StepResult step(const EnvAction& action) = 0;
  virtual bool done() const = 0;
};

EnvSpec env_spec(const EnvParams& params);
std::unique_ptr<Environment> make_env(const EnvParams& params);

/// Environments started from an explicit state instead of a seed.
std::unique_ptr<Environment> make_tsp_env(TspState state);
std::unique_ptr<Environment> make_collect_env(CollectState state);
std::unique_ptr<Environment> make_g2048_env(Board board, std::size_t max_steps,
                                            std::uint64_t spawn_seed);
std::unique_ptr<Environment> make_flp_env(FlpState state);

/// Turns decoder output into an environment action: argmax for discrete
/// spaces, a per-coordinate sigmoid onto the unit square for FLP.
EnvAction interpret_action(const EnvSpec& spec, std::span<const double> raw);
/// Vector form of an action as fed back into the agent's memory.
std::vector<double> encode_action(const EnvSpec& spec, const EnvAction& action);

// ---------------------------------------------------------------- Fixtures

/// "x y" per line; '#' starts a comment.
std::vector<Point> read_points(std::istream& in);
/// Square grid rows of '.', 'c' (coin) and one 'A' (agent).
CollectState read_collect_grid(std::istream& in, std::size_t horizon);
/// Four rows of four tile values (0, 2, 4, 8, ...).
Board read_g2048_board(std::istream& in);

}  // namespace pizero::envs
