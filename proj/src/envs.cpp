#include "pizero/envs.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>

#include "pizero/error.hpp"
#include "pizero/nn.hpp"

namespace pizero::envs {

namespace {

constexpr std::uint64_t kEnvResetStream = 0x454e5652455345ull;

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

Point uniform_point(Rng& rng) {
  const double x = rng.uniform();
  const double y = rng.uniform();
  return {x, y};
}

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::tsp: return "tsp";
    case EnvKind::collect: return "collect";
    case EnvKind::g2048: return "2048";
    case EnvKind::flp: return "flp";
  }
  return "unknown";
}

EnvKind parse_env_kind(const std::string& name) {
  if (name == "tsp") return EnvKind::tsp;
  if (name == "collect") return EnvKind::collect;
  if (name == "2048" || name == "g2048") return EnvKind::g2048;
  if (name == "flp") return EnvKind::flp;
  throw ConfigError("unknown environment '" + name + "' (expected tsp, collect, 2048, flp)");
}

// ---------------------------------------------------------------- TSP

double tour_length(std::span<const Point> cities, std::span<const std::size_t> order) {
  if (order.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    total += distance(cities[order[i]], cities[order[i + 1]]);
  }
  return total + distance(cities[order.back()], cities[order.front()]);
}

TspState tsp_from_cities(std::vector<Point> cities) {
  TspState state;
  state.order.resize(cities.size());
  std::iota(state.order.begin(), state.order.end(), std::size_t{0});
  state.cities = std::move(cities);
  return state;
}

TspState tsp_reset(std::size_t n, Rng& rng) {
  std::vector<Point> cities(n);
  for (auto& c : cities) c = uniform_point(rng);
  return tsp_from_cities(std::move(cities));
}

double tsp_step(TspState& state, std::size_t city) {
  const std::size_t n = state.cities.size();
  if (state.t >= n) return 0.0;
  if (city < n) {
    const auto pos = static_cast<std::size_t>(
        std::find(state.order.begin(), state.order.end(), city) - state.order.begin());
    std::swap(state.order[state.t], state.order[pos]);
  }
  ++state.t;
  return state.t == n ? -tour_length(state.cities, state.order) : 0.0;
}

std::vector<double> tsp_observe(const TspState& state) {
  std::vector<double> obs;
  obs.reserve(2 * state.cities.size() + 1);
  for (const auto& c : state.cities) {
    obs.push_back(c.x);
    obs.push_back(c.y);
  }
  obs.push_back(static_cast<double>(state.t) / static_cast<double>(state.cities.size()));
  return obs;
}

// ---------------------------------------------------------------- Collect

std::size_t CollectState::remaining() const {
  return static_cast<std::size_t>(std::count(coins.begin(), coins.end(), true));
}

CollectState collect_reset(std::size_t size, std::size_t coins, std::size_t horizon, Rng& rng) {
  const std::size_t cells = size * size;
  if (coins + 1 > cells) throw ConfigError("collect: too many coins for the grid");
  // Partial Fisher-Yates: the first coins+1 entries are distinct uniform tiles.
  std::vector<std::size_t> tiles(cells);
  std::iota(tiles.begin(), tiles.end(), std::size_t{0});
  for (std::size_t i = 0; i <= coins; ++i) {
    std::swap(tiles[i], tiles[i + rng.below(cells - i)]);
  }
  CollectState state;
  state.size = size;
  state.horizon = horizon;
  state.coins.assign(cells, false);
  state.agent_row = tiles[0] / size;
  state.agent_col = tiles[0] % size;
  for (std::size_t i = 1; i <= coins; ++i) state.coins[tiles[i]] = true;
  return state;
}

double collect_step(CollectState& state, std::size_t direction) {
  if (state.t >= state.horizon) return 0.0;
  switch (direction) {
    case up:
      if (state.agent_row > 0) --state.agent_row;
      break;
    case down:
      if (state.agent_row + 1 < state.size) ++state.agent_row;
      break;
    case left:
      if (state.agent_col > 0) --state.agent_col;
      break;
    case right:
      if (state.agent_col + 1 < state.size) ++state.agent_col;
      break;
    default:
      break;
  }
  state.coins[state.agent_row * state.size + state.agent_col] = false;
  ++state.t;
  return state.t == state.horizon ? -static_cast<double>(state.remaining()) : 0.0;
}

std::vector<double> collect_observe(const CollectState& state) {
  const std::size_t cells = state.size * state.size;
  std::vector<double> obs(2 * cells, 0.0);
  for (std::size_t i = 0; i < cells; ++i) obs[i] = state.coins[i] ? 1.0 : 0.0;
  obs[cells + state.agent_row * state.size + state.agent_col] = 1.0;
  return obs;
}

// ---------------------------------------------------------------- 2048

SlideResult g2048_slide(const Board& board, std::size_t direction) {
  SlideResult result{board, 0.0, false};
  if (direction > right) return result;
  for (std::size_t line = 0; line < 4; ++line) {
    // Cell indices ordered from the edge the tiles move toward.
    std::array<std::size_t, 4> cells{};
    for (std::size_t i = 0; i < 4; ++i) {
      switch (direction) {
        case left: cells[i] = line * 4 + i; break;
        case right: cells[i] = line * 4 + (3 - i); break;
        case up: cells[i] = i * 4 + line; break;
        default: cells[i] = (3 - i) * 4 + line; break;
      }
    }
    std::array<std::uint8_t, 4> packed{};
    std::size_t count = 0;
    for (std::size_t c : cells) {
      if (board[c] != 0) packed[count++] = board[c];
    }
    std::array<std::uint8_t, 4> out{};
    std::size_t written = 0;
    for (std::size_t i = 0; i < count; ++i) {
      if (i + 1 < count && packed[i] == packed[i + 1]) {
        out[written++] = static_cast<std::uint8_t>(packed[i] + 1);
        result.reward += std::ldexp(1.0, packed[i] + 1);
        ++i;
      } else {
        out[written++] = packed[i];
      }
    }
    for (std::size_t i = 0; i < 4; ++i) {
      if (result.board[cells[i]] != out[i]) result.moved = true;
      result.board[cells[i]] = out[i];
    }
  }
  return result;
}

Board g2048_spawn(const Board& afterstate, Rng& rng) {
  std::vector<std::size_t> empty;
  for (std::size_t i = 0; i < afterstate.size(); ++i) {
    if (afterstate[i] == 0) empty.push_back(i);
  }
  if (empty.empty()) throw std::logic_error("g2048_spawn: no empty cell");
  Board next = afterstate;
  const std::size_t cell = empty[rng.below(empty.size())];
  next[cell] = rng.uniform() < 0.9 ? 1 : 2;
  return next;
}

bool g2048_can_move(const Board& board) {
  for (std::size_t d = 0; d < 4; ++d) {
    if (g2048_slide(board, d).moved) return true;
  }
  return false;
}

Board g2048_reset(Rng& rng) {
  Board board{};
  board = g2048_spawn(board, rng);
  return g2048_spawn(board, rng);
}

std::vector<double> g2048_observe(const Board& board) {
  std::vector<double> obs(board.size());
  for (std::size_t i = 0; i < board.size(); ++i) obs[i] = board[i] / 16.0;
  return obs;
}

// ---------------------------------------------------------------- FLP

double flp_objective(std::span<const Point> clients, std::span<const Point> facilities) {
  if (facilities.empty()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (const auto& c : clients) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& f : facilities) nearest = std::min(nearest, distance(c, f));
    worst = std::max(worst, nearest);
  }
  return worst;
}

FlpState flp_reset(std::size_t clients, std::size_t facilities, Rng& rng) {
  FlpState state;
  state.clients.resize(clients);
  for (auto& c : state.clients) c = uniform_point(rng);
  state.max_facilities = facilities;
  return state;
}

double flp_step(FlpState& state, Point p) {
  if (state.facilities.size() >= state.max_facilities) return 0.0;
  state.facilities.push_back(p);
  if (state.facilities.size() < state.max_facilities) return 0.0;
  return -flp_objective(state.clients, state.facilities);
}

std::vector<double> flp_observe(const FlpState& state) {
  std::vector<double> obs;
  obs.reserve(2 * state.clients.size() + 2 * state.max_facilities + 1);
  for (const auto& c : state.clients) {
    obs.push_back(c.x);
    obs.push_back(c.y);
  }
  for (std::size_t j = 0; j < state.max_facilities; ++j) {
    const Point f = j < state.facilities.size() ? state.facilities[j] : Point{};
    obs.push_back(f.x);
    obs.push_back(f.y);
  }
  obs.push_back(static_cast<double>(state.facilities.size()) /
                static_cast<double>(state.max_facilities));
  return obs;
}

// ---------------------------------------------------------------- Runtime

namespace {

const std::size_t* discrete_action(const EnvAction& action) {
  return std::get_if<std::size_t>(&action);
}

class TspEnv final : public Environment {
 public:
  TspEnv(std::size_t n, TspState state) : n_(n), state_(std::move(state)) {}
  EnvSpec spec() const override {
    return {2 * n_ + 1, ActionKind::discrete, n_, n_};
  }
  void reset(std::uint64_t seed) override {
    Rng rng(seed, kEnvResetStream);
    state_ = tsp_reset(n_, rng);
  }
  std::vector<double> observe() const override { return tsp_observe(state_); }
  StepResult step(const EnvAction& action) override {
    const auto* city = discrete_action(action);
    const double reward = tsp_step(state_, city ? *city : n_);
    return {reward, done()};
  }
  bool done() const override { return state_.t >= n_; }

 private:
  std::size_t n_;
  TspState state_;
};

class CollectEnv final : public Environment {
 public:
  CollectEnv(std::size_t coins, CollectState state) : coins_(coins), state_(std::move(state)) {}
  EnvSpec spec() const override {
    return {2 * state_.size * state_.size, ActionKind::discrete, 4, state_.horizon};
  }
  void reset(std::uint64_t seed) override {
    Rng rng(seed, kEnvResetStream);
    state_ = collect_reset(state_.size, coins_, state_.horizon, rng);
  }
  std::vector<double> observe() const override { return collect_observe(state_); }
  StepResult step(const EnvAction& action) override {
    const auto* dir = discrete_action(action);
    const double reward = collect_step(state_, dir ? *dir : 4);
    return {reward, done()};
  }
  bool done() const override { return state_.t >= state_.horizon; }
  const CollectState& state() const { return state_; }

 private:
  std::size_t coins_;
  CollectState state_;
};

class G2048Env final : public Environment {
 public:
  G2048Env(std::size_t max_steps, Board board, std::uint64_t spawn_seed)
      : max_steps_(max_steps), board_(board), spawn_rng_(spawn_seed, kEnvResetStream) {}
  EnvSpec spec() const override { return {16, ActionKind::discrete, 4, max_steps_}; }
  void reset(std::uint64_t seed) override {
    spawn_rng_ = Rng(seed, kEnvResetStream);
    board_ = g2048_reset(spawn_rng_);
    steps_ = 0;
  }
  std::vector<double> observe() const override { return g2048_observe(board_); }
  StepResult step(const EnvAction& action) override {
    if (done()) return {0.0, true};
    ++steps_;
    const auto* dir = discrete_action(action);
    if (!dir) return {0.0, done()};
    const SlideResult slid = g2048_slide(board_, *dir);
    if (slid.moved) board_ = g2048_spawn(slid.board, spawn_rng_);
    return {slid.reward, done()};
  }
  bool done() const override { return steps_ >= max_steps_ || !g2048_can_move(board_); }

 private:
  std::size_t max_steps_;
  Board board_;
  Rng spawn_rng_;
  std::size_t steps_ = 0;
};

class FlpEnv final : public Environment {
 public:
  explicit FlpEnv(FlpState state) : clients_(state.clients.size()), state_(std::move(state)) {}
  EnvSpec spec() const override {
    return {2 * clients_ + 2 * state_.max_facilities + 1, ActionKind::continuous, 2,
            state_.max_facilities};
  }
  void reset(std::uint64_t seed) override {
    Rng rng(seed, kEnvResetStream);
    state_ = flp_reset(clients_, state_.max_facilities, rng);
  }
  std::vector<double> observe() const override { return flp_observe(state_); }
  StepResult step(const EnvAction& action) override {
    if (done()) return {0.0, true};
    const auto* p = std::get_if<Point>(&action);
    if (!p) return {0.0, done()};
    const double reward = flp_step(state_, *p);
    return {reward, done()};
  }
  bool done() const override { return state_.facilities.size() >= state_.max_facilities; }

 private:
  std::size_t clients_;
  FlpState state_;
};

}  // namespace

EnvSpec env_spec(const EnvParams& params) { return make_env(params)->spec(); }

std::unique_ptr<Environment> make_env(const EnvParams& p) {
  switch (p.kind) {
    case EnvKind::tsp: {
      if (p.tsp_cities < 2) throw ConfigError("tsp_cities must be >= 2");
      return std::make_unique<TspEnv>(p.tsp_cities,
                                      tsp_from_cities(std::vector<Point>(p.tsp_cities)));
    }
    case EnvKind::collect: {
      if (p.collect_size < 2 || p.collect_horizon < 1) throw ConfigError("invalid collect size");
      CollectState state;
      state.size = p.collect_size;
      state.horizon = p.collect_horizon;
      state.coins.assign(p.collect_size * p.collect_size, false);
      return std::make_unique<CollectEnv>(p.collect_coins, std::move(state));
    }
    case EnvKind::g2048:
      if (p.g2048_max_steps < 1) throw ConfigError("g2048_max_steps must be >= 1");
      return std::make_unique<G2048Env>(p.g2048_max_steps, Board{}, 0);
    case EnvKind::flp: {
      if (p.flp_clients < 1 || p.flp_facilities < 1) throw ConfigError("invalid FLP sizes");
      FlpState state;
      state.clients.resize(p.flp_clients);
      state.max_facilities = p.flp_facilities;
      return std::make_unique<FlpEnv>(std::move(state));
    }
  }
  throw ConfigError("unknown environment kind");
}

std::unique_ptr<Environment> make_tsp_env(TspState state) {
  const std::size_t n = state.cities.size();
  return std::make_unique<TspEnv>(n, std::move(state));
}

std::unique_ptr<Environment> make_collect_env(CollectState state) {
  const std::size_t coins = state.remaining();
  return std::make_unique<CollectEnv>(coins, std::move(state));
}

std::unique_ptr<Environment> make_g2048_env(Board board, std::size_t max_steps,
                                            std::uint64_t spawn_seed) {
  return std::make_unique<G2048Env>(max_steps, board, spawn_seed);
}

std::unique_ptr<Environment> make_flp_env(FlpState state) {
  return std::make_unique<FlpEnv>(std::move(state));
}

EnvAction interpret_action(const EnvSpec& spec, std::span<const double> raw) {
  if (raw.size() != spec.action_dim) {
    throw ConfigError("action parameters have length " + std::to_string(raw.size()) +
                      ", expected " + std::to_string(spec.action_dim));
  }
  if (spec.action_kind == ActionKind::discrete) return nn::argmax(raw);
  return Point{nn::sigmoid(raw[0]), nn::sigmoid(raw[1])};
}

std::vector<double> encode_action(const EnvSpec& spec, const EnvAction& action) {
  if (spec.action_kind == ActionKind::discrete) {
    return nn::one_hot(std::get<std::size_t>(action), spec.action_dim);
  }
  const Point p = std::get<Point>(action);
  return {p.x, p.y};
}

// ---------------------------------------------------------------- Fixtures

std::vector<Point> read_points(std::istream& in) {
  std::vector<Point> points;
  std::string line;
  while (std::getline(in, line)) {
    line = strip_comment(line);
    if (blank(line)) continue;
    std::istringstream row(line);
    Point p;
    if (!(row >> p.x >> p.y)) throw ConfigError("fixture: expected 'x y', got '" + line + "'");
    points.push_back(p);
  }
  return points;
}

CollectState read_collect_grid(std::istream& in, std::size_t horizon) {
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = strip_comment(line);
    line.erase(std::remove_if(line.begin(), line.end(),
                              [](unsigned char c) { return std::isspace(c); }),
               line.end());
    if (!line.empty()) rows.push_back(line);
  }
  const std::size_t size = rows.size();
  if (size == 0) throw ConfigError("fixture: empty collect grid");
  CollectState state;
  state.size = size;
  state.horizon = horizon;
  state.coins.assign(size * size, false);
  bool agent_seen = false;
  for (std::size_t r = 0; r < size; ++r) {
    if (rows[r].size() != size) throw ConfigError("fixture: collect grid must be square");
    for (std::size_t c = 0; c < size; ++c) {
      switch (rows[r][c]) {
        case '.': break;
        case 'c': state.coins[r * size + c] = true; break;
        case 'A':
          if (agent_seen) throw ConfigError("fixture: more than one agent");
          agent_seen = true;
          state.agent_row = r;
          state.agent_col = c;
          break;
        default: throw ConfigError(std::string("fixture: unknown tile '") + rows[r][c] + "'");
      }
    }
  }
  if (!agent_seen) throw ConfigError("fixture: no agent in collect grid");
  return state;
}

Board read_g2048_board(std::istream& in) {
  Board board{};
  std::size_t filled = 0;
  std::string line;
  while (std::getline(in, line)) {
    line = strip_comment(line);
    std::istringstream row(line);
    long value;
    while (row >> value) {
      if (filled == 16) throw ConfigError("fixture: 2048 board has more than 16 cells");
      if (value != 0 && (value < 2 || (value & (value - 1)) != 0)) {
        throw ConfigError("fixture: 2048 tile " + std::to_string(value) + " is not a power of 2");
      }
      board[filled++] = value == 0 ? 0 : static_cast<std::uint8_t>(std::countr_zero(
                                              static_cast<unsigned long>(value)));
    }
  }
  if (filled != 16) throw ConfigError("fixture: 2048 board needs 16 cells");
  return board;
}

}  // namespace pizero::envs
