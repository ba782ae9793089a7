#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pizero/abstract.hpp"
#include "pizero/rng.hpp"

// The planner sees the world only through SearchModel; it has no knowledge of
// environments.

namespace pizero {

struct PlannerConfig {
  std::size_t budget = 10;
  double discount = 1.0;
  double c1 = 1.25;
  double c2 = 19652.0;
  /// Every decision edge leads to an afterstate whose outcome is sampled
  /// from the learned chance prior.
  bool chance_nodes = false;

  friend bool operator==(const PlannerConfig&, const PlannerConfig&) = default;
};

using NodeId = std::size_t;

enum class NodeKind { decision, chance };

struct EdgeStats {
  std::size_t visits = 0;
  double value = 0.0;
  double prior = 0.0;
  double reward = 0.0;
  std::optional<NodeId> child;
};

/// Per-action statistics of one node: N, Q, P, R and successor.
using NodeStats = std::vector<EdgeStats>;

struct SearchNode {
  AbstractState state;
  NodeKind kind = NodeKind::decision;
  NodeStats edges;
};

class SearchTree {
 public:
  explicit SearchTree(std::size_t reserve = 0) { nodes_.reserve(reserve); }

  NodeId add_node(AbstractState state, NodeKind kind, std::span<const double> priors);
  SearchNode& node(NodeId id) { return nodes_.at(id); }
  const SearchNode& node(NodeId id) const { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }
  NodeId root() const { return 0; }

 private:
  std::vector<SearchNode> nodes_;
};

struct PathStep {
  NodeId node;
  std::size_t action;
};

struct SearchResult {
  std::vector<std::size_t> visits;
  std::vector<double> values;
  std::size_t action = 0;
};

/// Called once per edge update during backpropagation with the return G
/// that was folded into Q.
using BackupObserver = std::function<void(NodeId, std::size_t, double)>;

/// Q + P * sqrt(1 + sum N) / (1 + N) * (c1 + log((sum N + c2 + 1) / c2))
double ucb_score(const NodeStats& stats, std::size_t action, double c1, double c2);

/// Argmax of ucb_score at a decision node (ties to the lowest index); at a
/// chance node, an outcome sampled from the stored prior.
std::size_t select_child(const SearchTree& tree, NodeId node, const PlannerConfig& config,
                         Rng& rng);

struct Expansion {
  NodeId child;
  /// Predicted value of the new decision node; zero for a chance node.
  double value = 0.0;
};

/// Computes the successor of an unexpanded edge, records (R, S) and creates
/// the child with zeroed N/Q. A decision edge in chance mode produces an
/// afterstate (chance node); every other edge produces a decision node whose
/// priors come from `predict`.
Expansion expand_leaf(SearchTree& tree, NodeId parent, std::size_t action,
                      const SearchModel& model, const PlannerConfig& config);

/// n-step backup from leaf to root:
///   G_t = R_t + d_t * G_{t+1},  G_T = leaf_value
/// where d_t is 1 for an edge into an afterstate and `discount` otherwise.
void backpropagate(SearchTree& tree, std::span<const PathStep> path, double leaf_value,
                   double discount, const BackupObserver& observer = {});

/// Runs `config.budget` simulations from `root`. Each simulation ends in
/// exactly one new decision node.
SearchResult run_search(const SearchModel& model, const AbstractState& root,
                        const PlannerConfig& config, Rng& rng, SearchTree* tree_out = nullptr,
                        const BackupObserver& observer = {});

}  // namespace pizero
