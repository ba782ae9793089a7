#include "pizero/planner.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pizero/nn.hpp"

namespace pizero {

NodeId SearchTree::add_node(AbstractState state, NodeKind kind,
                            std::span<const double> priors) {
  SearchNode node{std::move(state), kind, NodeStats(priors.size())};
  for (std::size_t a = 0; a < priors.size(); ++a) node.edges[a].prior = priors[a];
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

double ucb_score(const NodeStats& stats, std::size_t action, double c1, double c2) {
  double total = 0.0;
  for (const auto& e : stats) total += static_cast<double>(e.visits);
  const EdgeStats& edge = stats.at(action);
  const double exploration = std::sqrt(1.0 + total) / (1.0 + static_cast<double>(edge.visits)) *
                             (c1 + std::log((total + c2 + 1.0) / c2));
  return edge.value + edge.prior * exploration;
}

std::size_t select_child(const SearchTree& tree, NodeId id, const PlannerConfig& config,
                         Rng& rng) {
  const SearchNode& node = tree.node(id);
  if (node.kind == NodeKind::chance) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t last_possible = 0;
    for (std::size_t o = 0; o < node.edges.size(); ++o) {
      if (node.edges[o].prior <= 0.0) continue;
      last_possible = o;
      cumulative += node.edges[o].prior;
      if (u < cumulative) return o;
    }
    return last_possible;
  }
  std::size_t best = 0;
  double best_score = ucb_score(node.edges, 0, config.c1, config.c2);
  for (std::size_t a = 1; a < node.edges.size(); ++a) {
    const double score = ucb_score(node.edges, a, config.c1, config.c2);
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  }
  return best;
}

Expansion expand_leaf(SearchTree& tree, NodeId parent, std::size_t action,
                      const SearchModel& model, const PlannerConfig& config) {
  if (tree.node(parent).edges.at(action).child) {
    throw std::logic_error("expand_leaf: edge is already expanded");
  }
  const NodeKind parent_kind = tree.node(parent).kind;
  const AbstractState& state = tree.node(parent).state;

  Transition step = parent_kind == NodeKind::chance ? model.chance_dynamics(state, action)
                                                    : model.dynamics(state, action);
  Expansion result;
  if (parent_kind == NodeKind::decision && config.chance_nodes) {
    const auto outcome_prior = model.chance_prior(step.next);
    result.child = tree.add_node(std::move(step.next), NodeKind::chance, outcome_prior);
  } else {
    const Prediction prediction = model.predict(step.next);
    const auto priors = nn::softmax(prediction.logits);
    result.value = prediction.value;
    result.child = tree.add_node(std::move(step.next), NodeKind::decision, priors);
  }
  // add_node may reallocate; look the parent up again.
  EdgeStats& edge = tree.node(parent).edges[action];
  edge.reward = step.reward;
  edge.child = result.child;
  return result;
}

void backpropagate(SearchTree& tree, std::span<const PathStep> path, double leaf_value,
                   double discount, const BackupObserver& observer) {
  double ret = leaf_value;
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    EdgeStats& edge = tree.node(it->node).edges.at(it->action);
    const bool into_afterstate =
        edge.child && tree.node(*edge.child).kind == NodeKind::chance;
    ret = edge.reward + (into_afterstate ? 1.0 : discount) * ret;
    const double n = static_cast<double>(edge.visits);
    edge.value = (n * edge.value + ret) / (n + 1.0);
    edge.visits += 1;
    if (observer) observer(it->node, it->action, ret);
  }
}

SearchResult run_search(const SearchModel& model, const AbstractState& root,
                        const PlannerConfig& config, Rng& rng, SearchTree* tree_out,
                        const BackupObserver& observer) {
  if (config.budget == 0) throw std::invalid_argument("run_search: budget must be >= 1");
  const std::size_t per_simulation = config.chance_nodes ? 2 : 1;
  SearchTree tree(1 + per_simulation * config.budget);
  {
    const Prediction root_prediction = model.predict(root);
    tree.add_node(root, NodeKind::decision, nn::softmax(root_prediction.logits));
  }

  std::vector<PathStep> path;
  for (std::size_t sim = 0; sim < config.budget; ++sim) {
    path.clear();
    NodeId node = tree.root();
    double leaf_value = 0.0;
    for (;;) {
      const std::size_t action = select_child(tree, node, config, rng);
      path.push_back({node, action});
      const auto& child = tree.node(node).edges[action].child;
      if (child) {
        node = *child;
        continue;
      }
      const Expansion expansion = expand_leaf(tree, node, action, model, config);
      if (tree.node(expansion.child).kind == NodeKind::chance) {
        // Resolve the afterstate's outcome within the same simulation.
        node = expansion.child;
        continue;
      }
      leaf_value = expansion.value;
      break;
    }
    backpropagate(tree, path, leaf_value, config.discount, observer);
  }

  SearchResult result;
  const auto& edges = tree.node(tree.root()).edges;
  result.visits.reserve(edges.size());
  for (const auto& e : edges) {
    result.visits.push_back(e.visits);
    result.values.push_back(e.value);
  }
  for (std::size_t a = 1; a < edges.size(); ++a) {
    if (result.visits[a] > result.visits[result.action]) result.action = a;
  }
  if (tree_out) *tree_out = std::move(tree);
  return result;
}

}  // namespace pizero
