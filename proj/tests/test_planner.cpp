#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>

#include "pizero/planner.hpp"
#include "stub_models.hpp"

using namespace pizero;

namespace {

NodeStats edges(std::vector<std::size_t> n, std::vector<double> q, std::vector<double> p) {
  NodeStats s(n.size());
  for (std::size_t a = 0; a < n.size(); ++a) {
    s[a].visits = n[a];
    s[a].value = q[a];
    s[a].prior = p[a];
  }
  return s;
}

// Per-node incoming visit count, from the parent's edge.
std::map<NodeId, std::size_t> incoming(const SearchTree& tree) {
  std::map<NodeId, std::size_t> in;
  for (NodeId id = 0; id < tree.size(); ++id) {
    for (const auto& e : tree.node(id).edges) {
      if (e.child) in[*e.child] += e.visits;
    }
  }
  return in;
}

}  // namespace

TEST_CASE("ucb fixtures") {
  const auto fresh = edges({0, 0, 0, 0}, {0, 0, 0, 0}, {0.25, 0.25, 0.25, 0.25});
  for (std::size_t a = 0; a < 4; ++a) {
    CHECK(std::abs(ucb_score(fresh, a, 1.25, 19652) - 0.312513) < 1e-6);
  }
  const auto two = edges({1, 0}, {1, 0}, {0.5, 0.5});
  // 1 + 0.5 * sqrt(2) / 2 * (1.25 + log(19654 / 19652)), worked by hand
  CHECK(std::abs(ucb_score(two, 0, 1.25, 19652) - 1.4419777178) < 1e-9);
  CHECK(std::abs(ucb_score(two, 1, 1.25, 19652) - 0.8839554357) < 1e-9);
  const auto zero_prior = edges({0, 7}, {0, 3}, {0.0, 1.0});
  CHECK(ucb_score(zero_prior, 0, 1.25, 19652) == 0.0);
}

TEST_CASE("selection") {
  SearchTree tree;
  tree.add_node({{0.0}}, NodeKind::decision, std::vector<double>{0.25, 0.25, 0.25, 0.25});
  Rng rng(1, 1);
  PlannerConfig cfg;
  CHECK(select_child(tree, 0, cfg, rng) == 0);

  SearchTree two;
  two.add_node({{0.0}}, NodeKind::decision, std::vector<double>{0.5, 0.5});
  two.node(0).edges[0].visits = 1;
  two.node(0).edges[0].value = 1.0;
  CHECK(select_child(two, 0, cfg, rng) == 0);

  SearchTree chance;
  chance.add_node({{0.0}}, NodeKind::chance, std::vector<double>{0.0, 1.0, 0.0});
  for (int i = 0; i < 100; ++i) CHECK(select_child(chance, 0, cfg, rng) == 1);
}

TEST_CASE("chance selection follows the prior") {
  SearchTree tree;
  tree.add_node({{0.0}}, NodeKind::chance, std::vector<double>{0.2, 0.5, 0.3});
  Rng rng(9, 9);
  std::vector<int> count(3);
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) count[select_child(tree, 0, PlannerConfig{}, rng)]++;
  CHECK(count[0] / double(draws) == doctest::Approx(0.2).epsilon(0.05));
  CHECK(count[1] / double(draws) == doctest::Approx(0.5).epsilon(0.05));
  CHECK(count[2] / double(draws) == doctest::Approx(0.3).epsilon(0.05));
}

TEST_CASE("backpropagation examples") {
  SUBCASE("single edge") {
    SearchTree t;
    t.add_node({{0.0}}, NodeKind::decision, std::vector<double>{1.0});
    const auto child = t.add_node({{0.0}}, NodeKind::decision, std::vector<double>{1.0});
    t.node(0).edges[0].child = child;
    const std::vector<PathStep> path{{0, 0}};
    backpropagate(t, path, 1.0, 1.0);
    CHECK(t.node(0).edges[0].value == 1.0);
    CHECK(t.node(0).edges[0].visits == 1);
  }
  SUBCASE("two edges") {
    for (auto [gamma, r0, r1, v, g0, g1] :
         {std::tuple{1.0, 1.0, 0.0, 2.0, 3.0, 2.0}, std::tuple{0.5, 1.0, 1.0, 4.0, 2.5, 3.0}}) {
      SearchTree t;
      for (int i = 0; i < 3; ++i) t.add_node({{0.0}}, NodeKind::decision, std::vector<double>{1.0});
      t.node(0).edges[0].child = 1;
      t.node(0).edges[0].reward = r0;
      t.node(1).edges[0].child = 2;
      t.node(1).edges[0].reward = r1;
      const std::vector<PathStep> path{{0, 0}, {1, 0}};
      std::vector<double> seen;
      backpropagate(t, path, v, gamma, [&](NodeId, std::size_t, double g) { seen.push_back(g); });
      CHECK(t.node(1).edges[0].value == g1);
      CHECK(t.node(0).edges[0].value == g0);
      CHECK(seen == std::vector<double>{g1, g0});
    }
  }
  SUBCASE("running mean") {
    SearchTree t;
    t.add_node({{0.0}}, NodeKind::decision, std::vector<double>{1.0});
    t.node(0).edges[0].child = t.add_node({{0.0}}, NodeKind::decision, std::vector<double>{1.0});
    const std::vector<PathStep> path{{0, 0}};
    for (double v : {1.0, 2.0, 6.0}) backpropagate(t, path, v, 1.0);
    CHECK(t.node(0).edges[0].value == doctest::Approx(3.0));
    CHECK(t.node(0).edges[0].visits == 3);
  }
}

TEST_CASE("expansion") {
  stub::Random model(3, 2, 5);
  PlannerConfig cfg;
  SearchTree tree;
  const AbstractState root{{0.1, -0.2, 0.3}};
  tree.add_node(root, NodeKind::decision, nn::softmax(model.predict(root).logits));
  const auto e = expand_leaf(tree, 0, 1, model, cfg);
  CHECK(tree.size() == 2);
  const auto want = model.dynamics(root, 1);
  CHECK(tree.node(0).edges[1].reward == want.reward);
  CHECK(tree.node(0).edges[1].child == e.child);
  const auto& child = tree.node(e.child);
  CHECK(child.state == want.next);
  CHECK(e.value == model.predict(want.next).value);
  const auto priors = nn::softmax(model.predict(want.next).logits);
  for (std::size_t a = 0; a < 3; ++a) {
    CHECK(child.edges[a].visits == 0);
    CHECK(child.edges[a].value == 0.0);
    CHECK(child.edges[a].prior == priors[a]);
    CHECK_FALSE(child.edges[a].child);
  }
  CHECK_THROWS_AS(expand_leaf(tree, 0, 1, model, cfg), std::logic_error);
  expand_leaf(tree, 0, 2, model, cfg);
  CHECK(tree.size() == 3);

  cfg.chance_nodes = true;
  const auto c = expand_leaf(tree, 0, 0, model, cfg);
  CHECK(tree.size() == 4);
  CHECK(tree.node(c.child).kind == NodeKind::chance);
  CHECK(c.value == 0.0);
  expand_leaf(tree, c.child, 1, model, cfg);
  CHECK(tree.size() == 5);
  CHECK(tree.node(4).kind == NodeKind::decision);
}

TEST_CASE("budget one follows the prior") {
  stub::Random model(4, 3, 21);
  const AbstractState root{{0.5, 0.4, -0.9}};
  PlannerConfig cfg;
  cfg.budget = 1;
  Rng rng(0, 0);
  const auto result = run_search(model, root, cfg, rng);
  CHECK(result.action == nn::argmax(model.predict(root).logits));
  CHECK(std::accumulate(result.visits.begin(), result.visits.end(), std::size_t{0}) == 1);
}

TEST_CASE("two-armed stub prefers the rewarding arm") {
  stub::TwoArm model;
  const AbstractState root{{0.0}};
  for (bool chance : {false, true}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      PlannerConfig cfg;
      cfg.chance_nodes = chance;
      Rng rng(seed, 0);
      const auto r = run_search(model, root, cfg, rng);
      CHECK(r.visits[0] > r.visits[1]);
      CHECK(r.action == 0);
    }
  }
}

TEST_CASE("degenerate chance prior makes search reproducible") {
  stub::TwoArm model;
  PlannerConfig cfg;
  cfg.chance_nodes = true;
  cfg.budget = 25;
  SearchTree a, b;
  Rng r1(1, 0), r2(2, 0);
  run_search(model, {{0.0}}, cfg, r1, &a);
  run_search(model, {{0.0}}, cfg, r2, &b);
  REQUIRE(a.size() == b.size());
  for (NodeId id = 0; id < a.size(); ++id) {
    const auto& x = a.node(id);
    const auto& y = b.node(id);
    CHECK(x.kind == y.kind);
    for (std::size_t i = 0; i < x.edges.size(); ++i) {
      CHECK(x.edges[i].visits == y.edges[i].visits);
      CHECK(x.edges[i].value == y.edges[i].value);
      CHECK(x.edges[i].child == y.edges[i].child);
    }
    if (x.kind == NodeKind::chance) {
      CHECK(x.edges[1].visits == 0);
      CHECK(x.edges[2].visits == 0);
    }
  }
}

TEST_CASE("random tree properties") {
  std::size_t trees = 0;
  for (std::uint64_t seed = 0; seed < 1200; ++seed) {
    Rng pick(seed, 77);
    const std::size_t k = 2 + pick.below(4);
    const std::size_t c = 1 + pick.below(3);
    PlannerConfig cfg;
    cfg.budget = 1 + pick.below(40);
    cfg.discount = pick.uniform() < 0.5 ? 1.0 : 0.5 + 0.5 * pick.uniform();
    cfg.chance_nodes = pick.uniform() < 0.5;
    stub::Random model(k, c, seed);
    const AbstractState root{{pick.uniform() - 0.5, pick.uniform() - 0.5, pick.uniform() - 0.5}};

    std::map<std::pair<NodeId, std::size_t>, std::vector<double>> returns;
    SearchTree tree;
    Rng rng(seed, 1);
    const auto result = run_search(model, root, cfg, rng, &tree,
                                   [&](NodeId n, std::size_t a, double g) {
                                     returns[{n, a}].push_back(g);
                                   });
    ++trees;

    CHECK(std::accumulate(result.visits.begin(), result.visits.end(), std::size_t{0}) ==
          cfg.budget);
    std::size_t decisions = 0, chances = 0, opened = 0;
    const auto in = incoming(tree);
    for (NodeId id = 0; id < tree.size(); ++id) {
      const auto& node = tree.node(id);
      (node.kind == NodeKind::decision ? decisions : chances)++;
      double prior_sum = 0.0;
      std::size_t out = 0;
      for (std::size_t a = 0; a < node.edges.size(); ++a) {
        const auto& e = node.edges[a];
        prior_sum += e.prior;
        out += e.visits;
        if (node.kind == NodeKind::decision && e.visits > 0) ++opened;
        const auto& g = returns[{id, a}];
        CHECK(g.size() == e.visits);
        if (e.visits > 0) {
          const double m = std::accumulate(g.begin(), g.end(), 0.0) / g.size();
          CHECK(e.value == doctest::Approx(m).epsilon(1e-12));
          CHECK(e.child.has_value());
        } else {
          CHECK(e.value == 0.0);
        }
      }
      CHECK(prior_sum == doctest::Approx(1.0).epsilon(1e-9));
      if (id == tree.root()) {
        CHECK(out == cfg.budget);
      } else if (node.kind == NodeKind::chance) {
        CHECK(out == in.at(id));
      } else {
        // the expanding simulation stops at a new decision node
        CHECK(out + 1 == in.at(id));
      }
    }
    CHECK(decisions == cfg.budget + 1);
    // one chance node per decision edge ever taken
    CHECK(chances == (cfg.chance_nodes ? opened : 0));
    CHECK(chances <= cfg.budget);
    std::size_t best = 0;
    for (std::size_t a = 1; a < k; ++a) {
      if (result.visits[a] > result.visits[best]) best = a;
    }
    CHECK(result.action == best);
  }
  CHECK(trees >= 1000);
}

TEST_CASE("planner does not depend on environments") {
  const std::filesystem::path root(PIZERO_SOURCE_DIR);
  const std::regex include_re("#include\\s+[\"<]([^\">]+)[\">]");
  // walk the planner's project includes transitively
  std::vector<std::filesystem::path> todo{root / "src/planner.cpp", root / "include/pizero/planner.hpp"};
  std::set<std::string> seen;
  while (!todo.empty()) {
    const auto file = todo.back();
    todo.pop_back();
    if (!seen.insert(file.string()).second) continue;
    std::ifstream in(file);
    REQUIRE(in);
    std::stringstream text;
    text << in.rdbuf();
    const auto s = text.str();
    for (std::sregex_iterator it(s.begin(), s.end(), include_re), end; it != end; ++it) {
      const std::string inc = (*it)[1];
      CHECK_MESSAGE(inc.find("envs") == std::string::npos, file.string() << " includes " << inc);
      CHECK_MESSAGE(inc.find("agent") == std::string::npos, file.string() << " includes " << inc);
      if (inc.rfind("pizero/", 0) == 0) todo.push_back(root / "include" / inc);
    }
  }
  CHECK(seen.size() >= 3);
}
