#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <set>

#include "mopart/selection.hpp"

using namespace mopart;

namespace {

SvmModel dummy_svm() {
  std::vector<DesignVector> X{{0.2, 0.2}, {0.8, 0.8}};
  std::vector<Label> y{Label::good, Label::bad};
  return train_svm(X, y, KernelSpec::linear());
}

TreeNode make_node(std::size_t id, std::optional<std::size_t> parent,
                   NodeSide side, int depth, double hv, std::size_t n) {
  TreeNode nd;
  nd.id = id;
  nd.parent = parent;
  nd.side = side;
  nd.depth = depth;
  nd.hv = hv;
  nd.n = n;
  return nd;
}

void link(std::vector<TreeNode>& nodes, std::size_t parent, std::size_t good,
          std::size_t bad, const SvmModel& svm) {
  nodes[parent].svm = svm;
  nodes[parent].good_child = good;
  nodes[parent].bad_child = bad;
}

// Fixed three-level tree with preset statistics:
//        0 (n=100)
//       / \
//  g:1(hv,n=60)  b:2(hv,n=40)
//     / \
// g:3    b:4
PartitionTree fixture_tree(double hv1, double hv2, double hv3, double hv4,
                           std::size_t n1 = 60, std::size_t n2 = 40,
                           std::size_t n3 = 35, std::size_t n4 = 25) {
  auto svm = dummy_svm();
  std::vector<TreeNode> nodes;
  nodes.push_back(make_node(0, std::nullopt, NodeSide::root, 0, 1.0, 100));
  nodes.push_back(make_node(1, 0, NodeSide::good, 1, hv1, n1));
  nodes.push_back(make_node(2, 0, NodeSide::bad, 1, hv2, n2));
  nodes.push_back(make_node(3, 1, NodeSide::good, 2, hv3, n3));
  nodes.push_back(make_node(4, 1, NodeSide::bad, 2, hv4, n4));
  link(nodes, 0, 1, 2, svm);
  link(nodes, 1, 3, 4, svm);
  auto domain = SearchDomain::continuous_box({0.0, 0.0}, {1.0, 1.0});
  return PartitionTree::from_parts(domain, {0.0, 0.0}, HvConfig{},
                                   std::move(nodes), {});
}

Archive clustered_archive(std::size_t per_blob, std::uint64_t seed) {
  auto d = SearchDomain::continuous_box({0.0, 0.0}, {1.0, 1.0});
  Archive a(d, 2);
  SplitMix64 rng(seed);
  auto blob = [&](double cx, double cy, double quality) {
    for (std::size_t k = 0; k < per_blob; ++k) {
      const double x0 = std::clamp(cx + 0.08 * rng.normal(), 0.0, 1.0);
      const double x1 = std::clamp(cy + 0.08 * rng.normal(), 0.0, 1.0);
      a.add({x0, x1},
            {quality + 0.1 * rng.uniform(), quality + 0.1 * rng.uniform()});
    }
  };
  blob(0.2, 0.2, 1.0);
  blob(0.8, 0.8, 0.5);
  blob(0.2, 0.8, 0.1);
  blob(0.8, 0.2, 0.7);
  return a;
}

}  // namespace

TEST_CASE("ucb reduces to the node volume when exploration is off") {
  REQUIRE(ucb(0.42, 17, 200, 0.0) == 0.42);
}

TEST_CASE("ucb matches the worked example") {
  REQUIRE(ucb(0.6, 20, 100, 0.05) ==
          Catch::Approx(0.66786140424415111798).margin(1e-12));
}

TEST_CASE("ucb validates counts and rewards rarely visited nodes") {
  REQUIRE_THROWS_AS(ucb(0.5, 0, 10, 0.1), std::invalid_argument);
  REQUIRE(ucb(0.5, 10, 100, 0.05) > ucb(0.5, 40, 100, 0.05));
}

TEST_CASE("cp resolution honors mode and validates ranges") {
  SelectionConfig cfg;
  cfg.cp = 0.25;
  REQUIRE(resolve_cp(cfg, 123.0) == 0.25);
  cfg.cp_mode = SelectionConfig::CpMode::fraction_of_current_hv;
  cfg.fraction = 0.1;
  REQUIRE(resolve_cp(cfg, 2.0) == Catch::Approx(0.2));
  cfg.fraction = 1.5;
  REQUIRE_THROWS_AS(resolve_cp(cfg, 1.0), std::invalid_argument);
  cfg.fraction = 0.1;
  cfg.cp = -1.0;
  REQUIRE_THROWS_AS(resolve_cp(cfg, 1.0), std::invalid_argument);
}

TEST_CASE("a single-leaf tree selects the root with no volume work") {
  auto d = SearchDomain::continuous_box({0.0, 0.0}, {1.0, 1.0});
  Archive a(d, 2);
  SplitMix64 rng(1);
  for (int i = 0; i < 10; ++i)
    a.add({rng.uniform(), rng.uniform()}, {rng.uniform(), rng.uniform()});
  auto tree = build_tree(a, PartitionParams{}, {0.0, 0.0});
  SelectionConfig cfg;
  auto path_out = select_path(tree, cfg);
  REQUIRE(path_out.path == std::vector<std::size_t>{0});
  REQUIRE(path_out.leaf_id == 0);
  REQUIRE(path_out.hv_evaluations == 0);
  auto leaf_out = select_leaf(tree, cfg);
  REQUIRE(leaf_out.leaf_id == 0);
  REQUIRE(leaf_out.hv_evaluations == 1);
}

TEST_CASE("greedy path descent follows the larger child volume") {
  auto tree = fixture_tree(0.9, 0.5, 0.8, 0.3);
  SelectionConfig cfg;
  cfg.strategy = SelectionConfig::Strategy::path;
  auto out = select_path(tree, cfg);
  REQUIRE(out.path == std::vector<std::size_t>{0, 1, 3});
  REQUIRE(out.leaf_id == 3);
  REQUIRE(out.hv_evaluations == 0);  // preset statistics, nothing to compute
  // Trace pairs cover both children at each level.
  REQUIRE(out.ucb_trace.size() == 4);
}

TEST_CASE("greedy path descent breaks exact ties toward the good child") {
  auto tree = fixture_tree(0.7, 0.7, 0.6, 0.6, 50, 50, 25, 25);
  SelectionConfig cfg;
  auto out = select_path(tree, cfg);
  REQUIRE(out.path == std::vector<std::size_t>{0, 1, 3});
}

TEST_CASE("path selection matches a hand-computed ucb chain") {
  // cp large enough that the smaller, less-visited bad child wins level 1.
  auto tree = fixture_tree(0.60, 0.55, 0.9, 0.1, 90, 10, 45, 45);
  SelectionConfig cfg;
  cfg.cp = 0.05;
  auto out = select_path(tree, cfg);
  const double u_good =
      0.60 + 0.1 * std::sqrt(2.0 * std::log(100.0) / 90.0);
  const double u_bad =
      0.55 + 0.1 * std::sqrt(2.0 * std::log(100.0) / 10.0);
  REQUIRE(u_bad > u_good);
  REQUIRE(out.path == std::vector<std::size_t>{0, 2});
  REQUIRE(out.leaf_id == 2);
  REQUIRE(out.ucb_trace[0].second == Catch::Approx(u_good).margin(1e-12));
  REQUIRE(out.ucb_trace[1].second == Catch::Approx(u_bad).margin(1e-12));
}

TEST_CASE("the chosen child never has a smaller ucb than its sibling") {
  auto a = clustered_archive(30, 21);
  auto tree = build_tree(a, PartitionParams{}, {0.0, 0.0});
  SelectionConfig cfg;
  cfg.cp = 0.1;
  auto out = select_path(tree, cfg);
  for (std::size_t k = 0; k + 1 < out.ucb_trace.size(); k += 2) {
    const auto& [gid, gu] = out.ucb_trace[k];
    const auto& [bid, bu] = out.ucb_trace[k + 1];
    const std::size_t chosen = out.path[k / 2 + 1];
    if (chosen == gid)
      REQUIRE(gu >= bu);
    else
      REQUIRE(bu >= gu);
  }
}

TEST_CASE("leaf selection is a leaf-count-bounded volume argmax") {
  auto tree = fixture_tree(0.9, 0.5, 0.8, 0.3);
  SelectionConfig cfg;
  auto out = select_leaf(tree, cfg);
  // Leaves leftmost-first: 3, 4, 2 with hv 0.8, 0.3, 0.5.
  REQUIRE(out.leaf_id == 3);
  REQUIRE(out.path == std::vector<std::size_t>{0, 1, 3});
  REQUIRE(out.ucb_trace.size() == 3);
  REQUIRE(out.hv_evaluations == 0);  // preset cache
}

TEST_CASE("leaf selection computes each leaf volume exactly once") {
  auto a = clustered_archive(30, 22);
  auto tree = build_tree(a, PartitionParams{}, {0.0, 0.0});
  SelectionConfig cfg;
  auto out = select_leaf(tree, cfg);
  REQUIRE(out.hv_evaluations == tree.leaves().size());
  // A second pass over the same tree hits the cache.
  auto again = select_leaf(tree, cfg);
  REQUIRE(again.hv_evaluations == 0);
  REQUIRE(again.leaf_id == out.leaf_id);
}

TEST_CASE("leaf selection breaks ties toward the leftmost leaf") {
  auto tree = fixture_tree(0.9, 0.6, 0.6, 0.6, 60, 30, 30, 30);
  SelectionConfig cfg;  // cp = 0; leaves 3 and 4 tie at 0.6, leaf 2 ties too
  auto out = select_leaf(tree, cfg);
  REQUIRE(out.leaf_id == 3);
}

TEST_CASE("strategy dispatch selects the configured algorithm") {
  auto tree1 = fixture_tree(0.6, 0.55, 0.9, 0.1, 90, 10, 45, 45);
  SelectionConfig cfg;
  cfg.cp = 0.05;
  cfg.strategy = SelectionConfig::Strategy::path;
  REQUIRE(select(tree1, cfg).leaf_id == 2);
  auto tree2 = fixture_tree(0.6, 0.55, 0.9, 0.1, 90, 10, 45, 45);
  cfg.strategy = SelectionConfig::Strategy::leaf;
  REQUIRE(select(tree2, cfg).leaf_id == 3);  // hv 0.9 wins at the leaves
}

TEST_CASE("exploration pressure widens the set of visited leaves") {
  // Simulated visit loop: after each selection the chosen leaf and its
  // ancestors gain q visits; volumes stay fixed. Higher cp must not shrink
  // the set of distinct leaves chosen across 20 rounds.
  auto run_rounds = [](double cp) {
    std::vector<double> hv{0.0, 0.0, 0.35, 0.5, 0.45};
    std::vector<std::size_t> n{100, 60, 40, 35, 25};
    std::set<std::size_t> seen;
    for (int round = 0; round < 20; ++round) {
      auto svm = dummy_svm();
      std::vector<TreeNode> nodes;
      nodes.push_back(
          make_node(0, std::nullopt, NodeSide::root, 0, hv[0], n[0]));
      nodes.push_back(make_node(1, 0, NodeSide::good, 1, hv[1], n[1]));
      nodes.push_back(make_node(2, 0, NodeSide::bad, 1, hv[2], n[2]));
      nodes.push_back(make_node(3, 1, NodeSide::good, 2, hv[3], n[3]));
      nodes.push_back(make_node(4, 1, NodeSide::bad, 2, hv[4], n[4]));
      link(nodes, 0, 1, 2, svm);
      link(nodes, 1, 3, 4, svm);
      auto domain = SearchDomain::continuous_box({0.0, 0.0}, {1.0, 1.0});
      auto tree = PartitionTree::from_parts(domain, {0.0, 0.0}, HvConfig{},
                                            std::move(nodes), {});
      SelectionConfig cfg;
      cfg.cp = cp;
      auto out = select_leaf(tree, cfg);
      seen.insert(out.leaf_id);
      for (std::size_t id : out.path) n[id] += 5;
    }
    return seen.size();
  };
  std::size_t prev = 0;
  for (double cp : {0.0, 0.02, 0.05, 0.1, 0.3}) {
    const std::size_t distinct = run_rounds(cp);
    REQUIRE(distinct >= prev);
    prev = distinct;
  }
}

TEST_CASE("backpropagation pushes new samples up the selected path") {
  auto a = clustered_archive(30, 23);
  auto tree = build_tree(a, PartitionParams{}, {0.0, 0.0});
  SelectionConfig cfg;
  auto out = select_leaf(tree, cfg);
  const std::size_t leaf = out.leaf_id;

  std::vector<std::size_t> n_before;
  std::vector<double> hv_before;
  for (std::size_t id : out.path) {
    n_before.push_back(tree.node(id).n);
    hv_before.push_back(tree.ensure_node_hv(id));
  }

  // No-op on an empty batch.
  backpropagate(tree, out.path, {});
  for (std::size_t k = 0; k < out.path.size(); ++k)
    REQUIRE(tree.node(out.path[k]).n == n_before[k]);

  // Find a point inside the leaf region.
  SplitMix64 rng(5);
  DesignVector inside;
  for (;;) {
    DesignVector x{rng.uniform(), rng.uniform()};
    if (tree.route(x) == leaf) {
      inside = x;
      break;
    }
  }

  // A dominated sample grows counts but not volume.
  EvaluatedSample dominated{10'000, inside, {0.01, 0.01}};
  backpropagate(tree, out.path, {dominated});
  for (std::size_t k = 0; k < out.path.size(); ++k) {
    const std::size_t id = out.path[k];
    REQUIRE(tree.node(id).n == n_before[k] + 1);
    REQUIRE(tree.ensure_node_hv(id) == hv_before[k]);
  }

  // A front-extending sample strictly grows volume along the whole path.
  EvaluatedSample better{10'001, inside, {2.0, 2.0}};
  backpropagate(tree, out.path, {better});
  for (std::size_t k = 0; k < out.path.size(); ++k) {
    const std::size_t id = out.path[k];
    REQUIRE(tree.node(id).n == n_before[k] + 2);
    REQUIRE(tree.ensure_node_hv(id) > hv_before[k]);
  }
}

TEST_CASE("backpropagation rejects samples outside the leaf region") {
  auto a = clustered_archive(30, 24);
  auto tree = build_tree(a, PartitionParams{}, {0.0, 0.0});
  REQUIRE(tree.leaves().size() >= 2);
  SelectionConfig cfg;
  auto out = select_leaf(tree, cfg);
  SplitMix64 rng(6);
  DesignVector outside;
  for (;;) {
    DesignVector x{rng.uniform(), rng.uniform()};
    if (tree.route(x) != out.leaf_id) {
      outside = x;
      break;
    }
  }
  EvaluatedSample s{20'000, outside, {1.0, 1.0}};
  REQUIRE_THROWS_AS(backpropagate(tree, out.path, {s}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(backpropagate(tree, {}, {s}), std::invalid_argument);
}
