#ifndef MOPART_SELECTION_HPP
#define MOPART_SELECTION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mopart/partition.hpp"

namespace mopart {

struct SelectionConfig {
  enum class Strategy { path, leaf };
  enum class CpMode { absolute, fraction_of_current_hv };
  Strategy strategy = Strategy::leaf;
  double cp = 0.0;             // used in absolute mode
  CpMode cp_mode = CpMode::absolute;
  double fraction = 0.1;       // used in fraction_of_current_hv mode
};

// Exploration constant for this call: either the fixed cp or a fraction of
// the hypervolume of all current samples.
inline double resolve_cp(const SelectionConfig& cfg, double current_hv) {
  if (cfg.cp < 0.0) throw std::invalid_argument("resolve_cp: cp < 0");
  if (cfg.fraction < 0.0 || cfg.fraction > 1.0)
    throw std::invalid_argument("resolve_cp: fraction outside [0,1]");
  return cfg.cp_mode == SelectionConfig::CpMode::absolute
             ? cfg.cp
             : cfg.fraction * current_hv;
}

// Upper confidence bound of a node given its parent's visit count.
inline double ucb(double node_hv, std::size_t n_node, std::size_t n_parent,
                  double cp) {
  if (n_node == 0) throw std::invalid_argument("ucb: n_node == 0");
  return node_hv +
         2.0 * cp *
             std::sqrt(2.0 * std::log(static_cast<double>(n_parent)) /
                       static_cast<double>(n_node));
}

struct SelectionOutcome {
  std::size_t leaf_id = 0;
  std::vector<std::size_t> path;  // root to leaf
  std::vector<std::pair<std::size_t, double>> ucb_trace;
  std::size_t hv_evaluations = 0;  // fresh node-HV computations performed
};

// Descends from the root toward the child with the larger UCB (tie favors
// the good child), computing both children's hypervolumes at every level.
inline SelectionOutcome select_path(PartitionTree& tree,
                                    const SelectionConfig& cfg,
                                    double current_hv = 0.0) {
  const double cp = resolve_cp(cfg, current_hv);
  SelectionOutcome out;
  std::size_t id = tree.root();
  out.path.push_back(id);
  while (!tree.node(id).is_leaf()) {
    const std::size_t g = *tree.node(id).good_child;
    const std::size_t b = *tree.node(id).bad_child;
    const double hg = tree.ensure_node_hv(g, &out.hv_evaluations);
    const double hb = tree.ensure_node_hv(b, &out.hv_evaluations);
    const std::size_t n_parent = tree.node(id).n;
    const double ug = ucb(hg, tree.node(g).n, n_parent, cp);
    const double ub = ucb(hb, tree.node(b).n, n_parent, cp);
    out.ucb_trace.emplace_back(g, ug);
    out.ucb_trace.emplace_back(b, ub);
    id = ug >= ub ? g : b;
    out.path.push_back(id);
  }
  out.leaf_id = id;
  return out;
}

// Scores only the leaves, each against its own parent's count; the root
// scored against itself when it is the only node. Tie favors the leftmost
// leaf. Performs exactly one hypervolume computation per leaf on a fresh
// tree.
inline SelectionOutcome select_leaf(PartitionTree& tree,
                                    const SelectionConfig& cfg,
                                    double current_hv = 0.0) {
  const double cp = resolve_cp(cfg, current_hv);
  SelectionOutcome out;
  bool have_best = false;
  double best = 0.0;
  for (std::size_t id : tree.leaves()) {
    const TreeNode& nd = tree.node(id);
    const std::size_t n_parent =
        nd.parent ? tree.node(*nd.parent).n : nd.n;
    const double h = tree.ensure_node_hv(id, &out.hv_evaluations);
    const double u = ucb(h, nd.n, n_parent, cp);
    out.ucb_trace.emplace_back(id, u);
    if (!have_best || u > best) {
      have_best = true;
      best = u;
      out.leaf_id = id;
    }
  }
  std::size_t id = out.leaf_id;
  out.path.push_back(id);
  while (tree.node(id).parent) {
    id = *tree.node(id).parent;
    out.path.push_back(id);
  }
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

inline SelectionOutcome select(PartitionTree& tree, const SelectionConfig& cfg,
                               double current_hv = 0.0) {
  return cfg.strategy == SelectionConfig::Strategy::path
             ? select_path(tree, cfg, current_hv)
             : select_leaf(tree, cfg, current_hv);
}

// Pushes freshly evaluated samples up the selected path: every node on the
// path absorbs them (count grows, hypervolume recomputed); other nodes are
// untouched. Samples must lie in the leaf's region.
inline void backpropagate(PartitionTree& tree,
                          const std::vector<std::size_t>& path,
                          const std::vector<EvaluatedSample>& new_samples) {
  if (path.empty() || path.front() != tree.root())
    throw std::invalid_argument("backpropagate: path must start at root");
  if (new_samples.empty()) return;
  const std::size_t leaf = path.back();
  for (const auto& s : new_samples)
    if (!tree.region_membership(leaf, s.x))
      throw std::invalid_argument(
          "backpropagate: sample outside the leaf region");
  std::vector<std::uint64_t> ids;
  ids.reserve(new_samples.size());
  for (const auto& s : new_samples) {
    tree.register_sample(s);
    ids.push_back(s.id);
  }
  for (std::size_t id : path) tree.absorb_samples(id, ids);
}

}  // namespace mopart

#endif  // MOPART_SELECTION_HPP
