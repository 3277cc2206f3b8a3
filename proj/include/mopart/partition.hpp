#ifndef MOPART_PARTITION_HPP
#define MOPART_PARTITION_HPP

#include <algorithm>
#include <cstdint>
#include <deque>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "mopart/core.hpp"
#include "mopart/hypervolume.hpp"
#include "mopart/pareto.hpp"
#include "mopart/svm.hpp"

namespace mopart {

struct PartitionParams {
  int max_depth = 6;
  int min_leaf_samples = 8;
  KernelSpec kernel = KernelSpec::rbf();
  double c_reg = 1.0;
  double svm_tol = 1e-3;
  int svm_max_passes = 10;
};

enum class NodeSide { root, good, bad };

struct TreeNode {
  std::size_t id = 0;
  std::optional<std::size_t> parent;
  NodeSide side = NodeSide::root;
  int depth = 0;
  std::optional<SvmModel> svm;  // present on non-leaves
  std::vector<std::uint64_t> sample_ids;
  std::size_t n = 0;  // == sample_ids.size()
  std::optional<double> hv;  // lazily cached sample-set hypervolume
  std::optional<std::size_t> good_child, bad_child;

  bool is_leaf() const { return !svm.has_value(); }
};

// Node-local dominance labeling: dominance numbers are computed within the
// given sample set only, samples sort ascending by (dominance number, id),
// and the first ceil(n/2) are good. Returned labels align with input order.
inline std::vector<Label> label_samples(
    const std::vector<EvaluatedSample>& samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("label_samples: fewer than 2 samples");
  std::vector<ObjectiveVector> points;
  points.reserve(n);
  for (const auto& s : samples) points.push_back(s.v);
  const auto counts = dominance_counts(points);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (counts[a] != counts[b]) return counts[a] < counts[b];
    return samples[a].id < samples[b].id;
  });
  const std::size_t n_good = (n + 1) / 2;
  std::vector<Label> labels(n, Label::bad);
  for (std::size_t k = 0; k < n_good; ++k) labels[order[k]] = Label::good;
  return labels;
}

struct SplitResult {
  SvmModel svm;
  std::vector<std::uint64_t> good_ids, bad_ids;
};

// Labels the node's samples, trains the boundary classifier, and routes the
// samples through it. Children receive samples by ROUTING, not by training
// label, so region membership and sample sets agree. Returns nothing when
// the classifier collapses to one class.
inline std::optional<SplitResult> split_node(
    const std::vector<EvaluatedSample>& node_samples,
    const SearchDomain& domain, const PartitionParams& params) {
  if (node_samples.size() < 2) return std::nullopt;
  const auto labels = label_samples(node_samples);
  std::vector<DesignVector> X;
  X.reserve(node_samples.size());
  for (const auto& s : node_samples) X.push_back(s.x);
  SvmModel svm;
  try {
    svm = train_svm(X, labels, params.kernel,
                    FeatureScaler::from_domain(domain), params.c_reg,
                    params.svm_tol, params.svm_max_passes);
  } catch (const NotSplittableError&) {
    return std::nullopt;
  }
  SplitResult split;
  split.svm = std::move(svm);
  for (const auto& s : node_samples) {
    if (split.svm.predict(s.x) == Label::good)
      split.good_ids.push_back(s.id);
    else
      split.bad_ids.push_back(s.id);
  }
  if (split.good_ids.empty() || split.bad_ids.empty()) return std::nullopt;
  return split;
}

// Binary space-partition tree over an archive snapshot. Nodes are stored in
// creation order (root first); leaves are listed leftmost-first, where the
// good child of every split precedes the bad child. Node hypervolumes are
// computed on demand and cached; the optional counter reports how many
// actual computations a query performed.
class PartitionTree {
 public:
  PartitionTree(SearchDomain domain, std::vector<double> hv_ref,
                HvConfig hv_cfg)
      : domain_(std::move(domain)),
        ref_(std::move(hv_ref)),
        hv_cfg_(hv_cfg) {}

  const SearchDomain& domain() const { return domain_; }
  const std::vector<double>& hv_ref() const { return ref_; }
  const HvConfig& hv_config() const { return hv_cfg_; }

  std::size_t root() const { return 0; }
  std::size_t size() const { return nodes_.size(); }
  const TreeNode& node(std::size_t id) const {
    if (id >= nodes_.size())
      throw std::invalid_argument("PartitionTree: unknown node id");
    return nodes_[id];
  }
  const std::vector<std::size_t>& leaves() const { return leaves_; }

  const std::vector<EvaluatedSample>& samples() const { return samples_; }
  const EvaluatedSample& sample_by_id(std::uint64_t id) const {
    auto it = id_index_.find(id);
    if (it == id_index_.end())
      throw std::invalid_argument("PartitionTree: unknown sample id");
    return samples_[it->second];
  }

  // Descends from the root by classifier prediction; total over the domain.
  std::size_t route(const DesignVector& x) const {
    std::size_t id = 0;
    while (!nodes_[id].is_leaf())
      id = nodes_[id].svm->predict(x) == Label::good ? *nodes_[id].good_child
                                                     : *nodes_[id].bad_child;
    return id;
  }

  // True iff every ancestor classifier routes x toward node_id.
  bool region_membership(std::size_t node_id, const DesignVector& x) const {
    if (node_id >= nodes_.size())
      throw std::invalid_argument("region_membership: unknown node id");
    std::size_t id = node_id;
    while (nodes_[id].parent) {
      const TreeNode& p = nodes_[*nodes_[id].parent];
      const Label want =
          nodes_[id].side == NodeSide::good ? Label::good : Label::bad;
      if (p.svm->predict(x) != want) return false;
      id = p.id;
    }
    return true;
  }

  // Cached node hypervolume; increments *hv_evaluations only when a fresh
  // computation happens.
  double ensure_node_hv(std::size_t id, std::size_t* hv_evaluations = nullptr) {
    TreeNode& nd = nodes_.at(id);
    if (!nd.hv) {
      nd.hv = compute_node_hv(nd);
      if (hv_evaluations) ++*hv_evaluations;
    }
    return *nd.hv;
  }

  // Appends routed samples to a node (backpropagation support): counts grow
  // and the cached hypervolume is recomputed eagerly.
  void absorb_samples(std::size_t node_id,
                      const std::vector<std::uint64_t>& ids) {
    TreeNode& nd = nodes_.at(node_id);
    nd.sample_ids.insert(nd.sample_ids.end(), ids.begin(), ids.end());
    nd.n = nd.sample_ids.size();
    nd.hv = compute_node_hv(nd);
  }

  void register_sample(const EvaluatedSample& s) {
    if (id_index_.count(s.id))
      throw std::invalid_argument("PartitionTree: duplicate sample id");
    id_index_[s.id] = samples_.size();
    samples_.push_back(s);
  }

  // Reassembles a tree from explicit parts (deserialization and test
  // fixtures). Node ids must equal their index, node 0 must be the root,
  // and parent/child links must be mutually consistent. Preset hv values
  // are kept as the cache.
  static PartitionTree from_parts(SearchDomain domain,
                                  std::vector<double> hv_ref, HvConfig hv_cfg,
                                  std::vector<TreeNode> nodes,
                                  std::vector<EvaluatedSample> samples) {
    if (nodes.empty())
      throw std::invalid_argument("from_parts: no nodes");
    PartitionTree tree(std::move(domain), std::move(hv_ref), hv_cfg);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const TreeNode& nd = nodes[i];
      if (nd.id != i)
        throw std::invalid_argument("from_parts: node id != index");
      if ((i == 0) != !nd.parent.has_value())
        throw std::invalid_argument("from_parts: exactly node 0 is the root");
      if (nd.is_leaf() != (!nd.good_child && !nd.bad_child))
        throw std::invalid_argument(
            "from_parts: classifier and children must be present together");
      if (!nd.is_leaf()) {
        for (std::size_t child : {*nd.good_child, *nd.bad_child})
          if (child >= nodes.size() || nodes[child].parent != i)
            throw std::invalid_argument("from_parts: broken child link");
        if (nodes[*nd.good_child].side != NodeSide::good ||
            nodes[*nd.bad_child].side != NodeSide::bad)
          throw std::invalid_argument("from_parts: child sides mismatch");
      }
    }
    for (const auto& s : samples) tree.register_sample(s);
    tree.nodes_ = std::move(nodes);
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
      const std::size_t id = stack.back();
      stack.pop_back();
      const TreeNode& nd = tree.nodes_[id];
      if (nd.is_leaf()) {
        tree.leaves_.push_back(id);
      } else {
        stack.push_back(*nd.bad_child);
        stack.push_back(*nd.good_child);
      }
    }
    return tree;
  }

  friend PartitionTree build_tree(const Archive& archive,
                                  const PartitionParams& params,
                                  const std::vector<double>& hv_ref,
                                  const HvConfig& hv_cfg);

 private:
  double compute_node_hv(const TreeNode& nd) const {
    std::vector<ObjectiveVector> points;
    points.reserve(nd.sample_ids.size());
    for (std::uint64_t sid : nd.sample_ids)
      points.push_back(samples_[id_index_.at(sid)].v);
    HvConfig cfg = hv_cfg_;
    cfg.mc_seed = mix_seed(hv_cfg_.mc_seed, nd.id);
    return hypervolume(points, ref_, cfg);
  }

  SearchDomain domain_;
  std::vector<double> ref_;
  HvConfig hv_cfg_;
  std::vector<TreeNode> nodes_;
  std::vector<std::size_t> leaves_;
  std::vector<EvaluatedSample> samples_;
  std::unordered_map<std::uint64_t, std::size_t> id_index_;
};

// Breadth-first construction over the archive's dedup view. A node stays a
// leaf when it is too small (n < 2 * min_leaf_samples), too deep
// (depth == max_depth), or the classifier cannot separate it.
inline PartitionTree build_tree(const Archive& archive,
                                const PartitionParams& params,
                                const std::vector<double>& hv_ref,
                                const HvConfig& hv_cfg = {}) {
  if (archive.empty())
    throw std::invalid_argument("build_tree: empty archive");
  if (params.max_depth < 1)
    throw std::invalid_argument("build_tree: max_depth < 1");
  if (params.min_leaf_samples < 2)
    throw std::invalid_argument("build_tree: min_leaf_samples < 2");
  if (hv_ref.size() != archive.num_objectives())
    throw std::invalid_argument("build_tree: reference dimension mismatch");

  PartitionTree tree(archive.domain(), hv_ref, hv_cfg);
  for (const auto& s : archive.dedup_samples()) tree.register_sample(s);

  TreeNode root;
  root.id = 0;
  root.side = NodeSide::root;
  root.depth = 0;
  for (const auto& s : tree.samples_) root.sample_ids.push_back(s.id);
  root.n = root.sample_ids.size();
  tree.nodes_.push_back(std::move(root));

  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    const std::size_t id = queue.front();
    queue.pop_front();
    TreeNode& nd = tree.nodes_[id];
    if (nd.depth >= params.max_depth) continue;
    if (nd.n < 2 * static_cast<std::size_t>(params.min_leaf_samples)) continue;

    std::vector<EvaluatedSample> node_samples;
    node_samples.reserve(nd.n);
    for (std::uint64_t sid : nd.sample_ids)
      node_samples.push_back(tree.sample_by_id(sid));
    auto split = split_node(node_samples, tree.domain_, params);
    if (!split) continue;

    const std::size_t good_id = tree.nodes_.size();
    const std::size_t bad_id = good_id + 1;
    TreeNode good, bad;
    good.id = good_id;
    good.parent = id;
    good.side = NodeSide::good;
    good.depth = nd.depth + 1;
    good.sample_ids = std::move(split->good_ids);
    good.n = good.sample_ids.size();
    bad.id = bad_id;
    bad.parent = id;
    bad.side = NodeSide::bad;
    bad.depth = nd.depth + 1;
    bad.sample_ids = std::move(split->bad_ids);
    bad.n = bad.sample_ids.size();

    TreeNode& nd2 = tree.nodes_[id];  // reference may dangle after push_back
    nd2.svm = std::move(split->svm);
    nd2.good_child = good_id;
    nd2.bad_child = bad_id;
    tree.nodes_.push_back(std::move(good));
    tree.nodes_.push_back(std::move(bad));
    queue.push_back(good_id);
    queue.push_back(bad_id);
  }

  // Leftmost-first leaf order: depth-first, good child before bad child.
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const std::size_t id = stack.back();
    stack.pop_back();
    const TreeNode& nd = tree.nodes_[id];
    if (nd.is_leaf()) {
      tree.leaves_.push_back(id);
    } else {
      stack.push_back(*nd.bad_child);   // popped after the good subtree
      stack.push_back(*nd.good_child);
    }
  }
  return tree;
}

// Serializes tree structure and per-node statistics; forces any missing
// node hypervolumes.
inline nlohmann::json tree_to_json(PartitionTree& tree) {
  auto side_name = [](NodeSide s) {
    switch (s) {
      case NodeSide::root: return "root";
      case NodeSide::good: return "good";
      default: return "bad";
    }
  };
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t id = 0; id < tree.size(); ++id) {
    const TreeNode& nd = tree.node(id);
    nlohmann::json j;
    j["id"] = nd.id;
    j["side"] = side_name(nd.side);
    j["depth"] = nd.depth;
    if (nd.parent)
      j["parent"] = *nd.parent;
    else
      j["parent"] = nullptr;
    j["n"] = nd.n;
    j["hv"] = tree.ensure_node_hv(id);
    j["leaf"] = nd.is_leaf();
    if (nd.svm) {
      j["support_vectors"] = nd.svm->support_x.size();
      j["good_child"] = *nd.good_child;
      j["bad_child"] = *nd.bad_child;
    } else {
      j["support_vectors"] = nullptr;
    }
    nodes.push_back(std::move(j));
  }
  return nlohmann::json{
      {"root", 0}, {"leaves", tree.leaves()}, {"nodes", std::move(nodes)}};
}

}  // namespace mopart

#endif  // MOPART_PARTITION_HPP
