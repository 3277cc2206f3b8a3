#ifndef MOPART_PARETO_HPP
#define MOPART_PARETO_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mopart/core.hpp"

namespace mopart {

// Strict Pareto dominance under maximization: a >= b componentwise and
// a > b in at least one component. Equal vectors do not dominate.
inline bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("dominates: dimension mismatch");
  bool strict = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return false;
    if (a[i] > b[i]) strict = true;
  }
  return strict;
}

// maxima_set uses the O(n log n) sweep for two objectives and falls back to
// brute force for three or more.
enum class DominanceMethod { maxima_set, brute_force };

namespace detail {

// Fenwick tree over suffix counts: add at a rank, query how many stored
// ranks are strictly greater than a given rank.
class SuffixBit {
 public:
  explicit SuffixBit(std::size_t n) : tree_(n + 1, 0), n_(n) {}

  void add(std::size_t rank) {  // rank in [0, n)
    for (std::size_t i = rank + 1; i <= n_; i += i & (~i + 1)) ++tree_[i];
    ++total_;
  }

  // Count of stored ranks <= rank.
  std::uint64_t prefix(std::size_t rank) const {
    std::uint64_t s = 0;
    for (std::size_t i = rank + 1; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

  std::uint64_t greater_than(std::size_t rank) const {
    return total_ - prefix(rank);
  }

  std::uint64_t total() const { return total_; }

 private:
  std::vector<std::uint64_t> tree_;
  std::size_t n_;
  std::uint64_t total_ = 0;
};

inline std::vector<std::uint64_t> dominance_counts_brute(
    const std::vector<ObjectiveVector>& points) {
  const std::size_t n = points.size();
  std::vector<std::uint64_t> counts(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && dominates(points[j], points[i])) ++counts[i];
  return counts;
}

// Two-objective dominator counting in O(n log n). A point p is dominated by
// q iff (q.x > p.x and q.y >= p.y) or (q.x == p.x and q.y > p.y). Sweep in
// x-descending order, one equal-x group at a time: a Fenwick tree over
// compressed y ranks counts the first case against strictly earlier groups,
// and a y-descending scan inside the group counts the second.
inline std::vector<std::uint64_t> dominance_counts_maxima2(
    const std::vector<ObjectiveVector>& points) {
  const std::size_t n = points.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a][0] != points[b][0]) return points[a][0] > points[b][0];
    return points[a][1] > points[b][1];
  });

  // Compress y to ranks.
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = points[i][1];
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  auto rank_of = [&](double y) {
    return static_cast<std::size_t>(
        std::lower_bound(ys.begin(), ys.end(), y) - ys.begin());
  };

  std::vector<std::uint64_t> counts(n, 0);
  SuffixBit bit(ys.size());

  std::size_t i = 0;
  while (i < n) {
    // Group of equal x.
    std::size_t j = i;
    while (j < n && points[order[j]][0] == points[order[i]][0]) ++j;

    // Counts from strictly-larger x: q.y >= p.y among already-inserted
    // points (all have q.x > p.x).
    for (std::size_t k = i; k < j; ++k) {
      const std::size_t p = order[k];
      const std::size_t r = rank_of(points[p][1]);
      // stored ranks >= r  ==  total - (ranks < r)
      counts[p] += r == 0 ? bit.total() : bit.greater_than(r - 1);
    }

    // Counts within the equal-x group: q.y > p.y. The group is sorted by
    // y desc; points with identical y tie and contribute nothing.
    std::size_t k = i;
    while (k < j) {
      std::size_t e = k;
      while (e < j && points[order[e]][1] == points[order[k]][1]) ++e;
      for (std::size_t t = k; t < e; ++t)
        counts[order[t]] += static_cast<std::uint64_t>(k - i);
      k = e;
    }

    for (std::size_t k2 = i; k2 < j; ++k2)
      bit.add(rank_of(points[order[k2]][1]));
    i = j;
  }
  return counts;
}

}  // namespace detail

// For each point, the number of other points that strictly dominate it.
inline std::vector<std::uint64_t> dominance_counts(
    const std::vector<ObjectiveVector>& points,
    DominanceMethod method = DominanceMethod::maxima_set) {
  if (points.empty()) return {};
  const std::size_t m = points.front().size();
  if (m < 2)
    throw std::invalid_argument("dominance_counts: need >= 2 objectives");
  for (const auto& p : points)
    if (p.size() != m)
      throw std::invalid_argument("dominance_counts: ragged objective vectors");
  const bool sweep = m == 2 && method == DominanceMethod::maxima_set;
  return sweep ? detail::dominance_counts_maxima2(points)
               : detail::dominance_counts_brute(points);
}

// Indices of nondominated points, in input order. Duplicates of a
// nondominated vector are all nondominated (equality does not dominate).
inline std::vector<std::size_t> pareto_front_indices(
    const std::vector<ObjectiveVector>& points,
    DominanceMethod method = DominanceMethod::maxima_set) {
  auto counts = dominance_counts(points, method);
  std::vector<std::size_t> front;
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] == 0) front.push_back(i);
  return front;
}

inline std::vector<ObjectiveVector> pareto_front(
    const std::vector<ObjectiveVector>& points,
    DominanceMethod method = DominanceMethod::maxima_set) {
  std::vector<ObjectiveVector> out;
  for (std::size_t i : pareto_front_indices(points, method))
    out.push_back(points[i]);
  return out;
}

// Dominance numbers over an archive's dedup view: counts[i] is the number of
// unique samples that strictly dominate dedup sample i.
struct DominanceReport {
  std::vector<std::uint64_t> counts;      // aligned with dedup-view order
  std::vector<std::uint64_t> front_ids;   // ids of samples with count 0
};

inline DominanceReport dominance_numbers(
    const Archive& archive,
    DominanceMethod method = DominanceMethod::maxima_set) {
  if (archive.empty())
    throw std::invalid_argument("dominance_numbers: empty archive");
  const auto view = archive.dedup_view();
  std::vector<ObjectiveVector> points;
  points.reserve(view.size());
  for (std::size_t i : view) points.push_back(archive.sample(i).v);
  DominanceReport rep;
  rep.counts = dominance_counts(points, method);
  for (std::size_t k = 0; k < view.size(); ++k)
    if (rep.counts[k] == 0)
      rep.front_ids.push_back(archive.sample(view[k]).id);
  std::sort(rep.front_ids.begin(), rep.front_ids.end());
  return rep;
}

// Nondominated samples of the dedup view, ordered by id.
inline std::vector<EvaluatedSample> pareto_front(
    const Archive& archive,
    DominanceMethod method = DominanceMethod::maxima_set) {
  if (archive.empty())
    throw std::invalid_argument("pareto_front: empty archive");
  const auto view = archive.dedup_view();
  std::vector<ObjectiveVector> points;
  points.reserve(view.size());
  for (std::size_t i : view) points.push_back(archive.sample(i).v);
  const auto counts = dominance_counts(points, method);
  std::vector<EvaluatedSample> front;
  for (std::size_t k = 0; k < view.size(); ++k)
    if (counts[k] == 0) front.push_back(archive.sample(view[k]));
  std::sort(front.begin(), front.end(),
            [](const EvaluatedSample& a, const EvaluatedSample& b) {
              return a.id < b.id;
            });
  return front;
}

}  // namespace mopart

#endif  // MOPART_PARETO_HPP
