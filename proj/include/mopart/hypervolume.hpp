#ifndef MOPART_HYPERVOLUME_HPP
#define MOPART_HYPERVOLUME_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "mopart/pareto.hpp"
#include "mopart/rng.hpp"

namespace mopart {

struct HvConfig {
  std::size_t mc_samples = 200000;  // Monte-Carlo budget, minimum 1000
  std::uint64_t mc_seed = 0;        // Monte-Carlo stream seed
  std::size_t exact_max_m = 3;      // exact algorithms up to this many objectives
  unsigned workers = 1;             // threads for the Monte-Carlo estimator
};

namespace detail {

// Drops points that fail to exceed the reference in every component (they
// bound zero volume) and reduces to the nondominated subset.
inline std::vector<ObjectiveVector> hv_relevant_front(
    const std::vector<ObjectiveVector>& points, const std::vector<double>& ref) {
  std::vector<ObjectiveVector> kept;
  for (const auto& p : points) {
    if (p.size() != ref.size())
      throw std::invalid_argument("hypervolume: dimension mismatch");
    bool above = true;
    for (std::size_t i = 0; i < ref.size(); ++i)
      if (p[i] <= ref[i]) {
        above = false;
        break;
      }
    if (above) kept.push_back(p);
  }
  if (kept.empty()) return kept;
  auto front_idx = pareto_front_indices(kept);
  std::vector<ObjectiveVector> front;
  front.reserve(front_idx.size());
  for (std::size_t i : front_idx) front.push_back(kept[i]);
  // Identical vectors are mutually nondominated; keep one of each.
  std::sort(front.begin(), front.end());
  front.erase(std::unique(front.begin(), front.end()), front.end());
  return front;
}

}  // namespace detail

// Exact hypervolume for two maximized objectives. With the nondominated
// front sorted by x descending (y then ascends), the dominated region is a
// staircase: sum of (x_i - x_{i+1}) * (y_i - ref_y) with x beyond the last
// point closed at ref_x.
inline double hv_exact_2d(const std::vector<ObjectiveVector>& points,
                          const std::vector<double>& ref) {
  if (ref.size() != 2)
    throw std::invalid_argument("hv_exact_2d: reference must have 2 components");
  auto front = detail::hv_relevant_front(points, ref);
  if (front.empty()) return 0.0;
  std::sort(front.begin(), front.end(),
            [](const ObjectiveVector& a, const ObjectiveVector& b) {
              return a[0] > b[0];
            });
  double hv = 0.0;
  for (std::size_t i = 0; i < front.size(); ++i) {
    const double x_next = i + 1 < front.size() ? front[i + 1][0] : ref[0];
    hv += (front[i][0] - x_next) * (front[i][1] - ref[1]);
  }
  return hv;
}

// Exact hypervolume for three maximized objectives by dimension sweep:
// process points in z-descending order and accumulate, for each z slab, the
// 2D hypervolume of the (x, y) projections seen so far.
inline double hv_exact_3d(const std::vector<ObjectiveVector>& points,
                          const std::vector<double>& ref) {
  if (ref.size() != 3)
    throw std::invalid_argument("hv_exact_3d: reference must have 3 components");
  auto front = detail::hv_relevant_front(points, ref);
  if (front.empty()) return 0.0;
  std::sort(front.begin(), front.end(),
            [](const ObjectiveVector& a, const ObjectiveVector& b) {
              return a[2] > b[2];
            });
  const std::vector<double> ref_xy{ref[0], ref[1]};
  std::vector<ObjectiveVector> seen;
  double hv = 0.0;
  std::size_t i = 0;
  while (i < front.size()) {
    std::size_t j = i;  // group equal z so slabs have positive height
    while (j < front.size() && front[j][2] == front[i][2]) {
      seen.push_back({front[j][0], front[j][1]});
      ++j;
    }
    const double z_next = j < front.size() ? front[j][2] : ref[2];
    hv += hv_exact_2d(seen, ref_xy) * (front[i][2] - z_next);
    i = j;
  }
  return hv;
}

// Monte-Carlo estimate: fraction of the box [ref, componentwise max] that is
// dominated, times its volume. Each sample index derives its own generator
// from (seed, index), so the estimate depends only on seed and mc_samples,
// not on the worker count.
inline double hv_monte_carlo(const std::vector<ObjectiveVector>& points,
                             const std::vector<double>& ref,
                             std::size_t mc_samples, std::uint64_t seed,
                             unsigned workers = 1) {
  if (mc_samples < 1000)
    throw std::invalid_argument("hv_monte_carlo: mc_samples must be >= 1000");
  auto front = detail::hv_relevant_front(points, ref);
  if (front.empty()) return 0.0;
  const std::size_t m = ref.size();
  std::vector<double> upper(m);
  for (std::size_t i = 0; i < m; ++i) {
    upper[i] = ref[i];
    for (const auto& p : front) upper[i] = std::max(upper[i], p[i]);
    if (upper[i] <= ref[i]) return 0.0;
  }
  double box = 1.0;
  for (std::size_t i = 0; i < m; ++i) box *= upper[i] - ref[i];

  auto count_range = [&](std::size_t lo, std::size_t hi) {
    std::uint64_t hits = 0;
    std::vector<double> s(m);
    for (std::size_t k = lo; k < hi; ++k) {
      SplitMix64 rng(mix_seed(seed, k));
      for (std::size_t i = 0; i < m; ++i)
        s[i] = rng.uniform(ref[i], upper[i]);
      for (const auto& p : front) {
        bool covered = true;
        for (std::size_t i = 0; i < m; ++i)
          if (s[i] > p[i]) {
            covered = false;
            break;
          }
        if (covered) {
          ++hits;
          break;
        }
      }
    }
    return hits;
  };

  std::uint64_t hits = 0;
  const unsigned nw = std::max(1u, workers);
  if (nw == 1) {
    hits = count_range(0, mc_samples);
  } else {
    std::vector<std::uint64_t> partial(nw, 0);
    std::vector<std::thread> pool;
    const std::size_t chunk = (mc_samples + nw - 1) / nw;
    for (unsigned w = 0; w < nw; ++w) {
      const std::size_t lo = std::min<std::size_t>(w * chunk, mc_samples);
      const std::size_t hi = std::min<std::size_t>(lo + chunk, mc_samples);
      pool.emplace_back([&, w, lo, hi] { partial[w] = count_range(lo, hi); });
    }
    for (auto& t : pool) t.join();
    for (std::uint64_t h : partial) hits += h;
  }
  return box * static_cast<double>(hits) / static_cast<double>(mc_samples);
}

inline double hv_monte_carlo(const std::vector<ObjectiveVector>& points,
                             const std::vector<double>& ref,
                             const HvConfig& cfg) {
  return hv_monte_carlo(points, ref, cfg.mc_samples, cfg.mc_seed, cfg.workers);
}

// Dispatch: exact staircase and sweep up to cfg.exact_max_m objectives,
// Monte-Carlo beyond. cfg.mc_seed only affects the Monte-Carlo path.
inline double hypervolume(const std::vector<ObjectiveVector>& points,
                          const std::vector<double>& ref,
                          const HvConfig& cfg = {}) {
  const std::size_t m = ref.size();
  if (m < 2) throw std::invalid_argument("hypervolume: need >= 2 objectives");
  for (const auto& p : points)
    if (p.size() != m)
      throw std::invalid_argument("hypervolume: dimension mismatch");
  if (m == 2 && cfg.exact_max_m >= 2) return hv_exact_2d(points, ref);
  if (m == 3 && cfg.exact_max_m >= 3) return hv_exact_3d(points, ref);
  return hv_monte_carlo(points, ref, cfg.mc_samples, cfg.mc_seed, cfg.workers);
}

// Log hypervolume regret, ln(hv_max - hv_cur), floored at 1e-12 so exact
// convergence yields a finite value. hv_cur may exceed hv_max only by
// numerical noise (1e-9).
inline double log_hv_diff(double hv_max, double hv_cur) {
  if (hv_cur > hv_max + 1e-9)
    throw std::invalid_argument("log_hv_diff: hv_cur exceeds hv_max");
  return std::log(std::max(hv_max - hv_cur, 1e-12));
}

}  // namespace mopart

#endif  // MOPART_HYPERVOLUME_HPP
