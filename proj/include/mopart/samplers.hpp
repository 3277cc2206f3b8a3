#ifndef MOPART_SAMPLERS_HPP
#define MOPART_SAMPLERS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mopart/cmaes.hpp"
#include "mopart/core.hpp"
#include "mopart/gp.hpp"
#include "mopart/hypervolume.hpp"
#include "mopart/pareto.hpp"
#include "mopart/partition.hpp"
#include "mopart/rng.hpp"
#include "mopart/svm.hpp"

namespace mopart {

enum class SamplerKind { random, cmaes, bo };

struct RegionSample {
  std::vector<DesignVector> candidates;
  bool fallback_used = false;  // cap exhausted; remainder drawn unconstrained
};

// Rejection sampling inside a leaf region: uniform domain draws are kept
// while they satisfy region_membership (and pass the optional reject
// predicate), under a shared total-draw cap. Once the cap is spent the
// remaining slots are filled with unconstrained uniform draws and the
// fallback flag is set.
inline RegionSample sample_random_region(
    const PartitionTree& tree, std::size_t leaf_id, std::size_t q,
    std::size_t cap, std::uint64_t rng_seed,
    const std::function<bool(const DesignVector&)>& reject = nullptr) {
  if (q < 1) throw std::invalid_argument("sample_random_region: q < 1");
  if (cap < q) throw std::invalid_argument("sample_random_region: cap < q");
  tree.node(leaf_id);  // validates the id
  SplitMix64 rng(rng_seed);
  RegionSample out;
  std::size_t draws = 0;
  while (out.candidates.size() < q && draws < cap) {
    DesignVector x = uniform_in_domain(tree.domain(), rng);
    ++draws;
    if (tree.region_membership(leaf_id, x) && !(reject && reject(x)))
      out.candidates.push_back(std::move(x));
  }
  while (out.candidates.size() < q) {
    out.fallback_used = true;
    out.candidates.push_back(uniform_in_domain(tree.domain(), rng));
  }
  return out;
}

// Dominance number of each candidate within archive ∪ candidates. Candidates
// must carry objective vectors; equal vectors do not dominate each other, so
// duplicates are harmless.
inline std::vector<std::uint64_t> compute_fitness_dominance(
    const std::vector<EvaluatedSample>& candidates, const Archive& archive) {
  const std::size_t m = archive.num_objectives();
  for (const auto& c : candidates)
    if (c.v.size() != m)
      throw std::invalid_argument(
          "compute_fitness_dominance: unevaluated candidate");
  std::vector<ObjectiveVector> combined;
  for (std::size_t i : archive.dedup_view())
    combined.push_back(archive.sample(i).v);
  const std::size_t base = combined.size();
  for (const auto& c : candidates) combined.push_back(c.v);
  const std::vector<std::uint64_t> counts = dominance_counts(combined);
  return {counts.begin() + static_cast<std::ptrdiff_t>(base), counts.end()};
}

struct BoResult {
  std::vector<DesignVector> candidates;
  std::vector<double> scores;  // EHVI at pick time; empty on GP fallback
  bool gp_fallback = false;    // GP fit failed; candidates drawn at random
  bool pool_fallback = false;  // candidate pool needed unconstrained fills
};

// Simplified batch expected-hypervolume-improvement sampler. Fits one GP
// per objective on the archive (inputs scaled to [0,1]), scores a
// region-constrained uniform pool by Monte-Carlo EHVI over hv_ref with
// common posterior draws, and picks q candidates greedily, fantasizing each
// pick at its posterior mean before re-scoring the remainder.
inline BoResult sample_bo_region(
    const Archive& archive, const PartitionTree& tree, std::size_t leaf_id,
    std::size_t q, std::size_t mc_draws, std::size_t candidate_pool,
    std::uint64_t rng_seed, const ObjectiveVector& hv_ref,
    const std::function<bool(const DesignVector&)>& reject = nullptr,
    const HvConfig& hv_cfg = {}, double gp_init_jitter = 1e-6) {
  if (q < 1) throw std::invalid_argument("sample_bo_region: q < 1");
  if (archive.size() < 4)
    throw std::invalid_argument("sample_bo_region: archive smaller than 4");
  if (mc_draws < 1) throw std::invalid_argument("sample_bo_region: mc_draws < 1");
  if (candidate_pool < q)
    throw std::invalid_argument("sample_bo_region: candidate_pool < q");
  const std::size_t m = archive.num_objectives();
  if (hv_ref.size() != m)
    throw std::invalid_argument("sample_bo_region: hv_ref dimension mismatch");

  const std::vector<EvaluatedSample> train = archive.dedup_samples();
  const FeatureScaler scaler = FeatureScaler::from_domain(archive.domain());

  BoResult out;
  std::vector<GpRegressor> gps;
  try {
    std::vector<DesignVector> xs;
    xs.reserve(train.size());
    for (const auto& s : train) xs.push_back(scaler.apply(s.x));
    for (std::size_t k = 0; k < m; ++k) {
      std::vector<double> ys(train.size());
      for (std::size_t i = 0; i < train.size(); ++i) ys[i] = train[i].v[k];
      gps.push_back(GpRegressor::fit(xs, ys, 50, 0.5, gp_init_jitter));
    }
  } catch (const GpFitError&) {
    RegionSample rs = sample_random_region(tree, leaf_id, q, 20 * q,
                                           mix_seed(rng_seed, 3), reject);
    out.candidates = std::move(rs.candidates);
    out.gp_fallback = true;
    out.pool_fallback = rs.fallback_used;
    return out;
  }

  RegionSample pool =
      sample_random_region(tree, leaf_id, candidate_pool,
                           20 * candidate_pool, mix_seed(rng_seed, 1), reject);
  out.pool_fallback = pool.fallback_used;

  // Posterior moments are pick-invariant; compute them once per candidate.
  std::vector<std::vector<double>> mu(pool.candidates.size()),
      sd(pool.candidates.size());
  for (std::size_t i = 0; i < pool.candidates.size(); ++i) {
    const DesignVector xs = scaler.apply(pool.candidates[i]);
    mu[i].resize(m);
    sd[i].resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      const auto p = gps[k].predict(xs);
      mu[i][k] = p.mean;
      sd[i][k] = std::sqrt(p.var);
    }
  }

  // Common random numbers: one z per (draw, objective), shared across the
  // pool so candidate comparisons are low-variance and deterministic.
  SplitMix64 zrng(mix_seed(rng_seed, 2));
  std::vector<std::vector<double>> z(mc_draws, std::vector<double>(m));
  for (std::size_t t = 0; t < mc_draws; ++t)
    for (std::size_t k = 0; k < m; ++k) z[t][k] = zrng.normal();

  std::vector<ObjectiveVector> front;
  for (std::size_t i : archive.dedup_view()) front.push_back(archive.sample(i).v);
  front = pareto_front(front);
  double base_hv = hypervolume(front, hv_ref, hv_cfg);

  std::vector<std::size_t> remaining(pool.candidates.size());
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<ObjectiveVector> scratch;
  auto ehvi = [&](std::size_t i) {
    double acc = 0.0;
    for (std::size_t t = 0; t < mc_draws; ++t) {
      scratch = front;
      ObjectiveVector y(m);
      for (std::size_t k = 0; k < m; ++k) y[k] = mu[i][k] + sd[i][k] * z[t][k];
      scratch.push_back(std::move(y));
      acc += std::max(0.0, hypervolume(scratch, hv_ref, hv_cfg) - base_hv);
    }
    return acc / static_cast<double>(mc_draws);
  };

  for (std::size_t pick = 0; pick < q; ++pick) {
    double best = -1.0;
    std::size_t best_pos = 0;
    for (std::size_t pos = 0; pos < remaining.size(); ++pos) {
      const double s = ehvi(remaining[pos]);
      if (s > best) {
        best = s;
        best_pos = pos;
      }
    }
    const std::size_t chosen = remaining[best_pos];
    out.candidates.push_back(pool.candidates[chosen]);
    out.scores.push_back(best);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_pos));
    // Fantasy update: commit the pick at its posterior mean.
    front.push_back(ObjectiveVector(mu[chosen].begin(), mu[chosen].end()));
    front = pareto_front(front);
    base_hv = hypervolume(front, hv_ref, hv_cfg);
  }
  return out;
}

}  // namespace mopart

#endif  // MOPART_SAMPLERS_HPP
