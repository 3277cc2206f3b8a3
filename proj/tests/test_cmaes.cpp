#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "mopart/cmaes.hpp"
#include "mopart/core.hpp"
#include "mopart/partition.hpp"
#include "mopart/rng.hpp"

using namespace mopart;

namespace {

// Two clusters in [0,1]^2 with quality tied to the first cluster; gives
// build_tree a clean split so region-constrained asks have a real region.
Archive clustered_archive(std::uint64_t seed) {
  SearchDomain dom = SearchDomain::continuous_box({0.0, 0.0}, {1.0, 1.0});
  Archive arc(dom, 2);
  SplitMix64 rng(seed);
  for (int k = 0; k < 2; ++k) {
    const double cx = k == 0 ? 0.25 : 0.75;
    const double q = k == 0 ? 1.0 : 0.2;
    for (int i = 0; i < 40; ++i) {
      DesignVector x = {std::clamp(cx + 0.08 * rng.normal(), 0.0, 1.0),
                        std::clamp(cx + 0.08 * rng.normal(), 0.0, 1.0)};
      arc.add(x, {q + 0.01 * rng.normal(), 0.5 + 0.01 * rng.normal()});
    }
  }
  return arc;
}

PartitionParams quiet_params() {
  PartitionParams p;
  p.max_depth = 2;
  p.min_leaf_samples = 8;
  return p;
}

}  // namespace

TEST_CASE("cmaes_init derives the canonical strategy constants") {
  CmaesState st = cmaes_init({0.0, 0.0, 0.0, 0.0}, 0.5, 8);
  REQUIRE(st.lambda == 8);
  REQUIRE(st.mu == 4);
  REQUIRE(st.weights.size() == 4);
  // Frozen against an independent high-precision evaluation of the standard
  // (mu/mu_w, lambda) constant definitions at d=4, lambda=8.
  CHECK(st.weights[0] == Catch::Approx(0.52993018447877925385).epsilon(1e-14));
  CHECK(st.weights[3] == Catch::Approx(0.04149838694979217472).epsilon(1e-14));
  CHECK(st.mu_eff == Catch::Approx(2.60017882611317904626).epsilon(1e-14));
  CHECK(st.c_sigma == Catch::Approx(0.39656102677983807898).epsilon(1e-14));
  CHECK(st.d_sigma == Catch::Approx(1.39656102677983807898).epsilon(1e-14));
  CHECK(st.c_c == Catch::Approx(0.5).epsilon(1e-14));
  CHECK(st.c1 == Catch::Approx(0.06516742738228267672).epsilon(1e-14));
  CHECK(st.c_mu == Catch::Approx(0.05102399983259445061).epsilon(1e-14));
  CHECK(st.chi_n == Catch::Approx(1.88095238095238095238).epsilon(1e-14));

  double wsum = 0.0;
  for (int i = 0; i < st.mu; ++i) {
    wsum += st.weights[i];
    if (i > 0) CHECK(st.weights[i] <= st.weights[i - 1]);
    CHECK(st.weights[i] > 0.0);
  }
  CHECK(wsum == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(st.C.isApprox(Eigen::MatrixXd::Identity(4, 4)));
  CHECK(st.p_sigma.norm() == 0.0);
  CHECK(st.generation == 0);
}

TEST_CASE("default lambda follows 4 + floor(3 ln d)") {
  CHECK(cmaes_default_lambda(2) == 6);
  CHECK(cmaes_default_lambda(6) == 9);
  CHECK(cmaes_default_lambda(10) == 10);
  CmaesState st = cmaes_init({0.0, 0.0, 0.0, 0.0, 0.0, 0.0}, 0.3);
  CHECK(st.lambda == 9);
}

TEST_CASE("cmaes_init rejects degenerate arguments") {
  CHECK_THROWS_AS(cmaes_init({}, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(cmaes_init({0.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(cmaes_init({0.0}, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(cmaes_init({0.0, 0.0}, 0.3, 1), std::invalid_argument);
}

TEST_CASE("population held at the mean leaves the mean fixed and shrinks sigma") {
  CmaesState st = cmaes_init({0.2, -0.4, 0.9, 0.1}, 0.5, 8);
  const Eigen::VectorXd mean_before = st.mean;
  std::vector<std::pair<DesignVector, double>> pop(
      8, {{0.2, -0.4, 0.9, 0.1}, 3.0});
  cmaes_tell(st, pop);
  CHECK(st.mean.isApprox(mean_before, 1e-15));
  // With all steps zero the path stays at zero, so the step-size update is
  // exactly sigma * exp(-c_sigma / d_sigma); value frozen independently.
  CHECK(st.sigma ==
        Catch::Approx(0.5 * 0.75280022865982016189).epsilon(1e-13));
  CHECK(st.generation == 1);
}

TEST_CASE("cmaes_tell rejects a population of the wrong size") {
  CmaesState st = cmaes_init({0.0, 0.0}, 0.3, 6);
  std::vector<std::pair<DesignVector, double>> pop(5, {{0.0, 0.0}, 1.0});
  CHECK_THROWS_AS(cmaes_tell(st, pop), std::invalid_argument);
  pop.emplace_back(DesignVector{0.0}, 1.0);  // right count, wrong dimension
  CHECK_THROWS_AS(cmaes_tell(st, pop), std::invalid_argument);
}

TEST_CASE("ask/tell loop contracts a sphere objective onto its optimum") {
  const DesignVector target = {0.6, 0.3, 0.7};
  CmaesState st = cmaes_init({0.1, 0.9, 0.2}, 0.3, 10);
  SplitMix64 seeder(404);
  for (int gen = 0; gen < 120; ++gen) {
    SplitMix64 rng(seeder.next());
    std::vector<std::pair<DesignVector, double>> pop;
    for (int i = 0; i < st.lambda; ++i) {
      Eigen::VectorXd z(3);
      for (int k = 0; k < 3; ++k) z[k] = rng.normal();
      Eigen::VectorXd x = st.mean + st.sigma * (st.B * (st.D.asDiagonal() * z));
      double f = 0.0;
      for (int k = 0; k < 3; ++k)
        f += (x[k] - target[k]) * (x[k] - target[k]);
      pop.push_back({DesignVector(x.data(), x.data() + 3), f});
    }
    cmaes_tell(st, pop);
  }
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(st.mean[k] - target[k]) < 1e-3);
  CHECK(st.sigma < 0.05);
}

TEST_CASE("tell ranks by fitness ascending with index as the tiebreak") {
  CmaesState a = cmaes_init({0.0, 0.0}, 0.4, 4);
  CmaesState b = cmaes_init({0.0, 0.0}, 0.4, 4);
  // Two equal-fitness candidates in swapped slots: index order decides the
  // parent set, so these two populations must produce different means.
  std::vector<std::pair<DesignVector, double>> pa = {
      {{1.0, 0.0}, 1.0}, {{0.0, 1.0}, 1.0}, {{2.0, 2.0}, 9.0}, {{3.0, 3.0}, 9.0}};
  std::vector<std::pair<DesignVector, double>> pb = {
      {{0.0, 1.0}, 1.0}, {{1.0, 0.0}, 1.0}, {{2.0, 2.0}, 9.0}, {{3.0, 3.0}, 9.0}};
  cmaes_tell(a, pa);
  cmaes_tell(b, pb);
  CHECK(a.mean[0] != b.mean[0]);
  // mu=2 selects exactly the two fitness-1.0 points; swapping their slots
  // swaps which one carries the larger recombination weight.
  CHECK(a.mean[0] == Catch::Approx(b.mean[1]).epsilon(1e-14));
  CHECK(a.mean[1] == Catch::Approx(b.mean[0]).epsilon(1e-14));
}

TEST_CASE("tell is deterministic and keeps the covariance well conditioned") {
  auto run_once = [] {
    CmaesState st = cmaes_init({0.5, 0.5}, 0.3, 6);
    SplitMix64 rng(99);
    for (int gen = 0; gen < 5; ++gen) {
      std::vector<std::pair<DesignVector, double>> pop;
      for (int i = 0; i < 6; ++i) {
        DesignVector x = {st.mean[0] + st.sigma * rng.normal(),
                          st.mean[1] + st.sigma * rng.normal()};
        pop.push_back({x, x[0] * x[0] + x[1] * x[1]});
      }
      cmaes_tell(st, pop);
    }
    return st;
  };
  CmaesState s1 = run_once();
  CmaesState s2 = run_once();
  CHECK(s1.mean == s2.mean);
  CHECK(s1.sigma == s2.sigma);
  CHECK(s1.C == s2.C);
  CHECK(s1.p_sigma == s2.p_sigma);

  // Rank-deficient input: the whole population sits on one line. The
  // eigenvalue floor must keep the decomposition strictly positive.
  CmaesState st = cmaes_init({0.0, 0.0}, 0.5, 6);
  for (int gen = 0; gen < 30; ++gen) {
    std::vector<std::pair<DesignVector, double>> pop;
    for (int i = 0; i < 6; ++i) {
      double t = 0.1 * (i + 1);
      pop.push_back({{t, 0.0}, t});
    }
    cmaes_tell(st, pop);
  }
  CHECK(st.D.minCoeff() > 0.0);
  CHECK(st.D.minCoeff() * st.D.minCoeff() >= 0.9e-12);
  CHECK(st.C.allFinite());
}

TEST_CASE("cmaes_init_for_leaf anchors at the leaf centroid") {
  Archive arc = clustered_archive(7);
  PartitionTree tree = build_tree(arc, quiet_params(), {0.0, 0.0});
  REQUIRE(tree.leaves().size() >= 2);
  const std::size_t leaf = tree.leaves().front();
  CmaesState st = cmaes_init_for_leaf(tree, leaf);
  const TreeNode& nd = tree.node(leaf);
  DesignVector centroid(2, 0.0);
  for (std::uint64_t sid : nd.sample_ids) {
    centroid[0] += tree.sample_by_id(sid).x[0];
    centroid[1] += tree.sample_by_id(sid).x[1];
  }
  centroid[0] /= static_cast<double>(nd.sample_ids.size());
  centroid[1] /= static_cast<double>(nd.sample_ids.size());
  CHECK(st.mean[0] == Catch::Approx(centroid[0]).epsilon(1e-12));
  CHECK(st.mean[1] == Catch::Approx(centroid[1]).epsilon(1e-12));
  CHECK(st.sigma == Catch::Approx(0.3).epsilon(1e-12));  // unit widths
  CHECK(st.lambda == cmaes_default_lambda(2));
}

TEST_CASE("region-constrained ask keeps nearly all candidates in the region") {
  std::size_t kept_total = 0, member_total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Archive arc = clustered_archive(100 + seed);
    PartitionTree tree = build_tree(arc, quiet_params(), {0.0, 0.0});
    if (tree.leaves().size() < 2) continue;
    const std::size_t leaf = tree.leaves().front();
    CmaesState st = cmaes_init_for_leaf(tree, leaf, 8);
    CmaesAsk ask = cmaes_ask(st, tree, leaf, 8, 400, 555 + seed);
    REQUIRE(ask.candidates.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(domain_contains(tree.domain(), ask.candidates[i]));
      ++kept_total;
      if (tree.region_membership(leaf, ask.candidates[i])) ++member_total;
      if (!ask.penalized[i])
        CHECK(tree.region_membership(leaf, ask.candidates[i]));
    }
  }
  REQUIRE(kept_total >= 8 * 15);
  CHECK(member_total * 10 >= kept_total * 9);
}

TEST_CASE("ask is deterministic in the seed and state") {
  Archive arc = clustered_archive(3);
  PartitionTree tree = build_tree(arc, quiet_params(), {0.0, 0.0});
  const std::size_t leaf = tree.leaves().front();
  CmaesState st = cmaes_init_for_leaf(tree, leaf, 6);
  CmaesAsk a = cmaes_ask(st, tree, leaf, 6, 300, 42);
  CmaesAsk b = cmaes_ask(st, tree, leaf, 6, 300, 42);
  CHECK(a.candidates == b.candidates);
  CHECK(a.penalized == b.penalized);
  CmaesAsk c = cmaes_ask(st, tree, leaf, 6, 300, 43);
  CHECK(a.candidates != c.candidates);
}

TEST_CASE("ask with vanishing sigma collapses onto the mean") {
  Archive arc = clustered_archive(11);
  PartitionTree tree = build_tree(arc, quiet_params(), {0.0, 0.0});
  const std::size_t leaf = tree.leaves().front();
  CmaesState st = cmaes_init_for_leaf(tree, leaf, 4);
  st.sigma = 1e-14;
  CmaesAsk ask = cmaes_ask(st, tree, leaf, 4, 200, 7);
  for (const auto& x : ask.candidates) {
    CHECK(std::abs(x[0] - st.mean[0]) < 1e-9);
    CHECK(std::abs(x[1] - st.mean[1]) < 1e-9);
  }
}

TEST_CASE("ask on a categorical domain returns integer codes in range") {
  SearchDomain dom = SearchDomain::categorical({5, 5, 5});
  Archive arc(dom, 2);
  SplitMix64 rng(21);
  for (int i = 0; i < 60; ++i) {
    DesignVector x = uniform_in_domain(dom, rng);
    double q = (x[0] + x[1] + x[2]) / 12.0;
    arc.add(x, {q, 1.0 - q});
  }
  PartitionParams params;
  params.max_depth = 2;
  params.min_leaf_samples = 8;
  PartitionTree tree = build_tree(arc, params, {0.0, 0.0});
  const std::size_t leaf = tree.leaves().front();
  CmaesState st = cmaes_init_for_leaf(tree, leaf, 6);
  CmaesAsk ask = cmaes_ask(st, tree, leaf, 6, 300, 1234);
  for (const auto& x : ask.candidates) {
    REQUIRE(domain_contains(dom, x));
    for (double v : x) CHECK(v == std::round(v));
  }
}

TEST_CASE("ask honors an external rejection predicate") {
  Archive arc = clustered_archive(5);
  PartitionTree tree = build_tree(arc, quiet_params(), {0.0, 0.0});
  const std::size_t leaf = tree.leaves().front();
  CmaesState st = cmaes_init_for_leaf(tree, leaf, 4);
  CmaesAsk free = cmaes_ask(st, tree, leaf, 4, 400, 9);
  // Forbid the first unconstrained pick; the constrained ask must avoid it
  // for every slot it can satisfy within the cap.
  const DesignVector banned = free.candidates[0];
  auto reject = [&](const DesignVector& x) { return x == banned; };
  CmaesAsk constrained = cmaes_ask(st, tree, leaf, 4, 400, 9, reject);
  for (std::size_t i = 0; i < 4; ++i)
    if (!constrained.penalized[i]) CHECK(constrained.candidates[i] != banned);
}
