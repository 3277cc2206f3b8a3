#include <catch2/catch_amalgamated.hpp>

#include "mopart/core.hpp"

using namespace mopart;

TEST_CASE("continuous box validates bounds") {
  REQUIRE_THROWS_AS(SearchDomain::continuous_box({0.0, 1.0}, {1.0, 1.0}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(SearchDomain::continuous_box({0.0}, {1.0, 2.0}),
                    std::invalid_argument);
  auto d = SearchDomain::continuous_box({0.0, -1.0}, {1.0, 2.0});
  REQUIRE(d.dimension() == 2);
  REQUIRE(d.kind() == DomainKind::continuous_box);
}

TEST_CASE("categorical domain validates cardinalities") {
  REQUIRE_THROWS_AS(SearchDomain::categorical({5, 1}), std::invalid_argument);
  REQUIRE_THROWS_AS(SearchDomain::categorical({}), std::invalid_argument);
  auto d = SearchDomain::categorical({5, 5, 5, 5, 5, 5});
  REQUIRE(d.dimension() == 6);
  REQUIRE(d.relaxed_upper(0) == 4.0);
}

TEST_CASE("domain membership for boxes is inclusive") {
  auto d = SearchDomain::continuous_box({0.0, 0.0}, {1.0, 1.0});
  REQUIRE(domain_contains(d, {0.5, 0.5}));
  REQUIRE(domain_contains(d, {0.0, 1.0}));
  REQUIRE_FALSE(domain_contains(d, {1.0000001, 0.5}));
  REQUIRE_THROWS_AS(domain_contains(d, {0.5}), std::invalid_argument);
}

TEST_CASE("domain membership for categorical vectors requires integer codes") {
  auto d = SearchDomain::categorical({5, 5, 5, 5, 5, 5});
  REQUIRE(domain_contains(d, {0, 4, 2, 1, 3, 0}));
  REQUIRE_FALSE(domain_contains(d, {0, 5, 0, 0, 0, 0}));
  REQUIRE_FALSE(domain_contains(d, {0, 1.5, 0, 0, 0, 0}));
  REQUIRE_FALSE(domain_contains(d, {-1, 0, 0, 0, 0, 0}));
}

TEST_CASE("snap clamps and rounds to the nearest valid point") {
  auto box = SearchDomain::continuous_box({0.0, 0.0}, {1.0, 1.0});
  REQUIRE(box.snap({1.5, -0.5}) == DesignVector{1.0, 0.0});
  auto cat = SearchDomain::categorical({5, 5});
  REQUIRE(cat.snap({3.6, 9.0}) == DesignVector{4.0, 4.0});
  REQUIRE(cat.contains(cat.snap({2.49, -3.0})));
}

TEST_CASE("uniform domain draws stay inside and are seed deterministic") {
  auto box = SearchDomain::continuous_box({-2.0, 3.0}, {-1.0, 7.0});
  auto cat = SearchDomain::categorical({3, 7, 2});
  SplitMix64 a(42), b(42);
  for (int i = 0; i < 200; ++i) {
    auto x = uniform_in_domain(box, a);
    REQUIRE(domain_contains(box, x));
    REQUIRE(x == uniform_in_domain(box, b));
  }
  SplitMix64 c(7);
  for (int i = 0; i < 200; ++i)
    REQUIRE(domain_contains(cat, uniform_in_domain(cat, c)));
}

TEST_CASE("archive preserves order, assigns increasing ids, validates input") {
  auto d = SearchDomain::continuous_box({0.0, 0.0}, {1.0, 1.0});
  Archive a(d, 2);
  auto id0 = a.add({0.1, 0.2}, {1.0, 2.0});
  auto id1 = a.add({0.3, 0.4}, {2.0, 1.0});
  REQUIRE(id0 < id1);
  REQUIRE(a.size() == 2);
  REQUIRE(a.sample(0).x == DesignVector{0.1, 0.2});
  REQUIRE_THROWS_AS(a.add({2.0, 0.0}, {0.0, 0.0}), std::invalid_argument);
  REQUIRE_THROWS_AS(a.add({0.5, 0.5}, {0.0}), std::invalid_argument);
  REQUIRE_THROWS_AS(a.add({0.5, 0.5}, {0.0, std::nan("")}),
                    std::invalid_argument);
}

TEST_CASE("archive keeps duplicates but exposes a dedup view") {
  auto d = SearchDomain::continuous_box({0.0, 0.0}, {1.0, 1.0});
  Archive a(d, 2);
  a.add({0.1, 0.2}, {1.0, 2.0});
  a.add({0.3, 0.4}, {2.0, 1.0});
  a.add({0.1, 0.2}, {1.0, 2.0});  // duplicate design
  REQUIRE(a.size() == 3);
  REQUIRE(a.duplicate_count() == 1);
  REQUIRE(a.is_duplicate_design({0.1, 0.2}));
  auto view = a.dedup_view();
  REQUIRE(view == std::vector<std::size_t>{0, 1});
}

TEST_CASE("normalization maps endpoints per direction") {
  NormalizationSpec spec({
      ObjectiveSpec{"accuracy", Direction::maximize, 0.0, 1.0, 0.0, 1.0},
      ObjectiveSpec{"flops", Direction::minimize, 10.0, 90.0, -1.0, 0.0},
  });
  auto v = spec.normalize({0.95, 90.0});
  REQUIRE(v[0] == Catch::Approx(0.95).epsilon(1e-15));
  REQUIRE(v[1] == Catch::Approx(-1.0).epsilon(1e-15));  // worst cost
  v = spec.normalize({0.5, 10.0});
  REQUIRE(v[1] == Catch::Approx(0.0).epsilon(1e-15));  // best cost
}

TEST_CASE("normalization clamps out-of-range raw values and flags it") {
  NormalizationSpec spec(
      {ObjectiveSpec{"q", Direction::maximize, 0.0, 1.0, 0.0, 1.0},
       ObjectiveSpec{"c", Direction::minimize, 0.0, 1.0, -1.0, 0.0}});
  bool clamped = false;
  auto v = spec.normalize({1.5, 0.5}, &clamped);
  REQUIRE(clamped);
  REQUIRE(v[0] == 1.0);
  clamped = false;
  spec.normalize({0.5, 0.5}, &clamped);
  REQUIRE_FALSE(clamped);
  REQUIRE_THROWS_AS(spec.normalize({0.5}), std::invalid_argument);
}

TEST_CASE("minimize objectives are order reversing after normalization") {
  NormalizationSpec spec(
      {ObjectiveSpec{"c", Direction::minimize, -3.0, 11.0, -1.0, 0.0},
       ObjectiveSpec{"q", Direction::maximize, 0.0, 2.0, 0.0, 1.0}});
  double prev = 1.0;
  for (double raw = -3.0; raw <= 11.0; raw += 0.7) {
    const double cur = spec.normalize({raw, 1.0})[0];
    REQUIRE(cur < prev);
    prev = cur;
  }
}

TEST_CASE("normalize then denormalize recovers raw values") {
  NormalizationSpec spec(
      {ObjectiveSpec{"a", Direction::maximize, -5.0, 17.0, 0.0, 1.0},
       ObjectiveSpec{"b", Direction::minimize, 0.25, 0.75, -1.0, 0.0},
       ObjectiveSpec{"c", Direction::minimize, 100.0, 1e6, -2.0, 3.0}});
  SplitMix64 rng(9);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> raw{rng.uniform(-5.0, 17.0), rng.uniform(0.25, 0.75),
                            rng.uniform(100.0, 1e6)};
    auto back = spec.denormalize(spec.normalize(raw));
    for (std::size_t k = 0; k < raw.size(); ++k)
      REQUIRE(back[k] == Catch::Approx(raw[k]).epsilon(1e-12));
  }
}

TEST_CASE("normalization spec validates ranges") {
  REQUIRE_THROWS_AS(
      NormalizationSpec(
          {ObjectiveSpec{"x", Direction::maximize, 1.0, 1.0, 0.0, 1.0}}),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      NormalizationSpec(
          {ObjectiveSpec{"x", Direction::maximize, 0.0, 1.0, 1.0, 1.0}}),
      std::invalid_argument);
}

TEST_CASE("reference floor is the componentwise target low end") {
  NormalizationSpec spec(
      {ObjectiveSpec{"q", Direction::maximize, 0.0, 1.0, 0.0, 1.0},
       ObjectiveSpec{"c", Direction::minimize, 0.0, 1.0, -1.0, 0.0}});
  REQUIRE(spec.reference_floor() == std::vector<double>{0.0, -1.0});
}
