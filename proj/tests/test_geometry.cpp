#include <cmath>
#include <random>

#include "doctest.h"
#include "fatswarm/error.hpp"
#include "fatswarm/geometry.hpp"
#include "oracles.hpp"

using namespace fatswarm;

namespace {

SwarmState state_of(std::initializer_list<Vec2> pts) {
  SwarmState s;
  s.positions = pts;
  return s;
}

SwarmConfig unbounded_cfg() {
  SwarmConfig c;
  c.r_scan = SwarmConfig::unbounded;
  return c;
}

// Dense sampling of the segment a-b against the open disk.
bool segment_hits_interior_sampled(Vec2 a, Vec2 b, const Disk& d) {
  for (int k = 0; k <= 20000; ++k) {
    const double t = k / 20000.0;
    const Vec2 p{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
    if (distance(p, d.center) < d.radius - 1e-12) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("shadow membership of single points") {
  const ShadowRegion sh = shadow_of({0, 0}, Disk{{5, 0}, 1});
  CHECK(sh.contains({10, 0}));
  CHECK_FALSE(sh.contains({0, 5}));

  CHECK_FALSE(segment_hits_interior_sampled({0, 0}, {4, 0}, Disk{{5, 0}, 1}));
  CHECK_FALSE(sh.contains({4, 0}));
  // Points inside the occluder are not part of its shadow.
  CHECK_FALSE(sh.contains({5.5, 0}));
}

TEST_CASE("shadow region agrees with the point oracle on random points") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  const Vec2 viewer{-3, 1};
  const Disk occ{{2, 2}, 1.5};
  const ShadowRegion sh = shadow_of(viewer, occ);
  int shadowed = 0;
  for (int k = 0; k < 20000; ++k) {
    const Vec2 p{u(rng), u(rng)};
    const bool expect = oracle::shadowed(viewer, occ, p);
    if (oracle::tangency_margin(viewer, occ, Disk{p, 1e-12}) < 1e-9) continue;
    CHECK(sh.contains(p) == expect);
    shadowed += expect ? 1 : 0;
  }
  CHECK(shadowed > 100);
}

TEST_CASE("shadow_of rejects a viewer inside the occluder") {
  try {
    (void)shadow_of({5.2, 0}, Disk{{5, 0}, 1});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ViewerInsideOccluder);
  }
}

TEST_CASE("occlusion verdicts of the reference triples match the sampling oracle") {
  const Vec2 v{0, 0};
  const Disk occ{{5, 0}, 1};
  struct Case {
    Disk target;
    OcclusionVerdict expected;
  };
  for (const Case& c : {Case{{{10, 0}, 1}, OcclusionVerdict::FullyOccluded},
                        Case{{{10, 6}, 1}, OcclusionVerdict::FullyVisible},
                        Case{{{10, 2}, 1}, OcclusionVerdict::PartiallyOccluded}}) {
    CHECK(oracle::sampled_verdict(v, occ, c.target) == c.expected);
    CHECK(occlusion_verdict(v, occ, c.target) == c.expected);
  }
}

TEST_CASE("occlusion_verdict input errors") {
  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code_of([] { (void)occlusion_verdict({5, 0}, Disk{{5, 0}, 1}, Disk{{10, 0}, 1}); }) ==
        ErrorCode::ViewerInsideDisk);
  CHECK(code_of([] { (void)occlusion_verdict({10, 0}, Disk{{5, 0}, 1}, Disk{{10, 0}, 1}); }) ==
        ErrorCode::ViewerInsideDisk);
  CHECK(code_of([] { (void)occlusion_verdict({0, 0}, Disk{{5, 0}, 1}, Disk{{6, 0}, 1}); }) ==
        ErrorCode::OverlappingDisks);
}

TEST_CASE("tangent target resolves to fully visible") {
  // Target whose edge lies exactly on the upper tangent ray of the occluder.
  const Vec2 v{0, 0};
  const Disk occ{{5, 0}, 1};
  const double half = std::asin(1.0 / 5.0);
  const double dist = 12.0;
  const Vec2 on_ray{dist * std::cos(half), dist * std::sin(half)};
  const Vec2 normal{-std::sin(half), std::cos(half)};
  const Disk target{on_ray + normal * 1.0, 1.0};
  CHECK(occlusion_verdict(v, occ, target) == OcclusionVerdict::FullyVisible);
  const Disk nudged{on_ray + normal * (1.0 - 1e-6), 1.0};
  CHECK(occlusion_verdict(v, occ, nudged) == OcclusionVerdict::PartiallyOccluded);
}

TEST_CASE("occlusion_verdict agrees with the sampling oracle on random triples") {
  std::mt19937_64 rng(2024);
  std::size_t agree = 0, total = 2000;
  for (std::size_t k = 0; k < total; ++k) {
    const auto t = oracle::random_triple(rng);
    const auto got = occlusion_verdict(t.viewer, t.occluder, t.target);
    const auto want = oracle::sampled_verdict(t.viewer, t.occluder, t.target);
    if (got == want) {
      ++agree;
    } else {
      CHECK(oracle::tangency_margin(t.viewer, t.occluder, t.target) < 1e-6);
    }
  }
  CHECK(static_cast<double>(agree) / total >= 0.999);
}

TEST_CASE("occlusion_verdict is invariant under rigid motions") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI), shift(-50.0, 50.0);
  for (int k = 0; k < 10000; ++k) {
    const auto t = oracle::random_triple(rng);
    const double a = angle(rng);
    const Vec2 d{shift(rng), shift(rng)};
    auto move = [&](Vec2 p) {
      return Vec2{std::cos(a) * p.x - std::sin(a) * p.y + d.x, std::sin(a) * p.x + std::cos(a) * p.y + d.y};
    };
    const auto before = occlusion_verdict(t.viewer, t.occluder, t.target);
    const auto after = occlusion_verdict(move(t.viewer), Disk{move(t.occluder.center), t.occluder.radius},
                                         Disk{move(t.target.center), t.target.radius});
    if (before != after) CHECK(oracle::tangency_margin(t.viewer, t.occluder, t.target) < 1e-6);
  }
}

TEST_CASE("mutual visibility examples") {
  const SwarmConfig cfg = unbounded_cfg();
  CHECK(mutually_visible(state_of({{0, 0}, {3, 4}}), 0, 1, cfg));

  const SwarmState line = state_of({{0, 0}, {5, 0}, {10, 0}});
  CHECK_FALSE(oracle::sampled_mutually_visible(line, 0, 2, cfg.r_bot));
  CHECK_FALSE(mutually_visible(line, 0, 2, cfg));
  CHECK(mutually_visible(line, 0, 1, cfg));

  const SwarmState tri = state_of({{0, 0}, {10, 0}, {5, 10 * std::sqrt(3.0) / 2}});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j) continue;
      CHECK(oracle::sampled_mutually_visible(tri, i, j, cfg.r_bot));
      CHECK(mutually_visible(tri, i, j, cfg));
    }

  CHECK_THROWS_AS(mutually_visible(tri, 0, 3, cfg), Error);
}

TEST_CASE("robots outside the scan radius still occlude") {
  SwarmConfig cfg;
  cfg.r_scan = 6.0;
  // Robot 1 sits between 0 and 2, farther than r_scan from both of them.
  const SwarmState s = state_of({{-8, 0}, {0, 0}, {8, 0}});
  CHECK_FALSE(mutually_visible(s, 0, 2, cfg));
}

TEST_CASE("census examples") {
  const SwarmConfig cfg = unbounded_cfg();
  auto one = visibility_census(state_of({{0, 0}}), cfg);
  CHECK(one.g_all == std::vector<std::size_t>{0});
  CHECK(one.g_vis == std::vector<std::size_t>{0});
  CHECK(one.g_occ == std::vector<std::size_t>{0});

  SwarmConfig near;
  auto two = visibility_census(state_of({{0, 0}, {3, 0}}), near);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(two.g_all[i] == 1);
    CHECK(two.g_vis[i] == 1);
    CHECK(two.g_occ[i] == 0);
  }

  auto line = visibility_census(state_of({{0, 0}, {5, 0}, {10, 0}}), cfg);
  CHECK(line.g_all == std::vector<std::size_t>{2, 2, 2});
  CHECK(line.g_vis == std::vector<std::size_t>{1, 2, 1});
  CHECK(line.g_occ == std::vector<std::size_t>{1, 0, 1});
}

TEST_CASE("a robot exactly at the scan radius is a neighbor") {
  SwarmConfig cfg;
  cfg.r_scan = 6.0;
  auto c = visibility_census(state_of({{0, 0}, {6, 0}}), cfg);
  CHECK(c.g_all[0] == 1);
  auto far = visibility_census(state_of({{0, 0}, {6.000001, 0}}), cfg);
  CHECK(far.g_all[0] == 0);
}

TEST_CASE("census properties on random states") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> count(1, 12);
  SwarmConfig cfg;
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = count(rng);
    const SwarmState s = oracle::random_state(rng, cfg, n);
    const auto c = visibility_census(s, cfg);
    REQUIRE(c.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(c.g_all[i] == c.g_vis[i] + c.g_occ[i]);
      CHECK(c.g_all[i] <= n - 1);
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) CHECK(mutually_visible(s, i, j, cfg) == mutually_visible(s, j, i, cfg));
    }
    // Removing robot k only loses k itself from other robots' visible counts.
    for (std::size_t rm = 0; rm < n; ++rm) {
      SwarmState less = s;
      less.positions.erase(less.positions.begin() + static_cast<std::ptrdiff_t>(rm));
      const auto c2 = visibility_census(less, cfg);
      for (std::size_t i = 0, i2 = 0; i < n; ++i) {
        if (i == rm) continue;
        const bool saw_rm = distance(s.positions[i], s.positions[rm]) <= cfg.r_scan && sees_fully(s, i, rm, cfg.r_bot);
        CHECK(c2.g_vis[i2] + (saw_rm ? 1 : 0) >= c.g_vis[i]);
        ++i2;
      }
    }
  }
}

TEST_CASE("collision pairs") {
  SwarmConfig cfg;
  CHECK(collision_pairs(state_of({{0, 0}, {2, 0}}), cfg).empty());
  const auto hit = collision_pairs(state_of({{0, 0}, {1, 0}}), cfg);
  REQUIRE(hit.size() == 1);
  CHECK(hit[0] == std::pair<std::size_t, std::size_t>{0, 1});
  CHECK(collision_pairs(state_of({{0, 0}, {3, 0}, {0, 3}, {3, 3}}), cfg).empty());
  CHECK(has_collision(state_of({{0, 0}, {5, 0}, {5.5, 0.5}}), cfg));
}
