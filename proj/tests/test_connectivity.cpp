#include <doctest.h>

#include <cmath>
#include <numbers>

#include "boolperc/connectivity.hpp"
#include "boolperc/io.hpp"
#include "oracles.hpp"

using namespace boolperc;

namespace {

Ball ball2(double x, double y, double R) {
    Vec c;
    c[0] = x;
    c[1] = y;
    return Ball{c, R, kCoordNone};
}

BallConfig config_of(std::vector<Ball> balls, double window, int d = 2) {
    BallConfig cfg;
    cfg.model = ModelSpec(d, 0.1, RadiusLaw::exp_tail(1.0));
    cfg.window_radius = window;
    cfg.n_max = 1 << 20;
    cfg.balls = std::move(balls);
    return cfg;
}

}  // namespace

TEST_CASE("empty configuration") {
    const BallConfig cfg = config_of({}, 5.0);
    const ClusterIndex index(cfg);
    CHECK(index.component_count() == 0);
    CHECK_FALSE(index.connected_origin_to_sphere(3.0));
    CHECK_FALSE(index.connectivity_radius().has_value());
}

TEST_CASE("two unit balls merge exactly at distance <= 2") {
    const ClusterIndex close(config_of({ball2(0, 0, 1), ball2(1.9, 0, 1)}, 5.0));
    CHECK(close.component_count() == 1);
    const ClusterIndex apart(config_of({ball2(0, 0, 1), ball2(2.1, 0, 1)}, 5.0));
    CHECK(apart.component_count() == 2);
    const ClusterIndex touching(config_of({ball2(0, 0, 1), ball2(2.0, 0, 1)}, 5.0));
    CHECK(touching.component_count() == 1);  // closed predicate
}

TEST_CASE("origin-to-sphere reach") {
    const ClusterIndex one(config_of({ball2(0, 0, 5)}, 6.0));
    CHECK(one.connected_origin_to_sphere(4.0));
    CHECK_FALSE(one.connected_origin_to_sphere(6.0));
    REQUIRE(one.connectivity_radius().has_value());
    CHECK(*one.connectivity_radius() == 5.0);

    // chain 0 -> (0,1) -> (1.5,1) -> (3,1): reach 4
    const ClusterIndex chain(
        config_of({ball2(0, 0, 1), ball2(1.5, 0, 1), ball2(3, 0, 1)}, 5.0));
    CHECK(chain.connected_origin_to_sphere(3.5));
    CHECK_FALSE(chain.connected_origin_to_sphere(4.5));
    CHECK(*chain.connectivity_radius() == 4.0);

    // query beyond the window is an error, not a silent bias
    CHECK_THROWS_AS(chain.connected_origin_to_sphere(6.0), infeasible_error);
}

TEST_CASE("ball-to-sphere crossing with boundary touches") {
    const double inner = 2.0, outer = 6.0;
    // one ball touching both: center (inner+outer)/2, radius (outer-inner)/2
    const ClusterIndex touch(config_of({ball2(4.0, 0, 2.0)}, 6.0));
    CHECK(touch.connected_ball_to_sphere(inner, outer));
    const ClusterIndex miss(config_of({ball2(4.0, 0, 1.9)}, 6.0));
    CHECK_FALSE(miss.connected_ball_to_sphere(inner, outer));
    CHECK_THROWS_AS(touch.connected_ball_to_sphere(3.0, 2.0), infeasible_error);
}

TEST_CASE("partition equals the n^2 brute force across 100 seeded configs") {
    const ModelSpec m(2, 0.55, RadiusLaw::power_law_c1(1.0, 2));
    const SamplingPlan plan = make_plan(m, 9.0);
    for (uint64_t s = 0; s < 100; ++s) {
        const BallConfig cfg = sample_config(plan, derive_key(20240, s));
        REQUIRE(cfg.balls.size() <= 500);
        const ClusterIndex fast(cfg);
        const oracle::BruteClusters brute(cfg.balls, 2);
        // on mismatch, dump the partition for inspection
        INFO(components_debug_json(fast, cfg).dump());
        CHECK(fast.component_count() == brute.component_count());
        for (size_t i = 0; i < cfg.balls.size(); ++i) {
            for (size_t j = i + 1; j < cfg.balls.size(); ++j) {
                CHECK((fast.component_of(i) == fast.component_of(j)) == brute.same(i, j));
            }
        }
    }
}

TEST_CASE("partition equals brute force in d = 3") {
    const ModelSpec m(3, 0.12, RadiusLaw::exp_tail(0.7));
    const SamplingPlan plan = make_plan(m, 5.0);
    for (uint64_t s = 0; s < 20; ++s) {
        const BallConfig cfg = sample_config(plan, derive_key(555, s));
        const ClusterIndex fast(cfg);
        const oracle::BruteClusters brute(cfg.balls, 3);
        CHECK(fast.component_count() == brute.component_count());
    }
}

TEST_CASE("adding balls never disconnects (coupled monotonicity)") {
    const ModelSpec m(2, 0.35, RadiusLaw::dirac(1.0));
    for (uint64_t s = 0; s < 40; ++s) {
        const CoupledConfigs pair = sample_config_coupled(m, 0.25, 0.45, 8.0, s);
        const auto rad_lo = ClusterIndex(pair.lo).connectivity_radius();
        const auto rad_hi = ClusterIndex(pair.hi).connectivity_radius();
        if (rad_lo) {
            REQUIRE(rad_hi.has_value());
            CHECK(*rad_hi >= *rad_lo);
        }
    }
}

TEST_CASE("connectivity radius equals the fine grid scan of the sphere query") {
    const ModelSpec m(2, 0.4, RadiusLaw::exp_tail(0.8));
    const SamplingPlan plan = make_plan(m, 6.0);
    for (uint64_t s = 0; s < 25; ++s) {
        const BallConfig cfg = sample_config(plan, derive_key(31, s));
        const ClusterIndex index(cfg);
        const auto rad = index.connectivity_radius();
        for (double q = 0.25; q <= 6.0; q += 0.25) {
            CHECK(index.connected_origin_to_sphere(q) == (rad.has_value() && *rad >= q));
        }
    }
}

TEST_CASE("restricted connectivity: a chain broken by the region") {
    // three balls chain from B_1 to the sphere of radius 6; the middle one
    // pokes outside Z = B_5, so the restricted query fails
    const std::vector<Ball> chain = {ball2(1.0, 0, 1.0), ball2(3.0, 1.5, 1.7),
                                     ball2(5.0, 0, 1.3)};
    const BallConfig cfg = config_of(chain, 6.2);
    CHECK(ClusterIndex(cfg).connected_ball_to_sphere(1.0, 6.0));
    // the middle ball has ||z|| + R = sqrt(9 + 2.25) + 1.7 > 5 and is dropped
    CHECK_FALSE(connected_restricted(cfg, Vec{}, 5.0, 1.0, 6.0));
    // a region containing everything matches the unrestricted query
    CHECK(connected_restricted(cfg, Vec{}, 20.0, 1.0, 6.0));
    // restricted implies unrestricted on random configs
    const ModelSpec m(2, 0.5, RadiusLaw::exp_tail(0.9));
    const SamplingPlan plan = make_plan(m, 6.0);
    for (uint64_t s = 0; s < 30; ++s) {
        const BallConfig rc = sample_config(plan, derive_key(77, s));
        if (connected_restricted(rc, Vec{}, 5.0, 2.0, 4.0))
            CHECK(ClusterIndex(rc).connected_ball_to_sphere(2.0, 4.0));
    }
}

TEST_CASE("crossing query agrees with a raster flood-fill oracle") {
    // The raster cannot resolve tangencies, so a disagreement is acceptable
    // only when some pair or sphere contact sits within a few pixels of
    // tangency; everything else must match exactly.
    const ModelSpec m(2, 0.45, RadiusLaw::exp_tail(0.8));
    const SamplingPlan plan = make_plan(m, 6.0);
    const double h = 0.01;
    int agreements = 0, unexcused = 0;
    for (uint64_t s = 0; s < 50; ++s) {
        const BallConfig cfg = sample_config(plan, derive_key(4096, s));
        const bool fast = ClusterIndex(cfg).connected_ball_to_sphere(2.0, 6.0);
        const bool raster = oracle::raster_ball_to_sphere(cfg.balls, 2.0, 6.0, h);
        if (fast == raster) {
            ++agreements;
            continue;
        }
        double margin = 1e9;
        for (size_t i = 0; i < cfg.balls.size(); ++i) {
            const double nrm = norm(cfg.balls[i].center, 2);
            margin = std::min(margin, std::abs(nrm - cfg.balls[i].radius - 2.0));
            margin = std::min(margin, std::abs(nrm + cfg.balls[i].radius - 2.0));
            margin = std::min(margin, std::abs(nrm + cfg.balls[i].radius - 6.0));
            for (size_t j = i + 1; j < cfg.balls.size(); ++j) {
                const double gap = dist(cfg.balls[i].center, cfg.balls[j].center, 2) -
                                   cfg.balls[i].radius - cfg.balls[j].radius;
                margin = std::min(margin, std::abs(gap));
            }
        }
        CAPTURE(s);
        CAPTURE(margin);
        if (margin > 3.0 * h) ++unexcused;
    }
    CHECK(unexcused == 0);
    CHECK(agreements >= 40);
}

TEST_CASE("vacant set connectivity") {
    // empty configuration: everything vacant
    CHECK(vacant_connected(config_of({}, 4.0), 4.0, 0.05));

    // a ring of balls encircling the origin blocks every vacant path
    std::vector<Ball> ring;
    for (int k = 0; k < 40; ++k) {
        const double ang = 2.0 * std::numbers::pi * k / 40.0;
        ring.push_back(ball2(2.0 * std::cos(ang), 2.0 * std::sin(ang), 0.4));
    }
    CHECK_FALSE(vacant_connected(config_of(ring, 4.0), 4.0, 0.05));

    // the same ring with a hole lets the path through
    ring.erase(ring.begin(), ring.begin() + 4);
    CHECK(vacant_connected(config_of(ring, 4.0), 4.0, 0.05));

    // origin covered: no vacant path
    CHECK_FALSE(vacant_connected(config_of({ball2(0, 0, 0.5)}, 4.0), 4.0, 0.05));

    CHECK_THROWS_AS(vacant_connected(config_of({}, 4.0, 3), 4.0, 0.05), infeasible_error);
    CHECK_THROWS_AS(vacant_connected(config_of({}, 4.0), 4.0, -1.0), infeasible_error);
}

TEST_CASE("insertion bridging matches a rebuilt index") {
    const ModelSpec m(2, 0.3, RadiusLaw::dirac(1.0));
    const SamplingPlan plan = make_plan(m, 4.0);
    RandomStream rng(derive_key(8080));
    for (uint64_t s = 0; s < 40; ++s) {
        BallConfig cfg = sample_config(plan, derive_key(606, s));
        const ClusterIndex index(cfg);
        if (index.connected_origin_to_sphere(4.0)) continue;
        for (int k = 0; k < 5; ++k) {
            const Vec z = rng.point_in_ball(Vec{}, 5.0, 2);
            const double rho = rng.uniform(0.3, 2.0);
            const bool fast = index.insertion_bridges(cfg.balls, z, rho, 0.0, 4.0);
            BallConfig grown = cfg;
            grown.balls.push_back(Ball{z, rho, kCoordNone});
            const bool slow = ClusterIndex(grown).connected_origin_to_sphere(4.0);
            CHECK(fast == slow);
        }
    }
}
