#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "boolperc/analytic.hpp"
#include "boolperc/io.hpp"
#include "boolperc/sampler.hpp"

using namespace boolperc;

TEST_CASE("lambda = 0 samples are empty") {
    const ModelSpec m(2, 0.0, RadiusLaw::dirac(1.0));
    CHECK(sample_config(m, 5.0, 1).balls.empty());
    CHECK(sample_cells(m, 8, 4.0, 1).balls.empty());
}

TEST_CASE("same seed gives a bit-identical configuration") {
    const ModelSpec m(2, 0.7, RadiusLaw::power_law_c1(1.0, 2));
    const BallConfig a = sample_config(m, 6.0, 99);
    const BallConfig b = sample_config(m, 6.0, 99);
    REQUIRE(a.balls.size() == b.balls.size());
    CHECK(a.balls == b.balls);
    const BallConfig c = sample_config(m, 6.0, 100);
    CHECK(a.balls != c.balls);
}

TEST_CASE("every ball meets the window and respects truncation") {
    const ModelSpec m(3, 0.2, RadiusLaw::exp_tail(0.5));
    const SamplingPlan plan = make_plan(m, 4.0);
    for (uint64_t s = 0; s < 50; ++s) {
        const BallConfig cfg = sample_config(plan, s);
        for (const Ball& b : cfg.balls) {
            CHECK(norm(b.center, 3) <= cfg.window_radius + b.radius + 1e-12);
            CHECK(b.radius < static_cast<double>(cfg.n_max));
        }
    }
}

TEST_CASE("truncation honesty: the cut satisfies the budget and is minimal") {
    const ModelSpec m(2, 0.3, RadiusLaw::power_law_c1(3.0, 2));
    const SamplingPlan plan = make_plan(m, 10.0);
    const auto at = [&](int64_t N) {
        return truncation_intensity(m.law, m.lambda, m.d, 10.0, static_cast<double>(N)).value;
    };
    CHECK(at(plan.n_max) <= m.eps_trunc);
    REQUIRE(plan.n_max >= 1);
    CHECK(at(plan.n_max - 1) > m.eps_trunc);
}

TEST_CASE("mean ball count matches the Poisson intensity of the window set") {
    // expected count = lambda v_d (w + R)^d for a point-mass radius law
    const ModelSpec m(2, 2.0, RadiusLaw::dirac(1.0));
    const double w = 5.0;
    const SamplingPlan plan = make_plan(m, w);
    const double expect = 2.0 * std::numbers::pi * 36.0;
    const int reps = 10000;
    double total = 0.0;
    for (int i = 0; i < reps; ++i)
        total += static_cast<double>(
            sample_config(plan, derive_key(4242, static_cast<uint64_t>(i))).balls.size());
    const double mean = total / reps;
    const double se = std::sqrt(expect / reps);  // Poisson variance = mean
    CHECK(std::abs(mean - expect) <= 4.0 * se);
}

TEST_CASE("band counts match the thinned band intensities") {
    const ModelSpec m(2, 0.6, RadiusLaw::exp_tail(0.8));
    const double w = 3.0;
    const SamplingPlan plan = make_plan(m, w);
    const int reps = 20000;
    std::vector<double> counts(8, 0.0);
    for (int i = 0; i < reps; ++i) {
        const BallConfig cfg = sample_config(plan, derive_key(777, static_cast<uint64_t>(i)));
        for (const Ball& b : cfg.balls) {
            const int band = ball_band(b);
            if (band <= 8) counts[static_cast<size_t>(band - 1)] += 1.0;
        }
    }
    for (int band = 1; band <= 4; ++band) {
        // exact mean: lambda int over the band of v_d (w + rho)^2 dmu(rho),
        // obtained by differencing the truncation intensity at the edges
        const double mean_expected =
            truncation_intensity(m.law, m.lambda, 2, w, band - 1.0).value -
            truncation_intensity(m.law, m.lambda, 2, w, static_cast<double>(band)).value;
        const double got = counts[static_cast<size_t>(band - 1)] / reps;
        const double se = std::sqrt(std::max(mean_expected, 1e-12) / reps);
        CAPTURE(band);
        CHECK(std::abs(got - mean_expected) <= 4.0 * se + 1e-9);
    }
}

TEST_CASE("cell-stratified sampling is deterministic per seed") {
    const ModelSpec m(2, 0.9, RadiusLaw::power_law_c1(1.0, 2));
    const CellsPlan plan = make_cells_plan(m, 8, 4.0);
    CHECK(sample_cells(plan, 42).balls == sample_cells(plan, 42).balls);
    CHECK(sample_cells(plan, 42).balls != sample_cells(plan, 43).balls);
}

TEST_CASE("cell coordinates are consistent with centers and radii") {
    const ModelSpec m(2, 0.9, RadiusLaw::power_law_c1(1.0, 2));
    const CellsPlan plan = make_cells_plan(m, 8, 4.0);
    for (uint64_t s = 1; s <= 20; ++s) {
        const BallConfig cfg = sample_cells(plan, s);
        for (const Ball& b : cfg.balls) {
            if (b.coord == kCoordGhost) {
                // ghost balls are exactly those outside I_L that meet the window
                CHECK_FALSE(plan.coords.contains(ball_cell(b, 2), ball_band(b)));
                CHECK(norm(b.center, 2) <= cfg.window_radius + b.radius + 1e-12);
            } else {
                REQUIRE(b.coord >= 0);
                const LatticePoint x = plan.coords.site_of(b.coord);
                const int32_t n = plan.coords.band_of(b.coord);
                CHECK(cell_of(b.center, 2) == x);
                CHECK(b.radius >= n - 1.0);
                CHECK(b.radius < static_cast<double>(n));
            }
        }
    }
}

TEST_CASE("cells and window sampling agree in distribution on ball counts") {
    // two-sample z-test on the mean number of balls that meet B_r
    const ModelSpec m(2, 0.5, RadiusLaw::exp_tail(0.9));
    const double r = 4.0;
    const CellsPlan cplan = make_cells_plan(m, 8, r);
    const SamplingPlan wplan = make_plan(m, r);
    const int reps = 8000;
    double s1 = 0, s1q = 0, s2 = 0, s2q = 0;
    for (int i = 0; i < reps; ++i) {
        double c1 = 0;
        for (const Ball& b : sample_cells(cplan, derive_key(1, static_cast<uint64_t>(i))).balls)
            if (norm(b.center, 2) <= r + b.radius) c1 += 1.0;
        const double c2 = static_cast<double>(
            sample_config(wplan, derive_key(2, static_cast<uint64_t>(i))).balls.size());
        s1 += c1;
        s1q += c1 * c1;
        s2 += c2;
        s2q += c2 * c2;
    }
    const double m1 = s1 / reps, m2 = s2 / reps;
    const double v1 = s1q / reps - m1 * m1, v2 = s2q / reps - m2 * m2;
    const double se = std::sqrt((v1 + v2) / reps);
    CHECK(std::abs(m1 - m2) <= 4.0 * se);
}

TEST_CASE("resample_cell determinism and identity") {
    const ModelSpec m(2, 0.8, RadiusLaw::power_law_c1(1.0, 2));
    const CellsPlan plan = make_cells_plan(m, 8, 4.0);
    const BallConfig cfg = sample_cells(plan, 31);

    // resampling with the original seed restores the original config
    const int32_t coord = plan.coords.index_of(LatticePoint{}, 2);
    REQUIRE(coord >= 0);
    const BallConfig away = resample_cell(plan, cfg, coord, 555);
    const BallConfig back = resample_cell(plan, away, coord, cfg.seed);
    CHECK(back.balls == cfg.balls);

    const BallConfig ghost_away = resample_cell(plan, cfg, kCoordGhost, 777);
    const BallConfig ghost_back = resample_cell(plan, ghost_away, kCoordGhost, cfg.seed);
    CHECK(ghost_back.balls == cfg.balls);

    // a zero-mass band resamples to an unchanged config
    const ModelSpec dm(2, 0.8, RadiusLaw::dirac(1.0));
    const CellsPlan dplan = make_cells_plan(dm, 8, 4.0);
    const BallConfig dcfg = sample_cells(dplan, 7);
    const int32_t band1 = dplan.coords.index_of(LatticePoint{}, 1);
    REQUIRE(band1 >= 0);
    CHECK(resample_cell(dplan, dcfg, band1, 999).balls == dcfg.balls);

    CHECK_THROWS_AS(resample_cell(dplan, dcfg, dplan.coords.size() + 5, 1),
                    infeasible_error);
}

TEST_CASE("resampled coordinate matches fresh sampling in distribution") {
    const ModelSpec m(2, 1.1, RadiusLaw::exp_tail(0.6));
    const CellsPlan plan = make_cells_plan(m, 8, 4.0);
    const int32_t coord = plan.coords.index_of(LatticePoint{}, 1);
    REQUIRE(coord >= 0);
    const int reps = 6000;
    double sa = 0, saq = 0, sb = 0, sbq = 0;
    for (int i = 0; i < reps; ++i) {
        const BallConfig cfg = sample_cells(plan, derive_key(10, static_cast<uint64_t>(i)));
        const BallConfig res =
            resample_cell(plan, cfg, coord, derive_key(11, static_cast<uint64_t>(i)));
        double ca = 0, cb = 0;
        for (const Ball& b : cfg.balls) ca += (b.coord == coord);
        for (const Ball& b : res.balls) cb += (b.coord == coord);
        sa += ca;
        saq += ca * ca;
        sb += cb;
        sbq += cb * cb;
    }
    const double ma = sa / reps, mb = sb / reps;
    const double va = saq / reps - ma * ma, vb = sbq / reps - mb * mb;
    CHECK(std::abs(ma - mb) <= 4.0 * std::sqrt((va + vb) / reps) + 1e-9);
}

TEST_CASE("restrict_to keeps exactly the balls inside the region") {
    const ModelSpec m(2, 0.7, RadiusLaw::exp_tail(0.5));
    const BallConfig cfg = sample_config(m, 6.0, 12345);
    Vec center;
    center[0] = 1.0;
    const double rho = 3.5;
    const BallConfig sub = restrict_to(cfg, center, rho);
    size_t expect = 0;
    for (const Ball& b : cfg.balls) {
        const bool inside = dist(b.center, center, 2) + b.radius <= rho;
        expect += inside;
        const bool kept =
            std::find(sub.balls.begin(), sub.balls.end(), b) != sub.balls.end();
        CHECK(kept == inside);
    }
    CHECK(sub.balls.size() == expect);

    // a region holding the whole sample acts as identity
    const BallConfig all =
        restrict_to(cfg, Vec{}, cfg.window_radius + 2.0 * static_cast<double>(cfg.n_max));
    CHECK(all.balls == cfg.balls);

    // single ball poking out is dropped
    BallConfig one = cfg;
    one.balls = {Ball{Vec{}, 4.0, kCoordNone}};
    CHECK(restrict_to(one, Vec{}, 3.9).balls.empty());
}

TEST_CASE("superposition coupling yields a superset") {
    const ModelSpec m(2, 0.4, RadiusLaw::dirac(1.0));
    for (uint64_t s = 0; s < 30; ++s) {
        const CoupledConfigs pair = sample_config_coupled(m, 0.3, 0.5, 5.0, s);
        REQUIRE(pair.lo.balls.size() <= pair.hi.balls.size());
        for (size_t i = 0; i < pair.lo.balls.size(); ++i)
            CHECK(pair.lo.balls[i] == pair.hi.balls[i]);  // prefix by construction
        CHECK(pair.lo.model.lambda == 0.3);
        CHECK(pair.hi.model.lambda == 0.5);
    }
}

TEST_CASE("configs serialize to one JSON line per ball with coordinates") {
    const ModelSpec m(2, 0.9, RadiusLaw::exp_tail(0.6));
    const BallConfig cells = sample_cells(m, 8, 4.0, 5);
    // avoid an empty-sample edge: this intensity always yields balls
    REQUIRE(!cells.balls.empty());
    std::istringstream lines(ball_config_to_jsonl(cells));
    std::string line;
    size_t count = 0;
    while (std::getline(lines, line)) {
        const auto rec = nlohmann::json::parse(line);
        REQUIRE(rec.contains("center"));
        CHECK(rec.at("center").size() == 2);
        CHECK(rec.at("radius").get<double>() >= 0.0);
        const Ball& b = cells.balls[count];
        if (b.coord == kCoordGhost) {
            CHECK(rec.at("coord") == "g");
        } else {
            CHECK(rec.at("coord").at("n").get<int>() == ball_band(b));
        }
        ++count;
    }
    CHECK(count == cells.balls.size());
}

TEST_CASE("hall-saturated laws refuse to sample") {
    const ModelSpec m(2, 0.4, RadiusLaw::power_law_c1(-0.5, 2));
    CHECK_THROWS_AS(make_plan(m, 5.0), infeasible_error);
}

TEST_CASE("sample_cells validates L >= 2r") {
    const ModelSpec m(2, 0.4, RadiusLaw::dirac(1.0));
    CHECK_THROWS_AS(sample_cells(m, 4, 4.0, 1), infeasible_error);
}
