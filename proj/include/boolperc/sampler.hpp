#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "boolperc/analytic.hpp"
#include "boolperc/geometry.hpp"
#include "boolperc/radius_law.hpp"
#include "boolperc/rng.hpp"

namespace boolperc {

// Poisson-Boolean configurations restricted to a window, with optional
// product-space coordinates (cell x, radius band n) for coordinate-wise
// resampling. Sampling is a pure function of (model, parameters, seed).

struct ModelSpec {
    int d = 2;
    double lambda = 0.0;
    RadiusLaw law = RadiusLaw::dirac(1.0);
    double eps_trunc = 1e-6;  // per-replicate budget for ignored huge balls

    ModelSpec() = default;
    ModelSpec(int dim, double intensity, RadiusLaw l, double eps = 1e-6)
        : d(dim), lambda(intensity), law(std::move(l)), eps_trunc(eps) {
        if (d < 1 || d > kMaxDim) throw infeasible_error("model: dimension out of range");
        if (!(lambda >= 0.0)) throw infeasible_error("model: lambda must be >= 0");
        if (!(eps_trunc > 0.0 && eps_trunc < 1.0))
            throw infeasible_error("model: eps_trunc must be in (0,1)");
    }

    ModelSpec with_lambda(double l) const {
        ModelSpec m = *this;
        if (!(l >= 0.0)) throw infeasible_error("model: lambda must be >= 0");
        m.lambda = l;
        return m;
    }
};

// Ball provenance: which product-space coordinate generated it.
inline constexpr int32_t kCoordNone = -2;   // plain window sampling
inline constexpr int32_t kCoordGhost = -1;  // aggregated far coordinate "g"

struct Ball {
    Vec center;
    double radius = 0.0;
    int32_t coord = kCoordNone;

    bool operator==(const Ball&) const = default;
};

// The finite index set I_L = {(x, n): ||x|| <= L, 1 <= n <= L} in canonical
// order (ascending band n, then lexicographic x). Coordinates are addressed
// by dense rank for cheap per-coordinate tallies.
class CoordSet {
public:
    CoordSet() = default;
    CoordSet(int d, int L) : d_(d), L_(L), side_(2 * L + 1) {
        size_t flat_total = 1;
        for (int i = 0; i < d; ++i) {
            if (flat_total > (size_t(1) << 24) / static_cast<size_t>(side_))
                throw infeasible_error("index set too large for this (d, L)");
            flat_total *= static_cast<size_t>(side_);
        }
        site_rank_.assign(flat_total, -1);
        LatticePoint x;
        enumerate_sites(x, 0);
    }

    int d() const { return d_; }
    int L() const { return L_; }
    int32_t n_sites() const { return static_cast<int32_t>(sites_.size()); }
    int32_t size() const { return n_sites() * L_; }
    const std::vector<LatticePoint>& sites() const { return sites_; }

    // Rank of x among the sites, or -1 when ||x|| > L.
    int32_t site_rank(const LatticePoint& x) const {
        size_t flat = 0;
        for (int i = 0; i < d_; ++i) {
            const int32_t v = x[i] + L_;
            if (v < 0 || v >= side_) return -1;
            flat = flat * static_cast<size_t>(side_) + static_cast<size_t>(v);
        }
        return site_rank_[flat];
    }

    bool contains(const LatticePoint& x, int32_t band) const {
        return band >= 1 && band <= L_ && site_rank(x) >= 0;
    }

    int32_t index_of(const LatticePoint& x, int32_t band) const {
        const int32_t rank = site_rank(x);
        if (rank < 0 || band < 1 || band > L_) return -1;
        return (band - 1) * n_sites() + rank;
    }

    LatticePoint site_of(int32_t index) const { return sites_[index % n_sites()]; }
    int32_t band_of(int32_t index) const { return index / n_sites() + 1; }

private:
    void enumerate_sites(LatticePoint& x, int i) {
        if (i == d_) {
            if (lattice_norm2(x, d_) <= static_cast<double>(L_) * L_) {
                size_t flat = 0;
                for (int j = 0; j < d_; ++j)
                    flat = flat * static_cast<size_t>(side_) +
                           static_cast<size_t>(x[j] + L_);
                site_rank_[flat] = static_cast<int32_t>(sites_.size());
                sites_.push_back(x);
            }
            return;
        }
        for (int32_t v = -L_; v <= L_; ++v) {
            x[i] = v;
            enumerate_sites(x, i + 1);
        }
    }

    int d_ = 0;
    int L_ = 0;
    int32_t side_ = 0;
    std::vector<LatticePoint> sites_;
    std::vector<int32_t> site_rank_;
};

struct BallConfig {
    ModelSpec model;
    double window_radius = 0.0;
    int64_t n_max = 0;  // radii >= n_max were truncated away
    uint64_t seed = 0;
    std::vector<Ball> balls;
    // Cell-sampled configs carry the index-set parameters; cells_L = 0 for
    // plain window samples.
    int32_t cells_L = 0;
    double cells_r = 0.0;

    bool is_cells() const { return cells_L > 0; }
};

inline LatticePoint ball_cell(const Ball& b, int d) { return cell_of(b.center, d); }
inline int32_t ball_band(const Ball& b) {
    return static_cast<int32_t>(std::floor(b.radius)) + 1;  // radius in [n-1, n)
}

// ---------------------------------------------------------------------------
// Window sampling plan.
//
// The kept set is the Poisson process restricted to
//   {(z, R): ||z|| <= w + R, R < N_max},
// proposed band by band: integer radius bands [n-1, n) up to kBandSwitch,
// then dyadic bands, each proposing Poisson(lambda v_d (w + hi)^d mu[lo,hi))
// centers uniform in B_{w+hi} and thinning to ||z|| <= w + R. N_max is the
// least integer whose truncation intensity is within the model's budget.

inline constexpr int64_t kBandSwitch = 256;
inline constexpr int64_t kNMaxCeiling = int64_t(1) << 40;

struct SamplingPlan {
    ModelSpec model;
    double window_radius = 0.0;
    int64_t n_max = 0;

    struct Band {
        double r_lo, r_hi;
        double domain_radius;  // centers proposed uniformly in this ball
        double mean;           // Poisson proposal mean
    };
    std::vector<Band> bands;
};

inline int64_t compute_n_max(const ModelSpec& model, double window_radius) {
    if (model.lambda == 0.0) return 0;
    const auto ok = [&](int64_t N) {
        const SaturableProb t = truncation_intensity(model.law, model.lambda, model.d,
                                                     window_radius, static_cast<double>(N));
        return !t.saturated && t.value <= model.eps_trunc;
    };
    if (!model.law.moment_is_finite(model.d))
        throw infeasible_error("Hall saturation: space a.s. covered (infinite d-th moment)");
    if (ok(0)) return 0;
    int64_t hi = 1;
    while (!ok(hi)) {
        hi *= 2;
        if (hi > kNMaxCeiling)
            throw infeasible_error("truncation budget unattainable; raise eps_trunc");
    }
    int64_t lo = hi / 2;  // ok(lo) is false, ok(hi) is true
    while (hi - lo > 1) {
        const int64_t mid = lo + (hi - lo) / 2;
        (ok(mid) ? hi : lo) = mid;
    }
    return hi;
}

inline SamplingPlan make_plan(const ModelSpec& model, double window_radius,
                              std::optional<int64_t> forced_n_max = {}) {
    if (!(window_radius > 0.0)) throw infeasible_error("window_radius must be > 0");
    SamplingPlan plan;
    plan.model = model;
    plan.window_radius = window_radius;
    plan.n_max = forced_n_max ? *forced_n_max : compute_n_max(model, window_radius);
    const double v_d = unit_ball_volume(model.d);
    const auto add_band = [&](double lo, double hi) {
        const double mass = model.law.band_mass(lo, hi);
        if (mass <= 0.0) return;
        const double dom = window_radius + hi;
        plan.bands.push_back(
            {lo, hi, dom, model.lambda * v_d * std::pow(dom, model.d) * mass});
    };
    const int64_t unit_until = std::min(plan.n_max, kBandSwitch);
    for (int64_t n = 1; n <= unit_until; ++n)
        add_band(static_cast<double>(n - 1), static_cast<double>(n));
    for (int64_t lo = kBandSwitch; lo < plan.n_max; lo *= 2)
        add_band(static_cast<double>(lo), static_cast<double>(std::min(2 * lo, plan.n_max)));
    return plan;
}

// Draw one configuration from a plan. `coord_tag` is attached to every ball
// and `reject` filters proposals (used to carve out the I_L coordinates when
// sampling the far coordinate).
template <typename Reject>
inline void sample_into(const SamplingPlan& plan, RandomStream& rng,
                        std::vector<Ball>& out, int32_t coord_tag, const Reject& reject) {
    const int d = plan.model.d;
    const double w = plan.window_radius;
    for (const auto& band : plan.bands) {
        const uint64_t count = rng.poisson(band.mean);
        for (uint64_t k = 0; k < count; ++k) {
            const Vec z = rng.point_in_ball(origin_vec(), band.domain_radius, d);
            const double R = plan.model.law.sample_in_band(rng, band.r_lo, band.r_hi);
            const double keep = w + R;
            if (norm2(z, d) > keep * keep) continue;
            if (reject(z, R)) continue;
            out.push_back({z, R, coord_tag});
        }
    }
}

inline BallConfig sample_config(const SamplingPlan& plan, uint64_t seed) {
    BallConfig cfg;
    cfg.model = plan.model;
    cfg.window_radius = plan.window_radius;
    cfg.n_max = plan.n_max;
    cfg.seed = seed;
    RandomStream rng(derive_key(seed));
    sample_into(plan, rng, cfg.balls, kCoordNone, [](const Vec&, double) { return false; });
    return cfg;
}

// Every ball of a Poisson realization that meets B_{window_radius} and has
// radius below the truncation cut, bit-reproducible from the seed.
inline BallConfig sample_config(const ModelSpec& model, double window_radius, uint64_t seed) {
    return sample_config(make_plan(model, window_radius), seed);
}

// Superposition coupling: the configuration at lambda_hi is the one at
// lambda_lo plus an independent increment process, so every monotone
// functional is exactly monotone across the pair. Both halves share the
// truncation cut of the higher intensity.
struct CoupledConfigs {
    BallConfig lo;
    BallConfig hi;
};

inline CoupledConfigs sample_config_coupled(const ModelSpec& model, double lambda_lo,
                                            double lambda_hi, double window_radius,
                                            uint64_t seed) {
    if (!(lambda_lo <= lambda_hi))
        throw infeasible_error("coupled sampling requires lambda_lo <= lambda_hi");
    const ModelSpec m_hi = model.with_lambda(lambda_hi);
    const int64_t n_max = compute_n_max(m_hi, window_radius);
    const SamplingPlan plan_lo =
        make_plan(model.with_lambda(lambda_lo), window_radius, n_max);
    const SamplingPlan plan_inc =
        make_plan(model.with_lambda(lambda_hi - lambda_lo), window_radius, n_max);
    CoupledConfigs pair;
    pair.lo = sample_config(plan_lo, seed);
    pair.hi = pair.lo;
    pair.hi.model = m_hi;
    RandomStream rng(derive_key(seed, stream_tag::kCouple));
    sample_into(plan_inc, rng, pair.hi.balls, kCoordNone,
                [](const Vec&, double) { return false; });
    return pair;
}

// ---------------------------------------------------------------------------
// Cell-stratified sampling.
//
// Coordinates (x, n) in I_L are sampled in full from their own streams
// (count Poisson(lambda mu[n-1, n)), centers uniform in S^x, radii
// conditioned to the band). Everything else that meets B_r is aggregated
// under the far coordinate "g". Ball order is canonical: ghost segment
// first, then coordinates ascending; resampling replaces one segment.

namespace detail {

inline uint64_t cell_stream_key(uint64_t seed, const LatticePoint& x, int32_t band, int d) {
    uint64_t key = derive_key(seed, stream_tag::kCell, static_cast<uint64_t>(band));
    for (int i = 0; i < d; ++i)
        key = derive_key(key, static_cast<uint64_t>(static_cast<int64_t>(x[i])));
    return key;
}

inline void sample_one_cell(const ModelSpec& model, const LatticePoint& x, int32_t band,
                            int32_t coord_idx, uint64_t seed, std::vector<Ball>& out) {
    const double mass = model.law.band_mass(band - 1.0, static_cast<double>(band));
    if (mass <= 0.0) return;
    RandomStream rng(cell_stream_key(seed, x, band, model.d));
    const uint64_t count = rng.poisson(model.lambda * mass);
    for (uint64_t k = 0; k < count; ++k) {
        const Vec z = rng.point_in_box(x, model.d);
        const double R = model.law.sample_in_band(rng, band - 1.0, static_cast<double>(band));
        out.push_back({z, R, coord_idx});
    }
}

inline void sample_ghost(const SamplingPlan& plan, const CoordSet& coords, uint64_t seed,
                         std::vector<Ball>& out) {
    RandomStream rng(derive_key(seed, stream_tag::kGhost));
    const int d = plan.model.d;
    sample_into(plan, rng, out, kCoordGhost, [&](const Vec& z, double R) {
        const int32_t band = static_cast<int32_t>(std::floor(R)) + 1;
        return coords.contains(cell_of(z, d), band);
    });
}

}  // namespace detail

// Reusable plan for cell-stratified sampling: the coordinate set plus the
// window plan for the far coordinate.
struct CellsPlan {
    ModelSpec model;
    int L = 0;
    double r = 0.0;
    CoordSet coords;
    SamplingPlan window_plan;
};

inline CellsPlan make_cells_plan(const ModelSpec& model, int L, double r) {
    if (!(r > 0.0)) throw infeasible_error("sample_cells: r must be > 0");
    if (!(L >= 2.0 * r)) throw infeasible_error("sample_cells: requires L >= 2r");
    if (L > kBandSwitch) throw infeasible_error("sample_cells: L too large");
    return {model, L, r, CoordSet(model.d, L), make_plan(model, r)};
}

inline BallConfig sample_cells(const CellsPlan& plan, uint64_t seed) {
    const ModelSpec& model = plan.model;
    BallConfig cfg;
    cfg.model = model;
    cfg.window_radius = plan.r;
    cfg.n_max = plan.window_plan.n_max;
    cfg.seed = seed;
    cfg.cells_L = plan.L;
    cfg.cells_r = plan.r;
    detail::sample_ghost(plan.window_plan, plan.coords, seed, cfg.balls);
    for (int32_t band = 1; band <= plan.L; ++band) {
        for (int32_t rank = 0; rank < plan.coords.n_sites(); ++rank) {
            const int32_t idx = (band - 1) * plan.coords.n_sites() + rank;
            detail::sample_one_cell(model, plan.coords.sites()[rank], band, idx, seed,
                                    cfg.balls);
        }
    }
    return cfg;
}

// Sample the product-space decomposition for the index set I_L around the
// connection event at radius r. Requires L >= 2r.
inline BallConfig sample_cells(const ModelSpec& model, int L, double r, uint64_t seed) {
    return sample_cells(make_cells_plan(model, L, r), seed);
}

// Replace the balls of one coordinate (a coord index, or kCoordGhost) with a
// fresh independent draw keyed by `seed`. Resampling with the original
// config seed restores the original segment.
inline BallConfig resample_cell(const CellsPlan& plan, const BallConfig& config,
                                int32_t coord, uint64_t seed) {
    if (!config.is_cells())
        throw infeasible_error("resample_cell: config was not produced by sample_cells");
    const CoordSet& coords = plan.coords;
    if (coord != kCoordGhost && (coord < 0 || coord >= coords.size()))
        throw infeasible_error("resample_cell: unknown coordinate");

    BallConfig out;
    out.model = config.model;
    out.window_radius = config.window_radius;
    out.n_max = config.n_max;
    out.seed = config.seed;
    out.cells_L = config.cells_L;
    out.cells_r = config.cells_r;
    out.balls.reserve(config.balls.size() + 4);

    const auto emit_fresh = [&]() {
        if (coord == kCoordGhost) {
            detail::sample_ghost(plan.window_plan, coords, seed, out.balls);
        } else {
            detail::sample_one_cell(config.model, coords.site_of(coord),
                                    coords.band_of(coord), coord, seed, out.balls);
        }
    };

    // Balls are stored ghost-first then by ascending coordinate; emit the
    // fresh segment at the position of the old one.
    bool emitted = false;
    for (const Ball& b : config.balls) {
        if (b.coord == coord) {
            if (!emitted) {
                emit_fresh();
                emitted = true;
            }
            continue;
        }
        if (!emitted && b.coord != kCoordGhost && (coord == kCoordGhost || b.coord > coord)) {
            emit_fresh();
            emitted = true;
        }
        out.balls.push_back(b);
    }
    if (!emitted) emit_fresh();
    return out;
}

inline BallConfig resample_cell(const BallConfig& config, int32_t coord, uint64_t seed) {
    if (!config.is_cells())
        throw infeasible_error("resample_cell: config was not produced by sample_cells");
    return resample_cell(make_cells_plan(config.model, config.cells_L, config.cells_r),
                         config, coord, seed);
}

// Keep exactly the balls entirely inside B_rho^center (the sub-process used
// by restricted connectivity; not the same as intersecting the region).
inline BallConfig restrict_to(const BallConfig& config, const Vec& center, double rho) {
    BallConfig out = config;
    out.balls.clear();
    for (const Ball& b : config.balls) {
        const double slack = rho - b.radius;
        if (slack < 0.0) continue;
        if (dist2(b.center, center, config.model.d) <= slack * slack) out.balls.push_back(b);
    }
    return out;
}

}  // namespace boolperc
