#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "boolperc/connectivity.hpp"
#include "boolperc/estimate.hpp"
#include "boolperc/estimators.hpp"
#include "boolperc/parallel.hpp"
#include "boolperc/sampler.hpp"

namespace boolperc {

// Randomized exploration of the event f = 1{0 <-> sphere of radius r} on the
// product space indexed by I_L and the far coordinate "g". The algorithm
// reveals "g", then repeatedly reveals the smallest unrevealed (x, n)
// (ascending band, then lexicographic x) whose box lies within Euclidean
// distance < n of the components of the sphere of radius s in the revealed
// occupied set; it halts when no such coordinate exists, at which point f is
// determined by the revealed coordinates.

struct AlgorithmTrace {
    std::vector<int32_t> revealed;  // kCoordGhost first, then coordinate indices
    bool f_value = false;
    bool halted_determined = false;
    double s = 0.0;
    double r = 0.0;
    int L = 0;
};

namespace detail {

// Incremental components of the sphere of radius s in the revealed occupied
// set. The sphere acts as a seed: every revealed ball chained to it belongs
// to the tracked set. Ball-only connectivity for f is evaluated separately.
class SphereComponentTracker {
public:
    SphereComponentTracker(const std::vector<Ball>& balls, int d, double s)
        : balls_(balls), d_(d), s_(s), sphere_(static_cast<int32_t>(balls.size())) {
        parent_.resize(balls.size() + 1);
        for (size_t i = 0; i < parent_.size(); ++i) parent_[i] = static_cast<int32_t>(i);
        in_comp_.assign(balls.size(), 0);
        revealed_.assign(balls.size(), 0);
        norms_.reserve(balls.size());
        for (const Ball& b : balls_) norms_.push_back(norm(b.center, d_));
    }

    // Reveal a contiguous range of balls; returns indices of balls that
    // newly joined the sphere component (including chained older balls).
    const std::vector<int32_t>& reveal_range(int32_t begin, int32_t end) {
        for (int32_t b = begin; b < end; ++b) {
            revealed_[static_cast<size_t>(b)] = 1;
            revealed_list_.push_back(b);
            const Ball& nb = balls_[static_cast<size_t>(b)];
            for (int32_t a : revealed_list_) {
                if (a == b) continue;
                const Ball& ba = balls_[static_cast<size_t>(a)];
                const double rr = nb.radius + ba.radius;
                if (dist2(nb.center, ba.center, d_) <= rr * rr) unite(a, b);
            }
            if (std::abs(norms_[static_cast<size_t>(b)] - s_) <= nb.radius)
                unite(b, sphere_);
        }
        newly_joined_.clear();
        const int32_t root_s = find(sphere_);
        for (int32_t b : revealed_list_) {
            if (!in_comp_[static_cast<size_t>(b)] && find(b) == root_s) {
                in_comp_[static_cast<size_t>(b)] = 1;
                newly_joined_.push_back(b);
            }
        }
        return newly_joined_;
    }

    bool is_revealed(int32_t ball) const { return revealed_[static_cast<size_t>(ball)] != 0; }
    const std::vector<int32_t>& revealed_balls() const { return revealed_list_; }

private:
    int32_t find(int32_t i) {
        while (parent_[static_cast<size_t>(i)] != i) {
            parent_[static_cast<size_t>(i)] =
                parent_[static_cast<size_t>(parent_[static_cast<size_t>(i)])];
            i = parent_[static_cast<size_t>(i)];
        }
        return i;
    }
    void unite(int32_t a, int32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[static_cast<size_t>(b)] = a;
    }

    const std::vector<Ball>& balls_;
    int d_;
    double s_;
    int32_t sphere_;
    std::vector<int32_t> parent_;
    std::vector<uint8_t> in_comp_, revealed_;
    std::vector<int32_t> revealed_list_, newly_joined_;
    std::vector<double> norms_;
};

// Contiguous [begin, end) ranges of each coordinate's balls in the
// canonical ghost-first ordering of a cells config.
struct CoordRanges {
    int32_t ghost_begin = 0, ghost_end = 0;
    std::vector<std::pair<int32_t, int32_t>> cell;  // per coordinate index

    CoordRanges(const BallConfig& cfg, int32_t n_coords) {
        cell.assign(static_cast<size_t>(n_coords), {0, 0});
        int32_t i = 0;
        const int32_t n = static_cast<int32_t>(cfg.balls.size());
        while (i < n && cfg.balls[static_cast<size_t>(i)].coord == kCoordGhost) ++i;
        ghost_end = i;
        while (i < n) {
            const int32_t c = cfg.balls[static_cast<size_t>(i)].coord;
            int32_t j = i;
            while (j < n && cfg.balls[static_cast<size_t>(j)].coord == c) ++j;
            cell[static_cast<size_t>(c)] = {i, j};
            i = j;
        }
    }
};

}  // namespace detail

inline AlgorithmTrace run_algorithm(const CellsPlan& plan, const BallConfig& cells, double s) {
    if (!cells.is_cells() || cells.cells_L != plan.L ||
        std::abs(cells.cells_r - plan.r) > 1e-12)
        throw infeasible_error("run_algorithm: cells config does not match (L, r)");
    if (!(s >= 0.0 && s <= plan.r))
        throw infeasible_error("run_algorithm: requires 0 <= s <= r");
    const CoordSet& coords = plan.coords;
    const int d = plan.model.d;
    const int32_t n_sites = coords.n_sites();
    const int L = plan.L;

    AlgorithmTrace trace;
    trace.s = s;
    trace.r = plan.r;
    trace.L = L;

    detail::SphereComponentTracker tracker(cells.balls, d, s);
    const detail::CoordRanges ranges(cells, coords.size());

    // dmin[site] = distance from S^x to the tracked component set; coordinate
    // (x, n) is eligible when n > dmin[x]. Eligible unrevealed coordinates
    // are kept in one bitset per band for ordered extraction.
    std::vector<double> dmin(static_cast<size_t>(n_sites));
    const size_t words = static_cast<size_t>((n_sites + 63) / 64);
    std::vector<std::vector<uint64_t>> eligible(static_cast<size_t>(L),
                                                std::vector<uint64_t>(words, 0));
    std::vector<int32_t> bmin(static_cast<size_t>(n_sites));
    const auto set_bit = [&](int band, int32_t rank) {
        eligible[static_cast<size_t>(band - 1)][static_cast<size_t>(rank) / 64] |=
            (uint64_t(1) << (static_cast<size_t>(rank) % 64));
    };
    const auto clear_bit = [&](int band, int32_t rank) {
        eligible[static_cast<size_t>(band - 1)][static_cast<size_t>(rank) / 64] &=
            ~(uint64_t(1) << (static_cast<size_t>(rank) % 64));
    };
    for (int32_t rank = 0; rank < n_sites; ++rank) {
        dmin[static_cast<size_t>(rank)] = dist_box_sphere(coords.sites()[rank], s, d);
        const int32_t b0 = static_cast<int32_t>(std::floor(dmin[static_cast<size_t>(rank)])) + 1;
        bmin[static_cast<size_t>(rank)] = b0;
        for (int32_t n = b0; n <= L; ++n) set_bit(n, rank);
    }

    const auto absorb_joined = [&](const std::vector<int32_t>& joined) {
        for (int32_t bi : joined) {
            const Ball& b = cells.balls[static_cast<size_t>(bi)];
            for (int32_t rank = 0; rank < n_sites; ++rank) {
                const double dd = dist_box_ball(coords.sites()[rank], b.center, b.radius, d);
                if (dd < dmin[static_cast<size_t>(rank)]) {
                    dmin[static_cast<size_t>(rank)] = dd;
                    const int32_t nb = static_cast<int32_t>(std::floor(dd)) + 1;
                    if (nb < bmin[static_cast<size_t>(rank)]) {
                        for (int32_t n = nb; n < bmin[static_cast<size_t>(rank)]; ++n)
                            if (n >= 1 && n <= L) set_bit(n, rank);
                        bmin[static_cast<size_t>(rank)] = nb;
                    }
                }
            }
        }
    };

    trace.revealed.push_back(kCoordGhost);
    absorb_joined(tracker.reveal_range(ranges.ghost_begin, ranges.ghost_end));

    std::vector<uint8_t> coord_revealed(static_cast<size_t>(coords.size()), 0);
    for (;;) {
        int32_t next = -1;
        for (int band = 1; band <= L && next < 0; ++band) {
            const auto& bits = eligible[static_cast<size_t>(band - 1)];
            for (size_t w = 0; w < words; ++w) {
                if (bits[w] == 0) continue;
                const int32_t rank =
                    static_cast<int32_t>(w * 64 + static_cast<size_t>(
                                                      std::countr_zero(bits[w])));
                next = (band - 1) * n_sites + rank;
                break;
            }
        }
        if (next < 0) break;
        const int band = next / n_sites + 1;
        const int32_t rank = next % n_sites;
        clear_bit(band, rank);
        coord_revealed[static_cast<size_t>(next)] = 1;
        trace.revealed.push_back(next);
        const auto [lo, hi] = ranges.cell[static_cast<size_t>(next)];
        absorb_joined(tracker.reveal_range(lo, hi));
    }

    // f is determined by the revealed balls alone once the algorithm halts.
    std::vector<Ball> revealed_balls;
    revealed_balls.reserve(tracker.revealed_balls().size());
    for (int32_t b : tracker.revealed_balls())
        revealed_balls.push_back(cells.balls[static_cast<size_t>(b)]);
    trace.f_value = ClusterIndex(revealed_balls, d, cells.window_radius)
                        .connected_origin_to_sphere(plan.r);
    trace.halted_determined = true;
    return trace;
}

inline AlgorithmTrace run_algorithm(const BallConfig& cells, double s, int L, double r) {
    if (!cells.is_cells() || cells.cells_L != L || std::abs(cells.cells_r - r) > 1e-12)
        throw infeasible_error("run_algorithm: cells config does not match (L, r)");
    return run_algorithm(make_cells_plan(cells.model, L, r), cells, s);
}

// ---------------------------------------------------------------------------
// Revealment estimation with the per-coordinate upper bound
//   delta_(x,n) <= P[S^x_n <-> sphere of radius s],
// where S^x_n is the union of boxes containing a point at distance exactly n
// from S^x. The bound argument needs dist(S^x, sphere) >= n; coordinates
// closer than that are always revealed and flagged trivial.

struct RevealmentReport {
    int L = 0;
    double s = 0.0, r = 0.0;
    uint64_t n_reps = 0;
    uint64_t seed = 0;
    std::vector<uint64_t> reveal_counts;   // per coordinate index
    std::vector<uint64_t> bound_counts;    // event S^x_n <-> sphere_s
    std::vector<uint8_t> trivially_revealed;  // dist(S^x, sphere_s) < n
    uint64_t f_hits = 0;

    double delta(int32_t coord) const {
        return static_cast<double>(reveal_counts[static_cast<size_t>(coord)]) /
               static_cast<double>(n_reps);
    }
    double bound(int32_t coord) const {
        return static_cast<double>(bound_counts[static_cast<size_t>(coord)]) /
               static_cast<double>(n_reps);
    }
};

namespace detail {

// Dense box bitmap over y in [-range, range]^d for the crossing-shell test.
class BoxMarks {
public:
    BoxMarks(int d, int32_t range) : d_(d), range_(range), side_(2 * range + 1) {
        size_t total = 1;
        for (int i = 0; i < d; ++i) total *= static_cast<size_t>(side_);
        marks_.assign(total, 0);
    }
    void clear() { std::fill(marks_.begin(), marks_.end(), 0); }
    bool in_range(const LatticePoint& y) const {
        for (int i = 0; i < d_; ++i)
            if (y[i] < -range_ || y[i] > range_) return false;
        return true;
    }
    size_t flat(const LatticePoint& y) const {
        size_t f = 0;
        for (int i = 0; i < d_; ++i)
            f = f * static_cast<size_t>(side_) + static_cast<size_t>(y[i] + range_);
        return f;
    }
    void mark(const LatticePoint& y) {
        if (in_range(y)) marks_[flat(y)] = 1;
    }
    void mark_flat(size_t f) { marks_[f] = 1; }
    bool marked_flat(size_t f) const { return marks_[f] != 0; }

    template <typename Fn>
    void for_each_box_in_cube(const Vec& center, double radius, const Fn& fn) const {
        LatticePoint lo, hi, y;
        for (int i = 0; i < d_; ++i) {
            lo[i] = std::max<int32_t>(-range_,
                                      static_cast<int32_t>(std::floor(center[i] - radius + 0.5)));
            hi[i] = std::min<int32_t>(range_,
                                      static_cast<int32_t>(std::floor(center[i] + radius + 0.5)));
            if (lo[i] > hi[i]) return;
            y[i] = lo[i];
        }
        for (;;) {
            fn(y);
            int a = 0;
            for (; a < d_; ++a) {
                if (y[a] < hi[a]) {
                    ++y[a];
                    break;
                }
                y[a] = lo[a];
            }
            if (a == d_) break;
        }
    }

private:
    int d_;
    int32_t range_;
    int32_t side_;
    std::vector<uint8_t> marks_;
};

// Precomputed shell boxes S^x_n for every coordinate, as flat indices into a
// BoxMarks of the given range.
struct ShellTables {
    int32_t range;
    std::vector<std::vector<size_t>> shell;  // per coordinate index
    std::vector<size_t> sphere_boxes;        // boxes meeting the sphere of radius s

    ShellTables(const CoordSet& coords, double s) {
        const int d = coords.d();
        const int L = coords.L();
        range = static_cast<int32_t>(2 * L + 2);
        BoxMarks probe(d, range);
        shell.resize(static_cast<size_t>(coords.size()));
        for (int32_t band = 1; band <= L; ++band) {
            for (int32_t rank = 0; rank < coords.n_sites(); ++rank) {
                const LatticePoint& x = coords.sites()[static_cast<size_t>(rank)];
                auto& list = shell[static_cast<size_t>((band - 1) * coords.n_sites() + rank)];
                LatticePoint y;
                collect_shell(probe, x, band, d, 0, y, list);
            }
        }
        // Boxes straddling the sphere of radius s.
        LatticePoint y;
        collect_sphere(probe, s, d, 0, y);
    }

private:
    void collect_shell(const BoxMarks& probe, const LatticePoint& x, int32_t n, int d,
                       int axis, LatticePoint& y, std::vector<size_t>& out) {
        if (axis == d) {
            const double mn = box_box_min_dist(x, y, d);
            const double mx = box_box_max_dist(x, y, d);
            if (mn <= n && n <= mx) out.push_back(probe.flat(y));
            return;
        }
        const int32_t lo = std::max(-range, x[axis] - n - 1);
        const int32_t hi = std::min(range, x[axis] + n + 1);
        for (int32_t v = lo; v <= hi; ++v) {
            y[axis] = v;
            collect_shell(probe, x, n, d, axis + 1, y, out);
        }
    }
    void collect_sphere(const BoxMarks& probe, double s, int d, int axis, LatticePoint& y) {
        if (axis == d) {
            if (dist_box_sphere(y, s, d) == 0.0) sphere_boxes.push_back(probe.flat(y));
            return;
        }
        for (int32_t v = -range; v <= range; ++v) {
            y[axis] = v;
            collect_sphere(probe, s, d, axis + 1, y);
        }
    }
};

}  // namespace detail

inline RevealmentReport estimate_revealments(const ModelSpec& model, double s, int L,
                                             double r, uint64_t n_reps, uint64_t seed,
                                             int threads = 1) {
    const CellsPlan plan = make_cells_plan(model, L, r);
    if (!(s >= 0.0 && s <= r))
        throw infeasible_error("estimate_revealments: requires 0 <= s <= r");
    const detail::ShellTables shells(plan.coords, s);
    const int d = model.d;

    struct Tally {
        std::vector<uint64_t> reveal, bound;
        uint64_t f_hits = 0;
        void merge(const Tally& o) {
            if (reveal.size() < o.reveal.size()) {
                reveal.resize(o.reveal.size(), 0);
                bound.resize(o.bound.size(), 0);
            }
            for (size_t i = 0; i < o.reveal.size(); ++i) {
                reveal[i] += o.reveal[i];
                bound[i] += o.bound[i];
            }
            f_hits += o.f_hits;
        }
    };

    const auto tally = run_replicates<Tally>(n_reps, threads, [&](uint64_t i, Tally& t) {
        const size_t n_coords = static_cast<size_t>(plan.coords.size());
        if (t.reveal.empty()) {
            t.reveal.assign(n_coords, 0);
            t.bound.assign(n_coords, 0);
        }
        const BallConfig cells = sample_cells(plan, detail::replicate_seed(seed, i));
        const AlgorithmTrace trace = run_algorithm(plan, cells, s);
        t.f_hits += trace.f_value;
        for (int32_t c : trace.revealed)
            if (c >= 0) ++t.reveal[static_cast<size_t>(c)];

        // Boxes touched by components connected to the sphere of radius s.
        detail::BoxMarks marks(d, shells.range);
        const ClusterIndex index(cells);
        for (size_t b = 0; b < cells.balls.size(); ++b) {
            if (!(index.component_min_origin(b) <= s && index.component_reach(b) >= s))
                continue;
            const Ball& ball = cells.balls[b];
            marks.for_each_box_in_cube(ball.center, ball.radius + 0.5, [&](const LatticePoint& y) {
                if (dist_point_box(ball.center, y, d) <= ball.radius) marks.mark(y);
            });
        }
        // The bare sphere counts as connected to itself.
        for (size_t f : shells.sphere_boxes) marks.mark_flat(f);
        for (size_t c = 0; c < n_coords; ++c) {
            for (size_t f : shells.shell[c]) {
                if (marks.marked_flat(f)) {
                    ++t.bound[c];
                    break;
                }
            }
        }
    });

    RevealmentReport rep;
    rep.L = L;
    rep.s = s;
    rep.r = r;
    rep.n_reps = n_reps;
    rep.seed = seed;
    rep.reveal_counts = tally.reveal;
    rep.bound_counts = tally.bound;
    rep.f_hits = tally.f_hits;
    rep.trivially_revealed.assign(static_cast<size_t>(plan.coords.size()), 0);
    for (int32_t c = 0; c < plan.coords.size(); ++c) {
        const LatticePoint x = plan.coords.site_of(c);
        const int32_t n = plan.coords.band_of(c);
        if (dist_box_sphere(x, s, d) < static_cast<double>(n))
            rep.trivially_revealed[static_cast<size_t>(c)] = 1;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Influences by paired resampling: one fresh draw of each coordinate per
// replicate. Coordinates whose radius band has zero mass are skipped (their
// influence is exactly zero).

struct InfluenceReport {
    int L = 0;
    double r = 0.0;
    uint64_t n_reps = 0;
    uint64_t seed = 0;
    std::vector<uint64_t> flip_counts;  // per coordinate index
    uint64_t ghost_flips = 0;
    std::vector<uint8_t> active;  // band mass > 0

    double influence(int32_t coord) const {
        return static_cast<double>(flip_counts[static_cast<size_t>(coord)]) /
               static_cast<double>(n_reps);
    }
    double ghost_influence() const {
        return static_cast<double>(ghost_flips) / static_cast<double>(n_reps);
    }
};

inline InfluenceReport estimate_influences(const ModelSpec& model, int L, double r,
                                           uint64_t n_reps, uint64_t seed, int threads = 1) {
    const CellsPlan plan = make_cells_plan(model, L, r);
    const int32_t n_coords = plan.coords.size();
    std::vector<uint8_t> active(static_cast<size_t>(n_coords), 0);
    for (int32_t c = 0; c < n_coords; ++c) {
        const int32_t band = plan.coords.band_of(c);
        if (model.law.band_mass(band - 1.0, static_cast<double>(band)) > 0.0)
            active[static_cast<size_t>(c)] = 1;
    }

    struct Tally {
        std::vector<uint64_t> flips;
        uint64_t ghost_flips = 0;
        void merge(const Tally& o) {
            if (flips.size() < o.flips.size()) flips.resize(o.flips.size(), 0);
            for (size_t i = 0; i < o.flips.size(); ++i) flips[i] += o.flips[i];
            ghost_flips += o.ghost_flips;
        }
    };

    const auto eval_f = [&](const BallConfig& cfg) {
        return ClusterIndex(cfg).connected_origin_to_sphere(r);
    };

    const auto tally = run_replicates<Tally>(n_reps, threads, [&](uint64_t i, Tally& t) {
        if (t.flips.empty()) t.flips.assign(static_cast<size_t>(n_coords), 0);
        const uint64_t rs = detail::replicate_seed(seed, i);
        const BallConfig cells = sample_cells(plan, rs);
        const bool f = eval_f(cells);
        for (int32_t c = 0; c < n_coords; ++c) {
            if (!active[static_cast<size_t>(c)]) continue;
            const BallConfig resampled = resample_cell(
                plan, cells, c, derive_key(rs, stream_tag::kResample, static_cast<uint64_t>(c)));
            if (eval_f(resampled) != f) ++t.flips[static_cast<size_t>(c)];
        }
        const BallConfig ghost_resampled =
            resample_cell(plan, cells, kCoordGhost, derive_key(rs, stream_tag::kResample,
                                                               0x47686F7374ull));
        if (eval_f(ghost_resampled) != f) ++t.ghost_flips;
    });

    InfluenceReport rep;
    rep.L = L;
    rep.r = r;
    rep.n_reps = n_reps;
    rep.seed = seed;
    rep.flip_counts = tally.flips;
    if (rep.flip_counts.empty()) rep.flip_counts.assign(static_cast<size_t>(n_coords), 0);
    rep.ghost_flips = tally.ghost_flips;
    rep.active = active;
    return rep;
}

// ---------------------------------------------------------------------------
// The variance/revealment-influence comparison.

struct OsssReport {
    ModelSpec model;
    double s = 0.0, r = 0.0;
    int L = 0;
    uint64_t n_reps = 0;
    double var_f = 0.0, var_sigma = 0.0;
    double sum_delta_inf = 0.0, sum_sigma = 0.0;
    double theta = 0.0;
    bool violated = false;  // variance exceeds the sum by more than 4 sigma
    RevealmentReport revealments;
    InfluenceReport influences;
};

inline OsssReport assemble_osss_report(const ModelSpec& model, double s, int L, double r,
                                       uint64_t n_reps, RevealmentReport revealments,
                                       InfluenceReport influences) {
    OsssReport rep;
    rep.model = model;
    rep.s = s;
    rep.r = r;
    rep.L = L;
    rep.n_reps = n_reps;
    rep.revealments = std::move(revealments);
    rep.influences = std::move(influences);

    const double n = static_cast<double>(n_reps);
    const double theta = static_cast<double>(rep.revealments.f_hits) / n;
    rep.theta = theta;
    const double se_theta = std::sqrt(theta * (1.0 - theta) / n);
    rep.var_f = theta * (1.0 - theta);
    rep.var_sigma = std::abs(1.0 - 2.0 * theta) * se_theta + 2.0 * se_theta * se_theta;

    double sum = 0.0, var_sum = 0.0;
    const int32_t n_coords = static_cast<int32_t>(rep.revealments.reveal_counts.size());
    for (int32_t c = 0; c < n_coords; ++c) {
        const double delta = rep.revealments.delta(c);
        const double inf = rep.influences.influence(c);
        if (delta == 0.0 || inf == 0.0) continue;
        const double se_d = std::sqrt(delta * (1.0 - delta) / n);
        const double se_i = std::sqrt(inf * (1.0 - inf) / n);
        sum += delta * inf;
        var_sum += delta * delta * se_i * se_i + inf * inf * se_d * se_d + se_d * se_d * se_i * se_i;
    }
    {
        // The far coordinate is always revealed: delta_g = 1.
        const double inf_g = rep.influences.ghost_influence();
        const double se_i = std::sqrt(inf_g * (1.0 - inf_g) / n);
        sum += inf_g;
        var_sum += se_i * se_i;
    }
    rep.sum_delta_inf = sum;
    rep.sum_sigma = std::sqrt(var_sum);
    const double combined = std::sqrt(rep.var_sigma * rep.var_sigma + var_sum);
    rep.violated = rep.var_f > sum + 4.0 * combined;
    return rep;
}

inline OsssReport osss_check(const ModelSpec& model, double s, int L, double r,
                             uint64_t n_reps, uint64_t seed, int threads = 1) {
    return assemble_osss_report(
        model, s, L, r, n_reps,
        estimate_revealments(model, s, L, r, n_reps, derive_key(seed, 0xA1), threads),
        estimate_influences(model, L, r, n_reps, derive_key(seed, 0xB2), threads));
}

// ---------------------------------------------------------------------------
// Pivotal insertions and the derivative identity.

// E[Piv_{x,A}] for A = {0 <-> sphere of radius r}: when the event fails,
// average over K independent insertions (z uniform in S^x, rho from the
// law) of the indicator that the insertion creates the connection.
inline Estimate estimate_pivotal(const ModelSpec& model, const LatticePoint& x, double r,
                                 uint64_t n_reps, int K, uint64_t seed, int threads = 1) {
    if (K < 1) throw infeasible_error("estimate_pivotal: K must be >= 1");
    const SamplingPlan plan = make_plan(model, r);
    struct Tally {
        double sum = 0.0, sumsq = 0.0;
        void merge(const Tally& o) {
            sum += o.sum;
            sumsq += o.sumsq;
        }
    };
    const auto tally = run_replicates<Tally>(n_reps, threads, [&](uint64_t i, Tally& t) {
        const uint64_t rs = detail::replicate_seed(seed, i);
        const BallConfig cfg = sample_config(plan, rs);
        const ClusterIndex index(cfg);
        if (index.connected_origin_to_sphere(r)) return;  // contributes 0
        RandomStream rng(derive_key(rs, stream_tag::kInsert));
        int flips = 0;
        for (int k = 0; k < K; ++k) {
            const Vec z = rng.point_in_box(x, model.d);
            const double rho = model.law.sample(rng);
            if (index.insertion_bridges(cfg.balls, z, rho, 0.0, r)) ++flips;
        }
        const double v = static_cast<double>(flips) / K;
        t.sum += v;
        t.sumsq += v * v;
    });
    std::ostringstream meta;
    meta << "pivotal x0=" << x[0] << " r=" << r << " lambda=" << model.lambda;
    return Estimate::from_moments(tally.sum, tally.sumsq, n_reps, seed, meta.str());
}

struct RussoReport {
    double lambda0 = 0.0, dlambda = 0.0, r = 0.0;
    Estimate finite_difference;    // coupled central difference of theta_r
    Estimate pivotal_sum;          // sum over x of E[Piv_{x,A}]
    std::vector<std::pair<LatticePoint, double>> per_site;  // per-site pivotal means
    bool agree = false;            // within 4 combined sigma
};

// Compare d theta_r / d lambda at lambda0 (coupled central difference)
// against the summed pivotal expectations.
inline RussoReport russo_check(const ModelSpec& model, double r, double lambda0,
                               double dlambda, uint64_t n_reps, uint64_t seed,
                               int threads = 1, int K = 4) {
    if (!(dlambda > 0.0)) throw infeasible_error("russo_check: dlambda must be > 0");
    const ModelSpec at0 = model.with_lambda(lambda0);
    RussoReport rep;
    rep.lambda0 = lambda0;
    rep.dlambda = dlambda;
    rep.r = r;
    rep.finite_difference =
        coupled_theta_difference(model, r, lambda0, dlambda, n_reps,
                                 derive_key(seed, 0xFD), threads)
            .derivative;

    // Sites whose box can host a ball meeting B_r after truncation.
    const SamplingPlan plan = make_plan(at0, r);
    const double reach = r + static_cast<double>(plan.n_max);
    std::vector<LatticePoint> sites;
    {
        const int32_t range = static_cast<int32_t>(std::ceil(reach + 0.5));
        LatticePoint x;
        std::vector<int32_t> v(static_cast<size_t>(model.d), -range);
        for (;;) {
            for (int i = 0; i < model.d; ++i) x[i] = v[static_cast<size_t>(i)];
            if (box_min_norm(x, model.d) <= reach) sites.push_back(x);
            int a = 0;
            for (; a < model.d; ++a) {
                if (v[static_cast<size_t>(a)] < range) {
                    ++v[static_cast<size_t>(a)];
                    break;
                }
                v[static_cast<size_t>(a)] = -range;
            }
            if (a == model.d) break;
        }
    }

    struct Tally {
        std::vector<double> site_sum;
        double total_sum = 0.0, total_sumsq = 0.0;
        void merge(const Tally& o) {
            if (site_sum.size() < o.site_sum.size()) site_sum.resize(o.site_sum.size(), 0.0);
            for (size_t i = 0; i < o.site_sum.size(); ++i) site_sum[i] += o.site_sum[i];
            total_sum += o.total_sum;
            total_sumsq += o.total_sumsq;
        }
    };
    const auto tally = run_replicates<Tally>(n_reps, threads, [&](uint64_t i, Tally& t) {
        if (t.site_sum.empty()) t.site_sum.assign(sites.size(), 0.0);
        const uint64_t rs = detail::replicate_seed(derive_key(seed, 0x9A), i);
        const BallConfig cfg = sample_config(plan, rs);
        const ClusterIndex index(cfg);
        if (index.connected_origin_to_sphere(r)) {
            // eta already in A: every pivotal indicator is 0.
            return;
        }
        RandomStream rng(derive_key(rs, stream_tag::kInsert));
        double total = 0.0;
        for (size_t sx = 0; sx < sites.size(); ++sx) {
            int flips = 0;
            for (int k = 0; k < K; ++k) {
                const Vec z = rng.point_in_box(sites[sx], model.d);
                const double rho = at0.law.sample(rng);
                if (index.insertion_bridges(cfg.balls, z, rho, 0.0, r)) ++flips;
            }
            const double v = static_cast<double>(flips) / K;
            t.site_sum[sx] += v;
            total += v;
        }
        t.total_sum += total;
        t.total_sumsq += total * total;
    });

    rep.pivotal_sum = Estimate::from_moments(tally.total_sum, tally.total_sumsq, n_reps,
                                             derive_key(seed, 0x9A), "pivotal sum");
    if (!tally.site_sum.empty()) {
        for (size_t sx = 0; sx < sites.size(); ++sx)
            rep.per_site.emplace_back(sites[sx],
                                      tally.site_sum[sx] / static_cast<double>(n_reps));
    }
    const double gap = std::abs(rep.finite_difference.mean - rep.pivotal_sum.mean);
    const double sigma = std::sqrt(rep.finite_difference.stderr_ * rep.finite_difference.stderr_ +
                                   rep.pivotal_sum.stderr_ * rep.pivotal_sum.stderr_);
    rep.agree = gap <= 4.0 * sigma;
    return rep;
}

}  // namespace boolperc
