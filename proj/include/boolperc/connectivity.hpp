#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "boolperc/sampler.hpp"

namespace boolperc {

// Cluster structure of a ball configuration. Two balls are adjacent when
// their closed balls intersect (||z_i - z_j|| <= R_i + R_j); components are
// tracked with a union-find whose roots carry the aggregates needed by the
// connection queries:
//   max_reach       = max over the component of ||z|| + R
//   min_origin_dist = min over the component of ||z|| - R
// Candidate pairs come from a hierarchical grid: a ball of radius R is
// registered at dyadic level l = ceil(log2(max(R, 1))) with cell size 2^l,
// and is tested against levels >= its own within a fixed cell offset range.

class ClusterIndex {
public:
    explicit ClusterIndex(const BallConfig& config)
        : ClusterIndex(config.balls, config.model.d, config.window_radius) {}

    ClusterIndex(const std::vector<Ball>& balls, int d, double window_radius)
        : d_(d), window_(window_radius), n_(balls.size()) {
        parent_.resize(n_);
        size_.assign(n_, 1);
        reach_.resize(n_);
        min_origin_.resize(n_);
        level_.resize(n_);
        for (size_t i = 0; i < n_; ++i) {
            parent_[i] = static_cast<int32_t>(i);
            const double nrm = norm(balls[i].center, d_);
            reach_[i] = nrm + balls[i].radius;
            min_origin_[i] = nrm - balls[i].radius;
            level_[i] = level_of(balls[i].radius);
        }
        build(balls);
    }

    size_t ball_count() const { return n_; }

    int32_t component_of(size_t i) const { return find(static_cast<int32_t>(i)); }

    size_t component_count() const {
        size_t c = 0;
        for (size_t i = 0; i < n_; ++i)
            if (parent_[i] == static_cast<int32_t>(i)) ++c;
        return c;
    }

    double component_reach(size_t i) const { return reach_[find(static_cast<int32_t>(i))]; }
    double component_min_origin(size_t i) const {
        return min_origin_[find(static_cast<int32_t>(i))];
    }

    // True iff some component has a ball intersecting B_inner and reaches
    // the sphere of radius `outer`.
    bool connected_ball_to_sphere(double inner, double outer) const {
        if (!(inner >= 0.0 && inner < outer))
            throw infeasible_error("connected_ball_to_sphere: need 0 <= inner < outer");
        if (outer > window_ + 1e-9)
            throw infeasible_error("query radius exceeds the sampling window");
        for (size_t i = 0; i < n_; ++i) {
            const int32_t root = find(static_cast<int32_t>(i));
            if (static_cast<size_t>(root) == i && min_origin_[root] <= inner &&
                reach_[root] >= outer)
                return true;
        }
        return false;
    }

    // True iff the origin is covered and its component reaches radius r.
    bool connected_origin_to_sphere(double r) const {
        if (!(r >= 0.0)) throw infeasible_error("connected_origin_to_sphere: r must be >= 0");
        if (r > window_ + 1e-9)
            throw infeasible_error("query radius exceeds the sampling window");
        const auto rad = connectivity_radius();
        return rad.has_value() && *rad >= r;
    }

    // Reach of the origin's component, or nullopt when the origin is
    // uncovered. Valid against spheres up to the window radius.
    std::optional<double> connectivity_radius() const {
        double best = -1.0;
        bool covered = false;
        for (size_t i = 0; i < n_; ++i) {
            const int32_t root = find(static_cast<int32_t>(i));
            if (static_cast<size_t>(root) != i) continue;
            if (min_origin_[root] <= 0.0) {
                covered = true;
                best = std::max(best, reach_[root]);
            }
        }
        if (!covered) return std::nullopt;
        return best;
    }

    // Would inserting the ball (z, rho) produce a component that touches
    // B_inner and reaches `outer`? (Used for pivotality; assumes the event
    // does not already hold.)
    bool insertion_bridges(const std::vector<Ball>& balls, const Vec& z, double rho,
                           double inner, double outer) const {
        const double nrm = norm(z, d_);
        double reach = nrm + rho;
        double min_origin = nrm - rho;
        // Merge aggregates of every component the new ball intersects.
        seen_roots_.clear();
        for (size_t i = 0; i < n_; ++i) {
            const double rr = rho + balls[i].radius;
            if (dist2(balls[i].center, z, d_) > rr * rr) continue;
            const int32_t root = find(static_cast<int32_t>(i));
            bool dup = false;
            for (int32_t s : seen_roots_) dup |= (s == root);
            if (dup) continue;
            seen_roots_.push_back(root);
            reach = std::max(reach, reach_[root]);
            min_origin = std::min(min_origin, min_origin_[root]);
        }
        return min_origin <= inner && reach >= outer;
    }

private:
    static int level_of(double radius) {
        if (radius <= 1.0) return 0;
        return static_cast<int>(std::ceil(std::log2(radius)));
    }

    // One grid level: balls of level l live in cells of size 2^l. Cell
    // coordinates are bounded by the window, so a dense array of linked-list
    // heads usually fits; a hash map covers the rest.
    struct Level {
        int level = 0;
        std::array<int32_t, kMaxDim> lo{};     // bounding box of cell coords
        std::array<int32_t, kMaxDim> extent{};
        std::vector<int32_t> dense;            // heads, or empty when sparse
        std::unordered_map<uint64_t, int32_t> sparse;

        size_t dense_index(const std::array<int32_t, kMaxDim>& c, int d) const {
            size_t f = 0;
            for (int a = 0; a < d; ++a)
                f = f * static_cast<size_t>(extent[static_cast<size_t>(a)]) +
                    static_cast<size_t>(c[static_cast<size_t>(a)] - lo[static_cast<size_t>(a)]);
            return f;
        }
        static uint64_t mix_key(const std::array<int32_t, kMaxDim>& c, int d) {
            uint64_t h = 0x51ED2701u;
            for (int a = 0; a < d; ++a)
                h = detail::mix64(h ^ static_cast<uint32_t>(c[static_cast<size_t>(a)]));
            return h;
        }
        int32_t head(const std::array<int32_t, kMaxDim>& c, int d) const {
            for (int a = 0; a < d; ++a) {
                const int32_t v = c[static_cast<size_t>(a)];
                if (v < lo[static_cast<size_t>(a)] ||
                    v >= lo[static_cast<size_t>(a)] + extent[static_cast<size_t>(a)])
                    return -1;
            }
            if (!dense.empty()) return dense[dense_index(c, d)];
            const auto it = sparse.find(mix_key(c, d));
            return it == sparse.end() ? -1 : it->second;
        }
    };

    std::array<int32_t, kMaxDim> cell_coords(const Vec& z, int level) const {
        std::array<int32_t, kMaxDim> c{};
        const double s = std::ldexp(1.0, level);
        for (int i = 0; i < d_; ++i)
            c[static_cast<size_t>(i)] = static_cast<int32_t>(std::floor(z[i] / s));
        return c;
    }

    void build(const std::vector<Ball>& balls) {
        if (n_ == 0) return;
        std::vector<int32_t> next(n_, -1);

        std::vector<Level> levels;
        for (size_t i = 0; i < n_; ++i) {
            if (std::find_if(levels.begin(), levels.end(), [&](const Level& L) {
                    return L.level == level_[i];
                }) == levels.end()) {
                levels.push_back(Level{level_[i], {}, {}, {}, {}});
            }
        }
        std::sort(levels.begin(), levels.end(),
                  [](const Level& a, const Level& b) { return a.level < b.level; });

        // Bounding boxes per level, then dense or sparse storage.
        std::vector<std::array<int32_t, kMaxDim>> coords(n_);
        for (auto& L : levels) {
            std::array<int32_t, kMaxDim> hi{};
            bool first = true;
            for (size_t i = 0; i < n_; ++i) {
                if (level_[i] != L.level) continue;
                coords[i] = cell_coords(balls[i].center, L.level);
                for (int a = 0; a < d_; ++a) {
                    const int32_t v = coords[i][static_cast<size_t>(a)];
                    if (first || v < L.lo[static_cast<size_t>(a)])
                        L.lo[static_cast<size_t>(a)] = v;
                    if (first || v > hi[static_cast<size_t>(a)])
                        hi[static_cast<size_t>(a)] = v;
                }
                first = false;
            }
            size_t cells = 1;
            bool overflow = false;
            for (int a = 0; a < d_; ++a) {
                L.extent[static_cast<size_t>(a)] =
                    hi[static_cast<size_t>(a)] - L.lo[static_cast<size_t>(a)] + 1;
                const size_t e = static_cast<size_t>(L.extent[static_cast<size_t>(a)]);
                if (cells > (size_t(1) << 22) / std::max<size_t>(e, 1)) overflow = true;
                cells *= e;
            }
            if (!overflow && cells <= (size_t(1) << 22)) {
                L.dense.assign(cells, -1);
                for (size_t i = 0; i < n_; ++i) {
                    if (level_[i] != L.level) continue;
                    int32_t& h = L.dense[L.dense_index(coords[i], d_)];
                    next[i] = h;
                    h = static_cast<int32_t>(i);
                }
            } else {
                L.sparse.reserve(2 * n_);
                for (size_t i = 0; i < n_; ++i) {
                    if (level_[i] != L.level) continue;
                    auto [it, fresh] = L.sparse.try_emplace(Level::mix_key(coords[i], d_), -1);
                    next[i] = it->second;
                    it->second = static_cast<int32_t>(i);
                }
            }
        }

        // Candidate pairs: each ball against levels >= its own; offsets of
        // two cells per axis cover |z_i - z_j| <= R_i + R_j <= 2 * 2^lvl.
        std::array<int32_t, kMaxDim> off{};
        for (size_t i = 0; i < n_; ++i) {
            const Ball& bi = balls[i];
            for (const Level& L : levels) {
                if (L.level < level_[i]) continue;
                const auto base = cell_coords(bi.center, L.level);
                for (int a = 0; a < d_; ++a) off[static_cast<size_t>(a)] = -2;
                for (;;) {
                    std::array<int32_t, kMaxDim> c{};
                    for (int a = 0; a < d_; ++a)
                        c[static_cast<size_t>(a)] =
                            base[static_cast<size_t>(a)] + off[static_cast<size_t>(a)];
                    for (int32_t j = L.head(c, d_); j >= 0; j = next[static_cast<size_t>(j)]) {
                        if (L.level == level_[i] && j <= static_cast<int32_t>(i)) continue;
                        const Ball& bj = balls[static_cast<size_t>(j)];
                        const double rr = bi.radius + bj.radius;
                        if (dist2(bi.center, bj.center, d_) <= rr * rr)
                            unite(static_cast<int32_t>(i), j);
                    }
                    int a = 0;
                    for (; a < d_; ++a) {
                        if (off[static_cast<size_t>(a)] < 2) {
                            ++off[static_cast<size_t>(a)];
                            break;
                        }
                        off[static_cast<size_t>(a)] = -2;
                    }
                    if (a == d_) break;
                }
            }
        }
    }

    int32_t find(int32_t i) const {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }

    void unite(int32_t a, int32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        reach_[a] = std::max(reach_[a], reach_[b]);
        min_origin_[a] = std::min(min_origin_[a], min_origin_[b]);
    }

    int d_;
    double window_;
    size_t n_;
    mutable std::vector<int32_t> parent_;
    std::vector<int32_t> size_;
    std::vector<double> reach_;
    std::vector<double> min_origin_;
    std::vector<int> level_;
    mutable std::vector<int32_t> seen_roots_;
};

inline ClusterIndex build_clusters(const BallConfig& config) { return ClusterIndex(config); }

// Restricted connectivity: keep only balls entirely inside B_{Z_radius}^{Z_center},
// then ask whether B_inner connects to the sphere of radius `outer`.
inline bool connected_restricted(const BallConfig& config, const Vec& z_center,
                                 double z_radius, double inner, double outer) {
    const BallConfig sub = restrict_to(config, z_center, z_radius);
    return ClusterIndex(sub).connected_ball_to_sphere(inner, outer);
}

// ---------------------------------------------------------------------------
// Vacant-set connectivity (d = 2 only): rasterize B_r at pitch h, mark a
// cell vacant when its center is outside every ball, and ask for a
// 4-connected vacant path from the cell containing the origin to any cell
// meeting the circle of radius r. Resolution-dependent approximation.

inline bool vacant_connected(const BallConfig& config, double r, double h) {
    if (config.model.d != 2)
        throw infeasible_error("vacant_connected supports d = 2 only");
    if (!(h > 0.0)) throw infeasible_error("vacant_connected: resolution must be > 0");
    if (!(r > 0.0 && r <= config.window_radius + 1e-9))
        throw infeasible_error("vacant_connected: r must be in (0, window]");

    const int M = static_cast<int>(std::ceil(r / h)) + 1;
    const int side = 2 * M + 1;
    std::vector<uint8_t> covered(static_cast<size_t>(side) * side, 0);
    const auto idx = [&](int i, int j) {
        return static_cast<size_t>(i + M) * static_cast<size_t>(side) +
               static_cast<size_t>(j + M);
    };

    for (const Ball& b : config.balls) {
        const int ilo = std::max(-M, static_cast<int>(std::ceil((b.center[0] - b.radius) / h)));
        const int ihi = std::min(M, static_cast<int>(std::floor((b.center[0] + b.radius) / h)));
        const double r2 = b.radius * b.radius;
        for (int i = ilo; i <= ihi; ++i) {
            const double dx = i * h - b.center[0];
            const double rem = r2 - dx * dx;
            if (rem < 0.0) continue;
            const double half = std::sqrt(rem);
            const int jlo = std::max(-M, static_cast<int>(std::ceil((b.center[1] - half) / h)));
            const int jhi = std::min(M, static_cast<int>(std::floor((b.center[1] + half) / h)));
            for (int j = jlo; j <= jhi; ++j) covered[idx(i, j)] = 1;
        }
    }

    // A cell meets the circle when its square straddles ||p|| = r.
    const auto is_target = [&](int i, int j) {
        double mn = 0.0, mx = 0.0;
        const double cx = i * h, cy = j * h;
        const double lox = std::abs(cx) - h / 2, hix = std::abs(cx) + h / 2;
        const double loy = std::abs(cy) - h / 2, hiy = std::abs(cy) + h / 2;
        mn = (lox > 0 ? lox * lox : 0.0) + (loy > 0 ? loy * loy : 0.0);
        mx = hix * hix + hiy * hiy;
        return mn <= r * r && r * r <= mx;
    };
    const auto in_domain = [&](int i, int j) {
        if (i < -M || i > M || j < -M || j > M) return false;
        const double cx = i * h, cy = j * h;
        return cx * cx + cy * cy <= (r + h) * (r + h);
    };

    if (covered[idx(0, 0)]) return false;
    std::vector<uint8_t> seen(covered.size(), 0);
    std::vector<std::pair<int, int>> stack{{0, 0}};
    seen[idx(0, 0)] = 1;
    while (!stack.empty()) {
        const auto [i, j] = stack.back();
        stack.pop_back();
        if (is_target(i, j)) return true;
        constexpr int di[4] = {1, -1, 0, 0};
        constexpr int dj[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            const int ni = i + di[k], nj = j + dj[k];
            if (!in_domain(ni, nj)) continue;
            const size_t q = idx(ni, nj);
            if (seen[q] || covered[q]) continue;
            seen[q] = 1;
            stack.emplace_back(ni, nj);
        }
    }
    return false;
}

}  // namespace boolperc
