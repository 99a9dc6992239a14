#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mmfp/core/grid.hpp"
#include "mmfp/core/vec2.hpp"

namespace mmfp {
namespace cpi {

/// Axis-aligned half-open rectangle [x0,x1) x [y0,y1) in pixel coordinates.
struct Rect {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    bool empty() const { return x1 <= x0 || y1 <= y0; }
    double area() const { return empty() ? 0.0 : (x1 - x0) * (y1 - y0); }

    bool intersects(const Rect& o) const {
        return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
    }
    Rect intersection(const Rect& o) const {
        return {std::max(x0, o.x0), std::max(y0, o.y0), std::min(x1, o.x1), std::min(y1, o.y1)};
    }
    bool contains(const Rect& o) const {
        return o.x0 >= x0 && o.x1 <= x1 && o.y0 >= y0 && o.y1 <= y1;
    }
};

/// Union of a handful of rectangles; the region primitives the state machine
/// queries. Rectangles may overlap.
class RectUnion {
public:
    RectUnion() = default;
    explicit RectUnion(std::vector<Rect> rects) : rects_(std::move(rects)) {}

    const std::vector<Rect>& rects() const { return rects_; }

    bool intersects(const Rect& box) const {
        for (const auto& r : rects_)
            if (r.intersects(box)) return true;
        return false;
    }

    /// True when `box` is fully covered by the union (rect subtraction).
    bool covers(const Rect& box) const {
        std::vector<Rect> pending{box};
        for (const auto& r : rects_) {
            std::vector<Rect> next;
            for (const auto& piece : pending) {
                if (!piece.intersects(r)) {
                    next.push_back(piece);
                    continue;
                }
                const Rect cut = piece.intersection(r);
                // Up to four residual pieces around the cut.
                if (piece.y0 < cut.y0) next.push_back({piece.x0, piece.y0, piece.x1, cut.y0});
                if (cut.y1 < piece.y1) next.push_back({piece.x0, cut.y1, piece.x1, piece.y1});
                if (piece.x0 < cut.x0) next.push_back({piece.x0, cut.y0, cut.x0, cut.y1});
                if (cut.x1 < piece.x1) next.push_back({cut.x1, cut.y0, piece.x1, cut.y1});
            }
            pending = std::move(next);
            if (pending.empty()) return true;
        }
        return pending.empty();
    }

    /// Number of integer pixels (unit cells, by center) inside both `box` and
    /// the union; exact via inclusion-exclusion over the rectangle list.
    long pixel_overlap(const Rect& box) const {
        const auto count_1d = [](double lo, double hi) -> long {
            // centers i + 0.5 in [lo, hi)
            const long first = static_cast<long>(std::ceil(lo - 0.5));
            const long last = static_cast<long>(std::ceil(hi - 0.5)) - 1;
            return std::max<long>(0, last - first + 1);
        };
        const auto pixels_in = [&](const Rect& r) -> long {
            const Rect c = r.intersection(box);
            if (c.empty()) return 0;
            return count_1d(c.x0, c.x1) * count_1d(c.y0, c.y1);
        };
        const std::size_t n = rects_.size();
        if (n > 16) throw std::logic_error("pixel_overlap: too many rects for subset scan");
        long total = 0;
        for (std::size_t mask = 1; mask < (1u << n); ++mask) {
            Rect acc{-1e18, -1e18, 1e18, 1e18};
            int bits = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (mask & (1u << i)) {
                    acc = acc.intersection(rects_[i]);
                    ++bits;
                }
            }
            if (acc.empty()) continue;
            total += (bits % 2 == 1 ? 1 : -1) * pixels_in(acc);
        }
        return total;
    }

private:
    std::vector<Rect> rects_;
};

/// inter(A, B) = [A intersects B]; within(A, B) = [A lies fully inside B].
inline bool inter(const Rect& box, const RectUnion& region) { return region.intersects(box); }
inline bool within(const Rect& box, const Rect& region) { return region.contains(box); }

/// Fixed scene geometry. The world is 256 x 256 px with a plus-shaped road of
/// width 80 centered at 128:
///   - vehicle area R_V: the two road bands;
///   - crossing R_X: the central 80 x 80 square where the bands meet;
///   - shared area R_S: four zebra strips, one per road arm, straddling the
///     crossing boundary by 25 px on each side and overhanging the pavement
///     by 10 px (so R_S meets both R_X and R_P);
///   - pavement R_P: four 50 x 50 blocks at the crossing corners.
/// A 40 px car box fully inside R_X always touches a zebra (the straddle
/// depth exceeds half the gap), which the state rules rely on.
struct Regions {
    double world = kWorldSize;
    RectUnion vehicle;   // R_V
    Rect crossing;       // R_X
    RectUnion shared;    // R_S
    RectUnion pavement;  // R_P
    std::vector<Vec2> pavement_inner_corners;

    static Regions standard() {
        Regions r;
        r.vehicle = RectUnion({{88, 0, 168, 256}, {0, 88, 256, 168}});
        r.crossing = {88, 88, 168, 168};
        r.shared = RectUnion({
            {63, 78, 113, 178},   // west zebra, across the horizontal arm
            {143, 78, 193, 178},  // east zebra
            {78, 63, 178, 113},   // north zebra, across the vertical arm
            {78, 143, 178, 193},  // south zebra
        });
        r.pavement = RectUnion({
            {38, 38, 88, 88},      // NW block
            {168, 38, 218, 88},    // NE
            {38, 168, 88, 218},    // SW
            {168, 168, 218, 218},  // SE
        });
        r.pavement_inner_corners = {{88, 88}, {168, 88}, {88, 168}, {168, 168}};
        return r;
    }

    /// Distance from a point to the closest pavement corner at the crossing.
    double dtc(const Vec2& p) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : pavement_inner_corners) best = std::min(best, distance(p, c));
        return best;
    }
};

inline Rect actor_box(const Vec2& center, double size) {
    return {center.x - size / 2.0, center.y - size / 2.0, center.x + size / 2.0,
            center.y + size / 2.0};
}

} // namespace cpi
} // namespace mmfp
