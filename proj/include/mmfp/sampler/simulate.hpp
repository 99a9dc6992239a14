#pragma once

#include <string>
#include <vector>

#include "mmfp/core/grid.hpp"
#include "mmfp/core/rng.hpp"
#include "mmfp/losses/wta.hpp"

namespace mmfp {

/// Ground-truth generator for the free-hypothesis simulation: a weighted set
/// of axis-aligned boxes sampled uniformly (a zero-size box is a point mass).
struct BoxSampler {
    struct WeightedBox {
        double x0, y0, x1, y1;
        double weight = 1.0;
    };
    std::vector<WeightedBox> boxes;

    Vec2 sample(Rng& rng) const {
        std::vector<double> w;
        w.reserve(boxes.size());
        for (const auto& b : boxes) w.push_back(b.weight);
        const auto& b = boxes[rng.categorical(w)];
        return {b.x1 > b.x0 ? rng.uniform(b.x0, b.x1) : b.x0,
                b.y1 > b.y0 ? rng.uniform(b.y0, b.y1) : b.y0};
    }

    /// Exact raster: each box spreads its weight over the bins it overlaps,
    /// proportionally to the overlap area (point boxes go to their bin).
    GridDensity rasterize(std::size_t bins, double x0, double y0, double x1, double y1) const {
        GridDensity g(bins, bins, x0, y0, x1, y1);
        for (const auto& b : boxes) {
            if (b.x1 <= b.x0 || b.y1 <= b.y0) {
                g.add({b.x0, b.y0}, b.weight);
                continue;
            }
            for (std::size_t r = 0; r < bins; ++r) {
                for (std::size_t c = 0; c < bins; ++c) {
                    const Vec2 center = g.bin_center(c, r);
                    const double bx0 = center.x - g.bin_width() / 2, bx1 = center.x + g.bin_width() / 2;
                    const double by0 = center.y - g.bin_height() / 2, by1 = center.y + g.bin_height() / 2;
                    const double ox = std::max(0.0, std::min(bx1, b.x1) - std::max(bx0, b.x0));
                    const double oy = std::max(0.0, std::min(by1, b.y1) - std::max(by0, b.y0));
                    if (ox > 0 && oy > 0)
                        g.at(c, r) += b.weight * ox * oy / ((b.x1 - b.x0) * (b.y1 - b.y0));
                }
            }
        }
        g.normalize();
        return g;
    }
};

struct FreeSimConfig {
    std::size_t iterations = 30000;
    double lr = 0.5;
    std::uint64_t seed = 1;
    double x0 = 0.0, y0 = 0.0, x1 = kWorldSize, y1 = kWorldSize;  // init domain
};

struct FreeSimSnapshot {
    std::string label;  // "Top 10", ..., or the variant name for WTA/RWTA
    std::vector<Vec2> positions;
};

struct FreeSimResult {
    std::vector<Vec2> initial;
    std::vector<Vec2> final_positions;
    std::vector<FreeSimSnapshot> snapshots;  // one per schedule stage
    std::size_t untouched = 0;               // hypotheses within 1e-3 of their init
};

/// Hypotheses as free 2-D parameters updated by the WTA meta-loss against one
/// fresh ground-truth sample per iteration; the Voronoi-style behaviour study
/// of the loss variants, with a snapshot at the end of every schedule stage.
inline FreeSimResult simulate_free_hypotheses(const BoxSampler& gt, std::size_t k,
                                              const FreeSimConfig& cfg, WtaConfig wta) {
    if (k == 0) throw std::invalid_argument("simulate_free_hypotheses: k >= 1");
    wta.validate(k);
    Rng rng(cfg.seed);
    FreeSimResult out;
    HypothesisSet hs;
    for (std::size_t i = 0; i < k; ++i)
        hs.hyps.push_back({{rng.uniform(cfg.x0, cfg.x1), rng.uniform(cfg.y0, cfg.y1)},
                           std::nullopt});
    for (const auto& h : hs.hyps) out.initial.push_back(h.mu);

    std::size_t current_k = k;
    const auto positions = [&hs] {
        std::vector<Vec2> p;
        for (const auto& h : hs.hyps) p.push_back(h.mu);
        return p;
    };
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        if (wta.variant == WtaVariant::EWTA) {
            const std::size_t scheduled = ewta_schedule(it, cfg.iterations, k);
            if (scheduled != current_k && it > 0) {
                out.snapshots.push_back({"Top " + std::to_string(current_k), positions()});
            }
            current_k = scheduled;
            wta.top_k = scheduled;
        }
        const Vec2 y = gt.sample(rng);
        const WtaLossResult res = wta_loss_and_grad(hs, y, wta);
        for (std::size_t i = 0; i < k; ++i) hs.hyps[i].mu -= res.grad[i].d_mu * cfg.lr;
    }
    const std::string last_label = wta.variant == WtaVariant::EWTA
                                       ? "Top " + std::to_string(current_k)
                                       : (wta.variant == WtaVariant::WTA ? "WTA" : "RWTA");
    out.snapshots.push_back({last_label, positions()});
    out.final_positions = positions();
    for (std::size_t i = 0; i < k; ++i)
        if ((out.final_positions[i] - out.initial[i]).norm() <= 1e-3) ++out.untouched;
    return out;
}

} // namespace mmfp
