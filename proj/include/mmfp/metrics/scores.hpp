#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include "mmfp/core/grid.hpp"
#include "mmfp/core/hypotheses.hpp"
#include "mmfp/core/mixture.hpp"

namespace mmfp {

/// Distance from the ground truth to the closest hypothesis.
inline double oracle_error(const HypothesisSet& hs, const Vec2& y_hat) {
    if (hs.size() == 0) throw std::invalid_argument("oracle_error: empty set");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& h : hs.hyps) best = std::min(best, (h.mu - y_hat).norm());
    return best;
}

/// Distance from the ground truth to the closest component mean.
inline double oracle_error(const MixtureDistribution& m, const Vec2& y_hat) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : m.components()) best = std::min(best, (c.mu - y_hat).norm());
    return best;
}

inline double nll_metric(const MixtureDistribution& m, std::span<const Vec2> samples) {
    if (samples.empty()) throw std::invalid_argument("nll_metric: no samples");
    double total = 0.0;
    for (const auto& y : samples) total += mixture_nll(m, y);
    return total / static_cast<double>(samples.size());
}

/// Grid NLL treats each bin as holding a constant density mass / bin_area, so
/// values are comparable across grid resolutions and with mixture NLL.
inline double nll_metric(const GridDensity& g, std::span<const Vec2> samples) {
    if (samples.empty()) throw std::invalid_argument("nll_metric: no samples");
    double total = 0.0;
    for (const auto& y : samples) {
        const double density = g.mass()[g.bin_of(y)] / g.bin_area();
        total += -std::log(density + kPdfFloor);
    }
    return total / static_cast<double>(samples.size());
}

/// Self-EMD: the cost of merging every secondary mode into the primary one.
/// The primary mode is the component whose mean has the highest mixture
/// density (the MAP peak); each secondary component moves its weight to the
/// primary mean as a point mass. Mode collapse drives this toward zero.
inline double semd(const MixtureDistribution& m) {
    std::size_t primary = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double peak = mixture_pdf(m, m.components()[i].mu);
        if (peak > best) {
            best = peak;
            primary = i;
        }
    }
    double cost = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i == primary) continue;
        cost += m.weights()[i] * (m.components()[i].mu - m.components()[primary].mu).norm();
    }
    return cost;
}

} // namespace mmfp
