#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "mmfp/core/vec2.hpp"

namespace mmfp {

/// One candidate future location. `scale` is present when the sampler runs in
/// distribution mode (per-axis spread alongside the mean) and absent in point
/// mode.
struct Hypothesis {
    Vec2 mu;
    std::optional<Vec2> scale;
};

/// K hypotheses emitted by the sampling stage. Either every entry carries a
/// scale or none does.
struct HypothesisSet {
    std::vector<Hypothesis> hyps;

    std::size_t size() const { return hyps.size(); }
    bool has_scales() const { return !hyps.empty() && hyps.front().scale.has_value(); }

    void validate() const {
        if (hyps.empty()) throw std::invalid_argument("hypothesis set: empty");
        const bool scaled = hyps.front().scale.has_value();
        for (const auto& h : hyps) {
            if (h.scale.has_value() != scaled)
                throw std::invalid_argument("hypothesis set: inconsistent scale presence");
            if (scaled && (!(h.scale->x > 0.0) || !(h.scale->y > 0.0)))
                throw std::invalid_argument("hypothesis set: non-positive scale");
        }
    }
};

} // namespace mmfp
