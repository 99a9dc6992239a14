#pragma once

#include <vector>

#include "mmfp/core/vec2.hpp"

namespace mmfp {

/// One training pair: conditioning features x and a single future location
/// drawn from the (unknown) conditional distribution.
struct ConditionedSample {
    std::vector<double> x;
    Vec2 y_hat;
};

} // namespace mmfp
