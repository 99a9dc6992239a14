#pragma once

#include <cmath>
#include <limits>

namespace mmfp {

/// Minimum scale emitted by any scale head.
inline constexpr double kScaleFloor = 1e-3;

/// Maps a raw network output to a strictly positive scale.
///
/// Without an upper bound the map is floor + softplus(raw). With a finite
/// bound it is a scaled sigmoid spanning (floor, bound) whose slope at
/// raw = 0 equals 1, and the respective derivative is used during training.
struct ScaleTransform {
    double upper_bound = std::numeric_limits<double>::infinity();

    static double softplus(double x) {
        if (x > 30.0) return x;
        return std::log1p(std::exp(x));
    }

    static double sigmoid(double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
    }

    bool bounded() const { return std::isfinite(upper_bound); }

    double apply(double raw) const {
        if (!bounded()) return kScaleFloor + softplus(raw);
        const double span = upper_bound - kScaleFloor;
        return kScaleFloor + span * sigmoid(4.0 * raw / span);
    }

    double derivative(double raw) const {
        if (!bounded()) return sigmoid(raw);  // d softplus
        const double span = upper_bound - kScaleFloor;
        const double s = sigmoid(4.0 * raw / span);
        return 4.0 * s * (1.0 - s);
    }
};

} // namespace mmfp
