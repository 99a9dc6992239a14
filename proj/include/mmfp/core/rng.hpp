#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mmfp/core/vec2.hpp"

namespace mmfp {

/// Deterministic random stream. All sampling in the project goes through this
/// wrapper so that results are reproducible bit-for-bit under a fixed seed,
/// independent of standard-library distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() {
        // 53 random bits -> double mantissa
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (two uniforms per draw, no spare cached).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    /// Laplace with location mu and scale b, by inverse CDF.
    double laplace(double mu, double b) {
        const double u = uniform() - 0.5;
        const double s = u < 0.0 ? -1.0 : 1.0;
        return mu - b * s * std::log(1.0 - 2.0 * std::abs(u));
    }

    /// Index in [0, n).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    /// Categorical draw from (unnormalized is fine) non-negative weights.
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return i;
        }
        return weights.empty() ? 0 : weights.size() - 1;
    }

    Vec2 normal2(const Vec2& mu, const Vec2& sigma) {
        const double x = normal(mu.x, sigma.x);
        const double y = normal(mu.y, sigma.y);
        return {x, y};
    }

    std::uint64_t raw() { return engine_(); }

    /// Derived stream for record `index`; used to fan dataset generation and
    /// Monte-Carlo rollouts across workers without losing determinism.
    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        return Rng(splitmix(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1))));
    }

    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace mmfp
