#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmfp/core/rng.hpp"
#include "mmfp/core/vec2.hpp"

namespace mmfp {

/// Density floor applied before taking logs, so that NLL stays finite for
/// samples far in the tails.
inline constexpr double kPdfFloor = 1e-12;

enum class ComponentKind { Gaussian, Laplace };

inline const char* to_string(ComponentKind k) {
    return k == ComponentKind::Gaussian ? "gaussian" : "laplace";
}

inline ComponentKind component_kind_from_string(const std::string& s) {
    if (s == "gaussian") return ComponentKind::Gaussian;
    if (s == "laplace") return ComponentKind::Laplace;
    throw std::invalid_argument("unknown component kind: " + s);
}

/// One mixture component. The density factorizes across axes; `scale` is the
/// per-axis standard deviation for Gaussian components and the per-axis
/// diversity b for Laplace components.
struct ComponentParams {
    Vec2 mu;
    Vec2 scale{1.0, 1.0};
    ComponentKind kind = ComponentKind::Gaussian;

    /// Per-axis variance, independent of kind (Var[Laplace(b)] = 2 b^2).
    Vec2 variance() const {
        if (kind == ComponentKind::Gaussian) return {scale.x * scale.x, scale.y * scale.y};
        return {2.0 * scale.x * scale.x, 2.0 * scale.y * scale.y};
    }
};

/// log phi(t | mu, scale) for one axis.
inline double log_pdf_1d(double t, double mu, double scale, ComponentKind kind) {
    if (kind == ComponentKind::Gaussian) {
        const double d = (t - mu) / scale;
        return -0.5 * d * d - std::log(scale) - 0.5 * std::log(2.0 * M_PI);
    }
    return -std::abs(t - mu) / scale - std::log(2.0 * scale);
}

inline double component_pdf(const ComponentParams& c, const Vec2& y) {
    return std::exp(log_pdf_1d(y.x, c.mu.x, c.scale.x, c.kind) +
                    log_pdf_1d(y.y, c.mu.y, c.scale.y, c.kind));
}

/// Weighted mixture of factorized Gaussian or Laplace components.
/// Invariants: weights sum to 1 (1e-9), every weight >= 0, all scales > 0,
/// and all components share one kind.
class MixtureDistribution {
public:
    MixtureDistribution(std::vector<ComponentParams> components, std::vector<double> weights)
        : components_(std::move(components)), weights_(std::move(weights)) {
        validate();
    }

    const std::vector<ComponentParams>& components() const { return components_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t size() const { return components_.size(); }
    ComponentKind kind() const { return components_.front().kind; }

    void validate() const {
        if (components_.empty() || components_.size() != weights_.size())
            throw std::invalid_argument("mixture: component/weight count mismatch");
        double sum = 0.0;
        for (double w : weights_) {
            if (w < 0.0) throw std::invalid_argument("mixture: negative weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("mixture: weights sum to " + std::to_string(sum));
        for (const auto& c : components_) {
            if (!(c.scale.x > 0.0) || !(c.scale.y > 0.0))
                throw std::invalid_argument("mixture: non-positive scale");
            if (c.kind != components_.front().kind)
                throw std::invalid_argument("mixture: mixed component kinds");
        }
    }

private:
    std::vector<ComponentParams> components_;
    std::vector<double> weights_;
};

inline double mixture_pdf(const MixtureDistribution& m, const Vec2& y) {
    double p = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        p += m.weights()[i] * component_pdf(m.components()[i], y);
    return p;
}

inline double mixture_nll(const MixtureDistribution& m, const Vec2& y) {
    return -std::log(mixture_pdf(m, y) + kPdfFloor);
}

inline std::vector<Vec2> sample_mixture(const MixtureDistribution& m, Rng& rng, std::size_t n) {
    std::vector<Vec2> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t i = rng.categorical(m.weights());
        const auto& c = m.components()[i];
        if (c.kind == ComponentKind::Gaussian) {
            out.push_back(rng.normal2(c.mu, c.scale));
        } else {
            const double x = rng.laplace(c.mu.x, c.scale.x);
            const double y = rng.laplace(c.mu.y, c.scale.y);
            out.push_back({x, y});
        }
    }
    return out;
}

} // namespace mmfp
