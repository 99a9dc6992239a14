#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mmfp/core/hypotheses.hpp"
#include "mmfp/core/mixture.hpp"

namespace mmfp {

enum class WtaVariant { WTA, RWTA, EWTA };
enum class LossKind { ED, NLL };

/// Configuration of the winner-takes-all meta-loss.
///  - RWTA gives every non-winner a small weight `epsilon`, the winner
///    1 - (K-1) * epsilon, so the weights still sum to 1.
///  - EWTA puts weight 1 on the `top_k` hypotheses closest to the target.
struct WtaConfig {
    WtaVariant variant = WtaVariant::EWTA;
    double epsilon = 0.05;  // RWTA only; must satisfy 0 < eps < 1/K
    std::size_t top_k = 1;  // EWTA only; 1 <= top_k <= K
    LossKind loss_kind = LossKind::ED;
    ComponentKind density_kind = ComponentKind::Gaussian;  // NLL only

    void validate(std::size_t k_hyps) const {
        if (variant == WtaVariant::RWTA &&
            !(epsilon > 0.0 && epsilon < 1.0 / static_cast<double>(k_hyps)))
            throw std::invalid_argument("wta config: epsilon out of (0, 1/K)");
        if (variant == WtaVariant::EWTA && (top_k < 1 || top_k > k_hyps))
            throw std::invalid_argument("wta config: top_k out of range");
    }
};

/// Per-hypothesis weights produced by winner selection, one entry per
/// hypothesis in the set it was computed from.
struct WinnerWeights {
    std::vector<double> w;
};

struct PerHypGrad {
    Vec2 d_mu;
    Vec2 d_scale;  // zero when the hypothesis carries no scale
};

inline double per_hyp_loss(const Hypothesis& h, const Vec2& y, LossKind kind,
                           ComponentKind density = ComponentKind::Gaussian) {
    if (kind == LossKind::ED) return (h.mu - y).norm();
    if (!h.scale.has_value())
        throw std::invalid_argument("per_hyp_loss: NLL needs a hypothesis scale");
    return -(log_pdf_1d(y.x, h.mu.x, h.scale->x, density) +
             log_pdf_1d(y.y, h.mu.y, h.scale->y, density));
}

namespace detail {

inline void nll_axis_grad(double mu, double scale, double y, ComponentKind kind, double& d_mu,
                          double& d_scale) {
    if (kind == ComponentKind::Gaussian) {
        const double v = scale * scale;
        d_mu = (mu - y) / v;
        d_scale = 1.0 / scale - (y - mu) * (y - mu) / (v * scale);
    } else {
        const double d = mu - y;
        d_mu = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / scale;
        d_scale = 1.0 / scale - std::abs(d) / (scale * scale);
    }
}

} // namespace detail

/// Gradient of per_hyp_loss with respect to mu and scale. The ED gradient at
/// exact coincidence is defined as the zero subgradient.
inline PerHypGrad per_hyp_loss_grad(const Hypothesis& h, const Vec2& y, LossKind kind,
                                    ComponentKind density = ComponentKind::Gaussian) {
    PerHypGrad g;
    if (kind == LossKind::ED) {
        const Vec2 d = h.mu - y;
        const double n = d.norm();
        if (n >= 1e-12) g.d_mu = d / n;
        return g;
    }
    if (!h.scale.has_value())
        throw std::invalid_argument("per_hyp_loss_grad: NLL needs a hypothesis scale");
    detail::nll_axis_grad(h.mu.x, h.scale->x, y.x, density, g.d_mu.x, g.d_scale.x);
    detail::nll_axis_grad(h.mu.y, h.scale->y, y.y, density, g.d_mu.y, g.d_scale.y);
    return g;
}

/// Winner selection always ranks by Euclidean distance of the means to the
/// target, independent of the configured loss kind. Ties break toward the
/// lower hypothesis index.
inline WinnerWeights select_winners(const HypothesisSet& hs, const Vec2& y,
                                    const WtaConfig& cfg) {
    const std::size_t k = hs.size();
    cfg.validate(k);
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> dist(k);
    for (std::size_t i = 0; i < k; ++i) dist[i] = (hs.hyps[i].mu - y).norm();
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

    WinnerWeights ww;
    ww.w.assign(k, 0.0);
    switch (cfg.variant) {
        case WtaVariant::WTA:
            ww.w[order[0]] = 1.0;
            break;
        case WtaVariant::RWTA:
            for (double& w : ww.w) w = cfg.epsilon;
            ww.w[order[0]] = 1.0 - static_cast<double>(k - 1) * cfg.epsilon;
            break;
        case WtaVariant::EWTA:
            for (std::size_t i = 0; i < cfg.top_k; ++i) ww.w[order[i]] = 1.0;
            break;
    }
    return ww;
}

struct WtaLossResult {
    double loss = 0.0;
    std::vector<PerHypGrad> grad;
};

/// L = sum_k w_k l(h_k, y) with the winner weights treated as constants
/// during differentiation (subgradient through the argmin).
inline WtaLossResult wta_loss_and_grad(const HypothesisSet& hs, const Vec2& y,
                                       const WtaConfig& cfg) {
    const WinnerWeights ww = select_winners(hs, y, cfg);
    WtaLossResult res;
    res.grad.resize(hs.size());
    for (std::size_t i = 0; i < hs.size(); ++i) {
        const double w = ww.w[i];
        if (w == 0.0) continue;
        res.loss += w * per_hyp_loss(hs.hyps[i], y, cfg.loss_kind, cfg.density_kind);
        PerHypGrad g = per_hyp_loss_grad(hs.hyps[i], y, cfg.loss_kind, cfg.density_kind);
        res.grad[i].d_mu = g.d_mu * w;
        res.grad[i].d_scale = g.d_scale * w;
    }
    return res;
}

/// Piecewise-constant top-k schedule: stages k = K, ceil(K/2), ceil(K/4), ...
/// down to 1, each stage holding an equal share of the iteration budget.
inline std::vector<std::size_t> ewta_stage_values(std::size_t k_hyps) {
    std::vector<std::size_t> stages;
    std::size_t k = k_hyps;
    while (true) {
        stages.push_back(k);
        if (k == 1) break;
        k = (k + 1) / 2;
    }
    return stages;
}

inline std::size_t ewta_schedule(std::size_t step, std::size_t total, std::size_t k_hyps) {
    if (step >= total) throw std::invalid_argument("ewta_schedule: step out of range");
    const auto stages = ewta_stage_values(k_hyps);
    const std::size_t stage =
        std::min(stages.size() - 1, step * stages.size() / total);
    return stages[stage];
}

} // namespace mmfp
