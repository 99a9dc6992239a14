#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "mmfp/core/hypotheses.hpp"
#include "mmfp/losses/wta.hpp"
#include "mmfp/nn/mlp.hpp"
#include "mmfp/nn/transforms.hpp"

namespace mmfp {

/// Stage-one network: feature vector -> K hypotheses.
///
/// Output layout: 2K mean coordinates, then (in distribution mode) 2K raw
/// scales mapped through the shared scale transform. The mean head's bias is
/// initialized at the world center so early training does not have to march
/// the hypotheses in from the origin.
class SamplerModel {
public:
    SamplerModel() = default;

    SamplerModel(std::size_t input_dim, std::size_t k, bool with_scales, Rng& rng,
                 std::vector<std::size_t> hidden = {64, 64}, double bias_center = 128.0)
        : k_(k), with_scales_(with_scales) {
        std::vector<std::size_t> sizes{input_dim};
        for (const auto h : hidden) sizes.push_back(h);
        sizes.push_back(output_dim());
        net_ = Mlp(sizes, rng);
        auto& bias = net_.bias(net_.layer_count() - 1);
        for (std::size_t i = 0; i < 2 * k_; ++i) bias[static_cast<Eigen::Index>(i)] = bias_center;
    }

    std::size_t k() const { return k_; }
    bool with_scales() const { return with_scales_; }
    std::size_t input_dim() const { return net_.input_dim(); }
    std::size_t output_dim() const { return with_scales_ ? 4 * k_ : 2 * k_; }
    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }

    double sigma_bound() const { return sigma_bound_; }
    void set_sigma_bound(double b) { sigma_bound_ = b; }
    ScaleTransform scale_transform() const { return ScaleTransform{sigma_bound_}; }

    HypothesisSet forward(const std::vector<double>& x, Mlp::Cache* cache = nullptr) const {
        const Eigen::VectorXd out =
            net_.forward(Eigen::Map<const Eigen::VectorXd>(x.data(),
                                                           static_cast<Eigen::Index>(x.size())),
                         cache);
        HypothesisSet hs;
        const ScaleTransform t = scale_transform();
        for (std::size_t i = 0; i < k_; ++i) {
            Hypothesis h;
            h.mu = {out[static_cast<Eigen::Index>(2 * i)],
                    out[static_cast<Eigen::Index>(2 * i + 1)]};
            if (with_scales_)
                h.scale = Vec2{t.apply(out[static_cast<Eigen::Index>(2 * k_ + 2 * i)]),
                               t.apply(out[static_cast<Eigen::Index>(2 * k_ + 2 * i + 1)])};
            hs.hyps.push_back(h);
        }
        return hs;
    }

    /// Maps per-hypothesis gradients back through the heads (chain rule via
    /// the scale transform) and the trunk; accumulates into `grads` and
    /// returns the gradient w.r.t. the input features.
    Eigen::VectorXd backward(const Mlp::Cache& cache, const std::vector<PerHypGrad>& hyp_grads,
                             Mlp::Grads& grads, bool train_scales = true) const {
        Eigen::VectorXd d_out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(output_dim()));
        const ScaleTransform t = scale_transform();
        const Eigen::VectorXd& raw = cache.act.back();
        for (std::size_t i = 0; i < k_; ++i) {
            d_out[static_cast<Eigen::Index>(2 * i)] = hyp_grads[i].d_mu.x;
            d_out[static_cast<Eigen::Index>(2 * i + 1)] = hyp_grads[i].d_mu.y;
            if (with_scales_ && train_scales) {
                const auto rx = static_cast<Eigen::Index>(2 * k_ + 2 * i);
                const auto ry = static_cast<Eigen::Index>(2 * k_ + 2 * i + 1);
                d_out[rx] = hyp_grads[i].d_scale.x * t.derivative(raw[rx]);
                d_out[ry] = hyp_grads[i].d_scale.y * t.derivative(raw[ry]);
            }
        }
        return net_.backward(cache, d_out, grads);
    }

private:
    Mlp net_;
    std::size_t k_ = 0;
    bool with_scales_ = false;
    double sigma_bound_ = std::numeric_limits<double>::infinity();
};

} // namespace mmfp
