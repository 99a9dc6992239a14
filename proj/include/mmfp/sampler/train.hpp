#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmfp/core/sample.hpp"
#include "mmfp/losses/wta.hpp"
#include "mmfp/sampler/model.hpp"

namespace mmfp {

/// Raised when a training loss turns non-finite; the CLI maps it to its
/// numerical-abort exit code.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SigmaBoundStage {
    std::size_t iteration;
    double bound;
};

struct TrainConfig {
    double lr = 0.05;
    std::size_t batch = 32;
    std::size_t phase1_iters = 4000;  // ED loss, means only
    std::size_t phase2_iters = 2000;  // NLL loss, scales join in
    std::uint64_t seed = 1;
    // Upper bound for the scale head by (start iteration, bound); stages
    // apply in order over the global iteration counter.
    std::vector<SigmaBoundStage> sigma_schedule{{0, 5.0}};
    std::size_t trace_every = 100;

    void validate() const {
        if (!(lr > 0.0) || batch == 0 || phase1_iters + phase2_iters == 0)
            throw std::invalid_argument("train config: non-positive field");
        for (const auto& s : sigma_schedule)
            if (!(s.bound > 0.0)) throw std::invalid_argument("train config: sigma bound <= 0");
    }

    double sigma_bound_at(std::size_t iteration) const {
        double bound = sigma_schedule.empty() ? std::numeric_limits<double>::infinity()
                                              : sigma_schedule.front().bound;
        for (const auto& s : sigma_schedule)
            if (iteration >= s.iteration) bound = s.bound;
        return bound;
    }
};

struct TracePoint {
    std::size_t iteration;
    double loss;
};

struct TrainResult {
    std::vector<TracePoint> trace;
};

namespace detail {

/// One SGD pass over `iters` minibatches with the given loss configuration.
/// When `variant` is EWTA the top-k follows the halving schedule across the
/// phase. Returns the trace entries recorded during the phase.
inline void run_wta_phase(SamplerModel& model, std::span<const ConditionedSample> data,
                          const TrainConfig& cfg, WtaConfig wta, std::size_t iters,
                          bool train_scales, std::size_t iter_offset, Rng& rng,
                          std::vector<TracePoint>& trace) {
    if (iters == 0) return;
    for (std::size_t it = 0; it < iters; ++it) {
        if (wta.variant == WtaVariant::EWTA) wta.top_k = ewta_schedule(it, iters, model.k());
        model.set_sigma_bound(cfg.sigma_bound_at(iter_offset + it));

        auto grads = model.net().zero_grads();
        double batch_loss = 0.0;
        for (std::size_t b = 0; b < cfg.batch; ++b) {
            const auto& sample = data[rng.index(data.size())];
            Mlp::Cache cache;
            const HypothesisSet hs = model.forward(sample.x, &cache);
            const WtaLossResult res = wta_loss_and_grad(hs, sample.y_hat, wta);
            batch_loss += res.loss;
            model.backward(cache, res.grad, grads, train_scales);
        }
        batch_loss /= static_cast<double>(cfg.batch);
        if (!std::isfinite(batch_loss))
            throw NumericalError("sampler training diverged at iteration " +
                                 std::to_string(iter_offset + it));
        grads.scale(1.0 / static_cast<double>(cfg.batch));
        model.net().sgd_step(grads, cfg.lr);
        if (it % cfg.trace_every == 0 || it + 1 == iters)
            trace.push_back({iter_offset + it, batch_loss});
    }
}

} // namespace detail

/// Sequential two-phase training: first the means under the Euclidean loss,
/// then (for a distribution-mode model) the scales under the unimodal NLL,
/// each phase running its own winner schedule.
inline TrainResult train_sampler(SamplerModel& model, std::span<const ConditionedSample> data,
                                 const TrainConfig& cfg, WtaConfig wta) {
    cfg.validate();
    wta.validate(model.k());
    if (data.empty()) throw std::invalid_argument("train_sampler: empty dataset");
    Rng rng(cfg.seed);
    TrainResult result;

    WtaConfig phase1 = wta;
    phase1.loss_kind = LossKind::ED;
    detail::run_wta_phase(model, data, cfg, phase1, cfg.phase1_iters, false, 0, rng,
                          result.trace);

    if (model.with_scales() && cfg.phase2_iters > 0) {
        WtaConfig phase2 = wta;
        phase2.loss_kind = LossKind::NLL;
        detail::run_wta_phase(model, data, cfg, phase2, cfg.phase2_iters, true,
                              cfg.phase1_iters, rng, result.trace);
    }
    return result;
}

} // namespace mmfp
