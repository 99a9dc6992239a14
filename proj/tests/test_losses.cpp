#include <gtest/gtest.h>

#include <cmath>

#include "mmfp/core/rng.hpp"
#include "mmfp/losses/wta.hpp"

using namespace mmfp;

namespace {

HypothesisSet random_hyps(Rng& rng, std::size_t k, bool with_scale) {
    HypothesisSet hs;
    for (std::size_t i = 0; i < k; ++i) {
        Hypothesis h;
        h.mu = {rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
        if (with_scale) h.scale = Vec2{rng.uniform(0.4, 3.0), rng.uniform(0.4, 3.0)};
        hs.hyps.push_back(h);
    }
    return hs;
}

// Distances well separated from each other and from zero, so neither the
// ED singularity nor a winner flip can disturb a finite-difference probe.
bool well_separated(const HypothesisSet& hs, const Vec2& y) {
    std::vector<double> d;
    for (const auto& h : hs.hyps) d.push_back((h.mu - y).norm());
    std::sort(d.begin(), d.end());
    if (d.front() < 1e-2) return false;
    for (std::size_t i = 0; i + 1 < d.size(); ++i)
        if (d[i + 1] - d[i] < 1e-3) return false;
    return true;
}

double loss_of_flat(const std::vector<double>& flat, std::size_t k, bool with_scale,
                    const Vec2& y, const WtaConfig& cfg) {
    HypothesisSet hs;
    const std::size_t stride = with_scale ? 4 : 2;
    for (std::size_t i = 0; i < k; ++i) {
        Hypothesis h;
        h.mu = {flat[i * stride], flat[i * stride + 1]};
        if (with_scale) h.scale = Vec2{flat[i * stride + 2], flat[i * stride + 3]};
        hs.hyps.push_back(h);
    }
    return wta_loss_and_grad(hs, y, cfg).loss;
}

void check_gradient(const HypothesisSet& hs, const Vec2& y, const WtaConfig& cfg) {
    const bool with_scale = hs.has_scales();
    const std::size_t stride = with_scale ? 4 : 2;
    std::vector<double> flat;
    for (const auto& h : hs.hyps) {
        flat.push_back(h.mu.x);
        flat.push_back(h.mu.y);
        if (with_scale) {
            flat.push_back(h.scale->x);
            flat.push_back(h.scale->y);
        }
    }
    const auto res = wta_loss_and_grad(hs, y, cfg);
    const double step = 1e-5;
    for (std::size_t p = 0; p < flat.size(); ++p) {
        auto hi = flat, lo = flat;
        hi[p] += step;
        lo[p] -= step;
        const double fd = (loss_of_flat(hi, hs.size(), with_scale, y, cfg) -
                           loss_of_flat(lo, hs.size(), with_scale, y, cfg)) /
                          (2.0 * step);
        const std::size_t i = p / stride, axis = p % stride;
        double analytic = 0.0;
        if (axis == 0) analytic = res.grad[i].d_mu.x;
        if (axis == 1) analytic = res.grad[i].d_mu.y;
        if (axis == 2) analytic = res.grad[i].d_scale.x;
        if (axis == 3) analytic = res.grad[i].d_scale.y;
        EXPECT_NEAR(analytic, fd, 1e-4 * std::max(1.0, std::abs(fd)))
            << "param " << p << " variant " << static_cast<int>(cfg.variant);
    }
}

} // namespace

TEST(PerHypLoss, EuclideanTriangle) {
    Hypothesis h{{3.0, 4.0}, std::nullopt};
    EXPECT_DOUBLE_EQ(per_hyp_loss(h, {0.0, 0.0}, LossKind::ED), 5.0);
}

TEST(PerHypLoss, GaussianNllAtMean) {
    Hypothesis h{{2.0, -1.0}, Vec2{1.0, 1.0}};
    EXPECT_NEAR(per_hyp_loss(h, {2.0, -1.0}, LossKind::NLL, ComponentKind::Gaussian),
                std::log(2.0 * M_PI), 1e-9);
}

TEST(PerHypLoss, LaplaceNllAtMean) {
    Hypothesis h{{2.0, -1.0}, Vec2{1.0, 1.0}};
    EXPECT_NEAR(per_hyp_loss(h, {2.0, -1.0}, LossKind::NLL, ComponentKind::Laplace),
                std::log(4.0), 1e-9);
}

TEST(PerHypLoss, NllWithoutScaleThrows) {
    Hypothesis h{{0.0, 0.0}, std::nullopt};
    EXPECT_THROW(per_hyp_loss(h, {0.0, 0.0}, LossKind::NLL), std::invalid_argument);
}

TEST(SelectWinners, WtaSingleWinner) {
    HypothesisSet hs;
    hs.hyps.push_back({{5.0, 0.0}, std::nullopt});
    hs.hyps.push_back({{1.0, 0.0}, std::nullopt});
    hs.hyps.push_back({{9.0, 0.0}, std::nullopt});
    WtaConfig cfg{.variant = WtaVariant::WTA};
    const auto w = select_winners(hs, {0.0, 0.0}, cfg).w;
    EXPECT_EQ(w, (std::vector<double>{0.0, 1.0, 0.0}));
}

TEST(SelectWinners, RwtaRelaxed) {
    HypothesisSet hs;
    hs.hyps.push_back({{5.0, 0.0}, std::nullopt});
    hs.hyps.push_back({{1.0, 0.0}, std::nullopt});
    hs.hyps.push_back({{9.0, 0.0}, std::nullopt});
    WtaConfig cfg{.variant = WtaVariant::RWTA, .epsilon = 0.05};
    const auto w = select_winners(hs, {0.0, 0.0}, cfg).w;
    EXPECT_NEAR(w[0], 0.05, 1e-12);
    EXPECT_NEAR(w[1], 0.90, 1e-12);
    EXPECT_NEAR(w[2], 0.05, 1e-12);
}

TEST(SelectWinners, EwtaTopTwo) {
    HypothesisSet hs;
    hs.hyps.push_back({{5.0, 0.0}, std::nullopt});
    hs.hyps.push_back({{1.0, 0.0}, std::nullopt});
    hs.hyps.push_back({{9.0, 0.0}, std::nullopt});
    WtaConfig cfg{.variant = WtaVariant::EWTA, .top_k = 2};
    const auto w = select_winners(hs, {0.0, 0.0}, cfg).w;
    EXPECT_EQ(w, (std::vector<double>{1.0, 1.0, 0.0}));
}

TEST(SelectWinners, TieBreaksByLowerIndex) {
    HypothesisSet hs;
    hs.hyps.push_back({{1.0, 0.0}, std::nullopt});
    hs.hyps.push_back({{-1.0, 0.0}, std::nullopt});
    WtaConfig cfg{.variant = WtaVariant::WTA};
    const auto w = select_winners(hs, {0.0, 0.0}, cfg).w;
    EXPECT_EQ(w, (std::vector<double>{1.0, 0.0}));
}

TEST(SelectWinners, RankingIgnoresLossKind) {
    Rng rng(31);
    for (int t = 0; t < 30; ++t) {
        const auto hs = random_hyps(rng, 6, true);
        const Vec2 y{rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
        WtaConfig ed{.variant = WtaVariant::EWTA, .top_k = 3, .loss_kind = LossKind::ED};
        WtaConfig nll{.variant = WtaVariant::EWTA, .top_k = 3, .loss_kind = LossKind::NLL};
        EXPECT_EQ(select_winners(hs, y, ed).w, select_winners(hs, y, nll).w);
    }
}

TEST(SelectWinners, WeightShapesAndSums) {
    Rng rng(32);
    for (int t = 0; t < 50; ++t) {
        const auto hs = random_hyps(rng, 8, false);
        const Vec2 y{rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
        const auto wta = select_winners(hs, y, {.variant = WtaVariant::WTA}).w;
        EXPECT_EQ(std::count(wta.begin(), wta.end(), 1.0), 1);
        EXPECT_EQ(std::count(wta.begin(), wta.end(), 0.0), 7);

        const auto rwta =
            select_winners(hs, y, {.variant = WtaVariant::RWTA, .epsilon = 0.05}).w;
        double sum = 0.0;
        for (double w : rwta) sum += w;
        EXPECT_NEAR(sum, 1.0, 1e-12);
        EXPECT_EQ(std::count(rwta.begin(), rwta.end(), 0.05), 7);

        const auto ewta =
            select_winners(hs, y, {.variant = WtaVariant::EWTA, .top_k = 3}).w;
        EXPECT_EQ(std::count(ewta.begin(), ewta.end(), 1.0), 3);
        EXPECT_EQ(std::count(ewta.begin(), ewta.end(), 0.0), 5);
    }
}

TEST(WtaLoss, SingleHypothesisEuclidean) {
    HypothesisSet hs;
    hs.hyps.push_back({{1.0, 0.0}, std::nullopt});
    WtaConfig cfg{.variant = WtaVariant::WTA, .loss_kind = LossKind::ED};
    const auto res = wta_loss_and_grad(hs, {0.0, 0.0}, cfg);
    EXPECT_DOUBLE_EQ(res.loss, 1.0);
    EXPECT_DOUBLE_EQ(res.grad[0].d_mu.x, 1.0);
    EXPECT_DOUBLE_EQ(res.grad[0].d_mu.y, 0.0);
}

TEST(WtaLoss, EdGradientZeroAtCoincidence) {
    HypothesisSet hs;
    hs.hyps.push_back({{2.0, 2.0}, std::nullopt});
    WtaConfig cfg{.variant = WtaVariant::WTA, .loss_kind = LossKind::ED};
    const auto res = wta_loss_and_grad(hs, {2.0, 2.0}, cfg);
    EXPECT_DOUBLE_EQ(res.grad[0].d_mu.x, 0.0);
    EXPECT_DOUBLE_EQ(res.grad[0].d_mu.y, 0.0);
}

TEST(WtaLoss, EwtaFullTopIsSumOfLosses) {
    Rng rng(33);
    const auto hs = random_hyps(rng, 5, false);
    const Vec2 y{0.5, -0.25};
    WtaConfig cfg{.variant = WtaVariant::EWTA, .top_k = 5, .loss_kind = LossKind::ED};
    const auto res = wta_loss_and_grad(hs, y, cfg);
    double expected = 0.0;
    for (const auto& h : hs.hyps) expected += (h.mu - y).norm();
    EXPECT_NEAR(res.loss, expected, 1e-12);
    for (const auto& g : res.grad) EXPECT_GT(g.d_mu.norm(), 0.0);
}

TEST(WtaLoss, GradientMatchesFiniteDifferences) {
    Rng rng(34);
    const std::vector<WtaConfig> configs = {
        {.variant = WtaVariant::WTA, .loss_kind = LossKind::ED},
        {.variant = WtaVariant::RWTA, .epsilon = 0.05, .loss_kind = LossKind::ED},
        {.variant = WtaVariant::EWTA, .top_k = 3, .loss_kind = LossKind::ED},
        {.variant = WtaVariant::WTA,
         .loss_kind = LossKind::NLL,
         .density_kind = ComponentKind::Gaussian},
        {.variant = WtaVariant::RWTA,
         .epsilon = 0.05,
         .loss_kind = LossKind::NLL,
         .density_kind = ComponentKind::Gaussian},
        {.variant = WtaVariant::EWTA,
         .top_k = 3,
         .loss_kind = LossKind::NLL,
         .density_kind = ComponentKind::Laplace},
    };
    for (const auto& cfg : configs) {
        int done = 0;
        while (done < 50) {
            const bool with_scale = cfg.loss_kind == LossKind::NLL;
            const auto hs = random_hyps(rng, 5, with_scale);
            const Vec2 y{rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
            if (!well_separated(hs, y)) continue;
            // Laplace NLL is non-differentiable where an axis hits the mean;
            // well_separated already keeps the means off the target.
            check_gradient(hs, y, cfg);
            ++done;
        }
    }
}

TEST(EwtaSchedule, EndpointsForEight) {
    EXPECT_EQ(ewta_schedule(0, 400, 8), 8u);
    EXPECT_EQ(ewta_schedule(399, 400, 8), 1u);
}

TEST(EwtaSchedule, StageSequenceForTen) {
    EXPECT_EQ(ewta_stage_values(10), (std::vector<std::size_t>{10, 5, 3, 2, 1}));
    EXPECT_EQ(ewta_stage_values(8), (std::vector<std::size_t>{8, 4, 2, 1}));
}

TEST(EwtaSchedule, MonotoneNonIncreasingAndReachesOne) {
    for (std::size_t k : {1u, 2u, 7u, 8u, 10u, 40u}) {
        const std::size_t total = 333;
        std::size_t prev = k + 1;
        for (std::size_t step = 0; step < total; ++step) {
            const std::size_t v = ewta_schedule(step, total, k);
            EXPECT_LE(v, prev);
            prev = v;
        }
        EXPECT_EQ(prev, 1u);
    }
}

TEST(EwtaSchedule, StepOutOfRangeThrows) {
    EXPECT_THROW(ewta_schedule(10, 10, 4), std::invalid_argument);
}
