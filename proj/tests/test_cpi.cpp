#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "mmfp/cpi/dataset.hpp"
#include "mmfp/cpi/sim.hpp"

using namespace mmfp;
using namespace mmfp::cpi;

namespace {

RectUnion walkable_union(const Regions& rg) {
    auto rects = rg.pavement.rects();
    for (const auto& r : rg.shared.rects()) rects.push_back(r);
    return RectUnion(std::move(rects));
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST(Regions, CrossingInsideVehicleArea) {
    const Regions rg = Regions::standard();
    EXPECT_TRUE(rg.vehicle.covers(rg.crossing));
    // zebras meet both the crossing and the pavement
    EXPECT_TRUE(rg.shared.intersects(rg.crossing));
    for (const auto& block : rg.pavement.rects()) EXPECT_TRUE(rg.shared.intersects(block));
}

TEST(Regions, PixelOverlapMatchesBruteForce) {
    const Regions rg = Regions::standard();
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const Rect box = actor_box({rng.uniform(10, 246), rng.uniform(10, 246)}, kPedBox);
        long brute = 0;
        for (int i = 0; i < 256; ++i) {
            for (int j = 0; j < 256; ++j) {
                const double cx = i + 0.5, cy = j + 0.5;
                if (cx < box.x0 || cx >= box.x1 || cy < box.y0 || cy >= box.y1) continue;
                bool inside = false;
                for (const auto& r : rg.shared.rects())
                    if (cx >= r.x0 && cx < r.x1 && cy >= r.y0 && cy < r.y1) inside = true;
                if (inside) ++brute;
            }
        }
        EXPECT_EQ(rg.shared.pixel_overlap(box), brute);
    }
}

TEST(Regions, CoversAgreesWithSampling) {
    const Regions rg = Regions::standard();
    const RectUnion walkable = walkable_union(rg);
    Rng rng(4);
    for (int t = 0; t < 100; ++t) {
        const Rect box = actor_box({rng.uniform(10, 246), rng.uniform(10, 246)}, kPedBox);
        bool sampled_inside = true;
        for (int s = 0; s < 400 && sampled_inside; ++s) {
            const double px = box.x0 + rng.uniform() * (box.x1 - box.x0);
            const double py = box.y0 + rng.uniform() * (box.y1 - box.y0);
            bool covered = false;
            for (const auto& r : walkable.rects())
                if (px >= r.x0 && px < r.x1 && py >= r.y0 && py < r.y1) covered = true;
            sampled_inside = covered;
        }
        if (walkable.covers(box)) {
            EXPECT_TRUE(sampled_inside);
        } else if (sampled_inside) {
            // Random probing may miss a thin uncovered sliver; only the
            // covers() == true direction is exact.
            SUCCEED();
        }
    }
}

TEST(InitWorld, ContainmentHoldsOnEverySeed) {
    const Regions rg = Regions::standard();
    const RectUnion walkable = walkable_union(rg);
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        Rng rng(seed);
        const CpiWorld w = init_world(rng);
        ASSERT_TRUE(walkable.covers(w.ped_box())) << "seed " << seed;
        ASSERT_TRUE(rg.vehicle.covers(w.car_box())) << "seed " << seed;
    }
}

TEST(InitWorld, DeterministicUnderSeed) {
    Rng a(77), b(77);
    const CpiWorld wa = init_world(a), wb = init_world(b);
    EXPECT_TRUE(wa.ped_pos == wb.ped_pos);
    EXPECT_TRUE(wa.car_pos == wb.car_pos);
    EXPECT_EQ(wa.ped_state, wb.ped_state);
    EXPECT_TRUE(wa.car_last_action == wb.car_last_action);
}

TEST(InitWorld, PedestrianNeverOnBareRoad) {
    // box subset of R_P union R_S implies any road overlap lies inside R_S
    const Regions rg = Regions::standard();
    for (std::uint64_t seed = 0; seed < 2000; ++seed) {
        Rng rng(seed * 13 + 1);
        const CpiWorld w = init_world(rng);
        for (const auto& band : rg.vehicle.rects()) {
            const Rect piece = band.intersection(w.ped_box());
            if (piece.empty()) continue;
            ASSERT_TRUE(rg.shared.covers(piece)) << "seed " << seed;
        }
    }
}

TEST(StepStates, PedestrianAwayFromZebraIsTowardsCrossing) {
    Rng rng(1);
    CpiWorld w = init_world(rng);
    w.ped_pos = {50.0, 50.0};  // NW pavement block, clear of both zebras
    w.ped_hist.clear();
    EXPECT_EQ(step_states(w).first, PedState::TC);
}

TEST(StepStates, CarFullyInsideCrossingStartsCrossing) {
    Rng rng(2);
    CpiWorld w = init_world(rng);
    w.car_pos = {128.0, 128.0};
    w.car_hist.clear();
    EXPECT_EQ(step_states(w).second, CarState::C);
}

TEST(StepStates, PedestrianOnPavementAfterCrossingFinishes) {
    Rng rng(3);
    CpiWorld w = init_world(rng);
    w.ped_pos = {50.0, 50.0};
    w.ped_hist = {PedState::C};
    EXPECT_EQ(step_states(w).first, PedState::FC);
}

TEST(StepStates, WaitingCornerIsStartCrossing) {
    Rng rng(4);
    CpiWorld w = init_world(rng);
    w.ped_pos = {70.0, 70.0};  // touches NW block and the zebra overhang
    w.ped_hist.clear();
    EXPECT_EQ(step_states(w).first, PedState::SC);
}

TEST(ActionDistribution, PedestrianWaitsWhileCarIsNear) {
    Rng rng(5);
    CpiWorld w = init_world(rng);
    w.ped_pos = {70.0, 70.0};
    w.ped_hist.clear();
    w.car_pos = {128.0, 50.0};  // touching the north zebra, not inside R_X
    w.car_hist.clear();
    const auto [ps, cs] = step_states(w);
    ASSERT_EQ(ps, PedState::SC);
    ASSERT_EQ(cs, CarState::SC);
    w.ped_state = ps;
    w.car_state = cs;
    const ActionMixture m = pedestrian_action_distribution(w);
    ASSERT_EQ(m.components.size(), 1u);
    EXPECT_TRUE(m.components[0].mu == (Vec2{0.0, 0.0}));
    EXPECT_EQ(m.components[0].sigma, 0.0);
    EXPECT_EQ(m.components[0].pi, 1.0);
}

TEST(ActionDistribution, TowardsCrossingUsesTwoBestCornerMoves) {
    Rng rng(6);
    CpiWorld w = init_world(rng);
    w.ped_pos = {50.0, 50.0};
    w.ped_hist.clear();
    w.ped_state = PedState::TC;
    const ActionMixture m = pedestrian_action_distribution(w);
    ASSERT_EQ(m.components.size(), 2u);
    EXPECT_DOUBLE_EQ(m.components[0].pi, 0.7);
    EXPECT_DOUBLE_EQ(m.components[1].pi, 0.3);
    EXPECT_DOUBLE_EQ(m.components[0].sigma, 2.0);
    // brute-force the two corner-approaching displacements
    const auto dirs = pedestrian_directions();
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < dirs.size(); ++i)
        scored.push_back({w.regions.dtc(w.ped_pos + dirs[i]), i});
    std::stable_sort(scored.begin(), scored.end());
    EXPECT_TRUE(m.components[0].mu == dirs[scored[0].second]);
    EXPECT_TRUE(m.components[1].mu == dirs[scored[1].second]);
}

TEST(ActionDistribution, CrossingCarTakesThreeSmallestTurns) {
    Rng rng(7);
    CpiWorld w = init_world(rng);
    w.car_pos = {128.0, 128.0};
    w.car_hist.clear();
    w.car_state = CarState::C;
    w.car_last_action = {0.0, 10.0};
    w.ped_state = PedState::TC;  // car only yields to a crossing pedestrian
    const ActionMixture m = car_action_distribution(w);
    ASSERT_EQ(m.components.size(), 3u);
    for (const auto& c : m.components) {
        EXPECT_NEAR(c.pi, 1.0 / 3.0, 1e-12);
        EXPECT_DOUBLE_EQ(c.sigma, 2.0);
        EXPECT_NE(angle_diff(c.mu, w.car_last_action), 180.0);  // reverse excluded
    }
}

TEST(ActionDistribution, SigmaPositiveRowsUseUnitDirections) {
    // every stochastic component's mean is one of the magnitude-10 candidates
    Rng rng(8);
    for (int t = 0; t < 300; ++t) {
        CpiWorld w = init_world(rng);
        for (int s = 0; s < 5; ++s) step(w, rng);
        for (const auto& mix :
             {pedestrian_action_distribution(w), car_action_distribution(w)}) {
            for (const auto& c : mix.components) {
                if (c.sigma > 0.0) EXPECT_NEAR(c.mu.norm(), kStepLength, 1e-9);
            }
        }
    }
}

TEST(Step, DeterministicRowMovesExactly) {
    Rng rng(9);
    CpiWorld w = init_world(rng);
    w.ped_pos = {70.0, 70.0};
    w.ped_hist.clear();
    w.car_pos = {128.0, 50.0};
    w.car_hist.clear();
    const auto [ps, cs] = step_states(w);
    w.ped_state = ps;
    w.car_state = cs;
    ASSERT_EQ(ps, PedState::SC);
    const Vec2 before = w.ped_pos;
    step(w, rng);
    EXPECT_TRUE(w.ped_pos == before);  // the wait row is exact (0,0)
}

TEST(Step, RolloutDeterministicUnderSeed) {
    Rng a(10), b(10);
    CpiWorld wa = init_world(a), wb = init_world(b);
    for (int s = 0; s < 20; ++s) {
        step(wa, a);
        step(wb, b);
    }
    EXPECT_TRUE(wa.ped_pos == wb.ped_pos);
    EXPECT_TRUE(wa.car_pos == wb.car_pos);
    EXPECT_EQ(wa.ped_hist.size(), wb.ped_hist.size());
    for (std::size_t i = 0; i < wa.ped_hist.size(); ++i)
        EXPECT_EQ(wa.ped_hist[i], wb.ped_hist[i]);
}

TEST(Step, SoakRunsWithoutRuleGapsAndBoxesStayInWorld) {
    for (std::uint64_t r = 0; r < 1000; ++r) {
        Rng rng(40000 + r);
        CpiWorld w = init_world(rng);
        for (int s = 0; s < 40; ++s) {
            ASSERT_NO_THROW(step(w, rng)) << "seed " << r;
            const Rect pb = w.ped_box(), cb = w.car_box();
            ASSERT_GE(pb.x0, 0.0);
            ASSERT_LE(pb.x1, kWorldSize);
            ASSERT_GE(cb.y0, 0.0);
            ASSERT_LE(cb.y1, kWorldSize);
        }
    }
}

TEST(Step, PedestrianStateProgression) {
    // C never skipped before FC; the full chain appears across rollouts
    int full_chains = 0;
    for (std::uint64_t r = 0; r < 2000; ++r) {
        Rng rng(90000 + r);
        CpiWorld w = init_world(rng);
        for (int s = 0; s < 60; ++s) step(w, rng);
        long first_c = -1, first_fc = -1;
        for (std::size_t i = 0; i < w.ped_hist.size(); ++i) {
            if (w.ped_hist[i] == PedState::C && first_c < 0) first_c = static_cast<long>(i);
            if (w.ped_hist[i] == PedState::FC && first_fc < 0) first_fc = static_cast<long>(i);
        }
        if (first_fc >= 0) ASSERT_GT(first_fc, first_c) << "seed " << r;
        const std::vector<PedState> want{PedState::TC, PedState::SC, PedState::C, PedState::FC,
                                         PedState::AC};
        std::size_t k = 0;
        for (const auto s : w.ped_hist)
            if (k < want.size() && s == want[k]) ++k;
        if (k == want.size()) ++full_chains;
    }
    EXPECT_GT(full_chains, 100);
}

TEST(Step, InteractionInvariantTenThousandDraws) {
    // whenever s_P = SC and the car is anywhere near the crossing, the sampled
    // pedestrian action is exactly (0,0)
    long events = 0;
    std::uint64_t r = 0;
    while (events < 10000) {
        Rng rng(123456 + r++);
        CpiWorld w = init_world(rng);
        for (int s = 0; s < 40; ++s) {
            if (w.ped_state == PedState::SC && w.car_state != CarState::OC) {
                Rng probe(rng.raw());
                const Vec2 a = pedestrian_action_distribution(w).sample(probe);
                ASSERT_TRUE(a == (Vec2{0.0, 0.0}));
                ++events;
            }
            step(w, rng);
        }
        ASSERT_LT(r, 20000u) << "interaction events too rare";
    }
    SUCCEED() << events << " waiting actions checked";
}

TEST(GtDistribution, ZeroHorizonIsCurrentBin) {
    Rng rng(11);
    const CpiWorld w = init_world(rng);
    const auto [ped, car] = gt_distribution(w, 0, 100, 64, 5);
    GridDensity probe(64, 64);
    EXPECT_DOUBLE_EQ(ped.mass()[probe.bin_of(w.ped_pos)], 1.0);
    EXPECT_DOUBLE_EQ(car.mass()[probe.bin_of(w.car_pos)], 1.0);
}

TEST(GtDistribution, WaitingPedestrianStaysSingleBin) {
    Rng rng(12);
    CpiWorld w = init_world(rng);
    w.ped_pos = {70.0, 70.0};
    w.ped_hist.clear();
    w.car_pos = {128.0, 210.0};  // far south on the vertical road, driving away
    w.car_hist = {CarState::OC};
    w.car_last_action = {0.0, 10.0};
    // re-evaluate states, then freeze the car by keeping it 'SC-adjacent'?
    // Instead: pedestrian SC with car approaching keeps sigma = 0 while the
    // car stays out of OC; pick a car inside the crossing band to hold SC.
    w.car_pos = {128.0, 128.0};
    w.car_hist.clear();
    const auto [ps, cs] = step_states(w);
    w.ped_state = ps;
    w.car_state = cs;
    ASSERT_EQ(ps, PedState::SC);
    // One step: pedestrian action is the deterministic wait.
    const auto [ped, car] = gt_distribution(w, 1, 500, 64, 6);
    GridDensity probe(64, 64);
    EXPECT_DOUBLE_EQ(ped.mass()[probe.bin_of(w.ped_pos)], 1.0);
}

TEST(GtDistribution, MonteCarloSelfConsistency) {
    // Expected TV between two n-sample histograms is ~ sum_i sqrt(p_i / n);
    // with the worlds spreading over <= ~60 of the 16x16 bins at dt = 20 this
    // stays under 0.02 at n = 1e5.
    Rng rng(13);
    const CpiWorld w = init_world(rng);
    const auto [p1, c1] = gt_distribution(w, 20, 100000, 16, 100);
    const auto [p2, c2] = gt_distribution(w, 20, 100000, 16, 200);
    double tv_p = 0.0, tv_c = 0.0;
    for (std::size_t i = 0; i < p1.bins(); ++i) {
        tv_p += std::abs(p1.mass()[i] - p2.mass()[i]);
        tv_c += std::abs(c1.mass()[i] - c2.mass()[i]);
    }
    EXPECT_LT(tv_p / 2.0, 0.02);
    EXPECT_LT(tv_c / 2.0, 0.02);
    EXPECT_NEAR(p1.total_mass(), 1.0, 1e-9);
    EXPECT_NEAR(c1.total_mass(), 1.0, 1e-9);
}

TEST(Featurize, DimensionAndRange) {
    SequenceRecord rec;
    rec.ped_frames = {{0.0, 0.0}, {128.0, 128.0}, {256.0, 256.0}};
    rec.car_frames = {{256.0, 0.0}, {0.0, 256.0}, {128.0, 0.0}};
    rec.ped_future = {10.0, 10.0};
    rec.car_future = {20.0, 20.0};
    const auto x = featurize(rec, true);
    ASSERT_EQ(x.size(), 13u);  // 4*(h+1)+1 with h=2
    EXPECT_DOUBLE_EQ(x[0], 0.0);
    EXPECT_DOUBLE_EQ(x[2], 1.0);  // car corner maps to 1
    EXPECT_DOUBLE_EQ(x[12], 1.0);
    const auto xc = featurize(rec, false);
    EXPECT_DOUBLE_EQ(xc[12], 0.0);
    // futures do not enter the features
    SequenceRecord other = rec;
    other.ped_future = {999.0, 999.0};
    EXPECT_EQ(featurize(other, true), x);
}

TEST(Dataset, GenerateCountsAndDeterminism) {
    DatasetParams p;
    p.n_sequences = 12;
    p.futures_per_seq = 3;
    p.test_conditions = 4;
    p.dt = 8;
    p.gt_rollouts = 300;
    p.gt_bins = 32;
    p.seed = 42;
    const CpiDataset a = generate_dataset(p, 2);
    EXPECT_EQ(a.train.size(), 36u);
    EXPECT_EQ(a.test.size(), 4u);
    EXPECT_EQ(a.feature_dim(), 13u);
    const CpiDataset b = generate_dataset(p, 1);  // worker count must not matter
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        EXPECT_TRUE(a.train[i].ped_future == b.train[i].ped_future);
        EXPECT_TRUE(a.train[i].car_future == b.train[i].car_future);
    }
    for (std::size_t i = 0; i < a.test.size(); ++i) {
        EXPECT_EQ(a.test[i].pedestrian, b.test[i].pedestrian);
        EXPECT_EQ(a.test[i].gt.mass(), b.test[i].gt.mass());
    }
}

TEST(Dataset, DefaultsMatchDeskScale) {
    DatasetParams p;
    EXPECT_EQ(p.n_sequences, 2000u);
    EXPECT_EQ(p.futures_per_seq, 10u);   // 20000 train records
    EXPECT_EQ(p.test_conditions, 54u);
    EXPECT_EQ(p.dt, 20u);
    EXPECT_EQ(p.gt_rollouts, 20000u);
}

TEST(Dataset, SaveLoadRoundTripAndByteIdenticalRegeneration) {
    namespace fs = std::filesystem;
    DatasetParams p;
    p.n_sequences = 6;
    p.futures_per_seq = 2;
    p.test_conditions = 2;
    p.dt = 5;
    p.gt_rollouts = 100;
    p.gt_bins = 16;
    p.seed = 7;
    const auto dir_a = fs::temp_directory_path() / "mmfp_ds_a";
    const auto dir_b = fs::temp_directory_path() / "mmfp_ds_b";
    save_dataset(generate_dataset(p, 2), dir_a.string());
    save_dataset(generate_dataset(p, 1), dir_b.string());
    for (const char* f : {"manifest.txt", "train.bin", "test.bin"}) {
        EXPECT_EQ(file_bytes((dir_a / f).string()), file_bytes((dir_b / f).string())) << f;
    }
    const CpiDataset loaded = load_dataset(dir_a.string());
    EXPECT_EQ(loaded.train.size(), 12u);
    EXPECT_EQ(loaded.test.size(), 2u);
    EXPECT_EQ(loaded.params.dt, 5u);
    EXPECT_TRUE(loaded.train[3].ped_future ==
                generate_dataset(p, 2).train[3].ped_future);
    EXPECT_NEAR(loaded.test[0].gt.total_mass(), 1.0, 1e-9);
}
