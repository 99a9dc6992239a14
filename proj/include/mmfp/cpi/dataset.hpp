#pragma once

#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <string>
#include <vector>

#include "mmfp/core/sample.hpp"
#include "mmfp/cpi/sim.hpp"
#include "mmfp/io/binary.hpp"

namespace mmfp {
namespace cpi {

struct DatasetParams {
    std::size_t n_sequences = 2000;
    std::size_t futures_per_seq = 10;
    std::size_t test_conditions = 54;  // (sequence, actor) pairs; 2 per test sequence
    std::size_t dt = 20;
    std::size_t history = 2;  // h: frames kept before the current one
    std::size_t gt_rollouts = 20000;
    std::size_t gt_bins = 64;
    std::uint64_t seed = 1;

    std::string canonical() const {
        std::ostringstream os;
        os << "n_sequences=" << n_sequences << ";futures=" << futures_per_seq
           << ";test=" << test_conditions << ";dt=" << dt << ";h=" << history
           << ";gt_rollouts=" << gt_rollouts << ";gt_bins=" << gt_bins << ";seed=" << seed;
        return os.str();
    }
    std::uint64_t digest() const { return fnv1a64(canonical()); }
};

/// One observed history plus one sampled future for both actors.
struct SequenceRecord {
    std::uint64_t sequence = 0;
    std::uint64_t future = 0;
    std::vector<Vec2> ped_frames;  // h+1 positions, oldest first
    std::vector<Vec2> car_frames;
    Vec2 ped_future, car_future;
};

/// Evaluation condition: a record, the actor under prediction, and the
/// Monte-Carlo ground-truth density of that actor's location at t + dt.
struct TestCondition {
    SequenceRecord record;
    bool pedestrian = true;
    GridDensity gt{1, 1};
};

struct CpiDataset {
    DatasetParams params;
    std::vector<SequenceRecord> train;
    std::vector<TestCondition> test;

    std::size_t feature_dim() const { return 4 * (params.history + 1) + 1; }
};

/// Feature vector: both actors' positions over the h+1 frames, normalized to
/// [0,1] by the world size, plus one trailing actor-of-interest bit
/// (1 = pedestrian). Dimension 4(h+1) + 1.
inline std::vector<double> featurize(const SequenceRecord& rec, bool pedestrian,
                                     double world = kWorldSize) {
    std::vector<double> x;
    x.reserve(4 * rec.ped_frames.size() + 1);
    for (std::size_t t = 0; t < rec.ped_frames.size(); ++t) {
        x.push_back(rec.ped_frames[t].x / world);
        x.push_back(rec.ped_frames[t].y / world);
        x.push_back(rec.car_frames[t].x / world);
        x.push_back(rec.car_frames[t].y / world);
    }
    x.push_back(pedestrian ? 1.0 : 0.0);
    return x;
}

inline ConditionedSample conditioned_sample(const SequenceRecord& rec, bool pedestrian,
                                            double world = kWorldSize) {
    return {featurize(rec, pedestrian, world), pedestrian ? rec.ped_future : rec.car_future};
}

namespace detail {

// Disjoint stream spaces for the three generation stages.
enum class StreamKind : std::uint64_t { SeqInit = 1, Future = 2, GtRollout = 3 };

inline Rng stream_for(std::uint64_t seed, StreamKind kind, std::uint64_t index) {
    return Rng::stream(seed, (static_cast<std::uint64_t>(kind) << 48) | index);
}

struct RolledSequence {
    CpiWorld at_present;  // world after the history frames
    std::vector<Vec2> ped_frames, car_frames;
};

inline RolledSequence roll_history(const DatasetParams& p, std::uint64_t seq_index) {
    Rng rng = stream_for(p.seed, StreamKind::SeqInit, seq_index);
    RolledSequence out;
    CpiWorld w = init_world(rng);
    out.ped_frames.push_back(w.ped_pos);
    out.car_frames.push_back(w.car_pos);
    for (std::size_t t = 0; t < p.history; ++t) {
        step(w, rng);
        out.ped_frames.push_back(w.ped_pos);
        out.car_frames.push_back(w.car_pos);
    }
    out.at_present = std::move(w);
    return out;
}

inline SequenceRecord roll_future(const DatasetParams& p, const RolledSequence& seq,
                                  std::uint64_t seq_index, std::uint64_t future_index) {
    Rng rng = stream_for(p.seed, StreamKind::Future,
                         seq_index * p.futures_per_seq + future_index);
    CpiWorld w = seq.at_present;
    for (std::size_t t = 0; t < p.dt; ++t) step(w, rng);
    SequenceRecord rec;
    rec.sequence = seq_index;
    rec.future = future_index;
    rec.ped_frames = seq.ped_frames;
    rec.car_frames = seq.car_frames;
    rec.ped_future = w.ped_pos;
    rec.car_future = w.car_pos;
    return rec;
}

} // namespace detail

/// Generates the training split and the test conditions with Monte-Carlo
/// ground-truth grids. Every random draw comes from a stream keyed by
/// (seed, stage, index), so the result is reproducible and the ground-truth
/// rollouts can fan out across threads.
inline CpiDataset generate_dataset(const DatasetParams& params, std::size_t workers = 0) {
    CpiDataset ds;
    ds.params = params;
    for (std::uint64_t s = 0; s < params.n_sequences; ++s) {
        const auto seq = detail::roll_history(params, s);
        for (std::uint64_t f = 0; f < params.futures_per_seq; ++f)
            ds.train.push_back(detail::roll_future(params, seq, s, f));
    }

    const std::size_t n_test_seq = (params.test_conditions + 1) / 2;
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::future<std::vector<TestCondition>>> jobs;
    for (std::size_t chunk = 0; chunk < workers; ++chunk) {
        jobs.push_back(std::async(std::launch::async, [&, chunk] {
            std::vector<TestCondition> out;
            for (std::uint64_t i = chunk; i < n_test_seq; i += workers) {
                const std::uint64_t seq_index = params.n_sequences + i;  // disjoint from train
                const auto seq = detail::roll_history(params, seq_index);
                const auto rec = detail::roll_future(params, seq, seq_index, 0);
                const auto [ped_gt, car_gt] = gt_distribution(
                    seq.at_present, params.dt, params.gt_rollouts, params.gt_bins,
                    Rng::splitmix(params.seed ^
                                  (static_cast<std::uint64_t>(detail::StreamKind::GtRollout)
                                   << 56) ^
                                  seq_index));
                TestCondition ped{rec, true, ped_gt};
                TestCondition car{rec, false, car_gt};
                out.push_back(std::move(ped));
                out.push_back(std::move(car));
            }
            return out;
        }));
    }
    std::vector<TestCondition> all;
    for (auto& j : jobs)
        for (auto& c : j.get()) all.push_back(std::move(c));
    // Restore deterministic order regardless of worker interleaving.
    std::sort(all.begin(), all.end(), [](const TestCondition& a, const TestCondition& b) {
        if (a.record.sequence != b.record.sequence) return a.record.sequence < b.record.sequence;
        return a.pedestrian > b.pedestrian;
    });
    all.resize(params.test_conditions,
               TestCondition{SequenceRecord{}, true, GridDensity{1, 1}});
    ds.test = std::move(all);
    return ds;
}

namespace detail {

inline void write_record(BinaryWriter& w, const SequenceRecord& r) {
    w.u64(r.sequence);
    w.u64(r.future);
    w.u64(r.ped_frames.size());
    for (std::size_t t = 0; t < r.ped_frames.size(); ++t) {
        w.f64(r.ped_frames[t].x);
        w.f64(r.ped_frames[t].y);
        w.f64(r.car_frames[t].x);
        w.f64(r.car_frames[t].y);
    }
    w.f64(r.ped_future.x);
    w.f64(r.ped_future.y);
    w.f64(r.car_future.x);
    w.f64(r.car_future.y);
}

inline SequenceRecord read_record(BinaryReader& r) {
    SequenceRecord rec;
    rec.sequence = r.u64();
    rec.future = r.u64();
    const std::size_t frames = r.u64();
    for (std::size_t t = 0; t < frames; ++t) {
        rec.ped_frames.push_back({r.f64(), r.f64()});
        rec.car_frames.push_back({r.f64(), r.f64()});
    }
    rec.ped_future = {r.f64(), r.f64()};
    rec.car_future = {r.f64(), r.f64()};
    return rec;
}

} // namespace detail

/// Writes manifest.txt, train.bin and test.bin under `dir`. The manifest is
/// plain key=value text recording every generation parameter, the scene
/// geometry, and the raw (pre-normalization) weights of the car's
/// out-of-crossing action row.
inline void save_dataset(const CpiDataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream m(dir + "/manifest.txt");
        const Regions rg = Regions::standard();
        m << "format=cpi-dataset-v1\n";
        m << "config_digest=" << ds.params.digest() << "\n";
        m << "world_size=" << rg.world << "\n";
        m << "pedestrian_box=" << kPedBox << "\n";
        m << "car_box=" << kCarBox << "\n";
        m << "step_length=" << kStepLength << "\n";
        const auto dump = [&m](const char* name, const RectUnion& u) {
            m << name << "=";
            for (std::size_t i = 0; i < u.rects().size(); ++i) {
                const auto& r = u.rects()[i];
                m << (i ? " " : "") << r.x0 << "," << r.y0 << "," << r.x1 << "," << r.y1;
            }
            m << "\n";
        };
        dump("region_vehicle", rg.vehicle);
        dump("region_shared", rg.shared);
        dump("region_pavement", rg.pavement);
        m << "region_crossing=" << rg.crossing.x0 << "," << rg.crossing.y0 << ","
          << rg.crossing.x1 << "," << rg.crossing.y1 << "\n";
        m << "n_sequences=" << ds.params.n_sequences << "\n";
        m << "futures_per_seq=" << ds.params.futures_per_seq << "\n";
        m << "test_conditions=" << ds.params.test_conditions << "\n";
        m << "dt=" << ds.params.dt << "\n";
        m << "history=" << ds.params.history << "\n";
        m << "gt_rollouts=" << ds.params.gt_rollouts << "\n";
        m << "gt_bins=" << ds.params.gt_bins << "\n";
        m << "seed=" << ds.params.seed << "\n";
        // The source table lists these weights summing to 1.1; they are
        // renormalized in the policy and recorded raw here.
        m << "car_oc_raw_weights=" << kCarOcContinueRaw << "," << kCarOcStopRaw << "\n";
    }
    {
        BinaryWriter w(dir + "/train.bin");
        w.magic("CPITRN1\0");
        w.u64(ds.params.digest());
        w.u64(ds.train.size());
        for (const auto& r : ds.train) detail::write_record(w, r);
    }
    {
        BinaryWriter w(dir + "/test.bin");
        w.magic("CPITST1\0");
        w.u64(ds.params.digest());
        w.u64(ds.test.size());
        for (const auto& c : ds.test) {
            detail::write_record(w, c.record);
            w.u8(c.pedestrian ? 1 : 0);
            w.u32(static_cast<std::uint32_t>(c.gt.width()));
            w.u32(static_cast<std::uint32_t>(c.gt.height()));
            w.f64_vec(c.gt.mass());
        }
    }
}

inline CpiDataset load_dataset(const std::string& dir) {
    CpiDataset ds;
    {
        std::ifstream m(dir + "/manifest.txt");
        if (!m) throw std::runtime_error("missing manifest: " + dir);
        std::string line;
        while (std::getline(m, line)) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
            if (key == "n_sequences") ds.params.n_sequences = std::stoull(val);
            if (key == "futures_per_seq") ds.params.futures_per_seq = std::stoull(val);
            if (key == "test_conditions") ds.params.test_conditions = std::stoull(val);
            if (key == "dt") ds.params.dt = std::stoull(val);
            if (key == "history") ds.params.history = std::stoull(val);
            if (key == "gt_rollouts") ds.params.gt_rollouts = std::stoull(val);
            if (key == "gt_bins") ds.params.gt_bins = std::stoull(val);
            if (key == "seed") ds.params.seed = std::stoull(val);
        }
    }
    {
        BinaryReader r(dir + "/train.bin");
        r.expect_magic("CPITRN1\0");
        r.u64();  // digest, informational
        const std::size_t n = r.u64();
        for (std::size_t i = 0; i < n; ++i) ds.train.push_back(detail::read_record(r));
    }
    {
        BinaryReader r(dir + "/test.bin");
        r.expect_magic("CPITST1\0");
        r.u64();
        const std::size_t n = r.u64();
        for (std::size_t i = 0; i < n; ++i) {
            TestCondition c{detail::read_record(r), r.u8() != 0, GridDensity{1, 1}};
            const std::size_t w = r.u32(), h = r.u32();
            GridDensity g(w, h, 0, 0, kWorldSize, kWorldSize);
            g.mass() = r.f64_vec();
            g.normalize();
            c.gt = std::move(g);
            ds.test.push_back(std::move(c));
        }
    }
    return ds;
}

} // namespace cpi
} // namespace mmfp
