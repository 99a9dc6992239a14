#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "mmfp/core/grid.hpp"
#include "mmfp/core/rng.hpp"
#include "mmfp/core/vec2.hpp"
#include "mmfp/cpi/regions.hpp"

namespace mmfp {
namespace cpi {

inline constexpr double kPedBox = 20.0;
inline constexpr double kCarBox = 40.0;
inline constexpr double kStepLength = 10.0;

enum class PedState { TC, SC, C, FC, AC };
enum class CarState { SC, C, FC, OC };

inline const char* to_string(PedState s) {
    switch (s) {
        case PedState::TC: return "TC";
        case PedState::SC: return "SC";
        case PedState::C: return "C";
        case PedState::FC: return "FC";
        case PedState::AC: return "AC";
    }
    return "?";
}

inline const char* to_string(CarState s) {
    switch (s) {
        case CarState::SC: return "SC";
        case CarState::C: return "C";
        case CarState::FC: return "FC";
        case CarState::OC: return "OC";
    }
    return "?";
}

/// Action model of one policy rule row: a small mixture over displacements.
/// sigma = 0 entries are deterministic moves, so this is looser than the core
/// MixtureDistribution (which requires positive scales).
struct ActionMixture {
    struct Component {
        double pi;
        Vec2 mu;
        double sigma;  // isotropic per-axis std-dev, 0 = Dirac
    };
    std::vector<Component> components;

    Vec2 sample(Rng& rng) const {
        std::vector<double> w;
        w.reserve(components.size());
        for (const auto& c : components) w.push_back(c.pi);
        const auto& c = components[rng.categorical(w)];
        if (c.sigma == 0.0) return c.mu;
        return rng.normal2(c.mu, {c.sigma, c.sigma});
    }
};

/// Candidate displacement sets: v(gamma) = 10 (sin gamma, cos gamma), the
/// pedestrian every 45 degrees, the car every 90 degrees.
inline std::vector<Vec2> pedestrian_directions() {
    std::vector<Vec2> dirs;
    for (int k = 0; k < 8; ++k) {
        const double g = k * 45.0 * M_PI / 180.0;
        dirs.push_back({kStepLength * std::sin(g), kStepLength * std::cos(g)});
    }
    return dirs;
}

inline std::vector<Vec2> car_directions() {
    std::vector<Vec2> dirs;
    for (int k = 0; k < 4; ++k) {
        const double g = k * 90.0 * M_PI / 180.0;
        dirs.push_back({kStepLength * std::sin(g), kStepLength * std::cos(g)});
    }
    return dirs;
}

/// Angle difference between two displacement vectors, in degrees [0, 180].
/// Zero vectors compare equal to everything (ties then break by list order).
inline double angle_diff(const Vec2& a, const Vec2& b) {
    const double na = a.norm(), nb = b.norm();
    if (na < 1e-12 || nb < 1e-12) return 0.0;
    const double c = std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
    return std::acos(c) * 180.0 / M_PI;
}

/// Pedestrian and car poses, state histories and last actions. Positions are
/// box centers; the boxes are 20 px (pedestrian) and 40 px (car) and stay
/// inside the world.
struct CpiWorld {
    Regions regions = Regions::standard();
    Vec2 ped_pos, car_pos;
    PedState ped_state = PedState::TC;
    CarState car_state = CarState::OC;
    std::vector<PedState> ped_hist;  // states up to and including the current step
    std::vector<CarState> car_hist;
    Vec2 ped_last_action, car_last_action;  // a_{t-1}; heading draw before the first step
    std::size_t t = 0;

    Rect ped_box() const { return actor_box(ped_pos, kPedBox); }
    Rect car_box() const { return actor_box(car_pos, kCarBox); }

    bool ped_crossed() const {
        return std::find(ped_hist.begin(), ped_hist.end(), PedState::C) != ped_hist.end();
    }
    bool car_crossed() const {
        return std::find(car_hist.begin(), car_hist.end(), CarState::C) != car_hist.end();
    }
};

/// First-match state rules. The history test "C in h" looks at states strictly
/// before the one being computed.
///
/// Pedestrian rows: TC / SC / FC / C / AC. As printed in the source material
/// the SC row tests only zebra contact, which makes state C unreachable (SC
/// would shadow it forever); SC here additionally requires pavement contact,
/// i.e. the pedestrian still stands at the corner. Once the box is fully on
/// the zebra the C row fires.
inline PedState ped_state_rule(const CpiWorld& w, bool crossed_before) {
    const Rect box = w.ped_box();
    const bool on_shared = inter(box, w.regions.shared);
    const bool on_pavement = inter(box, w.regions.pavement);
    if (!on_shared && !crossed_before) return PedState::TC;
    if (on_shared && on_pavement && !crossed_before) return PedState::SC;
    if (on_pavement && crossed_before) return PedState::FC;
    if (on_shared) return PedState::C;
    if (!on_shared && crossed_before) return PedState::AC;
    throw std::logic_error("cpi: no pedestrian state rule matched");
}

/// Car rows: C / SC / FC / OC, with within(box, R_X) = box fully inside the
/// crossing. The zebra straddle guarantees a box inside R_X touches R_S, so
/// the rows cover every configuration.
inline CarState car_state_rule(const CpiWorld& w, bool crossed_before) {
    const Rect box = w.car_box();
    const bool in_crossing = within(box, w.regions.crossing);
    const bool on_shared = inter(box, w.regions.shared);
    if (in_crossing && !crossed_before) return CarState::C;
    if (on_shared && !crossed_before) return CarState::SC;
    if (on_shared && crossed_before) return CarState::FC;
    if (!in_crossing) return CarState::OC;
    throw std::logic_error("cpi: no car state rule matched");
}

/// Re-evaluates both state rules against the current world.
inline std::pair<PedState, CarState> step_states(const CpiWorld& w) {
    return {ped_state_rule(w, w.ped_crossed()), car_state_rule(w, w.car_crossed())};
}

namespace detail {

/// Indices of candidate actions ordered by score ascending, ties by index.
template <typename ScoreFn>
std::vector<std::size_t> order_by(const std::vector<Vec2>& candidates, ScoreFn&& score) {
    std::vector<std::size_t> idx(candidates.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::vector<double> s(candidates.size());
    for (std::size_t i = 0; i < idx.size(); ++i) s[i] = score(candidates[i]);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });
    return idx;
}

} // namespace detail

/// Pixels of the actor box overlapping `region` once `action` is applied.
inline long ov(const Rect& box, const Vec2& action, const RectUnion& region) {
    const Rect moved{box.x0 + action.x, box.y0 + action.y, box.x1 + action.x,
                     box.y1 + action.y};
    return region.pixel_overlap(moved);
}

namespace detail {

/// Overlap as a percentage of the box area. The action scores combine an
/// angle difference in degrees with this term; expressed in raw pixels the
/// overlap swing (0..400 for the pedestrian box) would dwarf every turn
/// penalty and pin actors to region boundaries, so the percentage scale is
/// what keeps the walk-away states reachable.
inline double ov_pct(const Rect& box, const Vec2& action, const RectUnion& region) {
    const double area = (box.x1 - box.x0) * (box.y1 - box.y0);
    return 100.0 * static_cast<double>(ov(box, action, region)) / area;
}

} // namespace detail

/// Pedestrian action table. Rows keyed on (s_P, s_C), first match:
///   TC,*          two best corner-approaching moves, pi = (0.7, 0.3)
///   SC,{SC,C,FC}  wait exactly (0, 0)
///   SC,OC         continue onto the zebra
///   C,*           continue crossing (direction weighted twice)
///   FC,*          continue onto the pavement
///   AC,*          four most corner-distant moves, pi = (0.4, 0.2, 0.2, 0.2)
inline ActionMixture pedestrian_action_distribution(const CpiWorld& w) {
    static const std::vector<Vec2> dirs = pedestrian_directions();
    const Regions& rg = w.regions;
    const Rect box = w.ped_box();
    ActionMixture m;
    switch (w.ped_state) {
        case PedState::TC: {
            const auto order = detail::order_by(
                dirs, [&](const Vec2& a) { return rg.dtc(w.ped_pos + a); });
            m.components = {{0.7, dirs[order[0]], 2.0}, {0.3, dirs[order[1]], 2.0}};
            break;
        }
        case PedState::SC: {
            if (w.car_state != CarState::OC) {
                m.components = {{1.0, {0.0, 0.0}, 0.0}};
            } else {
                const auto order = detail::order_by(dirs, [&](const Vec2& a) {
                    return angle_diff(a, w.ped_last_action) - detail::ov_pct(box, a, rg.shared);
                });
                m.components = {{1.0, dirs[order[0]], 2.0}};
            }
            break;
        }
        case PedState::C: {
            const auto order = detail::order_by(dirs, [&](const Vec2& a) {
                return 2.0 * angle_diff(a, w.ped_last_action) - detail::ov_pct(box, a, rg.shared);
            });
            m.components = {{1.0, dirs[order[0]], 2.0}};
            break;
        }
        case PedState::FC: {
            const auto order = detail::order_by(dirs, [&](const Vec2& a) {
                return angle_diff(a, w.ped_last_action) - detail::ov_pct(box, a, rg.pavement);
            });
            m.components = {{1.0, dirs[order[0]], 2.0}};
            break;
        }
        case PedState::AC: {
            const auto order = detail::order_by(
                dirs, [&](const Vec2& a) { return -rg.dtc(w.ped_pos + a); });
            m.components = {{0.4, dirs[order[0]], 2.0},
                            {0.2, dirs[order[1]], 2.0},
                            {0.2, dirs[order[2]], 2.0},
                            {0.2, dirs[order[3]], 2.0}};
            break;
        }
    }
    return m;
}

/// Raw weights of the car's continue-or-stop row when out of the crossing;
/// they do not sum to 1 in the source table and are renormalized here (the
/// dataset manifest records the raw values).
inline constexpr double kCarOcContinueRaw = 0.8;
inline constexpr double kCarOcStopRaw = 0.3;

/// Car action table, first match on (s_P, s_C):
///   C,*        wait for the crossing pedestrian (printed with {C,SC,FC} for
///              the pedestrian state, which deadlocks against the pedestrian
///              SC wait rule; the car only yields to a pedestrian in C)
///   *,C        three smallest-turn directions, pi = 1/3 each
///   *,{FC,SC}  continue or stop, pi = (0.7, 0.3)
///   *,OC       continue or stop, raw pi = (0.8, 0.3) renormalized
inline ActionMixture car_action_distribution(const CpiWorld& w) {
    static const std::vector<Vec2> dirs = car_directions();
    ActionMixture m;
    if (w.ped_state == PedState::C) {
        m.components = {{1.0, {0.0, 0.0}, 0.0}};
        return m;
    }
    const auto order = detail::order_by(
        dirs, [&](const Vec2& a) { return angle_diff(a, w.car_last_action); });
    switch (w.car_state) {
        case CarState::C:
            m.components = {{1.0 / 3.0, dirs[order[0]], 2.0},
                            {1.0 / 3.0, dirs[order[1]], 2.0},
                            {1.0 / 3.0, dirs[order[2]], 2.0}};
            break;
        case CarState::FC:
        case CarState::SC:
            m.components = {{0.7, dirs[order[0]], 2.0}, {0.3, {0.0, 0.0}, 0.0}};
            break;
        case CarState::OC: {
            const double total = kCarOcContinueRaw + kCarOcStopRaw;
            m.components = {{kCarOcContinueRaw / total, dirs[order[0]], 2.0},
                            {kCarOcStopRaw / total, {0.0, 0.0}, 0.0}};
            break;
        }
    }
    return m;
}

inline std::pair<ActionMixture, ActionMixture> action_distribution(const CpiWorld& w) {
    return {pedestrian_action_distribution(w), car_action_distribution(w)};
}

namespace detail {

inline Vec2 clamp_center(const Vec2& p, double box, double world) {
    return {std::clamp(p.x, box / 2.0, world - box / 2.0),
            std::clamp(p.y, box / 2.0, world - box / 2.0)};
}

} // namespace detail

/// Rejection-samples valid actor placements (pedestrian fully on pavement or
/// zebra, car fully on the road), draws initial headings, and evaluates the
/// initial states.
inline CpiWorld init_world(Rng& rng, const Regions& regions = Regions::standard()) {
    CpiWorld w;
    w.regions = regions;
    const double world = regions.world;
    auto walk_rects = regions.pavement.rects();
    for (const auto& r : regions.shared.rects()) walk_rects.push_back(r);
    const RectUnion walkable(std::move(walk_rects));
    bool placed = false;
    for (int attempt = 0; attempt < 100000; ++attempt) {
        const Vec2 p{rng.uniform(kPedBox / 2, world - kPedBox / 2),
                     rng.uniform(kPedBox / 2, world - kPedBox / 2)};
        if (walkable.covers(actor_box(p, kPedBox))) {
            w.ped_pos = p;
            placed = true;
            break;
        }
    }
    if (!placed) throw std::runtime_error("cpi: pedestrian rejection budget exhausted");
    placed = false;
    for (int attempt = 0; attempt < 100000; ++attempt) {
        const Vec2 p{rng.uniform(kCarBox / 2, world - kCarBox / 2),
                     rng.uniform(kCarBox / 2, world - kCarBox / 2)};
        if (regions.vehicle.covers(actor_box(p, kCarBox))) {
            w.car_pos = p;
            placed = true;
            break;
        }
    }
    if (!placed) throw std::runtime_error("cpi: car rejection budget exhausted");

    // Initial headings: a random pedestrian direction; for the car, a random
    // road-following direction (one that keeps the box on the road), so cars
    // do not start aimed at a wall.
    const auto ped_dirs = pedestrian_directions();
    w.ped_last_action = ped_dirs[rng.index(ped_dirs.size())];
    const auto car_dirs = car_directions();
    std::vector<Vec2> viable;
    for (const auto& d : car_dirs) {
        const Vec2 np = detail::clamp_center(w.car_pos + d, kCarBox, world);
        if (regions.vehicle.covers(actor_box(np, kCarBox)) && !(np == w.car_pos)) {
            viable.push_back(d);
        }
    }
    w.car_last_action =
        viable.empty() ? car_dirs[rng.index(car_dirs.size())] : viable[rng.index(viable.size())];

    w.ped_state = ped_state_rule(w, false);
    w.car_state = car_state_rule(w, false);
    w.ped_hist = {w.ped_state};
    w.car_hist = {w.car_state};
    return w;
}

/// One simulation step: sample both actions (pedestrian first), displace,
/// clamp to the world, then re-evaluate states and extend the histories.
inline void step(CpiWorld& w, Rng& rng) {
    const ActionMixture ped_m = pedestrian_action_distribution(w);
    const ActionMixture car_m = car_action_distribution(w);
    const Vec2 ped_a = ped_m.sample(rng);
    const Vec2 car_a = car_m.sample(rng);

    const Vec2 ped_before = w.ped_pos, car_before = w.car_pos;
    w.ped_pos = detail::clamp_center(w.ped_pos + ped_a, kPedBox, w.regions.world);
    w.car_pos = detail::clamp_center(w.car_pos + car_a, kCarBox, w.regions.world);
    // Remember the effective displacement as the heading. An actor that ran
    // into the world border (nonzero action, ~zero displacement) turns
    // around instead of pushing at the wall forever.
    const Vec2 ped_eff = w.ped_pos - ped_before, car_eff = w.car_pos - car_before;
    if (ped_eff.norm() > 1e-9)
        w.ped_last_action = ped_eff;
    else if (ped_a.norm() > 1e-9)
        w.ped_last_action = ped_a * -1.0;
    if (car_eff.norm() > 1e-9)
        w.car_last_action = car_eff;
    else if (car_a.norm() > 1e-9)
        w.car_last_action = car_a * -1.0;

    const auto [ps, cs] = step_states(w);
    w.ped_state = ps;
    w.car_state = cs;
    w.ped_hist.push_back(ps);
    w.car_hist.push_back(cs);
    ++w.t;
}

/// Monte-Carlo ground truth: independent continuations of `w` for `dt` steps;
/// terminal positions of both actors binned on a (bins x bins) grid over the
/// world. Rollout i uses the derived stream (seed, i), so the result is
/// deterministic and independent of evaluation order.
inline std::pair<GridDensity, GridDensity> gt_distribution(const CpiWorld& w, std::size_t dt,
                                                           std::size_t n_rollouts,
                                                           std::size_t bins,
                                                           std::uint64_t seed) {
    if (n_rollouts == 0) throw std::invalid_argument("gt_distribution: need rollouts");
    GridDensity ped(bins, bins, 0, 0, w.regions.world, w.regions.world);
    GridDensity car = ped;
    const double share = 1.0 / static_cast<double>(n_rollouts);
    for (std::size_t i = 0; i < n_rollouts; ++i) {
        Rng stream = Rng::stream(seed, i);
        CpiWorld roll = w;
        for (std::size_t s = 0; s < dt; ++s) step(roll, stream);
        ped.add(roll.ped_pos, share);
        car.add(roll.car_pos, share);
    }
    ped.normalize();
    car.normalize();
    return {ped, car};
}

} // namespace cpi
} // namespace mmfp
