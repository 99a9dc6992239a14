#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mmfp/core/grid.hpp"
#include "mmfp/core/vec2.hpp"

namespace mmfp {

/// One flow in an optimal transport plan. `from` / `to` index the active bins
/// of the source and target densities.
struct TransportEdge {
    std::size_t from = 0;
    std::size_t to = 0;
    double mass = 0.0;
};

struct TransportPlan {
    std::vector<TransportEdge> edges;
    double cost = 0.0;
};

/// Hard cap on the joint support size accepted by the exact solver; beyond it
/// the cubic cost of exact EMD is no longer worth paying and WEMD applies.
inline constexpr std::size_t kEmdMaxActiveBins = 4096;

namespace detail {

/// Uncapacitated network simplex for the balanced transportation problem.
/// Complete bipartite arcs source -> sink plus one artificial arc per node to
/// a virtual root form the basis tree; pivots use block search over the most
/// negative reduced cost.
class TransportSimplex {
public:
    TransportSimplex(const std::vector<double>& supply, const std::vector<double>& demand,
                     const std::vector<double>& cost_matrix)
        : n1_(supply.size()), n2_(demand.size()), cost_(cost_matrix) {
        const std::size_t n = n1_ + n2_ + 1;
        root_ = n1_ + n2_;
        m_real_ = n1_ * n2_;

        double max_cost = 0.0;
        for (double c : cost_) max_cost = std::max(max_cost, c);
        big_ = (max_cost + 1.0) * static_cast<double>(n);

        tol_ = -1e-10 * (max_cost + 1.0);
        flow_.assign(m_real_ + n1_ + n2_, 0.0);
        in_tree_.assign(m_real_ + n1_ + n2_, false);
        parent_.assign(n, kNone);
        pred_arc_.assign(n, kNone);
        pi_.assign(n, 0.0);
        children_.assign(n, {});
        mark_.assign(n, 0);

        // Artificial basis: source i -> root carries supply_i, root -> sink j
        // carries demand_j.
        for (std::size_t i = 0; i < n1_; ++i) {
            const std::size_t a = m_real_ + i;
            flow_[a] = supply[i];
            in_tree_[a] = true;
            parent_[i] = root_;
            pred_arc_[i] = a;
            children_[root_].push_back(i);
            pi_[i] = -big_;
        }
        for (std::size_t j = 0; j < n2_; ++j) {
            const std::size_t node = n1_ + j;
            const std::size_t a = m_real_ + n1_ + j;
            flow_[a] = demand[j];
            in_tree_[a] = true;
            parent_[node] = root_;
            pred_arc_[node] = a;
            children_[root_].push_back(node);
            pi_[node] = big_;
        }
    }

    void solve() {
        const std::size_t block =
            std::max<std::size_t>(64, static_cast<std::size_t>(std::sqrt(m_real_)));
        std::size_t pos = 0;
        // Generous cap: every pivot must eventually drive the objective down.
        const std::size_t max_pivots = 1000 * (m_real_ + n1_ + n2_ + 64);
        for (std::size_t pivot = 0;; ++pivot) {
            if (pivot > max_pivots)
                throw std::runtime_error("emd: network simplex failed to converge");
            const std::size_t enter = find_entering(pos, block);
            if (enter == kNone) break;
            run_pivot(enter);
        }
    }

    double total_cost() const {
        double c = 0.0;
        for (std::size_t a = 0; a < m_real_; ++a)
            if (flow_[a] > 0.0) c += flow_[a] * cost_[a];
        return c;
    }

    /// Residual mass stranded on artificial arcs (should be ~0 when balanced).
    double artificial_residual() const {
        double r = 0.0;
        for (std::size_t a = m_real_; a < flow_.size(); ++a) r = std::max(r, flow_[a]);
        return r;
    }

    std::vector<TransportEdge> plan() const {
        std::vector<TransportEdge> edges;
        for (std::size_t a = 0; a < m_real_; ++a)
            if (flow_[a] > 1e-15) edges.push_back({a / n2_, a % n2_, flow_[a]});
        return edges;
    }

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    std::size_t arc_src(std::size_t a) const {
        if (a < m_real_) return a / n2_;
        const std::size_t k = a - m_real_;
        return k < n1_ ? k : root_;  // source->root, root->sink
    }
    std::size_t arc_dst(std::size_t a) const {
        if (a < m_real_) return n1_ + a % n2_;
        const std::size_t k = a - m_real_;
        return k < n1_ ? root_ : n1_ + (k - n1_);
    }
    double arc_cost(std::size_t a) const { return a < m_real_ ? cost_[a] : big_; }

    double reduced_cost(std::size_t a) const {
        return arc_cost(a) + pi_[arc_src(a)] - pi_[arc_dst(a)];
    }

    std::size_t find_entering(std::size_t& pos, std::size_t block) const {
        std::size_t scanned = 0;
        while (scanned < m_real_) {
            std::size_t best = kNone;
            double best_rc = tol_;
            const std::size_t end = std::min(pos + block, m_real_);
            for (std::size_t a = pos; a < end; ++a) {
                if (in_tree_[a]) continue;
                const double rc = reduced_cost(a);
                if (rc < best_rc) {
                    best_rc = rc;
                    best = a;
                }
            }
            scanned += end - pos;
            pos = end == m_real_ ? 0 : end;
            if (best != kNone) return best;
        }
        return kNone;
    }

    std::size_t lca(std::size_t a, std::size_t b) {
        ++stamp_;
        for (std::size_t x = a; x != kNone; x = parent_[x]) mark_[x] = stamp_;
        for (std::size_t x = b; x != kNone; x = parent_[x])
            if (mark_[x] == stamp_) return x;
        throw std::logic_error("emd: disconnected basis tree");
    }

    void run_pivot(std::size_t enter) {
        const std::size_t u = arc_src(enter), v = arc_dst(enter);
        const std::size_t apex = lca(u, v);

        // Cycle direction: u -> v through the entering arc, back v..apex..u.
        // Walking up from v, arcs pointing child->parent are aligned with the
        // cycle; walking up from u they are against it (and vice versa).
        double delta = std::numeric_limits<double>::infinity();
        std::size_t leave = kNone;
        bool leave_on_u_side = false;
        for (std::size_t x = u; x != apex; x = parent_[x]) {
            const std::size_t a = pred_arc_[x];
            const bool upward = arc_src(a) == x;  // child->parent
            if (upward && flow_[a] <= delta) {    // against the cycle
                delta = flow_[a];
                leave = a;
                leave_on_u_side = true;
            }
        }
        for (std::size_t x = v; x != apex; x = parent_[x]) {
            const std::size_t a = pred_arc_[x];
            const bool upward = arc_src(a) == x;
            if (!upward && flow_[a] < delta) {  // parent->child: against
                delta = flow_[a];
                leave = a;
                leave_on_u_side = false;
            }
        }
        if (leave == kNone) throw std::logic_error("emd: unbounded pivot");

        // Apply the flow change around the cycle.
        flow_[enter] += delta;
        for (std::size_t x = u; x != apex; x = parent_[x]) {
            const std::size_t a = pred_arc_[x];
            flow_[a] += arc_src(a) == x ? -delta : delta;
        }
        for (std::size_t x = v; x != apex; x = parent_[x]) {
            const std::size_t a = pred_arc_[x];
            flow_[a] += arc_src(a) == x ? delta : -delta;
        }

        // Re-hang the subtree cut off by the leaving arc: reverse the parent
        // chain from the entering endpoint down to the cut, then attach it
        // below the other endpoint through the entering arc.
        const std::size_t cut_child =
            arc_src(leave) == parent_[arc_dst(leave)] ? arc_dst(leave) : arc_src(leave);
        const std::size_t hang = leave_on_u_side ? u : v;    // new subtree root
        const std::size_t anchor = leave_on_u_side ? v : u;  // stays in main tree

        std::vector<std::size_t> chain{hang}, chain_arc;
        while (chain.back() != cut_child) {
            chain_arc.push_back(pred_arc_[chain.back()]);
            chain.push_back(parent_[chain.back()]);
        }
        for (std::size_t c : chain) detach(c);
        in_tree_[leave] = false;

        parent_[hang] = anchor;
        pred_arc_[hang] = enter;
        children_[anchor].push_back(hang);
        for (std::size_t i = 1; i < chain.size(); ++i) {
            parent_[chain[i]] = chain[i - 1];
            pred_arc_[chain[i]] = chain_arc[i - 1];
            children_[chain[i - 1]].push_back(chain[i]);
        }
        in_tree_[enter] = true;
        update_potentials(hang);
    }

    void detach(std::size_t child) {
        auto& sib = children_[parent_[child]];
        sib.erase(std::find(sib.begin(), sib.end(), child));
    }

    void update_potentials(std::size_t subtree_root) {
        std::vector<std::size_t> stack{subtree_root};
        while (!stack.empty()) {
            const std::size_t x = stack.back();
            stack.pop_back();
            const std::size_t a = pred_arc_[x];
            const std::size_t p = parent_[x];
            pi_[x] = arc_src(a) == x ? pi_[p] - arc_cost(a) : pi_[p] + arc_cost(a);
            for (std::size_t c : children_[x]) stack.push_back(c);
        }
    }

    std::size_t n1_, n2_, m_real_, root_;
    std::vector<double> cost_;
    double big_;
    double tol_ = -1e-12;
    std::vector<double> flow_;
    std::vector<bool> in_tree_;
    std::vector<std::size_t> parent_, pred_arc_;
    std::vector<double> pi_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::uint64_t> mark_;
    std::uint64_t stamp_ = 0;
};

} // namespace detail

/// Exact optimal transport between weighted point sets under Euclidean ground
/// distance. Both mass totals must agree within 1e-6 (they are rescaled to
/// balance exactly).
inline TransportPlan emd_exact_points(const std::vector<Vec2>& src_pos,
                                      std::vector<double> src_mass,
                                      const std::vector<Vec2>& dst_pos,
                                      std::vector<double> dst_mass) {
    if (src_pos.size() != src_mass.size() || dst_pos.size() != dst_mass.size())
        throw std::invalid_argument("emd: position/mass size mismatch");
    if (src_pos.empty() || dst_pos.empty())
        throw std::invalid_argument("emd: empty support");
    double s_total = 0.0, d_total = 0.0;
    for (double m : src_mass) s_total += m;
    for (double m : dst_mass) d_total += m;
    if (std::abs(s_total - d_total) > 1e-6)
        throw std::invalid_argument("emd: unbalanced masses");
    for (double& m : dst_mass) m *= s_total / d_total;

    std::vector<double> cost(src_pos.size() * dst_pos.size());
    for (std::size_t i = 0; i < src_pos.size(); ++i)
        for (std::size_t j = 0; j < dst_pos.size(); ++j)
            cost[i * dst_pos.size() + j] = distance(src_pos[i], dst_pos[j]);

    detail::TransportSimplex simplex(src_mass, dst_mass, cost);
    simplex.solve();
    if (simplex.artificial_residual() > 1e-9 * std::max(1.0, s_total))
        throw std::runtime_error("emd: infeasible transport (residual on artificials)");
    TransportPlan plan;
    plan.edges = simplex.plan();
    plan.cost = simplex.total_cost();
    return plan;
}

namespace detail {

struct SparseGrid {
    std::vector<Vec2> pos;
    std::vector<double> mass;
    std::vector<std::size_t> bin_index;
};

inline SparseGrid active_bins(const GridDensity& g) {
    SparseGrid s;
    for (std::size_t i = 0; i < g.bins(); ++i) {
        if (g.mass()[i] > 0.0) {
            s.pos.push_back(g.bin_center(i));
            s.mass.push_back(g.mass()[i]);
            s.bin_index.push_back(i);
        }
    }
    return s;
}

} // namespace detail

/// Optimal transport plan between two normalized grids of equal shape; edge
/// endpoints are flat bin indices of the respective grids.
inline TransportPlan emd_exact_plan(const GridDensity& p, const GridDensity& q) {
    if (p.width() != q.width() || p.height() != q.height())
        throw std::invalid_argument("emd: grid shape mismatch");
    p.check_normalized();
    q.check_normalized();
    auto sp = detail::active_bins(p);
    auto sq = detail::active_bins(q);
    if (sp.pos.size() + sq.pos.size() > kEmdMaxActiveBins)
        throw std::invalid_argument(
            "emd: active support exceeds " + std::to_string(kEmdMaxActiveBins) +
            " bins; use wemd() for densities this large");
    auto plan = emd_exact_points(sp.pos, sp.mass, sq.pos, sq.mass);
    for (auto& e : plan.edges) {
        e.from = sp.bin_index[e.from];
        e.to = sq.bin_index[e.to];
    }
    return plan;
}

inline double emd_exact(const GridDensity& p, const GridDensity& q) {
    return emd_exact_plan(p, q).cost;
}

/// Zero out bins holding less than `threshold` of the total mass and
/// renormalize; keeps exact EMD affordable on rasterized mixtures whose tails
/// touch every bin.
inline GridDensity sparsify(const GridDensity& g, double threshold = 1e-8) {
    GridDensity out = g;
    const double total = g.total_mass();
    for (double& v : out.mass())
        if (v < threshold * total) v = 0.0;
    out.normalize();
    return out;
}

} // namespace mmfp
