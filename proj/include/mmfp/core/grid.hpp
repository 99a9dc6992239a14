#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mmfp/core/hypotheses.hpp"
#include "mmfp/core/mixture.hpp"
#include "mmfp/core/rng.hpp"
#include "mmfp/core/vec2.hpp"

namespace mmfp {

/// Default world used by the CPI environment and all grid evaluation.
inline constexpr double kWorldSize = 256.0;

/// W x H histogram over an axis-aligned world rectangle, row-major storage
/// (index = row * width + col, col along x). Substrate for EMD/WEMD and the
/// non-parametric baseline.
class GridDensity {
public:
    GridDensity(std::size_t width, std::size_t height, double x0 = 0.0, double y0 = 0.0,
                double x1 = kWorldSize, double y1 = kWorldSize)
        : width_(width),
          height_(height),
          x0_(x0),
          y0_(y0),
          x1_(x1),
          y1_(y1),
          mass_(width * height, 0.0) {
        if (width == 0 || height == 0) throw std::invalid_argument("grid: zero bins");
        if (!(x1 > x0) || !(y1 > y0)) throw std::invalid_argument("grid: empty extent");
    }

    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }
    std::size_t bins() const { return mass_.size(); }
    double x0() const { return x0_; }
    double y0() const { return y0_; }
    double x1() const { return x1_; }
    double y1() const { return y1_; }
    double bin_width() const { return (x1_ - x0_) / static_cast<double>(width_); }
    double bin_height() const { return (y1_ - y0_) / static_cast<double>(height_); }
    double bin_area() const { return bin_width() * bin_height(); }

    double& at(std::size_t col, std::size_t row) { return mass_[row * width_ + col]; }
    double at(std::size_t col, std::size_t row) const { return mass_[row * width_ + col]; }
    const std::vector<double>& mass() const { return mass_; }
    std::vector<double>& mass() { return mass_; }

    bool normalized() const { return normalized_; }

    double total_mass() const {
        double s = 0.0;
        for (double v : mass_) s += v;
        return s;
    }

    Vec2 bin_center(std::size_t col, std::size_t row) const {
        return {x0_ + (static_cast<double>(col) + 0.5) * bin_width(),
                y0_ + (static_cast<double>(row) + 0.5) * bin_height()};
    }

    Vec2 bin_center(std::size_t index) const {
        return bin_center(index % width_, index / width_);
    }

    /// Bin containing a world point, clamped to the grid.
    std::size_t bin_of(const Vec2& p) const {
        const auto clampi = [](double v, std::size_t n) {
            const long i = static_cast<long>(std::floor(v));
            return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(n) - 1));
        };
        const std::size_t col = clampi((p.x - x0_) / bin_width(), width_);
        const std::size_t row = clampi((p.y - y0_) / bin_height(), height_);
        return row * width_ + col;
    }

    void add(const Vec2& p, double mass) { mass_[bin_of(p)] += mass; }

    void normalize() {
        const double s = total_mass();
        if (s <= 0.0) throw std::runtime_error("grid: cannot normalize zero mass");
        for (double& v : mass_) v /= s;
        normalized_ = true;
    }

    void check_normalized() const {
        if (!normalized_ || std::abs(total_mass() - 1.0) > 1e-9)
            throw std::runtime_error("grid: not normalized");
    }

    /// Sample world points from the histogram: categorical over bins, then
    /// uniform jitter within the chosen bin.
    std::vector<Vec2> sample(Rng& rng, std::size_t n) const {
        std::vector<Vec2> out;
        out.reserve(n);
        for (std::size_t s = 0; s < n; ++s) {
            const std::size_t idx = rng.categorical(mass_);
            const Vec2 c = bin_center(idx);
            out.push_back({c.x + (rng.uniform() - 0.5) * bin_width(),
                           c.y + (rng.uniform() - 0.5) * bin_height()});
        }
        return out;
    }

    /// Sum-pool by an integer factor; bin counts must divide evenly.
    GridDensity downsample(std::size_t factor) const {
        if (factor == 0 || width_ % factor != 0 || height_ % factor != 0)
            throw std::invalid_argument("grid: bad downsample factor");
        GridDensity out(width_ / factor, height_ / factor, x0_, y0_, x1_, y1_);
        for (std::size_t r = 0; r < height_; ++r)
            for (std::size_t c = 0; c < width_; ++c)
                out.at(c / factor, r / factor) += at(c, r);
        out.normalized_ = normalized_;
        return out;
    }

private:
    std::size_t width_;
    std::size_t height_;
    double x0_, y0_, x1_, y1_;
    std::vector<double> mass_;
    bool normalized_ = false;
};

/// Evaluate the mixture pdf at every bin center, weight by bin area and
/// renormalize to total mass 1.
inline GridDensity rasterize_mixture(const MixtureDistribution& m, std::size_t w, std::size_t h,
                                     double x0 = 0.0, double y0 = 0.0, double x1 = kWorldSize,
                                     double y1 = kWorldSize) {
    GridDensity g(w, h, x0, y0, x1, y1);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c)
            g.at(c, r) = mixture_pdf(m, g.bin_center(c, r)) * g.bin_area();
    g.normalize();
    return g;
}

/// Treat the hypotheses as a uniform mixture of Dirac masses: each hypothesis
/// deposits 1/K into its nearest bin. Out-of-extent hypotheses are clamped to
/// the border bin; `clamped_count` reports how many.
inline GridDensity dirac_mixture(const HypothesisSet& hs, std::size_t w, std::size_t h,
                                 double x0 = 0.0, double y0 = 0.0, double x1 = kWorldSize,
                                 double y1 = kWorldSize, std::size_t* clamped_count = nullptr) {
    if (hs.size() == 0) throw std::invalid_argument("dirac_mixture: empty hypothesis set");
    GridDensity g(w, h, x0, y0, x1, y1);
    std::size_t clamped = 0;
    const double share = 1.0 / static_cast<double>(hs.size());
    for (const auto& hyp : hs.hyps) {
        if (hyp.mu.x < x0 || hyp.mu.x >= x1 || hyp.mu.y < y0 || hyp.mu.y >= y1) ++clamped;
        g.add(hyp.mu, share);
    }
    if (clamped_count) *clamped_count = clamped;
    g.normalize();
    return g;
}

} // namespace mmfp
