#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mmfp/core/grid.hpp"

namespace mmfp {

/// Linear-time wavelet approximation of the earth mover's distance.
///
/// The difference p - q is analyzed with Haar responses at every dyadic scale
/// in translation-invariant (undecimated) form: box combinations over a
/// summed-area table, so each level costs O(bins) and the whole transform
/// stays linear in the bin count. Per scale, the l1 mass of the three detail
/// orientations is normalized by the frame redundancy and weighted so that
/// coarse-scale differences dominate fine ones by the dyadic factor of the
/// wavelet-EMD construction; a point mass displaced by d then costs Theta(d).
/// Coarse levels are sampled with stride block/8, which keeps the transform
/// effectively shift invariant while bounding the work per level.
///
/// Values are approximation units: comparable between calls on equally shaped
/// grids, not calibrated to pixel EMD.
inline double wemd(const GridDensity& p, const GridDensity& q) {
    if (p.width() != q.width() || p.height() != q.height())
        throw std::invalid_argument("wemd: grid shape mismatch");
    const std::size_t w = p.width(), h = p.height();

    // Summed-area table of (p - q) with an implicit zero-padded border, which
    // also covers non-square and non-power-of-two grids.
    std::vector<double> sat((w + 1) * (h + 1), 0.0);
    for (std::size_t r = 1; r <= h; ++r)
        for (std::size_t c = 1; c <= w; ++c)
            sat[r * (w + 1) + c] = (p.at(c - 1, r - 1) - q.at(c - 1, r - 1)) +
                                   sat[(r - 1) * (w + 1) + c] + sat[r * (w + 1) + c - 1] -
                                   sat[(r - 1) * (w + 1) + c - 1];
    const auto box = [&](long x0, long y0, long x1, long y1) {
        x0 = std::clamp<long>(x0, 0, static_cast<long>(w));
        x1 = std::clamp<long>(x1, 0, static_cast<long>(w));
        y0 = std::clamp<long>(y0, 0, static_cast<long>(h));
        y1 = std::clamp<long>(y1, 0, static_cast<long>(h));
        if (x1 <= x0 || y1 <= y0) return 0.0;
        return sat[y1 * (w + 1) + x1] - sat[y0 * (w + 1) + x1] - sat[y1 * (w + 1) + x0] +
               sat[y0 * (w + 1) + x0];
    };

    std::size_t levels = 0;
    for (std::size_t s = std::max(w, h); s > 1; s = (s + 1) / 2) ++levels;

    double total = 0.0;
    for (std::size_t s = 1; s <= levels; ++s) {
        const long block = 1L << s, half = block / 2;
        const long stride = std::max<long>(1, block / 8);
        // 2^s: coefficient scale normalization; 4^s: positions per decimated
        // coefficient; 8^-(levels-s): coarse-dominant scale weight.
        const double unit = std::pow(8.0, -static_cast<double>(levels - s)) /
                            (std::pow(2.0, static_cast<double>(s)) *
                             std::pow(4.0, static_cast<double>(s)));
        double level_sum = 0.0;
        for (long y = -block + 1; y < static_cast<long>(h); y += stride) {
            for (long x = -block + 1; x < static_cast<long>(w); x += stride) {
                const double tl = box(x, y, x + half, y + half);
                const double tr = box(x + half, y, x + block, y + half);
                const double bl = box(x, y + half, x + half, y + block);
                const double br = box(x + half, y + half, x + block, y + block);
                level_sum += std::abs(tl - tr + bl - br) + std::abs(tl + tr - bl - br) +
                             std::abs(tl - tr - bl + br);
            }
        }
        total += unit * level_sum * static_cast<double>(stride * stride);
    }
    return total;
}

} // namespace mmfp
