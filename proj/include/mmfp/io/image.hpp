#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "mmfp/core/grid.hpp"
#include "mmfp/io/binary.hpp"

namespace mmfp {

/// Binary PPM heatmap with a fixed dark-blue -> yellow ramp, gamma-compressed
/// so faint modes stay visible. One image pixel per grid bin.
inline void write_heatmap_ppm(const GridDensity& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open heatmap: " + path);
    double peak = 0.0;
    for (double v : g.mass()) peak = std::max(peak, v);
    if (peak <= 0.0) peak = 1.0;
    out << "P6\n" << g.width() << " " << g.height() << "\n255\n";
    for (std::size_t r = 0; r < g.height(); ++r) {
        for (std::size_t c = 0; c < g.width(); ++c) {
            const double t = std::pow(g.at(c, r) / peak, 0.35);
            const auto ch = [&](double lo, double hi) {
                return static_cast<unsigned char>(std::clamp(lo + t * (hi - lo), 0.0, 255.0));
            };
            const std::array<unsigned char, 3> px{ch(12, 252), ch(16, 212), ch(64, 40)};
            out.write(reinterpret_cast<const char*>(px.data()), 3);
        }
    }
}

/// Numeric companion to the heatmap: width/height header plus the flat mass
/// array, so tests and tooling never have to parse images.
inline void write_grid(const GridDensity& g, const std::string& path) {
    BinaryWriter w(path);
    w.magic("MMFPGRD1");
    w.u32(static_cast<std::uint32_t>(g.width()));
    w.u32(static_cast<std::uint32_t>(g.height()));
    w.f64(g.x0());
    w.f64(g.y0());
    w.f64(g.x1());
    w.f64(g.y1());
    w.f64_vec(g.mass());
}

inline GridDensity read_grid(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic("MMFPGRD1");
    const std::size_t w = r.u32(), h = r.u32();
    const double x0 = r.f64(), y0 = r.f64(), x1 = r.f64(), y1 = r.f64();
    GridDensity g(w, h, x0, y0, x1, y1);
    g.mass() = r.f64_vec();
    if (g.mass().size() != w * h) throw std::runtime_error("grid file size mismatch");
    if (std::abs(g.total_mass() - 1.0) <= 1e-9) g.normalize();
    return g;
}

} // namespace mmfp
