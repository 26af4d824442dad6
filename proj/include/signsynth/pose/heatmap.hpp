#pragma once

// Per-limb heat-map rasterization: each limb draws onto its own channel.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "signsynth/core/image.hpp"
#include "signsynth/core/tensor.hpp"
#include "signsynth/pose/pose.hpp"

namespace signsynth::pose {

struct LineConfig {
    double sigma = 0.0;  // 0 draws hard 1 px lines; > 0 adds Gaussian falloff
};

using HeatmapTensor = nn::Tensor;  // [C,H,W], values in [0,1]

namespace detail {

inline int to_px(double v, int extent) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<int>(std::lround(c * (extent - 1)));
}

// All-octant Bresenham (Zingl's form).
template <typename Plot>
void bresenham(int x0, int y0, int x1, int y1, Plot plot) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        plot(x0, y0);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

inline double point_segment_dist(double px, double py, double ax, double ay, double bx,
                                 double by) {
    const double vx = bx - ax, vy = by - ay;
    const double len2 = vx * vx + vy * vy;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((px - ax) * vx + (py - ay) * vy) / len2, 0.0, 1.0);
    return std::hypot(px - (ax + t * vx), py - (ay + t * vy));
}

}  // namespace detail

inline HeatmapTensor rasterize_heatmap(const PoseFrame& frame, const JointLayout& layout, int h,
                                       int w, const LineConfig& cfg = {}) {
    if (h < 8 || w < 8) throw PreconditionError("rasterize_heatmap: size must be at least 8x8");
    HeatmapTensor out = HeatmapTensor::zeros({layout.limb_count(), h, w});
    for (int c = 0; c < layout.limb_count(); ++c) {
        const auto [a, b] = layout.limbs[static_cast<std::size_t>(c)];
        if (frame.confidence[static_cast<std::size_t>(a)] <= 0.0 ||
            frame.confidence[static_cast<std::size_t>(b)] <= 0.0)
            continue;
        const int ax = detail::to_px(frame.coords[static_cast<std::size_t>(a)].x, w);
        const int ay = detail::to_px(frame.coords[static_cast<std::size_t>(a)].y, h);
        const int bx = detail::to_px(frame.coords[static_cast<std::size_t>(b)].x, w);
        const int by = detail::to_px(frame.coords[static_cast<std::size_t>(b)].y, h);
        float* ch = out.data() + static_cast<std::int64_t>(c) * h * w;
        if (cfg.sigma > 0.0) {
            const int r = static_cast<int>(std::ceil(3.0 * cfg.sigma));
            const int y0 = std::max(0, std::min(ay, by) - r);
            const int y1 = std::min(h - 1, std::max(ay, by) + r);
            const int x0 = std::max(0, std::min(ax, bx) - r);
            const int x1 = std::min(w - 1, std::max(ax, bx) + r);
            const double inv = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const double d = detail::point_segment_dist(x, y, ax, ay, bx, by);
                    if (d <= 3.0 * cfg.sigma) {
                        const auto v = static_cast<float>(std::exp(-d * d * inv));
                        ch[y * w + x] = std::max(ch[y * w + x], v);
                    }
                }
        }
        detail::bresenham(ax, ay, bx, by, [&](int x, int y) {
            if (x >= 0 && x < w && y >= 0 && y < h) ch[y * w + x] = 1.0f;
        });
    }
    return out;
}

// Writes one grayscale PNG per channel: frame{t:05d}_limb{c:02d}.png
inline void dump_heatmap(const std::filesystem::path& dir, int frame_index,
                         const HeatmapTensor& hm) {
    std::filesystem::create_directories(dir);
    const int c = hm.dim(0), h = hm.dim(1), w = hm.dim(2);
    for (int ch = 0; ch < c; ++ch) {
        nn::Tensor plane({h, w});
        std::copy(hm.data() + static_cast<std::int64_t>(ch) * h * w,
                  hm.data() + static_cast<std::int64_t>(ch + 1) * h * w, plane.data());
        char name[32];
        std::snprintf(name, sizeof(name), "frame%05d_limb%02d.png", frame_index, ch);
        img::write_png_gray(dir / name, plane);
    }
}

}  // namespace signsynth::pose
