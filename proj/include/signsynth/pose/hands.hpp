#pragma once

// Hand patch extraction and good-hands curation.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "signsynth/core/image.hpp"
#include "signsynth/errors.hpp"
#include "signsynth/pose/pose.hpp"

namespace signsynth::pose {

constexpr int kHandPatch = 60;

enum class Side { kLeft, kRight };

inline const char* side_name(Side s) { return s == Side::kLeft ? "left" : "right"; }

// 21 hand keypoints in patch pixel units.
struct Keypoints {
    std::vector<Vec2> points;
};

struct NoHandError : Error {
    using Error::Error;
};

struct HandCrop {
    img::Frame patch;  // [3,60,60]
    Side side = Side::kLeft;
    int source_frame_index = 0;
    int anchor_x = 0, anchor_y = 0;  // middle knuckle, image pixel units
};

// 60x60 patch centered on the side's middle knuckle; pixels falling outside
// the image are filled with the background color.
inline HandCrop crop_hand(const img::Frame& image, const PoseFrame& pose,
                          const JointLayout& layout, Side side, img::Rgb background = {},
                          int source_frame_index = 0) {
    const int anchor =
        side == Side::kLeft ? layout.left_hand_anchor : layout.right_hand_anchor;
    if (pose.confidence[static_cast<std::size_t>(anchor)] <= 0.0)
        throw NoHandError(std::string("crop_hand: no visible ") + side_name(side) + " hand");
    const int h = image.dim(1), w = image.dim(2);
    const int cx = static_cast<int>(
        std::lround(std::clamp(pose.coords[static_cast<std::size_t>(anchor)].x, 0.0, 1.0) *
                    (w - 1)));
    const int cy = static_cast<int>(
        std::lround(std::clamp(pose.coords[static_cast<std::size_t>(anchor)].y, 0.0, 1.0) *
                    (h - 1)));
    HandCrop crop;
    crop.side = side;
    crop.source_frame_index = source_frame_index;
    crop.anchor_x = cx;
    crop.anchor_y = cy;
    crop.patch = img::Frame({3, kHandPatch, kHandPatch});
    const float bg[3] = {background.r, background.g, background.b};
    for (int c = 0; c < 3; ++c) {
        const float* src = image.data() + static_cast<std::int64_t>(c) * h * w;
        float* dst = crop.patch.data() + static_cast<std::int64_t>(c) * kHandPatch * kHandPatch;
        for (int y = 0; y < kHandPatch; ++y)
            for (int x = 0; x < kHandPatch; ++x) {
                const int iy = cy - kHandPatch / 2 + y;
                const int ix = cx - kHandPatch / 2 + x;
                dst[y * kHandPatch + x] =
                    (iy < 0 || iy >= h || ix < 0 || ix >= w) ? bg[c] : src[iy * w + ix];
            }
    }
    return crop;
}

// Variance of the 4-neighbor Laplacian over the grayscale patch in [0,255]
// units. Sharp patches score high, blurred ones low.
inline double sharpness_score(const img::Frame& patch) {
    const int h = patch.dim(1), w = patch.dim(2);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    std::vector<double> gray(static_cast<std::size_t>(plane));
    for (std::int64_t i = 0; i < plane; ++i) {
        const double v = (patch[i] + patch[plane + i] + patch[2 * plane + i]) / 3.0;
        gray[static_cast<std::size_t>(i)] = (v + 1.0) * 127.5;
    }
    std::vector<double> lap;
    lap.reserve(static_cast<std::size_t>((h - 2) * (w - 2)));
    for (int y = 1; y < h - 1; ++y)
        for (int x = 1; x < w - 1; ++x) {
            const double v = gray[static_cast<std::size_t>(y * w + x)];
            lap.push_back(gray[static_cast<std::size_t>((y - 1) * w + x)] +
                          gray[static_cast<std::size_t>((y + 1) * w + x)] +
                          gray[static_cast<std::size_t>(y * w + x - 1)] +
                          gray[static_cast<std::size_t>(y * w + x + 1)] - 4.0 * v);
        }
    double mean = 0;
    for (double v : lap) mean += v;
    mean /= static_cast<double>(lap.size());
    double var = 0;
    for (double v : lap) var += (v - mean) * (v - mean);
    return var / static_cast<double>(lap.size());
}

struct GoodHandEntry {
    Keypoints keypoints;  // k' in patch-normalized units
    Side side = Side::kLeft;
    int source_frame_index = 0;
    double blur_score = 0.0;
};

struct GoodHandSet {
    std::vector<GoodHandEntry> entries;
    bool empty() const { return entries.empty(); }
};

using HandExtractor = std::function<Keypoints(const img::Frame&)>;

// Keeps crops that are sharp enough and whose extracted keypoints all land
// inside the patch. An empty result is valid; callers fall back to per-batch
// real hands.
inline GoodHandSet select_good_hands(const std::vector<HandCrop>& crops,
                                     const HandExtractor& extractor, double blur_threshold) {
    GoodHandSet set;
    for (const auto& crop : crops) {
        const double score = sharpness_score(crop.patch);
        if (score < blur_threshold) continue;
        Keypoints kp = extractor(crop.patch);
        bool in_bounds = true;
        for (const auto& p : kp.points)
            in_bounds = in_bounds && p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0;
        if (!in_bounds) continue;
        set.entries.push_back({std::move(kp), crop.side, crop.source_frame_index, score});
    }
    return set;
}

}  // namespace signsynth::pose
