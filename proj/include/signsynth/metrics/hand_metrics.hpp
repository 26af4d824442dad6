#pragma once

// Hand-focused metrics: SSIM over 60x60 hand crops and keypoint distance
// between extracted hand poses, reported in patch pixels.

#include <cmath>
#include <optional>
#include <vector>

#include "signsynth/metrics/ssim.hpp"
#include "signsynth/pose/hands.hpp"
#include "signsynth/pose2video/handnet.hpp"

namespace signsynth::metrics {

namespace detail {

inline std::vector<pose::Side> visible_sides(const pose::PoseFrame& frame,
                                             const pose::JointLayout& layout) {
    std::vector<pose::Side> out;
    for (const pose::Side side : {pose::Side::kLeft, pose::Side::kRight}) {
        const int anchor = side == pose::Side::kLeft ? layout.left_hand_anchor
                                                     : layout.right_hand_anchor;
        if (frame.confidence[static_cast<std::size_t>(anchor)] > 0.0) out.push_back(side);
    }
    return out;
}

}  // namespace detail

// Mean SSIM over the hand crops available in this frame; absent when neither
// hand is visible.
inline std::optional<double> hand_ssim(const img::Frame& a, const img::Frame& b,
                                       const pose::PoseFrame& frame,
                                       const pose::JointLayout& layout,
                                       img::Rgb background = {}) {
    const auto sides = detail::visible_sides(frame, layout);
    if (sides.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto side : sides) {
        const auto crop_a = pose::crop_hand(a, frame, layout, side, background);
        const auto crop_b = pose::crop_hand(b, frame, layout, side, background);
        sum += ssim(crop_a.patch, crop_b.patch);
    }
    return sum / static_cast<double>(sides.size());
}

// Mean Euclidean distance between two 21-point hand keypoint sets, converted
// from patch-normalized units to patch pixels.
inline double keypoint_distance_px(const pose::Keypoints& a, const pose::Keypoints& b) {
    if (a.points.size() != b.points.size() || a.points.empty())
        throw PreconditionError("keypoint_distance_px: size mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        const double dx = (a.points[i].x - b.points[i].x) * pose::kHandPatch;
        const double dy = (a.points[i].y - b.points[i].y) * pose::kHandPatch;
        sum += std::sqrt(dx * dx + dy * dy);
    }
    return sum / static_cast<double>(a.points.size());
}

// Mean keypoint distance between the hands extracted from the produced and
// target frames, averaged over the visible hands; absent when none are.
inline std::optional<double> hand_pose_distance(const img::Frame& produced,
                                                const img::Frame& target,
                                                const pose::PoseFrame& frame,
                                                const pose::JointLayout& layout,
                                                const p2v::HandKeypointNet& h,
                                                img::Rgb background = {}) {
    const auto sides = detail::visible_sides(frame, layout);
    if (sides.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto side : sides) {
        const auto crop_p = pose::crop_hand(produced, frame, layout, side, background);
        const auto crop_t = pose::crop_hand(target, frame, layout, side, background);
        sum += keypoint_distance_px(p2v::extract_hand_keypoints(h, crop_p),
                                    p2v::extract_hand_keypoints(h, crop_t));
    }
    return sum / static_cast<double>(sides.size());
}

}  // namespace signsynth::metrics
