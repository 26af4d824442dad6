#pragma once

// Deterministic parametric signer renderer. Bodies are drawn back-to-front in
// style colors (background, torso quad, limbs, head disk); hands are drawn
// last in a shared skin color with style-independent stroke widths, so hand
// pixels are identical across styles for the same pose. No anti-aliasing:
// coverage is a binary distance test, which keeps renders bit-exact across
// runs and makes pixel-class masks meaningful.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "signsynth/core/image.hpp"
#include "signsynth/errors.hpp"
#include "signsynth/pose/hands.hpp"
#include "signsynth/pose/layout.hpp"
#include "signsynth/pose/pose.hpp"
#include "signsynth/synthdata/primitives.hpp"
#include "signsynth/synthdata/styles.hpp"

namespace signsynth::synth {

enum class PixelClass : unsigned char { kBackground = 0, kTorso, kLimb, kHead, kHand };

struct RenderResult {
    img::Frame frame;                 // [3,size,size] in [-1,1]
    std::vector<PixelClass> classes;  // size*size, row-major
    int size = 0;
};

namespace detail {

struct Canvas {
    img::Frame* frame;
    std::vector<PixelClass>* classes;
    int size;

    void set(int x, int y, const img::Rgb& color, PixelClass cls) {
        if (x < 0 || y < 0 || x >= size || y >= size) return;
        const std::int64_t plane = static_cast<std::int64_t>(size) * size;
        float* d = frame->data();
        d[static_cast<std::int64_t>(y) * size + x] = color.r;
        d[plane + static_cast<std::int64_t>(y) * size + x] = color.g;
        d[2 * plane + static_cast<std::int64_t>(y) * size + x] = color.b;
        (*classes)[static_cast<std::size_t>(y) * static_cast<std::size_t>(size) +
                   static_cast<std::size_t>(x)] = cls;
    }
};

inline void paint_disk(Canvas& c, double cx, double cy, double r, const img::Rgb& color,
                       PixelClass cls) {
    const int x0 = static_cast<int>(std::floor(cx - r)), x1 = static_cast<int>(std::ceil(cx + r));
    const int y0 = static_cast<int>(std::floor(cy - r)), y1 = static_cast<int>(std::ceil(cy + r));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - cx, dy = y - cy;
            if (dx * dx + dy * dy <= r * r) c.set(x, y, color, cls);
        }
}

// Thick segment with round caps: every pixel within halfwidth of the segment.
inline void paint_segment(Canvas& c, double ax, double ay, double bx, double by,
                          double halfwidth, const img::Rgb& color, PixelClass cls) {
    const double lox = std::min(ax, bx) - halfwidth, hix = std::max(ax, bx) + halfwidth;
    const double loy = std::min(ay, by) - halfwidth, hiy = std::max(ay, by) + halfwidth;
    const double vx = bx - ax, vy = by - ay;
    const double len2 = vx * vx + vy * vy;
    for (int y = static_cast<int>(std::floor(loy)); y <= static_cast<int>(std::ceil(hiy)); ++y)
        for (int x = static_cast<int>(std::floor(lox)); x <= static_cast<int>(std::ceil(hix));
             ++x) {
            double t = 0.0;
            if (len2 > 0.0)
                t = std::clamp(((x - ax) * vx + (y - ay) * vy) / len2, 0.0, 1.0);
            const double dx = x - (ax + t * vx), dy = y - (ay + t * vy);
            if (dx * dx + dy * dy <= halfwidth * halfwidth) c.set(x, y, color, cls);
        }
}

// Convex quad fill; vertices must wind consistently.
inline void paint_quad(Canvas& c, const double px[4], const double py[4], const img::Rgb& color,
                       PixelClass cls) {
    const double lox = std::min({px[0], px[1], px[2], px[3]});
    const double hix = std::max({px[0], px[1], px[2], px[3]});
    const double loy = std::min({py[0], py[1], py[2], py[3]});
    const double hiy = std::max({py[0], py[1], py[2], py[3]});
    for (int y = static_cast<int>(std::floor(loy)); y <= static_cast<int>(std::ceil(hiy)); ++y)
        for (int x = static_cast<int>(std::floor(lox)); x <= static_cast<int>(std::ceil(hix));
             ++x) {
            bool pos = false, neg = false;
            for (int i = 0; i < 4; ++i) {
                const int j = (i + 1) % 4;
                const double cross = (px[j] - px[i]) * (y - py[i]) - (py[j] - py[i]) * (x - px[i]);
                pos = pos || cross > 0.0;
                neg = neg || cross < 0.0;
            }
            if (!(pos && neg)) c.set(x, y, color, cls);
        }
}

inline double hand_stroke_halfwidth(int size) { return std::max(0.75, 0.016 * size); }
inline double hand_tip_radius(int size) { return std::max(1.0, 0.026 * size); }
inline double hand_palm_radius(int size) { return std::max(1.0, 0.020 * size); }

}  // namespace detail

// Renders one pose frame in one style and reports which body part produced
// each pixel. Joint coordinates map to pixel positions as coord * (size - 1),
// the same convention the hand-crop window uses.
inline RenderResult render_signer_classified(const pose::PoseFrame& frame,
                                             const StyleSpec& style,
                                             const pose::JointLayout& layout, int size) {
    if (frame.joint_count() != layout.joint_count() ||
        frame.confidence.size() != frame.coords.size())
        throw PreconditionError("render_signer: pose does not match layout");
    if (size < 16) throw ConfigError("render_signer: size must be >= 16");

    RenderResult out;
    out.size = size;
    out.frame = img::make_frame(size, size, style.background_color);
    out.classes.assign(static_cast<std::size_t>(size) * static_cast<std::size_t>(size),
                       PixelClass::kBackground);
    detail::Canvas canvas{&out.frame, &out.classes, size};

    const double ext = size - 1;
    auto px = [&](int j) { return frame.coords[static_cast<std::size_t>(j)].x * ext; };
    auto py = [&](int j) { return frame.coords[static_cast<std::size_t>(j)].y * ext; };
    auto visible = [&](int j) { return frame.confidence[static_cast<std::size_t>(j)] > 0.0; };

    using namespace pose::joints;
    const int body_joints = layout.joint_count() - 2 * kHandJoints;

    // Torso quad behind everything else.
    if (visible(kLShoulder) && visible(kRShoulder) && visible(kRHip) && visible(kLHip)) {
        const double qx[4] = {px(kLShoulder), px(kRShoulder), px(kRHip), px(kLHip)};
        const double qy[4] = {py(kLShoulder), py(kRShoulder), py(kRHip), py(kLHip)};
        detail::paint_quad(canvas, qx, qy, style.torso_color, PixelClass::kTorso);
    }

    // Body limbs in sleeve color; hand limbs are handled by the glyph pass.
    for (const auto& [a, b] : layout.limbs) {
        if (a >= body_joints || b >= body_joints) continue;
        if (!visible(a) || !visible(b)) continue;
        detail::paint_segment(canvas, px(a), py(a), px(b), py(b), style.limb_width_px * 0.5,
                              style.sleeve_color, PixelClass::kLimb);
    }

    // Head disk centered on the nose.
    if (visible(kNose))
        detail::paint_disk(canvas, px(kNose), py(kNose), style.head_radius_px, kSkinColor,
                           PixelClass::kHead);

    // Hand glyphs last, in style-independent color and stroke widths.
    const double hw = detail::hand_stroke_halfwidth(size);
    const double tip_r = detail::hand_tip_radius(size);
    const double palm_r = detail::hand_palm_radius(size);
    auto draw_hand = [&](int base, int anchor) {
        if (!visible(anchor)) return;
        detail::paint_disk(canvas, px(base), py(base), palm_r, kSkinColor, PixelClass::kHand);
        for (int finger = 0; finger < 5; ++finger) {
            int prev = base;
            for (int seg = 0; seg < 4; ++seg) {
                const int j = base + 1 + finger * 4 + seg;
                detail::paint_segment(canvas, px(prev), py(prev), px(j), py(j), hw, kSkinColor,
                                      PixelClass::kHand);
                prev = j;
            }
            detail::paint_disk(canvas, px(prev), py(prev), tip_r, kSkinColor, PixelClass::kHand);
        }
    };
    draw_hand(kLeftHandBase, layout.left_hand_anchor);
    draw_hand(kRightHandBase, layout.right_hand_anchor);
    return out;
}

inline img::Frame render_signer(const pose::PoseFrame& frame, const StyleSpec& style,
                                const pose::JointLayout& layout, int size) {
    return render_signer_classified(frame, style, layout, size).frame;
}

// Ground-truth hand keypoints in crop-patch units: the 21 hand joints mapped
// through the same window the hand crop uses (anchor pixel minus half the
// patch), normalized so that pixel index p corresponds to (p + 0.5) / patch.
// This matches both the keypoint head's soft-argmax grid and the pixel scale
// of keypoint_distance_px.
inline pose::Keypoints hand_keypoint_labels(const pose::PoseFrame& frame,
                                            const pose::JointLayout& layout, pose::Side side,
                                            int height, int width) {
    const int anchor = side == pose::Side::kLeft ? layout.left_hand_anchor
                                                 : layout.right_hand_anchor;
    const int base =
        side == pose::Side::kLeft ? pose::joints::kLeftHandBase : pose::joints::kRightHandBase;
    if (frame.confidence[static_cast<std::size_t>(anchor)] <= 0.0)
        throw pose::NoHandError(std::string("hand_keypoint_labels: no visible ") +
                                pose::side_name(side) + " hand");
    const auto& ap = frame.coords[static_cast<std::size_t>(anchor)];
    const int cx = static_cast<int>(std::lround(std::clamp(ap.x, 0.0, 1.0) * (width - 1)));
    const int cy = static_cast<int>(std::lround(std::clamp(ap.y, 0.0, 1.0) * (height - 1)));
    const double ox = cx - pose::kHandPatch / 2;
    const double oy = cy - pose::kHandPatch / 2;
    pose::Keypoints k;
    k.points.reserve(pose::joints::kHandJoints);
    for (int j = 0; j < pose::joints::kHandJoints; ++j) {
        const auto& p = frame.coords[static_cast<std::size_t>(base + j)];
        k.points.push_back({(p.x * (width - 1) - ox + 0.5) / pose::kHandPatch,
                            (p.y * (height - 1) - oy + 0.5) / pose::kHandPatch});
    }
    return k;
}

// Canonical per-style reference image: the rest pose rendered in that style.
inline img::Frame style_reference_image(const StyleSpec& style, const pose::JointLayout& layout,
                                        int size) {
    return render_signer(rest_pose(layout), style, layout, size);
}

}  // namespace signsynth::synth
