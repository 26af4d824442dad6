#pragma once

// Motion-primitive vocabulary: each token id maps deterministically to a
// parametric upper-body trajectory over a fixed number of frames. Token
// sequences decode to pose sequences by concatenating primitive blocks; every
// primitive starts and ends at the shared rest pose, so blocks join
// continuously and identical token sequences always decode identically.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "signsynth/errors.hpp"
#include "signsynth/pose/layout.hpp"
#include "signsynth/pose/pose.hpp"

namespace signsynth::synth {

inline constexpr int kDefaultFramesPerPrimitive = 8;
inline constexpr double kHandScale = 0.05;  // finger length unit, normalized canvas units

// One vocabulary entry: which arm moves, where the wrist travels, and how the
// fingers articulate. All fields derive from token_id alone.
struct MotionPrimitive {
    int token_id = 0;
    int mode = 0;  // 0: right arm, 1: left arm, 2: both
    pose::Vec2 right_target{0.68, 0.62};
    pose::Vec2 left_target{0.32, 0.62};
    double curl = 0.0;    // fingertip curl amount at peak, in [0,1]
    double spread = 0.25; // finger fan half-step at peak, radians
    double wobble = 0.0;  // hand-direction offset at peak, radians
};

namespace detail {

inline constexpr double kRestSpread = 0.25;

struct ArmRest {
    pose::Vec2 shoulder, wrist;
};

inline ArmRest right_arm_rest() { return {{0.65, 0.32}, {0.68, 0.62}}; }
inline ArmRest left_arm_rest() { return {{0.35, 0.32}, {0.32, 0.62}}; }

// Elbow placed off the shoulder-wrist chord, bent outward (away from the
// body's center line).
inline pose::Vec2 elbow_for(const pose::Vec2& shoulder, const pose::Vec2& wrist,
                            bool right_side) {
    const double dx = wrist.x - shoulder.x, dy = wrist.y - shoulder.y;
    const double len = std::sqrt(dx * dx + dy * dy);
    if (len < 1e-9) return {shoulder.x + (right_side ? 0.05 : -0.05), shoulder.y + 0.08};
    double px = -dy / len, py = dx / len;
    if ((right_side && px < 0.0) || (!right_side && px > 0.0)) {
        px = -px;
        py = -py;
    }
    const pose::Vec2 mid{(shoulder.x + wrist.x) * 0.5, (shoulder.y + wrist.y) * 0.5};
    return {mid.x + 0.06 * px, mid.y + 0.06 * py};
}

// Writes the 21 joints of one hand: wrist plus five 4-segment fingers fanned
// around the forearm direction, with optional curl bending successive
// segments. Joint order matches the layout's hand blocks.
inline void place_hand(pose::PoseFrame& f, int base, const pose::Vec2& wrist,
                       const pose::Vec2& elbow, double curl, double spread, double wobble) {
    double dx = wrist.x - elbow.x, dy = wrist.y - elbow.y;
    const double len = std::sqrt(dx * dx + dy * dy);
    if (len < 1e-9) {
        dx = 0.0;
        dy = 1.0;
    } else {
        dx /= len;
        dy /= len;
    }
    const double forearm = std::atan2(dy, dx) + wobble;
    f.coords[static_cast<std::size_t>(base)] = wrist;
    static constexpr double kSegment[4] = {0.34, 0.28, 0.22, 0.18};
    static constexpr double kFingerLen[5] = {0.70, 0.95, 1.00, 0.92, 0.75};
    static constexpr double kThumbOffset = -0.90;
    int idx = base + 1;
    for (int finger = 0; finger < 5; ++finger) {
        double angle = forearm + spread * (finger - 2) + (finger == 0 ? kThumbOffset : 0.0);
        pose::Vec2 p = wrist;
        for (int seg = 0; seg < 4; ++seg) {
            const double step = kHandScale * kFingerLen[finger] * kSegment[seg];
            p = {p.x + step * std::cos(angle), p.y + step * std::sin(angle)};
            f.coords[static_cast<std::size_t>(idx++)] = p;
            angle += 0.45 * curl;  // curl bends each successive segment further
        }
    }
}

inline void require_default_shape(const pose::JointLayout& layout, const char* who) {
    if (layout.joint_count() != 10 + 2 * pose::joints::kHandJoints)
        throw PreconditionError(std::string(who) +
                                ": layout must be the default 52-joint skeleton, got " +
                                std::to_string(layout.joint_count()) + " joints");
}

}  // namespace detail

// Deterministic program parameters for a token id.
inline MotionPrimitive make_primitive(int token_id) {
    if (token_id < 0) throw PreconditionError("make_primitive: negative token id");
    const double k = static_cast<double>(token_id);
    MotionPrimitive p;
    p.token_id = token_id;
    p.mode = token_id % 3;
    p.right_target = {0.5 + 0.30 * std::sin(2.1 + 0.83 * k),
                      0.36 + 0.20 * std::sin(0.7 + 1.27 * k)};
    p.left_target = {0.5 + 0.30 * std::sin(4.0 + 0.91 * k),
                     0.36 + 0.20 * std::sin(1.9 + 1.13 * k)};
    p.curl = 0.5 + 0.5 * std::sin(0.4 + 0.9 * k);
    p.spread = 0.22 + 0.10 * std::sin(1.1 + 0.77 * k);
    p.wobble = 0.5 * std::sin(2.8 + 0.67 * k);
    return p;
}

// The shared pose every primitive starts and ends at: arms lowered, hands
// open, everything visible.
inline pose::PoseFrame rest_pose(const pose::JointLayout& layout) {
    detail::require_default_shape(layout, "rest_pose");
    pose::PoseFrame f;
    f.coords.assign(static_cast<std::size_t>(layout.joint_count()), {0.0, 0.0});
    f.confidence.assign(static_cast<std::size_t>(layout.joint_count()), 1.0);
    using namespace pose::joints;
    f.coords[kNose] = {0.5, 0.18};
    f.coords[kNeck] = {0.5, 0.30};
    const auto right = detail::right_arm_rest();
    const auto left = detail::left_arm_rest();
    f.coords[kRShoulder] = right.shoulder;
    f.coords[kLShoulder] = left.shoulder;
    f.coords[kRWrist] = right.wrist;
    f.coords[kLWrist] = left.wrist;
    f.coords[kRElbow] = detail::elbow_for(right.shoulder, right.wrist, true);
    f.coords[kLElbow] = detail::elbow_for(left.shoulder, left.wrist, false);
    f.coords[kRHip] = {0.58, 0.78};
    f.coords[kLHip] = {0.42, 0.78};
    detail::place_hand(f, kLeftHandBase, f.coords[kLWrist], f.coords[kLElbow], 0.0,
                       detail::kRestSpread, 0.0);
    detail::place_hand(f, kRightHandBase, f.coords[kRWrist], f.coords[kRElbow], 0.0,
                       detail::kRestSpread, 0.0);
    return f;
}

// Pose at phase s in [0,1] of a primitive. The activation sin^2(pi*s) is zero
// at both ends, so the frame equals rest_pose there for every token.
inline pose::PoseFrame primitive_frame(const MotionPrimitive& prim,
                                       const pose::JointLayout& layout, double s) {
    detail::require_default_shape(layout, "primitive_frame");
    if (s < 0.0 || s > 1.0) throw PreconditionError("primitive_frame: phase outside [0,1]");
    const double a = std::sin(M_PI * s) * std::sin(M_PI * s);
    pose::PoseFrame f = rest_pose(layout);
    using namespace pose::joints;
    const bool move_right = prim.mode == 0 || prim.mode == 2;
    const bool move_left = prim.mode == 1 || prim.mode == 2;
    const double curl = a * prim.curl;
    const double spread = detail::kRestSpread + a * (prim.spread - detail::kRestSpread);
    const double wobble = a * prim.wobble;
    auto move_arm = [&](bool active, const detail::ArmRest& rest, const pose::Vec2& target,
                        int wrist_j, int elbow_j, int hand_base, bool right_side) {
        pose::Vec2 w = rest.wrist;
        if (active)
            w = {rest.wrist.x + a * (target.x - rest.wrist.x),
                 rest.wrist.y + a * (target.y - rest.wrist.y)};
        const pose::Vec2 e = detail::elbow_for(rest.shoulder, w, right_side);
        f.coords[static_cast<std::size_t>(wrist_j)] = w;
        f.coords[static_cast<std::size_t>(elbow_j)] = e;
        detail::place_hand(f, hand_base, w, e, active ? curl : 0.0,
                           active ? spread : detail::kRestSpread, active ? wobble : 0.0);
    };
    move_arm(move_right, detail::right_arm_rest(), prim.right_target, kRWrist, kRElbow,
             kRightHandBase, true);
    move_arm(move_left, detail::left_arm_rest(), prim.left_target, kLWrist, kLElbow,
             kLeftHandBase, false);
    return f;
}

// Concatenates one block of frames per token; phase runs 0..1 inclusive
// inside each block. Counters are the ground-truth progress t/(T-1).
inline pose::PoseSequence decode_tokens(const std::vector<int>& tokens,
                                        const pose::JointLayout& layout,
                                        int frames_per_primitive = kDefaultFramesPerPrimitive,
                                        double fps = 25.0) {
    detail::require_default_shape(layout, "decode_tokens");
    if (tokens.empty()) throw PreconditionError("decode_tokens: empty token sequence");
    if (frames_per_primitive < 2)
        throw ConfigError("decode_tokens: frames_per_primitive must be >= 2");
    pose::PoseSequence seq;
    seq.layout = layout;
    seq.fps = fps;
    for (int tok : tokens) {
        const MotionPrimitive prim = make_primitive(tok);
        for (int i = 0; i < frames_per_primitive; ++i) {
            const double s = static_cast<double>(i) / (frames_per_primitive - 1);
            seq.frames.push_back(primitive_frame(prim, layout, s));
        }
    }
    pose::set_ground_truth_counters(seq);
    seq.validate();
    return seq;
}

// Token names for vocab.txt: "sign_00", "sign_01", ...
inline std::vector<std::string> vocabulary_names(int vocab_size) {
    if (vocab_size < 1) throw PreconditionError("vocabulary_names: vocab size must be >= 1");
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(vocab_size));
    for (int i = 0; i < vocab_size; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "sign_%02d", i);
        names.emplace_back(buf);
    }
    return names;
}

}  // namespace signsynth::synth
