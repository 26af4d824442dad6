#pragma once

// Skeleton layout: joint naming, limb connectivity, hand anchors.

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "signsynth/errors.hpp"

namespace signsynth::pose {

struct JointLayout {
    std::vector<std::string> joint_names;
    std::vector<std::pair<int, int>> limbs;
    int left_hand_anchor = -1;   // left middle knuckle
    int right_hand_anchor = -1;  // right middle knuckle

    int joint_count() const { return static_cast<int>(joint_names.size()); }
    int limb_count() const { return static_cast<int>(limbs.size()); }
    int dims() const { return 2 * joint_count(); }

    void validate() const {
        const int j = joint_count();
        std::set<std::pair<int, int>> seen;
        for (const auto& [a, b] : limbs) {
            if (a < 0 || a >= j || b < 0 || b >= j) throw SchemaError("layout: limb index out of range");
            if (a == b) throw SchemaError("layout: self-loop limb");
            if (!seen.insert({a, b}).second) throw SchemaError("layout: duplicate limb");
        }
        if (left_hand_anchor < 0 || left_hand_anchor >= j || right_hand_anchor < 0 ||
            right_hand_anchor >= j)
            throw SchemaError("layout: hand anchor out of range");
    }
};

namespace detail {

inline void append_hand(JointLayout& l, const std::string& prefix) {
    const int wrist = l.joint_count();
    l.joint_names.push_back(prefix + "_hand_wrist");
    static const char* fingers[5] = {"thumb", "index", "middle", "ring", "pinky"};
    for (int f = 0; f < 5; ++f) {
        int prev = wrist;
        for (int seg = 0; seg < 4; ++seg) {
            const int idx = l.joint_count();
            l.joint_names.push_back(prefix + "_hand_" + fingers[f] + std::to_string(seg));
            l.limbs.emplace_back(prev, idx);
            prev = idx;
        }
    }
}

}  // namespace detail

// Ten body joints (upper body plus hips so the torso box is defined) and two
// 21-joint hands. 52 joints, 50 limbs.
inline JointLayout default_layout() {
    JointLayout l;
    l.joint_names = {"nose",      "neck",      "r_shoulder", "r_elbow", "r_wrist",
                     "l_shoulder", "l_elbow",  "l_wrist",    "r_hip",   "l_hip"};
    l.limbs = {{1, 0}, {1, 2}, {2, 3}, {3, 4}, {1, 5}, {5, 6}, {6, 7}, {1, 8}, {1, 9}, {8, 9}};
    detail::append_hand(l, "left");   // joints 10..30
    detail::append_hand(l, "right");  // joints 31..51
    l.left_hand_anchor = 10 + 9;      // middle finger knuckle: wrist + thumb(4) + index(4) + 1
    l.right_hand_anchor = 31 + 9;
    l.validate();
    return l;
}

// Named joint indices into default_layout().
namespace joints {
constexpr int kNose = 0;
constexpr int kNeck = 1;
constexpr int kRShoulder = 2;
constexpr int kRElbow = 3;
constexpr int kRWrist = 4;
constexpr int kLShoulder = 5;
constexpr int kLElbow = 6;
constexpr int kLWrist = 7;
constexpr int kRHip = 8;
constexpr int kLHip = 9;
constexpr int kLeftHandBase = 10;
constexpr int kRightHandBase = 31;
constexpr int kHandJoints = 21;
}  // namespace joints

}  // namespace signsynth::pose
