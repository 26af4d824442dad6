#pragma once

// Pose frames, sequences and affine normalization.

#include <algorithm>
#include <cmath>
#include <vector>

#include "signsynth/errors.hpp"
#include "signsynth/pose/layout.hpp"

namespace signsynth::pose {

struct Vec2 {
    double x = 0, y = 0;
};

struct PoseFrame {
    std::vector<Vec2> coords;        // normalized canvas units, usually [0,1]
    std::vector<double> confidence;  // per joint, in [0,1]
    double counter = 0;              // progress, in [0,1]

    int joint_count() const { return static_cast<int>(coords.size()); }
};

struct PoseSequence {
    std::vector<PoseFrame> frames;
    JointLayout layout;
    double fps = 25.0;

    int length() const { return static_cast<int>(frames.size()); }

    void validate() const {
        if (frames.empty()) throw SchemaError("pose sequence: empty");
        for (std::size_t t = 0; t < frames.size(); ++t) {
            const auto& f = frames[t];
            if (f.joint_count() != layout.joint_count() ||
                f.confidence.size() != f.coords.size())
                throw SchemaError("pose sequence: joint count mismatch at frame " +
                                  std::to_string(t));
            if (f.counter < 0.0 || f.counter > 1.0)
                throw SchemaError("pose sequence: counter out of range at frame " +
                                  std::to_string(t));
        }
    }
};

// Ground-truth progress value for frame t of T: t/(T-1), and 1.0 for a
// single-frame sequence.
inline double ground_truth_counter(int t, int total) {
    if (total <= 1) return 1.0;
    return static_cast<double>(t) / static_cast<double>(total - 1);
}

inline void set_ground_truth_counters(PoseSequence& seq) {
    const int total = seq.length();
    for (int t = 0; t < total; ++t) seq.frames[t].counter = ground_truth_counter(t, total);
}

struct NormParams {
    double scale = 1.0;
    Vec2 translation{0.0, 0.0};

    void validate() const {
        if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(translation.x) ||
            !std::isfinite(translation.y))
            throw PreconditionError("norm params: scale must be finite and positive");
    }

    NormParams inverse() const {
        validate();
        return {1.0 / scale, {-translation.x / scale, -translation.y / scale}};
    }
};

struct NormalizeResult {
    PoseSequence seq;
    bool out_of_frame = false;  // any coordinate left [-0.5, 1.5]
};

// p' = scale * p + translation, applied to every visible coordinate.
// Confidences and counters pass through untouched.
inline NormalizeResult normalize_pose(const PoseSequence& seq, const NormParams& params) {
    params.validate();
    NormalizeResult res;
    res.seq = seq;
    for (auto& f : res.seq.frames)
        for (auto& p : f.coords) {
            p.x = params.scale * p.x + params.translation.x;
            p.y = params.scale * p.y + params.translation.y;
            if (p.x < -0.5 || p.x > 1.5 || p.y < -0.5 || p.y > 1.5) res.out_of_frame = true;
        }
    return res;
}

namespace detail {

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Scale from the ratio of shoulder widths, translation from matching the
// median neck position to the target anchor. Medians are taken over frames
// where the needed joints are visible.
inline NormParams compute_norm_params(const PoseSequence& source, double target_shoulder_width,
                                      Vec2 target_neck) {
    std::vector<double> widths, neck_x, neck_y;
    for (const auto& f : source.frames) {
        if (f.confidence[joints::kRShoulder] > 0.0 && f.confidence[joints::kLShoulder] > 0.0) {
            const auto& r = f.coords[joints::kRShoulder];
            const auto& l = f.coords[joints::kLShoulder];
            widths.push_back(std::hypot(r.x - l.x, r.y - l.y));
        }
        if (f.confidence[joints::kNeck] > 0.0) {
            neck_x.push_back(f.coords[joints::kNeck].x);
            neck_y.push_back(f.coords[joints::kNeck].y);
        }
    }
    if (widths.empty())
        throw PreconditionError("compute_norm_params: no frame with both shoulders visible");
    if (neck_x.empty())
        throw PreconditionError("compute_norm_params: no frame with a visible neck");
    const double src_width = detail::median(widths);
    if (src_width <= 0.0)
        throw PreconditionError("compute_norm_params: degenerate source shoulder width");
    NormParams p;
    p.scale = target_shoulder_width / src_width;
    p.translation.x = target_neck.x - p.scale * detail::median(neck_x);
    p.translation.y = target_neck.y - p.scale * detail::median(neck_y);
    p.validate();
    return p;
}

// Pose frame as a flat [x0,y0,x1,y1,...] vector, the MDN target space.
inline std::vector<double> flatten_coords(const PoseFrame& f) {
    std::vector<double> v(static_cast<std::size_t>(f.joint_count()) * 2);
    for (int j = 0; j < f.joint_count(); ++j) {
        v[static_cast<std::size_t>(j) * 2] = f.coords[j].x;
        v[static_cast<std::size_t>(j) * 2 + 1] = f.coords[j].y;
    }
    return v;
}

inline PoseFrame unflatten_coords(const std::vector<double>& v, double counter = 0.0) {
    PoseFrame f;
    const int j = static_cast<int>(v.size() / 2);
    f.coords.resize(j);
    f.confidence.assign(j, 1.0);
    f.counter = counter;
    for (int i = 0; i < j; ++i) {
        f.coords[i].x = v[static_cast<std::size_t>(i) * 2];
        f.coords[i].y = v[static_cast<std::size_t>(i) * 2 + 1];
    }
    return f;
}

}  // namespace signsynth::pose
