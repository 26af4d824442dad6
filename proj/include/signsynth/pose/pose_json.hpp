#pragma once

// Pose file parsing and serialization. The on-disk schema follows the
// OpenPose output convention: per-frame people with flattened (x, y, c)
// triples in pixel units, plus a canvas block recording the pixel space.

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "signsynth/errors.hpp"
#include "signsynth/pose/pose.hpp"

namespace signsynth::pose {

namespace detail {

inline void read_triples(const nlohmann::json& arr, int count, int base, double width,
                         double height, PoseFrame& out, std::size_t frame_index,
                         const char* field) {
    if (static_cast<int>(arr.size()) != count * 3)
        throw SchemaError("pose file: " + std::string(field) + " has " +
                          std::to_string(arr.size()) + " values, expected " +
                          std::to_string(count * 3) + " at frame " + std::to_string(frame_index));
    for (int j = 0; j < count; ++j) {
        const double x = arr[static_cast<std::size_t>(j) * 3].get<double>();
        const double y = arr[static_cast<std::size_t>(j) * 3 + 1].get<double>();
        const double c = arr[static_cast<std::size_t>(j) * 3 + 2].get<double>();
        if (c <= 0.0) {
            out.coords[static_cast<std::size_t>(base + j)] = {0.0, 0.0};
            out.confidence[static_cast<std::size_t>(base + j)] = 0.0;
        } else {
            out.coords[static_cast<std::size_t>(base + j)] = {x / width, y / height};
            out.confidence[static_cast<std::size_t>(base + j)] = c;
        }
    }
}

}  // namespace detail

inline PoseSequence parse_pose_json(const std::string& bytes, const JointLayout& layout) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("pose file: malformed JSON at byte " + std::to_string(e.byte) + ": " +
                         e.what());
    }
    if (!doc.contains("canvas") || !doc.contains("frames"))
        throw SchemaError("pose file: missing canvas or frames");
    const double width = doc["canvas"].value("width", 0.0);
    const double height = doc["canvas"].value("height", 0.0);
    if (width <= 0.0 || height <= 0.0) throw SchemaError("pose file: bad canvas dimensions");

    const int total = layout.joint_count();
    const int body = total - 2 * joints::kHandJoints;
    if (body <= 0) throw SchemaError("pose file: layout too small for hand blocks");

    PoseSequence seq;
    seq.layout = layout;
    seq.fps = doc.value("fps", 25.0);
    const auto& frames = doc["frames"];
    for (std::size_t t = 0; t < frames.size(); ++t) {
        PoseFrame f;
        f.coords.assign(static_cast<std::size_t>(total), {0.0, 0.0});
        f.confidence.assign(static_cast<std::size_t>(total), 0.0);
        const auto& people = frames[t]["people"];
        if (!people.empty()) {
            const auto& p = people[0];
            detail::read_triples(p["pose_keypoints_2d"], body, 0, width, height, f, t,
                                 "pose_keypoints_2d");
            detail::read_triples(p["hand_left_keypoints_2d"], joints::kHandJoints,
                                 joints::kLeftHandBase, width, height, f, t,
                                 "hand_left_keypoints_2d");
            detail::read_triples(p["hand_right_keypoints_2d"], joints::kHandJoints,
                                 joints::kRightHandBase, width, height, f, t,
                                 "hand_right_keypoints_2d");
        }
        seq.frames.push_back(std::move(f));
    }
    if (seq.frames.empty()) throw SchemaError("pose file: no frames");
    set_ground_truth_counters(seq);
    seq.validate();
    return seq;
}

inline std::string serialize_pose_json(const PoseSequence& seq, double canvas_width = 256.0,
                                       double canvas_height = 256.0) {
    seq.validate();
    const int total = seq.layout.joint_count();
    const int body = total - 2 * joints::kHandJoints;
    nlohmann::json doc;
    doc["canvas"] = {{"width", canvas_width}, {"height", canvas_height}};
    doc["fps"] = seq.fps;
    doc["frames"] = nlohmann::json::array();
    auto block = [&](const PoseFrame& f, int base, int count) {
        nlohmann::json arr = nlohmann::json::array();
        for (int j = 0; j < count; ++j) {
            const auto idx = static_cast<std::size_t>(base + j);
            if (f.confidence[idx] <= 0.0) {
                arr.push_back(0.0);
                arr.push_back(0.0);
                arr.push_back(0.0);
            } else {
                arr.push_back(f.coords[idx].x * canvas_width);
                arr.push_back(f.coords[idx].y * canvas_height);
                arr.push_back(f.confidence[idx]);
            }
        }
        return arr;
    };
    for (const auto& f : seq.frames) {
        nlohmann::json person;
        person["pose_keypoints_2d"] = block(f, 0, body);
        person["hand_left_keypoints_2d"] = block(f, joints::kLeftHandBase, joints::kHandJoints);
        person["hand_right_keypoints_2d"] = block(f, joints::kRightHandBase, joints::kHandJoints);
        nlohmann::json frame;
        frame["people"] = nlohmann::json::array({person});
        doc["frames"].push_back(std::move(frame));
    }
    return doc.dump();
}

}  // namespace signsynth::pose
