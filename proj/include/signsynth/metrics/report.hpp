#pragma once

// Per-frame and aggregate evaluation reports, the torso style-distance
// diagnostic, and the JSON/CSV serializations the evaluate command emits.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "signsynth/metrics/fid.hpp"
#include "signsynth/metrics/hand_metrics.hpp"
#include "signsynth/metrics/ssim.hpp"
#include "signsynth/pose/pose.hpp"
#include "signsynth/pose2video/generator.hpp"

namespace signsynth::metrics {

// Euclidean distance between the mean torso colors of a frame and a style
// image, where the torso is the bounding box over the pose's shoulder and
// hip joints. A diagnostic for style control, not a published metric.
inline double style_distance(const img::Frame& frame, const p2v::StyleImage& style,
                             const pose::PoseFrame& pose_frame,
                             const pose::JointLayout& layout) {
    if (!frame.same_shape(style.pixels))
        throw PreconditionError("style_distance: frame/style shape mismatch");
    std::vector<std::size_t> torso;
    for (std::size_t j = 0; j < layout.joint_names.size(); ++j) {
        const auto& name = layout.joint_names[j];
        const bool is_torso = name.find("shoulder") != std::string::npos ||
                              name.find("hip") != std::string::npos;
        if (is_torso && pose_frame.confidence[j] > 0.0) torso.push_back(j);
    }
    if (torso.size() < 2)
        throw PreconditionError("style_distance: torso joints missing from pose");

    const int h = frame.dim(1), w = frame.dim(2);
    const auto to_px = [](double v, int extent) {
        return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * (extent - 1)));
    };
    int x0 = w, x1 = -1, y0 = h, y1 = -1;
    for (const auto j : torso) {
        const int px = to_px(pose_frame.coords[j].x, w);
        const int py = to_px(pose_frame.coords[j].y, h);
        x0 = std::min(x0, px);
        x1 = std::max(x1, px);
        y0 = std::min(y0, py);
        y1 = std::max(y1, py);
    }

    double dist_sq = 0.0;
    for (int c = 0; c < 3; ++c) {
        double mean_f = 0.0, mean_s = 0.0;
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                mean_f += frame.at3(c, y, x);
                mean_s += style.pixels.at3(c, y, x);
            }
        const double n = static_cast<double>(y1 - y0 + 1) * (x1 - x0 + 1);
        const double d = mean_f / n - mean_s / n;
        dist_sq += d * d;
    }
    return std::sqrt(dist_sq);
}

struct FrameMetrics {
    int frame = 0;
    double ssim = 0.0;
    std::optional<double> hand_ssim;
    std::optional<double> hand_pose;  // patch pixels
};

struct MetricReport {
    double ssim = 0.0;
    std::optional<double> hand_ssim;
    std::optional<double> hand_pose;
    std::optional<double> fid;
    std::vector<FrameMetrics> per_frame;
};

namespace detail {

inline std::optional<double> mean_present(
    const std::vector<FrameMetrics>& rows,
    std::optional<double> FrameMetrics::*field) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : rows)
        if (r.*field) {
            sum += (r.*field).value();
            ++n;
        }
    if (n == 0) return std::nullopt;
    return sum / n;
}

}  // namespace detail

// Frame-by-frame SSIM / hand metrics of produced against target, aggregated
// as the mean of the per-frame values (hand metrics over the frames where a
// hand was visible). FID is a set-level metric and is attached by the caller.
inline MetricReport evaluate_frames(const std::vector<img::Frame>& produced,
                                    const std::vector<img::Frame>& target,
                                    const pose::PoseSequence& poses,
                                    const p2v::HandKeypointNet* h, img::Rgb background = {}) {
    if (produced.size() != target.size() || produced.size() != poses.frames.size())
        throw PreconditionError("evaluate_frames: produced/target/pose counts differ");
    if (produced.empty()) throw PreconditionError("evaluate_frames: no frames");

    MetricReport report;
    double ssim_sum = 0.0;
    for (std::size_t t = 0; t < produced.size(); ++t) {
        FrameMetrics fm;
        fm.frame = static_cast<int>(t);
        fm.ssim = ssim(produced[t], target[t]);
        fm.hand_ssim =
            hand_ssim(produced[t], target[t], poses.frames[t], poses.layout, background);
        if (h)
            fm.hand_pose = hand_pose_distance(produced[t], target[t], poses.frames[t],
                                              poses.layout, *h, background);
        ssim_sum += fm.ssim;
        report.per_frame.push_back(fm);
    }
    report.ssim = ssim_sum / static_cast<double>(produced.size());
    report.hand_ssim = detail::mean_present(report.per_frame, &FrameMetrics::hand_ssim);
    report.hand_pose = detail::mean_present(report.per_frame, &FrameMetrics::hand_pose);
    return report;
}

inline nlohmann::json report_to_json(const MetricReport& r) {
    nlohmann::json j;
    j["ssim"] = r.ssim;
    if (r.hand_ssim) j["hand_ssim"] = *r.hand_ssim;
    if (r.hand_pose) j["hand_pose"] = *r.hand_pose;
    if (r.fid) j["fid"] = *r.fid;
    j["hand_pose_metric"] = "mean per-point Euclidean distance, patch pixels";
    j["per_frame"] = nlohmann::json::array();
    for (const auto& fm : r.per_frame) {
        nlohmann::json row;
        row["frame"] = fm.frame;
        row["ssim"] = fm.ssim;
        if (fm.hand_ssim) row["hand_ssim"] = *fm.hand_ssim;
        if (fm.hand_pose) row["hand_pose"] = *fm.hand_pose;
        j["per_frame"].push_back(row);
    }
    return j;
}

inline void write_report_json(const std::filesystem::path& path, const MetricReport& r) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write report: " + path.string());
    os << report_to_json(r).dump(2) << "\n";
}

// One CSV row per frame; absent hand metrics leave the cell empty.
inline void write_report_csv(const std::filesystem::path& path, const MetricReport& r) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write report: " + path.string());
    os << "frame,ssim,hand_ssim,hand_pose\n";
    char buf[64];
    const auto cell = [&buf](std::optional<double> v) -> std::string {
        if (!v) return "";
        std::snprintf(buf, sizeof(buf), "%.9g", *v);
        return buf;
    };
    for (const auto& fm : r.per_frame) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g", fm.frame, fm.ssim);
        os << buf << "," << cell(fm.hand_ssim) << "," << cell(fm.hand_pose) << "\n";
    }
}

}  // namespace signsynth::metrics
