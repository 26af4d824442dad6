#pragma once

// On-disk synthetic corpus: paired token sequences, pose files, per-style
// rendered frame directories, hand keypoint labels, style reference images,
// and a train/val/test manifest. Generation is deterministic under the
// config seed; each sequence draws from its own forked RNG stream, so the
// corpus content is independent of generation order.
//
// Layout under the corpus root:
//   vocab.txt                          one token name per line
//   manifest.jsonl                     one JSON object per sequence
//   styles/style{m}.png                canonical reference image per style
//   poses/{id}.json                    pose sequence
//   frames/{id}/style{m}/frame{t:05d}.png
//   hands/{id}/labels.json             keypoints per (frame, side)

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "signsynth/core/image.hpp"
#include "signsynth/core/rng.hpp"
#include "signsynth/errors.hpp"
#include "signsynth/pose/hands.hpp"
#include "signsynth/pose/layout.hpp"
#include "signsynth/pose/pose.hpp"
#include "signsynth/pose/pose_json.hpp"
#include "signsynth/pose2video/handnet.hpp"
#include "signsynth/synthdata/primitives.hpp"
#include "signsynth/synthdata/renderer.hpp"
#include "signsynth/synthdata/styles.hpp"

namespace signsynth::synth {

struct CorpusConfig {
    int n_sequences = 200;
    int n_styles = 8;
    int vocab_size = 20;
    std::uint64_t seed = 7;
    int resolution = 64;
    double fps = 25.0;
    int min_primitives = 3;
    int max_primitives = 8;
    int frames_per_primitive = kDefaultFramesPerPrimitive;

    void validate() const {
        if (n_styles < 2)
            throw PreconditionError(
                "generate_corpus: controllable generation needs at least 2 styles, got " +
                std::to_string(n_styles));
        if (n_sequences < 1) throw ConfigError("generate_corpus: n_sequences must be >= 1");
        if (vocab_size < 1) throw ConfigError("generate_corpus: vocab_size must be >= 1");
        if (min_primitives < 1 || max_primitives < min_primitives)
            throw ConfigError("generate_corpus: need 1 <= min_primitives <= max_primitives");
        if (frames_per_primitive < 2)
            throw ConfigError("generate_corpus: frames_per_primitive must be >= 2");
        if (resolution < 16) throw ConfigError("generate_corpus: resolution must be >= 16");
    }
};

struct SplitCounts {
    int train = 0, val = 0, test = 0;
};

struct CorpusSummary {
    int n_sequences = 0;
    int n_styles = 0;
    SplitCounts splits;
    long long frames_written = 0;  // PNG count across all styles
    std::filesystem::path root;
};

struct ManifestEntry {
    std::string id;
    std::vector<int> tokens;
    std::string split;
    int frames = 0;
    int styles = 0;
    int resolution = 0;
    double fps = 25.0;
};

struct HandLabelEntry {
    int frame = 0;
    pose::Side side = pose::Side::kLeft;
    pose::Keypoints points;
};

inline std::string sequence_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "seq%04d", index);
    return buf;
}

inline std::string frame_name(int t) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "frame%05d.png", t);
    return buf;
}

inline std::filesystem::path pose_path(const std::filesystem::path& root, const std::string& id) {
    return root / "poses" / (id + ".json");
}

inline std::filesystem::path frame_path(const std::filesystem::path& root, const std::string& id,
                                        int style, int t) {
    return root / "frames" / id / ("style" + std::to_string(style)) / frame_name(t);
}

inline std::filesystem::path style_image_path(const std::filesystem::path& root, int style) {
    return root / "styles" / ("style" + std::to_string(style) + ".png");
}

inline std::filesystem::path labels_path(const std::filesystem::path& root,
                                         const std::string& id) {
    return root / "hands" / id / "labels.json";
}

// First 80% of sequences train, next 10% val, rest test (by index).
inline std::string split_for(int index, int total) {
    if (index < total * 8 / 10) return "train";
    if (index < total * 9 / 10) return "val";
    return "test";
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

inline void make_dirs(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

inline nlohmann::json labels_to_json(const std::vector<HandLabelEntry>& entries,
                                     int resolution) {
    nlohmann::json doc;
    doc["resolution"] = resolution;
    doc["entries"] = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json row;
        row["frame"] = e.frame;
        row["side"] = pose::side_name(e.side);
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : e.points.points) pts.push_back({p.x, p.y});
        row["points"] = std::move(pts);
        doc["entries"].push_back(std::move(row));
    }
    return doc;
}

}  // namespace detail

inline CorpusSummary generate_corpus(const std::filesystem::path& root,
                                     const CorpusConfig& cfg) {
    cfg.validate();
    const pose::JointLayout layout = pose::default_layout();
    const std::vector<StyleSpec> styles = default_styles(cfg.n_styles, cfg.resolution);

    detail::make_dirs(root / "poses");
    detail::make_dirs(root / "styles");
    detail::make_dirs(root / "frames");
    detail::make_dirs(root / "hands");

    {
        std::ostringstream vocab;
        for (const auto& name : vocabulary_names(cfg.vocab_size)) vocab << name << '\n';
        detail::write_text(root / "vocab.txt", vocab.str());
    }
    for (const auto& s : styles)
        img::write_png(style_image_path(root, s.style_id),
                       style_reference_image(s, layout, cfg.resolution));

    CorpusSummary summary;
    summary.n_sequences = cfg.n_sequences;
    summary.n_styles = cfg.n_styles;
    summary.root = root;

    const std::filesystem::path manifest_path = root / "manifest.jsonl";
    std::ofstream manifest(manifest_path, std::ios::binary);
    if (!manifest) throw IoError("cannot open " + manifest_path.string());

    const nn::Rng master(cfg.seed);
    for (int i = 0; i < cfg.n_sequences; ++i) {
        nn::Rng rng = master.fork(static_cast<std::uint64_t>(i));
        const int n_prims =
            cfg.min_primitives + rng.uniform_int(cfg.max_primitives - cfg.min_primitives + 1);
        std::vector<int> tokens;
        tokens.reserve(static_cast<std::size_t>(n_prims));
        for (int j = 0; j < n_prims; ++j) tokens.push_back(rng.uniform_int(cfg.vocab_size));

        const pose::PoseSequence seq =
            decode_tokens(tokens, layout, cfg.frames_per_primitive, cfg.fps);
        const std::string id = sequence_id(i);
        detail::write_text(pose_path(root, id), pose::serialize_pose_json(seq));

        for (const auto& style : styles) {
            detail::make_dirs(root / "frames" / id / ("style" + std::to_string(style.style_id)));
            for (int t = 0; t < seq.length(); ++t) {
                img::write_png(
                    frame_path(root, id, style.style_id, t),
                    render_signer(seq.frames[static_cast<std::size_t>(t)], style, layout,
                                  cfg.resolution));
                ++summary.frames_written;
            }
        }

        std::vector<HandLabelEntry> labels;
        for (int t = 0; t < seq.length(); ++t)
            for (pose::Side side : {pose::Side::kLeft, pose::Side::kRight}) {
                const int anchor = side == pose::Side::kLeft ? layout.left_hand_anchor
                                                             : layout.right_hand_anchor;
                const auto& f = seq.frames[static_cast<std::size_t>(t)];
                if (f.confidence[static_cast<std::size_t>(anchor)] <= 0.0) continue;
                labels.push_back({t, side,
                                  hand_keypoint_labels(f, layout, side, cfg.resolution,
                                                       cfg.resolution)});
            }
        detail::make_dirs(root / "hands" / id);
        detail::write_text(labels_path(root, id),
                           detail::labels_to_json(labels, cfg.resolution).dump(2) + "\n");

        const std::string split = split_for(i, cfg.n_sequences);
        if (split == "train")
            ++summary.splits.train;
        else if (split == "val")
            ++summary.splits.val;
        else
            ++summary.splits.test;

        nlohmann::json line;
        line["id"] = id;
        line["tokens"] = tokens;
        line["text_tokens"] = tokens;  // alias used by the text-to-pose reader
        line["pose_file"] = "poses/" + id + ".json";
        line["split"] = split;
        line["frames"] = seq.length();
        line["styles"] = cfg.n_styles;
        line["resolution"] = cfg.resolution;
        line["fps"] = cfg.fps;
        manifest << line.dump() << '\n';
    }
    if (!manifest) throw IoError("write failed: " + manifest_path.string());
    return summary;
}

// ---------------------------------------------------------------------------
// Readers

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& root) {
    const std::filesystem::path path = root / "manifest.jsonl";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        ManifestEntry e;
        try {
            e.id = doc.at("id").get<std::string>();
            e.tokens = doc.at("tokens").get<std::vector<int>>();
            e.split = doc.at("split").get<std::string>();
            e.frames = doc.at("frames").get<int>();
            e.styles = doc.at("styles").get<int>();
            e.resolution = doc.at("resolution").get<int>();
            e.fps = doc.at("fps").get<double>();
        } catch (const nlohmann::json::exception& e2) {
            throw SchemaError("manifest line " + std::to_string(line_no) + ": " + e2.what());
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

inline pose::PoseSequence load_pose(const std::filesystem::path& root, const std::string& id,
                                    const pose::JointLayout& layout) {
    const std::filesystem::path path = pose_path(root, id);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream bytes;
    bytes << in.rdbuf();
    return pose::parse_pose_json(bytes.str(), layout);
}

inline std::vector<HandLabelEntry> read_hand_labels(const std::filesystem::path& root,
                                                    const std::string& id) {
    const std::filesystem::path path = labels_path(root, id);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("hand labels " + path.string() + ": " + e.what());
    }
    std::vector<HandLabelEntry> out;
    for (const auto& row : doc.at("entries")) {
        HandLabelEntry e;
        e.frame = row.at("frame").get<int>();
        const std::string side = row.at("side").get<std::string>();
        if (side != "left" && side != "right")
            throw SchemaError("hand labels " + path.string() + ": bad side '" + side + "'");
        e.side = side == "left" ? pose::Side::kLeft : pose::Side::kRight;
        for (const auto& p : row.at("points"))
            e.points.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        if (static_cast<int>(e.points.points.size()) != pose::joints::kHandJoints)
            throw SchemaError("hand labels " + path.string() + ": wrong point count");
        out.push_back(std::move(e));
    }
    return out;
}

// Assembles keypoint-head training pairs from stored frames and labels:
// crops a hand window from a randomly chosen style render and pairs it with
// the geometric label. Deterministic under seed.
inline std::vector<p2v::HandSample> build_hand_training_set(
    const std::filesystem::path& root, const pose::JointLayout& layout,
    const std::vector<ManifestEntry>& entries, int max_samples, std::uint64_t seed) {
    if (max_samples < 1)
        throw PreconditionError("build_hand_training_set: max_samples must be >= 1");
    if (entries.empty()) throw PreconditionError("build_hand_training_set: no sequences");
    nn::Rng rng(seed);
    const std::vector<StyleSpec> styles =
        default_styles(entries.front().styles, entries.front().resolution);

    std::vector<std::pair<int, int>> candidates;  // (entry index, frame)
    for (int e = 0; e < static_cast<int>(entries.size()); ++e)
        for (int t = 0; t < entries[static_cast<std::size_t>(e)].frames; ++t)
            candidates.emplace_back(e, t);
    for (std::size_t k = candidates.size(); k > 1; --k)
        std::swap(candidates[k - 1], candidates[static_cast<std::size_t>(
                                          rng.uniform_int(static_cast<int>(k)))]);

    std::vector<p2v::HandSample> samples;
    std::string cached_id;
    pose::PoseSequence cached_seq;
    std::vector<HandLabelEntry> cached_labels;
    for (std::size_t k = 0; k < candidates.size() &&
                            samples.size() < static_cast<std::size_t>(max_samples);
         ++k) {
        const auto& entry = entries[static_cast<std::size_t>(candidates[k].first)];
        const int t = candidates[k].second;
        if (entry.id != cached_id) {
            cached_seq = load_pose(root, entry.id, layout);
            cached_labels = read_hand_labels(root, entry.id);
            cached_id = entry.id;
        }
        const pose::Side side = k % 2 == 0 ? pose::Side::kLeft : pose::Side::kRight;
        const HandLabelEntry* label = nullptr;
        for (const auto& l : cached_labels)
            if (l.frame == t && l.side == side) label = &l;
        if (!label) continue;
        const int style = rng.uniform_int(entry.styles);
        const img::Frame frame = img::read_png(frame_path(root, entry.id, style, t));
        const pose::HandCrop crop =
            crop_hand(frame, cached_seq.frames[static_cast<std::size_t>(t)], layout, side,
                      styles[static_cast<std::size_t>(style)].background_color, t);
        samples.push_back({crop.patch, label->points});
    }
    if (samples.empty()) throw PreconditionError("build_hand_training_set: no usable hands");
    return samples;
}

}  // namespace signsynth::synth
