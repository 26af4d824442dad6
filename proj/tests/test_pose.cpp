#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "signsynth/core/rng.hpp"
#include "signsynth/pose/hands.hpp"
#include "signsynth/pose/heatmap.hpp"
#include "signsynth/pose/layout.hpp"
#include "signsynth/pose/pose.hpp"
#include "signsynth/pose/pose_json.hpp"

namespace pose = signsynth::pose;
namespace img = signsynth::img;
using signsynth::nn::Rng;

namespace {

pose::PoseSequence random_sequence(Rng& rng, const pose::JointLayout& layout, int frames,
                                   double drop_prob = 0.0) {
    pose::PoseSequence seq;
    seq.layout = layout;
    for (int t = 0; t < frames; ++t) {
        pose::PoseFrame f;
        for (int j = 0; j < layout.joint_count(); ++j) {
            if (drop_prob > 0.0 && rng.uniform() < drop_prob) {
                f.coords.push_back({0.0, 0.0});
                f.confidence.push_back(0.0);
            } else {
                f.coords.push_back({rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)});
                f.confidence.push_back(rng.uniform(0.5, 1.0));
            }
        }
        f.counter = pose::ground_truth_counter(t, frames);
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

}  // namespace

// ---------------------------------------------------------------------------
// Layout
// ---------------------------------------------------------------------------

TEST_CASE("default layout is consistent") {
    const auto l = pose::default_layout();
    REQUIRE(l.joint_count() == 52);
    REQUIRE(l.limb_count() == 50);
    REQUIRE(l.dims() == 104);
    REQUIRE(l.joint_names[static_cast<std::size_t>(l.left_hand_anchor)] == "left_hand_middle0");
    REQUIRE(l.joint_names[static_cast<std::size_t>(l.right_hand_anchor)] ==
            "right_hand_middle0");
}

TEST_CASE("layout validation rejects malformed tables") {
    pose::JointLayout l;
    l.joint_names = {"a", "b"};
    l.left_hand_anchor = 0;
    l.right_hand_anchor = 1;
    l.limbs = {{0, 1}, {0, 1}};
    REQUIRE_THROWS_AS(l.validate(), signsynth::SchemaError);
    l.limbs = {{0, 0}};
    REQUIRE_THROWS_AS(l.validate(), signsynth::SchemaError);
    l.limbs = {{0, 5}};
    REQUIRE_THROWS_AS(l.validate(), signsynth::SchemaError);
    l.limbs = {{0, 1}};
    l.right_hand_anchor = 7;
    REQUIRE_THROWS_AS(l.validate(), signsynth::SchemaError);
}

// ---------------------------------------------------------------------------
// Counters
// ---------------------------------------------------------------------------

TEST_CASE("ground truth counters are affine with endpoints 0 and 1") {
    REQUIRE(pose::ground_truth_counter(0, 5) == 0.0);
    REQUIRE(pose::ground_truth_counter(4, 5) == 1.0);
    REQUIRE(pose::ground_truth_counter(2, 5) == Catch::Approx(0.5));
    REQUIRE(pose::ground_truth_counter(0, 1) == 1.0);
    for (int total : {2, 7, 40})
        for (int t = 1; t < total; ++t)
            REQUIRE(pose::ground_truth_counter(t, total) >
                    pose::ground_truth_counter(t - 1, total));
}

// ---------------------------------------------------------------------------
// Pose file parsing
// ---------------------------------------------------------------------------

TEST_CASE("parse maps canvas-center pixels to (0.5, 0.5)") {
    const auto layout = pose::default_layout();
    nlohmann::json person;
    auto triples = [&](int count) {
        nlohmann::json a = nlohmann::json::array();
        for (int i = 0; i < count; ++i) {
            a.push_back(50.0);
            a.push_back(50.0);
            a.push_back(0.9);
        }
        return a;
    };
    person["pose_keypoints_2d"] = triples(10);
    person["hand_left_keypoints_2d"] = triples(21);
    person["hand_right_keypoints_2d"] = triples(21);
    nlohmann::json doc;
    doc["canvas"] = {{"width", 100}, {"height", 100}};
    doc["frames"] = {{{"people", {person}}}};
    const auto seq = pose::parse_pose_json(doc.dump(), layout);
    REQUIRE(seq.length() == 1);
    for (const auto& p : seq.frames[0].coords) {
        REQUIRE(p.x == Catch::Approx(0.5));
        REQUIRE(p.y == Catch::Approx(0.5));
    }
    REQUIRE(seq.frames[0].counter == 1.0);
}

TEST_CASE("zero-confidence joints become (0,0) with confidence 0") {
    const auto layout = pose::default_layout();
    Rng rng(31);
    auto seq = random_sequence(rng, layout, 3);
    seq.frames[1].coords[4] = {0.7, 0.7};
    seq.frames[1].confidence[4] = 0.0;
    const auto back = pose::parse_pose_json(pose::serialize_pose_json(seq), layout);
    REQUIRE(back.frames[1].confidence[4] == 0.0);
    REQUIRE(back.frames[1].coords[4].x == 0.0);
    REQUIRE(back.frames[1].coords[4].y == 0.0);
}

TEST_CASE("serialize then parse is identity to 1e-6 over random sequences") {
    const auto layout = pose::default_layout();
    Rng rng(32);
    for (int trial = 0; trial < 100; ++trial) {
        const auto seq =
            random_sequence(rng, layout, 1 + static_cast<int>(rng.uniform_int(6)), 0.1);
        const auto back = pose::parse_pose_json(pose::serialize_pose_json(seq), layout);
        REQUIRE(back.length() == seq.length());
        for (int t = 0; t < seq.length(); ++t)
            for (int j = 0; j < layout.joint_count(); ++j) {
                const auto idx = static_cast<std::size_t>(j);
                if (seq.frames[t].confidence[idx] <= 0.0) {
                    REQUIRE(back.frames[t].confidence[idx] == 0.0);
                } else {
                    REQUIRE(back.frames[t].coords[idx].x ==
                            Catch::Approx(seq.frames[t].coords[idx].x).margin(1e-6));
                    REQUIRE(back.frames[t].coords[idx].y ==
                            Catch::Approx(seq.frames[t].coords[idx].y).margin(1e-6));
                    REQUIRE(back.frames[t].confidence[idx] ==
                            Catch::Approx(seq.frames[t].confidence[idx]).margin(1e-6));
                }
            }
        // parse(serialize(parse(serialize(x)))) fixed point
        const auto twice = pose::parse_pose_json(pose::serialize_pose_json(back), layout);
        for (int t = 0; t < seq.length(); ++t)
            for (int j = 0; j < layout.joint_count(); ++j) {
                const auto idx = static_cast<std::size_t>(j);
                REQUIRE(twice.frames[t].coords[idx].x == back.frames[t].coords[idx].x);
                REQUIRE(twice.frames[t].coords[idx].y == back.frames[t].coords[idx].y);
            }
    }
}

TEST_CASE("malformed JSON reports a byte offset") {
    const auto layout = pose::default_layout();
    try {
        pose::parse_pose_json("{\"canvas\": {", layout);
        FAIL("expected ParseError");
    } catch (const signsynth::ParseError& e) {
        REQUIRE(std::string(e.what()).find("byte") != std::string::npos);
    }
}

TEST_CASE("joint-count mismatch names the offending frame") {
    const auto layout = pose::default_layout();
    Rng rng(33);
    auto seq = random_sequence(rng, layout, 3);
    nlohmann::json doc = nlohmann::json::parse(pose::serialize_pose_json(seq));
    auto& arr = doc["frames"][2]["people"][0]["pose_keypoints_2d"];
    arr.erase(arr.size() - 1);
    try {
        pose::parse_pose_json(doc.dump(), layout);
        FAIL("expected SchemaError");
    } catch (const signsynth::SchemaError& e) {
        REQUIRE(std::string(e.what()).find("frame 2") != std::string::npos);
    }
}

TEST_CASE("parsed counters follow t/(T-1)") {
    const auto layout = pose::default_layout();
    Rng rng(34);
    const auto seq = random_sequence(rng, layout, 5);
    const auto back = pose::parse_pose_json(pose::serialize_pose_json(seq), layout);
    for (int t = 0; t < 5; ++t)
        REQUIRE(back.frames[t].counter == Catch::Approx(t / 4.0));
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

TEST_CASE("normalize with identity params is the identity") {
    const auto layout = pose::default_layout();
    Rng rng(35);
    const auto seq = random_sequence(rng, layout, 4);
    const auto out = pose::normalize_pose(seq, {1.0, {0.0, 0.0}});
    REQUIRE_FALSE(out.out_of_frame);
    for (int t = 0; t < 4; ++t)
        for (int j = 0; j < layout.joint_count(); ++j) {
            REQUIRE(out.seq.frames[t].coords[static_cast<std::size_t>(j)].x ==
                    seq.frames[t].coords[static_cast<std::size_t>(j)].x);
            REQUIRE(out.seq.frames[t].coords[static_cast<std::size_t>(j)].y ==
                    seq.frames[t].coords[static_cast<std::size_t>(j)].y);
        }
}

TEST_CASE("(0.5, 0.5) is the fixed point of scale 2 translate (-0.5, -0.5)") {
    const auto layout = pose::default_layout();
    pose::PoseSequence seq;
    seq.layout = layout;
    pose::PoseFrame f;
    f.coords.assign(static_cast<std::size_t>(layout.joint_count()), {0.5, 0.5});
    f.confidence.assign(static_cast<std::size_t>(layout.joint_count()), 1.0);
    f.counter = 1.0;
    seq.frames.push_back(f);
    const auto out = pose::normalize_pose(seq, {2.0, {-0.5, -0.5}});
    REQUIRE(out.seq.frames[0].coords[0].x == Catch::Approx(0.5));
    REQUIRE(out.seq.frames[0].coords[0].y == Catch::Approx(0.5));
}

TEST_CASE("normalize matches the per-coordinate affine oracle") {
    const auto layout = pose::default_layout();
    Rng rng(36);
    for (int trial = 0; trial < 20; ++trial) {
        const auto seq = random_sequence(rng, layout, 3);
        const pose::NormParams p{rng.uniform(0.5, 2.0),
                                 {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)}};
        const auto out = pose::normalize_pose(seq, p);
        for (int t = 0; t < 3; ++t)
            for (int j = 0; j < layout.joint_count(); ++j) {
                const auto idx = static_cast<std::size_t>(j);
                REQUIRE(out.seq.frames[t].coords[idx].x ==
                        p.scale * seq.frames[t].coords[idx].x + p.translation.x);
                REQUIRE(out.seq.frames[t].coords[idx].y ==
                        p.scale * seq.frames[t].coords[idx].y + p.translation.y);
                REQUIRE(out.seq.frames[t].confidence[idx] == seq.frames[t].confidence[idx]);
            }
    }
}

TEST_CASE("normalize composed with inverse params is identity within 1e-9") {
    const auto layout = pose::default_layout();
    Rng rng(37);
    const auto seq = random_sequence(rng, layout, 5);
    const pose::NormParams p{1.7, {0.21, -0.08}};
    const auto fwd = pose::normalize_pose(seq, p);
    const auto back = pose::normalize_pose(fwd.seq, p.inverse());
    for (int t = 0; t < 5; ++t)
        for (int j = 0; j < layout.joint_count(); ++j) {
            const auto idx = static_cast<std::size_t>(j);
            REQUIRE(back.seq.frames[t].coords[idx].x ==
                    Catch::Approx(seq.frames[t].coords[idx].x).margin(1e-9));
            REQUIRE(back.seq.frames[t].coords[idx].y ==
                    Catch::Approx(seq.frames[t].coords[idx].y).margin(1e-9));
        }
}

TEST_CASE("normalize flags out-of-frame results and rejects bad scales") {
    const auto layout = pose::default_layout();
    Rng rng(38);
    const auto seq = random_sequence(rng, layout, 2);
    REQUIRE(pose::normalize_pose(seq, {4.0, {0.0, 0.0}}).out_of_frame);
    REQUIRE_THROWS_AS(pose::normalize_pose(seq, {0.0, {0.0, 0.0}}),
                      signsynth::PreconditionError);
    REQUIRE_THROWS_AS(pose::normalize_pose(seq, {-1.0, {0.0, 0.0}}),
                      signsynth::PreconditionError);
}

// ---------------------------------------------------------------------------
// Norm param estimation
// ---------------------------------------------------------------------------

namespace {

pose::PoseSequence shoulder_sequence(double width, pose::Vec2 neck, int frames = 4) {
    const auto layout = pose::default_layout();
    pose::PoseSequence seq;
    seq.layout = layout;
    for (int t = 0; t < frames; ++t) {
        pose::PoseFrame f;
        f.coords.assign(static_cast<std::size_t>(layout.joint_count()), {0.4, 0.4});
        f.confidence.assign(static_cast<std::size_t>(layout.joint_count()), 1.0);
        f.counter = pose::ground_truth_counter(t, frames);
        f.coords[pose::joints::kNeck] = neck;
        f.coords[pose::joints::kRShoulder] = {neck.x - width / 2, neck.y};
        f.coords[pose::joints::kLShoulder] = {neck.x + width / 2, neck.y};
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

}  // namespace

TEST_CASE("already-normalized source gives identity params") {
    const auto seq = shoulder_sequence(0.2, {0.5, 0.3});
    const auto p = pose::compute_norm_params(seq, 0.2, {0.5, 0.3});
    REQUIRE(p.scale == Catch::Approx(1.0));
    REQUIRE(p.translation.x == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(p.translation.y == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("scale is the shoulder width ratio") {
    const auto seq = shoulder_sequence(0.1, {0.5, 0.3});
    const auto p = pose::compute_norm_params(seq, 0.2, {0.5, 0.3});
    REQUIRE(p.scale == Catch::Approx(2.0));
}

TEST_CASE("recovered params invert a known distortion within 1e-6") {
    Rng rng(39);
    for (int trial = 0; trial < 10; ++trial) {
        const double width = rng.uniform(0.15, 0.3);
        const pose::Vec2 neck{rng.uniform(0.4, 0.6), rng.uniform(0.2, 0.4)};
        const auto canonical = shoulder_sequence(width, neck);
        const pose::NormParams distort{rng.uniform(0.5, 2.0),
                                       {rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)}};
        const auto distorted = pose::normalize_pose(canonical, distort).seq;
        const auto recovered = pose::compute_norm_params(distorted, width, neck);
        // recovered must undo the distortion
        const auto restored = pose::normalize_pose(distorted, recovered).seq;
        for (int j = 0; j < canonical.layout.joint_count(); ++j) {
            const auto idx = static_cast<std::size_t>(j);
            REQUIRE(restored.frames[0].coords[idx].x ==
                    Catch::Approx(canonical.frames[0].coords[idx].x).margin(1e-6));
            REQUIRE(restored.frames[0].coords[idx].y ==
                    Catch::Approx(canonical.frames[0].coords[idx].y).margin(1e-6));
        }
    }
}

TEST_CASE("missing shoulders raise an insufficient-landmarks error") {
    auto seq = shoulder_sequence(0.2, {0.5, 0.3});
    for (auto& f : seq.frames) {
        f.confidence[pose::joints::kRShoulder] = 0.0;
    }
    REQUIRE_THROWS_AS(pose::compute_norm_params(seq, 0.2, {0.5, 0.3}),
                      signsynth::PreconditionError);
}

// ---------------------------------------------------------------------------
// Heat-map rasterization
// ---------------------------------------------------------------------------

namespace {

pose::JointLayout two_joint_layout() {
    pose::JointLayout l;
    l.joint_names = {"a", "b"};
    l.limbs = {{0, 1}};
    l.left_hand_anchor = 0;
    l.right_hand_anchor = 1;
    return l;
}

pose::PoseFrame segment_frame(double ax, double ay, double bx, double by) {
    pose::PoseFrame f;
    f.coords = {{ax, ay}, {bx, by}};
    f.confidence = {1.0, 1.0};
    f.counter = 0.0;
    return f;
}

}  // namespace

TEST_CASE("vertical segment rasterizes to exactly the expected pixels") {
    const auto layout = two_joint_layout();
    // endpoints (2,2) and (2,5) in pixel units of an 8x8 canvas
    const auto f = segment_frame(2.0 / 7, 2.0 / 7, 2.0 / 7, 5.0 / 7);
    const auto hm = pose::rasterize_heatmap(f, layout, 8, 8);
    REQUIRE(hm.dim(0) == 1);
    std::set<std::pair<int, int>> expected{{2, 2}, {2, 3}, {2, 4}, {2, 5}};
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            const bool on = expected.count({x, y}) > 0;
            REQUIRE(hm.at3(0, y, x) == (on ? 1.0f : 0.0f));
        }
}

TEST_CASE("coincident endpoints set a single pixel") {
    const auto layout = two_joint_layout();
    const auto f = segment_frame(3.0 / 7, 4.0 / 7, 3.0 / 7, 4.0 / 7);
    const auto hm = pose::rasterize_heatmap(f, layout, 8, 8);
    int on = 0;
    for (std::int64_t i = 0; i < hm.size(); ++i) on += hm[i] > 0 ? 1 : 0;
    REQUIRE(on == 1);
    REQUIRE(hm.at3(0, 4, 3) == 1.0f);
}

TEST_CASE("zero-confidence endpoint yields an all-zero channel") {
    const auto layout = two_joint_layout();
    auto f = segment_frame(0.2, 0.2, 0.8, 0.8);
    f.confidence[1] = 0.0;
    const auto hm = pose::rasterize_heatmap(f, layout, 16, 16);
    for (std::int64_t i = 0; i < hm.size(); ++i) REQUIRE(hm[i] == 0.0f);
}

TEST_CASE("channel count equals limb count and values stay in [0,1]") {
    const auto layout = pose::default_layout();
    Rng rng(40);
    const auto seq = random_sequence(rng, layout, 2, 0.15);
    for (const auto& f : seq.frames) {
        const auto hm = pose::rasterize_heatmap(f, layout, 32, 32, {1.0});
        REQUIRE(hm.dim(0) == layout.limb_count());
        for (std::int64_t i = 0; i < hm.size(); ++i) {
            REQUIRE(hm[i] >= 0.0f);
            REQUIRE(hm[i] <= 1.0f);
        }
    }
}

TEST_CASE("rasterizer matches the independent line oracle on an exhaustive grid") {
    const auto layout = two_joint_layout();
    const int n = 8;
    for (int ax = 0; ax < n; ++ax)
        for (int ay = 0; ay < n; ++ay)
            for (int bx = 0; bx < n; ++bx)
                for (int by = 0; by < n; ++by) {
                    const auto f =
                        segment_frame(static_cast<double>(ax) / (n - 1),
                                      static_cast<double>(ay) / (n - 1),
                                      static_cast<double>(bx) / (n - 1),
                                      static_cast<double>(by) / (n - 1));
                    const auto hm = pose::rasterize_heatmap(f, layout, n, n);
                    std::set<std::pair<int, int>> expected;
                    for (auto [x, y] : testhelp::oracle_line(ax, ay, bx, by))
                        expected.insert({x, y});
                    for (int y = 0; y < n; ++y)
                        for (int x = 0; x < n; ++x) {
                            INFO("segment (" << ax << "," << ay << ")->(" << bx << "," << by
                                             << ") at pixel (" << x << "," << y << ")");
                            REQUIRE(hm.at3(0, y, x) ==
                                    (expected.count({x, y}) ? 1.0f : 0.0f));
                        }
                }
}

TEST_CASE("rasterizer matches the oracle on 1000 random frames") {
    const auto layout = pose::default_layout();
    Rng rng(41);
    for (int trial = 0; trial < 1000; ++trial) {
        const int h = 24, w = 24;
        pose::PoseFrame f;
        for (int j = 0; j < layout.joint_count(); ++j) {
            f.coords.push_back({rng.uniform(), rng.uniform()});
            f.confidence.push_back(rng.uniform() < 0.1 ? 0.0 : 1.0);
        }
        const auto hm = pose::rasterize_heatmap(f, layout, h, w);
        for (int c = 0; c < layout.limb_count(); ++c) {
            const auto [a, b] = layout.limbs[static_cast<std::size_t>(c)];
            std::set<std::pair<int, int>> expected;
            if (f.confidence[static_cast<std::size_t>(a)] > 0 &&
                f.confidence[static_cast<std::size_t>(b)] > 0) {
                auto px = [&](double v, int e) {
                    return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * (e - 1)));
                };
                const auto& pa = f.coords[static_cast<std::size_t>(a)];
                const auto& pb = f.coords[static_cast<std::size_t>(b)];
                for (auto [x, y] :
                     testhelp::oracle_line(px(pa.x, w), px(pa.y, h), px(pb.x, w), px(pb.y, h)))
                    expected.insert({x, y});
            }
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    REQUIRE(hm.at3(c, y, x) == (expected.count({x, y}) ? 1.0f : 0.0f));
        }
    }
}

TEST_CASE("gaussian falloff keeps segment at 1 and decays off-segment") {
    const auto layout = two_joint_layout();
    const auto f = segment_frame(2.0 / 15, 7.0 / 15, 12.0 / 15, 7.0 / 15);
    const auto hm = pose::rasterize_heatmap(f, layout, 16, 16, {1.0});
    REQUIRE(hm.at3(0, 7, 6) == 1.0f);
    const float d1 = hm.at3(0, 8, 6);
    const float d2 = hm.at3(0, 9, 6);
    REQUIRE(d1 == Catch::Approx(std::exp(-0.5)).margin(1e-5));
    REQUIRE(d2 == Catch::Approx(std::exp(-2.0)).margin(1e-5));
    REQUIRE(hm.at3(0, 12, 6) == 0.0f);  // beyond 3 sigma
}

TEST_CASE("heatmap debug dump writes one png per limb channel") {
    const auto layout = pose::default_layout();
    Rng rng(42);
    const auto seq = random_sequence(rng, layout, 1);
    const auto hm = pose::rasterize_heatmap(seq.frames[0], layout, 16, 16);
    const auto dir = testhelp::fresh_dir("signsynth_hm_dump");
    pose::dump_heatmap(dir, 3, hm);
    REQUIRE(std::filesystem::exists(dir / "frame00003_limb00.png"));
    REQUIRE(std::filesystem::exists(dir / "frame00003_limb49.png"));
    int count = 0;
    for (auto it = std::filesystem::directory_iterator(dir);
         it != std::filesystem::directory_iterator(); ++it)
        ++count;
    REQUIRE(count == 50);
}

// ---------------------------------------------------------------------------
// Hand crops
// ---------------------------------------------------------------------------

namespace {

img::Frame coordinate_coded_image(int h, int w) {
    img::Frame f({3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            f.at3(0, y, x) = static_cast<float>(y) / (h - 1) * 2 - 1;
            f.at3(1, y, x) = static_cast<float>(x) / (w - 1) * 2 - 1;
            f.at3(2, y, x) = 0.0f;
        }
    return f;
}

pose::PoseFrame anchored_frame(const pose::JointLayout& layout, double x, double y,
                               double conf = 1.0) {
    pose::PoseFrame f;
    f.coords.assign(static_cast<std::size_t>(layout.joint_count()), {0.5, 0.5});
    f.confidence.assign(static_cast<std::size_t>(layout.joint_count()), 1.0);
    f.coords[static_cast<std::size_t>(layout.left_hand_anchor)] = {x, y};
    f.confidence[static_cast<std::size_t>(layout.left_hand_anchor)] = conf;
    return f;
}

}  // namespace

TEST_CASE("crop at pixel (100,100) of a 256x256 image covers rows and cols 70..129") {
    const auto layout = pose::default_layout();
    const auto image = coordinate_coded_image(256, 256);
    const auto f = anchored_frame(layout, 100.0 / 255, 100.0 / 255);
    const auto crop = pose::crop_hand(image, f, layout, pose::Side::kLeft);
    REQUIRE(crop.patch.dim(1) == 60);
    REQUIRE(crop.patch.dim(2) == 60);
    REQUIRE(crop.anchor_x == 100);
    REQUIRE(crop.anchor_y == 100);
    // corners read back the source coordinates
    REQUIRE(crop.patch.at3(0, 0, 0) == image.at3(0, 70, 70));
    REQUIRE(crop.patch.at3(1, 0, 0) == image.at3(1, 70, 70));
    REQUIRE(crop.patch.at3(0, 59, 59) == image.at3(0, 129, 129));
    REQUIRE(crop.patch.at3(1, 59, 59) == image.at3(1, 129, 129));
    REQUIRE(crop.patch.at3(0, 30, 30) == image.at3(0, 100, 100));
}

TEST_CASE("crop at the image corner pads with the background color") {
    const auto layout = pose::default_layout();
    const auto image = coordinate_coded_image(256, 256);
    const auto f = anchored_frame(layout, 0.0, 0.0);
    const img::Rgb bg{0.25f, -0.5f, 1.0f};
    const auto crop = pose::crop_hand(image, f, layout, pose::Side::kLeft, bg);
    REQUIRE(crop.patch.dim(1) == 60);
    // rows/cols -30..-1 come from outside: padded
    REQUIRE(crop.patch.at3(0, 0, 0) == 0.25f);
    REQUIRE(crop.patch.at3(1, 0, 0) == -0.5f);
    REQUIRE(crop.patch.at3(2, 0, 0) == 1.0f);
    REQUIRE(crop.patch.at3(0, 29, 40) == 0.25f);  // row still out of range
    REQUIRE(crop.patch.at3(0, 30, 30) == image.at3(0, 0, 0));
    REQUIRE(crop.patch.at3(0, 59, 59) == image.at3(0, 29, 29));
}

TEST_CASE("crop of a constant image is constant") {
    const auto layout = pose::default_layout();
    const auto image = img::make_frame(128, 128, {0.3f, 0.3f, 0.3f});
    const auto f = anchored_frame(layout, 0.9, 0.1);
    const auto crop = pose::crop_hand(image, f, layout, pose::Side::kLeft, {0.3f, 0.3f, 0.3f});
    for (std::int64_t i = 0; i < crop.patch.size(); ++i) REQUIRE(crop.patch[i] == 0.3f);
}

TEST_CASE("zero-confidence knuckle raises a no-hand error") {
    const auto layout = pose::default_layout();
    const auto image = img::make_frame(64, 64);
    const auto f = anchored_frame(layout, 0.5, 0.5, 0.0);
    REQUIRE_THROWS_AS(pose::crop_hand(image, f, layout, pose::Side::kLeft),
                      pose::NoHandError);
}

// ---------------------------------------------------------------------------
// Good-hands curation
// ---------------------------------------------------------------------------

namespace {

// Checkerboard with strong edges: high Laplacian variance.
img::Frame sharp_patch() {
    img::Frame f({3, 60, 60});
    for (int y = 0; y < 60; ++y)
        for (int x = 0; x < 60; ++x) {
            const float v = ((x / 4 + y / 4) % 2) ? 0.8f : -0.8f;
            for (int c = 0; c < 3; ++c) f.at3(c, y, x) = v;
        }
    return f;
}

img::Frame box_blur7(const img::Frame& src) {
    const int h = src.dim(1), w = src.dim(2);
    img::Frame out({3, h, w});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                float acc = 0;
                int cnt = 0;
                for (int dy = -3; dy <= 3; ++dy)
                    for (int dx = -3; dx <= 3; ++dx) {
                        const int yy = y + dy, xx = x + dx;
                        if (yy >= 0 && yy < h && xx >= 0 && xx < w) {
                            acc += src.at3(c, yy, xx);
                            ++cnt;
                        }
                    }
                out.at3(c, y, x) = acc / static_cast<float>(cnt);
            }
    return out;
}

pose::Keypoints centered_keypoints() {
    pose::Keypoints k;
    for (int i = 0; i < 21; ++i)
        k.points.push_back({0.5 + 0.01 * (i % 5), 0.5 + 0.01 * (i / 5)});
    return k;
}

}  // namespace

TEST_CASE("blur rejection separates sharp from blurred crops") {
    const auto sharp = sharp_patch();
    const auto blurred = box_blur7(sharp);
    const double s_sharp = pose::sharpness_score(sharp);
    const double s_blur = pose::sharpness_score(blurred);
    REQUIRE(s_sharp > s_blur * 4);
    const double threshold = 0.5 * (s_sharp + s_blur);

    std::vector<pose::HandCrop> crops(2);
    crops[0].patch = sharp;
    crops[0].side = pose::Side::kLeft;
    crops[0].source_frame_index = 0;
    crops[1].patch = blurred;
    crops[1].side = pose::Side::kRight;
    crops[1].source_frame_index = 1;
    const auto set = pose::select_good_hands(
        crops, [](const img::Frame&) { return centered_keypoints(); }, threshold);
    REQUIRE(set.entries.size() == 1);
    REQUIRE(set.entries[0].side == pose::Side::kLeft);
    REQUIRE(set.entries[0].blur_score >= threshold);
    REQUIRE(set.entries[0].keypoints.points.size() == 21);
}

TEST_CASE("threshold zero with in-bounds keypoints retains everything") {
    std::vector<pose::HandCrop> crops(3);
    for (auto& c : crops) c.patch = sharp_patch();
    const auto set = pose::select_good_hands(
        crops, [](const img::Frame&) { return centered_keypoints(); }, 0.0);
    REQUIRE(set.entries.size() == 3);
}

TEST_CASE("out-of-bounds keypoints are rejected") {
    std::vector<pose::HandCrop> crops(1);
    crops[0].patch = sharp_patch();
    const auto set = pose::select_good_hands(
        crops,
        [](const img::Frame&) {
            pose::Keypoints k = centered_keypoints();
            k.points[20] = {1.1, 0.5};
            return k;
        },
        0.0);
    REQUIRE(set.empty());
}
