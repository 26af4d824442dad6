// Synthetic corpus: style palette separation, deterministic rendering with
// style-invariant hand glyphs, primitive decoding, label geometry, and
// byte-exact corpus generation.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "signsynth/pose/hands.hpp"
#include "signsynth/synthdata/corpus.hpp"
#include "signsynth/synthdata/primitives.hpp"
#include "signsynth/synthdata/renderer.hpp"
#include "signsynth/synthdata/styles.hpp"

using namespace signsynth;
namespace fs = std::filesystem;

namespace {

bool frames_equal(const img::Frame& a, const img::Frame& b) {
    if (a.shape() != b.shape()) return false;
    for (std::int64_t i = 0; i < a.size(); ++i)
        if (a.data()[i] != b.data()[i]) return false;
    return true;
}

bool poses_equal(const pose::PoseFrame& a, const pose::PoseFrame& b, double tol = 0.0) {
    if (a.coords.size() != b.coords.size()) return false;
    for (std::size_t j = 0; j < a.coords.size(); ++j)
        if (std::abs(a.coords[j].x - b.coords[j].x) > tol ||
            std::abs(a.coords[j].y - b.coords[j].y) > tol)
            return false;
    return true;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("signsynth_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::vector<char> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

synth::CorpusConfig tiny_config() {
    synth::CorpusConfig cfg;
    cfg.n_sequences = 5;
    cfg.n_styles = 2;
    cfg.vocab_size = 6;
    cfg.seed = 11;
    cfg.resolution = 32;
    cfg.min_primitives = 2;
    cfg.max_primitives = 3;
    cfg.frames_per_primitive = 4;
    return cfg;
}

float pixel(const img::Frame& f, int c, int y, int x) {
    const int h = static_cast<int>(f.dim(1)), w = static_cast<int>(f.dim(2));
    return f.data()[static_cast<std::int64_t>(c) * h * w + static_cast<std::int64_t>(y) * w + x];
}

bool is_skin(const img::Frame& f, int y, int x) {
    return pixel(f, 0, y, x) == synth::kSkinColor.r && pixel(f, 1, y, x) == synth::kSkinColor.g &&
           pixel(f, 2, y, x) == synth::kSkinColor.b;
}

}  // namespace

TEST_CASE("style palette keeps pairwise torso distance at least 0.5") {
    const auto styles = synth::default_styles(12, 64);
    REQUIRE(styles.size() == 12);
    for (std::size_t i = 0; i < styles.size(); ++i) {
        CHECK(styles[i].style_id == static_cast<int>(i));
        for (std::size_t j = i + 1; j < styles.size(); ++j)
            CHECK(synth::color_distance(styles[i].torso_color, styles[j].torso_color) >= 0.5);
    }
    CHECK_THROWS_AS(synth::default_styles(13, 64), ConfigError);
    CHECK_THROWS_AS(synth::default_styles(0, 64), ConfigError);
    CHECK_THROWS_AS(synth::default_styles(4, 8), ConfigError);
}

TEST_CASE("each style separates torso, sleeve, and background colors") {
    for (const auto& s : synth::default_styles(9, 64)) {
        CHECK(synth::color_distance(s.torso_color, s.sleeve_color) > 0.1);
        CHECK(synth::color_distance(s.torso_color, s.background_color) > 0.1);
        CHECK(synth::color_distance(s.sleeve_color, s.background_color) > 0.1);
        CHECK(s.head_radius_px >= 2.0);
        CHECK(s.limb_width_px >= 1.0);
    }
}

TEST_CASE("primitive frames stay inside the unit canvas with full confidence") {
    const auto layout = pose::default_layout();
    for (int tok = 0; tok < 20; ++tok) {
        const auto prim = synth::make_primitive(tok);
        for (int i = 0; i <= 8; ++i) {
            const auto f = synth::primitive_frame(prim, layout, i / 8.0);
            for (const auto& p : f.coords) {
                CHECK(p.x >= 0.0);
                CHECK(p.x <= 1.0);
                CHECK(p.y >= 0.0);
                CHECK(p.y <= 1.0);
            }
            for (double c : f.confidence) CHECK(c == 1.0);
        }
    }
}

TEST_CASE("primitives start and end at the rest pose") {
    const auto layout = pose::default_layout();
    const auto rest = synth::rest_pose(layout);
    for (int tok : {0, 1, 2, 7, 19}) {
        const auto prim = synth::make_primitive(tok);
        CHECK(poses_equal(synth::primitive_frame(prim, layout, 0.0), rest, 1e-12));
        CHECK(poses_equal(synth::primitive_frame(prim, layout, 1.0), rest, 1e-12));
        CHECK_FALSE(poses_equal(synth::primitive_frame(prim, layout, 0.5), rest, 1e-3));
    }
}

TEST_CASE("token decoding is a pure function with exact counters") {
    const auto layout = pose::default_layout();
    const std::vector<int> tokens{3, 0, 11};
    const auto a = synth::decode_tokens(tokens, layout, 6);
    const auto b = synth::decode_tokens(tokens, layout, 6);
    REQUIRE(a.length() == 18);
    REQUIRE(b.length() == 18);
    for (int t = 0; t < a.length(); ++t) {
        CHECK(poses_equal(a.frames[static_cast<std::size_t>(t)],
                          b.frames[static_cast<std::size_t>(t)]));
        CHECK(a.frames[static_cast<std::size_t>(t)].counter ==
              pose::ground_truth_counter(t, a.length()));
    }
    CHECK_THROWS_AS(synth::decode_tokens({}, layout), PreconditionError);
    CHECK_THROWS_AS(synth::decode_tokens({1}, layout, 1), ConfigError);
    CHECK_THROWS_AS(synth::make_primitive(-1), PreconditionError);
}

TEST_CASE("rendering is deterministic") {
    const auto layout = pose::default_layout();
    const auto styles = synth::default_styles(2, 48);
    const auto f = synth::primitive_frame(synth::make_primitive(5), layout, 0.4);
    const auto a = synth::render_signer(f, styles[0], layout, 48);
    const auto b = synth::render_signer(f, styles[0], layout, 48);
    CHECK(frames_equal(a, b));
    const auto classified = synth::render_signer_classified(f, styles[0], layout, 48);
    CHECK(classified.classes.size() == 48u * 48u);
    CHECK(frames_equal(classified.frame, a));
    pose::PoseFrame bad = f;
    bad.coords.pop_back();
    bad.confidence.pop_back();
    CHECK_THROWS_AS(synth::render_signer(bad, styles[0], layout, 48), PreconditionError);
    CHECK_THROWS_AS(synth::render_signer(f, styles[0], layout, 8), ConfigError);
}

TEST_CASE("style change leaves hand glyph pixels identical") {
    const auto layout = pose::default_layout();
    const auto styles = synth::default_styles(3, 96);
    const auto f = synth::primitive_frame(synth::make_primitive(4), layout, 0.5);
    const auto a = synth::render_signer_classified(f, styles[0], layout, 96);
    const auto b = synth::render_signer_classified(f, styles[1], layout, 96);
    int differing = 0, hand_pixels = 0;
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 96; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * 96 + x;
            const bool diff = pixel(a.frame, 0, y, x) != pixel(b.frame, 0, y, x) ||
                              pixel(a.frame, 1, y, x) != pixel(b.frame, 1, y, x) ||
                              pixel(a.frame, 2, y, x) != pixel(b.frame, 2, y, x);
            if (diff) {
                ++differing;
                CHECK(a.classes[idx] != synth::PixelClass::kHand);
                CHECK(b.classes[idx] != synth::PixelClass::kHand);
            }
            if (a.classes[idx] == synth::PixelClass::kHand) {
                ++hand_pixels;
                REQUIRE(b.classes[idx] == synth::PixelClass::kHand);
                REQUIRE(pixel(a.frame, 0, y, x) == pixel(b.frame, 0, y, x));
                REQUIRE(pixel(a.frame, 1, y, x) == pixel(b.frame, 1, y, x));
                REQUIRE(pixel(a.frame, 2, y, x) == pixel(b.frame, 2, y, x));
            }
        }
    CHECK(differing > 0);
    CHECK(hand_pixels > 0);
}

TEST_CASE("hand keypoint labels align with drawn fingertips within a pixel") {
    const auto layout = pose::default_layout();
    const auto styles = synth::default_styles(1, 256);
    const auto f = synth::primitive_frame(synth::make_primitive(7), layout, 0.5);
    const auto image = synth::render_signer(f, styles[0], layout, 256);
    for (pose::Side side : {pose::Side::kLeft, pose::Side::kRight}) {
        const auto crop =
            crop_hand(image, f, layout, side, styles[0].background_color);
        const auto labels = synth::hand_keypoint_labels(f, layout, side, 256, 256);
        REQUIRE(labels.points.size() == 21u);
        for (const auto& p : labels.points) {
            CHECK(p.x >= 0.0);
            CHECK(p.x <= 1.0);
            CHECK(p.y >= 0.0);
            CHECK(p.y <= 1.0);
        }
        // Anchor (middle knuckle, index 9) sits at the patch center up to the
        // window's integer rounding.
        CHECK(std::abs(labels.points[9].x * pose::kHandPatch - 30.5) <= 0.5 + 1e-9);
        CHECK(std::abs(labels.points[9].y * pose::kHandPatch - 30.5) <= 0.5 + 1e-9);
        for (int finger = 0; finger < 5; ++finger) {
            const auto& tip = labels.points[static_cast<std::size_t>(1 + finger * 4 + 3)];
            const double qx = tip.x * pose::kHandPatch - 0.5;
            const double qy = tip.y * pose::kHandPatch - 0.5;
            bool found = false;
            for (int dy = -1; dy <= 1 && !found; ++dy)
                for (int dx = -1; dx <= 1 && !found; ++dx) {
                    const int x = static_cast<int>(std::lround(qx)) + dx;
                    const int y = static_cast<int>(std::lround(qy)) + dy;
                    if (x < 0 || y < 0 || x >= pose::kHandPatch || y >= pose::kHandPatch)
                        continue;
                    found = is_skin(crop.patch, y, x);
                }
            CHECK(found);
        }
    }
    pose::PoseFrame hidden = f;
    hidden.confidence[static_cast<std::size_t>(layout.left_hand_anchor)] = 0.0;
    CHECK_THROWS_AS(synth::hand_keypoint_labels(hidden, layout, pose::Side::kLeft, 256, 256),
                    pose::NoHandError);
}

TEST_CASE("corpus generation is deterministic byte for byte") {
    const auto cfg = tiny_config();
    const fs::path a = fresh_dir("corpus_a"), b = fresh_dir("corpus_b");
    const auto sa = synth::generate_corpus(a, cfg);
    const auto sb = synth::generate_corpus(b, cfg);
    CHECK(sa.frames_written == sb.frames_written);
    CHECK(sa.frames_written > 0);

    auto listing = [](const fs::path& root) {
        std::vector<fs::path> rel;
        for (const auto& e : fs::recursive_directory_iterator(root))
            if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), root));
        std::sort(rel.begin(), rel.end());
        return rel;
    };
    const auto files_a = listing(a), files_b = listing(b);
    REQUIRE(files_a == files_b);
    REQUIRE(!files_a.empty());
    for (const auto& rel : files_a) REQUIRE(read_bytes(a / rel) == read_bytes(b / rel));
    fs::remove_all(b);
}

TEST_CASE("stored poses regenerate from manifest tokens") {
    const auto cfg = tiny_config();
    const fs::path root = fresh_dir("corpus_regen");
    synth::generate_corpus(root, cfg);
    const auto layout = pose::default_layout();
    const auto entries = synth::read_manifest(root);
    REQUIRE(entries.size() == 5u);
    for (const auto& e : entries) {
        const auto stored = synth::load_pose(root, e.id, layout);
        const auto regen =
            synth::decode_tokens(e.tokens, layout, cfg.frames_per_primitive, cfg.fps);
        REQUIRE(stored.length() == regen.length());
        REQUIRE(stored.length() == e.frames);
        for (int t = 0; t < stored.length(); ++t) {
            CHECK(poses_equal(stored.frames[static_cast<std::size_t>(t)],
                              regen.frames[static_cast<std::size_t>(t)], 1e-6));
            CHECK(stored.frames[static_cast<std::size_t>(t)].counter ==
                  regen.frames[static_cast<std::size_t>(t)].counter);
        }
        const int n_prims = static_cast<int>(e.tokens.size());
        CHECK(n_prims >= cfg.min_primitives);
        CHECK(n_prims <= cfg.max_primitives);
        for (int tok : e.tokens) {
            CHECK(tok >= 0);
            CHECK(tok < cfg.vocab_size);
        }
    }
}

TEST_CASE("manifest splits sequences 80/10/10 with complete artifacts") {
    synth::CorpusConfig cfg = tiny_config();
    cfg.n_sequences = 10;
    cfg.max_primitives = 2;
    const fs::path root = fresh_dir("corpus_split");
    const auto summary = synth::generate_corpus(root, cfg);
    CHECK(summary.splits.train == 8);
    CHECK(summary.splits.val == 1);
    CHECK(summary.splits.test == 1);

    const auto entries = synth::read_manifest(root);
    REQUIRE(entries.size() == 10u);
    std::set<std::string> ids;
    int train = 0, val = 0, test = 0;
    long long frames_expected = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        ids.insert(e.id);
        if (e.split == "train") ++train;
        if (e.split == "val") ++val;
        if (e.split == "test") ++test;
        CHECK(e.split == synth::split_for(static_cast<int>(i), 10));
        frames_expected += static_cast<long long>(e.frames) * e.styles;
        for (int t = 0; t < e.frames; ++t)
            for (int m = 0; m < e.styles; ++m)
                CHECK(fs::exists(synth::frame_path(root, e.id, m, t)));
    }
    CHECK(ids.size() == 10u);
    CHECK(train == 8);
    CHECK(val == 1);
    CHECK(test == 1);
    CHECK(summary.frames_written == frames_expected);

    std::ifstream vocab(root / "vocab.txt");
    int lines = 0;
    std::string line;
    while (std::getline(vocab, line))
        if (!line.empty()) ++lines;
    CHECK(lines == cfg.vocab_size);

    for (int m = 0; m < cfg.n_styles; ++m) {
        const auto ref = img::read_png(synth::style_image_path(root, m));
        CHECK(ref.dim(1) == cfg.resolution);
        CHECK(ref.dim(2) == cfg.resolution);
    }
    CHECK_FALSE(frames_equal(img::read_png(synth::style_image_path(root, 0)),
                             img::read_png(synth::style_image_path(root, 1))));

    const auto stored = img::read_png(synth::frame_path(root, entries[0].id, 0, 0));
    CHECK(stored.dim(0) == 3);
    CHECK(stored.dim(1) == cfg.resolution);
}

TEST_CASE("hand label files cover both hands of every frame") {
    const auto cfg = tiny_config();
    const fs::path root = fresh_dir("corpus_labels");
    synth::generate_corpus(root, cfg);
    const auto entries = synth::read_manifest(root);
    const auto labels = synth::read_hand_labels(root, entries[0].id);
    REQUIRE(static_cast<int>(labels.size()) == 2 * entries[0].frames);
    std::map<std::pair<int, int>, int> seen;
    for (const auto& l : labels) {
        REQUIRE(l.points.points.size() == 21u);
        for (const auto& p : l.points.points) {
            CHECK(p.x >= 0.0);
            CHECK(p.x <= 1.0);
            CHECK(p.y >= 0.0);
            CHECK(p.y <= 1.0);
        }
        ++seen[{l.frame, l.side == pose::Side::kLeft ? 0 : 1}];
    }
    for (int t = 0; t < entries[0].frames; ++t) {
        CHECK(seen[{t, 0}] == 1);
        CHECK(seen[{t, 1}] == 1);
    }
}

TEST_CASE("corpus configuration is validated") {
    synth::CorpusConfig cfg = tiny_config();
    cfg.n_styles = 1;
    CHECK_THROWS_AS(synth::generate_corpus(fresh_dir("corpus_bad1"), cfg), PreconditionError);
    cfg = tiny_config();
    cfg.n_sequences = 0;
    CHECK_THROWS_AS(synth::generate_corpus(fresh_dir("corpus_bad2"), cfg), ConfigError);
    cfg = tiny_config();
    cfg.min_primitives = 5;
    cfg.max_primitives = 4;
    CHECK_THROWS_AS(synth::generate_corpus(fresh_dir("corpus_bad3"), cfg), ConfigError);
    CHECK_THROWS_AS(synth::read_manifest(fresh_dir("corpus_missing")), IoError);
}

TEST_CASE("hand training set pairs stored crops with stored labels") {
    const auto cfg = tiny_config();
    const fs::path root = fresh_dir("corpus_hands");
    synth::generate_corpus(root, cfg);
    const auto layout = pose::default_layout();
    const auto entries = synth::read_manifest(root);

    const auto samples = synth::build_hand_training_set(root, layout, entries, 6, 3);
    REQUIRE(samples.size() == 6u);
    for (const auto& s : samples) {
        REQUIRE(s.crop.shape() == std::vector<int>{3, 60, 60});
        REQUIRE(s.target.points.size() == 21u);
        for (const auto& p : s.target.points) {
            CHECK(p.x >= 0.0);
            CHECK(p.x <= 1.0);
        }
    }
    const auto again = synth::build_hand_training_set(root, layout, entries, 6, 3);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(frames_equal(samples[i].crop, again[i].crop));
        CHECK(samples[i].target.points[0].x == again[i].target.points[0].x);
    }
    CHECK_THROWS_AS(synth::build_hand_training_set(root, layout, entries, 0, 3),
                    PreconditionError);
    CHECK_THROWS_AS(synth::build_hand_training_set(root, layout, {}, 4, 3), PreconditionError);
}
