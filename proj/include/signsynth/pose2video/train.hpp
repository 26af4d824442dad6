#pragma once

// Adversarial training for the frame generator: alternating 1:1
// discriminator/generator steps over (pose, style, frame) triples, with the
// full weighted objective, CSV step logs, and a NaN tripwire that names the
// offending term.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "signsynth/core/optim.hpp"
#include "signsynth/core/serialize.hpp"
#include "signsynth/pose/hands.hpp"
#include "signsynth/pose2video/discriminators.hpp"
#include "signsynth/pose2video/featnet.hpp"
#include "signsynth/pose2video/generator.hpp"
#include "signsynth/pose2video/handnet.hpp"
#include "signsynth/pose2video/losses.hpp"

namespace signsynth::p2v {

struct VideoSample {
    pose::PoseSequence poses;
    StyleImage style;
    std::vector<img::Frame> frames;
};

enum class HandAdvMode {
    kKeypoint,  // Eq. 3 adversary on extracted keypoints
    kPatch,     // ablation: adversary on raw crop pixels
    kOff,
};

struct P2VTrainConfig {
    int steps = 500;  // generator steps; discriminator steps match 1:1
    double lr_g = 2e-4;
    double lr_d = 2e-4;
    GanMode gan_mode = GanMode::kNonSaturating;
    LossWeights weights;
    HandAdvMode hand_mode = HandAdvMode::kKeypoint;
    GoodHandsReading reading = GoodHandsReading::kCorrected;
    img::Rgb background;  // fill used when hand crops fall off the frame
    std::uint64_t seed = 7;
    std::filesystem::path log_path;  // CSV written here when non-empty
};

struct StepLog {
    int step = 0;
    double loss_d = 0, loss_g = 0, loss_fm = 0, loss_vgg = 0;
    double loss_key_g = 0, loss_key_d = 0, loss_t = 0;
};

struct P2VTrainReport {
    std::vector<StepLog> log;
    bool aborted = false;
    std::string aborted_term;
    int aborted_step = -1;
};

namespace detail {

struct HandWindow {
    int y0 = 0;
    int x0 = 0;
    pose::Side side = pose::Side::kLeft;
};

// Mirrors crop_hand's window so the differentiable fake crop and the plain
// real crop cover identical pixels.
inline std::vector<HandWindow> hand_windows(const pose::PoseFrame& frame,
                                            const pose::JointLayout& layout, int res) {
    std::vector<HandWindow> out;
    for (const pose::Side side : {pose::Side::kLeft, pose::Side::kRight}) {
        const int anchor = side == pose::Side::kLeft ? layout.left_hand_anchor
                                                     : layout.right_hand_anchor;
        if (frame.confidence[static_cast<std::size_t>(anchor)] <= 0.0) continue;
        const auto& c = frame.coords[static_cast<std::size_t>(anchor)];
        const int cx = static_cast<int>(std::lround(std::clamp(c.x, 0.0, 1.0) * (res - 1)));
        const int cy = static_cast<int>(std::lround(std::clamp(c.y, 0.0, 1.0) * (res - 1)));
        out.push_back({cy - pose::kHandPatch / 2, cx - pose::kHandPatch / 2, side});
    }
    return out;
}

inline VarF crop_fake(const VarF& fake, const HandWindow& w, img::Rgb bg) {
    return nn::crop_window(fake, w.y0, w.x0, pose::kHandPatch, pose::kHandPatch,
                           std::vector<float>{bg.r, bg.g, bg.b});
}

inline VarF zero_scalar() { return VarF::constant(TenF::zeros({1})); }

}  // namespace detail

inline void write_train_log(const std::filesystem::path& path, const std::vector<StepLog>& log) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write training log: " + path.string());
    os << "step,loss_D,loss_G,loss_FM,loss_VGG,loss_KeyG,loss_KeyD,loss_T\n";
    char buf[256];
    for (const auto& r : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.step,
                      r.loss_d, r.loss_g, r.loss_fm, r.loss_vgg, r.loss_key_g, r.loss_key_d,
                      r.loss_t);
        os << buf;
    }
}

// Everything the loss stack needs besides the generator.
struct Adversaries {
    DiscriminatorPyramid* pyramid = nullptr;
    HandKeypointDisc* hand_disc = nullptr;
    HandPatchDisc* hand_patch_disc = nullptr;  // only for HandAdvMode::kPatch
    HandKeypointNet* hand_net = nullptr;       // frozen
    FeatureNet* feature_net = nullptr;         // frozen
    const pose::GoodHandSet* good_hands = nullptr;
};

inline void validate_corpus(const Generator& gen, const std::vector<VideoSample>& corpus) {
    if (corpus.empty()) throw PreconditionError("train_pose2video: empty corpus");
    const auto& gc = gen.config();
    for (const auto& s : corpus) {
        if (s.frames.size() != s.poses.frames.size())
            throw PreconditionError("train_pose2video: frame/pose count mismatch");
        if (s.frames.empty()) throw PreconditionError("train_pose2video: empty sample");
        if (s.poses.layout.limb_count() != gc.cond_channels)
            throw ConfigError("train_pose2video: layout limbs != generator cond channels");
        if (s.style.pixels.ndim() != 3 || s.style.pixels.dim(1) != gc.resolution ||
            s.style.pixels.dim(2) != gc.resolution)
            throw ConfigError("train_pose2video: style resolution mismatch");
        for (const auto& f : s.frames)
            if (f.ndim() != 3 || f.dim(0) != 3 || f.dim(1) != gc.resolution ||
                f.dim(2) != gc.resolution)
                throw ConfigError("train_pose2video: frame resolution mismatch");
    }
}

inline P2VTrainReport train_pose2video(Generator& gen, Adversaries adv,
                                       const std::vector<VideoSample>& corpus,
                                       const P2VTrainConfig& cfg) {
    cfg.weights.validate();
    validate_corpus(gen, corpus);
    if (!adv.pyramid || !adv.hand_net || !adv.feature_net)
        throw ConfigError("train_pose2video: pyramid, hand_net, and feature_net are required");
    if (cfg.hand_mode == HandAdvMode::kKeypoint && !adv.hand_disc)
        throw ConfigError("train_pose2video: keypoint mode needs a hand keypoint discriminator");
    if (cfg.hand_mode == HandAdvMode::kPatch && !adv.hand_patch_disc)
        throw ConfigError("train_pose2video: patch mode needs a hand patch discriminator");

    nn::AdamConfig<float> g_ac, d_ac;
    g_ac.lr = static_cast<float>(cfg.lr_g);
    d_ac.lr = static_cast<float>(cfg.lr_d);
    nn::AdamT<float> g_opt(gen.registry(), g_ac);
    nn::AdamT<float> d_opt(adv.pyramid->registry(), d_ac);
    std::optional<nn::AdamT<float>> dh_opt;
    if (cfg.hand_mode == HandAdvMode::kKeypoint)
        dh_opt.emplace(adv.hand_disc->registry(), d_ac);
    else if (cfg.hand_mode == HandAdvMode::kPatch)
        dh_opt.emplace(adv.hand_patch_disc->registry(), d_ac);

    nn::Rng rng(cfg.seed);
    P2VTrainReport report;
    const auto abort_on = [&](double v, const char* term, int step) {
        if (std::isfinite(v)) return false;
        report.aborted = true;
        report.aborted_term = term;
        report.aborted_step = step;
        return true;
    };

    // One curated or per-batch source pair per crop, per the configured
    // reading of the good-hands substitution.
    const auto hand_g_loss = [&](const VideoSample& s, int t, const VarF& fake,
                                 VarF& key_g, VarF& key_d) {
        key_g = detail::zero_scalar();
        key_d = detail::zero_scalar();
        if (cfg.hand_mode == HandAdvMode::kOff) return;
        const auto windows =
            detail::hand_windows(s.poses.frames[static_cast<std::size_t>(t)], s.poses.layout,
                                 gen.config().resolution);
        int n = 0;
        for (const auto& w : windows) {
            const VarF fake_crop = detail::crop_fake(fake, w, cfg.background);
            const auto real_crop =
                pose::crop_hand(s.frames[static_cast<std::size_t>(t)],
                                s.poses.frames[static_cast<std::size_t>(t)], s.poses.layout,
                                w.side, cfg.background, t);
            HandLossPair pair;
            if (cfg.hand_mode == HandAdvMode::kPatch) {
                pair = hand_patch_loss(*adv.hand_patch_disc, fake_crop, lift(real_crop.patch));
            } else {
                const pose::Keypoints batch_real =
                    extract_hand_keypoints(*adv.hand_net, real_crop);
                const bool curated = adv.good_hands && !adv.good_hands->empty();
                const pose::GoodHandEntry* pick = nullptr;
                if (curated) {
                    const auto idx = static_cast<std::size_t>(
                        rng.uniform_int(static_cast<std::int64_t>(adv.good_hands->entries.size())));
                    pick = &adv.good_hands->entries[idx];
                }
                if (curated && cfg.reading == GoodHandsReading::kLiteral) {
                    pair = hand_keypoint_loss(*adv.hand_disc, *adv.hand_net, fake_crop,
                                              batch_real, &pick->keypoints);
                } else {
                    pair = hand_keypoint_loss(*adv.hand_disc, *adv.hand_net, fake_crop,
                                              curated ? pick->keypoints : batch_real);
                }
            }
            key_g = nn::add(key_g, pair.loss_gh);
            key_d = nn::add(key_d, pair.loss_dh);
            ++n;
        }
        if (n > 1) {
            key_g = nn::scale(key_g, 1.0f / static_cast<float>(n));
            key_d = nn::scale(key_d, 1.0f / static_cast<float>(n));
        }
    };

    for (int step = 0; step < cfg.steps; ++step) {
        const auto& s = corpus[static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(corpus.size())))];
        const int len = static_cast<int>(s.frames.size());
        const int t = len > 1 ? static_cast<int>(rng.uniform_int(len - 1)) : 0;
        const bool has_pair = len > 1;

        const auto& layout = s.poses.layout;
        const TenF cond_t = condition_tensor(s.poses.frames[static_cast<std::size_t>(t)],
                                             layout, gen.config());
        const VarF cond = lift(cond_t);
        const VarF style = lift(s.style.pixels);
        const VarF real = lift(s.frames[static_cast<std::size_t>(t)]);

        StepLog row;
        row.step = step;

        {  // discriminator phase
            const VarF fake = gen.forward(cond, style);
            const auto gan = gan_loss(*adv.pyramid, real, fake, cond, style, cfg.gan_mode);
            VarF key_g, key_d;
            hand_g_loss(s, t, fake, key_g, key_d);
            row.loss_key_d = key_d.item();
            const VarF loss_d_total = nn::add(gan.loss_d, key_d);
            row.loss_d = gan.loss_d.item();
            if (abort_on(row.loss_d, "loss_D", step) ||
                abort_on(row.loss_key_d, "loss_KeyD", step))
                break;
            d_opt.zero_grad();
            if (dh_opt) dh_opt->zero_grad();
            nn::backward(loss_d_total);
            d_opt.step();
            if (dh_opt) dh_opt->step();
        }

        {  // generator phase, against the just-updated adversaries
            const VarF fake = gen.forward(cond, style);
            const auto gan = gan_loss(*adv.pyramid, real, fake, cond, style, cfg.gan_mode);
            const VarF fm = feature_matching_loss(*adv.pyramid, real, fake, cond, style);
            const VarF vgg = perceptual_loss(*adv.feature_net, fake, real);
            VarF key_g, key_d;
            hand_g_loss(s, t, fake, key_g, key_d);
            VarF temporal = detail::zero_scalar();
            if (has_pair) {
                const TenF cond_t1 = condition_tensor(
                    s.poses.frames[static_cast<std::size_t>(t + 1)], layout, gen.config());
                const VarF fake_b = gen.forward(lift(cond_t1), style);
                temporal = temporal_loss(fake, fake_b, real,
                                         lift(s.frames[static_cast<std::size_t>(t + 1)]));
            }
            row.loss_g = gan.loss_g.item();
            row.loss_fm = fm.item();
            row.loss_vgg = vgg.item();
            row.loss_key_g = key_g.item();
            row.loss_t = temporal.item();
            if (abort_on(row.loss_g, "loss_G", step) || abort_on(row.loss_fm, "loss_FM", step) ||
                abort_on(row.loss_vgg, "loss_VGG", step) ||
                abort_on(row.loss_key_g, "loss_KeyG", step) ||
                abort_on(row.loss_t, "loss_T", step))
                break;
            const VarF total = total_loss(gan.loss_g, fm, vgg, key_g, temporal, cfg.weights);
            g_opt.zero_grad();
            nn::backward(total);
            g_opt.step();
        }

        report.log.push_back(row);
    }

    if (!cfg.log_path.empty()) write_train_log(cfg.log_path, report.log);
    return report;
}

// ---------------------------------------------------------------------------
// Fine-tuning to an unseen style from a handful of (pose, frame) pairs.
// ---------------------------------------------------------------------------

struct StyleExample {
    pose::PoseFrame pose;
    img::Frame frame;
};

struct FinetuneConfig {
    int steps = 100;
    double lr_g = 1e-4;
    double lr_d = 1e-4;
    GanMode gan_mode = GanMode::kNonSaturating;
    LossWeights weights;
    HandAdvMode hand_mode = HandAdvMode::kKeypoint;
    img::Rgb background;
    std::uint64_t seed = 13;
};

inline P2VTrainReport finetune_style(Generator& gen, Adversaries adv,
                                     const std::vector<StyleExample>& examples,
                                     const pose::JointLayout& layout,
                                     const StyleImage& new_style, const FinetuneConfig& cfg) {
    if (examples.empty()) throw PreconditionError("finetune_style: no example frames");
    if (examples.size() > 50)
        throw PreconditionError("finetune_style: expected at most 50 example frames");
    if (cfg.steps == 0) return {};
    std::vector<VideoSample> corpus;
    for (const auto& e : examples) {
        VideoSample s;
        s.poses.layout = layout;
        s.poses.frames.push_back(e.pose);
        s.style = new_style;
        s.frames.push_back(e.frame);
        corpus.push_back(std::move(s));
    }
    P2VTrainConfig tc;
    tc.steps = cfg.steps;
    tc.lr_g = cfg.lr_g;
    tc.lr_d = cfg.lr_d;
    tc.gan_mode = cfg.gan_mode;
    tc.weights = cfg.weights;
    tc.hand_mode = cfg.hand_mode;
    tc.background = cfg.background;
    tc.seed = cfg.seed;
    return train_pose2video(gen, adv, corpus, tc);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline void save_pose2video_checkpoint(const std::filesystem::path& path, Generator& gen,
                                       DiscriminatorPyramid& disc, HandKeypointDisc& d_h,
                                       int num_styles, const LossWeights& weights) {
    nn::CheckpointWriter w;
    const auto& gc = gen.config();
    w.header()["kind"] = "pose2video";
    w.header()["resolution"] = gc.resolution;
    w.header()["n_unet_layers"] = Generator::kLevels;
    w.header()["cond_channels"] = gc.cond_channels;
    w.header()["gen_base_channels"] = gc.base_channels;
    w.header()["heat_sigma"] = gc.heat_sigma;
    w.header()["disc_base_channels"] = disc.config().base_channels;
    w.header()["num_styles"] = num_styles;
    w.header()["lambda_FM"] = weights.lambda_fm;
    w.header()["lambda_VGG"] = weights.lambda_vgg;
    w.header()["lambda_Key"] = weights.lambda_key;
    w.header()["lambda_T"] = weights.lambda_t;
    w.header()["seed"] = gc.seed;
    w.add_registry("gen", gen.registry());
    w.add_registry("disc", disc.registry());
    w.add_registry("hand_disc", d_h.registry());
    w.save(path);
}

struct Pose2VideoCheckpoint {
    Generator gen;
    DiscriminatorPyramid disc;
    HandKeypointDisc hand_disc;
    int num_styles = 0;
    LossWeights weights;
};

inline Pose2VideoCheckpoint load_pose2video_checkpoint(const std::filesystem::path& path) {
    nn::CheckpointReader r(path);
    if (r.header().value("kind", "") != "pose2video")
        throw SchemaError("checkpoint kind mismatch: expected pose2video");
    const auto& h = r.header();
    GeneratorConfig gc;
    gc.resolution = h.at("resolution").get<int>();
    gc.cond_channels = h.at("cond_channels").get<int>();
    gc.base_channels = h.at("gen_base_channels").get<int>();
    gc.heat_sigma = h.at("heat_sigma").get<double>();
    gc.seed = h.at("seed").get<std::uint64_t>();
    DiscriminatorConfig dc;
    dc.cond_channels = gc.cond_channels;
    dc.base_channels = h.at("disc_base_channels").get<int>();
    Pose2VideoCheckpoint out{Generator(gc), DiscriminatorPyramid(dc), HandKeypointDisc(), 0, {}};
    out.num_styles = h.at("num_styles").get<int>();
    out.weights.lambda_fm = h.at("lambda_FM").get<double>();
    out.weights.lambda_vgg = h.at("lambda_VGG").get<double>();
    out.weights.lambda_key = h.at("lambda_Key").get<double>();
    out.weights.lambda_t = h.at("lambda_T").get<double>();
    r.load_registry("gen", out.gen.registry());
    r.load_registry("disc", out.disc.registry());
    r.load_registry("hand_disc", out.hand_disc.registry());
    return out;
}

inline void save_handnet_checkpoint(const std::filesystem::path& path, HandKeypointNet& net) {
    nn::CheckpointWriter w;
    w.header()["kind"] = "handnet";
    w.header()["base_channels"] = net.config().base_channels;
    w.header()["seed"] = net.config().seed;
    w.add_registry("h", net.registry());
    w.save(path);
}

inline HandKeypointNet load_handnet_checkpoint(const std::filesystem::path& path) {
    nn::CheckpointReader r(path);
    if (r.header().value("kind", "") != "handnet")
        throw SchemaError("checkpoint kind mismatch: expected handnet");
    HandNetConfig c;
    c.base_channels = r.header().at("base_channels").get<int>();
    c.seed = r.header().at("seed").get<std::uint64_t>();
    HandKeypointNet net(c);
    r.load_registry("h", net.registry());
    return net;
}

inline void save_featnet_checkpoint(const std::filesystem::path& path, FeatureNet& net) {
    nn::CheckpointWriter w;
    w.header()["kind"] = "featnet";
    w.header()["base_channels"] = net.config().base_channels;
    w.header()["seed"] = net.config().seed;
    w.add_registry("f", net.registry());
    w.save(path);
}

inline FeatureNet load_featnet_checkpoint(const std::filesystem::path& path) {
    nn::CheckpointReader r(path);
    if (r.header().value("kind", "") != "featnet")
        throw SchemaError("checkpoint kind mismatch: expected featnet");
    FeatureNetConfig c;
    c.base_channels = r.header().at("base_channels").get<int>();
    c.seed = r.header().at("seed").get<std::uint64_t>();
    FeatureNet net(c);
    r.load_registry("f", net.registry());
    return net;
}

}  // namespace signsynth::p2v
