#pragma once

// Command implementations behind the signsynth binary: dataset creation,
// stage training, generation, and evaluation. Each command is deterministic
// under its resolved config and records that config plus SHA-256 hashes of
// its inputs in the directory it writes.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "signsynth/cli/config.hpp"
#include "signsynth/cli/hashing.hpp"
#include "signsynth/metrics/fid.hpp"
#include "signsynth/metrics/report.hpp"
#include "signsynth/pose/pose_json.hpp"
#include "signsynth/pose2video/train.hpp"
#include "signsynth/synthdata/corpus.hpp"
#include "signsynth/text2pose/train.hpp"

namespace signsynth::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Shared helpers

namespace detail {

inline void make_dirs(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir.string());
}

inline void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

// Every command directory gets the resolved config and an input-hash record.
inline void write_run_metadata(const fs::path& dir, const RunConfig& cfg,
                               const std::vector<std::pair<std::string, std::string>>& hashes) {
    write_file(dir / "config.resolved", serialize_config(cfg));
    std::ostringstream out;
    for (const auto& [label, hex] : hashes) out << hex << "  " << label << '\n';
    write_file(dir / "inputs.sha256", out.str());
}

inline std::vector<synth::ManifestEntry> split_entries(
    const std::vector<synth::ManifestEntry>& all, const std::string& split) {
    std::vector<synth::ManifestEntry> out;
    for (const auto& e : all)
        if (e.split == split) out.push_back(e);
    return out;
}

inline int count_vocab_lines(const fs::path& corpus) {
    std::ifstream in(corpus / "vocab.txt");
    if (!in) throw PreconditionError("missing vocabulary file: " + (corpus / "vocab.txt").string());
    int n = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++n;
    if (n == 0) throw SchemaError("vocabulary file is empty: " + (corpus / "vocab.txt").string());
    return n;
}

// Stable per-sequence style assignment shared by generate and evaluate:
// numeric suffix of the id modulo the style count.
inline int style_for_id(const std::string& id, int n_styles) {
    int value = 0;
    bool any = false;
    for (char c : id)
        if (c >= '0' && c <= '9') {
            value = value * 10 + (c - '0');
            any = true;
        }
    if (!any || n_styles < 1) return 0;
    return value % n_styles;
}

inline p2v::StyleImage load_style_image(const fs::path& png, int style_id) {
    p2v::StyleImage s;
    s.pixels = img::read_png(png);
    s.style_id = style_id;
    return s;
}

inline p2v::GanMode parse_gan_mode(const std::string& s) {
    if (s == "ns") return p2v::GanMode::kNonSaturating;
    if (s == "ls") return p2v::GanMode::kLeastSquares;
    throw ConfigError("config: p2v.gan_mode must be 'ns' or 'ls', got '" + s + "'");
}

inline p2v::HandAdvMode parse_hand_mode(const std::string& s) {
    if (s == "keypoint") return p2v::HandAdvMode::kKeypoint;
    if (s == "patch") return p2v::HandAdvMode::kPatch;
    if (s == "off") return p2v::HandAdvMode::kOff;
    throw ConfigError("config: p2v.hand_mode must be 'keypoint', 'patch', or 'off', got '" + s +
                      "'");
}

inline p2v::GoodHandsReading parse_reading(const std::string& s) {
    if (s == "corrected") return p2v::GoodHandsReading::kCorrected;
    if (s == "literal") return p2v::GoodHandsReading::kLiteral;
    throw ConfigError("config: p2v.reading must be 'corrected' or 'literal', got '" + s + "'");
}

inline void write_csv(const fs::path& path, const std::string& header,
                      const std::vector<std::vector<double>>& rows) {
    std::ostringstream out;
    out << header << '\n';
    char buf[64];
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            if (row[i] == static_cast<long long>(row[i]) && std::abs(row[i]) < 1e15) {
                out << static_cast<long long>(row[i]);
            } else {
                std::snprintf(buf, sizeof(buf), "%.9g", row[i]);
                out << buf;
            }
        }
        out << '\n';
    }
    write_file(path, out.str());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// make-data

struct MakeDataArgs {
    RunConfig cfg;
    fs::path out;
};

inline int cmd_make_data(const MakeDataArgs& args) {
    const RunConfig& c = args.cfg;
    synth::CorpusConfig cc;
    cc.n_sequences = c.data_sequences;
    cc.n_styles = c.data_styles;
    cc.vocab_size = c.data_vocab;
    cc.seed = c.seed;
    cc.resolution = c.data_resolution;
    cc.fps = c.data_fps;
    cc.min_primitives = c.data_min_primitives;
    cc.max_primitives = c.data_max_primitives;
    cc.frames_per_primitive = c.data_frames_per_primitive;

    const auto summary = synth::generate_corpus(args.out, cc);
    detail::write_run_metadata(args.out, c, {{"config", sha256_hex(serialize_config(c))}});

    std::cout << "corpus: " << args.out.string() << "\n"
              << "sequences=" << summary.n_sequences << " train=" << summary.splits.train
              << " val=" << summary.splits.val << " test=" << summary.splits.test
              << " styles=" << summary.n_styles << " frames=" << summary.frames_written << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    RunConfig cfg;
    std::string stage;
    fs::path corpus;
    fs::path run;
    std::optional<int> max_steps;
};

namespace detail {

inline std::vector<synth::ManifestEntry> training_entries(const fs::path& corpus, int cap) {
    if (!fs::exists(corpus / "manifest.jsonl"))
        throw PreconditionError("missing corpus manifest: " +
                                (corpus / "manifest.jsonl").string() +
                                "; run 'signsynth make-data' first");
    auto train = split_entries(synth::read_manifest(corpus), "train");
    if (train.empty()) throw PreconditionError("corpus has no training sequences");
    if (cap > 0 && static_cast<int>(train.size()) > cap)
        train.resize(static_cast<std::size_t>(cap));
    return train;
}

inline int train_text2pose_stage(const TrainArgs& args) {
    const RunConfig& c = args.cfg;
    const auto layout = pose::default_layout();
    const auto train = training_entries(args.corpus, c.t2p_max_train_sequences);
    const int vocab = count_vocab_lines(args.corpus);

    std::vector<t2p::TrainPair> pairs;
    int longest_src = 0, longest_tgt = 0;
    for (const auto& e : train) {
        const auto seq = synth::load_pose(args.corpus, e.id, layout);
        pairs.push_back(t2p::make_train_pair(t2p::TextSequence{e.tokens}, seq));
        longest_src = std::max(longest_src, static_cast<int>(e.tokens.size()));
        longest_tgt = std::max(longest_tgt, seq.length());
    }
    if (c.t2p_max_src < longest_src)
        throw ConfigError("config: t2p.max_src=" + std::to_string(c.t2p_max_src) +
                          " is smaller than the longest training sentence (" +
                          std::to_string(longest_src) + ")");
    if (c.t2p_max_tgt < longest_tgt)
        throw ConfigError("config: t2p.max_tgt=" + std::to_string(c.t2p_max_tgt) +
                          " is smaller than the longest training sequence (" +
                          std::to_string(longest_tgt) + ")");

    const fs::path ckpt = args.run / "text2pose.ckpt";
    const bool resuming = fs::exists(ckpt);
    t2p::Text2PoseConfig mc;
    mc.vocab_size = vocab;
    mc.width = c.t2p_width;
    mc.layers = c.t2p_layers;
    mc.heads = c.t2p_heads;
    mc.ff_mult = c.t2p_ff_mult;
    mc.mixtures = c.t2p_mixtures;
    mc.pose_dims = layout.dims();
    mc.max_src = c.t2p_max_src;
    mc.max_tgt = c.t2p_max_tgt;
    mc.seed = c.seed;
    t2p::Text2PoseModel model =
        resuming ? t2p::load_text2pose_checkpoint(ckpt) : t2p::Text2PoseModel(mc);

    t2p::Text2PoseTrainConfig tc;
    tc.epochs = args.max_steps.value_or(c.t2p_epochs);
    tc.lr = c.t2p_lr;
    tc.counter_weight = c.t2p_counter_weight;
    tc.grad_clip = c.t2p_grad_clip;

    nn::AdamConfig<double> ac;
    ac.lr = tc.lr;
    nn::AdamT<double> opt(model.registry(), ac);
    if (resuming) t2p::resume_text2pose_adam(ckpt, opt);

    const auto report = t2p::train_text2pose(model, pairs, tc, &opt);

    std::vector<std::vector<double>> rows;
    for (const auto& e : report.epochs)
        rows.push_back({static_cast<double>(e.epoch), e.nll, e.counter_mse});
    write_csv(args.run / "text2pose_log.csv", "epoch,nll,counter_mse", rows);
    t2p::save_text2pose_checkpoint(ckpt, model, &opt);

    if (report.aborted_on_nan) {
        std::cerr << "text2pose: training aborted on a non-finite loss after epoch "
                  << report.last_good_epoch << "; checkpoint holds the last good state\n";
        return 1;
    }
    std::cout << "text2pose: sequences=" << pairs.size() << " epochs=" << tc.epochs;
    if (!report.epochs.empty()) std::cout << " final_nll=" << report.epochs.back().nll;
    std::cout << (resuming ? " (resumed)" : "") << "\n";
    return 0;
}

inline int train_handnet_stage(const TrainArgs& args) {
    const RunConfig& c = args.cfg;
    const auto layout = pose::default_layout();
    const auto train = training_entries(args.corpus, 0);
    const auto samples = synth::build_hand_training_set(args.corpus, layout, train,
                                                        c.handnet_samples, c.seed);

    const fs::path ckpt = args.run / "handnet.ckpt";
    const bool resuming = fs::exists(ckpt);
    p2v::HandNetConfig hc;
    hc.base_channels = c.handnet_base;
    hc.seed = c.seed;
    p2v::HandKeypointNet net =
        resuming ? p2v::load_handnet_checkpoint(ckpt) : p2v::HandKeypointNet(hc);

    p2v::HandNetTrainConfig tc;
    tc.epochs = args.max_steps.value_or(c.handnet_epochs);
    tc.lr = c.handnet_lr;
    const auto report = p2v::train_handnet(net, samples, tc);

    std::vector<std::vector<double>> rows;
    for (std::size_t e = 0; e < report.epoch_mse.size(); ++e)
        rows.push_back({static_cast<double>(e), report.epoch_mse[e]});
    write_csv(args.run / "handnet_log.csv", "epoch,mse", rows);
    p2v::save_handnet_checkpoint(ckpt, net);

    std::cout << "handnet: samples=" << samples.size() << " epochs=" << tc.epochs;
    if (!report.epoch_mse.empty()) std::cout << " final_mse=" << report.epoch_mse.back();
    std::cout << (resuming ? " (resumed)" : "") << "\n";
    return 0;
}

inline int train_pose2video_stage(const TrainArgs& args) {
    const RunConfig& c = args.cfg;
    const auto layout = pose::default_layout();
    const auto train = training_entries(args.corpus, c.p2v_max_train_sequences);
    const int n_styles = train.front().styles;
    const int resolution = train.front().resolution;
    const auto hand_mode = parse_hand_mode(c.p2v_hand_mode);

    // Frozen hand keypoint network: a prerequisite when the keypoint loss is
    // active, otherwise a fresh frozen net satisfies the training interface.
    const fs::path hand_ckpt = args.run / "handnet.ckpt";
    p2v::HandNetConfig hc;
    hc.base_channels = c.handnet_base;
    hc.seed = c.seed;
    std::optional<p2v::HandKeypointNet> hand_net;
    if (fs::exists(hand_ckpt)) {
        hand_net.emplace(p2v::load_handnet_checkpoint(hand_ckpt));
    } else if (hand_mode == p2v::HandAdvMode::kKeypoint && c.p2v_lambda_key > 0.0) {
        throw PreconditionError("missing hand keypoint checkpoint " + hand_ckpt.string() +
                                "; run 'signsynth train --stage handnet' first");
    } else {
        hand_net.emplace(hc);
    }

    // Frozen perceptual features: pre-trained on corpus frames once per run.
    const fs::path feat_ckpt = args.run / "featnet.ckpt";
    p2v::FeatureNetConfig fc;
    fc.base_channels = c.featnet_base;
    fc.seed = c.seed + 1;
    std::optional<p2v::FeatureNet> feat_net;
    if (fs::exists(feat_ckpt)) {
        feat_net.emplace(p2v::load_featnet_checkpoint(feat_ckpt));
    } else {
        feat_net.emplace(fc);
        if (c.featnet_epochs > 0 && c.p2v_lambda_vgg > 0.0) {
            std::vector<img::Frame> frames;
            for (std::size_t i = 0; i < train.size() &&
                                    frames.size() < static_cast<std::size_t>(c.featnet_frames);
                 ++i) {
                const auto& e = train[i];
                const int m = style_for_id(e.id, n_styles);
                for (int t = 0; t < e.frames && frames.size() <
                                                    static_cast<std::size_t>(c.featnet_frames);
                     t += 4)
                    frames.push_back(img::read_png(synth::frame_path(args.corpus, e.id, m, t)));
            }
            p2v::FeatureNetTrainConfig ftc;
            ftc.epochs = c.featnet_epochs;
            ftc.lr = c.featnet_lr;
            ftc.seed = c.seed + 2;
            p2v::train_featnet_autoencoder(*feat_net, frames, ftc);
        }
        p2v::save_featnet_checkpoint(feat_ckpt, *feat_net);
    }

    // Training corpus: one style per sequence, chosen by the shared rule.
    std::vector<p2v::VideoSample> samples;
    for (const auto& e : train) {
        const int m = style_for_id(e.id, n_styles);
        p2v::VideoSample s;
        s.poses = synth::load_pose(args.corpus, e.id, layout);
        s.style = load_style_image(synth::style_image_path(args.corpus, m), m);
        for (int t = 0; t < e.frames; ++t)
            s.frames.push_back(img::read_png(synth::frame_path(args.corpus, e.id, m, t)));
        samples.push_back(std::move(s));
    }

    const fs::path ckpt = args.run / "pose2video.ckpt";
    const bool resuming = fs::exists(ckpt);
    p2v::LossWeights weights;
    weights.lambda_fm = c.p2v_lambda_fm;
    weights.lambda_vgg = c.p2v_lambda_vgg;
    weights.lambda_key = c.p2v_lambda_key;
    weights.lambda_t = c.p2v_lambda_t;

    std::optional<p2v::Generator> gen;
    std::optional<p2v::DiscriminatorPyramid> disc;
    std::optional<p2v::HandKeypointDisc> hand_disc;
    if (resuming) {
        auto loaded = p2v::load_pose2video_checkpoint(ckpt);
        gen.emplace(std::move(loaded.gen));
        disc.emplace(std::move(loaded.disc));
        hand_disc.emplace(std::move(loaded.hand_disc));
    } else {
        p2v::GeneratorConfig gc;
        gc.resolution = resolution;
        gc.cond_channels = layout.limb_count();
        gc.base_channels = c.p2v_gen_base;
        gc.heat_sigma = c.p2v_heat_sigma;
        gc.seed = c.seed;
        gen.emplace(gc);
        p2v::DiscriminatorConfig dc;
        dc.cond_channels = layout.limb_count();
        dc.base_channels = c.p2v_disc_base;
        dc.seed = c.seed + 1;
        disc.emplace(dc);
        hand_disc.emplace(c.seed + 2);
    }
    p2v::HandPatchDisc patch_disc(c.seed + 3);

    // Optional curated sharp-hand set for the keypoint adversary's real branch.
    pose::GoodHandSet good_hands;
    if (c.p2v_good_hands != 0 && hand_mode == p2v::HandAdvMode::kKeypoint) {
        std::vector<pose::HandCrop> crops;
        for (const auto& s : samples) {
            for (std::size_t t = 0; t < s.frames.size() && crops.size() < 256; t += 2)
                for (pose::Side side : {pose::Side::kLeft, pose::Side::kRight}) {
                    const auto& f = s.poses.frames[t];
                    const int anchor = side == pose::Side::kLeft ? layout.left_hand_anchor
                                                                 : layout.right_hand_anchor;
                    if (f.confidence[static_cast<std::size_t>(anchor)] <= 0.0) continue;
                    crops.push_back(pose::crop_hand(s.frames[t], f, layout, side, img::Rgb{},
                                                    static_cast<int>(t)));
                }
            if (crops.size() >= 256) break;
        }
        good_hands = pose::select_good_hands(
            crops,
            [&](const img::Frame& patch) {
                pose::HandCrop crop;
                crop.patch = patch;
                return p2v::extract_hand_keypoints(*hand_net, crop);
            },
            c.p2v_blur_threshold);
    }

    p2v::P2VTrainConfig tc;
    tc.steps = args.max_steps.value_or(c.p2v_steps);
    tc.lr_g = c.p2v_lr_g;
    tc.lr_d = c.p2v_lr_d;
    tc.gan_mode = parse_gan_mode(c.p2v_gan_mode);
    tc.weights = weights;
    tc.hand_mode = hand_mode;
    tc.reading = parse_reading(c.p2v_reading);
    tc.background = img::Rgb{};
    tc.seed = c.seed;
    tc.log_path = args.run / "pose2video_log.csv";

    p2v::Adversaries adv;
    adv.pyramid = &*disc;
    adv.hand_disc = &*hand_disc;
    adv.hand_patch_disc = &patch_disc;
    adv.hand_net = &*hand_net;
    adv.feature_net = &*feat_net;
    adv.good_hands = good_hands.empty() ? nullptr : &good_hands;

    const auto report = p2v::train_pose2video(*gen, adv, samples, tc);

    // Copy style references beside the checkpoint so generation is
    // self-contained in the run directory.
    detail::make_dirs(args.run / "styles");
    for (int m = 0; m < n_styles; ++m)
        fs::copy_file(synth::style_image_path(args.corpus, m),
                      args.run / "styles" / ("style" + std::to_string(m) + ".png"),
                      fs::copy_options::overwrite_existing);

    p2v::save_pose2video_checkpoint(ckpt, *gen, *disc, *hand_disc, n_styles, weights);

    if (report.aborted) {
        std::cerr << "pose2video: training aborted on non-finite '" << report.aborted_term
                  << "' at step " << report.aborted_step
                  << "; checkpoint holds the last good state\n";
        return 1;
    }
    std::cout << "pose2video: sequences=" << samples.size() << " steps=" << tc.steps
              << " styles=" << n_styles << (resuming ? " (resumed)" : "") << "\n";
    return 0;
}

}  // namespace detail

inline int cmd_train(const TrainArgs& args) {
    detail::make_dirs(args.run);
    std::vector<std::pair<std::string, std::string>> hashes;
    hashes.emplace_back("config", sha256_hex(serialize_config(args.cfg)));
    if (fs::exists(args.corpus / "manifest.jsonl"))
        hashes.emplace_back("corpus/manifest.jsonl",
                            sha256_file(args.corpus / "manifest.jsonl"));
    detail::write_run_metadata(args.run, args.cfg, hashes);

    if (args.stage == "text2pose") return detail::train_text2pose_stage(args);
    if (args.stage == "handnet") return detail::train_handnet_stage(args);
    if (args.stage == "pose2video") return detail::train_pose2video_stage(args);
    throw ConfigError("train: unknown stage '" + args.stage +
                      "' (expected text2pose, pose2video, or handnet)");
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
    RunConfig cfg;
    fs::path run;
    fs::path out;                       // single-sequence mode
    std::optional<std::string> text;    // token ids, space-separated
    std::optional<fs::path> pose_file;  // skips the text-to-pose stage
    std::optional<int> style_id;
    std::optional<fs::path> style_image;
    std::optional<int> max_len;
    bool dump_heatmaps = false;
    std::optional<std::string> split;  // batch mode over a corpus split
    fs::path corpus;                   // required in batch mode
};

namespace detail {

inline std::vector<int> list_run_styles(const fs::path& run) {
    std::vector<int> ids;
    const fs::path dir = run / "styles";
    if (fs::exists(dir))
        for (const auto& e : fs::directory_iterator(dir)) {
            const std::string name = e.path().filename().string();
            if (name.rfind("style", 0) == 0 && e.path().extension() == ".png")
                ids.push_back(std::atoi(name.c_str() + 5));
        }
    std::sort(ids.begin(), ids.end());
    return ids;
}

inline p2v::StyleImage resolve_style(const GenerateArgs& args, int resolution) {
    if (args.style_id && args.style_image)
        throw PreconditionError("generate: pass either --style-id or --style-image, not both");
    if (args.style_image) {
        p2v::StyleImage s = load_style_image(*args.style_image, -1);
        if (s.pixels.dim(1) != resolution || s.pixels.dim(2) != resolution)
            throw ConfigError("generate: style image must be " + std::to_string(resolution) +
                              "x" + std::to_string(resolution));
        return s;
    }
    if (!args.style_id)
        throw PreconditionError("generate: pass --style-id or --style-image");
    const fs::path png = args.run / "styles" / ("style" + std::to_string(*args.style_id) + ".png");
    if (!fs::exists(png)) {
        std::string valid;
        for (int id : list_run_styles(args.run)) valid += (valid.empty() ? "" : ", ") +
                                                          std::to_string(id);
        throw PreconditionError("generate: unknown style id " + std::to_string(*args.style_id) +
                                " (valid ids: " + (valid.empty() ? "none" : valid) + ")");
    }
    return load_style_image(png, *args.style_id);
}

inline std::vector<int> parse_token_list(const std::string& text) {
    std::istringstream in(text);
    std::vector<int> tokens;
    std::string word;
    while (in >> word) {
        try {
            std::size_t used = 0;
            tokens.push_back(std::stoi(word, &used));
            if (used != word.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ConfigError("generate: --text expects space-separated token ids, got '" +
                              word + "'");
        }
    }
    if (tokens.empty()) throw PreconditionError("generate: --text is empty");
    return tokens;
}

inline void dump_heatmaps(const fs::path& dir, const pose::PoseSequence& poses,
                          const p2v::GeneratorConfig& gc) {
    make_dirs(dir);
    for (std::size_t t = 0; t < poses.frames.size(); ++t) {
        const auto heat = p2v::condition_tensor(poses.frames[t], poses.layout, gc);
        const int channels = heat.dim(0), h = heat.dim(1), w = heat.dim(2);
        for (int ch = 0; ch < channels; ++ch) {
            nn::Tensor plane({h, w});
            std::copy_n(heat.data() + static_cast<std::int64_t>(ch) * h * w,
                        static_cast<std::int64_t>(h) * w, plane.data());
            char name[48];
            std::snprintf(name, sizeof(name), "frame%05zu_limb%02d.png", t, ch);
            img::write_png_gray(dir / name, plane);
        }
    }
}

}  // namespace detail

inline int cmd_generate(const GenerateArgs& args) {
    const RunConfig& c = args.cfg;
    const auto layout = pose::default_layout();
    const fs::path p2v_ckpt = args.run / "pose2video.ckpt";
    if (!fs::exists(p2v_ckpt))
        throw PreconditionError("missing checkpoint " + p2v_ckpt.string() +
                                "; run 'signsynth train --stage pose2video' first");
    auto loaded = p2v::load_pose2video_checkpoint(p2v_ckpt);
    const int resolution = loaded.gen.config().resolution;

    // Batch mode: render every sequence of a corpus split from ground-truth
    // poses into the run directory, for evaluation.
    if (args.split) {
        if (args.corpus.empty())
            throw PreconditionError("generate: --split needs --corpus");
        const auto entries =
            detail::split_entries(synth::read_manifest(args.corpus), *args.split);
        if (entries.empty())
            throw PreconditionError("generate: corpus split '" + *args.split + "' is empty");
        long long frames_total = 0;
        for (const auto& e : entries) {
            const int m = args.style_id ? *args.style_id
                                        : detail::style_for_id(e.id, e.styles);
            const fs::path png = args.run / "styles" / ("style" + std::to_string(m) + ".png");
            if (!fs::exists(png))
                throw PreconditionError("generate: style image missing: " + png.string());
            const auto style = detail::load_style_image(png, m);
            const auto poses = synth::load_pose(args.corpus, e.id, layout);
            const auto frames = p2v::generate_video(loaded.gen, poses, style);
            const fs::path dir = args.run / "generated" / *args.split / e.id /
                                 ("style" + std::to_string(m));
            p2v::write_video(dir, frames, m, poses.fps);
            frames_total += static_cast<long long>(frames.size());
        }
        std::cout << "generated: split=" << *args.split << " sequences=" << entries.size()
                  << " frames=" << frames_total << " into "
                  << (args.run / "generated" / *args.split).string() << "\n";
        return 0;
    }

    // Single-sequence mode.
    if (args.out.empty()) throw PreconditionError("generate: --out is required");
    if (!!args.text == !!args.pose_file)
        throw PreconditionError("generate: pass exactly one of --text or --pose");
    const auto style = detail::resolve_style(args, resolution);

    std::vector<std::pair<std::string, std::string>> hashes;
    hashes.emplace_back("pose2video.ckpt", sha256_file(p2v_ckpt));

    pose::PoseSequence poses;
    bool terminated = true;
    if (args.pose_file) {
        if (!fs::exists(*args.pose_file))
            throw PreconditionError("generate: pose file not found: " +
                                    args.pose_file->string());
        std::ifstream in(*args.pose_file, std::ios::binary);
        std::ostringstream bytes;
        bytes << in.rdbuf();
        poses = pose::parse_pose_json(bytes.str(), layout);
        hashes.emplace_back("pose", sha256_file(*args.pose_file));
    } else {
        const fs::path t2p_ckpt = args.run / "text2pose.ckpt";
        if (!fs::exists(t2p_ckpt))
            throw PreconditionError("missing checkpoint " + t2p_ckpt.string() +
                                    "; run 'signsynth train --stage text2pose' first");
        auto model = t2p::load_text2pose_checkpoint(t2p_ckpt);
        const auto tokens = detail::parse_token_list(*args.text);
        t2p::ProduceConfig pc;
        pc.max_len = args.max_len.value_or(model.config().max_tgt);
        pc.counter_threshold = c.t2p_counter_threshold;
        pc.temperature = c.t2p_temperature;
        nn::Rng rng(c.seed);
        const auto produced =
            t2p::produce_sequence(model, t2p::TextSequence{tokens}, layout, rng, pc);
        poses = produced.seq;
        poses.fps = c.data_fps;
        terminated = produced.terminated;
        hashes.emplace_back("text2pose.ckpt", sha256_file(t2p_ckpt));
        hashes.emplace_back("text", sha256_hex(*args.text));
    }

    const auto frames = p2v::generate_video(loaded.gen, poses, style);
    p2v::write_video(args.out, frames, style.style_id, poses.fps);
    if (args.text)
        detail::write_file(args.out / "pose.json", pose::serialize_pose_json(poses));
    if (args.dump_heatmaps)
        detail::dump_heatmaps(args.out / "heatmaps", poses, loaded.gen.config());
    detail::write_run_metadata(args.out, c, hashes);

    std::cout << "generated: frames=" << frames.size() << " style="
              << (style.style_id >= 0 ? std::to_string(style.style_id) : "custom")
              << (args.text ? (terminated ? " terminated=yes" : " terminated=no") : "")
              << " into " << args.out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
    RunConfig cfg;
    fs::path run;
    fs::path corpus;
    std::string split = "test";
    fs::path out;                      // defaults to <run>/eval_<split>
    std::optional<fs::path> compare;   // another report.json to tabulate against
};

namespace detail {

inline std::string cell(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *v);
    return buf;
}

inline void print_comparison(const nlohmann::json& mine, const nlohmann::json& other,
                             const std::string& other_name) {
    auto field = [](const nlohmann::json& j, const char* k) -> std::optional<double> {
        if (j.contains(k) && j[k].is_number()) return j[k].get<double>();
        return std::nullopt;
    };
    std::cout << "comparison vs " << other_name << "\n";
    std::printf("%-12s %12s %12s\n", "metric", "this", "other");
    for (const char* k : {"ssim", "hand_ssim", "hand_pose", "fid"})
        std::printf("%-12s %12s %12s\n", k, cell(field(mine, k)).c_str(),
                    cell(field(other, k)).c_str());
}

}  // namespace detail

inline int cmd_evaluate(const EvaluateArgs& args) {
    const auto layout = pose::default_layout();
    if (!fs::exists(args.corpus / "manifest.jsonl"))
        throw PreconditionError("missing corpus manifest: " +
                                (args.corpus / "manifest.jsonl").string());
    const auto entries = detail::split_entries(synth::read_manifest(args.corpus), args.split);
    if (entries.empty())
        throw PreconditionError("evaluate: corpus split '" + args.split + "' is empty");

    std::vector<img::Frame> produced, target;
    pose::PoseSequence all_poses;
    all_poses.layout = layout;
    for (const auto& e : entries) {
        const int m = detail::style_for_id(e.id, e.styles);
        const auto poses = synth::load_pose(args.corpus, e.id, layout);
        for (int t = 0; t < e.frames; ++t) {
            const fs::path gen_png = args.run / "generated" / args.split / e.id /
                                     ("style" + std::to_string(m)) / synth::frame_name(t);
            if (!fs::exists(gen_png))
                throw PreconditionError("evaluate: missing generated frame: " +
                                        gen_png.string() +
                                        "; run 'signsynth generate --split " + args.split +
                                        "' first");
            const fs::path real_png = synth::frame_path(args.corpus, e.id, m, t);
            if (!fs::exists(real_png))
                throw PreconditionError("evaluate: missing ground-truth frame: " +
                                        real_png.string());
            produced.push_back(img::read_png(gen_png));
            target.push_back(img::read_png(real_png));
            all_poses.frames.push_back(poses.frames[static_cast<std::size_t>(t)]);
        }
    }

    std::optional<p2v::HandKeypointNet> hand_net;
    if (fs::exists(args.run / "handnet.ckpt"))
        hand_net.emplace(p2v::load_handnet_checkpoint(args.run / "handnet.ckpt"));

    metrics::MetricReport report = metrics::evaluate_frames(
        produced, target, all_poses, hand_net ? &*hand_net : nullptr, img::Rgb{});

    std::optional<p2v::FeatureNet> feat_net;
    if (fs::exists(args.run / "featnet.ckpt")) {
        feat_net.emplace(p2v::load_featnet_checkpoint(args.run / "featnet.ckpt"));
        report.fid = metrics::fid(produced, target, metrics::featnet_fid_extractor(*feat_net));
    }

    const fs::path out = args.out.empty() ? args.run / ("eval_" + args.split) : args.out;
    detail::make_dirs(out);
    metrics::write_report_json(out / "report.json", report);
    metrics::write_report_csv(out / "report.csv", report);

    std::printf("%-12s %12s\n", "metric", "value");
    std::printf("%-12s %12.4f\n", "ssim", report.ssim);
    std::printf("%-12s %12s\n", "hand_ssim", detail::cell(report.hand_ssim).c_str());
    std::printf("%-12s %12s\n", "hand_pose", detail::cell(report.hand_pose).c_str());
    std::printf("%-12s %12s\n", "fid", detail::cell(report.fid).c_str());
    std::printf("%-12s %12zu\n", "frames", produced.size());
    std::cout << "report: " << (out / "report.json").string() << "\n";

    if (args.compare) {
        std::ifstream in(*args.compare, std::ios::binary);
        if (!in)
            throw PreconditionError("evaluate: cannot open comparison report " +
                                    args.compare->string());
        nlohmann::json other;
        in >> other;
        std::ifstream mine_in(out / "report.json", std::ios::binary);
        nlohmann::json mine;
        mine_in >> mine;
        detail::print_comparison(mine, other, args.compare->string());
    }
    return 0;
}

}  // namespace signsynth::cli
