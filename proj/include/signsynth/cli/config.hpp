#pragma once

// Flat key=value run configuration. Every tunable of the pipeline lives in
// one table; unknown keys are rejected, parsing is strict, and a config can
// be serialized back to text losslessly so run directories can store the
// resolved copy that produced them.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "signsynth/errors.hpp"

namespace signsynth::cli {

struct RunConfig {
    std::uint64_t seed = 7;
    std::string corpus_dir = "corpus";

    // Corpus generation.
    int data_sequences = 200;
    int data_styles = 8;
    int data_vocab = 20;
    int data_resolution = 64;
    double data_fps = 25.0;
    int data_min_primitives = 3;
    int data_max_primitives = 8;
    int data_frames_per_primitive = 8;

    // Text-to-pose model and training.
    int t2p_width = 64;
    int t2p_layers = 2;
    int t2p_heads = 4;
    int t2p_ff_mult = 4;
    int t2p_mixtures = 3;
    int t2p_max_src = 32;
    int t2p_max_tgt = 96;
    int t2p_epochs = 30;
    double t2p_lr = 1e-3;
    double t2p_counter_weight = 5.0;
    double t2p_grad_clip = 1.0;
    double t2p_counter_threshold = 0.99;
    double t2p_temperature = 0.0;
    int t2p_max_train_sequences = 0;  // 0 = use every training sequence

    // Pose-to-video model and training.
    int p2v_gen_base = 16;
    int p2v_disc_base = 16;
    double p2v_heat_sigma = 1.0;
    int p2v_steps = 500;
    double p2v_lr_g = 2e-4;
    double p2v_lr_d = 2e-4;
    double p2v_lambda_fm = 10.0;
    double p2v_lambda_vgg = 10.0;
    double p2v_lambda_key = 1.0;
    double p2v_lambda_t = 1.0;
    std::string p2v_gan_mode = "ns";        // ns | ls
    std::string p2v_hand_mode = "keypoint"; // keypoint | patch | off
    std::string p2v_reading = "corrected";  // corrected | literal
    int p2v_good_hands = 0;                 // 1 = curate a good-hands set
    double p2v_blur_threshold = 0.0;
    int p2v_max_train_sequences = 0;

    // Hand keypoint network.
    int handnet_base = 16;
    int handnet_epochs = 10;
    double handnet_lr = 1e-3;
    int handnet_samples = 200;

    // Frozen perceptual feature network.
    int featnet_base = 16;
    int featnet_epochs = 2;
    double featnet_lr = 1e-3;
    int featnet_frames = 64;
};

namespace detail {

struct KeyBinding {
    const char* key;
    enum Type { kInt, kDouble, kU64, kString } type;
    int RunConfig::*as_int = nullptr;
    double RunConfig::*as_double = nullptr;
    std::uint64_t RunConfig::*as_u64 = nullptr;
    std::string RunConfig::*as_string = nullptr;
};

inline const std::vector<KeyBinding>& bindings() {
    auto of_int = [](const char* k, int RunConfig::*m) {
        return KeyBinding{k, KeyBinding::kInt, m, nullptr, nullptr, nullptr};
    };
    auto of_double = [](const char* k, double RunConfig::*m) {
        return KeyBinding{k, KeyBinding::kDouble, nullptr, m, nullptr, nullptr};
    };
    auto of_u64 = [](const char* k, std::uint64_t RunConfig::*m) {
        return KeyBinding{k, KeyBinding::kU64, nullptr, nullptr, m, nullptr};
    };
    auto of_string = [](const char* k, std::string RunConfig::*m) {
        return KeyBinding{k, KeyBinding::kString, nullptr, nullptr, nullptr, m};
    };
    static const std::vector<KeyBinding> table = {
        of_u64("seed", &RunConfig::seed),
        of_string("corpus_dir", &RunConfig::corpus_dir),
        of_int("data.sequences", &RunConfig::data_sequences),
        of_int("data.styles", &RunConfig::data_styles),
        of_int("data.vocab", &RunConfig::data_vocab),
        of_int("data.resolution", &RunConfig::data_resolution),
        of_double("data.fps", &RunConfig::data_fps),
        of_int("data.min_primitives", &RunConfig::data_min_primitives),
        of_int("data.max_primitives", &RunConfig::data_max_primitives),
        of_int("data.frames_per_primitive", &RunConfig::data_frames_per_primitive),
        of_int("t2p.width", &RunConfig::t2p_width),
        of_int("t2p.layers", &RunConfig::t2p_layers),
        of_int("t2p.heads", &RunConfig::t2p_heads),
        of_int("t2p.ff_mult", &RunConfig::t2p_ff_mult),
        of_int("t2p.mixtures", &RunConfig::t2p_mixtures),
        of_int("t2p.max_src", &RunConfig::t2p_max_src),
        of_int("t2p.max_tgt", &RunConfig::t2p_max_tgt),
        of_int("t2p.epochs", &RunConfig::t2p_epochs),
        of_double("t2p.lr", &RunConfig::t2p_lr),
        of_double("t2p.counter_weight", &RunConfig::t2p_counter_weight),
        of_double("t2p.grad_clip", &RunConfig::t2p_grad_clip),
        of_double("t2p.counter_threshold", &RunConfig::t2p_counter_threshold),
        of_double("t2p.temperature", &RunConfig::t2p_temperature),
        of_int("t2p.max_train_sequences", &RunConfig::t2p_max_train_sequences),
        of_int("p2v.gen_base", &RunConfig::p2v_gen_base),
        of_int("p2v.disc_base", &RunConfig::p2v_disc_base),
        of_double("p2v.heat_sigma", &RunConfig::p2v_heat_sigma),
        of_int("p2v.steps", &RunConfig::p2v_steps),
        of_double("p2v.lr_g", &RunConfig::p2v_lr_g),
        of_double("p2v.lr_d", &RunConfig::p2v_lr_d),
        of_double("p2v.lambda_fm", &RunConfig::p2v_lambda_fm),
        of_double("p2v.lambda_vgg", &RunConfig::p2v_lambda_vgg),
        of_double("p2v.lambda_key", &RunConfig::p2v_lambda_key),
        of_double("p2v.lambda_t", &RunConfig::p2v_lambda_t),
        of_string("p2v.gan_mode", &RunConfig::p2v_gan_mode),
        of_string("p2v.hand_mode", &RunConfig::p2v_hand_mode),
        of_string("p2v.reading", &RunConfig::p2v_reading),
        of_int("p2v.good_hands", &RunConfig::p2v_good_hands),
        of_double("p2v.blur_threshold", &RunConfig::p2v_blur_threshold),
        of_int("p2v.max_train_sequences", &RunConfig::p2v_max_train_sequences),
        of_int("handnet.base", &RunConfig::handnet_base),
        of_int("handnet.epochs", &RunConfig::handnet_epochs),
        of_double("handnet.lr", &RunConfig::handnet_lr),
        of_int("handnet.samples", &RunConfig::handnet_samples),
        of_int("featnet.base", &RunConfig::featnet_base),
        of_int("featnet.epochs", &RunConfig::featnet_epochs),
        of_double("featnet.lr", &RunConfig::featnet_lr),
        of_int("featnet.frames", &RunConfig::featnet_frames),
    };
    return table;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

// Applies one key=value assignment; unknown keys and malformed values are
// configuration errors.
inline void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& b : detail::bindings()) {
        if (key != b.key) continue;
        try {
            std::size_t used = 0;
            switch (b.type) {
                case detail::KeyBinding::kInt: {
                    const long long v = std::stoll(value, &used);
                    if (used != value.size()) throw std::invalid_argument("trailing");
                    cfg.*(b.as_int) = static_cast<int>(v);
                    return;
                }
                case detail::KeyBinding::kDouble: {
                    const double v = std::stod(value, &used);
                    if (used != value.size()) throw std::invalid_argument("trailing");
                    cfg.*(b.as_double) = v;
                    return;
                }
                case detail::KeyBinding::kU64: {
                    const unsigned long long v = std::stoull(value, &used);
                    if (used != value.size()) throw std::invalid_argument("trailing");
                    cfg.*(b.as_u64) = v;
                    return;
                }
                case detail::KeyBinding::kString:
                    cfg.*(b.as_string) = value;
                    return;
            }
        } catch (const std::exception&) {
            throw ConfigError("config: bad value for '" + key + "': '" + value + "'");
        }
    }
    throw ConfigError("config: unknown key '" + key + "'");
}

// Parses "key = value" lines; '#' starts a comment, blank lines are ignored.
inline void apply_config_text(RunConfig& cfg, const std::string& text,
                              const std::string& source) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: " + source + " line " + std::to_string(line_no) +
                              ": expected key=value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config: " + source + " line " + std::to_string(line_no) +
                              ": empty key");
        set_key(cfg, key, value);
    }
}

inline void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::ostringstream bytes;
    bytes << in.rdbuf();
    apply_config_text(cfg, bytes.str(), path.filename().string());
}

// Canonical text form: every key in table order. Round-trips exactly.
inline std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream out;
    char buf[64];
    for (const auto& b : detail::bindings()) {
        out << b.key << '=';
        switch (b.type) {
            case detail::KeyBinding::kInt:
                out << cfg.*(b.as_int);
                break;
            case detail::KeyBinding::kDouble:
                std::snprintf(buf, sizeof(buf), "%.17g", cfg.*(b.as_double));
                out << buf;
                break;
            case detail::KeyBinding::kU64:
                out << cfg.*(b.as_u64);
                break;
            case detail::KeyBinding::kString:
                out << cfg.*(b.as_string);
                break;
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace signsynth::cli
