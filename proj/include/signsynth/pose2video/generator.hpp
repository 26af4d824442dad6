#pragma once

// Style-conditioned pose-to-frame generator: a 3-level U-Net over the limb
// heat-map channels concatenated with the style image, tanh output.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "signsynth/core/autograd.hpp"
#include "signsynth/core/conv.hpp"
#include "signsynth/core/image.hpp"
#include "signsynth/core/optim.hpp"
#include "signsynth/core/rng.hpp"
#include "signsynth/errors.hpp"
#include "signsynth/pose/heatmap.hpp"
#include "signsynth/pose/pose.hpp"

namespace signsynth::p2v {

using VarF = nn::VarT<float>;
using TenF = nn::Tensor;

struct StyleImage {
    TenF pixels;        // [3,H,W] in [-1,1]
    int style_id = -1;  // -1 when the style is not one of the training set
};

// Wraps a [C,H,W] tensor as a [1,C,H,W] graph constant.
inline VarF lift(const TenF& t) {
    if (t.ndim() != 3) throw PreconditionError("lift: expected [C,H,W]");
    return VarF::constant(t.reshaped({1, t.dim(0), t.dim(1), t.dim(2)}));
}

struct GeneratorConfig {
    int resolution = 64;
    int cond_channels = 50;  // one heat-map channel per limb
    int base_channels = 16;
    double heat_sigma = 1.0;  // falloff used when rasterizing conditioning
    std::uint64_t seed = 1;
};

class Generator {
  public:
    static constexpr int kLevels = 3;

    explicit Generator(GeneratorConfig cfg) : cfg_(cfg) {
        if (cfg_.resolution < 8 || cfg_.resolution % 8 != 0)
            throw ConfigError("generator: resolution must be a positive multiple of 8");
        if (cfg_.cond_channels < 1) throw ConfigError("generator: cond_channels must be >= 1");
        if (cfg_.base_channels < 1) throw ConfigError("generator: base_channels must be >= 1");
        build();
    }

    const GeneratorConfig& config() const { return cfg_; }
    nn::ParamRegistryT<float>& registry() { return reg_; }
    const nn::ParamRegistryT<float>& registry() const { return reg_; }

    // cond: [1,C,H,W], style: [1,3,H,W]. zero_skips is a diagnostic mode that
    // feeds zeros in place of the skip connections.
    VarF forward(const VarF& cond, const VarF& style, bool zero_skips = false) const {
        check_input(cond.value().shape(), cfg_.cond_channels, "cond");
        check_input(style.value().shape(), 3, "style");
        const VarF x = nn::concat_channels<float>({cond, style});
        const VarF d1 = nn::leaky_relu(
            nn::instance_norm(nn::conv2d(x, d1_w_, d1_b_, 2, 1), d1_g_, d1_bn_));
        const VarF d2 = nn::leaky_relu(
            nn::instance_norm(nn::conv2d(d1, d2_w_, d2_b_, 2, 1), d2_g_, d2_bn_));
        const VarF d3 = nn::leaky_relu(
            nn::instance_norm(nn::conv2d(d2, d3_w_, d3_b_, 2, 1), d3_g_, d3_bn_));
        const VarF s2 = zero_skips ? zeros_like(d2) : d2;
        const VarF s1 = zero_skips ? zeros_like(d1) : d1;
        const VarF u1 = nn::relu(nn::instance_norm(
            nn::conv2d(nn::concat_channels<float>({nn::upsample2(d3), s2}), u1_w_, u1_b_, 1, 1),
            u1_g_, u1_bn_));
        const VarF u2 = nn::relu(nn::instance_norm(
            nn::conv2d(nn::concat_channels<float>({nn::upsample2(u1), s1}), u2_w_, u2_b_, 1, 1),
            u2_g_, u2_bn_));
        return nn::tanh_op(nn::conv2d(nn::upsample2(u2), u3_w_, u3_b_, 1, 1));
    }

  private:
    void check_input(const std::vector<int>& s, int channels, const char* what) const {
        if (s.size() != 4 || s[0] != 1 || s[1] != channels || s[2] != cfg_.resolution ||
            s[3] != cfg_.resolution)
            throw ConfigError(std::string("generator: ") + what + " shape mismatch");
    }

    static VarF zeros_like(const VarF& v) { return VarF::constant(TenF(v.value().shape())); }

    VarF add_param(const std::string& name, TenF t) { return reg_.add(name, std::move(t)); }

    void build() {
        nn::Rng rng(cfg_.seed);
        const int b = cfg_.base_channels;
        const int cin = cfg_.cond_channels + 3;
        d1_w_ = add_param("d1.w", nn::init_conv_weight<float>(rng, b, cin, 4, 4));
        d1_b_ = add_param("d1.b", TenF::zeros({b}));
        d1_g_ = add_param("d1.g", TenF::full({b}, 1.0f));
        d1_bn_ = add_param("d1.beta", TenF::zeros({b}));
        d2_w_ = add_param("d2.w", nn::init_conv_weight<float>(rng, 2 * b, b, 4, 4));
        d2_b_ = add_param("d2.b", TenF::zeros({2 * b}));
        d2_g_ = add_param("d2.g", TenF::full({2 * b}, 1.0f));
        d2_bn_ = add_param("d2.beta", TenF::zeros({2 * b}));
        d3_w_ = add_param("d3.w", nn::init_conv_weight<float>(rng, 4 * b, 2 * b, 4, 4));
        d3_b_ = add_param("d3.b", TenF::zeros({4 * b}));
        d3_g_ = add_param("d3.g", TenF::full({4 * b}, 1.0f));
        d3_bn_ = add_param("d3.beta", TenF::zeros({4 * b}));
        u1_w_ = add_param("u1.w", nn::init_conv_weight<float>(rng, 2 * b, 6 * b, 3, 3));
        u1_b_ = add_param("u1.b", TenF::zeros({2 * b}));
        u1_g_ = add_param("u1.g", TenF::full({2 * b}, 1.0f));
        u1_bn_ = add_param("u1.beta", TenF::zeros({2 * b}));
        u2_w_ = add_param("u2.w", nn::init_conv_weight<float>(rng, b, 3 * b, 3, 3));
        u2_b_ = add_param("u2.b", TenF::zeros({b}));
        u2_g_ = add_param("u2.g", TenF::full({b}, 1.0f));
        u2_bn_ = add_param("u2.beta", TenF::zeros({b}));
        u3_w_ = add_param("u3.w", nn::init_conv_weight<float>(rng, 3, b, 3, 3));
        u3_b_ = add_param("u3.b", TenF::zeros({3}));
    }

    GeneratorConfig cfg_;
    nn::ParamRegistryT<float> reg_;
    VarF d1_w_, d1_b_, d1_g_, d1_bn_;
    VarF d2_w_, d2_b_, d2_g_, d2_bn_;
    VarF d3_w_, d3_b_, d3_g_, d3_bn_;
    VarF u1_w_, u1_b_, u1_g_, u1_bn_;
    VarF u2_w_, u2_b_, u2_g_, u2_bn_;
    VarF u3_w_, u3_b_;
};

// Rasterizes a pose frame into the generator's conditioning tensor.
inline pose::HeatmapTensor condition_tensor(const pose::PoseFrame& frame,
                                            const pose::JointLayout& layout,
                                            const GeneratorConfig& cfg) {
    pose::LineConfig lc;
    lc.sigma = cfg.heat_sigma;
    return pose::rasterize_heatmap(frame, layout, cfg.resolution, cfg.resolution, lc);
}

inline img::Frame generate_frame(const Generator& gen, const pose::HeatmapTensor& cond,
                                 const StyleImage& style) {
    const VarF out = gen.forward(lift(cond), lift(style.pixels));
    img::Frame frame({3, gen.config().resolution, gen.config().resolution});
    for (std::int64_t i = 0; i < frame.size(); ++i)
        frame[i] = std::clamp(out.value()[i], -1.0f, 1.0f);
    return frame;
}

inline std::vector<img::Frame> generate_video(const Generator& gen,
                                              const pose::PoseSequence& poses,
                                              const StyleImage& style) {
    if (poses.frames.empty()) throw PreconditionError("generate_video: empty pose sequence");
    std::vector<img::Frame> out;
    out.reserve(poses.frames.size());
    for (const auto& f : poses.frames)
        out.push_back(generate_frame(gen, condition_tensor(f, poses.layout, gen.config()), style));
    return out;
}

// Writes frame{t:05d}.png files plus a manifest.json into dir.
inline void write_video(const std::filesystem::path& dir, const std::vector<img::Frame>& frames,
                        int style_id, double fps) {
    std::filesystem::create_directories(dir);
    for (std::size_t t = 0; t < frames.size(); ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame%05zu.png", t);
        img::write_png(dir / name, frames[t]);
    }
    nlohmann::json manifest;
    manifest["style_id"] = style_id;
    manifest["fps"] = fps;
    manifest["count"] = frames.size();
    std::ofstream os(dir / "manifest.json");
    if (!os) throw IoError("cannot write manifest: " + (dir / "manifest.json").string());
    os << manifest.dump(2) << "\n";
}

}  // namespace signsynth::p2v
