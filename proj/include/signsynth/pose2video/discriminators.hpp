#pragma once

// Adversaries for the frame generator: a 3-scale patch discriminator pyramid
// conditioned on pose heat-maps and the style image, a fully-connected
// discriminator over hand keypoints, and a patch discriminator over raw hand
// crops (ablation mode).

#include <cstdint>
#include <string>
#include <vector>

#include "signsynth/core/autograd.hpp"
#include "signsynth/core/conv.hpp"
#include "signsynth/core/optim.hpp"
#include "signsynth/core/rng.hpp"
#include "signsynth/errors.hpp"
#include "signsynth/pose2video/generator.hpp"

namespace signsynth::p2v {

struct DiscriminatorConfig {
    int scales = 3;  // the objective sums over exactly three resolutions
    int frame_channels = 3;
    int cond_channels = 50;
    int base_channels = 16;
    std::uint64_t seed = 2;
};

class DiscriminatorPyramid {
  public:
    explicit DiscriminatorPyramid(DiscriminatorConfig cfg) : cfg_(cfg) {
        if (cfg_.scales != 3)
            throw ConfigError("discriminator pyramid: exactly 3 scales are required");
        if (cfg_.base_channels < 1)
            throw ConfigError("discriminator pyramid: base_channels must be >= 1");
        build();
    }

    const DiscriminatorConfig& config() const { return cfg_; }
    int scales() const { return cfg_.scales; }
    nn::ParamRegistryT<float>& registry() { return reg_; }
    const nn::ParamRegistryT<float>& registry() const { return reg_; }

    // frame/cond/style: [1,C,H,W] at full resolution; inputs are pooled down
    // to the requested scale. Returns intermediate activations; the last
    // entry is the patch logit map.
    std::vector<VarF> features(int scale, const VarF& frame, const VarF& cond,
                               const VarF& style) const {
        if (scale < 0 || scale >= cfg_.scales)
            throw PreconditionError("discriminator pyramid: scale out of range");
        VarF x = nn::concat_channels<float>({frame, cond, style});
        for (int s = 0; s < scale; ++s) x = nn::avg_pool2(x);
        const auto& d = scales_[static_cast<std::size_t>(scale)];
        std::vector<VarF> feats;
        feats.push_back(nn::leaky_relu(nn::conv2d(x, d.c1_w, d.c1_b, 2, 1)));
        feats.push_back(nn::leaky_relu(nn::instance_norm(
            nn::conv2d(feats.back(), d.c2_w, d.c2_b, 2, 1), d.c2_g, d.c2_beta)));
        feats.push_back(nn::conv2d(feats.back(), d.c3_w, d.c3_b, 1, 1));
        return feats;
    }

    VarF logits(int scale, const VarF& frame, const VarF& cond, const VarF& style) const {
        return features(scale, frame, cond, style).back();
    }

  private:
    struct Scale {
        VarF c1_w, c1_b;
        VarF c2_w, c2_b, c2_g, c2_beta;
        VarF c3_w, c3_b;
    };

    void build() {
        nn::Rng rng(cfg_.seed);
        const int b = cfg_.base_channels;
        const int cin = cfg_.frame_channels + cfg_.cond_channels + 3;
        for (int s = 0; s < cfg_.scales; ++s) {
            const std::string p = "s" + std::to_string(s) + ".";
            Scale d;
            d.c1_w = reg_.add(p + "c1.w", nn::init_conv_weight<float>(rng, b, cin, 4, 4));
            d.c1_b = reg_.add(p + "c1.b", TenF::zeros({b}));
            d.c2_w = reg_.add(p + "c2.w", nn::init_conv_weight<float>(rng, 2 * b, b, 4, 4));
            d.c2_b = reg_.add(p + "c2.b", TenF::zeros({2 * b}));
            d.c2_g = reg_.add(p + "c2.g", TenF::full({2 * b}, 1.0f));
            d.c2_beta = reg_.add(p + "c2.beta", TenF::zeros({2 * b}));
            d.c3_w = reg_.add(p + "c3.w", nn::init_conv_weight<float>(rng, 1, 2 * b, 3, 3));
            d.c3_b = reg_.add(p + "c3.b", TenF::zeros({1}));
            scales_.push_back(d);
        }
    }

    DiscriminatorConfig cfg_;
    nn::ParamRegistryT<float> reg_;
    std::vector<Scale> scales_;
};

// Fully-connected discriminator over one hand's flattened keypoints.
class HandKeypointDisc {
  public:
    static constexpr int kInput = 42;  // 21 keypoints x 2 coordinates

    explicit HandKeypointDisc(std::uint64_t seed = 3) {
        nn::Rng rng(seed);
        w1_ = reg_.add("w1", nn::init_linear_weight<float>(rng, 64, kInput));
        b1_ = reg_.add("b1", TenF::zeros({64}));
        w2_ = reg_.add("w2", nn::init_linear_weight<float>(rng, 64, 64));
        b2_ = reg_.add("b2", TenF::zeros({64}));
        w3_ = reg_.add("w3", nn::init_linear_weight<float>(rng, 1, 64));
        b3_ = reg_.add("b3", TenF::zeros({1}));
    }

    nn::ParamRegistryT<float>& registry() { return reg_; }
    const nn::ParamRegistryT<float>& registry() const { return reg_; }

    // keypoints: [1,42] in patch-normalized units; returns the [1,1] logit.
    VarF forward(const VarF& keypoints) const {
        if (keypoints.value().ndim() != 2 || keypoints.value().dim(1) != kInput)
            throw PreconditionError("hand keypoint discriminator: input must be [N,42]");
        VarF x = nn::leaky_relu(nn::linear(keypoints, w1_, b1_));
        x = nn::leaky_relu(nn::linear(x, w2_, b2_));
        return nn::linear(x, w3_, b3_);
    }

  private:
    nn::ParamRegistryT<float> reg_;
    VarF w1_, b1_, w2_, b2_, w3_, b3_;
};

// Ablation adversary: judges the 60x60 hand crop directly instead of its
// keypoints.
class HandPatchDisc {
  public:
    explicit HandPatchDisc(std::uint64_t seed = 4) {
        nn::Rng rng(seed);
        c1_w_ = reg_.add("c1.w", nn::init_conv_weight<float>(rng, 16, 3, 4, 4));
        c1_b_ = reg_.add("c1.b", TenF::zeros({16}));
        c2_w_ = reg_.add("c2.w", nn::init_conv_weight<float>(rng, 32, 16, 4, 4));
        c2_b_ = reg_.add("c2.b", TenF::zeros({32}));
        c2_g_ = reg_.add("c2.g", TenF::full({32}, 1.0f));
        c2_beta_ = reg_.add("c2.beta", TenF::zeros({32}));
        c3_w_ = reg_.add("c3.w", nn::init_conv_weight<float>(rng, 1, 32, 3, 3));
        c3_b_ = reg_.add("c3.b", TenF::zeros({1}));
    }

    nn::ParamRegistryT<float>& registry() { return reg_; }
    const nn::ParamRegistryT<float>& registry() const { return reg_; }

    // crop: [1,3,60,60]; returns the patch logit map.
    VarF forward(const VarF& crop) const {
        const auto& s = crop.value().shape();
        if (s.size() != 4 || s[1] != 3 || s[2] != 60 || s[3] != 60)
            throw PreconditionError("hand patch discriminator: input must be [N,3,60,60]");
        VarF x = nn::leaky_relu(nn::conv2d(crop, c1_w_, c1_b_, 2, 1));
        x = nn::leaky_relu(
            nn::instance_norm(nn::conv2d(x, c2_w_, c2_b_, 2, 1), c2_g_, c2_beta_));
        return nn::conv2d(x, c3_w_, c3_b_, 1, 1);
    }

  private:
    nn::ParamRegistryT<float> reg_;
    VarF c1_w_, c1_b_, c2_w_, c2_b_, c2_g_, c2_beta_, c3_w_, c3_b_;
};

}  // namespace signsynth::p2v
