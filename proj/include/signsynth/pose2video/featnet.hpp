#pragma once

// Frozen feature extractor for the perceptual loss. At this scale the
// extractor is a small convolutional encoder, either pre-trained as a frame
// autoencoder on the corpus or left at its random initialization.

#include <cstdint>
#include <vector>

#include "signsynth/core/autograd.hpp"
#include "signsynth/core/conv.hpp"
#include "signsynth/core/optim.hpp"
#include "signsynth/core/rng.hpp"
#include "signsynth/errors.hpp"
#include "signsynth/pose2video/generator.hpp"

namespace signsynth::p2v {

struct FeatureNetConfig {
    int base_channels = 16;
    std::uint64_t seed = 6;
};

class FeatureNet {
  public:
    static constexpr int kLayers = 3;

    explicit FeatureNet(FeatureNetConfig cfg = {}) : cfg_(cfg) {
        if (cfg_.base_channels < 1) throw ConfigError("feature net: base_channels must be >= 1");
        nn::Rng rng(cfg_.seed);
        const int b = cfg_.base_channels;
        c1_w_ = reg_.add("c1.w", nn::init_conv_weight<float>(rng, b, 3, 4, 4));
        c1_b_ = reg_.add("c1.b", TenF::zeros({b}));
        c2_w_ = reg_.add("c2.w", nn::init_conv_weight<float>(rng, 2 * b, b, 4, 4));
        c2_b_ = reg_.add("c2.b", TenF::zeros({2 * b}));
        c3_w_ = reg_.add("c3.w", nn::init_conv_weight<float>(rng, 4 * b, 2 * b, 4, 4));
        c3_b_ = reg_.add("c3.b", TenF::zeros({4 * b}));
    }

    const FeatureNetConfig& config() const { return cfg_; }
    nn::ParamRegistryT<float>& registry() { return reg_; }
    const nn::ParamRegistryT<float>& registry() const { return reg_; }

    // img: [1,3,H,W]; returns activations of each of the 3 layers.
    std::vector<VarF> features(const VarF& img) const {
        std::vector<VarF> out;
        out.push_back(nn::leaky_relu(nn::conv2d(img, c1_w_, c1_b_, 2, 1)));
        out.push_back(nn::leaky_relu(nn::conv2d(out.back(), c2_w_, c2_b_, 2, 1)));
        out.push_back(nn::leaky_relu(nn::conv2d(out.back(), c3_w_, c3_b_, 2, 1)));
        return out;
    }

  private:
    FeatureNetConfig cfg_;
    nn::ParamRegistryT<float> reg_;
    VarF c1_w_, c1_b_, c2_w_, c2_b_, c3_w_, c3_b_;
};

struct FeatureNetTrainConfig {
    int epochs = 10;
    double lr = 1e-3;
    std::uint64_t seed = 11;
};

struct FeatureNetTrainReport {
    std::vector<double> epoch_mse;
};

// Pre-trains the encoder on frame reconstruction with a throwaway decoder,
// then leaves the encoder to be used frozen.
inline FeatureNetTrainReport train_featnet_autoencoder(FeatureNet& net,
                                                       const std::vector<img::Frame>& frames,
                                                       const FeatureNetTrainConfig& cfg) {
    if (frames.empty()) throw PreconditionError("train_featnet_autoencoder: no frames");
    const int b = net.config().base_channels;
    nn::ParamRegistryT<float> dec;
    nn::Rng rng(cfg.seed);
    const VarF u1_w = dec.add("u1.w", nn::init_conv_weight<float>(rng, 2 * b, 4 * b, 3, 3));
    const VarF u1_b = dec.add("u1.b", TenF::zeros({2 * b}));
    const VarF u2_w = dec.add("u2.w", nn::init_conv_weight<float>(rng, b, 2 * b, 3, 3));
    const VarF u2_b = dec.add("u2.b", TenF::zeros({b}));
    const VarF u3_w = dec.add("u3.w", nn::init_conv_weight<float>(rng, 3, b, 3, 3));
    const VarF u3_b = dec.add("u3.b", TenF::zeros({3}));

    nn::AdamConfig<float> ac;
    ac.lr = static_cast<float>(cfg.lr);
    nn::AdamT<float> enc_opt(net.registry(), ac);
    nn::AdamT<float> dec_opt(dec, ac);

    FeatureNetTrainReport report;
    for (int e = 0; e < cfg.epochs; ++e) {
        double total = 0.0;
        for (const auto& f : frames) {
            enc_opt.zero_grad();
            dec_opt.zero_grad();
            const VarF x = lift(f);
            const VarF code = net.features(x).back();
            VarF y = nn::relu(nn::conv2d(nn::upsample2(code), u1_w, u1_b, 1, 1));
            y = nn::relu(nn::conv2d(nn::upsample2(y), u2_w, u2_b, 1, 1));
            y = nn::tanh_op(nn::conv2d(nn::upsample2(y), u3_w, u3_b, 1, 1));
            const VarF loss = nn::mean_all(nn::square(nn::sub(y, x)));
            nn::backward(loss);
            enc_opt.step();
            dec_opt.step();
            total += loss.item();
        }
        report.epoch_mse.push_back(total / static_cast<double>(frames.size()));
    }
    return report;
}

}  // namespace signsynth::p2v
