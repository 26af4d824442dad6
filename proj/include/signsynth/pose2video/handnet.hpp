#pragma once

// Differentiable hand keypoint regressor: convolutions over the 60x60 crop
// followed by a per-keypoint spatial soft-argmax. Frozen during GAN training;
// trained beforehand on labeled synthetic hand renders.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "signsynth/core/autograd.hpp"
#include "signsynth/core/conv.hpp"
#include "signsynth/core/optim.hpp"
#include "signsynth/core/rng.hpp"
#include "signsynth/errors.hpp"
#include "signsynth/pose/hands.hpp"
#include "signsynth/pose2video/generator.hpp"

namespace signsynth::p2v {

struct HandNetConfig {
    int base_channels = 16;
    std::uint64_t seed = 5;
};

class HandKeypointNet {
  public:
    static constexpr int kPatch = pose::kHandPatch;  // 60
    static constexpr int kPoints = 21;
    static constexpr int kGrid = kPatch / 2;  // soft-argmax grid after stride 2

    explicit HandKeypointNet(HandNetConfig cfg = {}) : cfg_(cfg) {
        if (cfg_.base_channels < 1) throw ConfigError("hand net: base_channels must be >= 1");
        nn::Rng rng(cfg_.seed);
        const int b = cfg_.base_channels;
        c1_w_ = reg_.add("c1.w", nn::init_conv_weight<float>(rng, b, 3, 4, 4));
        c1_b_ = reg_.add("c1.b", TenF::zeros({b}));
        c2_w_ = reg_.add("c2.w", nn::init_conv_weight<float>(rng, 2 * b, b, 3, 3));
        c2_b_ = reg_.add("c2.b", TenF::zeros({2 * b}));
        c3_w_ = reg_.add("c3.w", nn::init_conv_weight<float>(rng, kPoints, 2 * b, 3, 3));
        c3_b_ = reg_.add("c3.b", TenF::zeros({kPoints}));
        grid_ = VarF::constant(make_grid());
    }

    const HandNetConfig& config() const { return cfg_; }
    nn::ParamRegistryT<float>& registry() { return reg_; }
    const nn::ParamRegistryT<float>& registry() const { return reg_; }

    // crop: [1,3,60,60] in [-1,1]; returns [21,2] patch-normalized (x,y).
    VarF forward(const VarF& crop) const {
        const auto& s = crop.value().shape();
        if (s.size() != 4 || s[0] != 1 || s[1] != 3 || s[2] != kPatch || s[3] != kPatch)
            throw PreconditionError("hand net: input must be [1,3,60,60]");
        VarF x = nn::leaky_relu(nn::conv2d(crop, c1_w_, c1_b_, 2, 1));
        x = nn::leaky_relu(nn::conv2d(x, c2_w_, c2_b_, 1, 1));
        x = nn::conv2d(x, c3_w_, c3_b_, 1, 1);  // [1,21,30,30]
        const VarF flat = nn::reshape(x, {kPoints, kGrid * kGrid});
        return nn::matmul(nn::softmax_lastdim(flat), grid_);  // [21,2]
    }

  private:
    // Row g*kGrid+c holds the normalized center (x,y) of grid cell (g,c).
    static TenF make_grid() {
        TenF g({kGrid * kGrid, 2});
        for (int r = 0; r < kGrid; ++r)
            for (int c = 0; c < kGrid; ++c) {
                g.at2(r * kGrid + c, 0) = (static_cast<float>(c) + 0.5f) / kGrid;
                g.at2(r * kGrid + c, 1) = (static_cast<float>(r) + 0.5f) / kGrid;
            }
        return g;
    }

    HandNetConfig cfg_;
    nn::ParamRegistryT<float> reg_;
    VarF c1_w_, c1_b_, c2_w_, c2_b_, c3_w_, c3_b_;
    VarF grid_;
};

inline VarF keypoints_to_row(const pose::Keypoints& k) {
    if (k.points.size() != HandKeypointNet::kPoints)
        throw PreconditionError("keypoints_to_row: expected 21 points");
    TenF t({1, 2 * HandKeypointNet::kPoints});
    for (std::size_t i = 0; i < k.points.size(); ++i) {
        t[2 * static_cast<std::int64_t>(i)] = static_cast<float>(k.points[i].x);
        t[2 * static_cast<std::int64_t>(i) + 1] = static_cast<float>(k.points[i].y);
    }
    return VarF::constant(t);
}

inline pose::Keypoints extract_hand_keypoints(const HandKeypointNet& net,
                                              const pose::HandCrop& crop) {
    const VarF out = net.forward(lift(crop.patch));
    pose::Keypoints k;
    for (int i = 0; i < HandKeypointNet::kPoints; ++i)
        k.points.push_back({out.value().at2(i, 0), out.value().at2(i, 1)});
    return k;
}

struct HandSample {
    TenF crop;               // [3,60,60]
    pose::Keypoints target;  // patch-normalized
};

struct HandNetTrainConfig {
    int epochs = 30;
    double lr = 1e-3;
};

struct HandNetTrainReport {
    std::vector<double> epoch_mse;  // in normalized units squared
};

inline HandNetTrainReport train_handnet(HandKeypointNet& net,
                                        const std::vector<HandSample>& samples,
                                        const HandNetTrainConfig& cfg) {
    if (samples.empty()) throw PreconditionError("train_handnet: empty sample set");
    nn::AdamConfig<float> ac;
    ac.lr = static_cast<float>(cfg.lr);
    nn::AdamT<float> opt(net.registry(), ac);
    HandNetTrainReport report;
    for (int e = 0; e < cfg.epochs; ++e) {
        double total = 0.0;
        for (const auto& s : samples) {
            opt.zero_grad();
            const VarF pred = nn::reshape(net.forward(lift(s.crop)),
                                          {1, 2 * HandKeypointNet::kPoints});
            const VarF loss =
                nn::mean_all(nn::square(nn::sub(pred, keypoints_to_row(s.target))));
            nn::backward(loss);
            opt.step();
            total += loss.item();
        }
        report.epoch_mse.push_back(total / static_cast<double>(samples.size()));
    }
    return report;
}

}  // namespace signsynth::p2v
