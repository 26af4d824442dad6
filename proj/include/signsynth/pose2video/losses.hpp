#pragma once

// The generator's full objective: multi-scale adversarial loss, discriminator
// feature matching, perceptual distance, hand keypoint adversary, temporal
// consistency, and their weighted sum.

#include <optional>
#include <string>
#include <vector>

#include "signsynth/core/autograd.hpp"
#include "signsynth/errors.hpp"
#include "signsynth/pose/hands.hpp"
#include "signsynth/pose2video/discriminators.hpp"
#include "signsynth/pose2video/featnet.hpp"
#include "signsynth/pose2video/generator.hpp"
#include "signsynth/pose2video/handnet.hpp"

namespace signsynth::p2v {

enum class GanMode {
    kNonSaturating,  // -log D terms, the printed objective
    kLeastSquares,   // squared-error surrogate for toy-scale stability
};

struct GanLossPair {
    VarF loss_d;
    VarF loss_g;
};

// -log sigmoid(x) without leaving log space.
inline VarF nlog_sigmoid(const VarF& x) { return nn::softplus(nn::neg(x)); }
// -log(1 - sigmoid(x)).
inline VarF nlog_one_minus_sigmoid(const VarF& x) { return nn::softplus(x); }

// Sum over the three scales; per scale the patch decisions are averaged.
// The discriminator term detaches the fake branch so it never trains G.
inline GanLossPair gan_loss(const DiscriminatorPyramid& disc, const VarF& real, const VarF& fake,
                            const VarF& cond, const VarF& style,
                            GanMode mode = GanMode::kNonSaturating) {
    GanLossPair out;
    bool first = true;
    for (int s = 0; s < disc.scales(); ++s) {
        const VarF lr = disc.logits(s, real, cond, style);
        const VarF lfd = disc.logits(s, nn::detach(fake), cond, style);
        const VarF lfg = disc.logits(s, fake, cond, style);
        VarF d_term, g_term;
        if (mode == GanMode::kNonSaturating) {
            d_term = nn::add(nn::mean_all(nlog_sigmoid(lr)),
                             nn::mean_all(nlog_one_minus_sigmoid(lfd)));
            g_term = nn::mean_all(nlog_sigmoid(lfg));
        } else {
            d_term = nn::add(nn::mean_all(nn::square(nn::add_scalar(lr, -1.0f))),
                             nn::mean_all(nn::square(lfd)));
            g_term = nn::mean_all(nn::square(nn::add_scalar(lfg, -1.0f)));
        }
        out.loss_d = first ? d_term : nn::add(out.loss_d, d_term);
        out.loss_g = first ? g_term : nn::add(out.loss_g, g_term);
        first = false;
    }
    return out;
}

// Mean L1 between corresponding discriminator activations of the real and
// fake branches, averaged over layers and scales; the real branch is a
// constant.
inline VarF feature_matching_loss(const DiscriminatorPyramid& disc, const VarF& real,
                                  const VarF& fake, const VarF& cond, const VarF& style) {
    VarF total;
    int n = 0;
    for (int s = 0; s < disc.scales(); ++s) {
        const auto fr = disc.features(s, real, cond, style);
        const auto ff = disc.features(s, fake, cond, style);
        for (std::size_t l = 0; l < fr.size(); ++l) {
            const VarF term = nn::mean_all(nn::abs_op(nn::sub(ff[l], nn::detach(fr[l]))));
            total = n == 0 ? term : nn::add(total, term);
            ++n;
        }
    }
    return nn::scale(total, 1.0f / static_cast<float>(n));
}

// Equal-weighted L1 over the frozen extractor's layers.
inline VarF perceptual_loss(const FeatureNet& net, const VarF& produced, const VarF& target) {
    const auto fp = net.features(produced);
    const auto ft = net.features(target);
    VarF total;
    for (std::size_t l = 0; l < fp.size(); ++l) {
        const VarF term = nn::mean_all(nn::abs_op(nn::sub(fp[l], ft[l])));
        total = l == 0 ? term : nn::add(total, term);
    }
    return nn::scale(total, 1.0f / static_cast<float>(fp.size()));
}

// The printed good-hands substitution puts curated keypoints in the fake
// slot, which starves the generator of gradient; the corrected reading feeds
// curated keypoints through real_source instead. Both are available.
enum class GoodHandsReading { kCorrected, kLiteral };

struct HandLossPair {
    VarF loss_dh;
    VarF loss_gh;
};

// fake_crop: [1,3,60,60] attached to the generator's graph. real_source is
// either per-batch real-hand keypoints or a curated good-hands sample.
// literal_substitute, when set, replaces the fake branch entirely (the
// printed reading).
inline HandLossPair hand_keypoint_loss(const HandKeypointDisc& d_h, const HandKeypointNet& h,
                                       const VarF& fake_crop, const pose::Keypoints& real_source,
                                       const pose::Keypoints* literal_substitute = nullptr) {
    const VarF lr = d_h.forward(keypoints_to_row(real_source));
    VarF khat_row;
    if (literal_substitute) {
        khat_row = keypoints_to_row(*literal_substitute);
    } else {
        khat_row = nn::reshape(h.forward(fake_crop), {1, HandKeypointDisc::kInput});
    }
    const VarF lfd = d_h.forward(nn::detach(khat_row));
    const VarF lfg = d_h.forward(khat_row);
    HandLossPair out;
    out.loss_dh = nn::add(nn::mean_all(nlog_sigmoid(lr)),
                          nn::mean_all(nlog_one_minus_sigmoid(lfd)));
    out.loss_gh = nn::mean_all(nlog_sigmoid(lfg));
    return out;
}

// Ablation variant: adversary on the raw crop pixels.
inline HandLossPair hand_patch_loss(const HandPatchDisc& d_p, const VarF& fake_crop,
                                    const VarF& real_crop) {
    const VarF lr = d_p.forward(nn::detach(real_crop));
    const VarF lfd = d_p.forward(nn::detach(fake_crop));
    const VarF lfg = d_p.forward(fake_crop);
    HandLossPair out;
    out.loss_dh = nn::add(nn::mean_all(nlog_sigmoid(lr)),
                          nn::mean_all(nlog_one_minus_sigmoid(lfd)));
    out.loss_gh = nn::mean_all(nlog_sigmoid(lfg));
    return out;
}

// Mean squared difference between produced and target frame deltas.
inline VarF temporal_loss(const VarF& produced_a, const VarF& produced_b, const VarF& target_a,
                          const VarF& target_b) {
    if (!produced_a.value().same_shape(target_a.value()) ||
        !produced_b.value().same_shape(target_b.value()))
        throw PreconditionError("temporal_loss: shape mismatch");
    const VarF d_hat = nn::sub(produced_b, produced_a);
    const VarF d_star = nn::sub(target_b, target_a);
    return nn::mean_all(nn::square(nn::sub(d_hat, d_star)));
}

struct LossWeights {
    double lambda_fm = 10.0;
    double lambda_vgg = 10.0;
    double lambda_key = 1.0;
    double lambda_t = 1.0;

    void validate() const {
        if (lambda_fm < 0 || lambda_vgg < 0 || lambda_key < 0 || lambda_t < 0)
            throw ConfigError("loss weights: all lambdas must be non-negative");
    }
};

inline VarF total_loss(const VarF& gan_g, const VarF& fm, const VarF& vgg, const VarF& key_g,
                       const VarF& temporal, const LossWeights& w) {
    w.validate();
    VarF total = gan_g;
    total = nn::add(total, nn::scale(fm, static_cast<float>(w.lambda_fm)));
    total = nn::add(total, nn::scale(vgg, static_cast<float>(w.lambda_vgg)));
    total = nn::add(total, nn::scale(key_g, static_cast<float>(w.lambda_key)));
    total = nn::add(total, nn::scale(temporal, static_cast<float>(w.lambda_t)));
    return total;
}

}  // namespace signsynth::p2v
