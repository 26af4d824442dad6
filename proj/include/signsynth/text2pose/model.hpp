#pragma once

// Token-to-pose translation model: transformer encoder-decoder (pre-LN,
// causal decoder) with a mixture-density head and a progress-counter head.
// Decoding appends frames until the counter crosses its threshold.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "signsynth/core/autograd.hpp"
#include "signsynth/core/optim.hpp"
#include "signsynth/core/rng.hpp"
#include "signsynth/errors.hpp"
#include "signsynth/pose/pose.hpp"
#include "signsynth/text2pose/mdn.hpp"

namespace signsynth::t2p {

struct TextSequence {
    std::vector<int> tokens;

    void validate(int vocab_size, int max_source_length) const {
        if (tokens.empty() || static_cast<int>(tokens.size()) > max_source_length)
            throw PreconditionError("text sequence: length must be in [1, " +
                                    std::to_string(max_source_length) + "]");
        for (int t : tokens)
            if (t < 0 || t >= vocab_size)
                throw PreconditionError("text sequence: token id out of vocabulary");
    }
};

struct Text2PoseConfig {
    int vocab_size = 24;
    int width = 128;
    int layers = 2;
    int heads = 4;
    int ff_mult = 4;
    int mixtures = 5;     // M
    int pose_dims = 104;  // D = 2 * joint count
    int max_src = 32;
    int max_tgt = 64;
    double sigma_floor = kSigmaFloor;
    std::uint64_t seed = 1;
};

class Text2PoseModel {
  public:
    explicit Text2PoseModel(Text2PoseConfig cfg) : cfg_(cfg) {
        if (cfg_.mixtures < 1) throw ConfigError("text2pose: mixtures must be >= 1");
        if (cfg_.width % cfg_.heads != 0)
            throw ConfigError("text2pose: width must divide into heads");
        build();
    }

    const Text2PoseConfig& config() const { return cfg_; }
    nn::ParamRegistryT<double>& registry() { return reg_; }
    const nn::ParamRegistryT<double>& registry() const { return reg_; }

    struct Forward {
        MdnHead head;   // per decoder position
        VarD counters;  // [T]
    };

    // Teacher-forced forward: decoder position t sees target frames < t.
    // targets is [T, D]; target_counters is [T].
    Forward forward(const TextSequence& text, const nn::TensorD& targets,
                    const std::vector<double>& target_counters) const {
        text.validate(cfg_.vocab_size, cfg_.max_src);
        const int t = targets.dim(0);
        if (t > cfg_.max_tgt)
            throw PreconditionError("text2pose: target length exceeds capacity");
        nn::TensorD shifted({t > 1 ? t - 1 : 1, cfg_.pose_dims + 1});
        for (int i = 0; i + 1 < t; ++i) {
            for (int j = 0; j < cfg_.pose_dims; ++j)
                shifted.at2(i, j) = targets.at2(i, j);
            shifted.at2(i, cfg_.pose_dims) = target_counters[static_cast<std::size_t>(i)];
        }
        return run(text, shifted, t);
    }

    // One autoregressive step: MDN parameters and counter for the frame that
    // would follow the given history.
    struct Step {
        MixtureParams params;
        double counter = 0.0;
    };

    Step decode_step(const TextSequence& text, const std::vector<std::vector<double>>& history,
                     const std::vector<double>& history_counters) const {
        const int hist = static_cast<int>(history.size());
        if (hist >= cfg_.max_tgt)
            throw PreconditionError("text2pose: history exceeds decoder capacity");
        nn::TensorD shifted({hist > 0 ? hist : 1, cfg_.pose_dims + 1});
        for (int i = 0; i < hist; ++i) {
            for (int j = 0; j < cfg_.pose_dims; ++j)
                shifted.at2(i, j) = history[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            shifted.at2(i, cfg_.pose_dims) = history_counters[static_cast<std::size_t>(i)];
        }
        Forward f = run(text, shifted, hist + 1);
        Step s;
        s.params = extract_params(f.head, hist);
        s.counter = f.counters.value()[hist];
        return s;
    }

  private:
    struct Attention {
        VarD wq, bq, wk, bk, wv, bv, wo, bo;
    };
    struct Block {
        VarD ln1_g, ln1_b;
        Attention self_attn;
        VarD ln2_g, ln2_b;  // decoder only: cross-attn norm
        Attention cross_attn;
        VarD ln3_g, ln3_b;
        VarD ff_w1, ff_b1, ff_w2, ff_b2;
        bool has_cross = false;
    };

    Text2PoseConfig cfg_;
    mutable nn::ParamRegistryT<double> reg_;
    VarD tok_emb_, src_pos_, tgt_pos_, start_emb_;
    VarD in_proj_w_, in_proj_b_;
    std::vector<Block> enc_, dec_;
    VarD enc_ln_g_, enc_ln_b_, dec_ln_g_, dec_ln_b_;
    VarD head_alpha_w_, head_alpha_b_, head_mu_w_, head_mu_b_, head_sigma_w_, head_sigma_b_;
    VarD head_counter_w_, head_counter_b_;

    VarD add_param(const std::string& name, nn::TensorD t) {
        return reg_.add(name, std::move(t));
    }

    Attention make_attention(const std::string& prefix, nn::Rng& rng) {
        const int w = cfg_.width;
        Attention a;
        a.wq = add_param(prefix + ".wq", nn::init_linear_weight<double>(rng, w, w));
        a.bq = add_param(prefix + ".bq", nn::TensorD::zeros({w}));
        a.wk = add_param(prefix + ".wk", nn::init_linear_weight<double>(rng, w, w));
        a.bk = add_param(prefix + ".bk", nn::TensorD::zeros({w}));
        a.wv = add_param(prefix + ".wv", nn::init_linear_weight<double>(rng, w, w));
        a.bv = add_param(prefix + ".bv", nn::TensorD::zeros({w}));
        a.wo = add_param(prefix + ".wo", nn::init_linear_weight<double>(rng, w, w));
        a.bo = add_param(prefix + ".bo", nn::TensorD::zeros({w}));
        return a;
    }

    Block make_block(const std::string& prefix, bool cross, nn::Rng& rng) {
        const int w = cfg_.width, f = cfg_.ff_mult * cfg_.width;
        Block b;
        b.has_cross = cross;
        b.ln1_g = add_param(prefix + ".ln1.g", nn::TensorD::full({w}, 1.0));
        b.ln1_b = add_param(prefix + ".ln1.b", nn::TensorD::zeros({w}));
        b.self_attn = make_attention(prefix + ".self", rng);
        if (cross) {
            b.ln2_g = add_param(prefix + ".ln2.g", nn::TensorD::full({w}, 1.0));
            b.ln2_b = add_param(prefix + ".ln2.b", nn::TensorD::zeros({w}));
            b.cross_attn = make_attention(prefix + ".cross", rng);
        }
        b.ln3_g = add_param(prefix + ".ln3.g", nn::TensorD::full({w}, 1.0));
        b.ln3_b = add_param(prefix + ".ln3.b", nn::TensorD::zeros({w}));
        b.ff_w1 = add_param(prefix + ".ff.w1", nn::init_linear_weight<double>(rng, f, w));
        b.ff_b1 = add_param(prefix + ".ff.b1", nn::TensorD::zeros({f}));
        b.ff_w2 = add_param(prefix + ".ff.w2", nn::init_linear_weight<double>(rng, w, f));
        b.ff_b2 = add_param(prefix + ".ff.b2", nn::TensorD::zeros({w}));
        return b;
    }

    void build() {
        nn::Rng rng(cfg_.seed);
        const int w = cfg_.width;
        tok_emb_ = add_param("tok_emb", nn::init_normal<double>(rng, {cfg_.vocab_size, w}, 0.02));
        src_pos_ = add_param("src_pos", nn::init_normal<double>(rng, {cfg_.max_src, w}, 0.02));
        tgt_pos_ = add_param("tgt_pos", nn::init_normal<double>(rng, {cfg_.max_tgt, w}, 0.02));
        start_emb_ = add_param("start_emb", nn::init_normal<double>(rng, {1, w}, 0.02));
        in_proj_w_ = add_param("in_proj.w",
                               nn::init_linear_weight<double>(rng, w, cfg_.pose_dims + 1));
        in_proj_b_ = add_param("in_proj.b", nn::TensorD::zeros({w}));
        for (int l = 0; l < cfg_.layers; ++l) {
            enc_.push_back(make_block("enc" + std::to_string(l), false, rng));
            dec_.push_back(make_block("dec" + std::to_string(l), true, rng));
        }
        enc_ln_g_ = add_param("enc_ln.g", nn::TensorD::full({w}, 1.0));
        enc_ln_b_ = add_param("enc_ln.b", nn::TensorD::zeros({w}));
        dec_ln_g_ = add_param("dec_ln.g", nn::TensorD::full({w}, 1.0));
        dec_ln_b_ = add_param("dec_ln.b", nn::TensorD::zeros({w}));
        const int m = cfg_.mixtures, d = cfg_.pose_dims;
        head_alpha_w_ = add_param("head.alpha.w", nn::init_linear_weight<double>(rng, m, w));
        head_alpha_b_ = add_param("head.alpha.b", nn::TensorD::zeros({m}));
        head_mu_w_ = add_param("head.mu.w", nn::init_linear_weight<double>(rng, m * d, w));
        head_mu_b_ = add_param("head.mu.b", nn::TensorD::full({m * d}, 0.5));
        head_sigma_w_ = add_param("head.sigma.w", nn::init_linear_weight<double>(rng, m, w));
        head_sigma_b_ = add_param("head.sigma.b", nn::TensorD::zeros({m}));
        head_counter_w_ = add_param("head.counter.w", nn::init_linear_weight<double>(rng, 1, w));
        head_counter_b_ = add_param("head.counter.b", nn::TensorD::zeros({1}));
    }

    // [rows, width] query/key-value attention; mask, when present, is added
    // to the score matrix before the softmax.
    VarD attend(const Attention& a, const VarD& q_in, const VarD& kv_in,
                const nn::TensorD* mask) const {
        const int h = cfg_.heads, hd = cfg_.width / cfg_.heads;
        const int tq = q_in.value().dim(0), tk = kv_in.value().dim(0);
        VarD q = nn::permute3(nn::reshape(nn::linear(q_in, a.wq, a.bq), {tq, h, hd}), 1, 0, 2);
        VarD k = nn::permute3(nn::reshape(nn::linear(kv_in, a.wk, a.bk), {tk, h, hd}), 1, 0, 2);
        VarD v = nn::permute3(nn::reshape(nn::linear(kv_in, a.wv, a.bv), {tk, h, hd}), 1, 0, 2);
        VarD scores = nn::scale(nn::bmm(q, k, false, true), 1.0 / std::sqrt(double(hd)));
        if (mask) scores = nn::add(scores, VarD::constant(*mask));
        VarD probs = nn::softmax_lastdim(scores);
        VarD ctx = nn::permute3(nn::bmm(probs, v), 1, 0, 2);  // [tq, h, hd]
        return nn::linear(nn::reshape(ctx, {tq, cfg_.width}), a.wo, a.bo);
    }

    VarD block_forward(const Block& b, VarD x, const VarD* enc_out,
                       const nn::TensorD* self_mask) const {
        VarD normed = nn::layer_norm(x, b.ln1_g, b.ln1_b);
        x = nn::add(x, attend(b.self_attn, normed, normed, self_mask));
        if (b.has_cross)
            x = nn::add(x, attend(b.cross_attn, nn::layer_norm(x, b.ln2_g, b.ln2_b), *enc_out,
                                  nullptr));
        VarD ff_in = nn::layer_norm(x, b.ln3_g, b.ln3_b);
        VarD ff = nn::linear(nn::relu(nn::linear(ff_in, b.ff_w1, b.ff_b1)), b.ff_w2, b.ff_b2);
        return nn::add(x, ff);
    }

    static nn::TensorD causal_mask(int h, int t) {
        nn::TensorD m({h, t, t});
        const double neg = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < h; ++a)
            for (int i = 0; i < t; ++i)
                for (int j = 0; j < t; ++j) m.at3(a, i, j) = j > i ? neg : 0.0;
        return m;
    }

    std::vector<int> iota(int n) const {
        std::vector<int> v(static_cast<std::size_t>(n));
        std::iota(v.begin(), v.end(), 0);
        return v;
    }

    // shifted: [max(T-1,1), D+1] teacher-forced previous frames (row i feeds
    // decoder position i+1). Decoder position 0 sees only the start embedding.
    Forward run(const TextSequence& text, const nn::TensorD& shifted, int t) const {
        text.validate(cfg_.vocab_size, cfg_.max_src);
        const int u = static_cast<int>(text.tokens.size());

        VarD enc = nn::add(nn::embedding(tok_emb_, text.tokens),
                           nn::embedding(src_pos_, iota(u)));
        for (const auto& b : enc_) enc = block_forward(b, enc, nullptr, nullptr);
        enc = nn::layer_norm(enc, enc_ln_g_, enc_ln_b_);

        VarD dec_in = start_emb_;
        if (t > 1) {
            VarD prev = nn::linear(VarD::constant(shifted), in_proj_w_, in_proj_b_);
            dec_in = nn::concat_rows(start_emb_, prev);
        }
        VarD dec = nn::add(dec_in, nn::embedding(tgt_pos_, iota(t)));
        const nn::TensorD mask = causal_mask(cfg_.heads, t);
        for (const auto& b : dec_) dec = block_forward(b, dec, &enc, &mask);
        dec = nn::layer_norm(dec, dec_ln_g_, dec_ln_b_);

        Forward f;
        f.head = mdn_constrain(nn::linear(dec, head_alpha_w_, head_alpha_b_),
                               nn::linear(dec, head_mu_w_, head_mu_b_),
                               nn::linear(dec, head_sigma_w_, head_sigma_b_), cfg_.pose_dims,
                               cfg_.sigma_floor);
        f.counters = nn::reshape(
            nn::sigmoid(nn::linear(dec, head_counter_w_, head_counter_b_)), {t});
        return f;
    }
};

struct ProduceConfig {
    int max_len = 64;
    double temperature = 0.0;
    double counter_threshold = 0.99;
};

struct ProduceResult {
    pose::PoseSequence seq;
    bool terminated = false;  // counter crossed the threshold before the cap
};

inline ProduceResult produce_sequence(const Text2PoseModel& model, const TextSequence& text,
                                      const pose::JointLayout& layout, nn::Rng& rng,
                                      const ProduceConfig& cfg = {}) {
    if (cfg.max_len < 1) throw PreconditionError("produce_sequence: max_len must be >= 1");
    const int cap = std::min(cfg.max_len, model.config().max_tgt);
    std::vector<std::vector<double>> history;
    std::vector<double> counters;
    ProduceResult res;
    res.seq.layout = layout;
    for (int t = 0; t < cap; ++t) {
        const auto step = model.decode_step(text, history, counters);
        std::vector<double> frame = mdn_sample(step.params, rng, cfg.temperature);
        history.push_back(frame);
        counters.push_back(step.counter);
        res.seq.frames.push_back(pose::unflatten_coords(frame, step.counter));
        if (step.counter >= cfg.counter_threshold) {
            res.terminated = true;
            break;
        }
    }
    return res;
}

}  // namespace signsynth::t2p
