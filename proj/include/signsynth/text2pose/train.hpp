#pragma once

// Teacher-forced training loop for the token-to-pose model.

#include <cmath>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "signsynth/core/optim.hpp"
#include "signsynth/core/serialize.hpp"
#include "signsynth/pose/pose.hpp"
#include "signsynth/text2pose/model.hpp"

namespace signsynth::t2p {

struct TrainPair {
    TextSequence text;
    nn::TensorD targets;                  // [T, D]
    std::vector<double> target_counters;  // [T]
};

inline TrainPair make_train_pair(const TextSequence& text, const pose::PoseSequence& seq) {
    TrainPair p;
    p.text = text;
    const int t = seq.length();
    const int d = seq.layout.dims();
    p.targets = nn::TensorD({t, d});
    for (int i = 0; i < t; ++i) {
        const auto flat = pose::flatten_coords(seq.frames[static_cast<std::size_t>(i)]);
        for (int j = 0; j < d; ++j) p.targets.at2(i, j) = flat[static_cast<std::size_t>(j)];
        p.target_counters.push_back(seq.frames[static_cast<std::size_t>(i)].counter);
    }
    return p;
}

struct Text2PoseTrainConfig {
    int epochs = 30;
    double lr = 1e-3;
    double counter_weight = 5.0;
    double grad_clip = 1.0;
};

struct EpochStats {
    int epoch = 0;
    double nll = 0.0;
    double counter_mse = 0.0;
};

struct Text2PoseTrainReport {
    std::vector<EpochStats> epochs;
    bool aborted_on_nan = false;
    int last_good_epoch = -1;
};

inline void save_text2pose_checkpoint(const std::filesystem::path& path, Text2PoseModel& model,
                                      nn::AdamT<double>* opt = nullptr) {
    nn::CheckpointWriter w;
    const auto& c = model.config();
    w.header()["kind"] = "text2pose";
    w.header()["M"] = c.mixtures;
    w.header()["D"] = c.pose_dims;
    w.header()["vocab_size"] = c.vocab_size;
    w.header()["width"] = c.width;
    w.header()["layers"] = c.layers;
    w.header()["heads"] = c.heads;
    w.header()["ff_mult"] = c.ff_mult;
    w.header()["sigma_floor"] = c.sigma_floor;
    w.header()["max_src"] = c.max_src;
    w.header()["max_tgt"] = c.max_tgt;
    w.header()["seed"] = c.seed;
    w.add_registry("model", model.registry());
    if (opt) w.add_adam("opt", *opt);
    w.save(path);
}

inline Text2PoseConfig read_text2pose_config(const nn::CheckpointReader& r) {
    const auto& h = r.header();
    Text2PoseConfig c;
    c.mixtures = h.at("M").get<int>();
    c.pose_dims = h.at("D").get<int>();
    c.vocab_size = h.at("vocab_size").get<int>();
    c.width = h.at("width").get<int>();
    c.layers = h.at("layers").get<int>();
    c.heads = h.at("heads").get<int>();
    c.ff_mult = h.at("ff_mult").get<int>();
    c.sigma_floor = h.at("sigma_floor").get<double>();
    c.max_src = h.at("max_src").get<int>();
    c.max_tgt = h.at("max_tgt").get<int>();
    c.seed = h.at("seed").get<std::uint64_t>();
    return c;
}

inline Text2PoseModel load_text2pose_checkpoint(const std::filesystem::path& path) {
    nn::CheckpointReader r(path);
    if (r.header().value("kind", "") != "text2pose")
        throw SchemaError("checkpoint kind mismatch: expected text2pose");
    Text2PoseModel model(read_text2pose_config(r));
    r.load_registry("model", model.registry());
    return model;
}

inline bool resume_text2pose_adam(const std::filesystem::path& path, nn::AdamT<double>& opt) {
    nn::CheckpointReader r(path);
    if (!r.header().contains("optim") || !r.header()["optim"].contains("opt")) return false;
    r.load_adam("opt", opt);
    return true;
}

inline bool model_params_finite(const Text2PoseModel& model) {
    for (const auto& p : model.registry().params())
        if (!p.var.value().all_finite()) return false;
    return true;
}

// One optimization step over one sequence; returns (nll, counter_mse).
inline std::pair<double, double> train_step(Text2PoseModel& model, nn::AdamT<double>& opt,
                                            const TrainPair& pair,
                                            const Text2PoseTrainConfig& cfg) {
    opt.zero_grad();
    const auto fwd = model.forward(pair.text, pair.targets, pair.target_counters);
    const VarD nll = mdn_nll(fwd.head, pair.targets);
    nn::TensorD ctr({pair.targets.dim(0)});
    for (int i = 0; i < ctr.dim(0); ++i)
        ctr[i] = pair.target_counters[static_cast<std::size_t>(i)];
    const VarD counter_mse = nn::mean_all(nn::square(nn::sub(fwd.counters, VarD::constant(ctr))));
    const VarD loss = nn::add(nll, nn::scale(counter_mse, cfg.counter_weight));
    nn::backward(loss);
    nn::clip_grad_norm(model.registry(), cfg.grad_clip);
    opt.step();
    return {nll.item(), counter_mse.item()};
}

// Epoch loop with a NaN tripwire: on a non-finite loss the parameters are
// rolled back to the last finished epoch and training stops.
inline Text2PoseTrainReport train_text2pose(Text2PoseModel& model,
                                            const std::vector<TrainPair>& corpus,
                                            const Text2PoseTrainConfig& cfg,
                                            nn::AdamT<double>* external_opt = nullptr) {
    if (corpus.empty()) throw PreconditionError("train_text2pose: empty corpus");
    nn::AdamConfig<double> ac;
    ac.lr = cfg.lr;
    nn::AdamT<double> local_opt(model.registry(), ac);
    nn::AdamT<double>& opt = external_opt ? *external_opt : local_opt;

    std::vector<nn::TensorD> snapshot;
    auto take_snapshot = [&] {
        snapshot.clear();
        for (const auto& p : model.registry().params()) snapshot.push_back(p.var.value());
    };
    auto restore_snapshot = [&] {
        for (std::size_t i = 0; i < snapshot.size(); ++i)
            model.registry().params()[i].var.value() = snapshot[i];
    };
    take_snapshot();

    Text2PoseTrainReport report;
    for (int e = 0; e < cfg.epochs; ++e) {
        EpochStats stats;
        stats.epoch = e;
        bool bad = false;
        for (const auto& pair : corpus) {
            double nll = 0.0;
            double cmse = 0.0;
            try {
                std::tie(nll, cmse) = train_step(model, opt, pair, cfg);
            } catch (const NumericError&) {
                bad = true;
                break;
            }
            if (!std::isfinite(nll) || !std::isfinite(cmse)) {
                bad = true;
                break;
            }
            stats.nll += nll;
            stats.counter_mse += cmse;
        }
        if (bad || !model_params_finite(model)) {
            restore_snapshot();
            report.aborted_on_nan = true;
            break;
        }
        stats.nll /= static_cast<double>(corpus.size());
        stats.counter_mse /= static_cast<double>(corpus.size());
        report.epochs.push_back(stats);
        report.last_good_epoch = e;
        take_snapshot();
    }
    return report;
}

}  // namespace signsynth::t2p
