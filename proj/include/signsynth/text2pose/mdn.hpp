#pragma once

// Mixture density head: density, negative log likelihood, sampling.
// Density p(y) = sum_i alpha_i * phi_i(y) with isotropic D-dimensional
// Gaussians phi_i = (2 pi sigma_i^2)^(-D/2) * exp(-|y - mu_i|^2 / (2 sigma_i^2)).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "signsynth/core/autograd.hpp"
#include "signsynth/core/rng.hpp"
#include "signsynth/errors.hpp"

namespace signsynth::t2p {

using VarD = nn::VarT<double>;

constexpr double kSigmaFloor = 1e-4;

struct MixtureParams {
    std::vector<double> alphas;              // M, on the simplex
    std::vector<std::vector<double>> means;  // M x D
    std::vector<double> sigmas;              // M, isotropic scale per component

    int components() const { return static_cast<int>(alphas.size()); }
    int dims() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }

    void validate(double sigma_floor = kSigmaFloor) const {
        if (alphas.empty() || means.size() != alphas.size() || sigmas.size() != alphas.size())
            throw PreconditionError("mixture params: inconsistent component count");
        double total = 0.0;
        for (double a : alphas) {
            if (!std::isfinite(a) || a < 0.0)
                throw PreconditionError("mixture params: alphas must be non-negative");
            total += a;
        }
        if (std::abs(total - 1.0) > 1e-6)
            throw PreconditionError("mixture params: alphas must sum to 1 within 1e-6");
        const std::size_t d = means[0].size();
        for (const auto& m : means) {
            if (m.size() != d) throw PreconditionError("mixture params: ragged means");
            for (double v : m)
                if (!std::isfinite(v)) throw NumericError("mixture params: non-finite mean");
        }
        for (double s : sigmas) {
            if (!std::isfinite(s)) throw NumericError("mixture params: non-finite sigma");
            if (s < sigma_floor)
                throw PreconditionError("mixture params: sigma below floor");
        }
    }
};

inline double mdn_density(const MixtureParams& params, const std::vector<double>& pose) {
    params.validate();
    const int d = params.dims();
    if (static_cast<int>(pose.size()) != d)
        throw PreconditionError("mdn_density: pose dimension mismatch");
    for (double v : pose)
        if (!std::isfinite(v)) throw NumericError("mdn_density: non-finite pose");
    double total = 0.0;
    for (int i = 0; i < params.components(); ++i) {
        const double s2 = params.sigmas[static_cast<std::size_t>(i)] *
                          params.sigmas[static_cast<std::size_t>(i)];
        double sq = 0.0;
        for (int j = 0; j < d; ++j) {
            const double dv = pose[static_cast<std::size_t>(j)] -
                              params.means[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            sq += dv * dv;
        }
        const double log_phi =
            -0.5 * d * std::log(2.0 * M_PI * s2) - sq / (2.0 * s2);
        total += params.alphas[static_cast<std::size_t>(i)] * std::exp(log_phi);
    }
    return total;
}

// Draws a component from alphas, then an isotropic Gaussian scaled by
// temperature. Temperature 0 is the deterministic limit: the highest-alpha
// component's mean, lowest index winning ties.
inline std::vector<double> mdn_sample(const MixtureParams& params, nn::Rng& rng,
                                      double temperature) {
    params.validate();
    if (temperature < 0.0) throw PreconditionError("mdn_sample: temperature must be >= 0");
    const int d = params.dims();
    std::size_t comp = 0;
    if (temperature == 0.0) {
        for (std::size_t i = 1; i < params.alphas.size(); ++i)
            if (params.alphas[i] > params.alphas[comp]) comp = i;
        return params.means[comp];
    }
    comp = static_cast<std::size_t>(rng.categorical(params.alphas));
    std::vector<double> out(static_cast<std::size_t>(d));
    const double scale = temperature * params.sigmas[comp];
    for (int j = 0; j < d; ++j)
        out[static_cast<std::size_t>(j)] =
            params.means[comp][static_cast<std::size_t>(j)] + scale * rng.normal();
    return out;
}

// ---------------------------------------------------------------------------
// Differentiable head: raw network outputs -> constrained parameters -> NLL.
// ---------------------------------------------------------------------------

struct MdnHead {
    VarD log_alphas;  // [T,M]
    VarD means;       // [T,M,D]
    VarD sigmas;      // [T,M], >= sigma_floor by construction
};

// alphas via softmax, sigmas via softplus + floor: the type invariants hold
// for any raw input.
inline MdnHead mdn_constrain(const VarD& alpha_logits, const VarD& means_flat,
                             const VarD& sigma_raw, int dims,
                             double sigma_floor = kSigmaFloor) {
    const auto& sh = alpha_logits.value().shape();
    if (sh.size() != 2) throw PreconditionError("mdn_constrain: logits must be [T,M]");
    const int t = sh[0], m = sh[1];
    MdnHead head;
    head.log_alphas = nn::log_softmax_lastdim(alpha_logits);
    head.means = nn::reshape(means_flat, {t, m, dims});
    head.sigmas = nn::add_scalar(nn::softplus(sigma_raw), sigma_floor);
    return head;
}

// Mean over frames of -log p(y_t), log-sum-exp stabilized.
inline VarD mdn_nll(const MdnHead& head, const nn::TensorD& targets) {
    const int t = head.log_alphas.value().dim(0);
    const int d = head.means.value().dim(2);
    if (targets.ndim() != 2 || targets.dim(0) != t || targets.dim(1) != d)
        throw PreconditionError("mdn_nll: target shape mismatch");
    const VarD y = VarD::constant(targets);
    const VarD diff = nn::sub_broadcast_mid(head.means, y);            // [T,M,D]
    const VarD sq = nn::sum_lastdim(nn::square(diff));                 // [T,M]
    const VarD sig2 = nn::mul(head.sigmas, head.sigmas);               // [T,M]
    const VarD quad = nn::div(sq, nn::scale(sig2, 2.0));               // [T,M]
    const VarD log_norm = nn::add_scalar(nn::scale(nn::log_op(sig2), d / 2.0),
                                         d / 2.0 * std::log(2.0 * M_PI));
    const VarD comp = nn::sub(nn::sub(head.log_alphas, log_norm), quad);
    const VarD lse = nn::logsumexp_lastdim(comp);  // [T]
    for (int i = 0; i < t; ++i)
        if (!std::isfinite(lse.value()[i]))
            throw NumericError("mdn_nll: density underflow at frame " + std::to_string(i));
    return nn::neg(nn::mean_all(lse));
}

// Plain-value view of one frame's constrained head outputs.
inline MixtureParams extract_params(const MdnHead& head, int frame) {
    const int m = head.log_alphas.value().dim(1);
    const int d = head.means.value().dim(2);
    MixtureParams p;
    p.alphas.resize(static_cast<std::size_t>(m));
    p.sigmas.resize(static_cast<std::size_t>(m));
    p.means.assign(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(d)));
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
        p.alphas[static_cast<std::size_t>(i)] = std::exp(head.log_alphas.value().at2(frame, i));
        total += p.alphas[static_cast<std::size_t>(i)];
        p.sigmas[static_cast<std::size_t>(i)] = head.sigmas.value().at2(frame, i);
        for (int j = 0; j < d; ++j)
            p.means[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                head.means.value().at3(frame, i, j);
    }
    for (auto& a : p.alphas) a /= total;  // renormalize exp rounding
    return p;
}

}  // namespace signsynth::t2p
