#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "signsynth/core/autograd.hpp"
#include "signsynth/core/rng.hpp"

namespace signsynth::nn {

// Named trainable tensor. Registries give serializers and optimizers a
// stable, ordered view of a model's state.
template <typename S>
struct ParamT {
    std::string name;
    VarT<S> var;
};

template <typename S>
class ParamRegistryT {
  public:
    VarT<S> add(std::string name, TensorT<S> init) {
        params_.push_back({std::move(name), VarT<S>::param(std::move(init))});
        return params_.back().var;
    }

    std::vector<ParamT<S>>& params() { return params_; }
    const std::vector<ParamT<S>>& params() const { return params_; }

    VarT<S> find(const std::string& name) const {
        for (const auto& p : params_)
            if (p.name == name) return p.var;
        throw Error("param registry: unknown parameter " + name);
    }

    void zero_grad() {
        for (auto& p : params_) p.var.zero_grad();
    }

    std::int64_t count() const {
        std::int64_t n = 0;
        for (const auto& p : params_) n += p.var.value().size();
        return n;
    }

  private:
    std::vector<ParamT<S>> params_;
};

template <typename S>
struct AdamConfig {
    S lr = S(1e-3);
    S beta1 = S(0.9);
    S beta2 = S(0.999);
    S eps = S(1e-8);
};

template <typename S>
class AdamT {
  public:
    AdamT(ParamRegistryT<S>& registry, AdamConfig<S> cfg) : registry_(&registry), cfg_(cfg) {
        for (auto& p : registry.params()) {
            m_.push_back(TensorT<S>::zeros(p.var.value().shape()));
            v_.push_back(TensorT<S>::zeros(p.var.value().shape()));
        }
    }

    void set_lr(S lr) { cfg_.lr = lr; }
    S lr() const { return cfg_.lr; }
    std::int64_t step_count() const { return t_; }

    void step() {
        ++t_;
        const S bc1 = S(1) - std::pow(cfg_.beta1, static_cast<S>(t_));
        const S bc2 = S(1) - std::pow(cfg_.beta2, static_cast<S>(t_));
        for (std::size_t i = 0; i < registry_->params().size(); ++i) {
            auto& p = registry_->params()[i].var;
            if (p.grad().size() == 0) continue;
            TensorT<S>& val = p.value();
            const TensorT<S>& g = p.grad();
            for (std::int64_t j = 0; j < val.size(); ++j) {
                m_[i][j] = cfg_.beta1 * m_[i][j] + (S(1) - cfg_.beta1) * g[j];
                v_[i][j] = cfg_.beta2 * v_[i][j] + (S(1) - cfg_.beta2) * g[j] * g[j];
                const S mhat = m_[i][j] / bc1;
                const S vhat = v_[i][j] / bc2;
                val[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

    void zero_grad() { registry_->zero_grad(); }

    std::vector<TensorT<S>>& moment1() { return m_; }
    std::vector<TensorT<S>>& moment2() { return v_; }
    void set_step_count(std::int64_t t) { t_ = t; }

  private:
    ParamRegistryT<S>* registry_;
    AdamConfig<S> cfg_;
    std::vector<TensorT<S>> m_;
    std::vector<TensorT<S>> v_;
    std::int64_t t_ = 0;
};

// Global-norm gradient clipping; returns the pre-clip norm.
template <typename S>
S clip_grad_norm(ParamRegistryT<S>& registry, S max_norm) {
    double total = 0;
    for (auto& p : registry.params()) {
        const auto& g = p.var.grad();
        for (std::int64_t i = 0; i < g.size(); ++i)
            total += static_cast<double>(g[i]) * static_cast<double>(g[i]);
    }
    const S norm = static_cast<S>(std::sqrt(total));
    if (norm > max_norm && norm > S(0)) {
        const S s = max_norm / norm;
        for (auto& p : registry.params()) {
            auto& g = const_cast<TensorT<S>&>(p.var.grad());
            for (std::int64_t i = 0; i < g.size(); ++i) g[i] *= s;
        }
    }
    return norm;
}

// Uniform(-bound, bound) init with bound = sqrt(1/fan_in).
template <typename S>
TensorT<S> init_linear_weight(Rng& rng, int fan_out, int fan_in) {
    TensorT<S> t({fan_out, fan_in});
    const double bound = std::sqrt(1.0 / fan_in);
    for (std::int64_t i = 0; i < t.size(); ++i)
        t[i] = static_cast<S>(rng.uniform(-bound, bound));
    return t;
}

template <typename S>
TensorT<S> init_conv_weight(Rng& rng, int cout, int cin, int kh, int kw) {
    TensorT<S> t({cout, cin, kh, kw});
    const double bound = std::sqrt(1.0 / (static_cast<double>(cin) * kh * kw));
    for (std::int64_t i = 0; i < t.size(); ++i)
        t[i] = static_cast<S>(rng.uniform(-bound, bound));
    return t;
}

template <typename S>
TensorT<S> init_normal(Rng& rng, std::vector<int> shape, double stddev) {
    TensorT<S> t(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<S>(rng.normal(0.0, stddev));
    return t;
}

}  // namespace signsynth::nn
