#pragma once

// Reverse-mode automatic differentiation over TensorT values. Each op builds
// a graph node holding the forward value and a closure that scatters the
// node's gradient into its parents. backward() replays closures in reverse
// creation order, which is a valid topological order because graphs are
// built forward.

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "signsynth/core/tensor.hpp"
#include "signsynth/errors.hpp"

namespace signsynth::nn {

template <typename S>
struct NodeT {
    TensorT<S> value;
    TensorT<S> grad;
    bool requires_grad = false;
    std::int64_t id = 0;
    std::vector<std::shared_ptr<NodeT>> parents;
    std::function<void(NodeT&)> backward;

    void ensure_grad() {
        if (grad.size() == 0) grad = TensorT<S>::zeros(value.shape());
    }
};

inline std::int64_t next_node_id() {
    static std::atomic<std::int64_t> counter{0};
    return ++counter;
}

// Handle to a graph node. Cheap to copy; the graph lives while handles do.
template <typename S>
class VarT {
  public:
    VarT() = default;
    explicit VarT(std::shared_ptr<NodeT<S>> n) : node_(std::move(n)) {}

    static VarT constant(TensorT<S> value) {
        auto n = std::make_shared<NodeT<S>>();
        n->value = std::move(value);
        n->id = next_node_id();
        return VarT(std::move(n));
    }

    static VarT param(TensorT<S> value) {
        VarT v = constant(std::move(value));
        v.node_->requires_grad = true;
        return v;
    }

    const TensorT<S>& value() const { return node_->value; }
    TensorT<S>& value() { return node_->value; }
    const TensorT<S>& grad() const { return node_->grad; }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    NodeT<S>* node() const { return node_.get(); }
    const std::shared_ptr<NodeT<S>>& ptr() const { return node_; }
    explicit operator bool() const { return static_cast<bool>(node_); }

    S item() const {
        if (node_->value.size() != 1) throw Error("autograd: item() on non-scalar");
        return node_->value[0];
    }

    void zero_grad() {
        if (node_->grad.size() != 0)
            std::fill(node_->grad.data(), node_->grad.data() + node_->grad.size(), S(0));
    }

  private:
    std::shared_ptr<NodeT<S>> node_;
};

namespace detail {

template <typename S>
VarT<S> make_op(TensorT<S> value, std::vector<VarT<S>> parents,
                std::function<void(NodeT<S>&)> backward) {
    auto n = std::make_shared<NodeT<S>>();
    n->value = std::move(value);
    n->id = next_node_id();
    bool rg = false;
    for (const auto& p : parents) rg = rg || p.requires_grad();
    n->requires_grad = rg;
    if (rg) {
        for (const auto& p : parents) n->parents.push_back(p.ptr());
        n->backward = std::move(backward);
    }
    return VarT<S>(std::move(n));
}

template <typename S>
void axpy(S a, const TensorT<S>& x, TensorT<S>& y) {
    const S* xs = x.data();
    S* ys = y.data();
    for (std::int64_t i = 0; i < x.size(); ++i) ys[i] += a * xs[i];
}

}  // namespace detail

// Runs reverse-mode accumulation from a scalar root. Parameter gradients
// accumulate until explicitly zeroed.
template <typename S>
void backward(const VarT<S>& root) {
    if (root.value().size() != 1) throw Error("autograd: backward root must be scalar");
    if (!root.requires_grad()) return;

    std::vector<NodeT<S>*> order;
    std::unordered_set<NodeT<S>*> seen;
    std::vector<NodeT<S>*> stack{root.node()};
    seen.insert(root.node());
    while (!stack.empty()) {
        NodeT<S>* n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (const auto& p : n->parents)
            if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
    std::sort(order.begin(), order.end(),
              [](const NodeT<S>* a, const NodeT<S>* b) { return a->id > b->id; });

    root.node()->ensure_grad();
    root.node()->grad[0] += S(1);
    for (NodeT<S>* n : order)
        if (n->backward) n->backward(*n);
}

// ---------------------------------------------------------------------------
// Elementwise and scalar ops
// ---------------------------------------------------------------------------

template <typename S>
VarT<S> add(const VarT<S>& a, const VarT<S>& b) {
    if (!a.value().same_shape(b.value())) throw Error("add: shape mismatch");
    TensorT<S> out(a.value().shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
    auto an = a.ptr();
    auto bn = b.ptr();
    return detail::make_op<S>(std::move(out), {a, b}, [an, bn](NodeT<S>& n) {
        if (an->requires_grad) {
            an->ensure_grad();
            detail::axpy(S(1), n.grad, an->grad);
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            detail::axpy(S(1), n.grad, bn->grad);
        }
    });
}

template <typename S>
VarT<S> sub(const VarT<S>& a, const VarT<S>& b) {
    if (!a.value().same_shape(b.value())) throw Error("sub: shape mismatch");
    TensorT<S> out(a.value().shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
    auto an = a.ptr();
    auto bn = b.ptr();
    return detail::make_op<S>(std::move(out), {a, b}, [an, bn](NodeT<S>& n) {
        if (an->requires_grad) {
            an->ensure_grad();
            detail::axpy(S(1), n.grad, an->grad);
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            detail::axpy(S(-1), n.grad, bn->grad);
        }
    });
}

template <typename S>
VarT<S> mul(const VarT<S>& a, const VarT<S>& b) {
    if (!a.value().same_shape(b.value())) throw Error("mul: shape mismatch");
    TensorT<S> out(a.value().shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
    auto an = a.ptr();
    auto bn = b.ptr();
    return detail::make_op<S>(std::move(out), {a, b}, [an, bn](NodeT<S>& n) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::int64_t i = 0; i < n.grad.size(); ++i)
                an->grad[i] += n.grad[i] * bn->value[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::int64_t i = 0; i < n.grad.size(); ++i)
                bn->grad[i] += n.grad[i] * an->value[i];
        }
    });
}

template <typename S>
VarT<S> div(const VarT<S>& a, const VarT<S>& b) {
    if (!a.value().same_shape(b.value())) throw Error("div: shape mismatch");
    TensorT<S> out(a.value().shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] / b.value()[i];
    auto an = a.ptr();
    auto bn = b.ptr();
    return detail::make_op<S>(std::move(out), {a, b}, [an, bn](NodeT<S>& n) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::int64_t i = 0; i < n.grad.size(); ++i)
                an->grad[i] += n.grad[i] / bn->value[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::int64_t i = 0; i < n.grad.size(); ++i)
                bn->grad[i] -= n.grad[i] * an->value[i] / (bn->value[i] * bn->value[i]);
        }
    });
}

template <typename S>
VarT<S> scale(const VarT<S>& a, S c) {
    TensorT<S> out(a.value().shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * c;
    auto an = a.ptr();
    return detail::make_op<S>(std::move(out), {a}, [an, c](NodeT<S>& n) {
        an->ensure_grad();
        detail::axpy(c, n.grad, an->grad);
    });
}

template <typename S>
VarT<S> add_scalar(const VarT<S>& a, S c) {
    TensorT<S> out(a.value().shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + c;
    auto an = a.ptr();
    return detail::make_op<S>(std::move(out), {a}, [an](NodeT<S>& n) {
        an->ensure_grad();
        detail::axpy(S(1), n.grad, an->grad);
    });
}

template <typename S, typename FwdFn, typename GradFn>
VarT<S> unary_op(const VarT<S>& a, FwdFn f, GradFn dfdx_from_xy, const char*) {
    TensorT<S> out(a.value().shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = f(a.value()[i]);
    auto an = a.ptr();
    return detail::make_op<S>(std::move(out), {a}, [an, dfdx_from_xy](NodeT<S>& n) {
        an->ensure_grad();
        for (std::int64_t i = 0; i < n.grad.size(); ++i)
            an->grad[i] += n.grad[i] * dfdx_from_xy(an->value[i], n.value[i]);
    });
}

template <typename S>
VarT<S> relu(const VarT<S>& a) {
    return unary_op(
        a, [](S x) { return x > S(0) ? x : S(0); },
        [](S x, S) { return x > S(0) ? S(1) : S(0); }, "relu");
}

template <typename S>
VarT<S> leaky_relu(const VarT<S>& a, S slope = S(0.2)) {
    return unary_op(
        a, [slope](S x) { return x > S(0) ? x : slope * x; },
        [slope](S x, S) { return x > S(0) ? S(1) : slope; }, "leaky_relu");
}

template <typename S>
VarT<S> tanh_op(const VarT<S>& a) {
    return unary_op(
        a, [](S x) { return std::tanh(x); }, [](S, S y) { return S(1) - y * y; }, "tanh");
}

template <typename S>
VarT<S> sigmoid(const VarT<S>& a) {
    return unary_op(
        a,
        [](S x) {
            return x >= S(0) ? S(1) / (S(1) + std::exp(-x))
                             : std::exp(x) / (S(1) + std::exp(x));
        },
        [](S, S y) { return y * (S(1) - y); }, "sigmoid");
}

// softplus(x) = log(1 + e^x), evaluated stably; d/dx = sigmoid(x).
template <typename S>
VarT<S> softplus(const VarT<S>& a) {
    return unary_op(
        a,
        [](S x) {
            const S m = std::max(x, S(0));
            return m + std::log1p(std::exp(-std::abs(x)));
        },
        [](S x, S) {
            return x >= S(0) ? S(1) / (S(1) + std::exp(-x))
                             : std::exp(x) / (S(1) + std::exp(x));
        },
        "softplus");
}

template <typename S>
VarT<S> exp_op(const VarT<S>& a) {
    return unary_op(
        a, [](S x) { return std::exp(x); }, [](S, S y) { return y; }, "exp");
}

template <typename S>
VarT<S> log_op(const VarT<S>& a) {
    return unary_op(
        a, [](S x) { return std::log(x); }, [](S x, S) { return S(1) / x; }, "log");
}

template <typename S>
VarT<S> square(const VarT<S>& a) {
    return unary_op(
        a, [](S x) { return x * x; }, [](S x, S) { return S(2) * x; }, "square");
}

template <typename S>
VarT<S> abs_op(const VarT<S>& a) {
    return unary_op(
        a, [](S x) { return std::abs(x); },
        [](S x, S) { return x > S(0) ? S(1) : (x < S(0) ? S(-1) : S(0)); }, "abs");
}

template <typename S>
VarT<S> neg(const VarT<S>& a) {
    return scale(a, S(-1));
}

// Cuts the graph: value is shared, gradient does not flow.
template <typename S>
VarT<S> detach(const VarT<S>& a) {
    return VarT<S>::constant(a.value());
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

template <typename S>
VarT<S> sum_all(const VarT<S>& a) {
    S acc = 0;
    for (std::int64_t i = 0; i < a.value().size(); ++i) acc += a.value()[i];
    auto an = a.ptr();
    return detail::make_op<S>(TensorT<S>::scalar(acc), {a}, [an](NodeT<S>& n) {
        an->ensure_grad();
        const S g = n.grad[0];
        for (std::int64_t i = 0; i < an->grad.size(); ++i) an->grad[i] += g;
    });
}

template <typename S>
VarT<S> mean_all(const VarT<S>& a) {
    return scale(sum_all(a), S(1) / static_cast<S>(a.value().size()));
}

// Sum over the trailing dimension: [..., K] -> [...].
template <typename S>
VarT<S> sum_lastdim(const VarT<S>& a) {
    const auto& sh = a.value().shape();
    if (sh.empty()) throw Error("sum_lastdim: rank 0");
    const int k = sh.back();
    std::vector<int> osh(sh.begin(), sh.end() - 1);
    if (osh.empty()) osh = {1};
    TensorT<S> out(osh);
    const std::int64_t rows = out.size();
    for (std::int64_t r = 0; r < rows; ++r) {
        S acc = 0;
        for (int j = 0; j < k; ++j) acc += a.value()[r * k + j];
        out[r] = acc;
    }
    auto an = a.ptr();
    return detail::make_op<S>(std::move(out), {a}, [an, k](NodeT<S>& n) {
        an->ensure_grad();
        const std::int64_t rows = n.grad.size();
        for (std::int64_t r = 0; r < rows; ++r) {
            const S g = n.grad[r];
            for (int j = 0; j < k; ++j) an->grad[r * k + j] += g;
        }
    });
}

// log(sum(exp(x))) over the trailing dimension, max-shifted.
template <typename S>
VarT<S> logsumexp_lastdim(const VarT<S>& a) {
    const auto& sh = a.value().shape();
    if (sh.empty()) throw Error("logsumexp_lastdim: rank 0");
    const int k = sh.back();
    std::vector<int> osh(sh.begin(), sh.end() - 1);
    if (osh.empty()) osh = {1};
    TensorT<S> out(osh);
    const std::int64_t rows = out.size();
    for (std::int64_t r = 0; r < rows; ++r) {
        S m = a.value()[r * k];
        for (int j = 1; j < k; ++j) m = std::max(m, a.value()[r * k + j]);
        S acc = 0;
        for (int j = 0; j < k; ++j) acc += std::exp(a.value()[r * k + j] - m);
        out[r] = m + std::log(acc);
    }
    auto an = a.ptr();
    return detail::make_op<S>(std::move(out), {a}, [an, k](NodeT<S>& n) {
        an->ensure_grad();
        const std::int64_t rows = n.grad.size();
        for (std::int64_t r = 0; r < rows; ++r) {
            const S g = n.grad[r];
            const S lse = n.value[r];
            for (int j = 0; j < k; ++j)
                an->grad[r * k + j] += g * std::exp(an->value[r * k + j] - lse);
        }
    });
}

// Softmax over the trailing dimension.
template <typename S>
VarT<S> softmax_lastdim(const VarT<S>& a) {
    const auto& sh = a.value().shape();
    const int k = sh.back();
    TensorT<S> out(sh);
    const std::int64_t rows = out.size() / k;
    for (std::int64_t r = 0; r < rows; ++r) {
        S m = a.value()[r * k];
        for (int j = 1; j < k; ++j) m = std::max(m, a.value()[r * k + j]);
        S acc = 0;
        for (int j = 0; j < k; ++j) {
            const S e = std::exp(a.value()[r * k + j] - m);
            out[r * k + j] = e;
            acc += e;
        }
        for (int j = 0; j < k; ++j) out[r * k + j] /= acc;
    }
    auto an = a.ptr();
    return detail::make_op<S>(std::move(out), {a}, [an, k](NodeT<S>& n) {
        an->ensure_grad();
        const std::int64_t rows = n.grad.size() / k;
        for (std::int64_t r = 0; r < rows; ++r) {
            S dot = 0;
            for (int j = 0; j < k; ++j) dot += n.grad[r * k + j] * n.value[r * k + j];
            for (int j = 0; j < k; ++j)
                an->grad[r * k + j] += n.value[r * k + j] * (n.grad[r * k + j] - dot);
        }
    });
}

template <typename S>
VarT<S> log_softmax_lastdim(const VarT<S>& a) {
    const auto& sh = a.value().shape();
    const int k = sh.back();
    TensorT<S> out(sh);
    const std::int64_t rows = out.size() / k;
    for (std::int64_t r = 0; r < rows; ++r) {
        S m = a.value()[r * k];
        for (int j = 1; j < k; ++j) m = std::max(m, a.value()[r * k + j]);
        S acc = 0;
        for (int j = 0; j < k; ++j) acc += std::exp(a.value()[r * k + j] - m);
        const S lse = m + std::log(acc);
        for (int j = 0; j < k; ++j) out[r * k + j] = a.value()[r * k + j] - lse;
    }
    auto an = a.ptr();
    return detail::make_op<S>(std::move(out), {a}, [an, k](NodeT<S>& n) {
        an->ensure_grad();
        const std::int64_t rows = n.grad.size() / k;
        for (std::int64_t r = 0; r < rows; ++r) {
            S gsum = 0;
            for (int j = 0; j < k; ++j) gsum += n.grad[r * k + j];
            for (int j = 0; j < k; ++j)
                an->grad[r * k + j] += n.grad[r * k + j] - std::exp(n.value[r * k + j]) * gsum;
        }
    });
}

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

template <typename S>
VarT<S> reshape(const VarT<S>& a, std::vector<int> shape) {
    TensorT<S> out = a.value().reshaped(std::move(shape));
    auto an = a.ptr();
    return detail::make_op<S>(std::move(out), {a}, [an](NodeT<S>& n) {
        an->ensure_grad();
        detail::axpy(S(1), n.grad, an->grad);
    });
}

// Permutation of a rank-3 tensor's axes.
template <typename S>
VarT<S> permute3(const VarT<S>& a, int p0, int p1, int p2) {
    const auto& sh = a.value().shape();
    if (sh.size() != 3) throw Error("permute3: rank must be 3");
    const int perm[3] = {p0, p1, p2};
    TensorT<S> out({sh[perm[0]], sh[perm[1]], sh[perm[2]]});
    const int d1 = sh[1], d2 = sh[2];
    auto src_index = [&](int i, int j, int l) {
        return (static_cast<std::int64_t>(i) * d1 + j) * d2 + l;
    };
    int idx[3];
    std::int64_t o = 0;
    for (int i = 0; i < out.dim(0); ++i)
        for (int j = 0; j < out.dim(1); ++j)
            for (int l = 0; l < out.dim(2); ++l) {
                idx[perm[0]] = i;
                idx[perm[1]] = j;
                idx[perm[2]] = l;
                out[o++] = a.value()[src_index(idx[0], idx[1], idx[2])];
            }
    auto an = a.ptr();
    const int q0 = p0, q1 = p1, q2 = p2;
    return detail::make_op<S>(std::move(out), {a}, [an, q0, q1, q2, d1, d2](NodeT<S>& n) {
        an->ensure_grad();
        const int perm[3] = {q0, q1, q2};
        int idx[3];
        std::int64_t o = 0;
        for (int i = 0; i < n.grad.dim(0); ++i)
            for (int j = 0; j < n.grad.dim(1); ++j)
                for (int l = 0; l < n.grad.dim(2); ++l) {
                    idx[perm[0]] = i;
                    idx[perm[1]] = j;
                    idx[perm[2]] = l;
                    an->grad[(static_cast<std::int64_t>(idx[0]) * d1 + idx[1]) * d2 + idx[2]] +=
                        n.grad[o++];
                }
    });
}

// Concatenation along dim 1 of 4-d tensors [N,C,H,W].
template <typename S>
VarT<S> concat_channels(const std::vector<VarT<S>>& xs) {
    if (xs.empty()) throw Error("concat_channels: empty input");
    const auto& s0 = xs[0].value().shape();
    if (s0.size() != 4) throw Error("concat_channels: rank must be 4");
    int ctotal = 0;
    for (const auto& x : xs) {
        const auto& s = x.value().shape();
        if (s.size() != 4 || s[0] != s0[0] || s[2] != s0[2] || s[3] != s0[3])
            throw Error("concat_channels: shape mismatch");
        ctotal += s[1];
    }
    const int n = s0[0], h = s0[2], w = s0[3];
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    TensorT<S> out({n, ctotal, h, w});
    std::vector<int> chans;
    for (const auto& x : xs) chans.push_back(x.value().dim(1));
    for (int b = 0; b < n; ++b) {
        std::int64_t coff = 0;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const S* src = xs[k].value().data() + static_cast<std::int64_t>(b) * chans[k] * plane;
            S* dst = out.data() + (static_cast<std::int64_t>(b) * ctotal + coff) * plane;
            std::copy(src, src + static_cast<std::int64_t>(chans[k]) * plane, dst);
            coff += chans[k];
        }
    }
    std::vector<std::shared_ptr<NodeT<S>>> pn;
    for (const auto& x : xs) pn.push_back(x.ptr());
    return detail::make_op<S>(std::move(out), xs, [pn, chans, n, plane, ctotal](NodeT<S>& nd) {
        for (int b = 0; b < n; ++b) {
            std::int64_t coff = 0;
            for (std::size_t k = 0; k < pn.size(); ++k) {
                if (pn[k]->requires_grad) {
                    pn[k]->ensure_grad();
                    const S* src =
                        nd.grad.data() + (static_cast<std::int64_t>(b) * ctotal + coff) * plane;
                    S* dst =
                        pn[k]->grad.data() + static_cast<std::int64_t>(b) * chans[k] * plane;
                    for (std::int64_t i = 0; i < static_cast<std::int64_t>(chans[k]) * plane; ++i)
                        dst[i] += src[i];
                }
                coff += chans[k];
            }
        }
    });
}

// Concatenation of rank-2 tensors along dim 1 (columns).
// Concatenation along dim 0 of 2-d tensors.
template <typename S>
VarT<S> concat_rows(const VarT<S>& a, const VarT<S>& b) {
    const auto& sa = a.value().shape();
    const auto& sb = b.value().shape();
    if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[1])
        throw Error("concat_rows: shape mismatch");
    const int na = sa[0], nb = sb[0], c = sa[1];
    TensorT<S> out({na + nb, c});
    std::copy(a.value().data(), a.value().data() + a.value().size(), out.data());
    std::copy(b.value().data(), b.value().data() + b.value().size(),
              out.data() + a.value().size());
    auto an = a.ptr();
    auto bn = b.ptr();
    return detail::make_op<S>(std::move(out), {a, b}, [an, bn, na, nb, c](NodeT<S>& nd) {
        const std::int64_t asz = static_cast<std::int64_t>(na) * c;
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::int64_t i = 0; i < asz; ++i) an->grad[i] += nd.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            const std::int64_t bsz = static_cast<std::int64_t>(nb) * c;
            for (std::int64_t i = 0; i < bsz; ++i) bn->grad[i] += nd.grad[asz + i];
        }
    });
}

template <typename S>
VarT<S> concat_cols(const VarT<S>& a, const VarT<S>& b) {
    const auto& sa = a.value().shape();
    const auto& sb = b.value().shape();
    if (sa.size() != 2 || sb.size() != 2 || sa[0] != sb[0])
        throw Error("concat_cols: shape mismatch");
    const int n = sa[0], ca = sa[1], cb = sb[1];
    TensorT<S> out({n, ca + cb});
    for (int r = 0; r < n; ++r) {
        std::copy(a.value().data() + static_cast<std::int64_t>(r) * ca,
                  a.value().data() + static_cast<std::int64_t>(r + 1) * ca,
                  out.data() + static_cast<std::int64_t>(r) * (ca + cb));
        std::copy(b.value().data() + static_cast<std::int64_t>(r) * cb,
                  b.value().data() + static_cast<std::int64_t>(r + 1) * cb,
                  out.data() + static_cast<std::int64_t>(r) * (ca + cb) + ca);
    }
    auto an = a.ptr();
    auto bn = b.ptr();
    return detail::make_op<S>(std::move(out), {a, b}, [an, bn, n, ca, cb](NodeT<S>& nd) {
        for (int r = 0; r < n; ++r) {
            if (an->requires_grad) {
                an->ensure_grad();
                for (int c = 0; c < ca; ++c)
                    an->grad[static_cast<std::int64_t>(r) * ca + c] +=
                        nd.grad[static_cast<std::int64_t>(r) * (ca + cb) + c];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (int c = 0; c < cb; ++c)
                    bn->grad[static_cast<std::int64_t>(r) * cb + c] +=
                        nd.grad[static_cast<std::int64_t>(r) * (ca + cb) + ca + c];
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

namespace detail {
template <typename S>
using EMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using EMap = Eigen::Map<EMat<S>>;
template <typename S>
using ECMap = Eigen::Map<const EMat<S>>;
}  // namespace detail

// a: [M,K], b: [K,N] -> [M,N]
template <typename S>
VarT<S> matmul(const VarT<S>& a, const VarT<S>& b) {
    const auto& sa = a.value().shape();
    const auto& sb = b.value().shape();
    if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) throw Error("matmul: shape mismatch");
    const int m = sa[0], k = sa[1], n = sb[1];
    TensorT<S> out({m, n});
    detail::EMap<S>(out.data(), m, n).noalias() =
        detail::ECMap<S>(a.value().data(), m, k) * detail::ECMap<S>(b.value().data(), k, n);
    auto an = a.ptr();
    auto bn = b.ptr();
    return detail::make_op<S>(std::move(out), {a, b}, [an, bn, m, k, n](NodeT<S>& nd) {
        detail::ECMap<S> g(nd.grad.data(), m, n);
        if (an->requires_grad) {
            an->ensure_grad();
            detail::EMap<S>(an->grad.data(), m, k).noalias() +=
                g * detail::ECMap<S>(bn->value.data(), k, n).transpose();
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            detail::EMap<S>(bn->grad.data(), k, n).noalias() +=
                detail::ECMap<S>(an->value.data(), m, k).transpose() * g;
        }
    });
}

// x: [N,K], w: [O,K], bias: [O] -> [N,O]; y = x w^T + bias
template <typename S>
VarT<S> linear(const VarT<S>& x, const VarT<S>& w, const VarT<S>& bias) {
    const auto& sx = x.value().shape();
    const auto& sw = w.value().shape();
    if (sx.size() != 2 || sw.size() != 2 || sx[1] != sw[1]) throw Error("linear: shape mismatch");
    if (bias.value().size() != sw[0]) throw Error("linear: bias size mismatch");
    const int n = sx[0], k = sx[1], o = sw[0];
    TensorT<S> out({n, o});
    detail::EMap<S>(out.data(), n, o).noalias() =
        detail::ECMap<S>(x.value().data(), n, k) *
        detail::ECMap<S>(w.value().data(), o, k).transpose();
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < o; ++c) out.at2(r, c) += bias.value()[c];
    auto xn = x.ptr();
    auto wn = w.ptr();
    auto bn = bias.ptr();
    return detail::make_op<S>(std::move(out), {x, w, bias}, [xn, wn, bn, n, k, o](NodeT<S>& nd) {
        detail::ECMap<S> g(nd.grad.data(), n, o);
        if (xn->requires_grad) {
            xn->ensure_grad();
            detail::EMap<S>(xn->grad.data(), n, k).noalias() +=
                g * detail::ECMap<S>(wn->value.data(), o, k);
        }
        if (wn->requires_grad) {
            wn->ensure_grad();
            detail::EMap<S>(wn->grad.data(), o, k).noalias() +=
                g.transpose() * detail::ECMap<S>(xn->value.data(), n, k);
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < o; ++c) bn->grad[c] += nd.grad[static_cast<std::int64_t>(r) * o + c];
        }
    });
}

// Batched matmul with optional transposes: a: [B,M,K], b: [B,K,N] -> [B,M,N].
template <typename S>
VarT<S> bmm(const VarT<S>& a, const VarT<S>& b, bool trans_a = false, bool trans_b = false) {
    const auto& sa = a.value().shape();
    const auto& sb = b.value().shape();
    if (sa.size() != 3 || sb.size() != 3 || sa[0] != sb[0]) throw Error("bmm: shape mismatch");
    const int batch = sa[0];
    const int m = trans_a ? sa[2] : sa[1];
    const int ka = trans_a ? sa[1] : sa[2];
    const int kb = trans_b ? sb[2] : sb[1];
    const int n = trans_b ? sb[1] : sb[2];
    if (ka != kb) throw Error("bmm: inner dimension mismatch");
    const int k = ka;
    TensorT<S> out({batch, m, n});
    const std::int64_t sa_sz = static_cast<std::int64_t>(sa[1]) * sa[2];
    const std::int64_t sb_sz = static_cast<std::int64_t>(sb[1]) * sb[2];
    const std::int64_t so_sz = static_cast<std::int64_t>(m) * n;
    for (int i = 0; i < batch; ++i) {
        detail::ECMap<S> ma(a.value().data() + i * sa_sz, sa[1], sa[2]);
        detail::ECMap<S> mb(b.value().data() + i * sb_sz, sb[1], sb[2]);
        detail::EMap<S> mo(out.data() + i * so_sz, m, n);
        if (!trans_a && !trans_b)
            mo.noalias() = ma * mb;
        else if (trans_a && !trans_b)
            mo.noalias() = ma.transpose() * mb;
        else if (!trans_a && trans_b)
            mo.noalias() = ma * mb.transpose();
        else
            mo.noalias() = ma.transpose() * mb.transpose();
    }
    auto an = a.ptr();
    auto bn = b.ptr();
    const int d1a = sa[1], d2a = sa[2], d1b = sb[1], d2b = sb[2];
    return detail::make_op<S>(
        std::move(out), {a, b},
        [an, bn, batch, m, n, k, trans_a, trans_b, d1a, d2a, d1b, d2b, sa_sz, sb_sz,
         so_sz](NodeT<S>& nd) {
            (void)k;
            for (int i = 0; i < batch; ++i) {
                detail::ECMap<S> g(nd.grad.data() + i * so_sz, m, n);
                detail::ECMap<S> ma(an->value.data() + i * sa_sz, d1a, d2a);
                detail::ECMap<S> mb(bn->value.data() + i * sb_sz, d1b, d2b);
                if (an->requires_grad) {
                    an->ensure_grad();
                    detail::EMap<S> ga(an->grad.data() + i * sa_sz, d1a, d2a);
                    if (!trans_a && !trans_b)
                        ga.noalias() += g * mb.transpose();
                    else if (trans_a && !trans_b)
                        ga.noalias() += mb * g.transpose();
                    else if (!trans_a && trans_b)
                        ga.noalias() += g * mb;
                    else
                        ga.noalias() += mb.transpose() * g.transpose();
                }
                if (bn->requires_grad) {
                    bn->ensure_grad();
                    detail::EMap<S> gb(bn->grad.data() + i * sb_sz, d1b, d2b);
                    if (!trans_a && !trans_b)
                        gb.noalias() += ma.transpose() * g;
                    else if (trans_a && !trans_b)
                        gb.noalias() += ma * g;
                    else if (!trans_a && trans_b)
                        gb.noalias() += g.transpose() * ma;
                    else
                        gb.noalias() += g.transpose() * ma.transpose();
                }
            }
        });
}

// Gather rows of an embedding table: table [V,E], ids -> [n,E].
template <typename S>
VarT<S> embedding(const VarT<S>& table, const std::vector<int>& ids) {
    const auto& st = table.value().shape();
    if (st.size() != 2) throw Error("embedding: table must be rank 2");
    const int v = st[0], e = st[1];
    TensorT<S> out({static_cast<int>(ids.size()), e});
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] < 0 || ids[r] >= v) throw Error("embedding: id out of range");
        std::copy(table.value().data() + static_cast<std::int64_t>(ids[r]) * e,
                  table.value().data() + static_cast<std::int64_t>(ids[r] + 1) * e,
                  out.data() + static_cast<std::int64_t>(r) * e);
    }
    auto tn = table.ptr();
    return detail::make_op<S>(std::move(out), {table}, [tn, ids, e](NodeT<S>& nd) {
        tn->ensure_grad();
        for (std::size_t r = 0; r < ids.size(); ++r)
            for (int c = 0; c < e; ++c)
                tn->grad[static_cast<std::int64_t>(ids[r]) * e + c] +=
                    nd.grad[static_cast<std::int64_t>(r) * e + c];
    });
}

// Broadcast subtract: a [T,M,D] minus b [T,D] along the middle axis.
template <typename S>
VarT<S> sub_broadcast_mid(const VarT<S>& a, const VarT<S>& b) {
    const auto& sa = a.value().shape();
    const auto& sb = b.value().shape();
    if (sa.size() != 3 || sb.size() != 2 || sa[0] != sb[0] || sa[2] != sb[1])
        throw Error("sub_broadcast_mid: shape mismatch");
    const int t = sa[0], m = sa[1], d = sa[2];
    TensorT<S> out(sa);
    for (int i = 0; i < t; ++i)
        for (int j = 0; j < m; ++j)
            for (int l = 0; l < d; ++l)
                out.at3(i, j, l) = a.value().at3(i, j, l) - b.value().at2(i, l);
    auto an = a.ptr();
    auto bn = b.ptr();
    return detail::make_op<S>(std::move(out), {a, b}, [an, bn, t, m, d](NodeT<S>& nd) {
        if (an->requires_grad) {
            an->ensure_grad();
            detail::axpy(S(1), nd.grad, an->grad);
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (int i = 0; i < t; ++i)
                for (int j = 0; j < m; ++j)
                    for (int l = 0; l < d; ++l)
                        bn->grad[static_cast<std::int64_t>(i) * d + l] -= nd.grad.at3(i, j, l);
        }
    });
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

// Layer norm over the trailing dimension of a rank-2 tensor.
template <typename S>
VarT<S> layer_norm(const VarT<S>& x, const VarT<S>& gamma, const VarT<S>& beta,
                   S eps = S(1e-5)) {
    const auto& sx = x.value().shape();
    if (sx.size() != 2) throw Error("layer_norm: rank must be 2");
    const int n = sx[0], d = sx[1];
    if (gamma.value().size() != d || beta.value().size() != d)
        throw Error("layer_norm: affine size mismatch");
    TensorT<S> out(sx);
    TensorT<S> xhat(sx);
    TensorT<S> inv_std({n});
    for (int r = 0; r < n; ++r) {
        S mean = 0;
        for (int c = 0; c < d; ++c) mean += x.value().at2(r, c);
        mean /= static_cast<S>(d);
        S var = 0;
        for (int c = 0; c < d; ++c) {
            const S dv = x.value().at2(r, c) - mean;
            var += dv * dv;
        }
        var /= static_cast<S>(d);
        const S is = S(1) / std::sqrt(var + eps);
        inv_std[r] = is;
        for (int c = 0; c < d; ++c) {
            const S xh = (x.value().at2(r, c) - mean) * is;
            xhat.at2(r, c) = xh;
            out.at2(r, c) = gamma.value()[c] * xh + beta.value()[c];
        }
    }
    auto xn = x.ptr();
    auto gn = gamma.ptr();
    auto bn = beta.ptr();
    return detail::make_op<S>(
        std::move(out), {x, gamma, beta},
        [xn, gn, bn, n, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](NodeT<S>& nd) {
            for (int r = 0; r < n; ++r) {
                if (gn->requires_grad) {
                    gn->ensure_grad();
                    for (int c = 0; c < d; ++c)
                        gn->grad[c] += nd.grad.at2(r, c) * xhat.at2(r, c);
                }
                if (bn->requires_grad) {
                    bn->ensure_grad();
                    for (int c = 0; c < d; ++c) bn->grad[c] += nd.grad.at2(r, c);
                }
                if (xn->requires_grad) {
                    xn->ensure_grad();
                    S sum_g = 0, sum_gx = 0;
                    for (int c = 0; c < d; ++c) {
                        const S g = nd.grad.at2(r, c) * gn->value[c];
                        sum_g += g;
                        sum_gx += g * xhat.at2(r, c);
                    }
                    const S inv_d = S(1) / static_cast<S>(d);
                    for (int c = 0; c < d; ++c) {
                        const S g = nd.grad.at2(r, c) * gn->value[c];
                        xn->grad[static_cast<std::int64_t>(r) * d + c] +=
                            inv_std[r] * (g - inv_d * sum_g - xhat.at2(r, c) * inv_d * sum_gx);
                    }
                }
            }
        });
}

// Instance norm over H,W per (sample, channel) of [N,C,H,W].
template <typename S>
VarT<S> instance_norm(const VarT<S>& x, const VarT<S>& gamma, const VarT<S>& beta,
                      S eps = S(1e-5)) {
    const auto& sx = x.value().shape();
    if (sx.size() != 4) throw Error("instance_norm: rank must be 4");
    const int n = sx[0], c = sx[1], h = sx[2], w = sx[3];
    if (gamma.value().size() != c || beta.value().size() != c)
        throw Error("instance_norm: affine size mismatch");
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    TensorT<S> out(sx);
    TensorT<S> xhat(sx);
    TensorT<S> inv_std({n, c});
    for (int b = 0; b < n; ++b)
        for (int ch = 0; ch < c; ++ch) {
            const S* xs = x.value().data() + (static_cast<std::int64_t>(b) * c + ch) * plane;
            S mean = 0;
            for (std::int64_t i = 0; i < plane; ++i) mean += xs[i];
            mean /= static_cast<S>(plane);
            S var = 0;
            for (std::int64_t i = 0; i < plane; ++i) {
                const S dv = xs[i] - mean;
                var += dv * dv;
            }
            var /= static_cast<S>(plane);
            const S is = S(1) / std::sqrt(var + eps);
            inv_std.at2(b, ch) = is;
            S* xh = xhat.data() + (static_cast<std::int64_t>(b) * c + ch) * plane;
            S* os = out.data() + (static_cast<std::int64_t>(b) * c + ch) * plane;
            const S g = gamma.value()[ch], bb = beta.value()[ch];
            for (std::int64_t i = 0; i < plane; ++i) {
                xh[i] = (xs[i] - mean) * is;
                os[i] = g * xh[i] + bb;
            }
        }
    auto xn = x.ptr();
    auto gn = gamma.ptr();
    auto bn = beta.ptr();
    return detail::make_op<S>(
        std::move(out), {x, gamma, beta},
        [xn, gn, bn, n, c, plane, xhat = std::move(xhat),
         inv_std = std::move(inv_std)](NodeT<S>& nd) {
            for (int b = 0; b < n; ++b)
                for (int ch = 0; ch < c; ++ch) {
                    const S* gd = nd.grad.data() + (static_cast<std::int64_t>(b) * c + ch) * plane;
                    const S* xh = xhat.data() + (static_cast<std::int64_t>(b) * c + ch) * plane;
                    if (gn->requires_grad) {
                        gn->ensure_grad();
                        S acc = 0;
                        for (std::int64_t i = 0; i < plane; ++i) acc += gd[i] * xh[i];
                        gn->grad[ch] += acc;
                    }
                    if (bn->requires_grad) {
                        bn->ensure_grad();
                        S acc = 0;
                        for (std::int64_t i = 0; i < plane; ++i) acc += gd[i];
                        bn->grad[ch] += acc;
                    }
                    if (xn->requires_grad) {
                        xn->ensure_grad();
                        const S gc = gn->value[ch];
                        S sum_g = 0, sum_gx = 0;
                        for (std::int64_t i = 0; i < plane; ++i) {
                            sum_g += gd[i];
                            sum_gx += gd[i] * xh[i];
                        }
                        sum_g *= gc;
                        sum_gx *= gc;
                        const S inv_p = S(1) / static_cast<S>(plane);
                        const S is = inv_std.at2(b, ch);
                        S* xg = xn->grad.data() + (static_cast<std::int64_t>(b) * c + ch) * plane;
                        for (std::int64_t i = 0; i < plane; ++i)
                            xg[i] += is * (gc * gd[i] - inv_p * sum_g - xh[i] * inv_p * sum_gx);
                    }
                }
        });
}

}  // namespace signsynth::nn
