#pragma once

// Spatial ops on [N,C,H,W] tensors: conv2d via im2col + GEMM, 2x average
// pooling, nearest-neighbour upsampling. im2col buffers are cached per node
// for the backward pass.

#include <memory>
#include <vector>

#include "signsynth/core/autograd.hpp"

namespace signsynth::nn {

namespace detail {

template <typename S>
void im2col(const S* src, int c, int h, int w, int kh, int kw, int stride, int pad, int oh,
            int ow, S* cols) {
    // cols layout: [c*kh*kw, oh*ow] row-major
    const std::int64_t p = static_cast<std::int64_t>(oh) * ow;
    std::int64_t row = 0;
    for (int ch = 0; ch < c; ++ch)
        for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx, ++row) {
                S* dst = cols + row * p;
                std::int64_t o = 0;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) {
                        for (int ox = 0; ox < ow; ++ox) dst[o++] = S(0);
                        continue;
                    }
                    const S* srow = src + (static_cast<std::int64_t>(ch) * h + iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        dst[o++] = (ix < 0 || ix >= w) ? S(0) : srow[ix];
                    }
                }
            }
}

template <typename S>
void col2im_accum(const S* cols, int c, int h, int w, int kh, int kw, int stride, int pad,
                  int oh, int ow, S* dst) {
    const std::int64_t p = static_cast<std::int64_t>(oh) * ow;
    std::int64_t row = 0;
    for (int ch = 0; ch < c; ++ch)
        for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx, ++row) {
                const S* src = cols + row * p;
                std::int64_t o = 0;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) {
                        o += ow;
                        continue;
                    }
                    S* drow = dst + (static_cast<std::int64_t>(ch) * h + iy) * w;
                    for (int ox = 0; ox < ow; ++ox, ++o) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < w) drow[ix] += src[o];
                    }
                }
            }
}

}  // namespace detail

// x: [N,Cin,H,W], w: [Cout,Cin,kh,kw], bias: [Cout]
template <typename S>
VarT<S> conv2d(const VarT<S>& x, const VarT<S>& w, const VarT<S>& bias, int stride = 1,
               int pad = 0) {
    const auto& sx = x.value().shape();
    const auto& sw = w.value().shape();
    if (sx.size() != 4 || sw.size() != 4) throw Error("conv2d: rank must be 4");
    if (sx[1] != sw[1]) throw Error("conv2d: channel mismatch");
    const int n = sx[0], cin = sx[1], h = sx[2], wd = sx[3];
    const int cout = sw[0], kh = sw[2], kw = sw[3];
    if (bias.value().size() != cout) throw Error("conv2d: bias size mismatch");
    const int oh = (h + 2 * pad - kh) / stride + 1;
    const int ow = (wd + 2 * pad - kw) / stride + 1;
    if (oh <= 0 || ow <= 0) throw Error("conv2d: empty output");
    const int k = cin * kh * kw;
    const std::int64_t p = static_cast<std::int64_t>(oh) * ow;

    TensorT<S> out({n, cout, oh, ow});
    auto cols_cache = std::make_shared<std::vector<TensorT<S>>>();
    cols_cache->reserve(n);
    for (int b = 0; b < n; ++b) {
        TensorT<S> cols({k, static_cast<int>(p)});
        detail::im2col(x.value().data() + static_cast<std::int64_t>(b) * cin * h * wd, cin, h,
                       wd, kh, kw, stride, pad, oh, ow, cols.data());
        detail::EMap<S>(out.data() + static_cast<std::int64_t>(b) * cout * p, cout, p).noalias() =
            detail::ECMap<S>(w.value().data(), cout, k) * detail::ECMap<S>(cols.data(), k, p);
        cols_cache->push_back(std::move(cols));
    }
    for (int b = 0; b < n; ++b)
        for (int co = 0; co < cout; ++co) {
            S* dst = out.data() + (static_cast<std::int64_t>(b) * cout + co) * p;
            const S bv = bias.value()[co];
            for (std::int64_t i = 0; i < p; ++i) dst[i] += bv;
        }

    auto xn = x.ptr();
    auto wn = w.ptr();
    auto bn = bias.ptr();
    return detail::make_op<S>(
        std::move(out), {x, w, bias},
        [xn, wn, bn, cols_cache, n, cin, h, wd, cout, kh, kw, stride, pad, oh, ow, k,
         p](NodeT<S>& nd) {
            for (int b = 0; b < n; ++b) {
                detail::ECMap<S> gy(nd.grad.data() + static_cast<std::int64_t>(b) * cout * p,
                                    cout, p);
                if (wn->requires_grad) {
                    wn->ensure_grad();
                    detail::EMap<S>(wn->grad.data(), cout, k).noalias() +=
                        gy * detail::ECMap<S>((*cols_cache)[b].data(), k, p).transpose();
                }
                if (bn->requires_grad) {
                    bn->ensure_grad();
                    for (int co = 0; co < cout; ++co) {
                        S acc = 0;
                        const S* g = nd.grad.data() + (static_cast<std::int64_t>(b) * cout + co) * p;
                        for (std::int64_t i = 0; i < p; ++i) acc += g[i];
                        bn->grad[co] += acc;
                    }
                }
                if (xn->requires_grad) {
                    xn->ensure_grad();
                    TensorT<S> dcols({k, static_cast<int>(p)});
                    detail::EMap<S>(dcols.data(), k, p).noalias() =
                        detail::ECMap<S>(wn->value.data(), cout, k).transpose() * gy;
                    detail::col2im_accum(dcols.data(), cin, h, wd, kh, kw, stride, pad, oh, ow,
                                         xn->grad.data() +
                                             static_cast<std::int64_t>(b) * cin * h * wd);
                }
            }
        });
}

// 2x2 average pooling with stride 2. Requires even H and W.
template <typename S>
VarT<S> avg_pool2(const VarT<S>& x) {
    const auto& sx = x.value().shape();
    if (sx.size() != 4) throw Error("avg_pool2: rank must be 4");
    const int n = sx[0], c = sx[1], h = sx[2], w = sx[3];
    if (h % 2 != 0 || w % 2 != 0) throw Error("avg_pool2: odd spatial size");
    const int oh = h / 2, ow = w / 2;
    TensorT<S> out({n, c, oh, ow});
    for (int b = 0; b < n; ++b)
        for (int ch = 0; ch < c; ++ch) {
            const S* src = x.value().data() + (static_cast<std::int64_t>(b) * c + ch) * h * w;
            S* dst = out.data() + (static_cast<std::int64_t>(b) * c + ch) * oh * ow;
            for (int y = 0; y < oh; ++y)
                for (int xx = 0; xx < ow; ++xx)
                    dst[y * ow + xx] =
                        S(0.25) * (src[(2 * y) * w + 2 * xx] + src[(2 * y) * w + 2 * xx + 1] +
                                   src[(2 * y + 1) * w + 2 * xx] +
                                   src[(2 * y + 1) * w + 2 * xx + 1]);
        }
    auto xn = x.ptr();
    return detail::make_op<S>(std::move(out), {x}, [xn, n, c, h, w, oh, ow](NodeT<S>& nd) {
        xn->ensure_grad();
        for (int b = 0; b < n; ++b)
            for (int ch = 0; ch < c; ++ch) {
                const S* g = nd.grad.data() + (static_cast<std::int64_t>(b) * c + ch) * oh * ow;
                S* dst = xn->grad.data() + (static_cast<std::int64_t>(b) * c + ch) * h * w;
                for (int y = 0; y < oh; ++y)
                    for (int xx = 0; xx < ow; ++xx) {
                        const S gv = S(0.25) * g[y * ow + xx];
                        dst[(2 * y) * w + 2 * xx] += gv;
                        dst[(2 * y) * w + 2 * xx + 1] += gv;
                        dst[(2 * y + 1) * w + 2 * xx] += gv;
                        dst[(2 * y + 1) * w + 2 * xx + 1] += gv;
                    }
            }
    });
}

// Nearest-neighbour 2x upsampling.
template <typename S>
VarT<S> upsample2(const VarT<S>& x) {
    const auto& sx = x.value().shape();
    if (sx.size() != 4) throw Error("upsample2: rank must be 4");
    const int n = sx[0], c = sx[1], h = sx[2], w = sx[3];
    const int oh = h * 2, ow = w * 2;
    TensorT<S> out({n, c, oh, ow});
    for (int b = 0; b < n; ++b)
        for (int ch = 0; ch < c; ++ch) {
            const S* src = x.value().data() + (static_cast<std::int64_t>(b) * c + ch) * h * w;
            S* dst = out.data() + (static_cast<std::int64_t>(b) * c + ch) * oh * ow;
            for (int y = 0; y < oh; ++y)
                for (int xx = 0; xx < ow; ++xx) dst[y * ow + xx] = src[(y / 2) * w + (xx / 2)];
        }
    auto xn = x.ptr();
    return detail::make_op<S>(std::move(out), {x}, [xn, n, c, h, w, oh, ow](NodeT<S>& nd) {
        xn->ensure_grad();
        for (int b = 0; b < n; ++b)
            for (int ch = 0; ch < c; ++ch) {
                const S* g = nd.grad.data() + (static_cast<std::int64_t>(b) * c + ch) * oh * ow;
                S* dst = xn->grad.data() + (static_cast<std::int64_t>(b) * c + ch) * h * w;
                for (int y = 0; y < oh; ++y)
                    for (int xx = 0; xx < ow; ++xx) dst[(y / 2) * w + (xx / 2)] += g[y * ow + xx];
            }
    });
}

// Fixed-window crop of [N,C,H,W] starting at (y0,x0); out-of-bounds filled
// per-channel from `fill` (size C). Gradient flows only to in-bounds pixels.
template <typename S>
VarT<S> crop_window(const VarT<S>& x, int y0, int x0, int ch_, int cw,
                    const std::vector<S>& fill) {
    const auto& sx = x.value().shape();
    if (sx.size() != 4) throw Error("crop_window: rank must be 4");
    const int n = sx[0], c = sx[1], h = sx[2], w = sx[3];
    if (static_cast<int>(fill.size()) != c) throw Error("crop_window: fill size mismatch");
    TensorT<S> out({n, c, ch_, cw});
    for (int b = 0; b < n; ++b)
        for (int cc = 0; cc < c; ++cc) {
            const S* src = x.value().data() + (static_cast<std::int64_t>(b) * c + cc) * h * w;
            S* dst = out.data() + (static_cast<std::int64_t>(b) * c + cc) * ch_ * cw;
            for (int y = 0; y < ch_; ++y)
                for (int xx = 0; xx < cw; ++xx) {
                    const int iy = y0 + y, ix = x0 + xx;
                    dst[y * cw + xx] =
                        (iy < 0 || iy >= h || ix < 0 || ix >= w) ? fill[cc] : src[iy * w + ix];
                }
        }
    auto xn = x.ptr();
    return detail::make_op<S>(std::move(out), {x},
                              [xn, n, c, h, w, y0, x0, ch_, cw](NodeT<S>& nd) {
                                  xn->ensure_grad();
                                  for (int b = 0; b < n; ++b)
                                      for (int cc = 0; cc < c; ++cc) {
                                          const S* g = nd.grad.data() +
                                                       (static_cast<std::int64_t>(b) * c + cc) *
                                                           ch_ * cw;
                                          S* dst = xn->grad.data() +
                                                   (static_cast<std::int64_t>(b) * c + cc) * h * w;
                                          for (int y = 0; y < ch_; ++y)
                                              for (int xx = 0; xx < cw; ++xx) {
                                                  const int iy = y0 + y, ix = x0 + xx;
                                                  if (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                                      dst[iy * w + ix] += g[y * cw + xx];
                                              }
                                      }
                              });
}

}  // namespace signsynth::nn
