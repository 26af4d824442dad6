#pragma once

// Structural similarity over [3,H,W] frames: 11x11 Gaussian window with
// sigma 1.5, 8-bit-range stability constants, channel-averaged. Frames are
// stored in [-1,1] and mapped to the [0,255] convention before computation.

#include <array>
#include <cmath>
#include <vector>

#include "signsynth/core/image.hpp"
#include "signsynth/errors.hpp"

namespace signsynth::metrics {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kSsimC2 = (0.03 * 255.0) * (0.03 * 255.0);

namespace detail {

inline const std::array<double, kSsimWindow>& gaussian_taps() {
    static const std::array<double, kSsimWindow> taps = [] {
        std::array<double, kSsimWindow> t{};
        double sum = 0.0;
        for (int i = 0; i < kSsimWindow; ++i) {
            const double d = i - (kSsimWindow - 1) / 2.0;
            t[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
            sum += t[static_cast<std::size_t>(i)];
        }
        for (auto& v : t) v /= sum;
        return t;
    }();
    return taps;
}

// Separable valid-mode Gaussian filter of an H x W plane.
inline std::vector<double> gauss_valid(const std::vector<double>& in, int h, int w, int& oh,
                                       int& ow) {
    const auto& taps = gaussian_taps();
    oh = h - kSsimWindow + 1;
    ow = w - kSsimWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < kSsimWindow; ++k)
                s += taps[static_cast<std::size_t>(k)] * in[static_cast<std::size_t>(y) * w + x + k];
            rows[static_cast<std::size_t>(y) * ow + x] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < kSsimWindow; ++k)
                s += taps[static_cast<std::size_t>(k)] * rows[static_cast<std::size_t>(y + k) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    return out;
}

inline std::vector<double> plane255(const img::Frame& f, int c) {
    const int h = f.dim(1), w = f.dim(2);
    std::vector<double> out(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out[static_cast<std::size_t>(y) * w + x] =
                (static_cast<double>(f.at3(c, y, x)) + 1.0) * 0.5 * 255.0;
    return out;
}

}  // namespace detail

// Mean SSIM of two frames. The window is evaluated at every fully-interior
// position ("valid" filtering) and the resulting map is averaged, then
// channels are averaged.
inline double ssim(const img::Frame& a, const img::Frame& b) {
    if (a.ndim() != 3 || !a.same_shape(b)) throw PreconditionError("ssim: shape mismatch");
    const int ch = a.dim(0), h = a.dim(1), w = a.dim(2);
    if (h < kSsimWindow || w < kSsimWindow)
        throw PreconditionError("ssim: image smaller than the 11x11 window");

    double channel_sum = 0.0;
    for (int c = 0; c < ch; ++c) {
        const auto pa = detail::plane255(a, c);
        const auto pb = detail::plane255(b, c);
        std::vector<double> paa(pa.size()), pbb(pa.size()), pab(pa.size());
        for (std::size_t i = 0; i < pa.size(); ++i) {
            paa[i] = pa[i] * pa[i];
            pbb[i] = pb[i] * pb[i];
            pab[i] = pa[i] * pb[i];
        }
        int oh = 0, ow = 0;
        const auto mu_a = detail::gauss_valid(pa, h, w, oh, ow);
        const auto mu_b = detail::gauss_valid(pb, h, w, oh, ow);
        const auto raw_aa = detail::gauss_valid(paa, h, w, oh, ow);
        const auto raw_bb = detail::gauss_valid(pbb, h, w, oh, ow);
        const auto raw_ab = detail::gauss_valid(pab, h, w, oh, ow);
        double sum = 0.0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double va = raw_aa[i] - mu_a[i] * mu_a[i];
            const double vb = raw_bb[i] - mu_b[i] * mu_b[i];
            const double cov = raw_ab[i] - mu_a[i] * mu_b[i];
            const double num = (2.0 * mu_a[i] * mu_b[i] + kSsimC1) * (2.0 * cov + kSsimC2);
            const double den =
                (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kSsimC1) * (va + vb + kSsimC2);
            sum += num / den;
        }
        channel_sum += sum / static_cast<double>(mu_a.size());
    }
    return channel_sum / static_cast<double>(ch);
}

}  // namespace signsynth::metrics
