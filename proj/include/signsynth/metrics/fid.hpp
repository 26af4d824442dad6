#pragma once

// Frechet distance between feature distributions of two frame sets. The
// feature extractor is injected: at desk scale a small convolutional encoder
// stands in, so absolute values are not comparable to published numbers
// computed with a large pretrained classifier.

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "signsynth/core/image.hpp"
#include "signsynth/errors.hpp"
#include "signsynth/pose2video/featnet.hpp"

namespace signsynth::metrics {

using FidFeatureFn = std::function<std::vector<double>(const img::Frame&)>;

struct FeatureStats {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;  // sample covariance, N-1 normalization
};

namespace detail {

constexpr double kPsdTolerance = 1e-6;

inline FeatureStats feature_stats(const std::vector<std::vector<double>>& rows) {
    if (rows.size() < 2) throw PreconditionError("fid: need at least two feature vectors");
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto d = static_cast<Eigen::Index>(rows.front().size());
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != d)
            throw PreconditionError("fid: inconsistent feature dimensions");
        for (Eigen::Index j = 0; j < d; ++j)
            x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    FeatureStats s;
    s.mu = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - s.mu.transpose();
    s.sigma = centered.transpose() * centered / static_cast<double>(n - 1);
    return s;
}

// Symmetric PSD square root via eigendecomposition. Small negative
// eigenvalues (roundoff) are clipped to zero; anything beyond the tolerance
// means the input was not a covariance product and is an error.
inline Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& s) {
    const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw NumericError("fid: eigendecomposition failed");
    Eigen::VectorXd lam = es.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam[i] < -kPsdTolerance)
            throw NumericError("fid: matrix is not positive semi-definite");
        if (lam[i] < 0.0) lam[i] = 0.0;
    }
    return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

// Frechet distance from explicit feature vectors (used directly by tests and
// by callers that precompute features).
inline double fid_from_features(const std::vector<std::vector<double>>& a,
                                const std::vector<std::vector<double>>& b) {
    const auto sa = detail::feature_stats(a);
    const auto sb = detail::feature_stats(b);
    if (sa.mu.size() != sb.mu.size())
        throw PreconditionError("fid: feature dimensions differ between sets");
    const Eigen::MatrixXd root_a = detail::sqrtm_psd(sa.sigma);
    const Eigen::MatrixXd inner = root_a * sb.sigma * root_a;
    const Eigen::MatrixXd cross = detail::sqrtm_psd(inner);
    const double tr = (sa.sigma + sb.sigma).trace() - 2.0 * cross.trace();
    return (sa.mu - sb.mu).squaredNorm() + tr;
}

inline double fid(const std::vector<img::Frame>& set_a, const std::vector<img::Frame>& set_b,
                  const FidFeatureFn& feat) {
    if (!feat) throw PreconditionError("fid: feature extractor is required");
    std::vector<std::vector<double>> fa, fb;
    fa.reserve(set_a.size());
    fb.reserve(set_b.size());
    for (const auto& f : set_a) fa.push_back(feat(f));
    for (const auto& f : set_b) fb.push_back(feat(f));
    return fid_from_features(fa, fb);
}

// Desk-scale surrogate: spatial mean of each channel of the feature net's
// deepest layer.
inline FidFeatureFn featnet_fid_extractor(const p2v::FeatureNet& net) {
    return [&net](const img::Frame& frame) {
        const auto feats = net.features(p2v::lift(frame));
        const auto& top = feats.back().value();
        const int c = top.dim(1), h = top.dim(2), w = top.dim(3);
        std::vector<double> out(static_cast<std::size_t>(c), 0.0);
        for (int cc = 0; cc < c; ++cc) {
            double s = 0.0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) s += top.at4(0, cc, y, x);
            out[static_cast<std::size_t>(cc)] = s / (static_cast<double>(h) * w);
        }
        return out;
    };
}

}  // namespace signsynth::metrics
