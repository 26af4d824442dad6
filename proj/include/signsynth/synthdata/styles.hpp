#pragma once

// Signer appearance styles for the synthetic corpus: per-style colors and
// body proportions, with a palette guaranteeing pairwise torso-color
// separation so style identity is measurable in image space.

#include <algorithm>
#include <cmath>
#include <vector>

#include "signsynth/core/image.hpp"
#include "signsynth/errors.hpp"

namespace signsynth::synth {

// Appearance parameters of one synthetic signer. Colors are stored in the
// frame convention ([-1,1] per channel); geometry is in pixels at the
// resolution the style was built for.
struct StyleSpec {
    int style_id = 0;
    img::Rgb torso_color{};
    img::Rgb sleeve_color{};
    img::Rgb background_color{};
    double head_radius_px = 8.0;
    double limb_width_px = 3.0;
    int resolution = 64;
};

// Skin tone shared by every style: head disk and hand glyphs are rendered in
// this color so hand appearance carries no style information.
inline constexpr img::Rgb kSkinColor{0.92f, 0.60f, 0.38f};

namespace detail {

// Base torso colors in [0,1]; chosen so every pair is at least 0.25 apart in
// [0,1] RGB, i.e. at least 0.5 apart in the [-1,1] frame convention.
inline constexpr int kMaxStyles = 12;
inline constexpr float kTorsoPalette[kMaxStyles][3] = {
    {0.80f, 0.15f, 0.15f},  // red
    {0.15f, 0.70f, 0.20f},  // green
    {0.15f, 0.25f, 0.80f},  // blue
    {0.85f, 0.80f, 0.10f},  // yellow
    {0.80f, 0.15f, 0.75f},  // magenta
    {0.10f, 0.75f, 0.75f},  // cyan
    {0.90f, 0.50f, 0.10f},  // orange
    {0.45f, 0.15f, 0.70f},  // purple
    {0.05f, 0.40f, 0.35f},  // dark teal
    {0.95f, 0.60f, 0.70f},  // pink
    {0.50f, 0.55f, 0.10f},  // olive
    {0.10f, 0.10f, 0.40f},  // navy
};

inline float to_signed(float unit) { return unit * 2.0f - 1.0f; }

// Linear blend in [0,1] units, returned in [-1,1] units.
inline img::Rgb blend_to_signed(const float base[3], float target, float keep) {
    return {to_signed(base[0] * keep + target * (1.0f - keep)),
            to_signed(base[1] * keep + target * (1.0f - keep)),
            to_signed(base[2] * keep + target * (1.0f - keep))};
}

}  // namespace detail

// Euclidean distance between two colors in [-1,1] units.
inline double color_distance(const img::Rgb& a, const img::Rgb& b) {
    const double dr = static_cast<double>(a.r) - b.r;
    const double dg = static_cast<double>(a.g) - b.g;
    const double db = static_cast<double>(a.b) - b.b;
    return std::sqrt(dr * dr + dg * dg + db * db);
}

// Builds n distinct styles for rendering at the given resolution. Torso
// colors come from a fixed palette with pairwise distance >= 0.5 in [-1,1]
// units; sleeves are a darker shade of the torso, backgrounds a near-white
// tint of it. Head radius and limb width cycle through a few proportions so
// styles also differ geometrically.
inline std::vector<StyleSpec> default_styles(int n, int resolution) {
    if (n < 1 || n > detail::kMaxStyles)
        throw ConfigError("default_styles: style count must be in [1," +
                          std::to_string(detail::kMaxStyles) + "], got " + std::to_string(n));
    if (resolution < 16)
        throw ConfigError("default_styles: resolution must be >= 16, got " +
                          std::to_string(resolution));
    std::vector<StyleSpec> styles;
    styles.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const float* base = detail::kTorsoPalette[i];
        StyleSpec s;
        s.style_id = i;
        s.resolution = resolution;
        s.torso_color = {detail::to_signed(base[0]), detail::to_signed(base[1]),
                         detail::to_signed(base[2])};
        s.sleeve_color = detail::blend_to_signed(base, 0.0f, 0.55f);   // toward black
        s.background_color = detail::blend_to_signed(base, 1.0f, 0.12f);  // toward white
        const double res = static_cast<double>(resolution);
        s.head_radius_px = std::max(2.0, res * (0.055 + 0.005 * (i % 5)));
        s.limb_width_px = std::max(1.0, res * (0.022 + 0.004 * (i % 3)));
        styles.push_back(s);
    }
    return styles;
}

}  // namespace signsynth::synth
