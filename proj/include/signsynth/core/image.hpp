#pragma once

// RGB image container ([3,H,W] float tensor, values in [-1,1]) and PNG I/O.
// PNG writes use fixed encoder settings so identical pixels give identical
// bytes.

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "signsynth/core/tensor.hpp"
#include "signsynth/errors.hpp"

namespace signsynth::img {

using Frame = nn::Tensor;  // [3,H,W], values in [-1,1]

struct Rgb {
    float r = 0, g = 0, b = 0;  // in [-1,1]
};

inline Frame make_frame(int h, int w, Rgb fill = {}) {
    Frame f({3, h, w});
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    for (std::int64_t i = 0; i < plane; ++i) {
        f[i] = fill.r;
        f[plane + i] = fill.g;
        f[2 * plane + i] = fill.b;
    }
    return f;
}

inline unsigned char to_byte(float v) {
    const float x = std::round((v + 1.0f) * 127.5f);
    return static_cast<unsigned char>(std::min(255.0f, std::max(0.0f, x)));
}

inline float from_byte(unsigned char b) { return static_cast<float>(b) / 255.0f * 2.0f - 1.0f; }

namespace detail {

struct PngWriteCloser {
    std::FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngReadCloser {
    std::FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

inline void write_png_bytes(const std::filesystem::path& path, const unsigned char* bytes,
                            int h, int w, int channels) {
    PngWriteCloser c;
    c.fp = std::fopen(path.string().c_str(), "wb");
    if (!c.fp) throw IoError("cannot open for write: " + path.string());
    c.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!c.png) throw IoError("png_create_write_struct failed");
    c.info = png_create_info_struct(c.png);
    if (!c.info) throw IoError("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(c.png))) throw IoError("png write failed: " + path.string());
    png_init_io(c.png, c.fp);
    png_set_compression_level(c.png, 6);
    png_set_IHDR(c.png, c.info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(c.png, c.info);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y)
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(bytes + static_cast<std::size_t>(y) * w * channels);
    png_write_image(c.png, rows.data());
    png_write_end(c.png, nullptr);
}

}  // namespace detail

inline void write_png(const std::filesystem::path& path, const Frame& frame) {
    if (frame.ndim() != 3 || frame.dim(0) != 3) throw Error("write_png: frame must be [3,H,W]");
    const int h = frame.dim(1), w = frame.dim(2);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    std::vector<unsigned char> bytes(static_cast<std::size_t>(plane) * 3);
    for (std::int64_t i = 0; i < plane; ++i) {
        bytes[static_cast<std::size_t>(i) * 3 + 0] = to_byte(frame[i]);
        bytes[static_cast<std::size_t>(i) * 3 + 1] = to_byte(frame[plane + i]);
        bytes[static_cast<std::size_t>(i) * 3 + 2] = to_byte(frame[2 * plane + i]);
    }
    detail::write_png_bytes(path, bytes.data(), h, w, 3);
}

// Grayscale write for [H,W] tensors with values in [0,1].
inline void write_png_gray(const std::filesystem::path& path, const nn::Tensor& img) {
    if (img.ndim() != 2) throw Error("write_png_gray: tensor must be [H,W]");
    const int h = img.dim(0), w = img.dim(1);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(h) * w);
    for (std::int64_t i = 0; i < img.size(); ++i) {
        const float x = std::round(std::min(1.0f, std::max(0.0f, img[i])) * 255.0f);
        bytes[static_cast<std::size_t>(i)] = static_cast<unsigned char>(x);
    }
    detail::write_png_bytes(path, bytes.data(), h, w, 1);
}

inline Frame read_png(const std::filesystem::path& path) {
    detail::PngReadCloser c;
    c.fp = std::fopen(path.string().c_str(), "rb");
    if (!c.fp) throw IoError("cannot open for read: " + path.string());
    c.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!c.png) throw IoError("png_create_read_struct failed");
    c.info = png_create_info_struct(c.png);
    if (!c.info) throw IoError("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(c.png))) throw IoError("png read failed: " + path.string());
    png_init_io(c.png, c.fp);
    png_read_info(c.png, c.info);
    const int w = static_cast<int>(png_get_image_width(c.png, c.info));
    const int h = static_cast<int>(png_get_image_height(c.png, c.info));
    const png_byte color = png_get_color_type(c.png, c.info);
    const png_byte depth = png_get_bit_depth(c.png, c.info);
    if (depth == 16) png_set_strip_16(c.png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(c.png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(c.png);
    if (png_get_valid(c.png, c.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(c.png);
    png_set_strip_alpha(c.png);
    png_read_update_info(c.png, c.info);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(h) * w * 3);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y)
        rows[static_cast<std::size_t>(y)] = bytes.data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(c.png, rows.data());
    Frame f({3, h, w});
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    for (std::int64_t i = 0; i < plane; ++i) {
        f[i] = from_byte(bytes[static_cast<std::size_t>(i) * 3 + 0]);
        f[plane + i] = from_byte(bytes[static_cast<std::size_t>(i) * 3 + 1]);
        f[2 * plane + i] = from_byte(bytes[static_cast<std::size_t>(i) * 3 + 2]);
    }
    return f;
}

}  // namespace signsynth::img
