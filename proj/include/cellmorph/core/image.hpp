#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cellmorph/core/error.hpp"
#include "cellmorph/core/tensor.hpp"

namespace cellmorph {

// Interleaved 8-bit image, H x W x C with channel fastest (same layout as
// Tensor). C is 1 for masks/label planes, 3 for RGB, 4 for stored samples.
struct ImageU8 {
    int h = 0, w = 0, c = 0;
    std::vector<std::uint8_t> pixels;

    ImageU8() = default;
    ImageU8(int h_, int w_, int c_) : h(h_), w(w_), c(c_), pixels(std::size_t(h_) * w_ * c_, 0) {}

    std::uint8_t& at(int y, int x, int ch) { return pixels[(std::size_t(y) * w + x) * c + ch]; }
    std::uint8_t at(int y, int x, int ch) const { return pixels[(std::size_t(y) * w + x) * c + ch]; }
    std::size_t size() const { return pixels.size(); }

    bool operator==(const ImageU8& o) const {
        return h == o.h && w == o.w && c == o.c && pixels == o.pixels;
    }
};

// 16-bit single-channel map; holds nucleus instance ids (0 = background).
struct ImageU16 {
    int h = 0, w = 0;
    std::vector<std::uint16_t> pixels;

    ImageU16() = default;
    ImageU16(int h_, int w_) : h(h_), w(w_), pixels(std::size_t(h_) * w_, 0) {}

    std::uint16_t& at(int y, int x) { return pixels[std::size_t(y) * w + x]; }
    std::uint16_t at(int y, int x) const { return pixels[std::size_t(y) * w + x]; }
};

template <typename Scalar = float>
Tensor<Scalar> to_float(const ImageU8& img) {
    Tensor<Scalar> t(img.h, img.w, img.c);
    for (std::int64_t i = 0; i < t.size(); ++i) t.array()[i] = Scalar(img.pixels[i]) / Scalar(255);
    return t;
}

template <typename Scalar>
ImageU8 to_u8(const Tensor<Scalar>& t) {
    ImageU8 img(t.h(), t.w(), t.c());
    for (std::int64_t i = 0; i < t.size(); ++i) {
        const Scalar v = t.array()[i] * Scalar(255) + Scalar(0.5);
        img.pixels[i] = std::uint8_t(v < 0 ? 0 : (v > 255 ? 255 : v));
    }
    return img;
}

}  // namespace cellmorph
