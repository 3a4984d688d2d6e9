#include "cellmorph/augment/transforms.hpp"

#include <cmath>

#include "cellmorph/nn/ops.hpp"

namespace cellmorph::augment {

namespace {

constexpr double kPi = 3.14159265358979323846;

int reflect(int i, int n) { return detail::reflect_index(i, n); }

bool quarter_turn(double degrees, int& quarter) {
    const double q = degrees / 90.0;
    const double r = std::round(q);
    if (std::abs(q - r) > 1e-9) return false;
    quarter = int(std::llround(r)) % 4;
    if (quarter < 0) quarter += 4;
    return true;
}

double luminance(float r, float g, float b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    v = mx;
    const double d = mx - mn;
    s = mx == 0 ? 0 : d / mx;
    if (d == 0) {
        h = 0;
    } else if (mx == r) {
        h = std::fmod((g - b) / d, 6.0);
    } else if (mx == g) {
        h = (b - r) / d + 2.0;
    } else {
        h = (r - g) / d + 4.0;
    }
    h /= 6.0;
    if (h < 0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    const double hh = std::fmod(h, 1.0) * 6.0;
    const int i = int(hh) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1 - s), q = v * (1 - f * s), t = v * (1 - (1 - f) * s);
    switch (i) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

void clip01(Tensor<float>& t) {
    t.array() = t.array().cwiseMax(0.f).cwiseMin(1.f);
}

// 3x3 smoothing used as the sharpness reference (center-weighted box).
Tensor<float> smooth3x3(const Tensor<float>& x) {
    Tensor<float> y(x.h(), x.w(), x.c());
    for (int yy = 0; yy < x.h(); ++yy)
        for (int xx = 0; xx < x.w(); ++xx)
            for (int ch = 0; ch < x.c(); ++ch) {
                double acc = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const double wgt = (dy == 0 && dx == 0) ? 5.0 : 1.0;
                        acc += wgt * x.at(reflect(yy + dy, x.h()), reflect(xx + dx, x.w()), ch);
                    }
                y.at(yy, xx, ch) = float(acc / 13.0);
            }
    return y;
}

}  // namespace

ImageU8 resize_label_nearest(const ImageU8& label, int h2, int w2) {
    ImageU8 out(h2, w2, label.c);
    const double sy = double(label.h) / h2, sx = double(label.w) / w2;
    for (int y = 0; y < h2; ++y) {
        int iy = int((y + 0.5) * sy);
        if (iy >= label.h) iy = label.h - 1;
        for (int x = 0; x < w2; ++x) {
            int ix = int((x + 0.5) * sx);
            if (ix >= label.w) ix = label.w - 1;
            for (int ch = 0; ch < label.c; ++ch) out.at(y, x, ch) = label.at(iy, ix, ch);
        }
    }
    return out;
}

Tensor<float> rotate_image(const Tensor<float>& image, double degrees) {
    int quarter = 0;
    if (quarter_turn(degrees, quarter)) {
        if (quarter == 0) return image;
        const bool swap = quarter % 2 == 1;
        Tensor<float> out(swap ? image.w() : image.h(), swap ? image.h() : image.w(), image.c());
        for (int y = 0; y < out.h(); ++y)
            for (int x = 0; x < out.w(); ++x) {
                int sy = y, sx = x;
                switch (quarter) {
                    case 1: sy = image.h() - 1 - x; sx = y; break;
                    case 2: sy = image.h() - 1 - y; sx = image.w() - 1 - x; break;
                    default: sy = x; sx = image.w() - 1 - y; break;
                }
                for (int ch = 0; ch < image.c(); ++ch) out.at(y, x, ch) = image.at(sy, sx, ch);
            }
        return out;
    }
    const double th = degrees * kPi / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    const double cy = (image.h() - 1) / 2.0, cx = (image.w() - 1) / 2.0;
    Tensor<float> out(image.h(), image.w(), image.c());
    for (int y = 0; y < out.h(); ++y) {
        for (int x = 0; x < out.w(); ++x) {
            // Inverse rotation about the center.
            const double dx = x - cx, dy = y - cy;
            const double sxf = cx + c * dx + s * dy;
            const double syf = cy - s * dx + c * dy;
            const int x0 = int(std::floor(sxf)), y0 = int(std::floor(syf));
            const double wx = sxf - x0, wy = syf - y0;
            for (int ch = 0; ch < image.c(); ++ch) {
                const double v00 = image.at(reflect(y0, image.h()), reflect(x0, image.w()), ch);
                const double v01 = image.at(reflect(y0, image.h()), reflect(x0 + 1, image.w()), ch);
                const double v10 = image.at(reflect(y0 + 1, image.h()), reflect(x0, image.w()), ch);
                const double v11 =
                    image.at(reflect(y0 + 1, image.h()), reflect(x0 + 1, image.w()), ch);
                out.at(y, x, ch) = float((1 - wy) * ((1 - wx) * v00 + wx * v01) +
                                         wy * ((1 - wx) * v10 + wx * v11));
            }
        }
    }
    return out;
}

ImageU8 rotate_label(const ImageU8& label, double degrees) {
    int quarter = 0;
    if (quarter_turn(degrees, quarter)) {
        if (quarter == 0) return label;
        const bool swap = quarter % 2 == 1;
        ImageU8 out(swap ? label.w : label.h, swap ? label.h : label.w, label.c);
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x) {
                int sy = y, sx = x;
                switch (quarter) {
                    case 1: sy = label.h - 1 - x; sx = y; break;
                    case 2: sy = label.h - 1 - y; sx = label.w - 1 - x; break;
                    default: sy = x; sx = label.w - 1 - y; break;
                }
                for (int ch = 0; ch < label.c; ++ch) out.at(y, x, ch) = label.at(sy, sx, ch);
            }
        return out;
    }
    const double th = degrees * kPi / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    const double cy = (label.h - 1) / 2.0, cx = (label.w - 1) / 2.0;
    ImageU8 out(label.h, label.w, label.c);
    for (int y = 0; y < out.h; ++y) {
        for (int x = 0; x < out.w; ++x) {
            const double dx = x - cx, dy = y - cy;
            const int sx = reflect(int(std::lround(cx + c * dx + s * dy)), label.w);
            const int sy = reflect(int(std::lround(cy - s * dx + c * dy)), label.h);
            for (int ch = 0; ch < label.c; ++ch) out.at(y, x, ch) = label.at(sy, sx, ch);
        }
    }
    return out;
}

AugmentedPair apply(const ImageU8& image, const ImageU8* label, const AugmentParams& params) {
    if (image.c != 3)
        throw ValidationError("augment: image must be HxWx3, got " + std::to_string(image.c) +
                              " channels");
    if (label && (label->c != 1 || label->h != image.h || label->w != image.w))
        throw ValidationError("augment: label plane must be HxWx1 matching the image");

    AugmentedPair out;
    out.image = to_float<float>(image);
    if (label) out.label = *label;

    // Geometric phase, identical on image and label.
    const int h1 = int(std::lround(image.h * params.scale / params.aspect));
    const int w1 = int(std::lround(image.w * params.scale * params.aspect));
    if (h1 != image.h || w1 != image.w) {
        if (h1 < 1 || w1 < 1)
            throw ValidationError("augment: rescale collapses image to zero size");
        out.image = nn::resize_bilinear(out.image, h1, w1);
        if (label) out.label = resize_label_nearest(out.label, h1, w1);
    }
    if (params.rotation_deg != 0.0) {
        out.image = rotate_image(out.image, params.rotation_deg);
        if (label) out.label = rotate_label(out.label, params.rotation_deg);
    }

    // Photometric phase, image only.
    if (params.sharpness != 1.0) {
        const Tensor<float> smooth = smooth3x3(out.image);
        out.image.array() =
            smooth.array() + float(params.sharpness) * (out.image.array() - smooth.array());
    }
    if (params.brightness != 1.0) out.image.array() *= float(params.brightness);
    if (params.hue_shift != 0.0) {
        for (std::int64_t i = 0; i < out.image.hw(); ++i) {
            float* px = out.image.data() + i * 3;
            double h, s, v, r, g, b;
            rgb_to_hsv(px[0], px[1], px[2], h, s, v);
            h += params.hue_shift;
            if (h < 0) h += 1.0;
            hsv_to_rgb(h, s, v, r, g, b);
            px[0] = float(r);
            px[1] = float(g);
            px[2] = float(b);
        }
    }
    if (params.contrast != 1.0) {
        double mean = 0;
        for (std::int64_t i = 0; i < out.image.hw(); ++i) {
            const float* px = out.image.data() + i * 3;
            mean += luminance(px[0], px[1], px[2]);
        }
        mean /= double(out.image.hw());
        out.image.array() = float(mean) + float(params.contrast) * (out.image.array() - float(mean));
    }
    if (params.saturation != 1.0) {
        for (std::int64_t i = 0; i < out.image.hw(); ++i) {
            float* px = out.image.data() + i * 3;
            const float l = float(luminance(px[0], px[1], px[2]));
            for (int ch = 0; ch < 3; ++ch)
                px[ch] = l + float(params.saturation) * (px[ch] - l);
        }
    }
    clip01(out.image);

    if (params.noise_std > 0.0) {
        Rng nrng = derive_rng(params.noise_seed, 0xA06);
        std::normal_distribution<double> dist{0.0, params.noise_std};
        for (std::int64_t i = 0; i < out.image.size(); ++i)
            out.image.array()[i] += float(dist(nrng));
        clip01(out.image);
    }
    return out;
}

AugmentedPair augment(const ImageU8& image, const ImageU8* label,
                      const AugmentationPolicy& policy, Rng& rng) {
    return apply(image, label, sample_params(policy, rng));
}

namespace {

AugmentedPair pad_to_fit(const AugmentedPair& pair, int size) {
    if (size < 1) throw ValidationError("crop: size must be positive");
    if (pair.image.h() >= size && pair.image.w() >= size) return pair;
    AugmentedPair work = pair;
    const int pad_y = std::max(0, size - work.image.h());
    const int pad_x = std::max(0, size - work.image.w());
    const int top = pad_y / 2, left = pad_x / 2;
    work.image = pad_reflect(work.image, top, pad_y - top, left, pad_x - left);
    if (work.has_label()) {
        ImageU8 padded(work.image.h(), work.image.w(), 1);
        for (int y = 0; y < padded.h; ++y)
            for (int x = 0; x < padded.w; ++x)
                padded.at(y, x, 0) = pair.label.at(reflect(y - top, pair.label.h),
                                                   reflect(x - left, pair.label.w), 0);
        work.label = std::move(padded);
    }
    return work;
}

AugmentedPair crop_at(const AugmentedPair& work, int y0, int x0, int size) {
    AugmentedPair out;
    out.image = cellmorph::crop(work.image, y0, x0, size, size);
    if (work.has_label()) {
        out.label = ImageU8(size, size, 1);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) out.label.at(y, x, 0) = work.label.at(y0 + y, x0 + x, 0);
    }
    return out;
}

}  // namespace

AugmentedPair crop_random(const AugmentedPair& pair, int size, Rng& rng) {
    const AugmentedPair work = pad_to_fit(pair, size);
    const int y0 = uniform_int(rng, 0, work.image.h() - size);
    const int x0 = uniform_int(rng, 0, work.image.w() - size);
    return crop_at(work, y0, x0, size);
}

AugmentedPair crop_center(const AugmentedPair& pair, int size) {
    const AugmentedPair work = pad_to_fit(pair, size);
    return crop_at(work, (work.image.h() - size) / 2, (work.image.w() - size) / 2, size);
}

}  // namespace cellmorph::augment
