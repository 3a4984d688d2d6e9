#pragma once

#include <cmath>

#include "cellmorph/core/tensor.hpp"

namespace cellmorph::nn {

template <typename Scalar>
using Vec = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

// ---- activations ---------------------------------------------------------
// Smooth activations throughout: the finite-difference gradient audit in the
// test suite assumes a C1 loss surface.

template <typename Scalar>
Tensor<Scalar> swish(const Tensor<Scalar>& x) {
    Tensor<Scalar> y(x.h(), x.w(), x.c());
    y.array() = x.array() / (Scalar(1) + (-x.array()).exp());
    return y;
}

// d/dx [x*s(x)] = s(x) * (1 + x * (1 - s(x)))
template <typename Scalar>
Tensor<Scalar> swish_backward(const Tensor<Scalar>& grad_out, const Tensor<Scalar>& x) {
    Tensor<Scalar> g(x.h(), x.w(), x.c());
    auto s = (Scalar(1) / (Scalar(1) + (-x.array()).exp())).eval();
    g.array() = grad_out.array() * s * (Scalar(1) + x.array() * (Scalar(1) - s));
    return g;
}

template <typename Scalar>
Tensor<Scalar> sigmoid(const Tensor<Scalar>& x) {
    Tensor<Scalar> y(x.h(), x.w(), x.c());
    y.array() = Scalar(1) / (Scalar(1) + (-x.array()).exp());
    return y;
}

// y is the sigmoid output.
template <typename Scalar>
Tensor<Scalar> sigmoid_backward(const Tensor<Scalar>& grad_out, const Tensor<Scalar>& y) {
    Tensor<Scalar> g(y.h(), y.w(), y.c());
    g.array() = grad_out.array() * y.array() * (Scalar(1) - y.array());
    return g;
}

// Per-pixel softmax over the channel dimension.
template <typename Scalar>
Tensor<Scalar> softmax_channels(const Tensor<Scalar>& x) {
    Tensor<Scalar> y(x.h(), x.w(), x.c());
    const int c = x.c();
    for (std::int64_t i = 0; i < x.hw(); ++i) {
        Eigen::Map<const Vec<Scalar>> xi(x.data() + i * c, c);
        Eigen::Map<Vec<Scalar>> yi(y.data() + i * c, c);
        yi = (xi - xi.maxCoeff()).exp();
        yi /= yi.sum();
    }
    return y;
}

// y is the softmax output; dL/dz_c = y_c * (g_c - sum_k g_k y_k).
template <typename Scalar>
Tensor<Scalar> softmax_backward(const Tensor<Scalar>& grad_out, const Tensor<Scalar>& y) {
    Tensor<Scalar> g(y.h(), y.w(), y.c());
    const int c = y.c();
    for (std::int64_t i = 0; i < y.hw(); ++i) {
        Eigen::Map<const Vec<Scalar>> yi(y.data() + i * c, c);
        Eigen::Map<const Vec<Scalar>> gi(grad_out.data() + i * c, c);
        Eigen::Map<Vec<Scalar>> oi(g.data() + i * c, c);
        const Scalar dot = (gi * yi).sum();
        oi = yi * (gi - dot);
    }
    return g;
}

// ---- pooling --------------------------------------------------------------

template <typename Scalar>
Vec<Scalar> global_avg_pool(const Tensor<Scalar>& x) {
    return x.as_matrix().colwise().mean().transpose().array();
}

template <typename Scalar>
Tensor<Scalar> global_avg_pool_backward(const Vec<Scalar>& grad_vec, int h, int w) {
    Tensor<Scalar> g(h, w, int(grad_vec.size()));
    const Scalar inv = Scalar(1) / Scalar(std::int64_t(h) * w);
    g.as_matrix().rowwise() = (grad_vec * inv).matrix().transpose();
    return g;
}

// ---- resampling ------------------------------------------------------------
// Half-pixel-center convention (src = (dst + 0.5) * scale - 0.5), matching
// the usual align_corners=false behavior.

template <typename Scalar>
Tensor<Scalar> resize_bilinear(const Tensor<Scalar>& x, int h2, int w2) {
    Tensor<Scalar> y(h2, w2, x.c());
    const double sy = double(x.h()) / h2, sx = double(x.w()) / w2;
    for (int oy = 0; oy < h2; ++oy) {
        double fy = (oy + 0.5) * sy - 0.5;
        if (fy < 0) fy = 0;
        if (fy > x.h() - 1) fy = x.h() - 1;
        const int y0 = int(fy), y1 = y0 + 1 < x.h() ? y0 + 1 : y0;
        const Scalar wy = Scalar(fy - y0);
        for (int ox = 0; ox < w2; ++ox) {
            double fx = (ox + 0.5) * sx - 0.5;
            if (fx < 0) fx = 0;
            if (fx > x.w() - 1) fx = x.w() - 1;
            const int x0 = int(fx), x1 = x0 + 1 < x.w() ? x0 + 1 : x0;
            const Scalar wx = Scalar(fx - x0);
            for (int ch = 0; ch < x.c(); ++ch) {
                const Scalar top = x.at(y0, x0, ch) * (Scalar(1) - wx) + x.at(y0, x1, ch) * wx;
                const Scalar bot = x.at(y1, x0, ch) * (Scalar(1) - wx) + x.at(y1, x1, ch) * wx;
                y.at(oy, ox, ch) = top * (Scalar(1) - wy) + bot * wy;
            }
        }
    }
    return y;
}

// Adjoint of resize_bilinear: scatters each output gradient onto its (up to
// four) source taps. Only ever used for the fixed 2x decoder upsample, but
// written for the general case.
template <typename Scalar>
Tensor<Scalar> resize_bilinear_backward(const Tensor<Scalar>& grad_out, int h, int w) {
    Tensor<Scalar> g(h, w, grad_out.c());
    const double sy = double(h) / grad_out.h(), sx = double(w) / grad_out.w();
    for (int oy = 0; oy < grad_out.h(); ++oy) {
        double fy = (oy + 0.5) * sy - 0.5;
        if (fy < 0) fy = 0;
        if (fy > h - 1) fy = h - 1;
        const int y0 = int(fy), y1 = y0 + 1 < h ? y0 + 1 : y0;
        const Scalar wy = Scalar(fy - y0);
        for (int ox = 0; ox < grad_out.w(); ++ox) {
            double fx = (ox + 0.5) * sx - 0.5;
            if (fx < 0) fx = 0;
            if (fx > w - 1) fx = w - 1;
            const int x0 = int(fx), x1 = x0 + 1 < w ? x0 + 1 : x0;
            const Scalar wx = Scalar(fx - x0);
            for (int ch = 0; ch < grad_out.c(); ++ch) {
                const Scalar go = grad_out.at(oy, ox, ch);
                g.at(y0, x0, ch) += go * (Scalar(1) - wy) * (Scalar(1) - wx);
                g.at(y0, x1, ch) += go * (Scalar(1) - wy) * wx;
                g.at(y1, x0, ch) += go * wy * (Scalar(1) - wx);
                g.at(y1, x1, ch) += go * wy * wx;
            }
        }
    }
    return g;
}

template <typename Scalar>
Vec<Scalar> softmax_vec(const Vec<Scalar>& x) {
    Vec<Scalar> y = (x - x.maxCoeff()).exp();
    return y / y.sum();
}

template <typename Scalar>
Vec<Scalar> softmax_vec_backward(const Vec<Scalar>& grad_out, const Vec<Scalar>& y) {
    return y * (grad_out - (grad_out * y).sum());
}

template <typename Scalar>
Tensor<Scalar> resize_nearest(const Tensor<Scalar>& x, int h2, int w2) {
    Tensor<Scalar> y(h2, w2, x.c());
    const double sy = double(x.h()) / h2, sx = double(x.w()) / w2;
    for (int oy = 0; oy < h2; ++oy) {
        int iy = int((oy + 0.5) * sy);
        if (iy >= x.h()) iy = x.h() - 1;
        for (int ox = 0; ox < w2; ++ox) {
            int ix = int((ox + 0.5) * sx);
            if (ix >= x.w()) ix = x.w() - 1;
            for (int ch = 0; ch < x.c(); ++ch) y.at(oy, ox, ch) = x.at(iy, ix, ch);
        }
    }
    return y;
}

}  // namespace cellmorph::nn
