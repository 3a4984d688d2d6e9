#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "cellmorph/core/error.hpp"
#include "cellmorph/core/rng.hpp"

namespace cellmorph {

// Dense H x W x C tensor, row-major with the channel index fastest, so a
// (H*W) x C Eigen matrix view of the same memory comes for free. This is the
// per-sample layout used throughout the network; batches are vectors of
// tensors (samples never share normalization state, see GroupNorm).
template <typename Scalar>
class Tensor {
public:
    using Vec = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
    using MatMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    using ConstMatMap =
        Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

    Tensor() = default;
    Tensor(int h, int w, int c) : h_(h), w_(w), c_(c), data_(Vec::Zero(std::int64_t(h) * w * c)) {}

    static Tensor constant(int h, int w, int c, Scalar v) {
        Tensor t(h, w, c);
        t.data_.setConstant(v);
        return t;
    }

    static Tensor random_uniform(int h, int w, int c, Rng& rng, Scalar lo = 0, Scalar hi = 1) {
        Tensor t(h, w, c);
        std::uniform_real_distribution<double> dist{double(lo), double(hi)};
        for (std::int64_t i = 0; i < t.data_.size(); ++i) t.data_[i] = Scalar(dist(rng));
        return t;
    }

    static Tensor random_normal(int h, int w, int c, Rng& rng, double stddev) {
        Tensor t(h, w, c);
        std::normal_distribution<double> dist(0.0, stddev);
        for (std::int64_t i = 0; i < t.data_.size(); ++i) t.data_[i] = Scalar(dist(rng));
        return t;
    }

    int h() const { return h_; }
    int w() const { return w_; }
    int c() const { return c_; }
    std::int64_t hw() const { return std::int64_t(h_) * w_; }
    std::int64_t size() const { return data_.size(); }
    bool empty() const { return data_.size() == 0; }

    Scalar& at(int y, int x, int ch) { return data_[(std::int64_t(y) * w_ + x) * c_ + ch]; }
    Scalar at(int y, int x, int ch) const { return data_[(std::int64_t(y) * w_ + x) * c_ + ch]; }

    Vec& array() { return data_; }
    const Vec& array() const { return data_; }
    Scalar* data() { return data_.data(); }
    const Scalar* data() const { return data_.data(); }

    // (H*W) x C matrix view over the same storage.
    MatMap as_matrix() { return MatMap(data_.data(), hw(), c_); }
    ConstMatMap as_matrix() const { return ConstMatMap(data_.data(), hw(), c_); }

    bool same_shape(const Tensor& o) const { return h_ == o.h_ && w_ == o.w_ && c_ == o.c_; }

    std::string shape_str() const {
        return std::to_string(h_) + "x" + std::to_string(w_) + "x" + std::to_string(c_);
    }

    Tensor channel(int ch) const {
        Tensor out(h_, w_, 1);
        for (std::int64_t i = 0; i < hw(); ++i) out.data_[i] = data_[i * c_ + ch];
        return out;
    }

    template <typename Other>
    Tensor<Other> cast() const {
        Tensor<Other> out(h_, w_, c_);
        out.array() = data_.template cast<Other>();
        return out;
    }

private:
    int h_ = 0, w_ = 0, c_ = 0;
    Vec data_;
};

template <typename Scalar>
using Batch = std::vector<Tensor<Scalar>>;

namespace detail {
// Mirror index without repeating the border sample (reflect-101).
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}
}  // namespace detail

template <typename Scalar>
Tensor<Scalar> pad_reflect(const Tensor<Scalar>& x, int top, int bottom, int left, int right) {
    Tensor<Scalar> out(x.h() + top + bottom, x.w() + left + right, x.c());
    for (int y = 0; y < out.h(); ++y) {
        const int sy = detail::reflect_index(y - top, x.h());
        for (int xx = 0; xx < out.w(); ++xx) {
            const int sx = detail::reflect_index(xx - left, x.w());
            for (int ch = 0; ch < x.c(); ++ch) out.at(y, xx, ch) = x.at(sy, sx, ch);
        }
    }
    return out;
}

template <typename Scalar>
Tensor<Scalar> crop(const Tensor<Scalar>& x, int y0, int x0, int h, int w) {
    if (y0 < 0 || x0 < 0 || y0 + h > x.h() || x0 + w > x.w())
        throw ShapeError("crop window " + std::to_string(h) + "x" + std::to_string(w) + "+" +
                         std::to_string(y0) + "+" + std::to_string(x0) + " outside tensor " +
                         x.shape_str());
    Tensor<Scalar> out(h, w, x.c());
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx)
            for (int ch = 0; ch < x.c(); ++ch) out.at(y, xx, ch) = x.at(y0 + y, x0 + xx, ch);
    return out;
}

template <typename Scalar>
Tensor<Scalar> concat_channels(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
    if (a.h() != b.h() || a.w() != b.w())
        throw ShapeError("concat_channels: spatial mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
    Tensor<Scalar> out(a.h(), a.w(), a.c() + b.c());
    for (std::int64_t i = 0; i < a.hw(); ++i) {
        for (int ch = 0; ch < a.c(); ++ch) out.array()[i * out.c() + ch] = a.array()[i * a.c() + ch];
        for (int ch = 0; ch < b.c(); ++ch)
            out.array()[i * out.c() + a.c() + ch] = b.array()[i * b.c() + ch];
    }
    return out;
}

// Inverse of concat_channels for gradients: splits the leading ca channels
// from the rest.
template <typename Scalar>
std::pair<Tensor<Scalar>, Tensor<Scalar>> split_channels(const Tensor<Scalar>& x, int ca) {
    Tensor<Scalar> a(x.h(), x.w(), ca), b(x.h(), x.w(), x.c() - ca);
    for (std::int64_t i = 0; i < x.hw(); ++i) {
        for (int ch = 0; ch < ca; ++ch) a.array()[i * ca + ch] = x.array()[i * x.c() + ch];
        for (int ch = 0; ch < b.c(); ++ch) b.array()[i * b.c() + ch] = x.array()[i * x.c() + ca + ch];
    }
    return {std::move(a), std::move(b)};
}

}  // namespace cellmorph
