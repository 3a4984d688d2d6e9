#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "cellmorph/core/tensor.hpp"
#include "cellmorph/nn/ops.hpp"
#include "cellmorph/nn/param.hpp"

namespace cellmorph::nn {

// Layers follow one contract: forward() is const and thread-safe,
// forward_train() caches what backward() needs (single training writer per
// model), backward() returns the input gradient and accumulates parameter
// gradients for trainable params.

namespace detail {
// im2col tile budget in scalars (~16 MB of float); bounds peak memory when
// convolving large planes, e.g. full-resolution histology patches.
constexpr std::int64_t kColBudget = 1 << 22;
}  // namespace detail

// ---- Conv2d ----------------------------------------------------------------
// Square-kernel convolution via row-tiled im2col + GEMM. Weight layout is a
// (k*k*in_ch) x out_ch row-major matrix whose patch index runs (ky, kx, ci)
// with ci fastest, matching the channel-interleaved tensor layout.
template <typename Scalar>
class Conv2d {
public:
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using MatMap = Eigen::Map<Mat>;
    using ConstMatMap = Eigen::Map<const Mat>;

    Conv2d() = default;
    Conv2d(const std::string& name, int in_ch, int out_ch, int ksize, int stride, int pad,
           Rng& rng)
        : in_(in_ch), out_(out_ch), k_(ksize), stride_(stride), pad_(pad) {
        weight_.name = name + ".weight";
        weight_.value.resize(std::int64_t(k_) * k_ * in_ * out_);
        const double stddev = std::sqrt(2.0 / (double(k_) * k_ * in_));
        std::normal_distribution<double> dist(0.0, stddev);
        for (std::int64_t i = 0; i < weight_.value.size(); ++i)
            weight_.value[i] = Scalar(dist(rng));
        bias_.name = name + ".bias";
        bias_.value = Vec<Scalar>::Zero(out_);
    }

    int in_channels() const { return in_; }
    int out_channels() const { return out_; }
    int ksize() const { return k_; }

    void collect(ParamRefs<Scalar>& refs) {
        refs.push_back(&weight_);
        refs.push_back(&bias_);
    }

    Tensor<Scalar> forward(const Tensor<Scalar>& x) const {
        check_input(x);
        const int h2 = out_dim(x.h()), w2 = out_dim(x.w());
        Tensor<Scalar> y(h2, w2, out_);
        ConstMatMap wm(weight_.value.data(), std::int64_t(k_) * k_ * in_, out_);
        auto ym = y.as_matrix();
        const int tile = tile_rows(w2);
        Mat col(std::int64_t(tile) * w2, std::int64_t(k_) * k_ * in_);
        for (int y0 = 0; y0 < h2; y0 += tile) {
            const int rows = std::min(tile, h2 - y0);
            fill_col(x, y0, rows, w2, col);
            ym.middleRows(std::int64_t(y0) * w2, std::int64_t(rows) * w2).noalias() =
                col.topRows(std::int64_t(rows) * w2) * wm;
        }
        ym.rowwise() += bias_.value.matrix().transpose();
        return y;
    }

    Tensor<Scalar> forward_train(const Tensor<Scalar>& x) {
        cached_x_ = x;
        return forward(x);
    }

    Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) {
        const Tensor<Scalar>& x = cached_x_;
        const int h2 = grad_out.h(), w2 = grad_out.w();
        Tensor<Scalar> grad_in(x.h(), x.w(), in_);
        ConstMatMap wm(weight_.value.data(), std::int64_t(k_) * k_ * in_, out_);
        auto gm = grad_out.as_matrix();

        const bool train_w = weight_.trainable;
        if (train_w) weight_.ensure_grad();
        MatMap gwm(train_w ? weight_.grad.data() : scratch(wm.size()),
                   std::int64_t(k_) * k_ * in_, out_);

        const int tile = tile_rows(w2);
        Mat col(std::int64_t(tile) * w2, std::int64_t(k_) * k_ * in_);
        Mat colgrad(std::int64_t(tile) * w2, std::int64_t(k_) * k_ * in_);
        for (int y0 = 0; y0 < h2; y0 += tile) {
            const int rows = std::min(tile, h2 - y0);
            const auto gt = gm.middleRows(std::int64_t(y0) * w2, std::int64_t(rows) * w2);
            if (train_w) {
                fill_col(x, y0, rows, w2, col);
                gwm.noalias() += col.topRows(std::int64_t(rows) * w2).transpose() * gt;
            }
            colgrad.topRows(std::int64_t(rows) * w2).noalias() = gt * wm.transpose();
            scatter_col(colgrad, y0, rows, w2, grad_in);
        }
        bias_.add_grad(gm.colwise().sum().transpose().array());
        return grad_in;
    }

    Param<Scalar>& weight() { return weight_; }
    Param<Scalar>& bias() { return bias_; }
    const Param<Scalar>& weight() const { return weight_; }
    const Param<Scalar>& bias() const { return bias_; }

private:
    void check_input(const Tensor<Scalar>& x) const {
        if (x.c() != in_)
            throw ShapeError(weight_.name + ": expected " + std::to_string(in_) +
                             " input channels, got " + x.shape_str());
    }

    int out_dim(int n) const { return (n + 2 * pad_ - k_) / stride_ + 1; }

    int tile_rows(int w2) const {
        const std::int64_t per_row = std::int64_t(w2) * k_ * k_ * in_;
        return int(std::clamp<std::int64_t>(detail::kColBudget / std::max<std::int64_t>(per_row, 1),
                                            1, 1 << 20));
    }

    void fill_col(const Tensor<Scalar>& x, int y0, int rows, int w2, Mat& col) const {
        const int patch_c = in_;
        for (int r = 0; r < rows; ++r) {
            const int oy = y0 + r;
            for (int ox = 0; ox < w2; ++ox) {
                Scalar* dst = col.data() + (std::int64_t(r) * w2 + ox) * col.cols();
                for (int ky = 0; ky < k_; ++ky) {
                    const int sy = oy * stride_ - pad_ + ky;
                    for (int kx = 0; kx < k_; ++kx, dst += patch_c) {
                        const int sx = ox * stride_ - pad_ + kx;
                        if (sy < 0 || sy >= x.h() || sx < 0 || sx >= x.w()) {
                            std::memset(dst, 0, sizeof(Scalar) * patch_c);
                        } else {
                            std::memcpy(dst, x.data() + (std::int64_t(sy) * x.w() + sx) * patch_c,
                                        sizeof(Scalar) * patch_c);
                        }
                    }
                }
            }
        }
    }

    void scatter_col(const Mat& colgrad, int y0, int rows, int w2, Tensor<Scalar>& grad_in) const {
        const int patch_c = in_;
        for (int r = 0; r < rows; ++r) {
            const int oy = y0 + r;
            for (int ox = 0; ox < w2; ++ox) {
                const Scalar* src = colgrad.data() + (std::int64_t(r) * w2 + ox) * colgrad.cols();
                for (int ky = 0; ky < k_; ++ky) {
                    const int sy = oy * stride_ - pad_ + ky;
                    for (int kx = 0; kx < k_; ++kx, src += patch_c) {
                        const int sx = ox * stride_ - pad_ + kx;
                        if (sy < 0 || sy >= grad_in.h() || sx < 0 || sx >= grad_in.w()) continue;
                        Eigen::Map<Vec<Scalar>>(
                            grad_in.data() + (std::int64_t(sy) * grad_in.w() + sx) * patch_c,
                            patch_c) += Eigen::Map<const Vec<Scalar>>(src, patch_c);
                    }
                }
            }
        }
    }

    Scalar* scratch(std::int64_t n) {
        scratch_.resize(n);
        scratch_.setZero();
        return scratch_.data();
    }

    int in_ = 0, out_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
    Param<Scalar> weight_, bias_;
    Tensor<Scalar> cached_x_;
    Vec<Scalar> scratch_;
};

// ---- DepthwiseConv3x3 -------------------------------------------------------
// 3x3 depthwise convolution, pad 1. Weight is 9 taps x C, tap-major, so each
// tap is a contiguous channel vector.
template <typename Scalar>
class DepthwiseConv3x3 {
public:
    DepthwiseConv3x3() = default;
    DepthwiseConv3x3(const std::string& name, int channels, int stride, Rng& rng)
        : c_(channels), stride_(stride) {
        weight_.name = name + ".weight";
        weight_.value.resize(9 * std::int64_t(c_));
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / 9.0));
        for (std::int64_t i = 0; i < weight_.value.size(); ++i)
            weight_.value[i] = Scalar(dist(rng));
        bias_.name = name + ".bias";
        bias_.value = Vec<Scalar>::Zero(c_);
    }

    void collect(ParamRefs<Scalar>& refs) {
        refs.push_back(&weight_);
        refs.push_back(&bias_);
    }

    Param<Scalar>& weight() { return weight_; }
    Param<Scalar>& bias() { return bias_; }
    const Param<Scalar>& weight() const { return weight_; }
    const Param<Scalar>& bias() const { return bias_; }

    Tensor<Scalar> forward(const Tensor<Scalar>& x) const {
        if (x.c() != c_)
            throw ShapeError(weight_.name + ": expected " + std::to_string(c_) +
                             " channels, got " + x.shape_str());
        const int h2 = (x.h() + 2 - 3) / stride_ + 1, w2 = (x.w() + 2 - 3) / stride_ + 1;
        Tensor<Scalar> y(h2, w2, c_);
        for (int oy = 0; oy < h2; ++oy) {
            for (int ox = 0; ox < w2; ++ox) {
                Eigen::Map<Vec<Scalar>> acc(y.data() + (std::int64_t(oy) * w2 + ox) * c_, c_);
                acc = bias_.value;
                for (int tap = 0; tap < 9; ++tap) {
                    const int sy = oy * stride_ - 1 + tap / 3;
                    const int sx = ox * stride_ - 1 + tap % 3;
                    if (sy < 0 || sy >= x.h() || sx < 0 || sx >= x.w()) continue;
                    Eigen::Map<const Vec<Scalar>> xr(
                        x.data() + (std::int64_t(sy) * x.w() + sx) * c_, c_);
                    Eigen::Map<const Vec<Scalar>> wt(weight_.value.data() + tap * c_, c_);
                    acc += wt * xr;
                }
            }
        }
        return y;
    }

    Tensor<Scalar> forward_train(const Tensor<Scalar>& x) {
        cached_x_ = x;
        return forward(x);
    }

    Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) {
        const Tensor<Scalar>& x = cached_x_;
        Tensor<Scalar> grad_in(x.h(), x.w(), c_);
        const bool train_w = weight_.trainable;
        if (train_w) weight_.ensure_grad();
        for (int oy = 0; oy < grad_out.h(); ++oy) {
            for (int ox = 0; ox < grad_out.w(); ++ox) {
                Eigen::Map<const Vec<Scalar>> go(
                    grad_out.data() + (std::int64_t(oy) * grad_out.w() + ox) * c_, c_);
                for (int tap = 0; tap < 9; ++tap) {
                    const int sy = oy * stride_ - 1 + tap / 3;
                    const int sx = ox * stride_ - 1 + tap % 3;
                    if (sy < 0 || sy >= x.h() || sx < 0 || sx >= x.w()) continue;
                    Eigen::Map<const Vec<Scalar>> xr(
                        x.data() + (std::int64_t(sy) * x.w() + sx) * c_, c_);
                    Eigen::Map<const Vec<Scalar>> wt(weight_.value.data() + tap * c_, c_);
                    Eigen::Map<Vec<Scalar>> gi(
                        grad_in.data() + (std::int64_t(sy) * x.w() + sx) * c_, c_);
                    gi += wt * go;
                    if (train_w)
                        Eigen::Map<Vec<Scalar>>(weight_.grad.data() + tap * c_, c_) += xr * go;
                }
            }
        }
        bias_.add_grad(grad_out.as_matrix().colwise().sum().transpose().array());
        return grad_in;
    }

private:
    int c_ = 0, stride_ = 1;
    Param<Scalar> weight_, bias_;
    Tensor<Scalar> cached_x_;
};

// ---- ConvTranspose2x2 -------------------------------------------------------
// Kernel 2, stride 2 transposed convolution: exact 2x upscaling with no
// overlap, so each input pixel maps linearly onto a 2x2 output block and the
// whole op is one GEMM per row. Weight layout: in_ch x (4*out_ch), column
// index (dy*2+dx)*out_ch + o.
template <typename Scalar>
class ConvTranspose2x2 {
public:
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    ConvTranspose2x2() = default;
    ConvTranspose2x2(const std::string& name, int in_ch, int out_ch, Rng& rng)
        : in_(in_ch), out_(out_ch) {
        weight_.name = name + ".weight";
        weight_.value.resize(std::int64_t(in_) * 4 * out_);
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / in_));
        for (std::int64_t i = 0; i < weight_.value.size(); ++i)
            weight_.value[i] = Scalar(dist(rng));
        bias_.name = name + ".bias";
        bias_.value = Vec<Scalar>::Zero(out_);
    }

    void collect(ParamRefs<Scalar>& refs) {
        refs.push_back(&weight_);
        refs.push_back(&bias_);
    }

    Param<Scalar>& weight() { return weight_; }
    Param<Scalar>& bias() { return bias_; }
    const Param<Scalar>& weight() const { return weight_; }
    const Param<Scalar>& bias() const { return bias_; }

    Tensor<Scalar> forward(const Tensor<Scalar>& x) const {
        if (x.c() != in_)
            throw ShapeError(weight_.name + ": expected " + std::to_string(in_) +
                             " channels, got " + x.shape_str());
        Tensor<Scalar> y(2 * x.h(), 2 * x.w(), out_);
        Eigen::Map<const Mat> wm(weight_.value.data(), in_, 4 * out_);
        Mat row_out(x.w(), 4 * out_);
        for (int iy = 0; iy < x.h(); ++iy) {
            Eigen::Map<const Mat> xr(x.data() + std::int64_t(iy) * x.w() * in_, x.w(), in_);
            row_out.noalias() = xr * wm;
            for (int ix = 0; ix < x.w(); ++ix) {
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        Eigen::Map<Vec<Scalar>> dst(
                            y.data() + (std::int64_t(2 * iy + dy) * y.w() + 2 * ix + dx) * out_,
                            out_);
                        Eigen::Map<const Vec<Scalar>> src(
                            row_out.data() + (std::int64_t(ix) * 4 + (dy * 2 + dx)) * out_, out_);
                        dst = src + bias_.value;
                    }
                }
            }
        }
        return y;
    }

    Tensor<Scalar> forward_train(const Tensor<Scalar>& x) {
        cached_x_ = x;
        return forward(x);
    }

    Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) {
        const Tensor<Scalar>& x = cached_x_;
        Tensor<Scalar> grad_in(x.h(), x.w(), in_);
        Eigen::Map<const Mat> wm(weight_.value.data(), in_, 4 * out_);
        const bool train_w = weight_.trainable;
        if (train_w) weight_.ensure_grad();
        Mat gathered(x.w(), 4 * out_);
        for (int iy = 0; iy < x.h(); ++iy) {
            for (int ix = 0; ix < x.w(); ++ix) {
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx)
                        Eigen::Map<Vec<Scalar>>(
                            gathered.data() + (std::int64_t(ix) * 4 + dy * 2 + dx) * out_, out_) =
                            Eigen::Map<const Vec<Scalar>>(
                                grad_out.data() +
                                    (std::int64_t(2 * iy + dy) * grad_out.w() + 2 * ix + dx) *
                                        out_,
                                out_);
            }
            Eigen::Map<const Mat> xr(x.data() + std::int64_t(iy) * x.w() * in_, x.w(), in_);
            if (train_w) {
                Eigen::Map<Mat> gwm(weight_.grad.data(), in_, 4 * out_);
                gwm.noalias() += xr.transpose() * gathered;
            }
            Eigen::Map<Mat> gi(grad_in.data() + std::int64_t(iy) * x.w() * in_, x.w(), in_);
            gi.noalias() = gathered * wm.transpose();
        }
        bias_.add_grad(grad_out.as_matrix().colwise().sum().transpose().array());
        return grad_in;
    }

private:
    int in_ = 0, out_ = 0;
    Param<Scalar> weight_, bias_;
    Tensor<Scalar> cached_x_;
};

// ---- GroupNorm --------------------------------------------------------------
// Per-sample normalization over channel groups; no batch statistics, so
// train and inference paths are identical and batch composition never leaks
// into single-sample outputs.
template <typename Scalar>
class GroupNorm {
public:
    GroupNorm() = default;
    GroupNorm(const std::string& name, int channels, int groups = 1) : c_(channels), g_(groups) {
        if (c_ % g_ != 0)
            throw ShapeError(name + ": channels " + std::to_string(c_) +
                             " not divisible by groups " + std::to_string(g_));
        gamma_.name = name + ".gamma";
        gamma_.value = Vec<Scalar>::Constant(c_, Scalar(1));
        beta_.name = name + ".beta";
        beta_.value = Vec<Scalar>::Zero(c_);
    }

    void collect(ParamRefs<Scalar>& refs) {
        refs.push_back(&gamma_);
        refs.push_back(&beta_);
    }

    Tensor<Scalar> forward(const Tensor<Scalar>& x) const {
        Tensor<Scalar> xhat(x.h(), x.w(), c_);
        Vec<Scalar> inv_std(g_);
        normalize(x, xhat, inv_std);
        Tensor<Scalar> y(x.h(), x.w(), c_);
        y.as_matrix() = xhat.as_matrix().array().rowwise() *
                        gamma_.value.matrix().transpose().array();
        y.as_matrix().rowwise() += beta_.value.matrix().transpose();
        return y;
    }

    Tensor<Scalar> forward_train(const Tensor<Scalar>& x) {
        cached_xhat_ = Tensor<Scalar>(x.h(), x.w(), c_);
        cached_inv_std_.resize(g_);
        normalize(x, cached_xhat_, cached_inv_std_);
        Tensor<Scalar> y(x.h(), x.w(), c_);
        y.as_matrix() = cached_xhat_.as_matrix().array().rowwise() *
                        gamma_.value.matrix().transpose().array();
        y.as_matrix().rowwise() += beta_.value.matrix().transpose();
        return y;
    }

    Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) {
        const Tensor<Scalar>& xhat = cached_xhat_;
        const std::int64_t hw = xhat.hw();
        const int cpg = c_ / g_;
        const Scalar m = Scalar(hw * cpg);
        Tensor<Scalar> grad_in(xhat.h(), xhat.w(), c_);

        gamma_.add_grad((grad_out.as_matrix().array() * xhat.as_matrix().array())
                            .colwise()
                            .sum()
                            .transpose());
        beta_.add_grad(grad_out.as_matrix().colwise().sum().transpose().array());

        for (int gi = 0; gi < g_; ++gi) {
            const int c0 = gi * cpg;
            // dxhat = g * gamma; reduce the two group sums, then combine.
            Scalar sum_d = 0, sum_dx = 0;
            for (std::int64_t i = 0; i < hw; ++i) {
                for (int ch = 0; ch < cpg; ++ch) {
                    const Scalar d =
                        grad_out.array()[i * c_ + c0 + ch] * gamma_.value[c0 + ch];
                    sum_d += d;
                    sum_dx += d * xhat.array()[i * c_ + c0 + ch];
                }
            }
            const Scalar inv = cached_inv_std_[gi];
            for (std::int64_t i = 0; i < hw; ++i) {
                for (int ch = 0; ch < cpg; ++ch) {
                    const std::int64_t idx = i * c_ + c0 + ch;
                    const Scalar d = grad_out.array()[idx] * gamma_.value[c0 + ch];
                    grad_in.array()[idx] =
                        inv / m * (m * d - sum_d - xhat.array()[idx] * sum_dx);
                }
            }
        }
        return grad_in;
    }

private:
    void normalize(const Tensor<Scalar>& x, Tensor<Scalar>& xhat, Vec<Scalar>& inv_std) const {
        if (x.c() != c_)
            throw ShapeError(gamma_.name + ": expected " + std::to_string(c_) +
                             " channels, got " + x.shape_str());
        const std::int64_t hw = x.hw();
        const int cpg = c_ / g_;
        const Scalar m = Scalar(hw * cpg);
        for (int gi = 0; gi < g_; ++gi) {
            const int c0 = gi * cpg;
            Scalar sum = 0, sq = 0;
            for (std::int64_t i = 0; i < hw; ++i) {
                for (int ch = 0; ch < cpg; ++ch) {
                    const Scalar v = x.array()[i * c_ + c0 + ch];
                    sum += v;
                    sq += v * v;
                }
            }
            const Scalar mean = sum / m;
            const Scalar var = sq / m - mean * mean;
            const Scalar inv = Scalar(1) / std::sqrt(var + Scalar(1e-5));
            inv_std[gi] = inv;
            for (std::int64_t i = 0; i < hw; ++i)
                for (int ch = 0; ch < cpg; ++ch) {
                    const std::int64_t idx = i * c_ + c0 + ch;
                    xhat.array()[idx] = (x.array()[idx] - mean) * inv;
                }
        }
    }

    int c_ = 0, g_ = 1;
    Param<Scalar> gamma_, beta_;
    Tensor<Scalar> cached_xhat_;
    Vec<Scalar> cached_inv_std_;
};

// ---- Dense ------------------------------------------------------------------
template <typename Scalar>
class Dense {
public:
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    Dense() = default;
    Dense(const std::string& name, int in_dim, int out_dim, Rng& rng) : in_(in_dim), out_(out_dim) {
        weight_.name = name + ".weight";
        weight_.value.resize(std::int64_t(out_) * in_);
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / in_));
        for (std::int64_t i = 0; i < weight_.value.size(); ++i)
            weight_.value[i] = Scalar(dist(rng));
        bias_.name = name + ".bias";
        bias_.value = Vec<Scalar>::Zero(out_);
    }

    int in_dim() const { return in_; }
    int out_dim() const { return out_; }

    void collect(ParamRefs<Scalar>& refs) {
        refs.push_back(&weight_);
        refs.push_back(&bias_);
    }

    Param<Scalar>& weight() { return weight_; }
    Param<Scalar>& bias() { return bias_; }
    const Param<Scalar>& weight() const { return weight_; }
    const Param<Scalar>& bias() const { return bias_; }

    Vec<Scalar> forward(const Vec<Scalar>& x) const {
        Eigen::Map<const Mat> wm(weight_.value.data(), out_, in_);
        return (wm * x.matrix()).array() + bias_.value;
    }

    Vec<Scalar> forward_train(const Vec<Scalar>& x) {
        cached_x_ = x;
        return forward(x);
    }

    Vec<Scalar> backward(const Vec<Scalar>& grad_out) {
        Eigen::Map<const Mat> wm(weight_.value.data(), out_, in_);
        if (weight_.trainable) {
            weight_.ensure_grad();
            Eigen::Map<Mat> gwm(weight_.grad.data(), out_, in_);
            gwm.noalias() += grad_out.matrix() * cached_x_.matrix().transpose();
        }
        bias_.add_grad(grad_out);
        return (wm.transpose() * grad_out.matrix()).array();
    }

private:
    int in_ = 0, out_ = 0;
    Param<Scalar> weight_, bias_;
    Vec<Scalar> cached_x_;
};

// ---- Dropout ----------------------------------------------------------------
// Inverted dropout on feature vectors. Identity in inference.
template <typename Scalar>
class Dropout {
public:
    Dropout() = default;
    explicit Dropout(Scalar rate) : rate_(rate) {}

    Scalar rate() const { return rate_; }

    Vec<Scalar> forward(const Vec<Scalar>& x) const { return x; }

    Vec<Scalar> forward_train(const Vec<Scalar>& x, Rng& rng) {
        mask_.resize(x.size());
        const Scalar keep = Scalar(1) - rate_;
        std::bernoulli_distribution dist{double(keep)};
        for (std::int64_t i = 0; i < x.size(); ++i)
            mask_[i] = dist(rng) ? Scalar(1) / keep : Scalar(0);
        return x * mask_;
    }

    Vec<Scalar> backward(const Vec<Scalar>& grad_out) const { return grad_out * mask_; }

private:
    Scalar rate_ = 0;
    Vec<Scalar> mask_;
};

}  // namespace cellmorph::nn
