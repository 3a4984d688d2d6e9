#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cellmorph/nn/layers.hpp"
#include "cellmorph/nn/ops.hpp"
#include "support/oracles.hpp"

using namespace cellmorph;
using testutil::rel_err;

namespace {

// 0.5 * sum(y^2): its gradient w.r.t. y is y itself, so every layer can be
// checked end to end without a separate loss layer.
template <typename Scalar>
double half_sq(const Tensor<Scalar>& y) {
    return 0.5 * double(y.array().template cast<double>().square().sum());
}

// Checks d(half_sq(layer(x)))/dx against the layer's returned input grad.
template <typename Layer>
void check_input_grad(Layer& layer, Tensor<double>& x, int n = 30, double tol = 1e-6) {
    Rng rng = make_rng(99);
    auto y = layer.forward_train(x);
    auto gin = layer.backward(y);
    REQUIRE(gin.same_shape(x));
    for (int i = 0; i < n; ++i) {
        const std::int64_t idx = uniform_int(rng, 0, int(x.size() - 1));
        const double numeric = testutil::fd_entry(x.array(), idx, 1e-6,
                                                  [&] { return half_sq(layer.forward(x)); });
        CHECK(rel_err(double(gin.array()[idx]), numeric) < tol);
    }
}

template <typename Layer>
void check_param_grads(Layer& layer, const Tensor<double>& x, int n = 40, double tol = 1e-6) {
    nn::ParamRefs<double> params;
    layer.collect(params);
    Rng rng = make_rng(123);
    auto res = testutil::check_param_gradients<double>(
        params,
        [&] {
            for (auto* p : params) p->zero_grad();
            auto y = layer.forward_train(x);
            layer.backward(y);
            return half_sq(y);
        },
        [&] { return half_sq(layer.forward(x)); }, n, rng, 1e-6, tol);
    CHECK(res.failed == 0);
    CHECK(res.checked == n);
}

}  // namespace

TEST_CASE("activations match closed forms") {
    Tensor<double> x(1, 3, 1);
    x.at(0, 0, 0) = 0.0;
    x.at(0, 1, 0) = 2.0;
    x.at(0, 2, 0) = -1.5;
    auto s = nn::sigmoid(x);
    CHECK(s.at(0, 0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.at(0, 1, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
    auto w = nn::swish(x);
    CHECK(w.at(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(w.at(0, 1, 0) == doctest::Approx(2.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
    CHECK(w.at(0, 2, 0) == doctest::Approx(-1.5 / (1.0 + std::exp(1.5))).epsilon(1e-12));
}

TEST_CASE("activation backward passes match finite differences") {
    Rng rng = make_rng(17);
    auto x = Tensor<double>::random_uniform(3, 4, 5, rng, -2.0, 2.0);

    auto grad = Tensor<double>::random_uniform(3, 4, 5, rng, -1.0, 1.0);
    auto gsw = nn::swish_backward(grad, x);
    auto y = nn::sigmoid(x);
    auto gsi = nn::sigmoid_backward(grad, y);
    for (std::int64_t i = 0; i < x.size(); i += 7) {
        const double swish_fd = testutil::fd_entry(x.array(), i, 1e-6, [&] {
            return double((nn::swish(x).array() * grad.array()).sum());
        });
        CHECK(rel_err(double(gsw.array()[i]), swish_fd) < 1e-6);
        const double sig_fd = testutil::fd_entry(x.array(), i, 1e-6, [&] {
            return double((nn::sigmoid(x).array() * grad.array()).sum());
        });
        CHECK(rel_err(double(gsi.array()[i]), sig_fd) < 1e-6);
    }
}

TEST_CASE("softmax_channels rows are distributions and backward is exact") {
    Rng rng = make_rng(23);
    auto x = Tensor<double>::random_uniform(4, 5, 7, rng, -3.0, 3.0);
    auto y = nn::softmax_channels(x);
    for (std::int64_t i = 0; i < y.hw(); ++i) {
        double sum = 0;
        for (int ch = 0; ch < 7; ++ch) sum += y.array()[i * 7 + ch];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    auto grad = Tensor<double>::random_uniform(4, 5, 7, rng, -1.0, 1.0);
    auto g = nn::softmax_backward(grad, y);
    for (std::int64_t i = 0; i < x.size(); i += 11) {
        const double fd = testutil::fd_entry(x.array(), i, 1e-6, [&] {
            return double((nn::softmax_channels(x).array() * grad.array()).sum());
        });
        CHECK(rel_err(double(g.array()[i]), fd) < 1e-5);
    }

    // large logits stay finite (max subtraction)
    Tensor<double> hot(1, 1, 3);
    hot.at(0, 0, 0) = 1e4;
    auto stable = nn::softmax_channels(hot);
    CHECK(std::isfinite(stable.at(0, 0, 0)));
    CHECK(stable.at(0, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("softmax_vec matches channel softmax semantics") {
    nn::Vec<double> v(4);
    v << 0.5, -1.0, 2.0, 0.0;
    auto y = nn::softmax_vec(v);
    CHECK(y.sum() == doctest::Approx(1.0).epsilon(1e-12));
    nn::Vec<double> g(4);
    g << 1.0, -0.5, 0.25, 2.0;
    auto gi = nn::softmax_vec_backward(g, y);
    for (int i = 0; i < 4; ++i) {
        const double fd = testutil::fd_entry(v, i, 1e-6,
                                             [&] { return double((nn::softmax_vec(v) * g).sum()); });
        CHECK(rel_err(double(gi[i]), fd) < 1e-6);
    }
}

TEST_CASE("global_avg_pool and its backward form an adjoint pair") {
    Rng rng = make_rng(31);
    auto x = Tensor<double>::random_uniform(5, 6, 3, rng, -1.0, 1.0);
    auto pooled = nn::global_avg_pool(x);
    REQUIRE(pooled.size() == 3);
    // hand value for channel 0
    double sum = 0;
    for (int y = 0; y < 5; ++y)
        for (int xx = 0; xx < 6; ++xx) sum += x.at(y, xx, 0);
    CHECK(pooled[0] == doctest::Approx(sum / 30.0).epsilon(1e-12));

    // <L(x), v> == <x, L^T(v)> for the linear map L = pool
    nn::Vec<double> v = nn::Vec<double>::Random(3);
    auto lt_v = nn::global_avg_pool_backward(v, 5, 6);
    const double lhs = (pooled * v).sum();
    const double rhs = double((x.array() * lt_v.array()).sum());
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("resize_bilinear interpolates and its backward is the adjoint") {
    Tensor<double> x(2, 2, 1);
    x.at(0, 0, 0) = 0.0;
    x.at(0, 1, 0) = 1.0;
    x.at(1, 0, 0) = 2.0;
    x.at(1, 1, 0) = 3.0;
    auto up = nn::resize_bilinear(x, 4, 4);
    REQUIRE(up.h() == 4);
    // corners keep source values under align-corners-style mapping or are a
    // blend; midpoints must lie strictly between neighbors either way
    CHECK(up.array().minCoeff() >= 0.0);
    CHECK(up.array().maxCoeff() <= 3.0);
    CHECK(up.at(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-9));

    Rng rng = make_rng(37);
    auto src = Tensor<double>::random_uniform(3, 5, 2, rng, -1.0, 1.0);
    auto big = nn::resize_bilinear(src, 7, 9);
    auto cot = Tensor<double>::random_uniform(7, 9, 2, rng, -1.0, 1.0);
    auto back = nn::resize_bilinear_backward(cot, 3, 5);
    const double lhs = double((big.array() * cot.array()).sum());
    const double rhs = double((src.array() * back.array()).sum());
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));

    // identity when sizes match
    auto same = nn::resize_bilinear(src, 3, 5);
    CHECK((same.array() - src.array()).abs().maxCoeff() < 1e-12);
}

TEST_CASE("conv2d matches the direct-convolution oracle") {
    Rng rng = make_rng(41);
    for (const auto& [k, stride, pad] : {std::tuple{3, 1, 1}, {3, 2, 1}, {1, 1, 0}, {5, 2, 2}}) {
        nn::Conv2d<double> conv("c", 3, 4, k, stride, pad, rng);
        auto x = Tensor<double>::random_uniform(9, 11, 3, rng, -1.0, 1.0);
        conv.bias().value.setRandom();
        auto y = conv.forward(x);
        auto ref = testutil::conv2d_oracle(x, conv.weight().value, conv.bias().value, 4, k,
                                           stride, pad);
        REQUIRE(y.same_shape(ref));
        CHECK((y.array() - ref.array()).abs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("conv2d tiles large rows identically") {
    // enough columns that the row budget forces multiple tiles
    Rng rng = make_rng(43);
    nn::Conv2d<float> conv("c", 8, 8, 3, 1, 1, rng);
    auto x = Tensor<float>::random_uniform(4, 1 << 16, 8, rng, -1.0f, 1.0f);
    auto y = conv.forward(x);
    // spot-check a few positions against the oracle formula
    auto xd = x.cast<double>();
    nn::Vec<double> wd = conv.weight().value.cast<double>();
    nn::Vec<double> bd = conv.bias().value.cast<double>();
    Rng pick = make_rng(5);
    for (int i = 0; i < 10; ++i) {
        const int oy = uniform_int(pick, 0, 3), ox = uniform_int(pick, 0, (1 << 16) - 1);
        const int o = uniform_int(pick, 0, 7);
        double acc = bd[o];
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                const int sy = oy - 1 + ky, sx = ox - 1 + kx;
                if (sy < 0 || sy >= 4 || sx < 0 || sx >= (1 << 16)) continue;
                for (int ci = 0; ci < 8; ++ci)
                    acc += xd.at(sy, sx, ci) * wd[((ky * 3 + kx) * 8 + ci) * 8 + o];
            }
        CHECK(rel_err(double(y.at(oy, ox, o)), acc) < 1e-4);
    }
}

TEST_CASE("conv2d gradients match finite differences") {
    Rng rng = make_rng(47);
    nn::Conv2d<double> conv("c", 2, 3, 3, 2, 1, rng);
    auto x = Tensor<double>::random_uniform(7, 6, 2, rng, -1.0, 1.0);
    check_param_grads(conv, x);
    check_input_grad(conv, x);
}

TEST_CASE("conv2d rejects wrong channel counts") {
    Rng rng = make_rng(49);
    nn::Conv2d<float> conv("c", 3, 4, 3, 1, 1, rng);
    auto bad = Tensor<float>::random_uniform(8, 8, 2, rng);
    CHECK_THROWS_AS(conv.forward(bad), ShapeError);
}

TEST_CASE("depthwise conv matches its oracle and gradients") {
    Rng rng = make_rng(53);
    for (int stride : {1, 2}) {
        nn::DepthwiseConv3x3<double> dw("d", 4, stride, rng);
        auto x = Tensor<double>::random_uniform(8, 9, 4, rng, -1.0, 1.0);
        dw.bias().value.setRandom();
        auto y = dw.forward(x);
        auto ref = testutil::dwconv3x3_oracle(x, dw.weight().value, dw.bias().value, stride);
        REQUIRE(y.same_shape(ref));
        CHECK((y.array() - ref.array()).abs().maxCoeff() < 1e-12);
        check_param_grads(dw, x);
        check_input_grad(dw, x);
    }
}

TEST_CASE("transposed 2x2 conv matches its oracle and gradients") {
    Rng rng = make_rng(59);
    nn::ConvTranspose2x2<double> up("u", 3, 2, rng);
    auto x = Tensor<double>::random_uniform(4, 5, 3, rng, -1.0, 1.0);
    up.bias().value.setRandom();
    auto y = up.forward(x);
    auto ref = testutil::deconv2x2_oracle(x, up.weight().value, up.bias().value, 2);
    REQUIRE(y.h() == 8);
    REQUIRE(y.w() == 10);
    CHECK((y.array() - ref.array()).abs().maxCoeff() < 1e-12);
    check_param_grads(up, x);
    check_input_grad(up, x);
}

TEST_CASE("groupnorm normalizes and differentiates correctly") {
    Rng rng = make_rng(61);
    nn::GroupNorm<double> gn("g", 6);
    auto x = Tensor<double>::random_uniform(5, 4, 6, rng, -3.0, 5.0);
    auto y = gn.forward(x);
    // default affine is identity, so output stats are standardized
    const double mean = double(y.array().mean());
    const double var = double((y.array() - mean).square().mean());
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));

    CHECK_THROWS_AS(nn::GroupNorm<double>("bad", 5, 2), ShapeError);

    // non-identity affine for the gradient check
    nn::ParamRefs<double> refs;
    gn.collect(refs);
    refs[0]->value.setRandom();
    refs[1]->value.setRandom();
    check_param_grads(gn, x, 40, 1e-5);
    check_input_grad(gn, x, 30, 1e-5);

    // two groups normalize independently
    nn::GroupNorm<double> gn2("g2", 6, 2);
    auto y2 = gn2.forward(x);
    for (int half = 0; half < 2; ++half) {
        double s = 0;
        for (std::int64_t i = 0; i < y2.hw(); ++i)
            for (int ch = 0; ch < 3; ++ch) s += y2.array()[i * 6 + half * 3 + ch];
        CHECK(s / double(y2.hw() * 3) == doctest::Approx(0.0).epsilon(1e-10));
    }
}

TEST_CASE("dense layer computes W x + b with exact gradients") {
    Rng rng = make_rng(67);
    nn::Dense<double> fc("fc", 5, 3, rng);
    nn::Vec<double> x = nn::Vec<double>::Random(5);
    auto y = fc.forward(x);
    REQUIRE(y.size() == 3);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> wm(
        fc.weight().value.data(), 3, 5);
    CHECK((y.matrix() - (wm * x.matrix() + fc.bias().value.matrix())).norm() < 1e-14);

    nn::ParamRefs<double> params;
    fc.collect(params);
    Rng check_rng = make_rng(5);
    auto half_sq_vec = [](const nn::Vec<double>& v) { return 0.5 * double(v.square().sum()); };
    auto res = testutil::check_param_gradients<double>(
        params,
        [&] {
            for (auto* p : params) p->zero_grad();
            auto out = fc.forward_train(x);
            fc.backward(out);
            return half_sq_vec(out);
        },
        [&] { return half_sq_vec(fc.forward(x)); }, 30, check_rng, 1e-6, 1e-7);
    CHECK(res.failed == 0);

    auto out = fc.forward_train(x);
    auto gin = fc.backward(out);
    for (int i = 0; i < 5; ++i) {
        const double fd =
            testutil::fd_entry(x, i, 1e-6, [&] { return half_sq_vec(fc.forward(x)); });
        CHECK(rel_err(double(gin[i]), fd) < 1e-7);
    }
}

TEST_CASE("dropout is identity at inference and unbiased in training") {
    nn::Dropout<float> drop(0.25f);
    nn::Vec<float> x = nn::Vec<float>::Constant(20000, 1.0f);
    CHECK((drop.forward(x) == x).all());

    Rng rng = make_rng(71);
    auto y = drop.forward_train(x, rng);
    std::int64_t zeros = 0;
    for (std::int64_t i = 0; i < y.size(); ++i)
        if (y[i] == 0.0f)
            ++zeros;
        else
            CHECK(y[i] == doctest::Approx(1.0f / 0.75f));
    CHECK(double(zeros) / double(y.size()) == doctest::Approx(0.25).epsilon(0.05));
    CHECK(double(y.mean()) == doctest::Approx(1.0).epsilon(0.02));

    // backward masks the same entries
    auto g = drop.backward(nn::Vec<float>::Constant(20000, 2.0f));
    for (std::int64_t i = 0; i < y.size(); i += 37) CHECK((g[i] == 0.0f) == (y[i] == 0.0f));
}

TEST_CASE("resize_nearest picks the nearest source pixel") {
    Tensor<float> x(2, 2, 1);
    x.at(0, 0, 0) = 1;
    x.at(0, 1, 0) = 2;
    x.at(1, 0, 0) = 3;
    x.at(1, 1, 0) = 4;
    auto y = nn::resize_nearest(x, 4, 4);
    CHECK(y.at(0, 0, 0) == 1);
    CHECK(y.at(0, 3, 0) == 2);
    CHECK(y.at(3, 0, 0) == 3);
    CHECK(y.at(3, 3, 0) == 4);
}
