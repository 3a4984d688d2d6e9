#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "cellmorph/core/image.hpp"
#include "cellmorph/core/rng.hpp"
#include "cellmorph/core/tensor.hpp"

using namespace cellmorph;

TEST_CASE("tensor layout is channel-fastest") {
    Tensor<float> t(2, 3, 4);
    t.at(1, 2, 3) = 7.0f;
    CHECK(t.data()[(1 * 3 + 2) * 4 + 3] == 7.0f);
    CHECK(t.size() == 24);
    CHECK(t.hw() == 6);
    CHECK(t.shape_str() == "2x3x4");

    auto m = t.as_matrix();
    CHECK(m.rows() == 6);
    CHECK(m.cols() == 4);
    CHECK(m(1 * 3 + 2, 3) == 7.0f);
    m(0, 1) = 2.5f;
    CHECK(t.at(0, 0, 1) == 2.5f);
}

TEST_CASE("tensor constructors and helpers") {
    Tensor<float> z(3, 3, 2);
    CHECK(z.array().abs().maxCoeff() == 0.0f);
    auto c = Tensor<float>::constant(2, 2, 1, 4.5f);
    CHECK(c.array().minCoeff() == 4.5f);
    CHECK(z.same_shape(Tensor<float>(3, 3, 2)));
    CHECK_FALSE(z.same_shape(c));

    auto d = c.cast<double>();
    CHECK(d.at(1, 1, 0) == 4.5);

    Tensor<float> multi(2, 2, 3);
    multi.at(1, 0, 2) = 9.0f;
    auto ch = multi.channel(2);
    CHECK(ch.c() == 1);
    CHECK(ch.at(1, 0, 0) == 9.0f);

    Rng rng = make_rng(7);
    auto u = Tensor<float>::random_uniform(4, 4, 2, rng, -1.0f, 1.0f);
    CHECK(u.array().minCoeff() >= -1.0f);
    CHECK(u.array().maxCoeff() <= 1.0f);
    CHECK(u.array().abs().maxCoeff() > 0.0f);
}

TEST_CASE("reflect_index is reflect-101") {
    // n = 5: ... 2 1 | 0 1 2 3 4 | 3 2 ...
    CHECK(detail::reflect_index(-1, 5) == 1);
    CHECK(detail::reflect_index(-2, 5) == 2);
    CHECK(detail::reflect_index(0, 5) == 0);
    CHECK(detail::reflect_index(4, 5) == 4);
    CHECK(detail::reflect_index(5, 5) == 3);
    CHECK(detail::reflect_index(6, 5) == 2);
    CHECK(detail::reflect_index(0, 1) == 0);
    CHECK(detail::reflect_index(-3, 1) == 0);
    // periodic with period 2(n-1)
    for (int i = -20; i < 20; ++i) CHECK(detail::reflect_index(i, 4) == detail::reflect_index(i + 6, 4));
}

TEST_CASE("pad_reflect matches a hand mirror and crops back exactly") {
    Tensor<float> t(2, 3, 1);
    float v = 0;
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x) t.at(y, x, 0) = ++v;  // 1 2 3 / 4 5 6

    auto p = pad_reflect(t, 1, 1, 1, 1);
    REQUIRE(p.h() == 4);
    REQUIRE(p.w() == 5);
    // row -1 reflects to row 1, col -1 to col 1
    CHECK(p.at(0, 0, 0) == 5.0f);
    CHECK(p.at(0, 1, 0) == 4.0f);
    CHECK(p.at(1, 0, 0) == 2.0f);
    CHECK(p.at(1, 4, 0) == 2.0f);
    CHECK(p.at(3, 2, 0) == 2.0f);

    Rng rng = make_rng(3);
    auto big = Tensor<float>::random_uniform(7, 9, 3, rng);
    auto padded = pad_reflect(big, 2, 5, 4, 1);
    auto back = crop(padded, 2, 4, 7, 9);
    CHECK((back.array() == big.array()).all());

    CHECK_THROWS_AS(crop(big, 0, 0, 8, 9), ShapeError);
    CHECK_THROWS_AS(crop(big, 3, 3, 7, 9), ShapeError);
}

TEST_CASE("concat and split channels round-trip") {
    Rng rng = make_rng(11);
    auto a = Tensor<float>::random_uniform(3, 4, 2, rng);
    auto b = Tensor<float>::random_uniform(3, 4, 5, rng);
    auto cat = concat_channels(a, b);
    REQUIRE(cat.c() == 7);
    CHECK(cat.at(2, 3, 1) == a.at(2, 3, 1));
    CHECK(cat.at(2, 3, 2) == b.at(2, 3, 0));
    auto [a2, b2] = split_channels(cat, 2);
    CHECK((a2.array() == a.array()).all());
    CHECK((b2.array() == b.array()).all());

    auto bad = Tensor<float>::random_uniform(2, 4, 1, rng);
    CHECK_THROWS_AS(concat_channels(a, bad), ShapeError);
}

TEST_CASE("derive_rng gives reproducible, decoupled streams") {
    Rng a = derive_rng(42, 1), b = derive_rng(42, 1), c = derive_rng(42, 2), d = derive_rng(43, 1);
    bool same_ab = true, same_ac = true, same_ad = true;
    for (int i = 0; i < 64; ++i) {
        const auto va = a();
        same_ab &= va == b();
        same_ac &= va == c();
        same_ad &= va == d();
    }
    CHECK(same_ab);
    CHECK_FALSE(same_ac);
    CHECK_FALSE(same_ad);

    Rng r = make_rng(5);
    for (int i = 0; i < 100; ++i) {
        const int v = uniform_int(r, -2, 3);
        CHECK(v >= -2);
        CHECK(v <= 3);
        const double u = uniform(r, 0.25, 0.75);
        CHECK(u >= 0.25);
        CHECK(u < 0.75);
    }
}

TEST_CASE("u8 conversion round-trips every byte and clamps") {
    ImageU8 img(1, 256, 1);
    for (int x = 0; x < 256; ++x) img.at(0, x, 0) = std::uint8_t(x);
    auto f = to_float(img);
    auto back = to_u8(f);
    CHECK(back == img);

    Tensor<float> t(1, 3, 1);
    t.at(0, 0, 0) = -0.5f;
    t.at(0, 1, 0) = 2.0f;
    t.at(0, 2, 0) = 0.5f;
    auto u = to_u8(t);
    CHECK(u.at(0, 0, 0) == 0);
    CHECK(u.at(0, 1, 0) == 255);
    CHECK(u.at(0, 2, 0) == 128);
}
