#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>

#include "cellmorph/augment/transforms.hpp"
#include "support/synthetic.hpp"

using namespace cellmorph;
using namespace cellmorph::augment;

namespace {

std::array<std::int64_t, 8> label_histogram(const ImageU8& label) {
    std::array<std::int64_t, 8> h{};
    for (auto p : label.pixels) h[p] += 1;
    return h;
}

}  // namespace

TEST_CASE("policy presets stay inside their caps") {
    AugmentationPolicy::extreme().validate();
    AugmentationPolicy::moderate().validate();
    AugmentationPolicy::off().validate();
    CHECK_THROWS_AS(AugmentationPolicy::preset("wild"), ValidationError);

    AugmentationPolicy over = AugmentationPolicy::extreme();
    over.brightness_frac = 0.6;
    CHECK_THROWS_AS(over.validate(), ValidationError);
    AugmentationPolicy negative = AugmentationPolicy::extreme();
    negative.rotation_deg = -1;
    CHECK_THROWS_AS(negative.validate(), ValidationError);
}

TEST_CASE("sampled parameters respect the policy over many draws") {
    Rng rng = make_rng(1);
    const auto policy = AugmentationPolicy::extreme();
    for (int i = 0; i < 10000; ++i) {
        const auto p = sample_params(policy, rng);
        CHECK(p.scale >= 0.8);
        CHECK(p.scale <= 1.2);
        CHECK(p.aspect >= 0.9);
        CHECK(p.aspect <= 1.1);
        CHECK(p.rotation_deg >= 0.0);
        CHECK(p.rotation_deg <= 360.0);
        CHECK(p.sharpness >= 0.0);
        CHECK(p.sharpness <= 2.0);
        CHECK(p.brightness >= 0.5);
        CHECK(p.brightness <= 1.5);
        CHECK(p.hue_shift >= -0.1);
        CHECK(p.hue_shift <= 0.1);
        CHECK(p.contrast >= 0.3);
        CHECK(p.contrast <= 1.7);
        CHECK(p.saturation >= 0.7);
        CHECK(p.saturation <= 1.3);
        CHECK(p.noise_std >= 0.0);
        CHECK(p.noise_std <= 0.04);
    }

    // moderate halves every range
    Rng rng2 = make_rng(2);
    const auto mod = AugmentationPolicy::moderate();
    for (int i = 0; i < 2000; ++i) {
        const auto p = sample_params(mod, rng2);
        CHECK(p.scale >= 0.9);
        CHECK(p.scale <= 1.1);
        CHECK(p.rotation_deg <= 180.0);
        CHECK(p.noise_std <= 0.02);
    }
}

TEST_CASE("the off policy is an exact identity") {
    Rng scene_rng = make_rng(3);
    auto scene = testutil::make_scene(40, 56, 6, scene_rng);
    auto image = to_u8(scene.image);

    Rng rng = make_rng(4);
    auto out = cellmorph::augment::augment(image, &scene.label, AugmentationPolicy::off(), rng);
    CHECK(out.image.h() == 40);
    CHECK(out.image.w() == 56);
    auto back = to_u8(out.image);
    CHECK(back == image);
    CHECK(out.label == scene.label);
}

TEST_CASE("exact 90-degree rotations permute pixels losslessly") {
    Rng scene_rng = make_rng(5);
    auto scene = testutil::make_scene(24, 36, 5, scene_rng);
    auto image = to_u8(scene.image);
    const auto before = label_histogram(scene.label);

    for (double deg : {90.0, 180.0, 270.0}) {
        AugmentParams p;
        p.rotation_deg = deg;
        auto out = apply(image, &scene.label, p);
        if (deg == 180.0) {
            CHECK(out.image.h() == 24);
            CHECK(out.image.w() == 36);
        } else {
            CHECK(out.image.h() == 36);
            CHECK(out.image.w() == 24);
        }
        CHECK(label_histogram(out.label) == before);

        // rotating 90 four times is the identity
        if (deg == 90.0) {
            AugmentedPair cur{to_float(image), scene.label};
            for (int i = 0; i < 4; ++i) {
                auto r = apply(to_u8(cur.image), &cur.label, p);
                cur = std::move(r);
            }
            CHECK(to_u8(cur.image) == image);
            CHECK(cur.label == scene.label);
        }
    }

    // 90 degrees maps (y, x) -> (x, h-1-y) or its inverse; check a corner
    ImageU8 tiny(2, 3, 1);
    int v = 0;
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x) tiny.at(y, x, 0) = std::uint8_t(++v);
    auto rot = rotate_label(tiny, 90.0);
    REQUIRE(rot.h == 3);
    REQUIRE(rot.w == 2);
    std::array<std::int64_t, 8> h1{}, h2{};
    for (auto p : tiny.pixels) h1[p] += 1;
    for (auto p : rot.pixels) h2[p] += 1;
    CHECK(h1 == h2);
}

TEST_CASE("photometric parameters act as documented") {
    Rng scene_rng = make_rng(6);
    auto scene = testutil::make_scene(32, 32, 4, scene_rng);
    auto image = to_u8(scene.image);

    AugmentParams bright;
    bright.brightness = 1.3;
    auto out = apply(image, nullptr, bright);
    const double mean_in = double(to_float(image).array().mean());
    const double mean_out = double(out.image.array().mean());
    CHECK(mean_out > mean_in * 1.1);
    CHECK(out.image.array().maxCoeff() <= 1.0f);
    CHECK_FALSE(out.has_label());

    AugmentParams noisy;
    noisy.noise_std = 0.1;
    noisy.noise_seed = 77;
    auto n1 = apply(image, nullptr, noisy);
    auto n2 = apply(image, nullptr, noisy);
    CHECK((n1.image.array() == n2.image.array()).all());  // seeded noise repeats
    CHECK((n1.image.array() - to_float(image).array()).abs().maxCoeff() > 0.01f);
    noisy.noise_seed = 78;
    auto n3 = apply(image, nullptr, noisy);
    CHECK_FALSE((n1.image.array() == n3.image.array()).all());

    // geometry touches the label, photometry does not
    AugmentParams photo;
    photo.contrast = 1.5;
    photo.saturation = 0.8;
    photo.hue_shift = 0.05;
    auto pout = apply(image, &scene.label, photo);
    CHECK(pout.label == scene.label);
}

TEST_CASE("rescale changes the canvas and keeps label geometry aligned") {
    Rng scene_rng = make_rng(7);
    auto scene = testutil::make_scene(40, 40, 4, scene_rng);
    auto image = to_u8(scene.image);

    AugmentParams p;
    p.scale = 1.2;
    auto out = apply(image, &scene.label, p);
    CHECK(out.image.h() == 48);
    CHECK(out.label.h == out.image.h());
    CHECK(out.label.w == out.image.w());
    // nucleus mass scales with area, roughly
    const auto before = label_histogram(scene.label);
    const auto after = label_histogram(out.label);
    std::int64_t fg_before = 0, fg_after = 0;
    for (int t = 1; t < 8; ++t) {
        fg_before += before[t];
        fg_after += after[t];
    }
    CHECK(double(fg_after) == doctest::Approx(double(fg_before) * 1.44).epsilon(0.25));

    AugmentParams squish;
    squish.aspect = 1.1;
    auto sq = apply(image, &scene.label, squish);
    CHECK(sq.image.w() == 44);
    CHECK(sq.image.h() == 36);  // height divided by the aspect factor
}

TEST_CASE("random crops are windows of the padded source") {
    Rng scene_rng = make_rng(8);
    auto scene = testutil::make_scene(50, 70, 6, scene_rng);
    AugmentedPair pair{scene.image, scene.label};

    Rng rng = make_rng(9);
    auto crop1 = crop_random(pair, 32, rng);
    CHECK(crop1.image.h() == 32);
    CHECK(crop1.image.w() == 32);
    CHECK(crop1.label.h == 32);

    // deterministic for a fixed rng state
    Rng rng_a = make_rng(10), rng_b = make_rng(10);
    auto ca = crop_random(pair, 32, rng_a);
    auto cb = crop_random(pair, 32, rng_b);
    CHECK((ca.image.array() == cb.image.array()).all());
    CHECK(ca.label == cb.label);

    // crop larger than the source reflect-pads first
    auto big = crop_random(pair, 96, rng);
    CHECK(big.image.h() == 96);
    CHECK(big.image.w() == 96);

    // centered crop of an aligned source is the exact center window
    auto center = crop_center(pair, 32);
    CHECK(center.image.h() == 32);
    const int y0 = (50 - 32) / 2, x0 = (70 - 32) / 2;
    bool all_eq = true;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            all_eq &= center.image.at(y, x, 0) == scene.image.at(y0 + y, x0 + x, 0);
    CHECK(all_eq);
}

TEST_CASE("nearest label resize never invents classes") {
    Rng scene_rng = make_rng(11);
    auto scene = testutil::make_scene(30, 30, 5, scene_rng);
    auto up = resize_label_nearest(scene.label, 64, 46);
    CHECK(up.h == 64);
    CHECK(up.w == 46);
    std::array<bool, 8> seen_before{}, seen_after{};
    for (auto p : scene.label.pixels) seen_before[p] = true;
    for (auto p : up.pixels) seen_after[p] = true;
    for (int t = 0; t < 8; ++t)
        if (seen_after[t]) CHECK(seen_before[t]);
}

TEST_CASE("augment with a policy is reproducible from the rng") {
    Rng scene_rng = make_rng(12);
    auto scene = testutil::make_scene(48, 48, 5, scene_rng);
    auto image = to_u8(scene.image);
    Rng a = make_rng(13), b = make_rng(13);
    auto oa = cellmorph::augment::augment(image, &scene.label, AugmentationPolicy::extreme(), a);
    auto ob = cellmorph::augment::augment(image, &scene.label, AugmentationPolicy::extreme(), b);
    CHECK((oa.image.array() == ob.image.array()).all());
    CHECK(oa.label == ob.label);

    // image values stay in range under extreme settings
    Rng c = make_rng(14);
    for (int i = 0; i < 20; ++i) {
        auto out = cellmorph::augment::augment(image, &scene.label, AugmentationPolicy::extreme(), c);
        CHECK(out.image.array().minCoeff() >= 0.0f);
        CHECK(out.image.array().maxCoeff() <= 1.0f);
    }
}
