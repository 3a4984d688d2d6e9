#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cellmorph/metrics/classification.hpp"
#include "cellmorph/metrics/segmentation.hpp"
#include "support/oracles.hpp"

using namespace cellmorph;
using namespace cellmorph::metrics;

namespace {

Tensor<float> mask_from(std::initializer_list<std::initializer_list<int>> rows) {
    const int h = int(rows.size()), w = int(rows.begin()->size());
    Tensor<float> t(h, w, 1);
    int y = 0;
    for (const auto& row : rows) {
        int x = 0;
        for (int v : row) t.at(y, x++, 0) = float(v);
        ++y;
    }
    return t;
}

// Random instance scene: k disjoint rectangles with random types, plus a
// sprinkling of unknown-type pixels inside them.
void random_scene(int h, int w, int k, Rng& rng, ImageU16& inst, ImageU8& type) {
    inst = ImageU16(h, w);
    type = ImageU8(h, w, 1);
    for (int id = 1; id <= k; ++id) {
        const int rh = uniform_int(rng, 2, std::min(9, h - 1));
        const int rw = uniform_int(rng, 2, std::min(9, w - 1));
        const int y0 = uniform_int(rng, 0, h - rh), x0 = uniform_int(rng, 0, w - rw);
        const int t = uniform_int(rng, 1, 6);
        for (int y = y0; y < y0 + rh; ++y)
            for (int x = x0; x < x0 + rw; ++x) {
                inst.at(y, x) = std::uint16_t(id);  // later rectangles overwrite earlier
                type.at(y, x, 0) = std::uint8_t(uniform_int(rng, 0, 9) == 0 ? 7 : t);
            }
    }
}

}  // namespace

TEST_CASE("dice covers the canonical cases") {
    auto a = mask_from({{1, 1, 0, 0}});
    auto b = mask_from({{0, 1, 1, 0}});
    CHECK(dice(a, b) == 0.5);  // |A|=2, |B|=2, overlap 1
    CHECK(dice(a, a) == 1.0);
    CHECK(dice(a, mask_from({{0, 0, 1, 1}})) == 0.0);
    auto empty = mask_from({{0, 0, 0, 0}});
    CHECK(dice(empty, empty) == 1.0);
    CHECK(dice(a, empty) == 0.0);

    // threshold binarizes soft inputs
    auto soft = mask_from({{1, 1, 0, 0}});
    soft.at(0, 0, 0) = 0.51f;
    soft.at(0, 2, 0) = 0.49f;
    CHECK(dice(soft, a) == 1.0);
}

TEST_CASE("extract_instances labels 8-connected components in scan order") {
    // two blobs; the second only diagonally connected internally
    auto prob = mask_from({{1, 1, 0, 0, 0, 0},
                           {1, 1, 0, 0, 1, 0},
                           {1, 1, 0, 1, 0, 0},
                           {0, 0, 0, 0, 1, 0},
                           {1, 1, 1, 0, 0, 1}});
    auto inst = extract_instances(prob, 0.5, 1);
    CHECK(inst.at(0, 0) == 1);
    CHECK(inst.at(2, 1) == 1);
    CHECK(inst.at(1, 4) == 2);  // diagonal chain is one component
    CHECK(inst.at(2, 3) == 2);
    CHECK(inst.at(3, 4) == 2);
    CHECK(inst.at(4, 5) == 2);
    CHECK(inst.at(4, 0) == 3);
    CHECK(inst.at(0, 2) == 0);

    // min_area drops small components but keeps label compaction
    auto filtered = extract_instances(prob, 0.5, 5);
    CHECK(filtered.at(0, 0) == 1);   // 6-pixel blob survives
    CHECK(filtered.at(1, 4) == 0);   // 4-pixel diagonal chain dropped
    CHECK(filtered.at(4, 0) == 0);   // 3-pixel strip dropped
    CHECK_THROWS_AS(extract_instances(Tensor<float>(2, 2, 3)), ShapeError);
}

TEST_CASE("argmax_types breaks ties toward the lower channel") {
    Tensor<float> p(1, 2, 3);
    p.at(0, 0, 0) = 0.2f;
    p.at(0, 0, 1) = 0.5f;
    p.at(0, 0, 2) = 0.3f;
    p.at(0, 1, 0) = 0.4f;
    p.at(0, 1, 1) = 0.4f;
    p.at(0, 1, 2) = 0.2f;
    auto am = argmax_types(p);
    CHECK(am.at(0, 0, 0) == 1);
    CHECK(am.at(0, 1, 0) == 0);
}

TEST_CASE("instance majority type ignores unknown pixels") {
    ImageU16 inst(1, 6);
    ImageU8 type(1, 6, 1);
    for (int x = 0; x < 6; ++x) inst.at(0, x) = 1;
    // two pixels type 3, one pixel type 2, three pixels unknown 7
    type.at(0, 0, 0) = 3;
    type.at(0, 1, 0) = 3;
    type.at(0, 2, 0) = 2;
    type.at(0, 3, 0) = 7;
    type.at(0, 4, 0) = 7;
    type.at(0, 5, 0) = 7;
    auto types = metrics::detail::instance_types(inst, type);
    CHECK(types.at(1) == 3);

    // all-unknown instance is untyped
    ImageU8 unknown(1, 6, 1);
    for (int x = 0; x < 6; ++x) unknown.at(0, x, 0) = 7;
    CHECK(metrics::detail::instance_types(inst, unknown).at(1) == 0);

    // tie goes to the smaller type
    ImageU8 tie(1, 6, 1);
    tie.at(0, 0, 0) = 5;
    tie.at(0, 1, 0) = 2;
    CHECK(metrics::detail::instance_types(inst, tie).at(1) == 2);
}

TEST_CASE("panoptic quality on a single 0.8-IoU pair is 0.8") {
    // gt 10x10 block, pred shifted so IoU = 80/120... use 1D strips instead:
    // gt covers columns 0..9, pred 1..10 -> inter 9, union 11. For IoU 0.8
    // exactly: gt 0..8 (9 px), pred 0..9 (10 px) gives 9/10.
    ImageU16 gt(3, 20), pred(3, 20);
    ImageU8 gt_t(3, 20, 1), pred_t(3, 20, 1);
    // two rows of gt, pred adds one stray row fraction: IoU 8/10 = 0.8
    for (int x = 0; x < 8; ++x) {
        gt.at(0, x) = 1;
        pred.at(0, x) = 1;
    }
    for (int x = 8; x < 10; ++x) pred.at(0, x) = 1;
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 20; ++x) {
            gt_t.at(y, x, 0) = gt.at(y, x) ? 2 : 0;
            pred_t.at(y, x, 0) = pred.at(y, x) ? 2 : 0;
        }
    auto r = panoptic_quality(gt, gt_t, pred, pred_t);
    CHECK(r.tp == 1);
    CHECK(r.fp == 0);
    CHECK(r.fn == 0);
    CHECK(r.pq == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r.multi_pq == doctest::Approx(0.8).epsilon(1e-12));
    REQUIRE(r.matches.size() == 1);
    CHECK(r.matches[0].iou == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("panoptic quality counts FP and FN correctly") {
    ImageU16 gt(8, 8), pred(8, 8);
    ImageU8 gt_t(8, 8, 1), pred_t(8, 8, 1);
    // one perfectly matched instance
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) {
            gt.at(y, x) = 1;
            pred.at(y, x) = 1;
            gt_t.at(y, x, 0) = 1;
            pred_t.at(y, x, 0) = 1;
        }
    // one gt-only instance (FN), one pred-only instance (FP)
    gt.at(6, 6) = 2;
    gt_t.at(6, 6, 0) = 4;
    pred.at(0, 7) = 2;
    pred_t.at(0, 7, 0) = 5;
    auto r = panoptic_quality(gt, gt_t, pred, pred_t);
    CHECK(r.tp == 1);
    CHECK(r.fp == 1);
    CHECK(r.fn == 1);
    CHECK(r.pq == doctest::Approx(1.0 / 2.0).epsilon(1e-12));
    // types 1 (pq 1), 4 (pq 0), 5 (pq 0) present
    CHECK(r.type_present[0]);
    CHECK(r.type_present[3]);
    CHECK(r.type_present[4]);
    CHECK_FALSE(r.type_present[1]);
    CHECK(r.multi_pq == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("empty maps score a perfect 1.0") {
    ImageU16 gt(4, 4), pred(4, 4);
    ImageU8 t(4, 4, 1);
    auto r = panoptic_quality(gt, t, pred, t);
    CHECK(r.pq == 1.0);
    CHECK(r.multi_pq == 1.0);
    CHECK(r.matches.empty());

    // empty gt, nonempty pred: pure false positives
    pred.at(0, 0) = 1;
    pred.at(0, 1) = 1;
    auto r2 = panoptic_quality(gt, t, pred, t);
    CHECK(r2.pq == 0.0);
    CHECK(r2.fp == 1);
}

TEST_CASE("panoptic quality agrees with the exhaustive-matching oracle") {
    Rng rng = make_rng(2026);
    for (int trial = 0; trial < 60; ++trial) {
        const int h = uniform_int(rng, 8, 48), w = uniform_int(rng, 8, 48);
        ImageU16 gt, pred;
        ImageU8 gt_t, pred_t;
        random_scene(h, w, uniform_int(rng, 0, 6), rng, gt, gt_t);
        random_scene(h, w, uniform_int(rng, 0, 6), rng, pred, pred_t);
        auto lib = panoptic_quality(gt, gt_t, pred, pred_t);
        auto ref = testutil::pq_oracle(gt, gt_t, pred, pred_t);
        CHECK(lib.pq == doctest::Approx(ref.pq).epsilon(1e-12));
        CHECK(lib.multi_pq == doctest::Approx(ref.multi_pq).epsilon(1e-12));
    }
}

TEST_CASE("accuracy and balanced accuracy") {
    std::vector<int> truth{0, 0, 0, 0, 1, 1};
    std::vector<int> pred{0, 0, 0, 0, 0, 1};
    CHECK(accuracy(pred, truth) == doctest::Approx(5.0 / 6.0));
    // class 0 recall 1.0, class 1 recall 0.5
    CHECK(balanced_accuracy(pred, truth) == doctest::Approx(0.75));

    // balanced accuracy is insensitive to class imbalance
    std::vector<int> truth2{0, 0, 0, 0, 0, 0, 0, 0, 1, 1};
    std::vector<int> all_zero(10, 0);
    CHECK(accuracy(all_zero, truth2) == doctest::Approx(0.8));
    CHECK(balanced_accuracy(all_zero, truth2) == doctest::Approx(0.5));

    CHECK_THROWS_AS(accuracy({}, {}), ValidationError);
    CHECK_THROWS_AS(accuracy({1}, {1, 2}), ValidationError);
    CHECK_THROWS_AS(balanced_accuracy({1}, {1, 2}), ValidationError);
}
