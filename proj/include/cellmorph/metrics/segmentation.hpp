#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "cellmorph/core/image.hpp"
#include "cellmorph/core/tensor.hpp"

namespace cellmorph::metrics {

inline constexpr int kNumCellTypes = 6;

// Dice coefficient between two probability maps thresholded at 0.5.
// Two empty masks are in perfect agreement, so that case scores 1.
template <typename Scalar>
double dice(const Tensor<Scalar>& a, const Tensor<Scalar>& b, double threshold = 0.5) {
    if (!a.same_shape(b))
        throw ShapeError("dice: " + a.shape_str() + " vs " + b.shape_str());
    std::int64_t na = 0, nb = 0, inter = 0;
    for (std::int64_t i = 0; i < a.size(); ++i) {
        const bool pa = double(a.array()[i]) > threshold;
        const bool pb = double(b.array()[i]) > threshold;
        na += pa;
        nb += pb;
        inter += pa && pb;
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * double(inter) / double(na + nb);
}

// Connected components (8-connectivity) of prob > threshold. Components
// below min_area pixels are dropped as speckle; survivors are relabeled
// 1..K in first-encounter scan order.
template <typename Scalar>
ImageU16 extract_instances(const Tensor<Scalar>& prob, double threshold = 0.5,
                           int min_area = 5) {
    if (prob.c() != 1)
        throw ShapeError("extract_instances: expected single channel, got " + prob.shape_str());
    const int h = prob.h(), w = prob.w();
    ImageU16 out(h, w);
    std::vector<std::int32_t> label(std::size_t(h) * w, 0);
    std::vector<std::pair<int, int>> stack;
    int next = 0;
    std::vector<std::vector<std::int64_t>> members;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (double(prob.at(y, x, 0)) <= threshold || label[std::size_t(y) * w + x]) continue;
            ++next;
            members.emplace_back();
            stack.clear();
            stack.emplace_back(y, x);
            label[std::size_t(y) * w + x] = next;
            while (!stack.empty()) {
                auto [cy, cx] = stack.back();
                stack.pop_back();
                members.back().push_back(std::int64_t(cy) * w + cx);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int ny = cy + dy, nx = cx + dx;
                        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                        auto& l = label[std::size_t(ny) * w + nx];
                        if (l || double(prob.at(ny, nx, 0)) <= threshold) continue;
                        l = next;
                        stack.emplace_back(ny, nx);
                    }
                }
            }
        }
    }
    std::uint16_t kept = 0;
    for (const auto& comp : members) {
        if (int(comp.size()) < min_area) continue;
        ++kept;
        for (const auto idx : comp) out.pixels[std::size_t(idx)] = kept;
    }
    return out;
}

// Per-pixel argmax over the type distribution; ties go to the lower index.
template <typename Scalar>
ImageU8 argmax_types(const Tensor<Scalar>& type_prob) {
    ImageU8 out(type_prob.h(), type_prob.w(), 1);
    for (std::int64_t i = 0; i < type_prob.hw(); ++i) {
        int best = 0;
        Scalar bv = type_prob.array()[i * type_prob.c()];
        for (int ch = 1; ch < type_prob.c(); ++ch) {
            const Scalar v = type_prob.array()[i * type_prob.c() + ch];
            if (v > bv) {
                bv = v;
                best = ch;
            }
        }
        out.pixels[std::size_t(i)] = std::uint8_t(best);
    }
    return out;
}

struct InstanceMatch {
    std::uint16_t gt_id = 0, pred_id = 0;
    double iou = 0;
};

struct PqResult {
    double pq = 1.0;        // type-agnostic PQ
    double multi_pq = 1.0;  // mean per-type PQ over types present in either map
    std::array<double, kNumCellTypes> per_type{};
    std::array<bool, kNumCellTypes> type_present{};
    std::vector<InstanceMatch> matches;
    int tp = 0, fp = 0, fn = 0;
};

namespace detail {
// Majority vote over the nonzero cell-type pixels of each instance; ties go
// to the smaller type. Instances with no typed pixel get type 0 and only
// participate in the type-agnostic score.
inline std::map<std::uint16_t, int> instance_types(const ImageU16& inst, const ImageU8& type) {
    std::map<std::uint16_t, std::array<std::int64_t, kNumCellTypes + 1>> votes;
    for (std::size_t i = 0; i < inst.pixels.size(); ++i) {
        const std::uint16_t id = inst.pixels[i];
        if (id == 0) continue;
        const int t = type.pixels[i];
        if (t >= 1 && t <= kNumCellTypes) ++votes[id][t];
        else votes[id];  // make the instance known even if untyped here
    }
    std::map<std::uint16_t, int> out;
    for (const auto& [id, v] : votes) {
        int best = 0;
        std::int64_t bv = 0;
        for (int t = 1; t <= kNumCellTypes; ++t)
            if (v[t] > bv) {
                bv = v[t];
                best = t;
            }
        out[id] = best;
    }
    return out;
}
}  // namespace detail

// Panoptic quality between ground-truth and predicted instance maps, with
// per-pixel type maps giving each instance a majority type.
//
// IoU is computed from the contingency counts of overlapping id pairs; a
// pair matches iff IoU > 0.5, which makes every match unique on both sides.
// PQ = sum(IoU of matches) / (TP + FP/2 + FN/2), and the multi-class score
// averages the same quantity per cell type over the types that occur in
// either map. Empty-vs-empty is scored 1 (perfect agreement), mirroring the
// Dice convention.
inline PqResult panoptic_quality(const ImageU16& gt_inst, const ImageU8& gt_type,
                                 const ImageU16& pred_inst, const ImageU8& pred_type) {
    if (gt_inst.h != pred_inst.h || gt_inst.w != pred_inst.w)
        throw ShapeError("panoptic_quality: instance map size mismatch");
    if (gt_type.h != gt_inst.h || gt_type.w != gt_inst.w || gt_type.c != 1 ||
        pred_type.h != pred_inst.h || pred_type.w != pred_inst.w || pred_type.c != 1)
        throw ShapeError("panoptic_quality: type map size mismatch");

    std::map<std::uint16_t, std::int64_t> area_gt, area_pred;
    std::map<std::uint64_t, std::int64_t> inter;
    for (std::size_t i = 0; i < gt_inst.pixels.size(); ++i) {
        const std::uint16_t g = gt_inst.pixels[i], p = pred_inst.pixels[i];
        if (g) ++area_gt[g];
        if (p) ++area_pred[p];
        if (g && p) ++inter[(std::uint64_t(g) << 32) | p];
    }

    PqResult r;
    double iou_sum = 0;
    for (const auto& [key, cnt] : inter) {
        const std::uint16_t g = std::uint16_t(key >> 32), p = std::uint16_t(key);
        const double iou = double(cnt) / double(area_gt[g] + area_pred[p] - cnt);
        if (iou > 0.5) {
            r.matches.push_back({g, p, iou});
            iou_sum += iou;
        }
    }
    r.tp = int(r.matches.size());
    r.fp = int(area_pred.size()) - r.tp;
    r.fn = int(area_gt.size()) - r.tp;
    if (r.tp + r.fp + r.fn == 0)
        r.pq = 1.0;
    else
        r.pq = iou_sum / (double(r.tp) + 0.5 * r.fp + 0.5 * r.fn);

    const auto types_gt = detail::instance_types(gt_inst, gt_type);
    const auto types_pred = detail::instance_types(pred_inst, pred_type);
    std::array<double, kNumCellTypes> iou_t{};
    std::array<int, kNumCellTypes> tp_t{}, fp_t{}, fn_t{};
    std::map<std::uint16_t, bool> gt_matched_typed, pred_matched_typed;
    for (const auto& m : r.matches) {
        const int tg = types_gt.at(m.gt_id), tp = types_pred.at(m.pred_id);
        if (tg >= 1 && tg == tp) {
            iou_t[tg - 1] += m.iou;
            ++tp_t[tg - 1];
            gt_matched_typed[m.gt_id] = true;
            pred_matched_typed[m.pred_id] = true;
        }
    }
    for (const auto& [id, t] : types_gt)
        if (t >= 1 && !gt_matched_typed.count(id)) ++fn_t[t - 1];
    for (const auto& [id, t] : types_pred)
        if (t >= 1 && !pred_matched_typed.count(id)) ++fp_t[t - 1];

    double sum = 0;
    int present = 0;
    for (int t = 0; t < kNumCellTypes; ++t) {
        r.type_present[t] = tp_t[t] + fp_t[t] + fn_t[t] > 0;
        if (!r.type_present[t]) continue;
        r.per_type[t] = iou_t[t] / (double(tp_t[t]) + 0.5 * fp_t[t] + 0.5 * fn_t[t]);
        sum += r.per_type[t];
        ++present;
    }
    r.multi_pq = present == 0 ? 1.0 : sum / present;
    return r;
}

}  // namespace cellmorph::metrics
