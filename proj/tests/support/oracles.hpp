#pragma once

// Independent reference implementations used to cross-check the library.
// These are deliberately written in the most literal style possible (plain
// loops, exhaustive search) and share no code with the checked paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "cellmorph/core/image.hpp"
#include "cellmorph/core/tensor.hpp"
#include "cellmorph/nn/ops.hpp"
#include "cellmorph/nn/param.hpp"

namespace testutil {

using cellmorph::ImageU16;
using cellmorph::ImageU8;
using cellmorph::Tensor;

// ---- naive convolutions ----------------------------------------------------

// Direct convolution, weight flat index ((ky*k + kx)*in + ci)*out + o.
template <typename Scalar>
Tensor<Scalar> conv2d_oracle(const Tensor<Scalar>& x, const cellmorph::nn::Vec<Scalar>& weight,
                             const cellmorph::nn::Vec<Scalar>& bias, int out_ch, int k, int stride,
                             int pad) {
    const int in = x.c();
    const int h2 = (x.h() + 2 * pad - k) / stride + 1;
    const int w2 = (x.w() + 2 * pad - k) / stride + 1;
    Tensor<Scalar> y(h2, w2, out_ch);
    for (int oy = 0; oy < h2; ++oy)
        for (int ox = 0; ox < w2; ++ox)
            for (int o = 0; o < out_ch; ++o) {
                double acc = bias[o];
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx) {
                        const int sy = oy * stride - pad + ky;
                        const int sx = ox * stride - pad + kx;
                        if (sy < 0 || sy >= x.h() || sx < 0 || sx >= x.w()) continue;
                        for (int ci = 0; ci < in; ++ci)
                            acc += double(x.at(sy, sx, ci)) *
                                   double(weight[(std::int64_t(ky * k + kx) * in + ci) * out_ch +
                                                 o]);
                    }
                y.at(oy, ox, o) = Scalar(acc);
            }
    return y;
}

// Depthwise 3x3, pad 1, weight flat index tap*c + ch with tap = ky*3 + kx.
template <typename Scalar>
Tensor<Scalar> dwconv3x3_oracle(const Tensor<Scalar>& x, const cellmorph::nn::Vec<Scalar>& weight,
                                const cellmorph::nn::Vec<Scalar>& bias, int stride) {
    const int c = x.c();
    const int h2 = (x.h() - 1) / stride + 1, w2 = (x.w() - 1) / stride + 1;
    Tensor<Scalar> y(h2, w2, c);
    for (int oy = 0; oy < h2; ++oy)
        for (int ox = 0; ox < w2; ++ox)
            for (int ch = 0; ch < c; ++ch) {
                double acc = bias[ch];
                for (int tap = 0; tap < 9; ++tap) {
                    const int sy = oy * stride - 1 + tap / 3;
                    const int sx = ox * stride - 1 + tap % 3;
                    if (sy < 0 || sy >= x.h() || sx < 0 || sx >= x.w()) continue;
                    acc += double(x.at(sy, sx, ch)) * double(weight[tap * c + ch]);
                }
                y.at(oy, ox, ch) = Scalar(acc);
            }
    return y;
}

// Transposed 2x2 stride-2 conv: input pixel (iy, ix) scatters into the four
// outputs (2iy+dy, 2ix+dx); weight flat index (ci*4 + dy*2 + dx)*out + o.
template <typename Scalar>
Tensor<Scalar> deconv2x2_oracle(const Tensor<Scalar>& x, const cellmorph::nn::Vec<Scalar>& weight,
                                const cellmorph::nn::Vec<Scalar>& bias, int out_ch) {
    const int in = x.c();
    Tensor<Scalar> y(2 * x.h(), 2 * x.w(), out_ch);
    for (int oy = 0; oy < y.h(); ++oy)
        for (int ox = 0; ox < y.w(); ++ox)
            for (int o = 0; o < out_ch; ++o) {
                double acc = bias[o];
                const int iy = oy / 2, ix = ox / 2, dy = oy % 2, dx = ox % 2;
                for (int ci = 0; ci < in; ++ci)
                    acc += double(x.at(iy, ix, ci)) *
                           double(weight[(std::int64_t(ci) * 4 + dy * 2 + dx) * out_ch + o]);
                y.at(oy, ox, o) = Scalar(acc);
            }
    return y;
}

// ---- brute-force panoptic quality -------------------------------------------

namespace pqdetail {

struct Inst {
    std::vector<std::int64_t> px;
    int type = 0;
};

// Majority type over typed pixels 1..6; ties toward the smaller type; no
// typed pixel at all leaves the instance untyped (0).
inline std::map<std::uint16_t, Inst> gather(const ImageU16& inst, const ImageU8& type) {
    std::map<std::uint16_t, Inst> out;
    for (std::int64_t i = 0; i < std::int64_t(inst.pixels.size()); ++i) {
        const std::uint16_t id = inst.pixels[std::size_t(i)];
        if (id == 0) continue;
        out[id].px.push_back(i);
    }
    for (auto& [id, in] : out) {
        int votes[7] = {0};
        for (std::int64_t i : in.px) {
            const int t = type.pixels[std::size_t(i)];
            if (t >= 1 && t <= 6) ++votes[t];
        }
        int best = 0, best_n = 0;
        for (int t = 1; t <= 6; ++t)
            if (votes[t] > best_n) {
                best = t;
                best_n = votes[t];
            }
        in.type = best;
    }
    return out;
}

inline double iou(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
    std::set<std::int64_t> sa(a.begin(), a.end());
    std::int64_t inter = 0;
    for (std::int64_t i : b) inter += sa.count(i);
    const std::int64_t uni = std::int64_t(a.size()) + std::int64_t(b.size()) - inter;
    return uni == 0 ? 0.0 : double(inter) / double(uni);
}

// Best PQ over every injective assignment of gt to pred among IoU > 0.5
// candidate pairs (exhaustive recursion; counts are tiny in tests).
inline double best_pq(const std::vector<std::vector<std::int64_t>>& gt,
                      const std::vector<std::vector<std::int64_t>>& pred) {
    if (gt.empty() && pred.empty()) return 1.0;
    const int ng = int(gt.size()), np = int(pred.size());
    std::vector<std::vector<double>> cand{std::size_t(ng), std::vector<double>(std::size_t(np))};
    for (int g = 0; g < ng; ++g)
        for (int p = 0; p < np; ++p) cand[std::size_t(g)][std::size_t(p)] = iou(gt[std::size_t(g)], pred[std::size_t(p)]);
    double best = -1.0;
    std::vector<bool> used(std::size_t(np), false);
    std::function<void(int, int, double)> rec = [&](int g, int tp, double sum) {
        if (g == ng) {
            const double denom = tp + 0.5 * (np - tp) + 0.5 * (ng - tp);
            best = std::max(best, denom == 0.0 ? 1.0 : sum / denom);
            return;
        }
        rec(g + 1, tp, sum);
        for (int p = 0; p < np; ++p) {
            if (used[std::size_t(p)] || cand[std::size_t(g)][std::size_t(p)] <= 0.5) continue;
            used[std::size_t(p)] = true;
            rec(g + 1, tp + 1, sum + cand[std::size_t(g)][std::size_t(p)]);
            used[std::size_t(p)] = false;
        }
    };
    rec(0, 0, 0.0);
    return best;
}

}  // namespace pqdetail

struct PqOracleResult {
    double pq = 1.0;
    double multi_pq = 1.0;
};

inline PqOracleResult pq_oracle(const ImageU16& gt_inst, const ImageU8& gt_type,
                                const ImageU16& pred_inst, const ImageU8& pred_type) {
    const auto gt = pqdetail::gather(gt_inst, gt_type);
    const auto pred = pqdetail::gather(pred_inst, pred_type);

    PqOracleResult r;
    std::vector<std::vector<std::int64_t>> ga, pa;
    for (const auto& [id, in] : gt) ga.push_back(in.px);
    for (const auto& [id, in] : pred) pa.push_back(in.px);
    r.pq = pqdetail::best_pq(ga, pa);

    double sum = 0.0;
    int present = 0;
    for (int t = 1; t <= 6; ++t) {
        std::vector<std::vector<std::int64_t>> gt_t, pr_t;
        for (const auto& [id, in] : gt)
            if (in.type == t) gt_t.push_back(in.px);
        for (const auto& [id, in] : pred)
            if (in.type == t) pr_t.push_back(in.px);
        if (gt_t.empty() && pr_t.empty()) continue;
        ++present;
        sum += pqdetail::best_pq(gt_t, pr_t);
    }
    r.multi_pq = present == 0 ? 1.0 : sum / present;
    return r;
}

// ---- finite differences ------------------------------------------------------

inline double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / denom;
}

// Central difference of `loss` w.r.t. one entry of `v`.
template <typename Vec, typename LossFn>
double fd_entry(Vec& v, std::int64_t i, double eps, LossFn&& loss) {
    const auto keep = v[i];
    v[i] = decltype(keep)(double(keep) + eps);
    const double up = loss();
    v[i] = decltype(keep)(double(keep) - eps);
    const double dn = loss();
    v[i] = keep;
    return (up - dn) / (2.0 * eps);
}

struct GradCheckResult {
    int checked = 0;
    int failed = 0;
    double worst = 0.0;
};

// Spot-checks analytic parameter gradients against central differences.
// `loss_and_backward` must zero grads, run forward_train + backward, and
// return the loss; `loss_only` must be a pure re-evaluation of the loss.
template <typename Scalar, typename FullFn, typename LossFn>
GradCheckResult check_param_gradients(const cellmorph::nn::ParamRefs<Scalar>& params,
                                      FullFn&& loss_and_backward, LossFn&& loss_only,
                                      int n_checks, cellmorph::Rng& rng, double eps, double tol) {
    loss_and_backward();
    std::vector<std::pair<cellmorph::nn::Param<Scalar>*, std::int64_t>> entries;
    for (auto* p : params)
        if (p->trainable && p->value.size() > 0) entries.emplace_back(p, 0);
    GradCheckResult res;
    if (entries.empty()) return res;
    std::uniform_int_distribution<std::size_t> pick{0, entries.size() - 1};
    for (int c = 0; c < n_checks; ++c) {
        auto& [p, unused] = entries[pick(rng)];
        std::uniform_int_distribution<std::int64_t> idx{0, p->value.size() - 1};
        const std::int64_t i = idx(rng);
        const double analytic = p->grad.size() == p->value.size() ? double(p->grad[i]) : 0.0;
        const double numeric = fd_entry(p->value, i, eps, loss_only);
        const double err = rel_err(analytic, numeric);
        ++res.checked;
        res.worst = std::max(res.worst, err);
        if (err >= tol && std::abs(analytic - numeric) > 1e-7) ++res.failed;
    }
    return res;
}

}  // namespace testutil
