#pragma once

#include <algorithm>
#include <cmath>

#include "cellmorph/core/tensor.hpp"
#include "cellmorph/nn/ops.hpp"

namespace cellmorph::metrics {

using nn::Vec;

// Probabilities are clamped away from 0/1 before taking logs so that a
// saturated sigmoid/softmax cannot produce inf.
inline constexpr double kProbEps = 1e-7;

inline double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

// Mean binary cross-entropy between probability and {0,1} target tensors.
template <typename Scalar>
double bce_loss(const Tensor<Scalar>& prob, const Tensor<Scalar>& target) {
    if (!prob.same_shape(target))
        throw ShapeError("bce_loss: " + prob.shape_str() + " vs " + target.shape_str());
    double sum = 0;
    for (std::int64_t i = 0; i < prob.size(); ++i) {
        const double p = clamp_prob(double(prob.array()[i]));
        const double t = double(target.array()[i]);
        sum -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    }
    return sum / double(prob.size());
}

template <typename Scalar>
Tensor<Scalar> bce_grad(const Tensor<Scalar>& prob, const Tensor<Scalar>& target) {
    if (!prob.same_shape(target))
        throw ShapeError("bce_grad: " + prob.shape_str() + " vs " + target.shape_str());
    Tensor<Scalar> g(prob.h(), prob.w(), prob.c());
    const double n = double(prob.size());
    for (std::int64_t i = 0; i < prob.size(); ++i) {
        const double p = clamp_prob(double(prob.array()[i]));
        const double t = double(target.array()[i]);
        g.array()[i] = Scalar((-t / p + (1.0 - t) / (1.0 - p)) / n);
    }
    return g;
}

// Mean categorical cross-entropy; labels is an HxWx1 map of class indices
// into prob's channels. Pixels whose label equals ignore_label are excluded
// from both the sum and the divisor; if every pixel is ignored the loss is 0.
template <typename Scalar>
double cce_loss_masked(const Tensor<Scalar>& prob, const Tensor<int>& labels, int ignore_label) {
    if (labels.h() != prob.h() || labels.w() != prob.w() || labels.c() != 1)
        throw ShapeError("cce_loss: labels " + labels.shape_str() + " vs prob " +
                         prob.shape_str());
    double sum = 0;
    std::int64_t n = 0;
    for (std::int64_t i = 0; i < prob.hw(); ++i) {
        const int lab = labels.array()[i];
        if (lab == ignore_label) continue;
        if (lab < 0 || lab >= prob.c())
            throw ValidationError("cce_loss: label " + std::to_string(lab) + " outside [0," +
                                  std::to_string(prob.c()) + ")");
        sum -= std::log(clamp_prob(double(prob.array()[i * prob.c() + lab])));
        ++n;
    }
    return n == 0 ? 0.0 : sum / double(n);
}

template <typename Scalar>
double cce_loss(const Tensor<Scalar>& prob, const Tensor<int>& labels) {
    return cce_loss_masked(prob, labels, -1);
}

// One-hot form: every pixel's target row must be exactly one 1 and zeros.
template <typename Scalar>
double cce_loss(const Tensor<Scalar>& prob, const Tensor<Scalar>& target) {
    if (!prob.same_shape(target))
        throw ShapeError("cce_loss: " + prob.shape_str() + " vs " + target.shape_str());
    Tensor<int> labels(prob.h(), prob.w(), 1);
    for (std::int64_t i = 0; i < prob.hw(); ++i) {
        int hot = -1;
        for (int c = 0; c < prob.c(); ++c) {
            const double t = double(target.array()[i * prob.c() + c]);
            if (std::abs(t - 1.0) < 1e-6) {
                if (hot >= 0) hot = -2;
                else if (hot == -1) hot = c;
            } else if (std::abs(t) > 1e-6) {
                hot = -2;
            }
        }
        if (hot < 0) throw ValidationError("cce_loss: non-one-hot target rows");
        labels.array()[i] = hot;
    }
    return cce_loss_masked(prob, labels, -1);
}

template <typename Scalar>
Tensor<Scalar> cce_grad_masked(const Tensor<Scalar>& prob, const Tensor<int>& labels,
                               int ignore_label) {
    Tensor<Scalar> g(prob.h(), prob.w(), prob.c());
    std::int64_t n = 0;
    for (std::int64_t i = 0; i < prob.hw(); ++i)
        if (labels.array()[i] != ignore_label) ++n;
    if (n == 0) return g;
    for (std::int64_t i = 0; i < prob.hw(); ++i) {
        const int lab = labels.array()[i];
        if (lab == ignore_label) continue;
        const double p = clamp_prob(double(prob.array()[i * prob.c() + lab]));
        g.array()[i * prob.c() + lab] = Scalar(-1.0 / (p * double(n)));
    }
    return g;
}

template <typename Scalar>
Tensor<Scalar> cce_grad(const Tensor<Scalar>& prob, const Tensor<int>& labels) {
    return cce_grad_masked(prob, labels, -1);
}

// Vector forms for the classification head.
template <typename Scalar>
double cce_loss_vec(const Vec<Scalar>& prob, int label) {
    if (label < 0 || label >= prob.size())
        throw ValidationError("cce_loss: label " + std::to_string(label) + " outside [0," +
                              std::to_string(prob.size()) + ")");
    return -std::log(clamp_prob(double(prob[label])));
}

template <typename Scalar>
Vec<Scalar> cce_grad_vec(const Vec<Scalar>& prob, int label) {
    Vec<Scalar> g = Vec<Scalar>::Zero(prob.size());
    g[label] = Scalar(-1.0 / clamp_prob(double(prob[label])));
    return g;
}

struct LossWeights {
    double bce = 1.0;
    double cce = 1.0;
};

template <typename Scalar>
struct SegLossResult {
    double total = 0, bce = 0, cce = 0;
    Tensor<Scalar> grad_nuclei;  // d(total)/d(nucleus prob)
    Tensor<Scalar> grad_types;   // d(total)/d(type prob)
};

// Combined segmentation loss: weighted BCE on the nucleus plane plus
// weighted CCE on the type distribution, with unknown-type pixels (label 7)
// masked out of the CCE term.
inline constexpr int kUnknownTypeLabel = 7;

template <typename Scalar>
SegLossResult<Scalar> combined_seg_loss(const Tensor<Scalar>& nuclei_prob,
                                        const Tensor<Scalar>& nuclei_target,
                                        const Tensor<Scalar>& type_prob,
                                        const Tensor<int>& type_labels,
                                        const LossWeights& w = {}) {
    SegLossResult<Scalar> r;
    r.bce = bce_loss(nuclei_prob, nuclei_target);
    r.cce = cce_loss_masked(type_prob, type_labels, kUnknownTypeLabel);
    r.total = w.bce * r.bce + w.cce * r.cce;
    r.grad_nuclei = bce_grad(nuclei_prob, nuclei_target);
    r.grad_nuclei.array() *= Scalar(w.bce);
    r.grad_types = cce_grad_masked(type_prob, type_labels, kUnknownTypeLabel);
    r.grad_types.array() *= Scalar(w.cce);
    return r;
}

}  // namespace cellmorph::metrics
