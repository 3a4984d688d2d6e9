#pragma once

#include <cmath>
#include <vector>

#include "cellmorph/core/error.hpp"
#include "cellmorph/nn/param.hpp"

namespace cellmorph::train {

// Adam over a fixed parameter list. Moments are kept positionally, so the
// same ParamRefs order (sizes included) must be passed to every step.
template <typename Scalar>
class Adam {
public:
    using Vec = typename nn::Param<Scalar>::Vec;

    explicit Adam(double lr = 1e-4, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }
    std::int64_t steps() const { return t_; }

    // Applies one update from the accumulated gradients, then clears them.
    // Frozen params keep their values but their moment slots stay allocated,
    // so freezing mid-run does not shift the bookkeeping.
    void step(const nn::ParamRefs<Scalar>& params) {
        if (m_.empty()) {
            m_.reserve(params.size());
            v_.reserve(params.size());
            for (const auto* p : params) {
                m_.push_back(Vec::Zero(p->size()));
                v_.push_back(Vec::Zero(p->size()));
            }
        }
        if (m_.size() != params.size())
            throw ValidationError("adam: parameter list changed between steps");
        ++t_;
        const double bc1 = 1.0 - std::pow(b1_, double(t_));
        const double bc2 = 1.0 - std::pow(b2_, double(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto* p = params[i];
            if (m_[i].size() != p->size())
                throw ValidationError("adam: size of " + p->name + " changed between steps");
            if (!p->trainable || p->grad.size() == 0) continue;
            m_[i] = Scalar(b1_) * m_[i] + Scalar(1.0 - b1_) * p->grad;
            v_[i] = Scalar(b2_) * v_[i] + Scalar(1.0 - b2_) * p->grad.square();
            p->value -= Scalar(lr_) * (m_[i] / Scalar(bc1)) /
                        ((v_[i] / Scalar(bc2)).sqrt() + Scalar(eps_));
        }
        for (auto* p : params) p->zero_grad();
    }

private:
    double lr_, b1_, b2_, eps_;
    std::int64_t t_ = 0;
    std::vector<Vec> m_, v_;
};

}  // namespace cellmorph::train
