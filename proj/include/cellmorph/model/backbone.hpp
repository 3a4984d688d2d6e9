#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "cellmorph/core/error.hpp"
#include "cellmorph/core/tensor.hpp"
#include "cellmorph/nn/layers.hpp"

namespace cellmorph::model {

using nn::Vec;

// Backbone topology. The skip widths follow from the stage widths: each skip
// is tapped from the expanded features at the start of stages 2..4, i.e.
// expansion * previous stage width, at strides 2/4/8. validate() recomputes
// them and reports exactly which tap disagrees.
struct BackboneConfig {
    std::string name;
    int stem_width = 0;
    std::array<int, 7> widths{};
    std::array<int, 7> repeats{};
    std::array<int, 7> strides{};
    int expansion = 6;
    int final_width = 0;
    std::array<int, 3> skip_widths{};
    std::array<int, 4> decoder_widths{};
    int fuse_width = 0;

    static BackboneConfig reference() {
        BackboneConfig c;
        c.name = "reference";
        c.stem_width = 64;
        c.widths = {32, 48, 80, 160, 224, 384, 640};
        c.repeats = {2, 3, 3, 4, 5, 6, 5};
        c.strides = {1, 2, 2, 2, 1, 2, 1};
        c.final_width = 2560;
        c.skip_widths = {192, 288, 480};
        c.decoder_widths = {512, 256, 128, 64};
        c.fuse_width = 64;
        c.validate();
        return c;
    }

    static BackboneConfig tiny() {
        BackboneConfig c;
        c.name = "tiny";
        c.stem_width = 8;
        c.widths = {2, 3, 5, 10, 14, 24, 40};
        c.repeats = {1, 1, 1, 1, 1, 1, 1};
        c.strides = {1, 2, 2, 2, 1, 2, 1};
        c.final_width = 160;
        c.skip_widths = {12, 18, 30};
        c.decoder_widths = {16, 12, 8, 8};
        c.fuse_width = 8;
        c.validate();
        return c;
    }

    static BackboneConfig preset(const std::string& preset_name) {
        if (preset_name == "reference") return reference();
        if (preset_name == "tiny") return tiny();
        throw UserError("unknown preset '" + preset_name + "' (expected reference or tiny)");
    }

    void validate() const {
        if (stem_width <= 0 || final_width <= 0 || fuse_width <= 0)
            throw ValidationError(name + ": non-positive width");
        for (int i = 0; i < 7; ++i) {
            if (widths[i] <= 0 || repeats[i] <= 0)
                throw ValidationError(name + ": stage " + std::to_string(i + 1) +
                                      " has non-positive width or repeats");
            if (strides[i] != 1 && strides[i] != 2)
                throw ValidationError(name + ": stage " + std::to_string(i + 1) +
                                      " stride must be 1 or 2");
        }
        int total_stride = 2;  // stem
        for (int i = 0; i < 7; ++i) total_stride *= strides[i];
        if (total_stride != 32)
            throw ValidationError(name + ": bottleneck stride is " +
                                  std::to_string(total_stride) + ", expected 32");
        for (int i = 0; i < 3; ++i) {
            const int actual = expansion * widths[i];
            if (actual != skip_widths[i])
                throw ValidationError(
                    name + ": skip tap " + std::to_string(i + 1) + " expects " +
                    std::to_string(skip_widths[i]) + " channels, but stage " +
                    std::to_string(i + 2) + " expands stage " + std::to_string(i + 1) +
                    " output (" + std::to_string(widths[i]) + ") to " + std::to_string(actual));
        }
        // Taps sit at strides 2/4/8: stages 2..4 must each halve resolution and
        // stage 1 must not.
        if (strides[0] != 1 || strides[1] != 2 || strides[2] != 2 || strides[3] != 2)
            throw ValidationError(name + ": stages 1..4 need strides (1,2,2,2) so the skip "
                                         "taps land at strides 2/4/8");
    }
};

// Inverted-bottleneck block: 1x1 expand, depthwise 3x3 (carries the stride),
// 1x1 project, each normalized; residual when shape-preserving. The expanded
// post-activation features are exposed for skip taps.
template <typename Scalar>
class MBConvBlock {
public:
    MBConvBlock() = default;
    MBConvBlock(const std::string& name, int in_ch, int out_ch, int stride, int expansion,
                Rng& rng)
        : expanded_(expansion > 1), residual_(stride == 1 && in_ch == out_ch) {
        const int mid = expanded_ ? in_ch * expansion : in_ch;
        mid_ = mid;
        if (expanded_) {
            expand_ = nn::Conv2d<Scalar>(name + ".expand", in_ch, mid, 1, 1, 0, rng);
            gn0_ = nn::GroupNorm<Scalar>(name + ".gn0", mid);
        }
        dw_ = nn::DepthwiseConv3x3<Scalar>(name + ".dw", mid, stride, rng);
        gn1_ = nn::GroupNorm<Scalar>(name + ".gn1", mid);
        project_ = nn::Conv2d<Scalar>(name + ".project", mid, out_ch, 1, 1, 0, rng);
        gn2_ = nn::GroupNorm<Scalar>(name + ".gn2", out_ch);
    }

    int expanded_width() const { return mid_; }

    void collect(nn::ParamRefs<Scalar>& refs) {
        if (expanded_) {
            expand_.collect(refs);
            gn0_.collect(refs);
        }
        dw_.collect(refs);
        gn1_.collect(refs);
        project_.collect(refs);
        gn2_.collect(refs);
    }

    Tensor<Scalar> forward(const Tensor<Scalar>& x, Tensor<Scalar>* tap = nullptr) const {
        Tensor<Scalar> e = expanded_ ? nn::swish(gn0_.forward(expand_.forward(x))) : x;
        if (tap) *tap = e;
        Tensor<Scalar> d = nn::swish(gn1_.forward(dw_.forward(e)));
        Tensor<Scalar> p = gn2_.forward(project_.forward(d));
        if (residual_) p.array() += x.array();
        return p;
    }

    Tensor<Scalar> forward_train(const Tensor<Scalar>& x, Tensor<Scalar>* tap = nullptr) {
        Tensor<Scalar> e;
        if (expanded_) {
            a0_ = gn0_.forward_train(expand_.forward_train(x));
            e = nn::swish(a0_);
        } else {
            e = x;
        }
        if (tap) *tap = e;
        a1_ = gn1_.forward_train(dw_.forward_train(e));
        Tensor<Scalar> p = gn2_.forward_train(project_.forward_train(nn::swish(a1_)));
        if (residual_) p.array() += x.array();
        return p;
    }

    // tap_grad, when present, is the extra gradient flowing into the expanded
    // features from a decoder skip connection.
    Tensor<Scalar> backward(const Tensor<Scalar>& grad_out,
                            const Tensor<Scalar>* tap_grad = nullptr) {
        Tensor<Scalar> g = project_.backward(gn2_.backward(grad_out));
        g = dw_.backward(gn1_.backward(nn::swish_backward(g, a1_)));
        if (tap_grad) g.array() += tap_grad->array();
        Tensor<Scalar> gin =
            expanded_ ? expand_.backward(gn0_.backward(nn::swish_backward(g, a0_)))
                      : std::move(g);
        if (residual_) gin.array() += grad_out.array();
        return gin;
    }

private:
    bool expanded_ = false, residual_ = false;
    int mid_ = 0;
    nn::Conv2d<Scalar> expand_, project_;
    nn::GroupNorm<Scalar> gn0_, gn1_, gn2_;
    nn::DepthwiseConv3x3<Scalar> dw_;
    Tensor<Scalar> a0_, a1_;
};

template <typename Scalar>
struct EncoderOut {
    Tensor<Scalar> features;                // stride 32, final_width channels
    std::array<Tensor<Scalar>, 3> taps;     // strides 2/4/8, skip_widths channels
};

template <typename Scalar>
class Encoder {
public:
    Encoder() = default;
    Encoder(const BackboneConfig& cfg, int in_channels, const std::string& name, Rng& rng)
        : cfg_(cfg) {
        cfg_.validate();
        stem_ = nn::Conv2d<Scalar>(name + ".stem", in_channels, cfg.stem_width, 3, 2, 1, rng);
        gn_stem_ = nn::GroupNorm<Scalar>(name + ".stem_gn", cfg.stem_width);
        int prev = cfg.stem_width;
        for (int s = 0; s < 7; ++s) {
            const int t = s == 0 ? 1 : cfg.expansion;
            std::vector<MBConvBlock<Scalar>> stage;
            for (int b = 0; b < cfg.repeats[s]; ++b) {
                const int in_ch = b == 0 ? prev : cfg.widths[s];
                const int stride = b == 0 ? cfg.strides[s] : 1;
                stage.emplace_back(name + ".s" + std::to_string(s + 1) + "b" + std::to_string(b),
                                   in_ch, cfg.widths[s], stride, t, rng);
            }
            stages_[s] = std::move(stage);
            prev = cfg.widths[s];
        }
        final_ = nn::Conv2d<Scalar>(name + ".final", prev, cfg.final_width, 1, 1, 0, rng);
        gn_final_ = nn::GroupNorm<Scalar>(name + ".final_gn", cfg.final_width);
    }

    const BackboneConfig& config() const { return cfg_; }
    nn::Conv2d<Scalar>& stem() { return stem_; }
    const nn::Conv2d<Scalar>& stem() const { return stem_; }

    void collect(nn::ParamRefs<Scalar>& refs) {
        stem_.collect(refs);
        gn_stem_.collect(refs);
        for (auto& stage : stages_)
            for (auto& block : stage) block.collect(refs);
        final_.collect(refs);
        gn_final_.collect(refs);
    }

    EncoderOut<Scalar> forward(const Tensor<Scalar>& x, bool want_taps) const {
        EncoderOut<Scalar> out;
        Tensor<Scalar> h = nn::swish(gn_stem_.forward(stem_.forward(x)));
        for (int s = 0; s < 7; ++s) {
            for (std::size_t b = 0; b < stages_[s].size(); ++b) {
                Tensor<Scalar>* tap = nullptr;
                if (want_taps && b == 0 && s >= 1 && s <= 3) tap = &out.taps[s - 1];
                h = stages_[s][b].forward(h, tap);
            }
        }
        out.features = nn::swish(gn_final_.forward(final_.forward(h)));
        return out;
    }

    EncoderOut<Scalar> forward_train(const Tensor<Scalar>& x) {
        EncoderOut<Scalar> out;
        a_stem_ = gn_stem_.forward_train(stem_.forward_train(x));
        Tensor<Scalar> h = nn::swish(a_stem_);
        for (int s = 0; s < 7; ++s) {
            for (std::size_t b = 0; b < stages_[s].size(); ++b) {
                Tensor<Scalar>* tap = (b == 0 && s >= 1 && s <= 3) ? &out.taps[s - 1] : nullptr;
                h = stages_[s][b].forward_train(h, tap);
            }
        }
        a_final_ = gn_final_.forward_train(final_.forward_train(h));
        out.features = nn::swish(a_final_);
        return out;
    }

    // tap_grads may be null (no decoder skips attached).
    Tensor<Scalar> backward(const Tensor<Scalar>& grad_features,
                            const std::array<Tensor<Scalar>, 3>* tap_grads = nullptr) {
        Tensor<Scalar> g =
            final_.backward(gn_final_.backward(nn::swish_backward(grad_features, a_final_)));
        for (int s = 6; s >= 0; --s) {
            for (int b = int(stages_[s].size()) - 1; b >= 0; --b) {
                const Tensor<Scalar>* tg = nullptr;
                if (tap_grads && b == 0 && s >= 1 && s <= 3) tg = &(*tap_grads)[s - 1];
                g = stages_[s][b].backward(g, tg);
            }
        }
        return stem_.backward(gn_stem_.backward(nn::swish_backward(g, a_stem_)));
    }

private:
    BackboneConfig cfg_;
    nn::Conv2d<Scalar> stem_, final_;
    nn::GroupNorm<Scalar> gn_stem_, gn_final_;
    std::array<std::vector<MBConvBlock<Scalar>>, 7> stages_;
    Tensor<Scalar> a_stem_, a_final_;
};

}  // namespace cellmorph::model
