#pragma once

#include "cellmorph/model/backbone.hpp"

namespace cellmorph::model {

// One upsampling step: two 3x3 convs refine, a 2x2 stride-2 transposed conv
// doubles the resolution.
template <typename Scalar>
class DecoderBlock {
public:
    DecoderBlock() = default;
    DecoderBlock(const std::string& name, int in_ch, int out_ch, Rng& rng)
        : c1_(name + ".c1", in_ch, out_ch, 3, 1, 1, rng),
          gn1_(name + ".gn1", out_ch),
          c2_(name + ".c2", out_ch, out_ch, 3, 1, 1, rng),
          gn2_(name + ".gn2", out_ch),
          up_(name + ".up", out_ch, out_ch, rng),
          gn3_(name + ".gn3", out_ch) {}

    void collect(nn::ParamRefs<Scalar>& refs) {
        c1_.collect(refs);
        gn1_.collect(refs);
        c2_.collect(refs);
        gn2_.collect(refs);
        up_.collect(refs);
        gn3_.collect(refs);
    }

    Tensor<Scalar> forward(const Tensor<Scalar>& x) const {
        Tensor<Scalar> h = nn::swish(gn1_.forward(c1_.forward(x)));
        h = nn::swish(gn2_.forward(c2_.forward(h)));
        return nn::swish(gn3_.forward(up_.forward(h)));
    }

    Tensor<Scalar> forward_train(const Tensor<Scalar>& x) {
        a1_ = gn1_.forward_train(c1_.forward_train(x));
        a2_ = gn2_.forward_train(c2_.forward_train(nn::swish(a1_)));
        a3_ = gn3_.forward_train(up_.forward_train(nn::swish(a2_)));
        return nn::swish(a3_);
    }

    Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) {
        Tensor<Scalar> g = up_.backward(gn3_.backward(nn::swish_backward(grad_out, a3_)));
        g = c2_.backward(gn2_.backward(nn::swish_backward(g, a2_)));
        return c1_.backward(gn1_.backward(nn::swish_backward(g, a1_)));
    }

private:
    nn::Conv2d<Scalar> c1_;
    nn::GroupNorm<Scalar> gn1_;
    nn::Conv2d<Scalar> c2_;
    nn::GroupNorm<Scalar> gn2_;
    nn::ConvTranspose2x2<Scalar> up_;
    nn::GroupNorm<Scalar> gn3_;
    Tensor<Scalar> a1_, a2_, a3_;
};

template <typename Scalar>
struct DecoderGrads {
    Tensor<Scalar> features;
    std::array<Tensor<Scalar>, 3> taps;
};

// Upsamples bottleneck features back to input resolution through four blocks.
// With use_skips the encoder taps are concatenated at matching strides (8/4/2)
// before blocks 3/4 and the fuse conv; without, the same trunk runs blind,
// which is the shape used when pretraining the classification encoder.
template <typename Scalar>
class Decoder {
public:
    Decoder() = default;
    Decoder(const BackboneConfig& cfg, bool use_skips, const std::string& name, Rng& rng)
        : use_skips_(use_skips), dw_(cfg.decoder_widths), skips_(cfg.skip_widths) {
        const int s0 = use_skips ? skips_[0] : 0;
        const int s1 = use_skips ? skips_[1] : 0;
        const int s2 = use_skips ? skips_[2] : 0;
        b1_ = DecoderBlock<Scalar>(name + ".b1", cfg.final_width, dw_[0], rng);
        b2_ = DecoderBlock<Scalar>(name + ".b2", dw_[0], dw_[1], rng);
        b3_ = DecoderBlock<Scalar>(name + ".b3", dw_[1] + s2, dw_[2], rng);
        b4_ = DecoderBlock<Scalar>(name + ".b4", dw_[2] + s1, dw_[3], rng);
        fuse_ = nn::Conv2d<Scalar>(name + ".fuse", dw_[3] + s0, cfg.fuse_width, 3, 1, 1, rng);
        gn_fuse_ = nn::GroupNorm<Scalar>(name + ".fuse_gn", cfg.fuse_width);
    }

    bool use_skips() const { return use_skips_; }

    void collect(nn::ParamRefs<Scalar>& refs) {
        b1_.collect(refs);
        b2_.collect(refs);
        b3_.collect(refs);
        b4_.collect(refs);
        fuse_.collect(refs);
        gn_fuse_.collect(refs);
    }

    Tensor<Scalar> forward(const EncoderOut<Scalar>& enc) const {
        check_taps(enc);
        Tensor<Scalar> h = b2_.forward(b1_.forward(enc.features));
        if (use_skips_) h = concat_channels(h, enc.taps[2]);
        h = b3_.forward(h);
        if (use_skips_) h = concat_channels(h, enc.taps[1]);
        h = b4_.forward(h);
        if (use_skips_) h = concat_channels(h, enc.taps[0]);
        Tensor<Scalar> f = nn::swish(gn_fuse_.forward(fuse_.forward(h)));
        return nn::resize_bilinear(f, 2 * f.h(), 2 * f.w());
    }

    Tensor<Scalar> forward_train(const EncoderOut<Scalar>& enc) {
        check_taps(enc);
        Tensor<Scalar> h = b2_.forward_train(b1_.forward_train(enc.features));
        if (use_skips_) h = concat_channels(h, enc.taps[2]);
        h = b3_.forward_train(h);
        if (use_skips_) h = concat_channels(h, enc.taps[1]);
        h = b4_.forward_train(h);
        if (use_skips_) h = concat_channels(h, enc.taps[0]);
        a_fuse_ = gn_fuse_.forward_train(fuse_.forward_train(h));
        Tensor<Scalar> f = nn::swish(a_fuse_);
        return nn::resize_bilinear(f, 2 * f.h(), 2 * f.w());
    }

    DecoderGrads<Scalar> backward(const Tensor<Scalar>& grad_map) {
        DecoderGrads<Scalar> out;
        Tensor<Scalar> g =
            nn::resize_bilinear_backward(grad_map, grad_map.h() / 2, grad_map.w() / 2);
        g = fuse_.backward(gn_fuse_.backward(nn::swish_backward(g, a_fuse_)));
        if (use_skips_) std::tie(g, out.taps[0]) = split_channels(g, dw_[3]);
        g = b4_.backward(g);
        if (use_skips_) std::tie(g, out.taps[1]) = split_channels(g, dw_[2]);
        g = b3_.backward(g);
        if (use_skips_) std::tie(g, out.taps[2]) = split_channels(g, dw_[1]);
        out.features = b1_.backward(b2_.backward(g));
        return out;
    }

private:
    void check_taps(const EncoderOut<Scalar>& enc) const {
        if (!use_skips_) return;
        for (int i = 0; i < 3; ++i) {
            if (enc.taps[i].empty())
                throw ShapeError("decoder: missing skip tap " + std::to_string(i + 1));
            if (enc.taps[i].c() != skips_[i])
                throw ShapeError("decoder: skip tap " + std::to_string(i + 1) + " has " +
                                 enc.taps[i].shape_str() + ", expected " +
                                 std::to_string(skips_[i]) + " channels");
        }
    }

    bool use_skips_ = true;
    std::array<int, 4> dw_{};
    std::array<int, 3> skips_{};
    DecoderBlock<Scalar> b1_, b2_, b3_, b4_;
    nn::Conv2d<Scalar> fuse_;
    nn::GroupNorm<Scalar> gn_fuse_;
    Tensor<Scalar> a_fuse_;
};

}  // namespace cellmorph::model
