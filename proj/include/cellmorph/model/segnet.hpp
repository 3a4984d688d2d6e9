#pragma once

#include "cellmorph/model/decoder.hpp"

namespace cellmorph::model {

inline constexpr int kNumCellTypes = 6;
// Type-map channels: background + the six cell types.
inline constexpr int kTypeChannels = kNumCellTypes + 1;

template <typename Scalar>
struct SegOut {
    Tensor<Scalar> nuclei;  // HxWx1 nucleus probability
    Tensor<Scalar> types;   // HxWx7 per-pixel type distribution
};

inline void check_seg_input(int h, int w, int c, int expect_c, const std::string& who) {
    if (c != expect_c)
        throw ShapeError(who + ": expected " + std::to_string(expect_c) +
                         " input channels, got " + std::to_string(c));
    if (h % 32 != 0 || w % 32 != 0)
        throw ShapeError(who + ": input " + std::to_string(h) + "x" + std::to_string(w) +
                         " not divisible by 32; pad before calling");
}

// Segmentation module: encoder with skip taps, skip-connected decoder, and
// two pixel heads (nucleus probability, cell-type distribution).
template <typename Scalar>
class SegModel {
public:
    SegModel() = default;
    SegModel(const BackboneConfig& cfg, Rng& rng)
        : encoder_(cfg, 3, "segnet.encoder", rng),
          decoder_(cfg, true, "segnet.decoder", rng),
          head_nuclei_("segnet.head_nuclei", cfg.fuse_width, 1, 1, 1, 0, rng),
          head_types_("segnet.head_types", cfg.fuse_width, kTypeChannels, 1, 1, 0, rng) {}

    const BackboneConfig& config() const { return encoder_.config(); }
    Encoder<Scalar>& encoder() { return encoder_; }
    const Encoder<Scalar>& encoder() const { return encoder_; }

    nn::ParamRefs<Scalar> params() {
        nn::ParamRefs<Scalar> refs;
        encoder_.collect(refs);
        decoder_.collect(refs);
        head_nuclei_.collect(refs);
        head_types_.collect(refs);
        return refs;
    }

    SegOut<Scalar> forward(const Tensor<Scalar>& x) const {
        check_seg_input(x.h(), x.w(), x.c(), 3, "segnet");
        EncoderOut<Scalar> enc = encoder_.forward(x, true);
        Tensor<Scalar> f = decoder_.forward(enc);
        SegOut<Scalar> out;
        out.nuclei = nn::sigmoid(head_nuclei_.forward(f));
        out.types = nn::softmax_channels(head_types_.forward(f));
        return out;
    }

    SegOut<Scalar> forward_train(const Tensor<Scalar>& x) {
        check_seg_input(x.h(), x.w(), x.c(), 3, "segnet");
        Tensor<Scalar> f = decoder_.forward_train(encoder_.forward_train(x));
        SegOut<Scalar> out;
        out.nuclei = nn::sigmoid(head_nuclei_.forward_train(f));
        out.types = nn::softmax_channels(head_types_.forward_train(f));
        cached_ = out;
        return out;
    }

    // Gradients are w.r.t. the output probabilities.
    Tensor<Scalar> backward(const Tensor<Scalar>& grad_nuclei, const Tensor<Scalar>& grad_types) {
        Tensor<Scalar> gf = head_nuclei_.backward(nn::sigmoid_backward(grad_nuclei, cached_.nuclei));
        gf.array() += head_types_.backward(nn::softmax_backward(grad_types, cached_.types)).array();
        DecoderGrads<Scalar> dg = decoder_.backward(gf);
        return encoder_.backward(dg.features, &dg.taps);
    }

private:
    Encoder<Scalar> encoder_;
    Decoder<Scalar> decoder_;
    nn::Conv2d<Scalar> head_nuclei_, head_types_;
    SegOut<Scalar> cached_;
};

}  // namespace cellmorph::model
