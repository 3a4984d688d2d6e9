#pragma once

#include <memory>

#include "cellmorph/model/segnet.hpp"

namespace cellmorph::model {

// 3 RGB planes + nucleus probability + 7-way type distribution.
inline constexpr int kClsInputChannels = 3 + 1 + kTypeChannels;

// Stacks RGB with the segmentation output into the classification input.
template <typename Scalar>
Tensor<Scalar> fuse_input(const Tensor<Scalar>& rgb, const SegOut<Scalar>& seg) {
    if (rgb.c() != 3)
        throw ShapeError("fuse_input: rgb must have 3 channels, got " + rgb.shape_str());
    if (seg.nuclei.c() != 1 || seg.types.c() != kTypeChannels)
        throw ShapeError("fuse_input: segmentation output has " + seg.nuclei.shape_str() +
                         " / " + seg.types.shape_str());
    if (seg.nuclei.h() != rgb.h() || seg.nuclei.w() != rgb.w() ||
        seg.types.h() != rgb.h() || seg.types.w() != rgb.w())
        throw ShapeError("fuse_input: spatial mismatch between rgb " + rgb.shape_str() +
                         " and segmentation output " + seg.nuclei.shape_str());
    return concat_channels(concat_channels(rgb, seg.nuclei), seg.types);
}

// Same layout with the segmentation planes replaced by uniform noise. Used
// to pretrain the classification encoder before a trained segnet exists, so
// it cannot lean on the extra planes.
template <typename Scalar>
Tensor<Scalar> fuse_noise_input(const Tensor<Scalar>& rgb, Rng& rng) {
    if (rgb.c() != 3)
        throw ShapeError("fuse_noise_input: rgb must have 3 channels, got " + rgb.shape_str());
    Tensor<Scalar> noise =
        Tensor<Scalar>::random_uniform(rgb.h(), rgb.w(), 1 + kTypeChannels, rng);
    return concat_channels(rgb, noise);
}

template <typename Scalar>
struct ClsOut {
    Vec<Scalar> probs;     // per-category distribution
    Vec<Scalar> features;  // pooled bottleneck features (pre-dropout)
};

// Classification module: encoder over the fused 11-channel input, global
// average pooling, dropout, linear head with softmax.
template <typename Scalar>
class ClsModel {
public:
    ClsModel() = default;
    ClsModel(const BackboneConfig& cfg, int num_categories, Rng& rng)
        : encoder_(std::make_shared<Encoder<Scalar>>(cfg, kClsInputChannels, "clsnet.encoder",
                                                     rng)),
          dropout_(Scalar(0.2)),
          head_("clsnet.head", cfg.final_width, num_categories, rng) {}

    const BackboneConfig& config() const { return encoder_->config(); }
    int num_categories() const { return head_.out_dim(); }
    const std::shared_ptr<Encoder<Scalar>>& encoder() const { return encoder_; }

    nn::ParamRefs<Scalar> params() {
        nn::ParamRefs<Scalar> refs;
        encoder_->collect(refs);
        head_.collect(refs);
        return refs;
    }

    ClsOut<Scalar> forward(const Tensor<Scalar>& x) const {
        check_seg_input(x.h(), x.w(), x.c(), kClsInputChannels, "clsnet");
        ClsOut<Scalar> out;
        out.features = nn::global_avg_pool(encoder_->forward(x, false).features);
        out.probs = nn::softmax_vec(head_.forward(dropout_.forward(out.features)));
        return out;
    }

    Vec<Scalar> extract_features(const Tensor<Scalar>& x) const { return forward(x).features; }

    ClsOut<Scalar> forward_train(const Tensor<Scalar>& x, Rng& rng) {
        check_seg_input(x.h(), x.w(), x.c(), kClsInputChannels, "clsnet");
        EncoderOut<Scalar> enc = encoder_->forward_train(x);
        feat_h_ = enc.features.h();
        feat_w_ = enc.features.w();
        ClsOut<Scalar> out;
        out.features = nn::global_avg_pool(enc.features);
        out.probs =
            nn::softmax_vec(head_.forward_train(dropout_.forward_train(out.features, rng)));
        cached_probs_ = out.probs;
        return out;
    }

    void backward(const Vec<Scalar>& grad_probs) {
        Vec<Scalar> g = dropout_.backward(
            head_.backward(nn::softmax_vec_backward(grad_probs, cached_probs_)));
        encoder_->backward(nn::global_avg_pool_backward(g, feat_h_, feat_w_));
    }

private:
    std::shared_ptr<Encoder<Scalar>> encoder_;
    nn::Dropout<Scalar> dropout_;
    nn::Dense<Scalar> head_;
    Vec<Scalar> cached_probs_;
    int feat_h_ = 0, feat_w_ = 0;
};

// Pretraining companion for the classification encoder: the same encoder
// instance drives a skipless decoder with segmentation heads. The decoder
// and heads are scaffolding; only the shared encoder weights carry over.
template <typename Scalar>
class ClsPretrainModel {
public:
    ClsPretrainModel() = default;
    ClsPretrainModel(std::shared_ptr<Encoder<Scalar>> encoder, Rng& rng)
        : encoder_(std::move(encoder)),
          decoder_(encoder_->config(), false, "clspre.decoder", rng),
          head_nuclei_("clspre.head_nuclei", encoder_->config().fuse_width, 1, 1, 1, 0, rng),
          head_types_("clspre.head_types", encoder_->config().fuse_width, kTypeChannels, 1, 1, 0,
                      rng) {}

    const std::shared_ptr<Encoder<Scalar>>& encoder() const { return encoder_; }

    nn::ParamRefs<Scalar> params() {
        nn::ParamRefs<Scalar> refs;
        encoder_->collect(refs);
        decoder_.collect(refs);
        head_nuclei_.collect(refs);
        head_types_.collect(refs);
        return refs;
    }

    SegOut<Scalar> forward(const Tensor<Scalar>& x) const {
        check_seg_input(x.h(), x.w(), x.c(), kClsInputChannels, "clsnet pretrain");
        Tensor<Scalar> f = decoder_.forward(encoder_->forward(x, false));
        SegOut<Scalar> out;
        out.nuclei = nn::sigmoid(head_nuclei_.forward(f));
        out.types = nn::softmax_channels(head_types_.forward(f));
        return out;
    }

    SegOut<Scalar> forward_train(const Tensor<Scalar>& x) {
        check_seg_input(x.h(), x.w(), x.c(), kClsInputChannels, "clsnet pretrain");
        Tensor<Scalar> f = decoder_.forward_train(encoder_->forward_train(x));
        SegOut<Scalar> out;
        out.nuclei = nn::sigmoid(head_nuclei_.forward_train(f));
        out.types = nn::softmax_channels(head_types_.forward_train(f));
        cached_ = out;
        return out;
    }

    Tensor<Scalar> backward(const Tensor<Scalar>& grad_nuclei, const Tensor<Scalar>& grad_types) {
        Tensor<Scalar> gf =
            head_nuclei_.backward(nn::sigmoid_backward(grad_nuclei, cached_.nuclei));
        gf.array() += head_types_.backward(nn::softmax_backward(grad_types, cached_.types)).array();
        DecoderGrads<Scalar> dg = decoder_.backward(gf);
        return encoder_->backward(dg.features);
    }

private:
    std::shared_ptr<Encoder<Scalar>> encoder_;
    Decoder<Scalar> decoder_;
    nn::Conv2d<Scalar> head_nuclei_, head_types_;
    SegOut<Scalar> cached_;
};

// Seeds a wide stem from a pretrained narrower one: the leading input
// channels (RGB) take the pretrained weights, the extra channels start at
// zero so the added planes only contribute once training moves them.
template <typename Scalar>
void inflate_stem(const nn::Conv2d<Scalar>& src, nn::Conv2d<Scalar>& dst) {
    const int k = src.ksize(), si = src.in_channels(), di = dst.in_channels();
    const int out = src.out_channels();
    if (k != dst.ksize() || out != dst.out_channels() || si > di)
        throw ShapeError("inflate_stem: cannot inflate " + std::to_string(si) + "ch k" +
                         std::to_string(k) + " stem into " + std::to_string(di) + "ch k" +
                         std::to_string(dst.ksize()));
    auto& w = dst.weight().value;
    const auto& sw = src.weight().value;
    w.setZero();
    for (int t = 0; t < k * k; ++t)
        for (int ci = 0; ci < si; ++ci)
            for (int o = 0; o < out; ++o)
                w[(std::int64_t(t) * di + ci) * out + o] =
                    sw[(std::int64_t(t) * si + ci) * out + o];
    dst.bias().value = src.bias().value;
}

}  // namespace cellmorph::model
