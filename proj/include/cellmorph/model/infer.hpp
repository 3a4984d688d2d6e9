#pragma once

#include "cellmorph/model/clsnet.hpp"
#include "cellmorph/model/segnet.hpp"

namespace cellmorph::model {

inline int pad_to_multiple(int n, int m) { return (n + m - 1) / m * m; }

// Arbitrary-resolution segmentation: inputs not divisible by 32 are
// reflect-padded on the bottom/right and the outputs cropped back, so the
// result always matches the input resolution. Already-aligned inputs take
// the direct path untouched.
template <typename Scalar>
SegOut<Scalar> segment_padded(const SegModel<Scalar>& net, const Tensor<Scalar>& rgb) {
    const int h = rgb.h(), w = rgb.w();
    const int h2 = pad_to_multiple(h, 32), w2 = pad_to_multiple(w, 32);
    if (h2 == h && w2 == w) return net.forward(rgb);
    SegOut<Scalar> out = net.forward(pad_reflect(rgb, 0, h2 - h, 0, w2 - w));
    out.nuclei = crop(out.nuclei, 0, 0, h, w);
    out.types = crop(out.types, 0, 0, h, w);
    return out;
}

// Full pipeline on one image of any size: the classification module
// consumes the padded planes directly since pooling is size-agnostic.
template <typename Scalar>
ClsOut<Scalar> classify_padded(const SegModel<Scalar>& seg, const ClsModel<Scalar>& cls,
                               const Tensor<Scalar>& rgb) {
    const int h2 = pad_to_multiple(rgb.h(), 32), w2 = pad_to_multiple(rgb.w(), 32);
    Tensor<Scalar> padded = h2 == rgb.h() && w2 == rgb.w()
                                ? rgb
                                : pad_reflect(rgb, 0, h2 - rgb.h(), 0, w2 - rgb.w());
    return cls.forward(fuse_input(padded, seg.forward(padded)));
}

}  // namespace cellmorph::model
