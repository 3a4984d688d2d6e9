#pragma once

#include "cellmorph/augment/policy.hpp"
#include "cellmorph/core/image.hpp"
#include "cellmorph/core/tensor.hpp"

namespace cellmorph::augment {

// Result of an augmentation: float image in [0,1] plus the label plane
// transformed through the identical geometry. label is empty for
// classification samples.
struct AugmentedPair {
    Tensor<float> image;
    ImageU8 label;

    bool has_label() const { return !label.pixels.empty(); }
};

// Applies forced parameters: geometric (rescale+aspect, rotation) on image
// and label together, then photometric and noise on the image alone.
// Rotations that are exact multiples of 90 degrees take a lossless
// transposition path, so they permute pixels without resampling.
AugmentedPair apply(const ImageU8& image, const ImageU8* label, const AugmentParams& params);

// Draws parameters from the policy and applies them.
AugmentedPair augment(const ImageU8& image, const ImageU8* label,
                      const AugmentationPolicy& policy, Rng& rng);

// Aligned size x size crop at a random offset; inputs smaller than the crop
// are reflect-padded first.
AugmentedPair crop_random(const AugmentedPair& pair, int size, Rng& rng);

// Deterministic centered variant for validation passes.
AugmentedPair crop_center(const AugmentedPair& pair, int size);

// Shared helpers (used by the preview CLI and tests).
ImageU8 resize_label_nearest(const ImageU8& label, int h2, int w2);
Tensor<float> rotate_image(const Tensor<float>& image, double degrees);
ImageU8 rotate_label(const ImageU8& label, double degrees);

}  // namespace cellmorph::augment
