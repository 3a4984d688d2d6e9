#pragma once

#include "cellmorph/data/types.hpp"

namespace cellmorph::data {

// Fuses the instance map and type annotations into the single label plane:
// background 0, typed nuclei 1..6, untyped nuclei 7. RGB bytes pass through
// unchanged.
HarmonizedSample harmonize(const RawSegmentationSample& sample);

// Brings a sample to the 20x reference scale. 40x samples are downscaled by
// exactly 2: bilinear (2x2 box average) for the image, nearest-neighbor for
// the label plane and instance map. 20x samples pass through.
HarmonizedSample resample_to_reference_magnification(const HarmonizedSample& sample,
                                                     Magnification magnification);

}  // namespace cellmorph::data
