#pragma once

#include <filesystem>

#include "cellmorph/data/types.hpp"

namespace cellmorph::data {

// A stored sample is one 4-channel 8-bit PNG: RGB in channels 1-3, the
// label plane in channel 4. The round trip is bit-exact.
void write_sample(const std::filesystem::path& path, const ImageU8& image,
                  const ImageU8& label_plane);

struct SamplePlanes {
    ImageU8 image;        // HxWx3
    ImageU8 label_plane;  // HxWx1
};

SamplePlanes read_sample(const std::filesystem::path& path);

}  // namespace cellmorph::data
