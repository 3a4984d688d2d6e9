#pragma once

#include <filesystem>

#include "cellmorph/core/image.hpp"

namespace cellmorph::data {

// 8-bit PNG with 1 (gray), 3 (RGB) or 4 (RGBA) channels. Palette and
// 16-bit files are rejected rather than silently converted.
ImageU8 read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageU8& img);

// 16-bit grayscale PNG; used for nucleus instance-id maps.
ImageU16 read_png16(const std::filesystem::path& path);
void write_png16(const std::filesystem::path& path, const ImageU16& img);

}  // namespace cellmorph::data
