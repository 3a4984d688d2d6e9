#pragma once

#include <array>
#include <map>
#include <string>

#include "cellmorph/core/error.hpp"
#include "cellmorph/core/image.hpp"

namespace cellmorph::data {

enum class Magnification { x20, x40 };

inline Magnification parse_magnification(const std::string& s) {
    if (s == "20x") return Magnification::x20;
    if (s == "40x") return Magnification::x40;
    throw ValidationError("unknown magnification '" + s + "' (expected 20x or 40x)");
}

inline std::string to_string(Magnification m) {
    return m == Magnification::x20 ? "20x" : "40x";
}

// Label-plane palette: 0 background, 1..6 cell types, 7 nucleus of unknown type.
inline constexpr int kBackgroundLabel = 0;
inline constexpr int kUnknownLabel = 7;
inline const std::array<std::string, 8> kLabelNames = {
    "background", "lymphocyte",  "epithelial", "plasma",
    "neutrophil", "eosinophil",  "connective", "unknown"};

// Overlay colors for types 1..6 (RGB).
inline constexpr std::array<std::array<std::uint8_t, 3>, 6> kTypeColors = {{
    {255, 0, 0},      // lymphocyte: red
    {0, 255, 0},      // epithelial: green
    {0, 0, 255},      // plasma: blue
    {255, 165, 0},    // neutrophil: orange
    {255, 0, 255},    // eosinophil: magenta
    {255, 255, 0},    // connective: yellow
}};

// A segmentation sample as delivered by a source dataset: instance ids plus
// an optional per-instance type annotation.
struct RawSegmentationSample {
    ImageU8 image;                            // HxWx3
    ImageU16 instance_map;                    // HxW, 0 = background
    std::map<std::uint16_t, int> cell_types;  // instance id -> type in 1..6; may be empty
    std::string source_id;
    Magnification magnification = Magnification::x20;
    std::string patient_id;
};

// The unified training sample: RGB plus one fused label plane. The original
// instance map rides along (when the source had one) for instance-level
// evaluation; it is not part of the 4-channel PNG encoding.
struct HarmonizedSample {
    ImageU8 image;        // HxWx3
    ImageU8 label_plane;  // HxWx1, values 0..7
    ImageU16 instances;   // optional: empty when the source gave none
    std::string patient_id;
    std::string source_id;
};

}  // namespace cellmorph::data
