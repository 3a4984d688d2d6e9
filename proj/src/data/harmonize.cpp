#include "cellmorph/data/harmonize.hpp"

#include <set>

#include "cellmorph/core/tensor.hpp"
#include "cellmorph/nn/ops.hpp"

namespace cellmorph::data {

HarmonizedSample harmonize(const RawSegmentationSample& sample) {
    const auto& img = sample.image;
    const auto& inst = sample.instance_map;
    if (img.c != 3)
        throw ValidationError("harmonize: image must be HxWx3, got " + std::to_string(img.c) +
                              " channels");
    if (img.h != inst.h || img.w != inst.w)
        throw ValidationError("harmonize: image " + std::to_string(img.h) + "x" +
                              std::to_string(img.w) + " vs instance map " +
                              std::to_string(inst.h) + "x" + std::to_string(inst.w));
    for (const auto& [id, type] : sample.cell_types)
        if (type < 1 || type > 6)
            throw ValidationError("harmonize: instance " + std::to_string(id) +
                                  " has cell type " + std::to_string(type) + " outside 1..6");

    std::set<std::uint16_t> present;
    HarmonizedSample out;
    out.image = img;
    out.instances = inst;
    out.patient_id = sample.patient_id;
    out.source_id = sample.source_id;
    out.label_plane = ImageU8(img.h, img.w, 1);
    for (std::size_t i = 0; i < inst.pixels.size(); ++i) {
        const std::uint16_t id = inst.pixels[i];
        if (id == 0) continue;
        present.insert(id);
        const auto it = sample.cell_types.find(id);
        out.label_plane.pixels[i] =
            std::uint8_t(it == sample.cell_types.end() ? kUnknownLabel : it->second);
    }
    for (const auto& [id, type] : sample.cell_types)
        if (!present.count(id))
            throw ValidationError("harmonize: cell_types references instance " +
                                  std::to_string(id) + " absent from the instance map");
    return out;
}

HarmonizedSample resample_to_reference_magnification(const HarmonizedSample& sample,
                                                     Magnification magnification) {
    if (magnification == Magnification::x20) return sample;

    const int h2 = sample.image.h / 2, w2 = sample.image.w / 2;
    HarmonizedSample out;
    out.patient_id = sample.patient_id;
    out.source_id = sample.source_id;
    out.image = to_u8(nn::resize_bilinear(to_float<float>(sample.image), h2, w2));
    // Nearest-neighbor with the same half-pixel convention as the image
    // resize: destination (i,j) samples source (2i+1, 2j+1).
    out.label_plane = ImageU8(h2, w2, 1);
    const bool has_instances = !sample.instances.pixels.empty();
    if (has_instances) out.instances = ImageU16(h2, w2);
    for (int y = 0; y < h2; ++y) {
        for (int x = 0; x < w2; ++x) {
            out.label_plane.at(y, x, 0) = sample.label_plane.at(2 * y + 1, 2 * x + 1, 0);
            if (has_instances) out.instances.at(y, x) = sample.instances.at(2 * y + 1, 2 * x + 1);
        }
    }
    return out;
}

}  // namespace cellmorph::data
