#include "cellmorph/data/sample_io.hpp"

#include "cellmorph/data/png_io.hpp"

namespace cellmorph::data {

void write_sample(const std::filesystem::path& path, const ImageU8& image,
                  const ImageU8& label_plane) {
    if (image.c != 3)
        throw ValidationError("write_sample: image must be HxWx3, got " +
                              std::to_string(image.c) + " channels");
    if (label_plane.c != 1 || label_plane.h != image.h || label_plane.w != image.w)
        throw ValidationError("write_sample: label plane must be a single HxW channel matching "
                              "the image");
    for (const auto v : label_plane.pixels)
        if (v > kUnknownLabel)
            throw ValidationError("write_sample: label value " + std::to_string(int(v)) +
                                  " outside 0..7");
    ImageU8 rgba(image.h, image.w, 4);
    for (int y = 0; y < image.h; ++y) {
        for (int x = 0; x < image.w; ++x) {
            for (int ch = 0; ch < 3; ++ch) rgba.at(y, x, ch) = image.at(y, x, ch);
            rgba.at(y, x, 3) = label_plane.at(y, x, 0);
        }
    }
    write_png(path, rgba);
}

SamplePlanes read_sample(const std::filesystem::path& path) {
    const ImageU8 rgba = read_png(path);
    if (rgba.c != 4)
        throw ValidationError(path.string() + ": expected a 4-channel sample PNG, got " +
                              std::to_string(rgba.c) + " channels");
    SamplePlanes out;
    out.image = ImageU8(rgba.h, rgba.w, 3);
    out.label_plane = ImageU8(rgba.h, rgba.w, 1);
    for (int y = 0; y < rgba.h; ++y) {
        for (int x = 0; x < rgba.w; ++x) {
            for (int ch = 0; ch < 3; ++ch) out.image.at(y, x, ch) = rgba.at(y, x, ch);
            out.label_plane.at(y, x, 0) = rgba.at(y, x, 3);
        }
    }
    return out;
}

}  // namespace cellmorph::data
