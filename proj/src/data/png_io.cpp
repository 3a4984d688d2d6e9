#include "cellmorph/data/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

#include "cellmorph/core/error.hpp"

namespace cellmorph::data {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct ReadCtx {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~ReadCtx() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct WriteCtx {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~WriteCtx() { png_destroy_write_struct(&png, &info); }
};

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw ValidationError(path.string() + ": " + what);
}

}  // namespace

ImageU8 read_png(const std::filesystem::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) fail(path, "cannot open for reading");
    ReadCtx ctx;
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) fail(path, "libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png))) fail(path, "not a decodable PNG");
    png_init_io(ctx.png, f.get());
    png_read_info(ctx.png, ctx.info);

    const int depth = png_get_bit_depth(ctx.png, ctx.info);
    const int color = png_get_color_type(ctx.png, ctx.info);
    if (depth != 8) fail(path, "expected 8-bit PNG, got " + std::to_string(depth) + "-bit");
    if (color == PNG_COLOR_TYPE_PALETTE) fail(path, "palette PNGs not supported");
    png_set_interlace_handling(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    ImageU8 img(int(png_get_image_height(ctx.png, ctx.info)),
                int(png_get_image_width(ctx.png, ctx.info)),
                int(png_get_channels(ctx.png, ctx.info)));
    if (img.c != 1 && img.c != 3 && img.c != 4)
        fail(path, "expected 1, 3 or 4 channels, got " + std::to_string(img.c));

    std::vector<png_bytep> rows(std::size_t(img.h));
    for (int y = 0; y < img.h; ++y)
        rows[std::size_t(y)] = img.pixels.data() + std::size_t(y) * img.w * img.c;
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);
    return img;
}

void write_png(const std::filesystem::path& path, const ImageU8& img) {
    if (img.c != 1 && img.c != 3 && img.c != 4)
        throw ValidationError("write_png: unsupported channel count " + std::to_string(img.c));
    FilePtr f(std::fopen(path.string().c_str(), "wb"));
    if (!f) fail(path, "cannot open for writing");
    WriteCtx ctx;
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) fail(path, "libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png))) fail(path, "write failed");
    png_init_io(ctx.png, f.get());
    const int color = img.c == 1   ? PNG_COLOR_TYPE_GRAY
                      : img.c == 3 ? PNG_COLOR_TYPE_RGB
                                   : PNG_COLOR_TYPE_RGBA;
    png_set_IHDR(ctx.png, ctx.info, png_uint_32(img.w), png_uint_32(img.h), 8, color,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    std::vector<png_bytep> rows(std::size_t(img.h));
    for (int y = 0; y < img.h; ++y)
        rows[std::size_t(y)] =
            const_cast<png_bytep>(img.pixels.data() + std::size_t(y) * img.w * img.c);
    png_write_image(ctx.png, rows.data());
    png_write_end(ctx.png, nullptr);
}

ImageU16 read_png16(const std::filesystem::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) fail(path, "cannot open for reading");
    ReadCtx ctx;
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) fail(path, "libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png))) fail(path, "not a decodable PNG");
    png_init_io(ctx.png, f.get());
    png_read_info(ctx.png, ctx.info);

    if (png_get_bit_depth(ctx.png, ctx.info) != 16 ||
        png_get_color_type(ctx.png, ctx.info) != PNG_COLOR_TYPE_GRAY)
        fail(path, "expected 16-bit grayscale PNG");
    png_set_swap(ctx.png);  // PNG stores big-endian
    png_set_interlace_handling(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    ImageU16 img(int(png_get_image_height(ctx.png, ctx.info)),
                 int(png_get_image_width(ctx.png, ctx.info)));
    std::vector<png_bytep> rows(std::size_t(img.h));
    for (int y = 0; y < img.h; ++y)
        rows[std::size_t(y)] =
            reinterpret_cast<png_bytep>(img.pixels.data() + std::size_t(y) * img.w);
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);
    return img;
}

void write_png16(const std::filesystem::path& path, const ImageU16& img) {
    FilePtr f(std::fopen(path.string().c_str(), "wb"));
    if (!f) fail(path, "cannot open for writing");
    WriteCtx ctx;
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) fail(path, "libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png))) fail(path, "write failed");
    png_init_io(ctx.png, f.get());
    png_set_IHDR(ctx.png, ctx.info, png_uint_32(img.w), png_uint_32(img.h), 16,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    png_set_swap(ctx.png);
    std::vector<png_bytep> rows(std::size_t(img.h));
    for (int y = 0; y < img.h; ++y)
        rows[std::size_t(y)] = reinterpret_cast<png_bytep>(
            const_cast<std::uint16_t*>(img.pixels.data()) + std::size_t(y) * img.w);
    png_write_image(ctx.png, rows.data());
    png_write_end(ctx.png, nullptr);
}

}  // namespace cellmorph::data
