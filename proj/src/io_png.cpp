#include "nakags/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

namespace nakags::io {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f != nullptr) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode, IoError::Direction dir) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) {
        throw IoError(dir, std::string("cannot open '") + path.string() + "' for " +
                               (dir == IoError::Direction::Read ? "reading" : "writing"));
    }
    return f;
}

void on_png_warning(png_structp, png_const_charp) {}

void on_png_error(png_structp png, png_const_charp msg) {
    if (auto* sink = static_cast<std::string*>(png_get_error_ptr(png)); sink != nullptr) *sink = msg;
    png_longjmp(png, 1);
}

}  // namespace

// libpng reports errors by longjmp back into these functions. Every object
// with a destructor is constructed before setjmp so none is skipped.
ImageBuffer read_png(const fs::path& path) {
    FilePtr file = open_file(path, "rb", IoError::Direction::Read);
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::vector<unsigned char> pixels;
    std::vector<png_bytep> rows;
    std::string failure;
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int depth = 0;
    int color_type = 0;
    std::size_t channels = 0;

    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &failure, on_png_error, on_png_warning);
    if (png != nullptr) info = png_create_info_struct(png);
    if (png == nullptr || info == nullptr) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(IoError::Direction::Read, "libpng initialization failed");
    }

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("png: '" + path.string() + "' is not a valid PNG file" +
                         (failure.empty() ? std::string() : ": " + failure));
    }

    png_init_io(png, file.get());
    png_read_info(png, info);
    png_get_IHDR(png, info, &width, &height, &depth, &color_type, nullptr, nullptr, nullptr);

    switch (color_type) {
        case PNG_COLOR_TYPE_GRAY:
            channels = 1;
            if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
            break;
        case PNG_COLOR_TYPE_GRAY_ALPHA:
            channels = 1;
            png_set_strip_alpha(png);
            break;
        case PNG_COLOR_TYPE_PALETTE:
            channels = 3;
            png_set_palette_to_rgb(png);
            break;
        case PNG_COLOR_TYPE_RGB:
            channels = 3;
            break;
        case PNG_COLOR_TYPE_RGB_ALPHA:
            channels = 3;
            png_set_strip_alpha(png);
            break;
        default:
            png_destroy_read_struct(&png, &info, nullptr);
            throw ParseError("png: '" + path.string() + "' has unsupported color type " +
                             std::to_string(color_type));
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int out_depth = png_get_bit_depth(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    pixels.resize(row_bytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const bool wide = out_depth == 16;
    const double maxval = wide ? 65535.0 : 255.0;
    ImageBuffer img(width, height, channels);
    for (std::size_t y = 0; y < height; ++y) {
        const unsigned char* row = rows[y];
        for (std::size_t x = 0; x < width; ++x) {
            for (std::size_t c = 0; c < channels; ++c) {
                const std::size_t s = x * channels + c;
                const unsigned v = wide ? (unsigned(row[2 * s]) << 8) | row[2 * s + 1] : row[s];
                img.at(x, y, c) = v / maxval;
            }
        }
    }
    return img;
}

void write_png(const ImageBuffer& img, const fs::path& path, int depth) {
    if (depth != 8 && depth != 16) throw InvalidArgument("png: bit depth must be 8 or 16");
    if (img.channels() != 1 && img.channels() != 3) throw InvalidArgument("png: image must have 1 or 3 channels");

    const std::size_t channels = img.channels();
    const std::size_t bytes_per_sample = depth == 16 ? 2 : 1;
    const std::size_t row_bytes = img.width() * channels * bytes_per_sample;
    const double maxval = depth == 16 ? 65535.0 : 255.0;
    std::vector<unsigned char> pixels(row_bytes * img.height());
    for (std::size_t y = 0; y < img.height(); ++y) {
        unsigned char* row = pixels.data() + y * row_bytes;
        for (std::size_t x = 0; x < img.width(); ++x) {
            for (std::size_t c = 0; c < channels; ++c) {
                const auto v = static_cast<unsigned>(std::lround(std::clamp(img.at(x, y, c), 0.0, 1.0) * maxval));
                const std::size_t s = x * channels + c;
                if (depth == 16) {
                    row[2 * s] = static_cast<unsigned char>(v >> 8);
                    row[2 * s + 1] = static_cast<unsigned char>(v & 0xff);
                } else {
                    row[s] = static_cast<unsigned char>(v);
                }
            }
        }
    }
    std::vector<png_bytep> rows(img.height());
    for (std::size_t y = 0; y < img.height(); ++y) rows[y] = pixels.data() + y * row_bytes;

    FilePtr file = open_file(path, "wb", IoError::Direction::Write);
    std::string failure;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &failure, on_png_error, on_png_warning);
    png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_write_struct(&png, &info);
        throw IoError(IoError::Direction::Write, "libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError(IoError::Direction::Write, "failed writing PNG '" + path.string() + "': " + failure);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), depth,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);

    if (std::fflush(file.get()) != 0) {
        throw IoError(IoError::Direction::Write, "failed writing PNG '" + path.string() + "'");
    }
}

}  // namespace nakags::io
