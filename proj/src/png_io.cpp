#include "favk/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

namespace favk {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

// Decoded grayscale buffer, values already scaled to [0,1].
struct RawGray {
    int width = 0;
    int height = 0;
    std::vector<double> data;
};

RawGray decode_png(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw Error("cannot open PNG for reading: " + path);

    png_byte header[8];
    if (std::fread(header, 1, 8, f.get()) != 8 || png_sig_cmp(header, 0, 8))
        throw Error("not a PNG file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("PNG decode error: " + path);
    }
    png_init_io(png, f.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);
    if (w == 0 || h == 0) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("zero-dimension PNG: " + path);
    }

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_read_update_info(png, info);

    bit_depth = png_get_bit_depth(png, info);
    color_type = png_get_color_type(png, info);
    int channels = png_get_channels(png, info);

    size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<png_byte> buf(rowbytes * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = buf.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const double maxval = bit_depth == 16 ? 65535.0 : 255.0;
    auto sample = [&](png_bytep row, int x, int c) -> double {
        if (bit_depth == 16) {
            png_bytep p = row + (static_cast<size_t>(x) * channels + c) * 2;
            return (p[0] << 8 | p[1]) / maxval;  // PNG is big-endian
        }
        return row[static_cast<size_t>(x) * channels + c] / maxval;
    };

    RawGray out;
    out.width = static_cast<int>(w);
    out.height = static_cast<int>(h);
    out.data.resize(static_cast<size_t>(w) * h);
    bool has_color = color_type == PNG_COLOR_TYPE_RGB || color_type == PNG_COLOR_TYPE_RGB_ALPHA;
    for (png_uint_32 y = 0; y < h; ++y) {
        for (png_uint_32 x = 0; x < w; ++x) {
            double v;
            if (has_color) {
                // Rec.601 luma
                v = 0.299 * sample(rows[y], x, 0) + 0.587 * sample(rows[y], x, 1) +
                    0.114 * sample(rows[y], x, 2);
            } else {
                v = sample(rows[y], x, 0);  // gray or gray+alpha: first channel
            }
            out.data[static_cast<size_t>(y) * w + x] = v;
        }
    }
    return out;
}

void encode_png(const std::string& path, int width, int height, int bit_depth,
                const std::vector<uint16_t>& pixels) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw Error("cannot open PNG for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("PNG encode error: " + path);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(static_cast<size_t>(width) * (bit_depth == 16 ? 2 : 1));
    for (int y = 0; y < height; ++y) {
        if (bit_depth == 16) {
            for (int x = 0; x < width; ++x) {
                uint16_t v = pixels[static_cast<size_t>(y) * width + x];
                row[2 * x] = static_cast<png_byte>(v >> 8);
                row[2 * x + 1] = static_cast<png_byte>(v & 0xff);
            }
        } else {
            for (int x = 0; x < width; ++x)
                row[x] = static_cast<png_byte>(pixels[static_cast<size_t>(y) * width + x]);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

GrayImage load_gray(const std::string& path) {
    RawGray raw = decode_png(path);
    GrayImage img(raw.width, raw.height);
    img.data = std::move(raw.data);
    return img;
}

SoftMap load_soft(const std::string& path) {
    RawGray raw = decode_png(path);
    SoftMap map(raw.width, raw.height);
    map.data = std::move(raw.data);
    return map;
}

BinaryMask load_mask(const std::string& path) {
    RawGray raw = decode_png(path);
    BinaryMask mask(raw.width, raw.height);
    for (size_t i = 0; i < raw.data.size(); ++i)
        mask.data[i] = raw.data[i] >= 128.0 / 255.0 ? 1 : 0;
    return mask;
}

void save_gray(const GrayImage& img, const std::string& path) {
    std::vector<uint16_t> px(img.size());
    for (size_t i = 0; i < img.size(); ++i)
        px[i] = static_cast<uint16_t>(std::lround(img.data[i] * 65535.0));
    encode_png(path, img.width, img.height, 16, px);
}

void save_soft(const SoftMap& map, const std::string& path) {
    std::vector<uint16_t> px(map.size());
    for (size_t i = 0; i < map.size(); ++i)
        px[i] = static_cast<uint16_t>(std::lround(map.data[i] * 65535.0));
    encode_png(path, map.width, map.height, 16, px);
}

void save_mask(const BinaryMask& mask, const std::string& path) {
    std::vector<uint16_t> px(mask.size());
    for (size_t i = 0; i < mask.size(); ++i) px[i] = mask.data[i] ? 255 : 0;
    encode_png(path, mask.width, mask.height, 8, px);
}

}  // namespace favk
