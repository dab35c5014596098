#include "favk/raster.hpp"

#include <algorithm>
#include <cmath>

namespace favk {

PointSet mask_to_points(const BinaryMask& mask) {
    PointSet ps;
    ps.points.reserve(mask.popcount());
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.get(x, y)) ps.points.push_back({double(x), double(y)});
    return ps;
}

namespace {

constexpr double kKernel[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Separable 5-tap pass along x with replicated borders.
GrayImage smooth_x(const GrayImage& img) {
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int k = -2; k <= 2; ++k)
                acc += kKernel[k + 2] * img.at(clampi(x + k, 0, img.width - 1), y);
            out.at(x, y) = acc;
        }
    }
    return out;
}

GrayImage smooth_y(const GrayImage& img) {
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int k = -2; k <= 2; ++k)
                acc += kKernel[k + 2] * img.at(x, clampi(y + k, 0, img.height - 1));
            out.at(x, y) = acc;
        }
    }
    return out;
}

void check_expand_dims(int w, int h, int tw, int th) {
    if (tw < w || th < h) throw Error("pyramid_expand: target smaller than input");
    if (tw > 2 * w || th > 2 * h) throw Error("pyramid_expand: target beyond 2x input");
}

// Pixel-center mapping: out x covers the same physical extent as the input.
inline double src_coord(int out_idx, int out_n, int in_n) {
    return (out_idx + 0.5) * double(in_n) / double(out_n) - 0.5;
}

GrayImage bilinear_expand(const GrayImage& img, int tw, int th) {
    GrayImage out(tw, th);
    for (int y = 0; y < th; ++y) {
        double sy = src_coord(y, th, img.height);
        int y0 = clampi(int(std::floor(sy)), 0, img.height - 1);
        int y1 = clampi(y0 + 1, 0, img.height - 1);
        double wy = sy - std::floor(sy);
        if (sy < 0) { y0 = y1 = 0; wy = 0.0; }
        for (int x = 0; x < tw; ++x) {
            double sx = src_coord(x, tw, img.width);
            int x0 = clampi(int(std::floor(sx)), 0, img.width - 1);
            int x1 = clampi(x0 + 1, 0, img.width - 1);
            double wx = sx - std::floor(sx);
            if (sx < 0) { x0 = x1 = 0; wx = 0.0; }
            double top = img.at(x0, y0) * (1 - wx) + img.at(x1, y0) * wx;
            double bot = img.at(x0, y1) * (1 - wx) + img.at(x1, y1) * wx;
            out.at(x, y) = top * (1 - wy) + bot * wy;
        }
    }
    return out;
}

}  // namespace

GrayImage pyramid_reduce(const GrayImage& img) {
    if (img.width < 2 || img.height < 2)
        throw Error("pyramid_reduce: input must be at least 2x2");
    GrayImage smooth = smooth_y(smooth_x(img));
    int ow = (img.width + 1) / 2;
    int oh = (img.height + 1) / 2;
    GrayImage out(ow, oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) out.at(x, y) = smooth.at(2 * x, 2 * y);
    return out;
}

GrayImage pyramid_expand(const GrayImage& img, int target_w, int target_h) {
    check_expand_dims(img.width, img.height, target_w, target_h);
    return bilinear_expand(img, target_w, target_h);
}

BinaryMask pyramid_expand(const BinaryMask& mask, int target_w, int target_h) {
    check_expand_dims(mask.width, mask.height, target_w, target_h);
    GrayImage field(mask.width, mask.height);
    for (size_t i = 0; i < mask.size(); ++i) field.data[i] = mask.data[i] ? 1.0 : 0.0;
    GrayImage up = bilinear_expand(field, target_w, target_h);
    BinaryMask out(target_w, target_h);
    for (size_t i = 0; i < up.size(); ++i) out.data[i] = up.data[i] >= 0.5 ? 1 : 0;
    return out;
}

}  // namespace favk
