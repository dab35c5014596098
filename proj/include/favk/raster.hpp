#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace favk {

/// Domain error; the CLI maps these to exit code 1.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// 2-D scalar intensity field, row-major, values in [0,1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {
        if (w <= 0 || h <= 0) throw Error("GrayImage: non-positive dimensions");
    }

    double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return data.size(); }
};

/// 2-D boolean field, row-major. Vessel maps, FOV masks, overlap masks.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;  // 0 or 1

    BinaryMask() = default;
    BinaryMask(int w, int h, bool fill = false)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill ? 1 : 0) {
        if (w <= 0 || h <= 0) throw Error("BinaryMask: non-positive dimensions");
    }

    uint8_t& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    bool get(int x, int y) const { return at(x, y) != 0; }
    void set(int x, int y, bool v) { at(x, y) = v ? 1 : 0; }
    size_t size() const { return data.size(); }

    size_t popcount() const {
        size_t n = 0;
        for (uint8_t v : data) n += (v != 0);
        return n;
    }
    bool operator==(const BinaryMask& o) const {
        return width == o.width && height == o.height && data == o.data;
    }
};

/// 2-D probability field in [0,1]; detector confidence before thresholding.
struct SoftMap {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    SoftMap() = default;
    SoftMap(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {
        if (w <= 0 || h <= 0) throw Error("SoftMap: non-positive dimensions");
    }
    double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return data.size(); }
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Unordered list of real-valued pixel coordinates. (0,0) is the center of the
/// top-left pixel; x grows rightward, y downward.
struct PointSet {
    std::vector<Point> points;

    size_t count() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

/// One point per true pixel, pixel-center convention, row-major scan order.
PointSet mask_to_points(const BinaryMask& mask);

/// 5-tap binomial (1,4,6,4,1)/16 smoothing with replicated borders, then
/// factor-2 decimation. Output is ceil(w/2) x ceil(h/2).
GrayImage pyramid_reduce(const GrayImage& img);

/// Bilinear upsampling to exactly (target_w, target_h). Target must be at
/// least the input size and no more than twice it.
GrayImage pyramid_expand(const GrayImage& img, int target_w, int target_h);

/// Mask variant: upsample the {0,1} field bilinearly, re-binarize at 0.5.
BinaryMask pyramid_expand(const BinaryMask& mask, int target_w, int target_h);

}  // namespace favk
