#include "favk/morph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace favk {

namespace {

inline int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

void MorphParams::validate() const {
    if (num_scales < 1) throw Error("MorphParams: num_scales must be >= 1");
    if (static_cast<int>(se_length_per_scale.size()) != num_scales)
        throw Error("MorphParams: se_length_per_scale must have num_scales entries");
    if (angles.empty()) throw Error("MorphParams: angles must be non-empty");
    for (double a : angles)
        if (a < 0.0 || a >= 180.0) throw Error("MorphParams: angles must lie in [0, 180)");
    for (int l : se_length_per_scale)
        if (l < 1) throw Error("MorphParams: SE lengths must be >= 1");
    if (num_scales > 1 && !is_power_of_two(downsample_rate))
        throw Error("MorphParams: downsample_rate must be a power of two");
    if (threshold_window < 3 || threshold_window % 2 == 0)
        throw Error("MorphParams: threshold_window must be odd and >= 3");
    if (min_area < 1) throw Error("MorphParams: min_area must be >= 1");
}

StructuringElement linear_se(int length, double angle_deg) {
    if (length < 1) throw Error("linear_se: length must be >= 1");
    if (angle_deg < 0.0 || angle_deg >= 180.0) throw Error("linear_se: angle must be in [0, 180)");

    const double rad = angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(rad), s = std::sin(rad);

    StructuringElement se;
    se.length = length;
    se.angle_deg = angle_deg;
    se.offsets.reserve(length);
    const int lo = -((length - 1) / 2);  // even lengths extend one step further positive
    if (std::abs(c) >= std::abs(s)) {
        const double slope = s / c;
        for (int k = 0; k < length; ++k) {
            int x = lo + k;
            se.offsets.emplace_back(x, round_half_up(x * slope));
        }
    } else {
        const double slope = c / s;
        for (int k = 0; k < length; ++k) {
            int y = lo + k;
            se.offsets.emplace_back(round_half_up(y * slope), y);
        }
    }
    return se;
}

GrayImage erode(const GrayImage& img, const StructuringElement& se) {
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double m = std::numeric_limits<double>::infinity();
            for (auto [dx, dy] : se.offsets) {
                int sx = x + dx, sy = y + dy;
                if (sx < 0 || sx >= img.width || sy < 0 || sy >= img.height) continue;
                m = std::min(m, img.at(sx, sy));
            }
            out.at(x, y) = std::isinf(m) ? img.at(x, y) : m;
        }
    }
    return out;
}

GrayImage dilate(const GrayImage& img, const StructuringElement& se) {
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double m = -std::numeric_limits<double>::infinity();
            for (auto [dx, dy] : se.offsets) {
                int sx = x - dx, sy = y - dy;  // reflected probe
                if (sx < 0 || sx >= img.width || sy < 0 || sy >= img.height) continue;
                m = std::max(m, img.at(sx, sy));
            }
            out.at(x, y) = std::isinf(m) ? img.at(x, y) : m;
        }
    }
    return out;
}

GrayImage opening(const GrayImage& img, const StructuringElement& se) {
    return dilate(erode(img, se), se);
}

GrayImage closing(const GrayImage& img, const StructuringElement& se) {
    return erode(dilate(img, se), se);
}

GrayImage modified_tophat(const GrayImage& img, const StructuringElement& se) {
    GrayImage smoothed = opening(closing(img, se), se);
    GrayImage out(img.width, img.height);
    for (size_t i = 0; i < img.size(); ++i)
        out.data[i] = img.data[i] - std::min(smoothed.data[i], img.data[i]);
    return out;
}

GrayImage combine_orientations(const std::vector<GrayImage>& responses) {
    if (responses.empty()) throw Error("combine_orientations: empty response list");
    const int w = responses.front().width, h = responses.front().height;
    for (const auto& r : responses)
        if (r.width != w || r.height != h)
            throw Error("combine_orientations: dimension mismatch");
    GrayImage out = responses.front();
    for (size_t i = 1; i < responses.size(); ++i)
        for (size_t p = 0; p < out.size(); ++p)
            out.data[p] = std::max(out.data[p], responses[i].data[p]);
    return out;
}

BinaryMask adaptive_threshold(const GrayImage& response, int window, double offset) {
    if (window < 3 || window % 2 == 0)
        throw Error("adaptive_threshold: window must be odd and >= 3");
    const int r = window / 2;
    const int w = response.width, h = response.height;

    // Separable box mean with replicated borders.
    GrayImage rowsum(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) acc += response.at(clampi(x + k, 0, w - 1), y);
            rowsum.at(x, y) = acc;
        }
    BinaryMask out(w, h);
    const double denom = double(window) * window;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) acc += rowsum.at(x, clampi(y + k, 0, h - 1));
            out.set(x, y, response.at(x, y) > acc / denom + offset);
        }
    return out;
}

BinaryMask area_open(const BinaryMask& mask, int min_area) {
    if (min_area < 1) throw Error("area_open: min_area must be >= 1");
    const int w = mask.width, h = mask.height;
    std::vector<int32_t> label(mask.size(), -1);
    BinaryMask out(w, h);
    std::vector<int32_t> stack;

    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            const size_t seed = size_t(y0) * w + x0;
            if (!mask.data[seed] || label[seed] >= 0) continue;
            // flood fill one 8-connected component
            std::vector<int32_t> comp;
            stack.clear();
            stack.push_back(int32_t(seed));
            label[seed] = 0;
            while (!stack.empty()) {
                int32_t idx = stack.back();
                stack.pop_back();
                comp.push_back(idx);
                int cx = idx % w, cy = idx / w;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        int nx = cx + dx, ny = cy + dy;
                        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                        size_t nidx = size_t(ny) * w + nx;
                        if (mask.data[nidx] && label[nidx] < 0) {
                            label[nidx] = 0;
                            stack.push_back(int32_t(nidx));
                        }
                    }
            }
            if (comp.size() >= size_t(min_area))
                for (int32_t idx : comp) out.data[idx] = 1;
        }
    }
    return out;
}

DetectResult detect_vessels(const GrayImage& img, const MorphParams& params) {
    params.validate();
    const int reduces_per_step =
        params.num_scales > 1 ? int(std::round(std::log2(double(params.downsample_rate)))) : 0;

    BinaryMask fused(img.width, img.height);
    SoftMap soft(img.width, img.height, 0.0);

    GrayImage scale_img = img;
    std::vector<std::pair<int, int>> dims;  // dimensions at each pyramid level built so far
    dims.emplace_back(img.width, img.height);

    for (int s = 0; s < params.num_scales; ++s) {
        if (s > 0) {
            for (int r = 0; r < reduces_per_step; ++r) {
                if (scale_img.width < 2 || scale_img.height < 2)
                    throw Error("detect_vessels: image too small for requested scales");
                scale_img = pyramid_reduce(scale_img);
                dims.emplace_back(scale_img.width, scale_img.height);
            }
        }

        std::vector<GrayImage> responses;
        responses.reserve(params.angles.size());
        for (double angle : params.angles)
            responses.push_back(
                modified_tophat(scale_img, linear_se(params.se_length_per_scale[s], angle)));
        GrayImage combined = combine_orientations(responses);

        BinaryMask mask_s = area_open(
            adaptive_threshold(combined, params.threshold_window, params.threshold_offset),
            params.min_area);

        // Walk back up through the recorded pyramid sizes.
        GrayImage resp_full = combined;
        BinaryMask mask_full = mask_s;
        for (size_t level = dims.size() - 1; level-- > 0;) {
            resp_full = pyramid_expand(resp_full, dims[level].first, dims[level].second);
            mask_full = pyramid_expand(mask_full, dims[level].first, dims[level].second);
        }

        for (size_t i = 0; i < fused.size(); ++i) {
            fused.data[i] |= mask_full.data[i];
            soft.data[i] = std::max(soft.data[i], std::clamp(resp_full.data[i], 0.0, 1.0));
        }
    }
    return {std::move(fused), std::move(soft)};
}

}  // namespace favk
