// Brute-force reference implementations used as test oracles. Everything here
// is computed straight from the defining formulas, independent of the library
// code paths it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "favk/geometry.hpp"
#include "favk/raster.hpp"

namespace oracle {

// ---- nearest-point scan ----------------------------------------------------

struct NearestHit {
    double dist2;
    int x, y;
};

/// O(pixels * points) nearest reference pixel; ties to smallest (y, then x).
inline NearestHit nearest_point(const favk::BinaryMask& ref, int px, int py) {
    NearestHit best{std::numeric_limits<double>::infinity(), -1, -1};
    for (int y = 0; y < ref.height; ++y)
        for (int x = 0; x < ref.width; ++x) {
            if (!ref.get(x, y)) continue;
            double d = double(px - x) * (px - x) + double(py - y) * (py - y);
            if (d < best.dist2) best = {d, x, y};
            // equal distance: scan order (y, then x) already visits the
            // smaller candidate first, so never replace on a tie
        }
    return best;
}

// ---- flat grayscale morphology ----------------------------------------------

using Offsets = std::vector<std::pair<int, int>>;

inline favk::GrayImage erode_direct(const favk::GrayImage& img, const Offsets& off) {
    favk::GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double m = std::numeric_limits<double>::infinity();
            bool any = false;
            for (auto [dx, dy] : off) {
                int sx = x + dx, sy = y + dy;
                if (sx < 0 || sy < 0 || sx >= img.width || sy >= img.height) continue;
                any = true;
                if (img.at(sx, sy) < m) m = img.at(sx, sy);
            }
            out.at(x, y) = any ? m : img.at(x, y);
        }
    return out;
}

inline favk::GrayImage dilate_direct(const favk::GrayImage& img, const Offsets& off) {
    favk::GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double m = -std::numeric_limits<double>::infinity();
            bool any = false;
            for (auto [dx, dy] : off) {
                int sx = x - dx, sy = y - dy;
                if (sx < 0 || sy < 0 || sx >= img.width || sy >= img.height) continue;
                any = true;
                if (img.at(sx, sy) > m) m = img.at(sx, sy);
            }
            out.at(x, y) = any ? m : img.at(x, y);
        }
    return out;
}

/// Eq.-by-eq composition: dilate, erode (closing); erode, dilate (opening);
/// min with the input; subtract.
inline favk::GrayImage tophat_direct(const favk::GrayImage& img, const Offsets& off) {
    favk::GrayImage closing = erode_direct(dilate_direct(img, off), off);
    favk::GrayImage opening = dilate_direct(erode_direct(closing, off), off);
    favk::GrayImage out(img.width, img.height);
    for (size_t i = 0; i < img.size(); ++i)
        out.data[i] = img.data[i] - std::min(opening.data[i], img.data[i]);
    return out;
}

// ---- sliding mean -----------------------------------------------------------

inline double window_mean_replicated(const favk::GrayImage& img, int cx, int cy, int window) {
    const int r = window / 2;
    double acc = 0.0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            int sx = std::clamp(cx + dx, 0, img.width - 1);
            int sy = std::clamp(cy + dy, 0, img.height - 1);
            acc += img.at(sx, sy);
        }
    return acc / (double(window) * window);
}

// ---- connected components via union-find ------------------------------------

inline std::vector<int> component_sizes_8(const favk::BinaryMask& mask,
                                          std::vector<int>* labels_out = nullptr) {
    const int w = mask.width, h = mask.height;
    std::vector<int> parent(size_t(w) * h);
    for (size_t i = 0; i < parent.size(); ++i) parent[i] = int(i);
    std::function<int(int)> find = [&](int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    auto unite = [&](int a, int b) { parent[find(a)] = find(b); };

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.get(x, y)) continue;
            for (auto [dx, dy] : {std::pair{1, 0}, {0, 1}, {1, 1}, {-1, 1}}) {
                int nx = x + dx, ny = y + dy;
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                if (mask.get(nx, ny)) unite(y * w + x, ny * w + nx);
            }
        }

    std::vector<int> size(size_t(w) * h, 0);
    for (int i = 0; i < w * h; ++i)
        if (mask.data[i]) size[find(i)]++;
    std::vector<int> out;
    std::vector<int> labels(size_t(w) * h, -1);
    for (int i = 0; i < w * h; ++i) {
        if (!mask.data[i]) continue;
        labels[i] = find(i);
    }
    for (int i = 0; i < w * h; ++i)
        if (mask.data[i] && find(i) == i) out.push_back(size[i]);
    if (labels_out) *labels_out = std::move(labels);
    return out;
}

// ---- exhaustive threshold metrics --------------------------------------------

struct SweepPoint {
    double threshold, recall, fpr, precision, dice;
};

/// Confusion at every candidate threshold (positive = soft >= threshold),
/// enumerated directly; used against the 257-level implementations on inputs
/// quantized to the k/256 grid.
inline std::vector<SweepPoint> exhaustive_sweep(const favk::SoftMap& soft,
                                                const favk::BinaryMask& gt,
                                                const favk::BinaryMask& roi,
                                                const std::vector<double>& thresholds) {
    std::vector<SweepPoint> out;
    for (double t : thresholds) {
        long tp = 0, fp = 0, tn = 0, fn = 0;
        for (size_t i = 0; i < soft.size(); ++i) {
            if (!roi.data[i]) continue;
            bool pred = soft.data[i] >= t;
            bool pos = gt.data[i] != 0;
            if (pred && pos) ++tp;
            else if (pred && !pos) ++fp;
            else if (!pred && pos) ++fn;
            else ++tn;
        }
        SweepPoint p{};
        p.threshold = t;
        p.recall = tp + fn > 0 ? double(tp) / (tp + fn) : 0.0;
        p.fpr = fp + tn > 0 ? double(fp) / (fp + tn) : 0.0;
        p.precision = tp + fp > 0 ? double(tp) / (tp + fp) : 1.0;
        p.dice = 2 * tp + fp + fn > 0 ? 2.0 * tp / (2 * tp + fp + fn) : 0.0;
        out.push_back(p);
    }
    return out;
}

inline double trapezoid(const std::vector<double>& xs, const std::vector<double>& ys) {
    double area = 0.0;
    for (size_t i = 1; i < xs.size(); ++i)
        area += (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]) / 2.0;
    return area;
}

// ---- finite differences -------------------------------------------------------

/// Central difference of apply() w.r.t. each parameter, step h.
inline favk::Point fd_column(const favk::TransformParams& t, favk::Point q, int param,
                             double h) {
    favk::TransformParams hi = t, lo = t;
    hi.beta[param] += h;
    lo.beta[param] -= h;
    favk::Point a = favk::apply(hi, q), b = favk::apply(lo, q);
    return {(a.x - b.x) / (2 * h), (a.y - b.y) / (2 * h)};
}

// ---- EM formulas, directly from their defining expressions ----------------------

inline double posterior_direct(double d, double pi, double lambda, double d_max) {
    const double inl = pi * lambda * std::exp(-lambda * d);
    const double outl = (1.0 - pi) / d_max;
    return inl / (inl + outl);
}

/// Expected complete-data log likelihood as a function of (pi, lambda) at
/// fixed posteriors; the convention 0 * log(0) = 0 handles the boundaries.
inline double q_function(const std::vector<double>& p, const std::vector<double>& d,
                         double pi, double lambda, double d_max) {
    double q = 0.0;
    for (size_t j = 0; j < p.size(); ++j) {
        if (p[j] > 0.0)
            q += p[j] * (-lambda * d[j] + std::log(pi) + std::log(lambda));
        if (p[j] < 1.0)
            q += (1.0 - p[j]) * (std::log(1.0 - pi) - std::log(d_max));
    }
    return q;
}

}  // namespace oracle
