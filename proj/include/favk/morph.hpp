#pragma once

#include "favk/raster.hpp"

namespace favk {

/// Digital line segment through the origin, used as a flat structuring
/// element. Odd lengths are symmetric about (0,0); even lengths carry a
/// one-pixel asymmetry toward the positive direction.
struct StructuringElement {
    std::vector<std::pair<int, int>> offsets;  // (dx, dy)
    int length = 0;
    double angle_deg = 0.0;
};

struct MorphParams {
    int num_scales = 2;
    int downsample_rate = 2;
    std::vector<double> angles = {0, 20, 40, 60, 80, 100, 120, 140, 160};
    std::vector<int> se_length_per_scale = {6, 3};
    int threshold_window = 31;
    double threshold_offset = 0.01;
    int min_area = 30;

    void validate() const;
};

StructuringElement linear_se(int length, double angle_deg);

// Flat grayscale morphology. Out-of-bounds samples are ignored (padding by
// +inf for erosion, -inf for dilation).
GrayImage erode(const GrayImage& img, const StructuringElement& se);
GrayImage dilate(const GrayImage& img, const StructuringElement& se);
GrayImage opening(const GrayImage& img, const StructuringElement& se);
GrayImage closing(const GrayImage& img, const StructuringElement& se);

/// Residue X - min(opening(closing(X)), X). Non-negative everywhere; extracts
/// bright structures thinner than the element while tolerating noise.
GrayImage modified_tophat(const GrayImage& img, const StructuringElement& se);

/// Per-pixel maximum across orientation responses.
GrayImage combine_orientations(const std::vector<GrayImage>& responses);

/// Pixel is set iff response > local mean (window x window, replicated
/// borders) + offset. Window must be odd and >= 3.
BinaryMask adaptive_threshold(const GrayImage& response, int window, double offset);

/// Removes every 8-connected component smaller than min_area pixels.
BinaryMask area_open(const BinaryMask& mask, int min_area);

struct DetectResult {
    BinaryMask mask;   // OR-fusion of per-scale detections
    SoftMap soft;      // max of expanded pre-threshold responses, clipped
};

/// Multi-scale multi-orientation vessel detection. Each scale runs the
/// top-hat bank at its native resolution; per-scale masks are expanded back
/// to full size and OR-fused.
DetectResult detect_vessels(const GrayImage& img, const MorphParams& params);

}  // namespace favk
