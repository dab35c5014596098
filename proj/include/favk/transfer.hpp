#pragma once

#include "favk/geometry.hpp"
#include "favk/raster.hpp"

namespace favk {

/// Forward-maps every true pixel through t into an out_w x out_h frame, then
/// applies one 3x3 binary closing to seal single-pixel sampling gaps left by
/// the forward splat in thin structures.
BinaryMask warp_mask(const BinaryMask& mask, const TransformParams& t, int out_w, int out_h);

/// warp_mask(src_fov, t) intersected with dst_fov.
BinaryMask overlap_mask(const BinaryMask& src_fov, const TransformParams& t,
                        const BinaryMask& dst_fov);

/// Aligned training sample: the FA image is never resampled, labels come to it.
struct TrainingPair {
    GrayImage image;
    BinaryMask labels;  // transferred vessels, masked to roi
    BinaryMask roi;     // overlap of the transformed source FOV and the target FOV
};

TrainingPair make_training_pair(const GrayImage& fa, const BinaryMask& cf_vessels,
                                const BinaryMask& cf_fov, const BinaryMask& fa_fov,
                                const TransformParams& t);

}  // namespace favk
