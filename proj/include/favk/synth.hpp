#pragma once

#include "favk/geometry.hpp"
#include "favk/raster.hpp"

namespace favk {

/// Procedural vessel phantom: a recursive binary tree of line segments with
/// geometrically decaying widths, rendered with radial contrast falloff and
/// additive Gaussian noise. Fully deterministic for a given spec.
struct PhantomSpec {
    uint64_t seed = 1;
    int width = 1024;
    int height = 1024;
    int branches = 5;          // trunks leaving the root
    int depth = 5;             // branching levels
    double root_width = 4.0;   // px
    double width_decay = 0.8;  // per level, in (0,1)
    double contrast_falloff = 0.85;  // vessel intensity factor at the corner radius
    double noise_sigma = 0.02;

    void validate() const;
};

struct Phantom {
    GrayImage image;
    BinaryMask mask;
};

Phantom gen_phantom(const PhantomSpec& spec);

/// Controlled warp of a vessel mask: keeps a (1 - drop) fraction of vessel
/// pixels, maps them through `truth`, jitters, then appends uniform outliers.
struct WarpSpec {
    TransformParams truth = identity_transform(Model::Poly2);
    double jitter_sigma = 0.5;      // px
    double outlier_fraction = 0.2;  // relative to kept inliers
    double drop_fraction = 0.0;
    uint64_t seed = 7;

    void validate() const;
};

struct Perturbed {
    PointSet points;        // kept inliers first, then outliers
    TransformParams truth;  // the planted transform, for oracle comparison
    size_t inlier_count = 0;
};

Perturbed perturb(const BinaryMask& mask, const WarpSpec& spec);

}  // namespace favk
