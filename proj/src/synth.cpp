#include "favk/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "favk/rng.hpp"

namespace favk {

void PhantomSpec::validate() const {
    if (width < 8 || height < 8) throw Error("PhantomSpec: degenerate dimensions");
    if (branches < 1) throw Error("PhantomSpec: branches must be >= 1");
    if (depth < 1) throw Error("PhantomSpec: depth must be >= 1");
    if (root_width < 1.0) throw Error("PhantomSpec: root_width must be >= 1");
    if (width_decay <= 0.0 || width_decay >= 1.0)
        throw Error("PhantomSpec: width_decay must lie in (0,1)");
    if (contrast_falloff <= 0.0 || contrast_falloff > 1.0)
        throw Error("PhantomSpec: contrast_falloff must lie in (0,1]");
    if (noise_sigma < 0.0) throw Error("PhantomSpec: noise_sigma must be >= 0");
}

void WarpSpec::validate() const {
    truth.validate();
    if (jitter_sigma < 0.0) throw Error("WarpSpec: jitter_sigma must be >= 0");
    if (outlier_fraction < 0.0 || outlier_fraction >= 1.0)
        throw Error("WarpSpec: outlier_fraction must lie in [0,1)");
    if (drop_fraction < 0.0 || drop_fraction >= 1.0)
        throw Error("WarpSpec: drop_fraction must lie in [0,1)");
}

namespace {

// Stamps a thick segment as a chain of disks, step 0.5 px.
void render_segment(BinaryMask& mask, Point a, Point b, double width) {
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const int steps = std::max(1, int(std::ceil(len / 0.5)));
    const double radius = std::max(width, 1.0) / 2.0;
    const int ir = int(std::ceil(radius));
    for (int i = 0; i <= steps; ++i) {
        const double t = double(i) / steps;
        const double cx = a.x + (b.x - a.x) * t;
        const double cy = a.y + (b.y - a.y) * t;
        const int x0 = std::max(0, int(std::floor(cx)) - ir);
        const int x1 = std::min(mask.width - 1, int(std::ceil(cx)) + ir);
        const int y0 = std::max(0, int(std::floor(cy)) - ir);
        const int y1 = std::min(mask.height - 1, int(std::ceil(cy)) + ir);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x)
                if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius)
                    mask.set(x, y, true);
    }
}

// Every node derives its own stream from (seed, node id), so deepening the
// tree never reshuffles the randomness of shallower levels.
Rng node_rng(uint64_t seed, uint64_t node_id) {
    return Rng(seed ^ (node_id * 0xD1B54A32D192ED03ull));
}

void grow(BinaryMask& mask, const PhantomSpec& spec, uint64_t node_id, Point start,
          double heading, int level) {
    if (level >= spec.depth) return;
    Rng rng = node_rng(spec.seed, node_id);

    const double base_len = 0.30 * std::min(spec.width, spec.height);
    const double len = base_len * std::pow(0.62, level) * rng.uniform(0.85, 1.15);
    const double width = std::max(1.0, spec.root_width * std::pow(spec.width_decay, level));
    const double wobble = rng.uniform(-0.25, 0.25);

    Point end{start.x + len * std::cos(heading + wobble),
              start.y + len * std::sin(heading + wobble)};
    render_segment(mask, start, end, width);

    const double split = rng.uniform(0.25, 0.55);
    grow(mask, spec, node_id * 2 + 0, end, heading + wobble - split, level + 1);
    grow(mask, spec, node_id * 2 + 1, end, heading + wobble + split, level + 1);
}

}  // namespace

Phantom gen_phantom(const PhantomSpec& spec) {
    spec.validate();

    BinaryMask mask(spec.width, spec.height);
    const Point center{spec.width / 2.0, spec.height / 2.0};
    for (int b = 0; b < spec.branches; ++b) {
        Rng rng = node_rng(spec.seed, 0x10000000ull + b);
        const double heading =
            2.0 * std::numbers::pi * b / spec.branches + rng.uniform(-0.2, 0.2);
        grow(mask, spec, (uint64_t(b) + 1) << 24, center, heading, 0);
    }

    GrayImage image(spec.width, spec.height, 0.0);
    const double corner_r = std::hypot(center.x, center.y);
    const double vessel_base = 0.8;
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
            if (mask.get(x, y)) {
                const double r = std::hypot(x - center.x, y - center.y) / corner_r;
                image.at(x, y) = vessel_base * std::pow(spec.contrast_falloff, r);
            }
    if (spec.noise_sigma > 0.0) {
        Rng noise(spec.seed ^ 0xA5A5A5A55A5A5A5Aull);
        for (double& v : image.data)
            v = std::clamp(v + spec.noise_sigma * noise.gaussian(), 0.0, 1.0);
    }
    return {std::move(image), std::move(mask)};
}

Perturbed perturb(const BinaryMask& mask, const WarpSpec& spec) {
    spec.validate();
    PointSet vessel = mask_to_points(mask);
    if (vessel.empty()) throw Error("perturb: empty mask");
    const size_t n = vessel.count();

    Rng rng(spec.seed ^ 0xC2B2AE3D27D4EB4Full);
    const size_t kept = size_t(std::llround((1.0 - spec.drop_fraction) * double(n)));
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    for (size_t i = 0; i < kept && i < n; ++i) {
        size_t j = i + size_t(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(kept);
    std::sort(idx.begin(), idx.end());

    Perturbed out;
    out.truth = spec.truth;
    out.inlier_count = kept;
    out.points.points.reserve(kept + size_t(std::llround(spec.outlier_fraction * double(kept))));
    for (size_t i : idx) {
        Point p = apply(spec.truth, vessel.points[i]);
        p.x += spec.jitter_sigma * rng.gaussian();
        p.y += spec.jitter_sigma * rng.gaussian();
        out.points.points.push_back(p);
    }
    const size_t n_out = size_t(std::llround(spec.outlier_fraction * double(kept)));
    for (size_t i = 0; i < n_out; ++i)
        out.points.points.push_back(
            {rng.uniform(0.0, double(mask.width)), rng.uniform(0.0, double(mask.height))});
    return out;
}

}  // namespace favk
