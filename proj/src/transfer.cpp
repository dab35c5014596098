#include "favk/transfer.hpp"

#include <cmath>

namespace favk {

namespace {

// 3x3 square binary closing; out-of-bounds samples are ignored.
BinaryMask close3x3(const BinaryMask& mask) {
    const int w = mask.width, h = mask.height;
    BinaryMask dilated(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool on = false;
            for (int dy = -1; dy <= 1 && !on; ++dy)
                for (int dx = -1; dx <= 1 && !on; ++dx) {
                    int sx = x + dx, sy = y + dy;
                    if (sx >= 0 && sx < w && sy >= 0 && sy < h && mask.get(sx, sy)) on = true;
                }
            dilated.set(x, y, on);
        }
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool on = true;
            for (int dy = -1; dy <= 1 && on; ++dy)
                for (int dx = -1; dx <= 1 && on; ++dx) {
                    int sx = x + dx, sy = y + dy;
                    if (sx >= 0 && sx < w && sy >= 0 && sy < h && !dilated.get(sx, sy)) on = false;
                }
            out.set(x, y, on);
        }
    return out;
}

}  // namespace

BinaryMask warp_mask(const BinaryMask& mask, const TransformParams& t, int out_w, int out_h) {
    t.validate();
    BinaryMask splat(out_w, out_h);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.get(x, y)) continue;
            Point p = apply(t, {double(x), double(y)});
            long px = std::lround(p.x), py = std::lround(p.y);
            if (px >= 0 && px < out_w && py >= 0 && py < out_h)
                splat.set(int(px), int(py), true);
        }
    return close3x3(splat);
}

BinaryMask overlap_mask(const BinaryMask& src_fov, const TransformParams& t,
                        const BinaryMask& dst_fov) {
    BinaryMask warped = warp_mask(src_fov, t, dst_fov.width, dst_fov.height);
    BinaryMask out(dst_fov.width, dst_fov.height);
    for (size_t i = 0; i < out.size(); ++i) out.data[i] = warped.data[i] & dst_fov.data[i];
    return out;
}

TrainingPair make_training_pair(const GrayImage& fa, const BinaryMask& cf_vessels,
                                const BinaryMask& cf_fov, const BinaryMask& fa_fov,
                                const TransformParams& t) {
    if (fa.width != fa_fov.width || fa.height != fa_fov.height)
        throw Error("make_training_pair: fa and fa_fov dimensions differ");
    if (cf_vessels.width != cf_fov.width || cf_vessels.height != cf_fov.height)
        throw Error("make_training_pair: cf_vessels and cf_fov dimensions differ");

    TrainingPair pair;
    pair.image = fa;
    pair.roi = overlap_mask(cf_fov, t, fa_fov);
    BinaryMask warped = warp_mask(cf_vessels, t, fa.width, fa.height);
    pair.labels = BinaryMask(fa.width, fa.height);
    for (size_t i = 0; i < pair.labels.size(); ++i)
        pair.labels.data[i] = warped.data[i] & pair.roi.data[i];
    return pair;
}

}  // namespace favk
