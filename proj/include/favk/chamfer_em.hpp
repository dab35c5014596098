#pragma once

#include <optional>

#include "favk/geometry.hpp"
#include "favk/raster.hpp"

namespace favk {

/// Exact squared Euclidean distance transform with nearest-point identities.
/// dist2(p) = |p - nearest(p)|^2 holds exactly at every pixel; ties resolve
/// to the nearest point with the smallest y, then smallest x.
struct DistanceField {
    int width = 0;
    int height = 0;
    std::vector<double> dist2;
    std::vector<int32_t> nearest_x;
    std::vector<int32_t> nearest_y;

    double dist2_at(int x, int y) const { return dist2[size_t(y) * width + x]; }
    Point nearest_at(int x, int y) const {
        size_t i = size_t(y) * width + x;
        return {double(nearest_x[i]), double(nearest_y[i])};
    }
};

DistanceField distance_field(const BinaryMask& reference);
/// Point-set variant; coordinates are rounded to pixels and must land inside
/// the width x height grid.
DistanceField distance_field(const PointSet& reference, int width, int height);

/// Per-point alignment errors: each transformed target is rounded and clamped
/// into the grid, the residual runs from the transformed (continuous)
/// location to that cell's recorded nearest reference point.
struct AlignmentErrors {
    std::vector<double> d;  // squared distances, px^2
    std::vector<Point> r;   // residual vectors nearest - T(q)
};
AlignmentErrors alignment_errors(const DistanceField& field, const TransformParams& t,
                                 const PointSet& targets);

/// Inlier posteriors under the exponential-inlier / uniform-outlier mixture:
/// p_j = pi lam e^{-lam d_j} / (pi lam e^{-lam d_j} + (1 - pi)/d_max).
std::vector<double> e_step(const std::vector<double>& d, double pi, double lambda, double d_max);

constexpr double kLambdaMax = 1e6;  // 1/px^2 cap when registration is exact

struct RateUpdate {
    double pi = 0.0;
    double lambda = 0.0;
    bool degenerate = false;  // lambda capped or update skipped
};
/// Closed-form maximizers pi = mean(p), lambda = sum(p) / sum(p d).
/// prev_lambda is returned (flagged) when the update is undefined.
RateUpdate m_step_rates(const std::vector<double>& p, const std::vector<double>& d,
                        double prev_lambda);

struct GridInitSpec {
    double trans_range_px = 0.0;  // <= 0: 10% of field width
    double trans_step_px = 8.0;
    double rot_range_deg = 10.0;
    double rot_step_deg = 2.0;
};

struct EmConfig {
    double d_max = 0.0;    // <= 0: (field diagonal)^2
    double pi0 = 0.9;
    double lambda0 = 0.0;  // <= 0: 1 / mean(d) at the initial alignment
    double em_tol = 1e-4;
    int em_max_iters = 50;
    double lm_sigma0 = 1e-3;
    double lm_factor = 10.0;
    int lm_max_iters = 100;
    std::optional<GridInitSpec> grid_init;  // absent: start from identity
    size_t max_points = 60000;
    bool em_enabled = true;  // false: unit weights throughout (plain chamfer)

    void validate() const;
};

/// Damped least-squares descent on the weighted chamfer objective
/// (1/N) sum_j p_j d_j(beta) at fixed weights. Accepted steps divide the
/// damping by lm_factor, rejected ones multiply it. The returned parameters
/// never have higher weighted error than init. Solved internally in
/// normalized coordinates; inputs and outputs are raw-pixel parameters.
TransformParams lm_minimize(const DistanceField& field, const PointSet& targets,
                            const std::vector<double>& weights, const TransformParams& init,
                            const EmConfig& cfg);

struct StageReport {
    Model model = Model::Euclidean;
    int iterations = 0;       // EM iterations run at this stage
    double weighted_error = 0.0;  // (1/N) sum p_j d_j at stage exit
};

struct RegistrationReport {
    TransformParams final_transform;  // Poly2
    std::vector<StageReport> stages;
    std::vector<double> posteriors;   // final p_j, aligned with the moving points used
    std::vector<double> distances;    // final d_j
    double pi = 0.0;
    double lambda = 0.0;
    bool converged = false;
    size_t points_used = 0;           // after optional subsampling
};

/// Progressive-cascade registration: Euclidean -> Similarity -> Affine ->
/// Projective -> Poly2, each stage running the EM loop (posteriors, rate
/// updates, weighted LM) warm-started from the previous stage.
RegistrationReport register_points(const BinaryMask& reference, const PointSet& moving,
                                   const EmConfig& cfg);
RegistrationReport register_masks(const BinaryMask& reference, const BinaryMask& moving,
                                  const EmConfig& cfg);

/// CSV dump "index,d,p" of the final per-point diagnostics.
void dump_posteriors_csv(const RegistrationReport& report, const std::string& path);

}  // namespace favk
