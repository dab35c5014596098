#pragma once

#include <Eigen/Dense>

#include "favk/raster.hpp"

namespace favk {

enum class Model { Euclidean, Similarity, Affine, Projective, Poly2 };

int param_count(Model m);
const char* model_name(Model m);
Model model_from_name(const std::string& name);

// Parameter layouts (u, v = input coordinates):
//   Euclidean  {theta, tx, ty}                p' = R(theta) q + t
//   Similarity {s, theta, tx, ty}             p' = s R(theta) q + t, s > 0
//   Affine     {a1..a6}                       x' = a1 + a2 u + a3 v
//                                             y' = a4 + a5 u + a6 v
//   Projective {h1..h8}, h9 = 1               x' = (h1 u + h2 v + h3) / w
//                                             y' = (h4 u + h5 v + h6) / w
//                                             w  = h7 u + h8 v + 1
//   Poly2      {b1..b12}                      x' = b1 + b2 u + b3 v + b4 u^2 + b5 uv + b6 v^2
//                                             y' = b7 + b8 u + b9 v + b10 u^2 + b11 uv + b12 v^2
struct TransformParams {
    Model model = Model::Euclidean;
    std::vector<double> beta;

    void validate() const;  // length matches model, finite values, similarity s > 0
};

TransformParams identity_transform(Model m);

Point apply(const TransformParams& t, Point q);

/// Analytic partials of apply() with respect to beta, 2 x param_count.
Eigen::MatrixXd jacobian(const TransformParams& t, Point q);

struct Box2 {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool degenerate() const { return !(x1 > x0) || !(y1 > y0); }
};

Box2 bounding_box(const PointSet& points);

/// Re-expresses t in a strictly higher model of the chain
/// Euclidean -> Similarity -> Affine -> Projective -> Poly2.
/// All hops are exact parameter embeddings except Projective -> Poly2, which
/// least-squares fits the polynomial to the homography's action on a 20x20
/// grid spanning `domain`.
TransformParams promote(const TransformParams& t, Model to_model, const Box2& domain);

/// Centering/scaling frame: normalized = (q - center) * scale.
struct NormFrame {
    double cx = 0, cy = 0;
    double scale = 1.0;  // 1 / RMS radius
};

/// Frame with centroid at the origin and unit RMS radius.
NormFrame make_norm_frame(const PointSet& points);
PointSet normalize(const PointSet& points, const NormFrame& frame);
Point normalize_point(Point p, const NormFrame& frame);
Point denormalize_point(Point p, const NormFrame& frame);

/// Converts parameters acting on normalized coordinates into parameters
/// acting on raw pixel coordinates (frame_src normalizes inputs, frame_dst
/// outputs), preserving the composed action. Euclidean requires equal frame
/// scales; every other model absorbs the scale change.
TransformParams denormalize_params(const TransformParams& t, const NormFrame& frame_src,
                                   const NormFrame& frame_dst);

/// Inverse of denormalize_params: raw-space parameters -> normalized-space.
TransformParams normalize_params(const TransformParams& t, const NormFrame& frame_src,
                                 const NormFrame& frame_dst);

}  // namespace favk
