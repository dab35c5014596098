#include "favk/geometry.hpp"

#include <array>
#include <cmath>

namespace favk {

int param_count(Model m) {
    switch (m) {
        case Model::Euclidean: return 3;
        case Model::Similarity: return 4;
        case Model::Affine: return 6;
        case Model::Projective: return 8;
        case Model::Poly2: return 12;
    }
    throw Error("param_count: bad model");
}

const char* model_name(Model m) {
    switch (m) {
        case Model::Euclidean: return "euclidean";
        case Model::Similarity: return "similarity";
        case Model::Affine: return "affine";
        case Model::Projective: return "projective";
        case Model::Poly2: return "poly2";
    }
    throw Error("model_name: bad model");
}

Model model_from_name(const std::string& name) {
    for (Model m : {Model::Euclidean, Model::Similarity, Model::Affine, Model::Projective,
                    Model::Poly2})
        if (name == model_name(m)) return m;
    throw Error("unknown transform model: " + name);
}

void TransformParams::validate() const {
    if (static_cast<int>(beta.size()) != param_count(model))
        throw Error("TransformParams: beta length does not match model");
    for (double b : beta)
        if (!std::isfinite(b)) throw Error("TransformParams: non-finite parameter");
    if (model == Model::Similarity && beta[0] <= 0.0)
        throw Error("TransformParams: similarity scale must be positive");
}

TransformParams identity_transform(Model m) {
    TransformParams t;
    t.model = m;
    t.beta.assign(param_count(m), 0.0);
    switch (m) {
        case Model::Euclidean: break;
        case Model::Similarity: t.beta[0] = 1.0; break;
        case Model::Affine: t.beta[1] = 1.0; t.beta[5] = 1.0; break;
        case Model::Projective: t.beta[0] = 1.0; t.beta[4] = 1.0; break;
        case Model::Poly2: t.beta[1] = 1.0; t.beta[8] = 1.0; break;
    }
    return t;
}

Point apply(const TransformParams& t, Point q) {
    const auto& b = t.beta;
    const double u = q.x, v = q.y;
    switch (t.model) {
        case Model::Euclidean: {
            const double c = std::cos(b[0]), s = std::sin(b[0]);
            return {c * u - s * v + b[1], s * u + c * v + b[2]};
        }
        case Model::Similarity: {
            const double c = b[0] * std::cos(b[1]), s = b[0] * std::sin(b[1]);
            return {c * u - s * v + b[2], s * u + c * v + b[3]};
        }
        case Model::Affine:
            return {b[0] + b[1] * u + b[2] * v, b[3] + b[4] * u + b[5] * v};
        case Model::Projective: {
            const double w = b[6] * u + b[7] * v + 1.0;
            if (std::abs(w) < 1e-12) throw Error("projective transform: zero denominator");
            return {(b[0] * u + b[1] * v + b[2]) / w, (b[3] * u + b[4] * v + b[5]) / w};
        }
        case Model::Poly2: {
            const double uu = u * u, uv = u * v, vv = v * v;
            return {b[0] + b[1] * u + b[2] * v + b[3] * uu + b[4] * uv + b[5] * vv,
                    b[6] + b[7] * u + b[8] * v + b[9] * uu + b[10] * uv + b[11] * vv};
        }
    }
    throw Error("apply: bad model");
}

Eigen::MatrixXd jacobian(const TransformParams& t, Point q) {
    const auto& b = t.beta;
    const double u = q.x, v = q.y;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2, param_count(t.model));
    switch (t.model) {
        case Model::Euclidean: {
            const double c = std::cos(b[0]), s = std::sin(b[0]);
            J(0, 0) = -s * u - c * v;
            J(1, 0) = c * u - s * v;
            J(0, 1) = 1.0;
            J(1, 2) = 1.0;
            break;
        }
        case Model::Similarity: {
            const double c = std::cos(b[1]), s = std::sin(b[1]);
            J(0, 0) = c * u - s * v;
            J(1, 0) = s * u + c * v;
            J(0, 1) = b[0] * (-s * u - c * v);
            J(1, 1) = b[0] * (c * u - s * v);
            J(0, 2) = 1.0;
            J(1, 3) = 1.0;
            break;
        }
        case Model::Affine: {
            J(0, 0) = 1.0;
            J(0, 1) = u;
            J(0, 2) = v;
            J(1, 3) = 1.0;
            J(1, 4) = u;
            J(1, 5) = v;
            break;
        }
        case Model::Projective: {
            const double w = b[6] * u + b[7] * v + 1.0;
            if (std::abs(w) < 1e-12) throw Error("projective jacobian: zero denominator");
            const double x = (b[0] * u + b[1] * v + b[2]) / w;
            const double y = (b[3] * u + b[4] * v + b[5]) / w;
            J(0, 0) = u / w;
            J(0, 1) = v / w;
            J(0, 2) = 1.0 / w;
            J(0, 6) = -x * u / w;
            J(0, 7) = -x * v / w;
            J(1, 3) = u / w;
            J(1, 4) = v / w;
            J(1, 5) = 1.0 / w;
            J(1, 6) = -y * u / w;
            J(1, 7) = -y * v / w;
            break;
        }
        case Model::Poly2: {
            const double row[6] = {1.0, u, v, u * u, u * v, v * v};
            for (int k = 0; k < 6; ++k) {
                J(0, k) = row[k];
                J(1, 6 + k) = row[k];
            }
            break;
        }
    }
    return J;
}

Box2 bounding_box(const PointSet& points) {
    if (points.empty()) throw Error("bounding_box: empty point set");
    Box2 b{points.points[0].x, points.points[0].y, points.points[0].x, points.points[0].y};
    for (const Point& p : points.points) {
        b.x0 = std::min(b.x0, p.x);
        b.y0 = std::min(b.y0, p.y);
        b.x1 = std::max(b.x1, p.x);
        b.y1 = std::max(b.y1, p.y);
    }
    return b;
}

namespace {

int chain_index(Model m) {
    switch (m) {
        case Model::Euclidean: return 0;
        case Model::Similarity: return 1;
        case Model::Affine: return 2;
        case Model::Projective: return 3;
        case Model::Poly2: return 4;
    }
    throw Error("chain_index: bad model");
}

// Uniform scale + translation: p -> a*p + e. The only maps needed for
// normalization frames, so conjugation stays closed-form per model.
struct UniformAffine {
    double a = 1.0;
    double ex = 0.0, ey = 0.0;

    Point operator()(Point p) const { return {a * p.x + ex, a * p.y + ey}; }
};

UniformAffine to_normalized(const NormFrame& f) {
    return {f.scale, -f.scale * f.cx, -f.scale * f.cy};
}
UniformAffine from_normalized(const NormFrame& f) { return {1.0 / f.scale, f.cx, f.cy}; }

// Substitutes u' = a*u + ex, v' = a*v + ey (uniform) into a 6-coefficient
// quadratic row [c, u, v, u^2, uv, v^2] and returns the expanded row.
std::array<double, 6> quad_pre_substitute(const std::array<double, 6>& p,
                                          const UniformAffine& L) {
    const double a = L.a, e = L.ex, f = L.ey;
    std::array<double, 6> out{};
    out[0] = p[0] + p[1] * e + p[2] * f + p[3] * e * e + p[4] * e * f + p[5] * f * f;
    out[1] = p[1] * a + p[3] * 2 * a * e + p[4] * a * f;
    out[2] = p[2] * a + p[4] * a * e + p[5] * 2 * a * f;
    out[3] = p[3] * a * a;
    out[4] = p[4] * a * a;
    out[5] = p[5] * a * a;
    return out;
}

TransformParams conjugate(const TransformParams& t, const UniformAffine& pre,
                          const UniformAffine& post) {
    // result(q) = post(T(pre(q)))
    const auto& b = t.beta;
    TransformParams out;
    out.model = t.model;
    switch (t.model) {
        case Model::Euclidean: {
            if (std::abs(pre.a * post.a - 1.0) > 1e-9)
                throw Error("denormalize_params: frame scales must match for euclidean");
            const double c = std::cos(b[0]), s = std::sin(b[0]);
            const double rex = c * pre.ex - s * pre.ey, rey = s * pre.ex + c * pre.ey;
            out.beta = {b[0], post.a * (rex + b[1]) + post.ex, post.a * (rey + b[2]) + post.ey};
            break;
        }
        case Model::Similarity: {
            const double sc = b[0], th = b[1];
            const double c = std::cos(th), s = std::sin(th);
            const double rex = sc * (c * pre.ex - s * pre.ey);
            const double rey = sc * (s * pre.ex + c * pre.ey);
            out.beta = {sc * pre.a * post.a, th, post.a * (rex + b[2]) + post.ex,
                        post.a * (rey + b[3]) + post.ey};
            break;
        }
        case Model::Affine: {
            // x' = b0 + b1 u + b2 v ; y' = b3 + b4 u + b5 v
            const double k = pre.a * post.a;
            out.beta = {post.a * (b[0] + b[1] * pre.ex + b[2] * pre.ey) + post.ex,
                        b[1] * k,
                        b[2] * k,
                        post.a * (b[3] + b[4] * pre.ex + b[5] * pre.ey) + post.ey,
                        b[4] * k,
                        b[5] * k};
            break;
        }
        case Model::Projective: {
            Eigen::Matrix3d H;
            H << b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7], 1.0;
            Eigen::Matrix3d Mpre, Mpost;
            Mpre << pre.a, 0, pre.ex, 0, pre.a, pre.ey, 0, 0, 1;
            Mpost << post.a, 0, post.ex, 0, post.a, post.ey, 0, 0, 1;
            Eigen::Matrix3d R = Mpost * H * Mpre;
            if (std::abs(R(2, 2)) < 1e-15 * R.norm())
                throw Error("denormalize_params: homography lost normalization");
            R /= R(2, 2);
            out.beta = {R(0, 0), R(0, 1), R(0, 2), R(1, 0), R(1, 1), R(1, 2), R(2, 0), R(2, 1)};
            break;
        }
        case Model::Poly2: {
            std::array<double, 6> px{b[0], b[1], b[2], b[3], b[4], b[5]};
            std::array<double, 6> py{b[6], b[7], b[8], b[9], b[10], b[11]};
            px = quad_pre_substitute(px, pre);
            py = quad_pre_substitute(py, pre);
            out.beta.resize(12);
            for (int k = 0; k < 6; ++k) {
                out.beta[k] = post.a * px[k];
                out.beta[6 + k] = post.a * py[k];
            }
            out.beta[0] += post.ex;
            out.beta[6] += post.ey;
            break;
        }
    }
    return out;
}

TransformParams affine_to_poly2(const TransformParams& t) {
    const auto& a = t.beta;
    TransformParams out;
    out.model = Model::Poly2;
    out.beta = {a[0], a[1], a[2], 0, 0, 0, a[3], a[4], a[5], 0, 0, 0};
    return out;
}

TransformParams projective_to_poly2_fit(const TransformParams& t, const Box2& domain) {
    if (domain.degenerate())
        throw Error("promote: projective->poly2 fit needs a non-degenerate domain");

    constexpr int kGrid = 20;
    std::vector<Point> grid_in, grid_out;
    grid_in.reserve(kGrid * kGrid);
    grid_out.reserve(kGrid * kGrid);
    for (int i = 0; i < kGrid; ++i) {
        for (int j = 0; j < kGrid; ++j) {
            Point q{domain.x0 + (domain.x1 - domain.x0) * i / (kGrid - 1),
                    domain.y0 + (domain.y1 - domain.y0) * j / (kGrid - 1)};
            grid_in.push_back(q);
            grid_out.push_back(apply(t, q));
        }
    }

    // Condition the fit: both sides mapped near [-1,1] before solving, the
    // resulting polynomial conjugated back to raw coordinates exactly.
    auto frame_of = [](const std::vector<Point>& pts) {
        NormFrame f;
        for (const Point& p : pts) {
            f.cx += p.x;
            f.cy += p.y;
        }
        f.cx /= pts.size();
        f.cy /= pts.size();
        double rms = 0.0;
        for (const Point& p : pts)
            rms += (p.x - f.cx) * (p.x - f.cx) + (p.y - f.cy) * (p.y - f.cy);
        rms = std::sqrt(rms / pts.size());
        f.scale = rms > 1e-12 ? 1.0 / rms : 1.0;
        return f;
    };
    NormFrame fin = frame_of(grid_in), fout = frame_of(grid_out);

    const int n = int(grid_in.size());
    Eigen::MatrixXd Phi(n, 6);
    Eigen::VectorXd bx(n), by(n);
    for (int i = 0; i < n; ++i) {
        Point qn = normalize_point(grid_in[i], fin);
        Point pn = normalize_point(grid_out[i], fout);
        Phi.row(i) << 1.0, qn.x, qn.y, qn.x * qn.x, qn.x * qn.y, qn.y * qn.y;
        bx(i) = pn.x;
        by(i) = pn.y;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Phi);
    Eigen::VectorXd cx = qr.solve(bx);
    Eigen::VectorXd cy = qr.solve(by);

    TransformParams fitted;
    fitted.model = Model::Poly2;
    fitted.beta = {cx(0), cx(1), cx(2), cx(3), cx(4), cx(5),
                   cy(0), cy(1), cy(2), cy(3), cy(4), cy(5)};
    return denormalize_params(fitted, fin, fout);
}

}  // namespace

TransformParams promote(const TransformParams& t, Model to_model, const Box2& domain) {
    t.validate();
    if (chain_index(to_model) <= chain_index(t.model))
        throw Error("promote: target model must be strictly higher in the chain");

    TransformParams cur = t;
    while (cur.model != to_model) {
        switch (cur.model) {
            case Model::Euclidean: {
                TransformParams next;
                next.model = Model::Similarity;
                next.beta = {1.0, cur.beta[0], cur.beta[1], cur.beta[2]};
                cur = next;
                break;
            }
            case Model::Similarity: {
                const double s = cur.beta[0], c = std::cos(cur.beta[1]),
                             sn = std::sin(cur.beta[1]);
                TransformParams next;
                next.model = Model::Affine;
                next.beta = {cur.beta[2], s * c, -s * sn, cur.beta[3], s * sn, s * c};
                cur = next;
                break;
            }
            case Model::Affine: {
                if (to_model == Model::Poly2) {
                    cur = affine_to_poly2(cur);  // exact; skip the homography hop
                } else {
                    const auto& a = cur.beta;
                    TransformParams next;
                    next.model = Model::Projective;
                    next.beta = {a[1], a[2], a[0], a[4], a[5], a[3], 0.0, 0.0};
                    cur = next;
                }
                break;
            }
            case Model::Projective:
                cur = projective_to_poly2_fit(cur, domain);
                break;
            case Model::Poly2:
                throw Error("promote: nothing above poly2");
        }
    }
    return cur;
}

NormFrame make_norm_frame(const PointSet& points) {
    if (points.empty()) throw Error("make_norm_frame: empty point set");
    NormFrame f;
    for (const Point& p : points.points) {
        f.cx += p.x;
        f.cy += p.y;
    }
    f.cx /= points.count();
    f.cy /= points.count();
    double rms = 0.0;
    for (const Point& p : points.points)
        rms += (p.x - f.cx) * (p.x - f.cx) + (p.y - f.cy) * (p.y - f.cy);
    rms = std::sqrt(rms / points.count());
    if (rms < 1e-12) throw Error("make_norm_frame: zero spread");
    f.scale = 1.0 / rms;
    return f;
}

PointSet normalize(const PointSet& points, const NormFrame& frame) {
    PointSet out;
    out.points.reserve(points.count());
    for (const Point& p : points.points) out.points.push_back(normalize_point(p, frame));
    return out;
}

Point normalize_point(Point p, const NormFrame& f) {
    return {(p.x - f.cx) * f.scale, (p.y - f.cy) * f.scale};
}

Point denormalize_point(Point p, const NormFrame& f) {
    return {p.x / f.scale + f.cx, p.y / f.scale + f.cy};
}

TransformParams denormalize_params(const TransformParams& t, const NormFrame& frame_src,
                                   const NormFrame& frame_dst) {
    t.validate();
    return conjugate(t, to_normalized(frame_src), from_normalized(frame_dst));
}

TransformParams normalize_params(const TransformParams& t, const NormFrame& frame_src,
                                 const NormFrame& frame_dst) {
    t.validate();
    return conjugate(t, from_normalized(frame_src), to_normalized(frame_dst));
}

}  // namespace favk
