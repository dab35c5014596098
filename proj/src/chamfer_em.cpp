#include "favk/chamfer_em.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

#include "favk/rng.hpp"

namespace favk {

namespace {

inline int64_t floordiv(int64_t a, int64_t b) {  // b > 0
    int64_t q = a / b, r = a % b;
    return (r != 0 && r < 0) ? q - 1 : q;
}

constexpr int64_t kNoSite = std::numeric_limits<int64_t>::min();

}  // namespace

// Two-pass exact squared Euclidean distance transform. Pass one scans each
// row for the nearest reference column (ties to the smaller x); pass two runs
// a lower-envelope sweep down each column over the row results (ties to the
// smaller y). All arithmetic is integer, so the output matches a brute-force
// nearest-point search exactly, including the tie rule.
DistanceField distance_field(const BinaryMask& reference) {
    const int w = reference.width, h = reference.height;
    if (reference.popcount() == 0) throw Error("distance_field: empty reference set");

    DistanceField out;
    out.width = w;
    out.height = h;
    out.dist2.assign(size_t(w) * h, 0.0);
    out.nearest_x.assign(size_t(w) * h, -1);
    out.nearest_y.assign(size_t(w) * h, -1);

    // Pass 1: per-row 1-D distances. row_d2[i] = (x - x')^2 for the nearest
    // reference x' in the same row, row_wx[i] = that x' (-1 if the row is empty).
    std::vector<int64_t> row_d2(size_t(w) * h, -1);
    std::vector<int32_t> row_wx(size_t(w) * h, -1);
    for (int y = 0; y < h; ++y) {
        const size_t base = size_t(y) * w;
        int last = -1;
        for (int x = 0; x < w; ++x) {
            if (reference.data[base + x]) last = x;
            row_wx[base + x] = last;
            row_d2[base + x] = last >= 0 ? int64_t(x - last) * (x - last) : -1;
        }
        int nxt = -1;
        for (int x = w - 1; x >= 0; --x) {
            if (reference.data[base + x]) nxt = x;
            if (nxt < 0) continue;
            int64_t d = int64_t(nxt - x) * (nxt - x);
            if (row_d2[base + x] < 0 || d < row_d2[base + x]) {  // tie keeps the left x'
                row_d2[base + x] = d;
                row_wx[base + x] = nxt;
            }
        }
    }

    // Pass 2: per-column lower envelope of parabolas f(y') + (y - y')^2.
    std::vector<int> site_y(h);
    std::vector<int64_t> site_f(h);
    std::vector<int> v(h);
    std::vector<int64_t> start(h);
    for (int x = 0; x < w; ++x) {
        int nsites = 0;
        for (int y = 0; y < h; ++y) {
            int64_t f = row_d2[size_t(y) * w + x];
            if (f >= 0) {
                site_y[nsites] = y;
                site_f[nsites] = f;
                ++nsites;
            }
        }
        // First integer y where site j strictly beats site i (i earlier, so
        // ties stay with the smaller y').
        auto strict_win_start = [&](int i, int j) {
            int64_t num = site_f[j] + int64_t(site_y[j]) * site_y[j] - site_f[i] -
                          int64_t(site_y[i]) * site_y[i];
            int64_t den = 2 * int64_t(site_y[j] - site_y[i]);
            return floordiv(num, den) + 1;
        };

        int k = 0;
        v[0] = 0;
        start[0] = kNoSite;
        for (int i = 1; i < nsites; ++i) {
            int64_t xs = strict_win_start(v[k], i);
            while (k > 0 && xs <= start[k]) {
                --k;
                xs = strict_win_start(v[k], i);
            }
            ++k;
            v[k] = i;
            start[k] = xs;
        }

        int kk = 0;
        for (int y = 0; y < h; ++y) {
            while (kk < k && start[kk + 1] <= y) ++kk;
            const int s = v[kk];
            const size_t i = size_t(y) * w + x;
            const int64_t dy = y - site_y[s];
            out.dist2[i] = double(site_f[s] + dy * dy);
            out.nearest_x[i] = row_wx[size_t(site_y[s]) * w + x];
            out.nearest_y[i] = site_y[s];
        }
    }
    return out;
}

DistanceField distance_field(const PointSet& reference, int width, int height) {
    if (reference.empty()) throw Error("distance_field: empty reference set");
    BinaryMask grid(width, height);
    for (const Point& p : reference.points) {
        long px = std::lround(p.x), py = std::lround(p.y);
        if (px < 0 || px >= width || py < 0 || py >= height)
            throw Error("distance_field: reference point outside the grid");
        grid.set(int(px), int(py), true);
    }
    return distance_field(grid);
}

AlignmentErrors alignment_errors(const DistanceField& field, const TransformParams& t,
                                 const PointSet& targets) {
    t.validate();
    AlignmentErrors out;
    out.d.reserve(targets.count());
    out.r.reserve(targets.count());
    for (const Point& q : targets.points) {
        Point p = apply(t, q);
        int cx = int(std::lround(std::clamp(p.x, 0.0, double(field.width - 1))));
        int cy = int(std::lround(std::clamp(p.y, 0.0, double(field.height - 1))));
        Point n = field.nearest_at(cx, cy);
        Point r{n.x - p.x, n.y - p.y};
        out.r.push_back(r);
        out.d.push_back(r.x * r.x + r.y * r.y);
    }
    return out;
}

std::vector<double> e_step(const std::vector<double>& d, double pi, double lambda,
                           double d_max) {
    if (lambda <= 0.0) throw Error("e_step: lambda must be positive");
    if (d_max <= 0.0) throw Error("e_step: d_max must be positive");
    std::vector<double> p(d.size());
    if (pi >= 1.0) {
        std::fill(p.begin(), p.end(), 1.0);
        return p;
    }
    if (pi <= 0.0) return p;  // zeros
    const double uniform_density = (1.0 - pi) / d_max;
    for (size_t j = 0; j < d.size(); ++j) {
        if (!std::isfinite(d[j])) throw Error("e_step: non-finite distance");
        double inlier = pi * lambda * std::exp(-lambda * d[j]);
        p[j] = inlier / (inlier + uniform_density);
    }
    return p;
}

RateUpdate m_step_rates(const std::vector<double>& p, const std::vector<double>& d,
                        double prev_lambda) {
    if (p.empty() || p.size() != d.size()) throw Error("m_step_rates: size mismatch");
    double sp = 0.0, spd = 0.0;
    for (size_t j = 0; j < p.size(); ++j) {
        sp += p[j];
        spd += p[j] * d[j];
    }
    RateUpdate out;
    out.pi = sp / double(p.size());
    if (sp <= 0.0) {
        out.lambda = prev_lambda;
        out.degenerate = true;
        return out;
    }
    if (spd <= 0.0) {
        out.lambda = kLambdaMax;
        out.degenerate = true;
        return out;
    }
    out.lambda = sp / spd;
    if (out.lambda > kLambdaMax) {
        out.lambda = kLambdaMax;
        out.degenerate = true;
    }
    return out;
}

void EmConfig::validate() const {
    if (pi0 <= 0.0 || pi0 >= 1.0) throw Error("EmConfig: pi0 must lie in (0,1)");
    if (lm_factor <= 1.0) throw Error("EmConfig: lm_factor must exceed 1");
    if (em_tol <= 0.0) throw Error("EmConfig: em_tol must be positive");
    if (em_max_iters < 1 || lm_max_iters < 1) throw Error("EmConfig: iteration caps must be >= 1");
    if (lm_sigma0 <= 0.0) throw Error("EmConfig: lm_sigma0 must be positive");
    if (max_points < 1) throw Error("EmConfig: max_points must be >= 1");
}

namespace {

bool params_valid(const TransformParams& t) {
    for (double b : t.beta)
        if (!std::isfinite(b)) return false;
    if (t.model == Model::Similarity && t.beta[0] <= 0.0) return false;
    return true;
}

struct Residuals {
    double weighted_error = 0.0;  // normalized units
    std::vector<Point> r;
};

// Rigid output-side adjustment: result(q) = sp R(thp) (T(q) - about) + about + shift.
// Stays within the model family for every model except Euclidean with sp != 1.
TransformParams post_rigid(const TransformParams& t, double sp, double thp, Point about,
                           Point shift) {
    const double c = std::cos(thp), s = std::sin(thp);
    // full post map: x'' = a x' + b y' + ex ; y'' = -b x' + a y' + ey (rotation by thp)
    const double a = sp * c, b = -sp * s;
    const double ex = about.x + shift.x - (a * about.x + b * about.y);
    const double ey = about.y + shift.y - (-b * about.x + a * about.y);

    TransformParams out = t;
    switch (t.model) {
        case Model::Euclidean: {
            out.beta[0] = t.beta[0] + thp;
            out.beta[1] = a * t.beta[1] + b * t.beta[2] + ex;
            out.beta[2] = -b * t.beta[1] + a * t.beta[2] + ey;
            break;
        }
        case Model::Similarity: {
            out.beta[0] = t.beta[0] * sp;
            out.beta[1] = t.beta[1] + thp;
            out.beta[2] = a * t.beta[2] + b * t.beta[3] + ex;
            out.beta[3] = -b * t.beta[2] + a * t.beta[3] + ey;
            break;
        }
        case Model::Affine: {
            const auto& v = t.beta;
            out.beta = {a * v[0] + b * v[3] + ex,  a * v[1] + b * v[4],  a * v[2] + b * v[5],
                        -b * v[0] + a * v[3] + ey, -b * v[1] + a * v[4], -b * v[2] + a * v[5]};
            break;
        }
        case Model::Projective: {
            const auto& v = t.beta;
            // bottom row of the post map is (0,0,1): h7, h8 are untouched
            out.beta = {a * v[0] + b * v[3] + ex * v[6],  a * v[1] + b * v[4] + ex * v[7],
                        a * v[2] + b * v[5] + ex,         -b * v[0] + a * v[3] + ey * v[6],
                        -b * v[1] + a * v[4] + ey * v[7], -b * v[2] + a * v[5] + ey,
                        v[6],                             v[7]};
            break;
        }
        case Model::Poly2: {
            const auto& v = t.beta;
            for (int k = 0; k < 6; ++k) {
                out.beta[k] = a * v[k] + b * v[6 + k];
                out.beta[6 + k] = -b * v[k] + a * v[6 + k];
            }
            out.beta[0] += ex;
            out.beta[6] += ey;
            break;
        }
    }
    return out;
}

// Residuals of the raw-pixel chamfer objective expressed in the normalized
// frame (residual * frame.scale); the weighted error is proportional to the
// pixel-space objective by the constant scale^2.
Residuals eval_normalized(const DistanceField& field, const std::vector<Point>& norm_targets,
                          const std::vector<double>& weights, const TransformParams& t_norm,
                          const NormFrame& frame) {
    Residuals res;
    res.r.reserve(norm_targets.size());
    double acc = 0.0;
    for (size_t j = 0; j < norm_targets.size(); ++j) {
        Point pn = apply(t_norm, norm_targets[j]);
        Point praw = denormalize_point(pn, frame);
        int cx = int(std::lround(std::clamp(praw.x, 0.0, double(field.width - 1))));
        int cy = int(std::lround(std::clamp(praw.y, 0.0, double(field.height - 1))));
        Point n = field.nearest_at(cx, cy);
        Point rn{(n.x - praw.x) * frame.scale, (n.y - praw.y) * frame.scale};
        res.r.push_back(rn);
        acc += weights[j] * (rn.x * rn.x + rn.y * rn.y);
    }
    res.weighted_error = acc / double(norm_targets.size());
    return res;
}

}  // namespace

TransformParams lm_minimize(const DistanceField& field, const PointSet& targets,
                            const std::vector<double>& weights, const TransformParams& init,
                            const EmConfig& cfg) {
    cfg.validate();
    init.validate();
    if (targets.empty()) throw Error("lm_minimize: empty target set");
    if (weights.size() != targets.count()) throw Error("lm_minimize: weight count mismatch");
    for (double w : weights)
        if (!(w >= 0.0 && w <= 1.0)) throw Error("lm_minimize: weights must lie in [0,1]");

    const NormFrame frame = make_norm_frame(targets);
    std::vector<Point> nq(targets.count());
    for (size_t j = 0; j < targets.count(); ++j)
        nq[j] = normalize_point(targets.points[j], frame);

    TransformParams t = normalize_params(init, frame, frame);
    const int k = param_count(t.model);

    Residuals cur = eval_normalized(field, nq, weights, t, frame);
    double sigma = cfg.lm_sigma0;
    int iters = 0;

    auto descend = [&]() {  // damped least-squares until local convergence
        while (iters < cfg.lm_max_iters) {
            Eigen::MatrixXd N = Eigen::MatrixXd::Zero(k, k);
            Eigen::VectorXd g = Eigen::VectorXd::Zero(k);
            for (size_t j = 0; j < nq.size(); ++j) {
                if (weights[j] == 0.0) continue;
                Eigen::MatrixXd J = jacobian(t, nq[j]);
                Eigen::Vector2d r(cur.r[j].x, cur.r[j].y);
                N.noalias() += weights[j] * J.transpose() * J;
                g.noalias() += weights[j] * J.transpose() * r;
            }
            if (g.norm() == 0.0) return;  // stationary (or all weights zero)

            bool accepted = false;
            while (iters < cfg.lm_max_iters) {
                ++iters;
                Eigen::MatrixXd A = N + sigma * Eigen::MatrixXd::Identity(k, k);
                Eigen::VectorXd delta = A.ldlt().solve(g);
                if (!delta.allFinite()) {
                    sigma *= cfg.lm_factor;
                    if (sigma > 1e18) return;
                    continue;
                }
                TransformParams cand = t;
                for (int i = 0; i < k; ++i) cand.beta[i] += delta(i);
                if (params_valid(cand)) {
                    Residuals next;
                    bool ok = true;
                    try {
                        next = eval_normalized(field, nq, weights, cand, frame);
                    } catch (const Error&) {
                        ok = false;  // e.g. projective denominator crossed zero
                    }
                    if (ok && next.weighted_error < cur.weighted_error) {
                        const double improvement = cur.weighted_error - next.weighted_error;
                        t = cand;
                        cur = std::move(next);
                        sigma = std::max(sigma / cfg.lm_factor, 1e-15);
                        accepted = true;
                        if (delta.norm() < cfg.em_tol) return;
                        if (improvement < cfg.em_tol * std::max(cur.weighted_error, 1e-30))
                            return;
                        break;  // rebuild the normal equations at the new point
                    }
                }
                sigma *= cfg.lm_factor;
                if (sigma > 1e18) return;
            }
            if (!accepted) return;
        }
    };

    // The chamfer surface of pixel-lattice data carries sub-pixel local minima
    // separated by barriers narrower than half a cell. After the descent
    // stalls, probe a fixed set of rigid nudges around the transformed
    // centroid and keep a strict improvement, then resume descending.
    constexpr int kMaxEscapeRounds = 8;
    for (int round = 0; round <= kMaxEscapeRounds; ++round) {
        descend();
        if (iters >= cfg.lm_max_iters || cur.weighted_error == 0.0) break;

        Point centroid{0, 0};
        for (const Point& q : nq) {
            Point p = apply(t, q);
            centroid.x += p.x;
            centroid.y += p.y;
        }
        centroid.x /= double(nq.size());
        centroid.y /= double(nq.size());

        std::vector<TransformParams> candidates;
        for (double step_px : {0.5, 0.25}) {
            const double s = step_px * frame.scale;  // pixel step in normalized units
            for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1},
                                  {1, 1}, {1, -1}, {-1, 1}, {-1, -1}})
                candidates.push_back(post_rigid(t, 1.0, 0.0, centroid, {dx * s, dy * s}));
        }
        for (double thp : {2e-3, -2e-3, 5e-4, -5e-4})
            candidates.push_back(post_rigid(t, 1.0, thp, centroid, {0, 0}));
        if (t.model != Model::Euclidean)
            for (double sp : {1.004, 0.996, 1.001, 0.999})
                candidates.push_back(post_rigid(t, sp, 0.0, centroid, {0, 0}));

        bool hopped = false;
        Residuals best;
        TransformParams best_t = t;
        for (const TransformParams& cand : candidates) {
            if (!params_valid(cand)) continue;
            Residuals r;
            try {
                r = eval_normalized(field, nq, weights, cand, frame);
            } catch (const Error&) {
                continue;
            }
            const double bar = hopped ? best.weighted_error : cur.weighted_error;
            if (r.weighted_error < bar * (1.0 - 1e-12)) {
                best = std::move(r);
                best_t = cand;
                hopped = true;
            }
        }
        if (!hopped) break;
        t = std::move(best_t);
        cur = std::move(best);
        sigma = cfg.lm_sigma0;
    }
    return denormalize_params(t, frame, frame);
}

namespace {

PointSet subsample_points(const PointSet& pts, size_t max_points) {
    if (pts.count() <= max_points) return pts;
    std::vector<size_t> idx(pts.count());
    std::iota(idx.begin(), idx.end(), size_t{0});
    Rng rng(0x9E3779B97F4A7C15ull);  // fixed seed: subsampling is part of the contract
    for (size_t i = 0; i < max_points; ++i) {
        size_t j = i + size_t(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(max_points);
    std::sort(idx.begin(), idx.end());
    PointSet out;
    out.points.reserve(max_points);
    for (size_t i : idx) out.points.push_back(pts.points[i]);
    return out;
}

TransformParams grid_search_seed(const DistanceField& field, const PointSet& pts,
                                 const GridInitSpec& spec) {
    Point c{0, 0};
    for (const Point& p : pts.points) {
        c.x += p.x;
        c.y += p.y;
    }
    c.x /= pts.count();
    c.y /= pts.count();

    const double tr = spec.trans_range_px > 0 ? spec.trans_range_px : 0.1 * field.width;
    const double ts = std::max(spec.trans_step_px, 1.0);
    const double rr = spec.rot_range_deg * std::numbers::pi / 180.0;
    const double rs = std::max(spec.rot_step_deg, 0.1) * std::numbers::pi / 180.0;

    double best_score = std::numeric_limits<double>::infinity();
    TransformParams best = identity_transform(Model::Euclidean);
    for (double th = -rr; th <= rr + 1e-12; th += rs) {
        const double cs = std::cos(th), sn = std::sin(th);
        for (double dx = -tr; dx <= tr + 1e-9; dx += ts) {
            for (double dy = -tr; dy <= tr + 1e-9; dy += ts) {
                double acc = 0.0;
                for (const Point& q : pts.points) {
                    // rotate about the moving centroid, then translate
                    double x = cs * (q.x - c.x) - sn * (q.y - c.y) + c.x + dx;
                    double y = sn * (q.x - c.x) + cs * (q.y - c.y) + c.y + dy;
                    int cx = int(std::lround(std::clamp(x, 0.0, double(field.width - 1))));
                    int cy = int(std::lround(std::clamp(y, 0.0, double(field.height - 1))));
                    acc += field.dist2_at(cx, cy);
                }
                if (acc < best_score) {
                    best_score = acc;
                    best.beta = {th, c.x + dx - (cs * c.x - sn * c.y),
                                 c.y + dy - (sn * c.x + cs * c.y)};
                }
            }
        }
    }
    return best;
}

double weighted_error_px(const DistanceField& field, const TransformParams& t,
                         const PointSet& pts, const std::vector<double>& p) {
    AlignmentErrors errs = alignment_errors(field, t, pts);
    double acc = 0.0;
    for (size_t j = 0; j < errs.d.size(); ++j) acc += p[j] * errs.d[j];
    return acc / double(errs.d.size());
}

}  // namespace

RegistrationReport register_points(const BinaryMask& reference, const PointSet& moving,
                                   const EmConfig& cfg) {
    cfg.validate();
    if (moving.empty()) throw Error("register: empty moving point set");
    const DistanceField field = distance_field(reference);

    PointSet pts = subsample_points(moving, cfg.max_points);
    const size_t n = pts.count();
    const double d_max =
        cfg.d_max > 0 ? cfg.d_max
                      : double(field.width) * field.width + double(field.height) * field.height;
    const double rms_extent = 1.0 / make_norm_frame(pts).scale;
    const Box2 domain = bounding_box(pts);

    TransformParams t = cfg.grid_init ? grid_search_seed(field, pts, *cfg.grid_init)
                                      : identity_transform(Model::Euclidean);

    double pi = cfg.pi0;
    double lambda = cfg.lambda0;
    if (lambda <= 0.0) {
        AlignmentErrors e0 = alignment_errors(field, t, pts);
        double mean_d = std::accumulate(e0.d.begin(), e0.d.end(), 0.0) / double(n);
        lambda = mean_d > 0.0 ? 1.0 / mean_d : kLambdaMax;
    }

    RegistrationReport report;
    report.points_used = n;
    std::vector<double> posteriors(n, 1.0);
    bool diverged = false;

    for (Model stage : {Model::Euclidean, Model::Similarity, Model::Affine, Model::Projective,
                        Model::Poly2}) {
        if (t.model != stage) t = promote(t, stage, domain);
        const TransformParams stage_entry = t;

        int iters = 0;
        for (int em_iter = 0; em_iter < cfg.em_max_iters; ++em_iter) {
            AlignmentErrors errs = alignment_errors(field, t, pts);
            double new_pi = pi, new_lambda = lambda;
            if (cfg.em_enabled) {
                posteriors = e_step(errs.d, pi, lambda, d_max);
                RateUpdate ru = m_step_rates(posteriors, errs.d, lambda);
                new_pi = ru.pi;
                new_lambda = ru.lambda;
            }
            TransformParams t_new = lm_minimize(field, pts, posteriors, t, cfg);

            double action_change = 0.0;
            for (const Point& q : pts.points) {
                Point a = apply(t_new, q), b = apply(t, q);
                action_change += std::hypot(a.x - b.x, a.y - b.y);
            }
            action_change /= double(n);

            const double dpi = std::abs(new_pi - pi);
            const double dlam = std::abs(new_lambda - lambda) / std::max(lambda, 1e-30);
            pi = new_pi;
            lambda = new_lambda;
            t = std::move(t_new);
            iters = em_iter + 1;
            if (action_change / rms_extent < cfg.em_tol && dpi < cfg.em_tol &&
                dlam < cfg.em_tol)
                break;
        }

        // Divergence check under the stage's final weights.
        const double e_exit = weighted_error_px(field, t, pts, posteriors);
        const double e_entry = weighted_error_px(field, stage_entry, pts, posteriors);
        if (e_exit > e_entry + 1e-9 * std::max(1.0, e_entry)) diverged = true;
        report.stages.push_back({stage, iters, e_exit});
    }

    AlignmentErrors final_errs = alignment_errors(field, t, pts);
    report.distances = final_errs.d;
    report.posteriors =
        cfg.em_enabled ? e_step(final_errs.d, pi, lambda, d_max) : std::vector<double>(n, 1.0);
    report.final_transform = std::move(t);
    report.pi = pi;
    report.lambda = lambda;
    report.converged = !diverged;
    return report;
}

RegistrationReport register_masks(const BinaryMask& reference, const BinaryMask& moving,
                                  const EmConfig& cfg) {
    PointSet pts = mask_to_points(moving);
    if (pts.empty()) throw Error("register: moving mask has no vessel pixels");
    return register_points(reference, pts, cfg);
}

void dump_posteriors_csv(const RegistrationReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "index,d,p\n";
    for (size_t j = 0; j < report.posteriors.size(); ++j)
        out << j << ',' << report.distances[j] << ',' << report.posteriors[j] << '\n';
}

}  // namespace favk
