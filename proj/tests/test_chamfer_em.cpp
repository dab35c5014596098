#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

#include "favk/chamfer_em.hpp"
#include "favk/rng.hpp"
#include "favk/synth.hpp"
#include "oracles.hpp"

using namespace favk;

namespace {

BinaryMask random_mask(int w, int h, Rng& rng, double density) {
    BinaryMask m(w, h);
    bool any = false;
    for (auto& v : m.data) {
        v = rng.uniform() < density ? 1 : 0;
        any |= (v != 0);
    }
    if (!any) m.set(w / 2, h / 2, true);
    return m;
}

PhantomSpec small_phantom_spec() {
    PhantomSpec spec;
    spec.seed = 42;
    spec.width = 256;
    spec.height = 256;
    spec.branches = 4;
    spec.depth = 4;
    spec.root_width = 3.0;
    spec.noise_sigma = 0.0;
    return spec;
}

double mean_action_gap(const TransformParams& a, const TransformParams& b,
                       const PointSet& pts) {
    double acc = 0.0;
    for (const Point& q : pts.points) {
        Point pa = apply(a, q), pb = apply(b, q);
        acc += std::hypot(pa.x - pb.x, pa.y - pb.y);
    }
    return acc / double(pts.count());
}

}  // namespace

TEST_CASE("distance_field: single point, corners, zeros at references") {
    BinaryMask ref(3, 3);
    ref.set(1, 1, true);
    DistanceField f = distance_field(ref);
    CHECK(f.dist2_at(0, 0) == 2.0);
    CHECK(f.dist2_at(2, 2) == 2.0);
    CHECK(f.dist2_at(1, 1) == 0.0);
    CHECK(f.nearest_at(0, 0).x == 1.0);
    CHECK(f.nearest_at(0, 0).y == 1.0);

    CHECK_THROWS_AS(distance_field(BinaryMask(4, 4)), Error);
}

TEST_CASE("distance_field matches brute force exactly on random masks") {
    Rng rng(1234);
    for (int trial = 0; trial < 25; ++trial) {
        const double density = trial % 2 ? 0.02 : 0.2;
        BinaryMask ref = random_mask(32, 32, rng, density);
        DistanceField f = distance_field(ref);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) {
                oracle::NearestHit hit = oracle::nearest_point(ref, x, y);
                REQUIRE(f.dist2_at(x, y) == hit.dist2);
                REQUIRE(f.dist2_at(x, y) ==
                        (f.nearest_at(x, y).x - x) * (f.nearest_at(x, y).x - x) +
                            (f.nearest_at(x, y).y - y) * (f.nearest_at(x, y).y - y));
            }
    }
}

TEST_CASE("distance_field tie-break picks smallest y then x") {
    {
        BinaryMask ref(3, 3);
        ref.set(0, 1, true);
        ref.set(2, 1, true);
        DistanceField f = distance_field(ref);
        CHECK(f.nearest_at(1, 1).x == 0.0);  // same row: smaller x wins
        CHECK(f.nearest_at(1, 1).y == 1.0);
    }
    {
        BinaryMask ref(3, 3);
        ref.set(1, 0, true);
        ref.set(1, 2, true);
        DistanceField f = distance_field(ref);
        CHECK(f.nearest_at(1, 1).y == 0.0);  // smaller y wins
    }
    {
        BinaryMask ref(3, 3);
        for (auto [x, y] : {std::pair{0, 0}, {2, 0}, {0, 2}, {2, 2}}) ref.set(x, y, true);
        DistanceField f = distance_field(ref);
        CHECK(f.nearest_at(1, 1).x == 0.0);
        CHECK(f.nearest_at(1, 1).y == 0.0);
    }
    // exhaustive agreement with the scan-order oracle, witnesses included
    Rng rng(555);
    for (int trial = 0; trial < 10; ++trial) {
        BinaryMask ref = random_mask(16, 16, rng, 0.1);
        DistanceField f = distance_field(ref);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                oracle::NearestHit hit = oracle::nearest_point(ref, x, y);
                REQUIRE(f.nearest_at(x, y).x == double(hit.x));
                REQUIRE(f.nearest_at(x, y).y == double(hit.y));
            }
    }
}

TEST_CASE("distance_field from a point set") {
    PointSet ps;
    ps.points = {{1.2, 0.8}, {5.0, 5.0}};
    DistanceField f = distance_field(ps, 8, 8);
    CHECK(f.dist2_at(1, 1) == 0.0);  // (1.2, 0.8) rounds to (1,1)
    CHECK(f.dist2_at(5, 5) == 0.0);

    PointSet outside;
    outside.points = {{9.0, 1.0}};
    CHECK_THROWS_AS(distance_field(outside, 8, 8), Error);
    CHECK_THROWS_AS(distance_field(PointSet{}, 8, 8), Error);
}

TEST_CASE("alignment_errors: self-distance and residual identity") {
    BinaryMask ref(8, 8);
    ref.set(0, 0, true);
    DistanceField f = distance_field(ref);

    PointSet targets;
    targets.points = {{3.0, 4.0}};
    AlignmentErrors errs =
        alignment_errors(f, identity_transform(Model::Euclidean), targets);
    REQUIRE(errs.d.size() == 1);
    CHECK(errs.d[0] == 25.0);
    CHECK(errs.r[0].x == -3.0);
    CHECK(errs.r[0].y == -4.0);

    BinaryMask refs(8, 8);
    refs.set(2, 2, true);
    refs.set(5, 1, true);
    DistanceField f2 = distance_field(refs);
    PointSet self = mask_to_points(refs);
    AlignmentErrors self_errs =
        alignment_errors(f2, identity_transform(Model::Poly2), self);
    for (double d : self_errs.d) CHECK(d == 0.0);

    // d_j = |r_j|^2 element-wise by construction
    Rng rng(8);
    PointSet rand_targets;
    for (int i = 0; i < 40; ++i)
        rand_targets.points.push_back({rng.uniform(-3, 11), rng.uniform(-3, 11)});
    AlignmentErrors re = alignment_errors(f2, identity_transform(Model::Poly2), rand_targets);
    for (size_t j = 0; j < re.d.size(); ++j)
        CHECK(re.d[j] == re.r[j].x * re.r[j].x + re.r[j].y * re.r[j].y);
}

TEST_CASE("e_step matches the direct posterior formula") {
    // scalar worked example: pi=0.5, lambda=1, Dmax=10, d=0
    std::vector<double> p = e_step({0.0}, 0.5, 1.0, 10.0);
    CHECK(p[0] == doctest::Approx(0.5 / 0.55).epsilon(1e-12));

    CHECK(e_step({123.0}, 1.0, 1.0, 10.0)[0] == 1.0);
    CHECK(e_step({1e6}, 0.5, 1.0, 10.0)[0] == doctest::Approx(0.0).epsilon(1e-12));

    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        double pi = rng.uniform(0.05, 0.95);
        double lambda = rng.uniform(0.01, 5.0);
        double d_max = rng.uniform(1.0, 100.0);
        std::vector<double> d;
        for (int j = 0; j < 10; ++j) d.push_back(rng.uniform(0.0, 50.0));
        std::vector<double> post = e_step(d, pi, lambda, d_max);
        for (size_t j = 0; j < d.size(); ++j)
            REQUIRE(std::abs(post[j] - oracle::posterior_direct(d[j], pi, lambda, d_max)) <
                    1e-12);
    }

    CHECK_THROWS_AS(e_step({std::numeric_limits<double>::infinity()}, 0.5, 1.0, 10.0), Error);
    CHECK_THROWS_AS(e_step({1.0}, 0.5, -1.0, 10.0), Error);
}

TEST_CASE("m_step_rates closed forms and degenerate paths") {
    RateUpdate r = m_step_rates({1.0, 1.0}, {2.0, 4.0}, 0.5);
    CHECK(r.pi == 1.0);
    CHECK(r.lambda == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK_FALSE(r.degenerate);

    RateUpdate zero = m_step_rates({0.0, 0.0, 0.0}, {1.0, 2.0, 3.0}, 0.7);
    CHECK(zero.pi == 0.0);
    CHECK(zero.lambda == 0.7);  // update skipped
    CHECK(zero.degenerate);

    RateUpdate outlier = m_step_rates({1.0, 0.0}, {1.0, 100.0}, 0.5);
    CHECK(outlier.pi == 0.5);
    CHECK(outlier.lambda == 1.0);

    RateUpdate capped = m_step_rates({1.0}, {0.0}, 0.5);
    CHECK(capped.lambda == kLambdaMax);
    CHECK(capped.degenerate);
}

TEST_CASE("m_step_rates maximizes the expected complete-data log likelihood") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 5 + int(rng.below(20));
        std::vector<double> p(n), d(n);
        for (int j = 0; j < n; ++j) {
            p[j] = rng.uniform(0.02, 0.98);
            d[j] = rng.uniform(0.01, 30.0);
        }
        const double d_max = rng.uniform(10.0, 200.0);
        RateUpdate r = m_step_rates(p, d, 1.0);
        REQUIRE_FALSE(r.degenerate);
        const double q0 = oracle::q_function(p, d, r.pi, r.lambda, d_max);
        for (double eps : {-0.01, 0.01}) {
            REQUIRE(oracle::q_function(p, d, r.pi * (1 + eps), r.lambda, d_max) <= q0 + 1e-12);
            REQUIRE(oracle::q_function(p, d, r.pi, r.lambda * (1 + eps), d_max) <= q0 + 1e-12);
        }
    }
}

TEST_CASE("lm_minimize is stationary at an exact fit") {
    Phantom ph = gen_phantom(small_phantom_spec());
    PointSet ref_pts = mask_to_points(ph.mask);
    DistanceField field = distance_field(ph.mask);

    // moving = exact affine image of the reference; init = the true inverse
    TransformParams fwd = identity_transform(Model::Affine);
    fwd.beta = {4.0, 1.02, 0.01, -3.0, -0.015, 0.99};
    PointSet moving;
    for (const Point& p : ref_pts.points) moving.points.push_back(apply(fwd, p));

    // analytic inverse of the affine
    const double a = fwd.beta[1], b = fwd.beta[2], c = fwd.beta[4], dd = fwd.beta[5];
    const double det = a * dd - b * c;
    TransformParams inv = identity_transform(Model::Affine);
    inv.beta = {(-dd * fwd.beta[0] + b * fwd.beta[3]) / det,
                dd / det,
                -b / det,
                (c * fwd.beta[0] - a * fwd.beta[3]) / det,
                -c / det,
                a / det};

    EmConfig cfg;
    std::vector<double> unit(moving.count(), 1.0);
    TransformParams out = lm_minimize(field, moving, unit, inv, cfg);
    CHECK(mean_action_gap(out, inv, moving) < 1e-6);

    AlignmentErrors errs = alignment_errors(field, out, moving);
    double mean_d = std::accumulate(errs.d.begin(), errs.d.end(), 0.0) / double(errs.d.size());
    CHECK(mean_d < 1e-9);
}

TEST_CASE("lm cascade recovers a noiseless similarity") {
    Phantom ph = gen_phantom(small_phantom_spec());
    PointSet ref_pts = mask_to_points(ph.mask);
    DistanceField field = distance_field(ph.mask);

    TransformParams sim = identity_transform(Model::Similarity);
    const double theta = 3.0 * std::numbers::pi / 180.0;
    sim.beta = {1.05, theta, 8.0, -5.0};
    PointSet moving;
    for (const Point& p : ref_pts.points) moving.points.push_back(apply(sim, p));

    // analytic inverse similarity for the oracle comparison
    TransformParams sim_inv = identity_transform(Model::Similarity);
    {
        const double s = 1.0 / sim.beta[0], th = -sim.beta[1];
        const double cx = std::cos(th) * s, sx = std::sin(th) * s;
        sim_inv.beta = {s, th, -(cx * sim.beta[2] - sx * sim.beta[3]),
                        -(sx * sim.beta[2] + cx * sim.beta[3])};
    }

    EmConfig cfg;
    std::vector<double> unit(moving.count(), 1.0);
    TransformParams t = identity_transform(Model::Euclidean);
    const Box2 domain = bounding_box(moving);
    for (Model stage : {Model::Euclidean, Model::Similarity, Model::Affine, Model::Projective,
                        Model::Poly2}) {
        if (t.model != stage) t = promote(t, stage, domain);
        for (int pass = 0; pass < 3; ++pass) t = lm_minimize(field, moving, unit, t, cfg);
    }
    CHECK(mean_action_gap(t, sim_inv, moving) < 0.25);
}

TEST_CASE("zeroing planted outliers lowers the inlier-weighted error") {
    Phantom ph = gen_phantom(small_phantom_spec());
    DistanceField field = distance_field(ph.mask);

    WarpSpec warp;
    warp.truth = promote(identity_transform(Model::Euclidean), Model::Poly2, Box2{0, 0, 256, 256});
    warp.truth.beta[1] = 1.01;  // slight stretch
    warp.jitter_sigma = 0.3;
    warp.outlier_fraction = 0.3;
    warp.seed = 12;
    Perturbed pert = perturb(ph.mask, warp);

    EmConfig cfg;
    std::vector<double> unit(pert.points.count(), 1.0);
    std::vector<double> clean(pert.points.count(), 1.0);
    for (size_t j = pert.inlier_count; j < pert.points.count(); ++j) clean[j] = 0.0;

    TransformParams init = identity_transform(Model::Affine);
    TransformParams with_outliers = lm_minimize(field, pert.points, unit, init, cfg);
    TransformParams without = lm_minimize(field, pert.points, clean, init, cfg);

    auto inlier_weighted_error = [&](const TransformParams& t) {
        AlignmentErrors errs = alignment_errors(field, t, pert.points);
        double acc = 0.0;
        for (size_t j = 0; j < pert.inlier_count; ++j) acc += errs.d[j];
        return acc / double(pert.inlier_count);
    };
    CHECK(inlier_weighted_error(without) < inlier_weighted_error(with_outliers));
}

TEST_CASE("register on self stays at the identity") {
    Phantom ph = gen_phantom(small_phantom_spec());
    EmConfig cfg;
    RegistrationReport rep = register_masks(ph.mask, ph.mask, cfg);
    REQUIRE(rep.final_transform.model == Model::Poly2);

    PointSet pts = mask_to_points(ph.mask);
    double gap = mean_action_gap(rep.final_transform, identity_transform(Model::Poly2), pts);
    CHECK(gap < 0.1);
    CHECK(rep.stages.size() == 5);
    CHECK(rep.stages.back().weighted_error < 1e-6);
    CHECK(rep.converged);
    CHECK(rep.posteriors.size() == pts.count());
}

TEST_CASE("register rejects empty inputs") {
    BinaryMask ref(8, 8);
    ref.set(4, 4, true);
    CHECK_THROWS_AS(register_points(ref, PointSet{}, EmConfig{}), Error);
    CHECK_THROWS_AS(register_masks(BinaryMask(8, 8), ref, EmConfig{}), Error);
    CHECK_THROWS_AS(register_masks(ref, BinaryMask(8, 8), EmConfig{}), Error);
}

TEST_CASE("posteriors CSV dump round-trips through parsing") {
    Phantom ph = gen_phantom(small_phantom_spec());
    EmConfig cfg;
    cfg.em_max_iters = 3;
    RegistrationReport rep = register_masks(ph.mask, ph.mask, cfg);

    const std::string path =
        (std::filesystem::temp_directory_path() / "favk_posteriors.csv").string();
    dump_posteriors_csv(rep, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "index,d,p");
    size_t rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == rep.posteriors.size());
    std::remove(path.c_str());
}

TEST_CASE("grid_init seeds a large pure translation") {
    Phantom ph = gen_phantom(small_phantom_spec());
    PointSet ref_pts = mask_to_points(ph.mask);
    TransformParams shift = identity_transform(Model::Euclidean);
    shift.beta = {0.0, 24.0, -16.0};
    PointSet moving;
    for (const Point& p : ref_pts.points) moving.points.push_back(apply(shift, p));

    EmConfig cfg;
    cfg.grid_init = GridInitSpec{};  // defaults: +/-10% width, 8 px step, +/-10 deg
    RegistrationReport rep = register_points(ph.mask, moving, cfg);

    TransformParams shift_inv = identity_transform(Model::Euclidean);
    shift_inv.beta = {0.0, -24.0, 16.0};
    CHECK(mean_action_gap(rep.final_transform,
                          promote(shift_inv, Model::Poly2, bounding_box(moving)), moving) < 0.5);
}

TEST_CASE("moving clouds larger than max_points are subsampled deterministically") {
    Phantom ph = gen_phantom(small_phantom_spec());
    EmConfig cfg;
    cfg.max_points = 500;
    cfg.em_max_iters = 3;
    cfg.lm_max_iters = 10;
    RegistrationReport a = register_masks(ph.mask, ph.mask, cfg);
    RegistrationReport b = register_masks(ph.mask, ph.mask, cfg);
    CHECK(a.points_used == 500);
    REQUIRE(a.posteriors.size() == b.posteriors.size());
    for (size_t i = 0; i < a.posteriors.size(); ++i) CHECK(a.posteriors[i] == b.posteriors[i]);
}
