// Map-algebra layer: Henon-like maps, primitive factors, compositions,
// grid metrics, the near-identity chain decomposition, and manifests.

#include <cmath>
#include <random>
#include <sstream>

#include "mapkit/chain.hpp"
#include "mapkit/factors.hpp"
#include "mapkit/henon.hpp"
#include "mapkit/manifest.hpp"
#include "mapkit/metrics.hpp"
#include "testkit.hpp"

using namespace mapkit;

static void test_henon_basics() {
    std::mt19937_64 rng(7);
    for (int n : {2, 3, 4}) {
        HenonLikeMap H = HenonLikeMap::random(n, 4, 0.3, rng);
        SampleGrid g = SampleGrid::random_ball(n, 200, 1.0, 11 + n);
        // unit Jacobian determinant everywhere, analytic Jacobian
        double worst = 0;
        for (const Vec& x : g.points)
            worst = std::max(worst, std::abs(det_jacobian(H.to_map(), x) - 1.0));
        CHECK(worst < 1e-12);
        // closed-form inverse round-trip
        double rt = 0;
        for (const Vec& x : g.points)
            rt = std::max(rt, dist_inf(H.apply_inverse(H.apply(x)), x));
        CHECK(rt < 1e-12);
    }

    // n = 2 sign factor is -1: (x, y) -> (y, -x + h(y))
    HenonLikeMap H2;
    H2.n = 2;
    H2.h = Poly::var(1, 0) * Poly::var(1, 0);  // h(y) = y^2
    Vec im = H2.apply({1.0, 2.0});
    CHECK_NEAR(im[0], 2.0, 0.0);
    CHECK_NEAR(im[1], -1.0 + 4.0, 0.0);

    // n = 3 sign factor is +1
    HenonLikeMap H3;
    H3.n = 3;
    H3.h = Poly(2);
    Vec im3 = H3.apply({1.0, 2.0, 3.0});
    CHECK(im3 == Vec({2.0, 3.0, 1.0}));
}

static void test_factor_round_trips() {
    std::mt19937_64 rng(21);
    std::vector<PrimitiveFactor> factors;
    factors.push_back(HenonLikeMap::random(3, 3, 0.2, rng));
    factors.push_back(Psi1Factor{0.7});
    factors.push_back(Psi2Factor{});
    factors.push_back(Phi0Factor{3});
    AffineFactor aff;
    aff.A = Eigen::MatrixXd(3, 3);
    aff.A << 1, 0.2, 0, -0.1, 1.1, 0, 0, 0.3, 0.9;
    aff.b = Eigen::VectorXd(3);
    aff.b << 0.5, -0.2, 0.1;
    factors.push_back(aff);

    Vec x = {0.3, -0.4, 0.6};  // positive last coordinate keeps psi2 in domain
    for (const PrimitiveFactor& f : factors) {
        Vec y = apply_factor(f, x);
        Vec back = apply_factor_inverse(f, y);
        CHECK_MSG(dist_inf(back, x) < 1e-10, factor_name(f));
    }

    // psi2 domain violation names the factor and the point
    bool threw = false;
    try {
        apply_factor(Psi2Factor{}, {0.1, 0.2, -1.0});
    } catch (const DomainError& e) {
        threw = true;
        CHECK(e.factor == "psi2");
        CHECK(std::string(e.what()).find("psi2") != std::string::npos);
        CHECK(e.point.back() == -1.0);
    }
    CHECK(threw);

    // phi0 is the rotation by -90 degrees in the last two coordinates
    Vec r = apply_factor(Phi0Factor{2}, {1.0, 2.0});
    CHECK(r == Vec({2.0, -1.0}));
    Vec rb = apply_factor_inverse(Phi0Factor{2}, r);
    CHECK(rb == Vec({1.0, 2.0}));
}

static void test_composition_order() {
    // rightmost factor applied first: comp = [scale by 2] [shift by 1]
    AffineFactor scale2, shift1;
    scale2.A = Eigen::MatrixXd::Identity(1, 1) * 2.0;
    scale2.b = Eigen::VectorXd::Zero(1);
    shift1.A = Eigen::MatrixXd::Identity(1, 1);
    shift1.b = Eigen::VectorXd::Ones(1);
    MapComposition comp;
    comp.n = 1;
    comp.factors = {scale2, shift1};
    CHECK_NEAR(comp.apply({3.0})[0], 8.0, 0.0);  // 2 * (3 + 1)
    CHECK_NEAR(comp.apply_inverse({8.0})[0], 3.0, 1e-14);

    MapComposition comp2 =
        MapComposition::from_application_order(1, {PrimitiveFactor(shift1),
                                                   PrimitiveFactor(scale2)});
    CHECK_NEAR(comp2.apply({3.0})[0], 8.0, 0.0);

    // general inverse round-trip on a mixed composition
    std::mt19937_64 rng(5);
    MapComposition mix;
    mix.n = 2;
    mix.factors = {HenonLikeMap::random(2, 3, 0.1, rng), Psi2Factor{},
                   Psi1Factor{0.4}, HenonLikeMap::random(2, 2, 0.1, rng)};
    for (double x0 : {-0.5, 0.1, 0.4}) {
        Vec x = {x0, 0.3};
        Vec y = mix.apply(x);
        CHECK(dist_inf(mix.apply_inverse(y), x) < 1e-10);
    }
}

static void test_metrics() {
    SampleGrid g = SampleGrid::tensor(2, 9, 1.0);
    SmoothMap id = SmoothMap::identity(2);

    // identical maps
    C0C1Distance d0 = c0_c1_distance(id, id, g);
    CHECK(d0.e0 == 0.0 && d0.e1 == 0.0);

    // constant shift: e0 = shift length, e1 = 0
    SmoothMap shifted = SmoothMap::identity(2);
    shifted.f = [](const Vec& x) { return Vec{x[0] + 0.01, x[1]}; };
    C0C1Distance ds = c0_c1_distance(id, shifted, g);
    CHECK_NEAR(ds.e0, 0.01, 1e-14);
    CHECK_NEAR(ds.e1, 0.0, 1e-10);  // FD rounding noise only

    // Henon h(y) = y^2 against its h = 0 truncation: the image difference is
    // (0, y^2) and the Jacobian difference has single entry 2y, both maximal
    // at the largest |y| on the grid.
    HenonLikeMap Hq, H0;
    Hq.n = H0.n = 2;
    Hq.h = Poly::var(1, 0) * Poly::var(1, 0);
    H0.h = Poly(1);
    double ymax = 0;
    for (const Vec& p : g.points) ymax = std::max(ymax, std::abs(p[1]));
    C0C1Distance dh = c0_c1_distance(Hq.to_map(), H0.to_map(), g);
    CHECK_NEAR(dh.e0, ymax * ymax, 1e-12);
    CHECK_NEAR(dh.e1, 2 * ymax, 1e-9);

    // symmetry and triangle inequality on a random triple
    std::mt19937_64 rng(3);
    HenonLikeMap A = HenonLikeMap::random(2, 3, 0.2, rng);
    HenonLikeMap B = HenonLikeMap::random(2, 3, 0.2, rng);
    HenonLikeMap C = HenonLikeMap::random(2, 3, 0.2, rng);
    C0C1Distance ab = c0_c1_distance(A.to_map(), B.to_map(), g);
    C0C1Distance ba = c0_c1_distance(B.to_map(), A.to_map(), g);
    C0C1Distance ac = c0_c1_distance(A.to_map(), C.to_map(), g);
    C0C1Distance cb = c0_c1_distance(C.to_map(), B.to_map(), g);
    CHECK_NEAR(ab.e0, ba.e0, 1e-12);
    CHECK_NEAR(ab.e1, ba.e1, 1e-12);
    CHECK(ab.e0 <= ac.e0 + cb.e0 + 1e-12);
    CHECK(ab.e1 <= ac.e1 + cb.e1 + 1e-12);

    // volume defect oracles
    CHECK_NEAR(volume_defect(id, g), 0.0, 1e-14);
    std::mt19937_64 rng2(9);
    HenonLikeMap H3 = HenonLikeMap::random(3, 4, 0.3, rng2);
    SampleGrid g3 = SampleGrid::tensor(3, 7, 1.0);
    CHECK(volume_defect(H3.to_map(), g3) < 1e-10);
    SmoothMap stretch;
    stretch.n = 2;
    stretch.f = [](const Vec& x) { return Vec{x[0], x[1] * (1 + 0.1 * x[0])}; };
    CHECK_NEAR(volume_defect(stretch, g), 0.1, 1e-9);
}

static void test_chain() {
    SampleGrid g = SampleGrid::tensor(2, 7, 1.0);

    // identity -> identity factors
    auto chain_id = ruelle_takens_chain(SmoothMap::identity(2), 10, g);
    CHECK(chain_id.size() == 10);
    double dev = 0;
    for (const SmoothMap& f : chain_id)
        for (const Vec& p : g.points) dev = std::max(dev, dist2(f(p), p));
    CHECK(dev < 1e-10);

    // rigid shift splits into equal sub-shifts
    SmoothMap shift;
    shift.n = 2;
    shift.f = [](const Vec& x) { return Vec{x[0] + 0.5, x[1]}; };
    auto chain_sh = ruelle_takens_chain(shift, 5, g);
    for (const SmoothMap& f : chain_sh) {
        Vec im = f({0.2, -0.3});
        CHECK_NEAR(im[0] - 0.2, 0.1, 1e-10);
        CHECK_NEAR(im[1], -0.3, 1e-10);
    }

    // shear: composition reproduces F, factor deviation scales like 1/N
    SmoothMap shear;
    shear.n = 2;
    shear.f = [](const Vec& x) { return Vec{x[0] + 0.3 * x[1] * x[1], x[1]}; };
    double dev_by_N[2];
    int idx = 0;
    for (int N : {8, 16}) {
        auto ch = ruelle_takens_chain(shear, N, g);
        double recon = 0, worst = 0;
        for (const Vec& p : g.points) {
            Vec y = p;
            for (const SmoothMap& f : ch) y = f(y);
            recon = std::max(recon, dist2(y, shear(p)));
        }
        for (const SmoothMap& f : ch)
            for (const Vec& p : g.points) worst = std::max(worst, dist2(f(p), p));
        CHECK(recon < 1e-8);
        dev_by_N[idx++] = worst;
    }
    double ratio = dev_by_N[0] / dev_by_N[1];
    CHECK_MSG(ratio > 1.6 && ratio < 2.4, "deviation ratio " + std::to_string(ratio));

    // point reflection is not linearly diffeotopic to the identity
    SmoothMap reflect;
    reflect.n = 2;
    reflect.f = [](const Vec& x) { return Vec{-x[0], -x[1]}; };
    bool rejected = false;
    try {
        ruelle_takens_chain(reflect, 10, g);
    } catch (const ChainValidationError& e) {
        rejected = true;
        CHECK_NEAR(e.t, 0.5, 1e-12);
    }
    CHECK(rejected);
}

static void test_manifest() {
    // empty composition
    MapComposition empty;
    empty.n = 2;
    std::stringstream s0;
    save_manifest(empty, s0);
    MapComposition e2 = load_manifest(s0);
    CHECK(e2.n == 2 && e2.factors.empty());

    // exact scalar round-trip
    MapComposition one;
    one.n = 3;
    one.factors = {Psi1Factor{3.5}};
    std::stringstream s1;
    save_manifest(one, s1);
    MapComposition o2 = load_manifest(s1);
    CHECK(o2.factors.size() == 1);
    CHECK(std::get<Psi1Factor>(o2.factors[0]).K == 3.5);

    // 40 random Henon factors: save, load, compare evaluation bit-for-bit
    std::mt19937_64 rng(123);
    MapComposition big;
    big.n = 3;
    big.provenance = "random test composition";
    big.meta["seed"] = "123";
    for (int i = 0; i < 40; ++i)
        big.factors.push_back(HenonLikeMap::random(3, 4, 0.15, rng));
    std::stringstream s2;
    save_manifest(big, s2);
    std::string text = s2.str();
    std::stringstream s3(text);
    MapComposition big2 = load_manifest(s3);
    CHECK(big2.factors.size() == 40);
    CHECK(big2.provenance == big.provenance);
    CHECK(big2.meta.at("seed") == "123");
    // every factor reproduces its evaluation bit-for-bit; iterating the full
    // 40-map composition can leave the double range, so compare per factor
    SampleGrid pts = SampleGrid::random_ball(3, 100, 1.0, 77);
    bool identical = true;
    for (std::size_t i = 0; i < big.factors.size(); ++i)
        for (const Vec& p : pts.points)
            if (apply_factor(big.factors[i], p) != apply_factor(big2.factors[i], p))
                identical = false;
    CHECK(identical);

    // saving again reproduces the same bytes
    std::stringstream s4;
    save_manifest(big2, s4);
    CHECK(s4.str() == text);

    // a malformed record reports its line
    std::stringstream bad("mapkit-manifest 1\ndim 2\nfactors 1\nhenon 2 x\n");
    bool threw = false;
    try {
        load_manifest(bad);
    } catch (const ManifestError& e) {
        threw = true;
        CHECK(e.line == 4);
    }
    CHECK(threw);

    // numeric factors round-trip through a registered builder
    register_numeric_kind("unit-shift", [](const std::map<std::string, std::string>& p) {
        double dx = std::stod(p.at("dx"));
        NumericFactor f;
        auto fwd = std::make_shared<SmoothMap>(SmoothMap::identity(1));
        fwd->f = [dx](const Vec& x) { return Vec{x[0] + dx}; };
        auto inv = std::make_shared<SmoothMap>(SmoothMap::identity(1));
        inv->f = [dx](const Vec& x) { return Vec{x[0] - dx}; };
        f.fwd = fwd;
        f.inv = inv;
        return f;
    });
    NumericFactor nf;
    nf.kind = "unit-shift";
    nf.params["dx"] = "0.25";
    MapComposition withnum;
    withnum.n = 1;
    withnum.factors = {nf};
    std::stringstream s5;
    save_manifest(withnum, s5);
    MapComposition wn2 = load_manifest(s5);
    CHECK_NEAR(wn2.apply({1.0})[0], 1.25, 0.0);

    // anonymous numeric factors cannot be serialized
    NumericFactor anon;
    anon.fwd = std::make_shared<SmoothMap>(SmoothMap::identity(1));
    MapComposition bad2;
    bad2.n = 1;
    bad2.factors = {anon};
    std::stringstream s6;
    bool threw2 = false;
    try {
        save_manifest(bad2, s6);
    } catch (const std::runtime_error&) {
        threw2 = true;
    }
    CHECK(threw2);
}

int main() {
    test_henon_basics();
    test_factor_round_trips();
    test_composition_order();
    test_metrics();
    test_chain();
    test_manifest();
    return testkit::summary("test_mapcore");
}
