// Field fitting (flow -> generating field) and the end-to-end approximation
// pipeline: special decomposition, per-stage affine detection or fit +
// factorization, assembled composition, and honest residual reporting.

#include <cmath>
#include <random>
#include <string>

#include "mapkit/ode.hpp"
#include "mapkit/pipeline.hpp"
#include "testkit.hpp"

using namespace mapkit;

namespace {

std::vector<Vec> random_cloud(int n, int count, double radius, std::uint64_t seed) {
    return SampleGrid::random_ball(n, count, radius, seed).points;
}

void test_fit_rotation() {
    // Linear rotation: the matrix-log seed already nails the field.
    const double th = 0.7;
    SmoothMap rot;
    rot.n = 2;
    rot.label = "rot";
    rot.f = [th](const Vec& x) {
        return Vec{std::cos(th) * x[0] - std::sin(th) * x[1],
                   std::sin(th) * x[0] + std::cos(th) * x[1]};
    };
    auto pts = random_cloud(2, 60, 1.0, 42);
    FieldFitResult fit = fit_generating_field(rot, 2, pts);
    CHECK(fit.residual_c0 <= 1e-9);
    CHECK(fit.field.divergence().is_zero(1e-12));
    // The recovered field is close to (-th * y, th * x).
    Vec dx;
    fit.field.eval(0.0, Vec{1.0, 0.0}, dx);
    CHECK_NEAR(dx[0], 0.0, 1e-7);
    CHECK_NEAR(dx[1], th, 1e-7);
}

void test_fit_polynomial_flow() {
    // Target map produced by integrating a known divergence-free field; the
    // fit must recover a field whose flow matches to high accuracy.
    NonAutonomousField X = NonAutonomousField::zero(2);
    const Poly psi = Poly::monomial(3, 0.25, {2, 1, 0}) + Poly::monomial(3, -0.1, {0, 3, 0});
    X.xi[0] = psi.derivative(1);
    X.xi[1] = psi.derivative(0).scaled(-1.0);

    SmoothMap Phi;
    Phi.n = 2;
    Phi.label = "flow";
    Phi.f = [&X](const Vec& x) { return flow_time_one(X, x, 1e-12); };

    auto pts = random_cloud(2, 80, 0.8, 43);
    FieldFitResult fit = fit_generating_field(Phi, 2, pts);
    CHECK_MSG(fit.residual_c0 <= 1e-8, "residual=" + std::to_string(fit.residual_c0));
    CHECK(fit.field.divergence().is_zero(1e-12));

    // Off-sample check: the fitted flow tracks the target away from the fit
    // points as well.
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u(-0.7, 0.7);
    double off = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const Vec x = {u(rng), u(rng)};
        off = std::max(off, dist2(Phi.f(x), flow_time_one(fit.field, x, 1e-12)));
    }
    CHECK(off <= 1e-6);
}

void test_pipeline_identity() {
    SmoothMap id = SmoothMap::identity(2);
    SampleGrid grid = SampleGrid::tensor(2, 9, 1.0);
    PipelineResult res = approximate_pipeline(id, grid);

    CHECK(res.stages.size() == 2);
    CHECK(res.stages[0].affine);
    CHECK(res.stages[1].affine);
    CHECK(res.composition.size() == 4);
    // Application order: Psi1, affine, Psi2, affine (factors stored reversed).
    CHECK(std::holds_alternative<Psi1Factor>(res.composition.factors[3]));
    CHECK(std::holds_alternative<AffineFactor>(res.composition.factors[2]));
    CHECK(std::holds_alternative<Psi2Factor>(res.composition.factors[1]));
    CHECK(std::holds_alternative<AffineFactor>(res.composition.factors[0]));
    CHECK_MSG(res.residual_c0 <= 1e-8, "residual=" + std::to_string(res.residual_c0));
}

void test_pipeline_volume_preserving_field() {
    // A map that is already volume preserving: the first stage collapses to
    // an affine factor and the second reduces to a plain factorization.
    NonAutonomousField X = NonAutonomousField::zero(2);
    const Poly psi = Poly::monomial(3, 0.2, {2, 1, 0}) + Poly::monomial(3, 0.15, {1, 2, 0});
    X.xi[0] = psi.derivative(1);
    X.xi[1] = psi.derivative(0).scaled(-1.0);
    SmoothMap Phi;
    Phi.n = 2;
    Phi.label = "vp-flow";
    Phi.f = [&X](const Vec& x) { return flow_time_one(X, x, 1e-12); };

    SampleGrid grid = SampleGrid::tensor(2, 7, 0.8);
    PipelineResult res = approximate_pipeline(Phi, grid);

    // J == 1 collapses the first stage to (numerically) the identity; the
    // second stage carries the whole map and reduces to a factorization.
    CHECK(res.stages[0].affine);
    CHECK(!res.stages[1].affine);
    CHECK(res.stages[1].fit_residual <= 1e-6);
    CHECK_MSG(res.residual_c0 <= 5e-3, "residual=" + std::to_string(res.residual_c0));
}

void test_pipeline_example_map() {
    // Designated end-to-end example: polynomial diffeomorphism of the disk.
    const Poly fx = Poly::var(2, 0) + Poly::monomial(2, 0.2, {0, 2});
    const Poly fy = Poly::var(2, 1) + Poly::monomial(2, 0.1, {2, 0});
    SmoothMap F = SmoothMap::from_polys({fx, fy});

    SampleGrid grid = SampleGrid::tensor(2, 11, 1.0);
    PipelineBudget budget;  // N = 32, degree <= 6
    PipelineResult res = approximate_pipeline(F, grid, budget);

    CHECK_MSG(res.residual_c0 < 0.05, "residual=" + std::to_string(res.residual_c0));
    CHECK(res.stages.size() == 2);
    for (const PipelineStage& st : res.stages) {
        CHECK(st.max_degree <= 6);
        CHECK_MSG(st.fit_residual < 0.02, st.name + " fit=" + std::to_string(st.fit_residual));
    }
    // Convergence table: three slab counts per factorized stage, errors not
    // increasing with N.
    int rows_phi1 = 0, rows_phi2 = 0;
    for (const PipelineRow& row : res.table) {
        if (row.stage == "phi1") ++rows_phi1;
        if (row.stage == "phi2") ++rows_phi2;
        CHECK(row.error >= 0.0);
    }
    if (!res.stages[0].affine) CHECK(rows_phi1 == 3);
    if (!res.stages[1].affine) CHECK(rows_phi2 == 3);
    for (size_t i = 0; i + 1 < res.table.size(); ++i) {
        if (res.table[i].stage == res.table[i + 1].stage)
            CHECK_MSG(res.table[i + 1].error <= res.table[i].error * 1.05 + 1e-12,
                      "table not improving for " + res.table[i].stage);
    }
    // Assembled chain starts with Psi1 in application order.
    CHECK(std::holds_alternative<Psi1Factor>(res.composition.factors.back()));
}

}  // namespace

int main() {
    test_fit_rotation();
    test_fit_polynomial_flow();
    test_pipeline_identity();
    test_pipeline_volume_preserving_field();
    test_pipeline_example_map();
    return testkit::summary("pipeline");
}
