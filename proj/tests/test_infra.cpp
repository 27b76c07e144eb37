// Infrastructure checks: polynomials, grids, the ODE integrator, quadrature,
// and the Newton solver. Everything here has a closed-form answer.

#include <cmath>
#include <random>

#include "mapkit/geometry.hpp"
#include "mapkit/newton.hpp"
#include "mapkit/ode.hpp"
#include "mapkit/poly.hpp"
#include "mapkit/quadrature.hpp"
#include "testkit.hpp"

using namespace mapkit;

static void test_poly_algebra() {
    // (1 + x)^3 = 1 + 3x + 3x^2 + x^3
    Poly x = Poly::var(2, 0), y = Poly::var(2, 1);
    Poly p = (Poly::constant(2, 1.0) + x).pow(3);
    CHECK(p.terms.size() == 4);
    CHECK_NEAR(p.eval({2.0, 0.0}), 27.0, 1e-13);

    Poly q = x * x * y - 2.0 * y + Poly::constant(2, 5.0);
    CHECK_NEAR(q.eval({3.0, 2.0}), 9 * 2 - 4 + 5, 1e-13);
    CHECK(q.total_degree() == 3);
    CHECK(q.degree_in(0) == 2);
    CHECK(q.degree_in(1) == 1);

    // d/dx (x^2 y) = 2xy, then antiderivative back modulo constant
    Poly dq = (x * x * y).derivative(0);
    CHECK_NEAR(dq.eval({3.0, 2.0}), 12.0, 1e-13);
    Poly iq = dq.antiderivative(0);
    CHECK_NEAR(iq.eval({3.0, 2.0}), 18.0, 1e-13);

    // substitution: p(x, y) with x -> y^2 and y -> 1 - x
    Poly s = q.substitute({y * y, Poly::constant(2, 1.0) - x});
    double xv = 0.7, yv = -0.3;
    CHECK_NEAR(s.eval({xv, yv}), q.eval({yv * yv, 1 - xv}), 1e-13);

    // set_var freezes one argument
    Poly f = q.set_var(1, 2.0);
    CHECK_NEAR(f.eval({3.0, 99.0}), q.eval({3.0, 2.0}), 1e-13);
    CHECK(!f.depends_on(1));

    // cancellation removes terms entirely
    Poly z = p - p;
    CHECK(z.terms.empty());
    CHECK(z.is_zero(0.0));

    // remap into a wider variable set
    Poly r = q.remap(4, {2, 0});
    CHECK_NEAR(r.eval({2.0, 0.0, 3.0, 0.0}), q.eval({3.0, 2.0}), 1e-13);
}

static void test_grids() {
    SampleGrid g = SampleGrid::tensor(2, 5, 1.0);
    CHECK(g.dim == 2);
    CHECK(g.all_inside(1e-12));
    CHECK(g.size() > 0 && g.size() <= 25);
    bool has_origin = false;
    for (const Vec& p : g.points)
        if (norm2(p) < 1e-14) has_origin = true;
    CHECK(has_origin);

    SampleGrid rb = SampleGrid::random_ball(3, 200, 0.8, 42);
    CHECK(rb.size() == 200);
    CHECK(rb.all_inside(0.0));
    SampleGrid rb2 = SampleGrid::random_ball(3, 200, 0.8, 42);
    CHECK(rb.points == rb2.points);  // deterministic under fixed seed
}

static void test_ode() {
    // harmonic oscillator: period 2*pi
    OdeField f = [](double, const Vec& x, Vec& dx) {
        dx[0] = x[1];
        dx[1] = -x[0];
    };
    Vec x0 = {1.0, 0.0};
    Vec xT = ode_solve(f, 0.0, x0, 2 * M_PI);
    CHECK_NEAR(xT[0], 1.0, 1e-8);
    CHECK_NEAR(xT[1], 0.0, 1e-8);

    // backward integration undoes forward
    Vec xf = ode_solve(f, 0.0, x0, 1.7);
    Vec xb = ode_solve(f, 1.7, xf, 0.0);
    CHECK_NEAR(xb[0], 1.0, 1e-9);
    CHECK_NEAR(xb[1], 0.0, 1e-9);

    // crossing detection: x(t) = cos t hits 0 at t = pi/2
    CrossingResult cr = ode_solve_until(
        f, x0, [](const Vec& x) { return x[0]; }, -1, 10.0);
    CHECK_NEAR(cr.t, M_PI / 2, 1e-10);
    CHECK_NEAR(cr.x[1], -1.0, 1e-9);

    // stiff-ish scalar decay, checks adaptive control keeps accuracy
    OdeField g = [](double, const Vec& x, Vec& dx) { dx[0] = -40.0 * x[0]; };
    OdeOptions tight;
    tight.tol = 1e-13;
    Vec y = ode_solve(g, 0.0, {1.0}, 0.5, tight);
    CHECK_NEAR(y[0], std::exp(-20.0), 1e-11);
}

static void test_quadrature() {
    auto f = [](double t) { return std::exp(-t * t); };
    double ref = std::sqrt(M_PI) * std::erf(2.0);  // integral over [-2, 2]
    CHECK_NEAR(integrate_gk(f, -2, 2), ref, 1e-12);
    CHECK_NEAR(integrate_simpson(f, -2, 2), ref, 1e-10);

    // the two schemes agree on a bump with near-flat tails
    auto bump = [](double z) {
        double d = 1 - 4 * z * z;
        return (std::abs(z) < 0.5 && d > 0) ? std::exp(1 - 1 / d) : 0.0;
    };
    double a = integrate_gk(bump, -0.5, 0.5, 1e-12);
    double b = integrate_simpson(bump, -0.5, 0.5, 1e-13);
    CHECK_NEAR(a, b, 1e-11);
}

static void test_newton() {
    // 2-D root with known answer: solve (x^2 - y, y^2 - 3) = (0, 0), x,y > 0
    auto F = [](const Vec& v) -> Vec {
        return {v[0] * v[0] - v[1], v[1] * v[1] - 3.0};
    };
    auto sol = newton_solve(F, {0.0, 0.0}, {1.0, 1.5});
    CHECK(sol.has_value());
    CHECK_NEAR((*sol)[1], std::sqrt(3.0), 1e-11);
    CHECK_NEAR((*sol)[0], std::pow(3.0, 0.25), 1e-11);

    // singular Jacobian at the seed is handled by damping or reported
    auto G = [](const Vec& v) -> Vec { return {v[0] * v[0] * v[0]}; };
    auto s2 = newton_solve(G, {8.0}, {0.5});
    CHECK(s2.has_value());
    CHECK_NEAR((*s2)[0], 2.0, 1e-9);
}

static void test_parallel_chunks() {
    std::vector<double> out(1000, 0.0);
    parallel_chunks(out.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) out[i] = std::sqrt((double)i);
    });
    bool ok = true;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (out[i] != std::sqrt((double)i)) ok = false;
    CHECK(ok);
}

int main() {
    test_poly_algebra();
    test_grids();
    test_ode();
    test_quadrature();
    test_newton();
    test_parallel_chunks();
    return testkit::summary("test_infra");
}
