// Two-saddle flow scheme: transit-shape integrals, parameter matching,
// closed-form block maps, and the rescaled return map against its Hénon
// targets. Frozen sup-norm values come from an independent prototype of the
// same construction.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mapkit/flow_scheme.hpp"
#include "mapkit/quadrature.hpp"
#include "testkit.hpp"

using namespace mapkit;

namespace {

using Targets = std::vector<std::vector<std::vector<double>>>;

Targets zero_targets(const std::array<int, 2>& q, int d) {
    Targets h(2);
    for (int j = 0; j < 2; ++j)
        h[static_cast<size_t>(j)].assign(static_cast<size_t>(q[static_cast<size_t>(j)]),
                                         std::vector<double>(static_cast<size_t>(d + 1), 0.0));
    return h;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = a + (b - a) * i / (n - 1);
    return out;
}

void test_bump_and_integrals() {
    const FlowConstants fc;
    CHECK(FlowConstants::bump(0.0) == 1.0);
    CHECK(FlowConstants::bump(0.5) == 0.0);
    CHECK(FlowConstants::bump(-0.5) == 0.0);
    CHECK(FlowConstants::bump(0.7) == 0.0);
    CHECK(FlowConstants::bump(0.25) > 0.0);
    CHECK(FlowConstants::bump(0.25) < 1.0);
    CHECK_NEAR(FlowConstants::bump(0.3), FlowConstants::bump(-0.3), 0.0);

    // mu = 1: the denominator is identically 1, so beta(1) = 0 and alpha(1)
    // is the plain integral of the bump (cross-checked with the independent
    // Simpson quadrature).
    CHECK_NEAR(fc.beta(1.0), 0.0, 1e-12);
    const double bump_mass =
        integrate_simpson([](double z) { return FlowConstants::bump(z); }, -0.5, 0.5, 1e-13);
    CHECK_NEAR(fc.alpha(1.0), bump_mass, 1e-10);

    // Both integrals grow strictly as mu decreases.
    double prev_a = 0.0, prev_b = 0.0;
    for (double mu : {0.1, 0.01, 0.001}) {
        const double a = fc.alpha(mu), b = fc.beta(mu);
        CHECK(a > prev_a);
        CHECK(b > prev_b);
        prev_a = a;
        prev_b = b;
    }

    // Forward-then-invert round trip and the boundary target beta(1) = 0.
    const double mu = fc.solve_mu(fc.beta(0.05));
    CHECK_NEAR(mu, 0.05, 1e-6);
    CHECK_NEAR(fc.solve_mu(0.0), 1.0, 1e-6);
    bool threw = false;
    try {
        fc.solve_mu(-1.0);
    } catch (const std::runtime_error&) {
        threw = true;
    }
    CHECK_MSG(threw, "negative target must be rejected");
    threw = false;
    try {
        fc.solve_mu(1e9);
    } catch (const std::runtime_error&) {
        threw = true;
    }
    CHECK_MSG(threw, "target beyond the covered range must be rejected");
}

// Substitute every matched parameter back into its defining equation.
void check_scheme_identities(const FlowScheme& fs, const Targets& h) {
    const SchemeParameters& p = fs.par;
    const double delta = fs.fc.delta;
    CHECK_NEAR(p.eta, std::exp(-p.m / (2.0 * p.d)), 1e-15);

    for (int j = 1; j <= 2; ++j) {
        const int qj = p.q[static_cast<size_t>(j - 1)];
        const double bj = fs.b(j);
        const auto& u = p.u[static_cast<size_t>(j - 1)];
        const auto& z = p.z[static_cast<size_t>(j - 1)];
        const auto& zp = p.zp[static_cast<size_t>(j - 1)];
        const auto& up = p.up[static_cast<size_t>(j - 1)];
        const auto& C = p.C[static_cast<size_t>(j - 1)];

        // First section point and scale.
        CHECK_NEAR(C[1], std::exp(-delta / 2), 1e-15);
        CHECK_NEAR(z[1], bj + std::exp(-delta / 2), 1e-15);

        for (int s = 1; s <= qj; ++s) {
            // Window membership of the positive points.
            CHECK(u[static_cast<size_t>(s)] > std::exp(-0.9 * delta) - 1e-15);
            CHECK(u[static_cast<size_t>(s)] < std::exp(-delta / 2) + 1e-15);
            // Section recursion and scale recursion.
            CHECK_NEAR(z[static_cast<size_t>(s + 1)],
                       bj - std::exp(-delta) / u[static_cast<size_t>(s)], 1e-12);
            CHECK_NEAR(C[static_cast<size_t>(s + 1)] * std::exp(delta) *
                           u[static_cast<size_t>(s)] * u[static_cast<size_t>(s)] *
                           C[static_cast<size_t>(s)],
                       1.0, 1e-12);
            // Time-shifted points.
            CHECK_NEAR(zp[static_cast<size_t>(s)], std::exp(-p.m) * u[static_cast<size_t>(s)],
                       1e-15);
            CHECK_NEAR(up[static_cast<size_t>(s)],
                       bj + std::exp(-p.m) * (z[static_cast<size_t>(s)] - bj), 1e-12);
        }

        // Anchor point: ln|u| + ln C = l*delta with ln|u| in [-delta, 0),
        // hence u in (-1, -e^{-delta}].
        const int lj = p.l[static_cast<size_t>(j - 1)];
        const double lnu = std::log(std::abs(u[static_cast<size_t>(qj + 1)]));
        CHECK_NEAR(lnu + std::log(C[static_cast<size_t>(qj + 1)]), lj * delta, 1e-12);
        CHECK(u[static_cast<size_t>(qj + 1)] > -1.0);
        CHECK(u[static_cast<size_t>(qj + 1)] <= -std::exp(-delta) * (1.0 - 1e-9));
        const double t_last = p.m + lj * delta;
        CHECK_NEAR(zp[static_cast<size_t>(qj + 1)],
                   std::exp(-t_last) * u[static_cast<size_t>(qj + 1)], 1e-15);
        CHECK_NEAR(up[static_cast<size_t>(qj + 1)],
                   bj + std::exp(-t_last) * (z[static_cast<size_t>(qj + 1)] - bj), 1e-12);

        // All window points stay bounded away from the saddle axes.
        for (int s = 1; s <= qj + 1; ++s) {
            CHECK(std::abs(u[static_cast<size_t>(s)]) >= std::exp(-delta) * (1.0 - 1e-9));
            CHECK(std::abs(z[static_cast<size_t>(s)] - bj) >= std::exp(-delta) * (1.0 - 1e-9));
        }

        // Perturbation coefficients against their closed form.
        for (int s = 1; s <= qj; ++s)
            for (int nu = 0; nu <= p.d; ++nu) {
                const double want =
                    h[static_cast<size_t>(j - 1)][static_cast<size_t>(s - 1)]
                     [static_cast<size_t>(nu)] *
                    std::exp(-p.m) * std::pow(p.eta, 1 - nu) /
                    C[static_cast<size_t>(s + 1)] * std::pow(C[static_cast<size_t>(s)], nu);
                const double got =
                    p.eps[static_cast<size_t>(j - 1)][static_cast<size_t>(s - 1)]
                         [static_cast<size_t>(nu)];
                CHECK_NEAR(got, want, 1e-15 * (1.0 + std::abs(want)));
            }

        // Slow-region matching: the transit-length equation and the
        // rate-covering equation.
        const int jo = 3 - j;
        const int qo = p.q[static_cast<size_t>(jo - 1)];
        const double tgt =
            p.k - 5 + 1.5 * delta +
            std::log(std::abs(p.u[static_cast<size_t>(jo - 1)][static_cast<size_t>(qo + 1)]));
        CHECK_NEAR(fs.fc.beta(p.mu[static_cast<size_t>(j - 1)]), tgt, 1e-9);
        const double A = p.m - std::log(p.eta);
        CHECK_NEAR(p.gamma[static_cast<size_t>(j - 1)] * p.alpha_val[static_cast<size_t>(j - 1)],
                   A, 1e-9);
        CHECK_NEAR(p.eta * std::exp(-p.m),
                   std::exp(-p.gamma[static_cast<size_t>(j - 1)] *
                            p.alpha_val[static_cast<size_t>(j - 1)]),
                   1e-9);
        CHECK(p.gamma[static_cast<size_t>(j - 1)] > 0.0);
        CHECK(p.gamma[static_cast<size_t>(j - 1)] <= 1.0 + 1e-12);
    }
}

void test_build_scheme() {
    // Nontrivial target set, q = (2, 1), degree bound 2.
    const std::array<int, 2> q{2, 1};
    const Targets h = {{{0.02, -0.05, 0.03}, {0.0, 0.04, -0.02}}, {{0.01, 0.03, -0.02}}};
    const FlowScheme fs = build_scheme(q, h, 8, 2, 0.5);
    check_scheme_identities(fs, h);

    // Zero targets: every perturbation coefficient vanishes identically.
    const std::array<int, 2> q1{1, 1};
    const FlowScheme fz = build_scheme(q1, zero_targets(q1, 1), 6, 1, 0.5);
    check_scheme_identities(fz, zero_targets(q1, 1));
    for (int j = 0; j < 2; ++j)
        for (const auto& row : fz.par.eps[static_cast<size_t>(j)])
            for (double e : row) CHECK(e == 0.0);

    // Perturbation size shrinks strictly along the transit schedule, and the
    // transit budget never decreases.
    const Targets h3 = {{{0.02, -0.05, 0.03, 0.0}, {0.0, 0.04, -0.02, 0.01}},
                        {{0.01, 0.03, 0.0, -0.02}}};
    double prev_eps = 0.0;
    int prev_k = 0;
    bool first = true;
    for (int m : {6, 8, 10}) {
        const FlowScheme fm = build_scheme(q, h3, m, 3, 0.5);
        double worst = 0.0;
        for (int j = 0; j < 2; ++j)
            for (const auto& row : fm.par.eps[static_cast<size_t>(j)])
                for (double e : row) worst = std::max(worst, std::abs(e));
        CHECK(worst > 0.0);
        if (!first) {
            CHECK_MSG(worst < prev_eps, "max|eps| must shrink, m=" + std::to_string(m));
            CHECK(fm.par.k >= prev_k);
        }
        prev_eps = worst;
        prev_k = fm.par.k;
        first = false;
    }

    // Malformed target arrays are rejected.
    bool threw = false;
    try {
        build_scheme(q, zero_targets(q1, 1), 8, 1, 0.5);
    } catch (const std::runtime_error&) {
        threw = true;
    }
    CHECK_MSG(threw, "target count mismatch must be rejected");
}

void test_block_maps() {
    const std::array<int, 2> q{1, 1};
    const FlowScheme fs = build_scheme(q, zero_targets(q, 1), 6, 1, 0.5);

    for (int j = 1; j <= 2; ++j) {
        const double bj = fs.b(j);
        // Saddle linearization: time 0 is the identity, times add, and the
        // time-1 image of a sample point matches the exact exponentials.
        const Pt x0{bj + 0.3, 0.2};
        const Pt id = fs.L_block(j, 0.0, x0);
        CHECK(id[0] == x0[0]);
        CHECK(id[1] == x0[1]);
        const Pt one = fs.L_block(j, 1.0, x0);
        CHECK_NEAR(one[0], bj + 0.3 * std::exp(-1.0), 1e-15);
        CHECK_NEAR(one[1], 0.2 * std::exp(1.0), 1e-15);
        const Pt ab = fs.L_block(j, 0.7, fs.L_block(j, 1.6, x0));
        const Pt once = fs.L_block(j, 2.3, x0);
        CHECK_NEAR(ab[0], once[0], 1e-15);
        CHECK_NEAR(ab[1], once[1], 1e-15);

        // The perturbed turn map reduces to the plain-flow turn map when the
        // perturbation is removed and the shifted points collapse.
        FlowScheme plain = fs;
        plain.par.zp[static_cast<size_t>(j - 1)][2] = 0.0;
        plain.par.up[static_cast<size_t>(j - 1)][1] = bj;
        for (double& e : plain.par.eps[static_cast<size_t>(j - 1)][0]) e = 0.0;
        for (double w0 : {bj - 0.2, bj + 0.4})
            for (double w1 : {0.8, -0.97, 1.02}) {
                const Pt got = plain.T_block(j, 1, {w0, w1});
                const Pt want = plain.T_unperturbed(j, {w0, w1});
                CHECK_NEAR(got[0], want[0], 1e-15);
                CHECK_NEAR(got[1], want[1], 1e-15);
            }

        // With zero targets the block fixes the window origin: the anchor
        // point is carried exactly onto the next one.
        const Pt in = fs.block_in(j, 1, {0.0, 0.0});
        CHECK_NEAR(in[0], fs.par.z[static_cast<size_t>(j - 1)][1], 1e-15);
        CHECK_NEAR(in[1], fs.par.zp[static_cast<size_t>(j - 1)][1], 1e-15);
        const Pt out = fs.single_block(j, 1, {0.0, 0.0});
        CHECK_NEAR(out[0], 0.0, 1e-10);
        CHECK_NEAR(out[1], 0.0, 1e-10);

        // In window coordinates the slow-region boundary map acts exactly as
        // (v0, v1) -> (v0, psi_j(v1)): the transit-length equation cancels
        // the entry offset and the rate equation cancels the scale.
        const double scale = fs.par.eta * std::exp(-fs.par.m);
        for (double v0 : {-0.9, 0.3})
            for (double v1 : {0.45, 0.95}) {
                const Pt w = fs.S_block(j, fs.rescale_in(j, {v0, v1}));
                const double psi = (j == 1) ? std::exp(fs.par.K * v1) : std::log(v1);
                CHECK_NEAR(w[1] / scale, psi, 1e-11);
                const double base0 = fs.am(j) - 1.0 + fs.fc.delta / 2;
                CHECK_NEAR((w[0] - base0) / fs.par.eta, v0, 1e-9);
            }
    }
}

void test_cross_validation() {
    const std::array<int, 2> q{1, 1};
    const FlowScheme fs = build_scheme(q, zero_targets(q, 1), 6, 1, 0.5);
    for (int j = 1; j <= 2; ++j)
        for (int sigma : {1, -1}) {
            const BlockCrossCheck cc = cross_validate_block(fs, j, sigma);
            const std::string tag = "j=" + std::to_string(j) + " sigma=" + std::to_string(sigma);
            CHECK_MSG(std::abs(cc.transit_time - cc.transit_expected) < 1e-8,
                      tag + " transit " + std::to_string(cc.transit_time) + " vs " +
                          std::to_string(cc.transit_expected));
            CHECK_MSG(std::abs(cc.multiplier / cc.multiplier_expected - 1.0) < 1e-8,
                      tag + " multiplier " + std::to_string(cc.multiplier) + " vs " +
                          std::to_string(cc.multiplier_expected));
        }
}

void test_single_block_errors() {
    const std::array<int, 2> q{2, 1};
    const Targets h = {{{0.02, -0.05, 0.03, 0.0}, {0.0, 0.04, -0.02, 0.01}},
                       {{0.01, 0.03, 0.0, -0.02}}};
    const auto vs = linspace(-1.0, 1.0, 9);

    // Frozen sup-norm distances from the independent prototype run.
    const double want_s1[] = {0.942562, 0.643883, 0.445194};
    const double want_s2[] = {0.837620, 0.574498, 0.398460};

    double c_fit = 0.0;
    double prev1 = 0.0, prev2 = 0.0;
    int idx = 0;
    for (int m : {6, 8, 10}) {
        const FlowScheme fs = build_scheme(q, h, m, 3, 0.5);
        double w1 = 0.0, w2 = 0.0;
        for (double a : vs)
            for (double b : vs)
                for (int s : {1, 2}) {
                    const Pt got = fs.single_block(1, s, {a, b});
                    const Pt tgt = fs.target_henon(1, s, {a, b});
                    const double d =
                        std::max(std::abs(got[0] - tgt[0]), std::abs(got[1] - tgt[1]));
                    (s == 1 ? w1 : w2) = std::max(s == 1 ? w1 : w2, d);
                }
        CHECK_NEAR(w1, want_s1[idx], 1e-5);
        CHECK_NEAR(w2, want_s2[idx], 1e-5);
        if (idx > 0) {
            CHECK(w1 < prev1);
            CHECK(w2 < prev2);
        }
        prev1 = w1;
        prev2 = w2;

        // The error is c*eta with a stable constant across the schedule.
        const double c = w1 / fs.par.eta;
        if (idx == 0)
            c_fit = c;
        else
            CHECK_MSG(c > c_fit / 1.5 && c < c_fit * 1.5,
                      "m=" + std::to_string(m) + " c=" + std::to_string(c));
        ++idx;
    }
}

void test_end_to_end() {
    // Window grid: first coordinate spans the window, second stays inside the
    // domain of the logarithmic boundary map of leg 2 (applied first).
    std::vector<Pt> grid;
    for (double a : linspace(-0.9, 0.9, 7))
        for (double b : linspace(0.45, 0.95, 7)) grid.push_back({a, b});

    auto sup_err = [&grid](const FlowScheme& fs, int start) {
        double worst = 0.0;
        for (const Pt& v0 : grid) {
            const Pt v = fs.cycle(start, v0);
            const Pt t = fs.target_cycle(start, v0);
            worst = std::max(worst, std::max(std::abs(v[0] - t[0]), std::abs(v[1] - t[1])));
        }
        return worst;
    };

    // Plain cycle: no Hénon targets, boundary maps exp(t/2) and ln.
    {
        const std::array<int, 2> q{1, 1};
        const Targets h = zero_targets(q, 1);
        const int want_k[] = {23, 29, 35};
        const double want_err[] = {0.10372, 0.03562, 0.01273};
        int idx = 0;
        double prev = 0.0;
        for (int m : {6, 8, 10}) {
            const FlowScheme fs = build_scheme(q, h, m, 1, 0.5);
            CHECK_MSG(fs.par.k == want_k[idx], "m=" + std::to_string(m) + " k=" +
                                                   std::to_string(fs.par.k));
            CHECK(fs.par.l[0] == 0);
            CHECK(fs.par.l[1] == 0);
            const double w = sup_err(fs, 2);
            CHECK_NEAR(w, want_err[idx], 2e-4);
            if (idx > 0) CHECK(w < prev);
            prev = w;
            ++idx;
        }
        CHECK_MSG(prev < 0.1, "end-to-end error at m=10 is " + std::to_string(prev));
    }

    // Three cubic Hénon targets across the two legs.
    {
        const std::array<int, 2> q{2, 1};
        const Targets h = {{{0.02, -0.05, 0.03, 0.0}, {0.0, 0.04, -0.02, 0.01}},
                           {{0.01, 0.03, 0.0, -0.02}}};
        const int want_k[] = {19, 24, 28};
        const double want_err[] = {3.68313, 1.73449, 1.03251};
        int idx = 0;
        double prev = 0.0;
        for (int m : {6, 8, 10}) {
            const FlowScheme fs = build_scheme(q, h, m, 3, 0.5);
            CHECK_MSG(fs.par.k == want_k[idx], "m=" + std::to_string(m) + " k=" +
                                                   std::to_string(fs.par.k));
            const double w = sup_err(fs, 2);
            CHECK_NEAR(w, want_err[idx], 2e-3);
            if (idx > 0) CHECK(w < prev);
            prev = w;
            ++idx;
        }
    }
}

}  // namespace

int main() {
    test_bump_and_integrals();
    test_build_scheme();
    test_block_maps();
    test_cross_validation();
    test_single_block_errors();
    test_end_to_end();
    return testkit::summary("test_flow_scheme");
}
