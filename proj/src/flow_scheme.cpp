#include "mapkit/flow_scheme.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mapkit/ode.hpp"
#include "mapkit/quadrature.hpp"

namespace mapkit {

double FlowConstants::bump(double z) {
    if (std::abs(z) >= 0.5) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - 4.0 * z * z));
}

double FlowConstants::one_minus_bump(double z) {
    if (std::abs(z) >= 0.5) return 1.0;
    const double w = 4.0 * z * z;
    return -std::expm1(-w / (1.0 - w));
}

double FlowConstants::alpha(double mu) const {
    auto f = [mu](double z) {
        return bump(z) / (mu + (1.0 - mu) * one_minus_bump(z));
    };
    return integrate_gk_global(f, -0.5, 0.5, 1e-12, 1e-12);
}

double FlowConstants::beta(double mu) const {
    // The integrand peaks at 1/mu with width ~sqrt(mu); the globally adaptive
    // rule keeps the cost logarithmic in 1/mu.
    auto f = [mu](double z) {
        return 1.0 / (mu + (1.0 - mu) * one_minus_bump(z));
    };
    return 2.0 * (integrate_gk_global(f, -0.5, 0.5, 1e-12, 1e-12) - 1.0);
}

double FlowConstants::solve_mu(double target_beta) const {
    double lo = 1e-9, hi = 1.0;
    // Slack of 1e-12 keeps the boundary target beta(1) = 0 inside the range
    // even when the quadrature of the constant integrand is off by an ulp.
    if (!(beta(hi) <= target_beta + 1e-12 && target_beta <= beta(lo)))
        throw std::runtime_error("solve_mu: target outside covered range");
    for (int it = 0; it < 200 && (hi - lo) > 1e-16 * hi; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (beta(mid) > target_beta)
            lo = mid;
        else
            hi = mid;
    }
    return std::sqrt(lo * hi);
}

FlowScheme build_scheme(const std::array<int, 2>& q,
                        const std::vector<std::vector<std::vector<double>>>& h, int m, int d,
                        double K, const FlowConstants& fc) {
    FlowScheme fs;
    fs.fc = fc;
    SchemeParameters& p = fs.par;
    p.q = q;
    p.m = m;
    p.d = d;
    p.K = K;
    p.h = h;
    if (h.size() != 2) throw std::runtime_error("build_scheme: need targets for both legs");
    for (int j = 1; j <= 2; ++j) {
        if (static_cast<int>(h[static_cast<size_t>(j - 1)].size()) != q[static_cast<size_t>(j - 1)])
            throw std::runtime_error("build_scheme: target count mismatch");
        for (const auto& row : h[static_cast<size_t>(j - 1)])
            if (static_cast<int>(row.size()) != d + 1)
                throw std::runtime_error("build_scheme: target coefficient count mismatch");
    }

    const double delta = fc.delta;
    p.eta = std::exp(-m / (2.0 * d));

    for (int j = 1; j <= 2; ++j) {
        const int qj = q[static_cast<size_t>(j - 1)];
        if (qj < 1) throw std::runtime_error("build_scheme: q must be >= 1");
        const double bj = fs.b(j);
        auto& u = p.u[static_cast<size_t>(j - 1)];
        auto& z = p.z[static_cast<size_t>(j - 1)];
        auto& zp = p.zp[static_cast<size_t>(j - 1)];
        auto& up = p.up[static_cast<size_t>(j - 1)];
        auto& C = p.C[static_cast<size_t>(j - 1)];
        u.assign(static_cast<size_t>(qj + 2), 0.0);
        z.assign(static_cast<size_t>(qj + 2), 0.0);
        zp.assign(static_cast<size_t>(qj + 2), 0.0);
        up.assign(static_cast<size_t>(qj + 2), 0.0);
        C.assign(static_cast<size_t>(qj + 2), 0.0);

        // Positive window points inside (e^{-0.9 delta}, e^{-delta/2}).
        const double lo = std::exp(-0.9 * delta), hi = std::exp(-delta / 2);
        if (qj == 1) {
            u[1] = 0.5 * (lo + hi);
        } else {
            const double a = lo + 0.1 * (hi - lo), b = hi - 0.1 * (hi - lo);
            for (int s = 1; s <= qj; ++s) u[static_cast<size_t>(s)] = a + (b - a) * (s - 1) / (qj - 1);
        }

        z[1] = bj + std::exp(-delta / 2);
        C[1] = std::exp(-delta / 2);
        for (int s = 1; s <= qj; ++s) {
            z[static_cast<size_t>(s + 1)] = bj - std::exp(-delta) / u[static_cast<size_t>(s)];
            C[static_cast<size_t>(s + 1)] =
                1.0 / (std::exp(delta) * u[static_cast<size_t>(s)] * u[static_cast<size_t>(s)] *
                       C[static_cast<size_t>(s)]);
        }

        // Negative anchor point: ln|u| + ln C = l * delta with ln|u| in [-delta, 0).
        const double lnC = std::log(C[static_cast<size_t>(qj + 1)]);
        const int lj = static_cast<int>(std::ceil(lnC / delta - 1.0 - 1e-12));
        const double lnu = lj * delta - lnC;
        if (!(lnu >= -delta - 1e-12 && lnu < 1e-15))
            throw std::runtime_error("build_scheme: anchor exponent out of range");
        p.l[static_cast<size_t>(j - 1)] = lj;
        u[static_cast<size_t>(qj + 1)] = -std::exp(lnu);

        for (int s = 1; s <= qj; ++s) {
            zp[static_cast<size_t>(s)] = std::exp(-m) * u[static_cast<size_t>(s)];
            up[static_cast<size_t>(s)] = bj + std::exp(-m) * (z[static_cast<size_t>(s)] - bj);
        }
        const double t_last = m + lj * delta;
        zp[static_cast<size_t>(qj + 1)] = std::exp(-t_last) * u[static_cast<size_t>(qj + 1)];
        up[static_cast<size_t>(qj + 1)] =
            bj + std::exp(-t_last) * (z[static_cast<size_t>(qj + 1)] - bj);

        auto& eps = p.eps[static_cast<size_t>(j - 1)];
        eps.assign(static_cast<size_t>(qj), std::vector<double>(static_cast<size_t>(d + 1), 0.0));
        for (int s = 1; s <= qj; ++s)
            for (int nu = 0; nu <= d; ++nu)
                eps[static_cast<size_t>(s - 1)][static_cast<size_t>(nu)] =
                    h[static_cast<size_t>(j - 1)][static_cast<size_t>(s - 1)][static_cast<size_t>(nu)] *
                    std::exp(-m) * std::pow(p.eta, 1 - nu) / C[static_cast<size_t>(s + 1)] *
                    std::pow(C[static_cast<size_t>(s)], nu);
    }

    // Shared integer transit budget k: both legs must admit a slow-region
    // parameter with beta(mu_j) equal to the leg's matching target and
    // alpha(mu_j) large enough to cover m - ln(eta).
    const double A = m - std::log(p.eta);
    auto leg_target = [&](int j, int k) {
        const int jo = 3 - j;
        const int qo = q[static_cast<size_t>(jo - 1)];
        return k - 5 + 1.5 * delta +
               std::log(std::abs(p.u[static_cast<size_t>(jo - 1)][static_cast<size_t>(qo + 1)]));
    };
    int k = 6;
    for (;; ++k) {
        if (k > 2000) throw std::runtime_error("build_scheme: no admissible transit budget");
        bool ok = true;
        for (int j = 1; j <= 2 && ok; ++j) {
            const double tgt = leg_target(j, k);
            if (tgt <= 0.0 || fc.alpha(fc.solve_mu(tgt)) < A) ok = false;
        }
        if (ok) break;
    }
    p.k = k;
    for (int j = 1; j <= 2; ++j) {
        const double tgt = leg_target(j, k);
        const double mu = fc.solve_mu(tgt);
        const double al = fc.alpha(mu);
        p.mu[static_cast<size_t>(j - 1)] = mu;
        p.alpha_val[static_cast<size_t>(j - 1)] = al;
        p.beta_val[static_cast<size_t>(j - 1)] = fc.beta(mu);
        p.gamma[static_cast<size_t>(j - 1)] = A / al;
        const double g = p.gamma[static_cast<size_t>(j - 1)];
        if (!(g > 0.0 && g <= 1.0 + 1e-12))
            throw std::runtime_error("build_scheme: slow-region rate out of (0, 1]");
    }
    return fs;
}

namespace {

double psi_boundary(int j, double K, double t) {
    if (j == 1) return std::exp(K * t);
    if (!(t > 0.0)) throw std::runtime_error("leg-2 boundary map needs a positive argument");
    return std::log(t);
}

}  // namespace

Pt FlowScheme::S_block(int j, const Pt& x) const {
    const double ga = par.gamma[static_cast<size_t>(j - 1)] * par.alpha_val[static_cast<size_t>(j - 1)];
    return {x[0] - par.k + par.beta_val[static_cast<size_t>(j - 1)],
            std::exp(-ga) * psi_boundary(j, par.K, std::exp(ga) * x[1])};
}

Pt FlowScheme::Q_block(int j, const Pt& x) const {
    const double e = fc.delta - x[0] - 1.0 + am(j);
    return {b(j) + std::exp(-e),
            std::exp(e) * x[1] + std::exp(-par.m) * par.u[static_cast<size_t>(j - 1)][1]};
}

Pt FlowScheme::L_block(int j, double t, const Pt& x) const {
    return {b(j) + std::exp(-t) * (x[0] - b(j)), std::exp(t) * x[1]};
}

Pt FlowScheme::T_block(int j, int s, const Pt& x) const {
    const auto& eps = par.eps[static_cast<size_t>(j - 1)][static_cast<size_t>(s - 1)];
    const double us = par.u[static_cast<size_t>(j - 1)][static_cast<size_t>(s)];
    double pert = 0.0, pw = 1.0;
    for (int nu = 0; nu <= par.d; ++nu, pw *= (x[1] - us)) pert += eps[static_cast<size_t>(nu)] * pw;
    return {b(j) - std::exp(-fc.delta) / x[1],
            par.zp[static_cast<size_t>(j - 1)][static_cast<size_t>(s + 1)] -
                std::exp(fc.delta) * x[1] * x[1] *
                    (x[0] - par.up[static_cast<size_t>(j - 1)][static_cast<size_t>(s)]) +
            pert};
}

Pt FlowScheme::T_unperturbed(int j, const Pt& x) const {
    return {b(j) - std::exp(-fc.delta) / x[1],
            -std::exp(fc.delta) * x[1] * x[1] * (x[0] - b(j))};
}

Pt FlowScheme::G_block(int j, const Pt& x) const {
    const int qj = par.q[static_cast<size_t>(j - 1)];
    return {ap(3 - j) + 1.0 - fc.delta - std::log(std::abs(x[1])),
            -std::abs(x[1]) * (x[0] - par.up[static_cast<size_t>(j - 1)][static_cast<size_t>(qj + 1)])};
}

Pt FlowScheme::leg(int j, const Pt& x0) const {
    Pt x = S_block(j, x0);
    x = Q_block(j, x);
    for (int s = 1; s <= par.q[static_cast<size_t>(j - 1)]; ++s) {
        x = L_block(j, par.m, x);
        x = T_block(j, s, x);
    }
    x = L_block(j, par.m + par.l[static_cast<size_t>(j - 1)] * fc.delta, x);
    return G_block(j, x);
}

Pt FlowScheme::rescale_in(int j, const Pt& v) const {
    const int jo = 3 - j;
    const int qo = par.q[static_cast<size_t>(jo - 1)];
    const double base =
        ap(j) + 1.0 - fc.delta -
        std::log(std::abs(par.u[static_cast<size_t>(jo - 1)][static_cast<size_t>(qo + 1)]));
    return {base + par.eta * v[0], par.eta * std::exp(-par.m) * v[1]};
}

Pt FlowScheme::rescale_out(int j, const Pt& x) const {
    const int jo = 3 - j;
    const int qo = par.q[static_cast<size_t>(jo - 1)];
    const double base =
        ap(j) + 1.0 - fc.delta -
        std::log(std::abs(par.u[static_cast<size_t>(jo - 1)][static_cast<size_t>(qo + 1)]));
    return {(x[0] - base) / par.eta, x[1] / (par.eta * std::exp(-par.m))};
}

Pt FlowScheme::block_in(int j, int s, const Pt& v) const {
    const double Cs = par.C[static_cast<size_t>(j - 1)][static_cast<size_t>(s)];
    return {par.z[static_cast<size_t>(j - 1)][static_cast<size_t>(s)] + Cs * par.eta * v[0],
            par.zp[static_cast<size_t>(j - 1)][static_cast<size_t>(s)] +
                par.eta * std::exp(-par.m) * v[1] / Cs};
}

Pt FlowScheme::block_out(int j, int s, const Pt& x) const {
    const double Cn = par.C[static_cast<size_t>(j - 1)][static_cast<size_t>(s + 1)];
    return {(x[0] - par.z[static_cast<size_t>(j - 1)][static_cast<size_t>(s + 1)]) / (Cn * par.eta),
            (x[1] - par.zp[static_cast<size_t>(j - 1)][static_cast<size_t>(s + 1)]) * Cn /
                (par.eta * std::exp(-par.m))};
}

Pt FlowScheme::target_henon(int j, int s, const Pt& v) const {
    const auto& hc = par.h[static_cast<size_t>(j - 1)][static_cast<size_t>(s - 1)];
    double acc = 0.0, pw = 1.0;
    for (int nu = 0; nu <= par.d; ++nu, pw *= v[1]) acc += hc[static_cast<size_t>(nu)] * pw;
    return {v[1], -v[0] + acc};
}

Pt FlowScheme::target_leg(int j, const Pt& v) const {
    Pt w = {v[0], psi_boundary(j, par.K, v[1])};
    for (int s = 1; s <= par.q[static_cast<size_t>(j - 1)]; ++s) w = target_henon(j, s, w);
    return {w[1], -w[0]};
}

Pt FlowScheme::single_block(int j, int s, const Pt& v) const {
    return block_out(j, s, T_block(j, s, L_block(j, par.m, block_in(j, s, v))));
}

Pt FlowScheme::cycle(int start, const Pt& v0) const {
    Pt v = rescale_out(3 - start, leg(start, rescale_in(start, v0)));
    return rescale_out(start, leg(3 - start, rescale_in(3 - start, v)));
}

Pt FlowScheme::target_cycle(int start, const Pt& v0) const {
    return target_leg(3 - start, target_leg(start, v0));
}

BlockCrossCheck cross_validate_block(const FlowScheme& fs, int j, int sigma, double x2_start,
                                     double ode_tol) {
    const double a = (sigma > 0) ? fs.ap(j) : fs.am(j);
    const double mu = fs.par.mu[static_cast<size_t>(j - 1)];
    const double gam = fs.par.gamma[static_cast<size_t>(j - 1)];

    OdeField f = [a, mu, gam, sigma](double, const Vec& x, Vec& dx) {
        dx.resize(2);
        dx[0] = -mu - (1.0 - mu) * FlowConstants::one_minus_bump(x[0] - a);
        dx[1] = sigma * gam * x[1] * FlowConstants::bump(x[0] - a);
    };
    OdeOptions opts;
    opts.tol = ode_tol;

    BlockCrossCheck out;
    out.transit_expected = 2.0 + fs.fc.beta(mu) / 2.0;
    out.multiplier_expected = std::exp(sigma * gam * fs.fc.alpha(mu));
    const Vec x0 = {a + 1.0, x2_start};
    auto hit = ode_solve_until(
        f, x0, [a](const Vec& x) { return x[0] - (a - 1.0); }, -1,
        2.0 * out.transit_expected + 10.0, opts);
    out.transit_time = hit.t;
    out.multiplier = hit.x[1] / x2_start;
    return out;
}

}  // namespace mapkit
