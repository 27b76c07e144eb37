#include "mapkit/normal_form.hpp"

#include <cmath>

#include "mapkit/ode.hpp"

namespace mapkit {

namespace {

double sup_abs_vec(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// The family map arrives in window coordinates (X, Y). The tuning works in
// the wedge variables u = X, v = Y - X, where the first row becomes u + v.
SeriesMap2<double> to_wedge(const SeriesMap2<double>& fam, int cap) {
    const SeriesMap2<double> f = truncated_to(fam, cap);
    if (std::abs(f.u.get(0, 0)) > 1e-14 || std::abs(f.v.get(0, 0)) > 1e-14)
        throw std::invalid_argument("tuning: the family must fix the origin");
    {
        TruncatedSeries<double> dx = f.u;
        dx.set(0, 1, dx.get(0, 1) - 1.0);
        if (detail::sup_abs(dx) > 1e-12)
            throw std::invalid_argument("tuning: the family's first component must be Y");
    }
    const auto u = TruncatedSeries<double>::variable(cap, 0);
    const auto v = TruncatedSeries<double>::variable(cap, 1);
    const TruncatedSeries<double> x = u, y = u + v;
    const TruncatedSeries<double> xbar = f.u.compose(x, y);
    const TruncatedSeries<double> ybar = f.v.compose(x, y);
    return {xbar, ybar - xbar};
}

}  // namespace

TuneResult conservative_tune(const RetsFamily& family, int m, std::vector<double> seed) {
    if (m < 1 || m > 4)
        throw std::invalid_argument("tuning: the tangency order m must be between 1 and 4");
    if (seed.empty()) seed.assign(static_cast<std::size_t>(m), 0.0);
    if (static_cast<int>(seed.size()) != m)
        throw std::invalid_argument("tuning: seed size must equal m");

    const auto fit_at = [&](const std::vector<double>& e) {
        return flow_interpolate(to_wedge(family(e), m), m);
    };
    const auto sign_of = [&](const FlowFit<double>& fit) {
        return tuning_sign(fit.psi1.size() > 1 ? fit.psi1[1] : 0.0);
    };
    const auto residual_of = [&](const FlowFit<double>& fit, int s) {
        std::vector<double> r(static_cast<std::size_t>(m));
        for (int i = 1; i <= m; ++i) {
            const double p1 =
                i < static_cast<int>(fit.psi1.size()) ? fit.psi1[static_cast<std::size_t>(i)] : 0.0;
            r[static_cast<std::size_t>(i - 1)] = fit.psi0[static_cast<std::size_t>(i)] - s * p1;
        }
        return r;
    };

    TuneResult out;
    std::vector<double> e = seed;
    FlowFit<double> fit = fit_at(e);
    // The map must preserve area up to higher order before any tuning makes
    // sense; psi1(0) is the log-determinant of the linear part.
    if (std::abs(fit.psi1[0]) > 1e-10)
        throw std::domain_error("tuning: the family must have unit linear determinant");
    int s = sign_of(fit);
    std::vector<double> g = residual_of(fit, s);

    const double tol = 1e-13;
    const double h = 1e-6;
    for (int iter = 0; iter < 40 && sup_abs_vec(g) > tol; ++iter) {
        out.iterations = iter + 1;
        std::vector<std::vector<double>> jac(static_cast<std::size_t>(m),
                                             std::vector<double>(static_cast<std::size_t>(m)));
        for (int col = 0; col < m; ++col) {
            std::vector<double> ep = e;
            ep[static_cast<std::size_t>(col)] += h;
            const std::vector<double> gp = residual_of(fit_at(ep), s);
            for (int row = 0; row < m; ++row)
                jac[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] =
                    (gp[static_cast<std::size_t>(row)] - g[static_cast<std::size_t>(row)]) / h;
        }
        const std::vector<double> step = solve_linear(jac, g);

        double factor = 1.0;
        for (int back = 0; back <= 8; ++back, factor /= 2) {
            std::vector<double> en = e;
            for (int i = 0; i < m; ++i)
                en[static_cast<std::size_t>(i)] -= factor * step[static_cast<std::size_t>(i)];
            const FlowFit<double> fn = fit_at(en);
            const int sn = sign_of(fn);
            const std::vector<double> gn = residual_of(fn, sn);
            if (sup_abs_vec(gn) < sup_abs_vec(g) || back == 8) {
                e = en;
                fit = fn;
                s = sn;
                g = gn;
                break;
            }
        }
    }

    out.converged = sup_abs_vec(g) <= tol;
    if (std::abs(fit.psi1[0]) > 1e-10)
        throw std::domain_error("tuning: the family must have unit linear determinant");

    out.ehat = e;
    out.s = s;
    out.psi0 = fit.psi0;
    out.psi1 = fit.psi1;
    out.psi_cons.resize(fit.psi1.size());
    for (std::size_t i = 0; i < fit.psi1.size(); ++i)
        out.psi_cons[i] = -fit.psi1[i] * (s < 0 && i % 2 == 1 ? -1.0 : 1.0);
    out.residual = sup_abs_vec(g);
    out.fit = fit;
    return out;
}

EllipticReport elliptic_check(const std::vector<double>& psi, const EllipticOptions& opts) {
    if (psi.size() < 2 || std::abs(psi[0]) > 1e-12 || psi[1] <= 0.0)
        throw std::invalid_argument("elliptic check: Psi must vanish at 0 with Psi'(0) > 0");
    if (opts.grid < 1 || opts.iterates < 1 || opts.box <= 0.0 || opts.box >= 0.5)
        throw std::invalid_argument("elliptic check: bad sampling options");

    const auto psi_at = [&](double u) {
        double acc = 0.0;
        for (std::size_t i = psi.size(); i-- > 0;) acc = acc * u + psi[i];
        return acc;
    };
    const auto hamiltonian = [&](double u, double v) {
        double acc = 0.0;
        for (std::size_t i = psi.size(); i-- > 0;) acc = acc * u + psi[i] / (double(i) + 1.0);
        return acc * u + v - std::log1p(v);
    };

    const OdeField field = [&](double, const Vec& x, Vec& dx) {
        dx[0] = x[1];
        dx[1] = -psi_at(x[0]) * (1.0 + x[1]);
    };
    OdeOptions oo;
    oo.tol = opts.ode_tol;
    const auto step = [&](const Pt& p) {
        const Vec r = ode_solve(field, 0.0, {p[0], p[1]}, 1.0, oo);
        return Pt{r[0], r[1]};
    };

    EllipticReport rep;
    rep.iterates = opts.iterates;

    // Per-step drift over the sample box (includes the origin when the grid
    // is odd, where the drift is identically zero).
    for (int i = 0; i < opts.grid; ++i)
        for (int j = 0; j < opts.grid; ++j) {
            const double fu = opts.grid == 1 ? 0.5 : double(i) / (opts.grid - 1);
            const double fv = opts.grid == 1 ? 0.5 : double(j) / (opts.grid - 1);
            const Pt p{-opts.box + 2 * opts.box * fu, -opts.box + 2 * opts.box * fv};
            const double h0 = hamiltonian(p[0], p[1]);
            const Pt q = step(p);
            rep.step_drift = std::max(rep.step_drift, std::abs(hamiltonian(q[0], q[1]) - h0));
        }

    // Long orbit from a representative interior point.
    Pt p{0.6 * opts.box, -0.4 * opts.box};
    const double h0 = hamiltonian(p[0], p[1]);
    const long stride = std::max(1L, opts.iterates / 100);
    for (long k = 1; k <= opts.iterates; ++k) {
        p = step(p);
        const double drift = std::abs(hamiltonian(p[0], p[1]) - h0);
        rep.long_drift = std::max(rep.long_drift, drift);
        if (k % stride == 0) rep.drift_curve.push_back(drift);
    }

    // Multipliers of the time-1 map at the origin: integrate the variational
    // equations alongside the (trivial) orbit of the fixed point and take
    // the eigenvalues of the resulting monodromy matrix.
    const auto psi_deriv = [&](double u) {
        double acc = 0.0;
        for (std::size_t i = psi.size(); i-- > 1;) acc = acc * u + double(i) * psi[i];
        return acc;
    };
    const OdeField variational = [&](double, const Vec& x, Vec& dx) {
        dx[0] = x[1];
        dx[1] = -psi_at(x[0]) * (1.0 + x[1]);
        const double a10 = -psi_deriv(x[0]) * (1.0 + x[1]);
        const double a11 = -psi_at(x[0]);
        dx[2] = x[3];
        dx[3] = a10 * x[2] + a11 * x[3];
        dx[4] = x[5];
        dx[5] = a10 * x[4] + a11 * x[5];
    };
    const Vec mono = ode_solve(variational, 0.0, {0, 0, 1, 0, 0, 1}, 1.0, oo);
    const double j00 = mono[2], j01 = mono[4];
    const double j10 = mono[3], j11 = mono[5];
    const std::complex<double> tr(j00 + j11, 0.0), det(j00 * j11 - j01 * j10, 0.0);
    const std::complex<double> root = std::sqrt(tr * tr / 4.0 - det);
    rep.multipliers = {tr / 2.0 + root, tr / 2.0 - root};
    rep.modulus_error = std::max(std::abs(std::abs(rep.multipliers[0]) - 1.0),
                                 std::abs(std::abs(rep.multipliers[1]) - 1.0));

    rep.pass = rep.step_drift < opts.step_tol && rep.long_drift < opts.long_tol &&
               rep.modulus_error < opts.modulus_tol;
    return rep;
}

SeriesMap2<double> conservative_test_family(const std::vector<double>& ehat, int cap) {
    if (ehat.size() != 2)
        throw std::invalid_argument("test family: expects exactly two parameters");
    if (cap < 2) throw std::invalid_argument("test family: cap must be at least 2");
    using TS = TruncatedSeries<double>;
    const TS x = TS::variable(cap, 0), y = TS::variable(cap, 1);
    const TS ybar = x.scaled(-1.0) + y.scaled(2.0 + ehat[0]) + (y * y).scaled(ehat[1]) +
                    (x * x).scaled(1.0 / 25.0) + (y * y * y).scaled(1.0 / 50.0);
    return {y, ybar};
}

}  // namespace mapkit
