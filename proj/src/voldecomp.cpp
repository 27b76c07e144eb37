#include "mapkit/voldecomp.hpp"

#include <cassert>
#include <cmath>
#include <ostream>
#include <sstream>

#include "mapkit/manifest.hpp"
#include "mapkit/newton.hpp"

namespace mapkit {

namespace {

std::string point_str(const Vec& x) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

// Determinant of a matrix of polynomials by cofactor expansion; used to get
// an exact J (and exact grad J) for polynomial maps.
Poly poly_det(const std::vector<std::vector<Poly>>& m) {
    std::size_t n = m.size();
    if (n == 1) return m[0][0];
    Poly det(m[0][0].nv);
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<std::vector<Poly>> minor;
        minor.reserve(n - 1);
        for (std::size_t i = 1; i < n; ++i) {
            std::vector<Poly> row;
            row.reserve(n - 1);
            for (std::size_t k = 0; k < n; ++k)
                if (k != j) row.push_back(m[i][k]);
            minor.push_back(std::move(row));
        }
        Poly term = m[0][j] * poly_det(minor);
        det += (j % 2 == 0) ? term : term.scaled(-1.0);
    }
    return det;
}

}  // namespace

JacobianField JacobianField::from_map(const SmoothMap& F, double grad_step) {
    JacobianField jf;
    jf.n = F.n;
    if (F.polys) {
        std::vector<std::vector<Poly>> partials(F.n, std::vector<Poly>());
        for (int i = 0; i < F.n; ++i)
            for (int j = 0; j < F.n; ++j)
                partials[i].push_back((*F.polys)[i].derivative(j));
        auto Jp = std::make_shared<Poly>(poly_det(partials));
        auto Gp = std::make_shared<std::vector<Poly>>();
        for (int j = 0; j < F.n; ++j) Gp->push_back(Jp->derivative(j));
        jf.J = [Jp](const Vec& x) { return Jp->eval(x); };
        int n = F.n;
        jf.gradJ = [Gp, n](const Vec& x) {
            Vec g(n);
            for (int j = 0; j < n; ++j) g[j] = (*Gp)[j].eval(x);
            return g;
        };
        return jf;
    }
    SmoothMap Fc = F;
    jf.J = [Fc](const Vec& x) { return Fc.jacobian(x).determinant(); };
    auto J = jf.J;
    int n = F.n;
    jf.gradJ = [J, n, grad_step](const Vec& x) {
        Vec g(n);
        for (int j = 0; j < n; ++j) {
            Vec xp = x, xm = x;
            xp[j] += grad_step;
            xm[j] -= grad_step;
            g[j] = (J(xp) - J(xm)) / (2 * grad_step);
        }
        return g;
    };
    return jf;
}

double estimate_K(const JacobianField& jf, const SampleGrid& grid, double safety,
                  double floor) {
    double sup = 0.0;
    for (const Vec& x : grid.points) {
        double J = jf.J(x);
        if (J <= 0.0)
            throw std::runtime_error("estimate_K: J <= 0 (orientation) at " +
                                     point_str(x));
        sup = std::max(sup, norm2(jf.gradJ(x)) / J);
    }
    return std::max(safety * sup, floor);
}

double estimate_K(const SmoothMap& F, const SampleGrid& grid, double safety) {
    return estimate_K(JacobianField::from_map(F), grid, safety);
}

double PhiField::value(const Vec& x) const {
    if (x[n - 1] <= 0.0) throw DomainError("phi (x_n <= 0)", x);
    Vec w = x;
    w[n - 1] = std::log(x[n - 1]) / K;
    double J = jf.J(w);
    if (J <= 0.0) throw DomainError("phi (J <= 0)", x);
    return K * x[n - 1] / J;
}

Vec PhiField::gradient(const Vec& x) const {
    if (x[n - 1] <= 0.0) throw DomainError("phi (x_n <= 0)", x);
    Vec w = x;
    w[n - 1] = std::log(x[n - 1]) / K;
    double J = jf.J(w);
    if (J <= 0.0) throw DomainError("phi (J <= 0)", x);
    Vec gJ = jf.gradJ(w);
    Vec g(n);
    for (int i = 0; i < n - 1; ++i) g[i] = -K * x[n - 1] * gJ[i] / (J * J);
    g[n - 1] = K / J - gJ[n - 1] / (J * J);
    return g;
}

PhiField build_phi(const JacobianField& jf, double K) {
    PhiField phi;
    phi.n = jf.n;
    phi.K = K;
    phi.jf = jf;
    return phi;
}

namespace {

// Reduced plane flow for tau: state (u, v) = (x_{n-1}, x_n) with the leading
// coordinates frozen.
OdeField plane_flow(const PhiField& phi, const Vec& frozen, double sign) {
    int n = phi.n;
    return [phi, frozen, sign, n](double, const Vec& uv, Vec& d) {
        Vec p = frozen;  // frozen has size n with slots n-2, n-1 overwritten
        p[n - 2] = uv[0];
        p[n - 1] = uv[1];
        Vec g = phi.gradient(p);
        d[0] = sign * g[n - 1];
        d[1] = -sign * g[n - 2];
    };
}

}  // namespace

double compute_tau(const PhiField& phi, const Vec& x, const OdeOptions& opts) {
    int n = phi.n;
    double u0 = x[n - 2];
    if (u0 == 0.0) return 0.0;
    // d u/dt = d phi/d x_n > 0, so the section u = 0 is ahead iff u0 < 0.
    double sign = (u0 < 0) ? 1.0 : -1.0;
    double budget = 5.0 * std::abs(u0) / phi.K + 20.0 / phi.K;
    CrossingResult cr;
    try {
        cr = ode_solve_until(plane_flow(phi, x, sign), {u0, x[n - 1]},
                             [](const Vec& uv) { return uv[0]; },
                             (u0 < 0) ? 1 : -1, budget, opts);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string("compute_tau diverged at ") +
                                 point_str(x) + ": " + e.what());
    }
    return sign * cr.t;
}

NumericFactor phi1_map(const PhiField& phi, const OdeOptions& opts) {
    int n = phi.n;
    double K = phi.K;

    auto fwd = std::make_shared<SmoothMap>();
    fwd->n = n;
    fwd->label = "phi1";
    fwd->f = [phi, opts, n, K](const Vec& x) {
        Vec y = x;
        if (x[n - 1] > 0.0) {
            y[n - 2] = -compute_tau(phi, x, opts);
            y[n - 1] = phi.value(x);
        } else {
            y[n - 2] = x[n - 2] / K;
            y[n - 1] = K * x[n - 1];
        }
        return y;
    };

    auto inv = std::make_shared<SmoothMap>();
    inv->n = n;
    inv->label = "phi1^-1";
    inv->f = [phi, opts, n, K](const Vec& y) {
        Vec x = y;
        double b = y[n - 1];
        if (b <= 0.0) {
            x[n - 2] = K * y[n - 2];
            x[n - 1] = b / K;
            return x;
        }
        // section height z > 0 with phi(c, 0, z) = b; phi is strictly
        // increasing in its last argument, so bracket and bisect/Newton
        Vec probe = y;
        probe[n - 2] = 0.0;
        auto phival = [&](double z) {
            probe[n - 1] = z;
            return phi.value(probe) - b;
        };
        double lo = b / K, hi = b / K;
        int guard = 0;
        while (phival(lo) > 0 && guard++ < 200) lo *= 0.5;
        guard = 0;
        while (phival(hi) < 0 && guard++ < 200) hi *= 2.0;
        if (phival(lo) > 0 || phival(hi) < 0)
            throw std::runtime_error("phi1 inverse: failed to bracket section height");
        double z = 0.5 * (lo + hi);
        for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
            probe[n - 1] = z;
            double fz = phi.value(probe) - b;
            double dz = phi.gradient(probe)[n - 1];
            double znew = z - fz / dz;  // Newton, safeguarded by the bracket
            if (fz > 0)
                hi = z;
            else
                lo = z;
            z = (znew > lo && znew < hi) ? znew : 0.5 * (lo + hi);
            if (std::abs(fz) < 1e-15 * (1 + std::abs(b))) break;
        }
        // flow from the section point by the signed time y_{n-1}
        double a = y[n - 2];
        Vec uv = {0.0, z};
        if (a != 0.0) uv = ode_solve(plane_flow(phi, y, 1.0), 0.0, uv, a, opts);
        x[n - 2] = uv[0];
        x[n - 1] = uv[1];
        return x;
    };

    NumericFactor f;
    f.fwd = fwd;
    f.inv = inv;
    return f;
}

SmoothMap blend_to_identity(const SmoothMap& F, double r_inner, double r_outer) {
    assert(r_outer > r_inner);
    int n = F.n;
    auto chi = [r_inner, r_outer](double r) {
        if (r <= r_inner) return 1.0;
        if (r >= r_outer) return 0.0;
        double s = (r - r_inner) / (r_outer - r_inner);
        return 1.0 - (10 - 15 * s + 6 * s * s) * s * s * s;
    };
    auto chi_d = [r_inner, r_outer](double r) {
        if (r <= r_inner || r >= r_outer) return 0.0;
        double w = r_outer - r_inner;
        double s = (r - r_inner) / w;
        return -30.0 * s * s * (1 - s) * (1 - s) / w;
    };

    SmoothMap ext;
    ext.n = n;
    ext.r_dom = r_outer;
    ext.identity_outside = true;
    ext.label = F.label.empty() ? "blended" : F.label + "(blended)";
    auto f = F.f;
    ext.f = [f, chi, n](const Vec& x) {
        double c = chi(norm2(x));
        if (c == 0.0) return x;
        Vec y = f(x);
        for (int i = 0; i < n; ++i) y[i] = x[i] + c * (y[i] - x[i]);
        return y;
    };
    if (F.jac) {
        auto jac = F.jac;
        ext.jac = [f, jac, chi, chi_d, n](const Vec& x) -> Eigen::MatrixXd {
            double r = norm2(x);
            double c = chi(r);
            if (c == 0.0) return Eigen::MatrixXd::Identity(n, n);
            Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
            Eigen::MatrixXd J = I + c * (jac(x) - I);
            if (r > 0) {
                double cd = chi_d(r);
                if (cd != 0.0) {
                    Vec y = f(x);
                    Eigen::VectorXd diff(n), grad_r(n);
                    for (int i = 0; i < n; ++i) {
                        diff(i) = y[i] - x[i];
                        grad_r(i) = x[i] / r;
                    }
                    J += cd * diff * grad_r.transpose();
                }
            }
            return J;
        };
    }

    // sampled injectivity validation: collisions on a deterministic lattice
    // plus an orientation sweep (a fold drives det D F_ext through zero)
    SampleGrid samples = (n <= 2)   ? SampleGrid::tensor(n, 25, r_outer * 1.2)
                         : (n == 3) ? SampleGrid::tensor(n, 13, r_outer * 1.2)
                                    : SampleGrid::random_ball(n, 600, r_outer * 1.2, 1234);
    std::vector<Vec> images;
    images.reserve(samples.size());
    for (const Vec& p : samples.points) images.push_back(ext.f(p));
    for (std::size_t i = 0; i < images.size(); ++i)
        for (std::size_t j = i + 1; j < images.size(); ++j)
            if (dist2(images[i], images[j]) < 1e-9 &&
                dist2(samples.points[i], samples.points[j]) > 1e-6)
                throw std::runtime_error("blend_to_identity: images collide near " +
                                         point_str(samples.points[i]) + " and " +
                                         point_str(samples.points[j]));
    for (const Vec& p : samples.points)
        if (ext.jacobian(p).determinant() <= 1e-12)
            throw std::runtime_error("blend_to_identity: fold detected at " +
                                     point_str(p));
    return ext;
}

SpecialDecomposition special_decompose(const SmoothMap& F, const SampleGrid& grid,
                                       const DecomposeOptions& opts) {
    SpecialDecomposition dec;
    dec.n = F.n;
    JacobianField jf = JacobianField::from_map(F);
    dec.K = (opts.K_override > 0)
                ? opts.K_override
                : estimate_K(jf, grid, opts.safety, opts.K_floor);
    jf.K = dec.K;
    PhiField phi = build_phi(jf, dec.K);
    OdeOptions ode;
    ode.tol = opts.ode_tol;
    dec.psi1 = Psi1Factor{dec.K};
    dec.phi1 = phi1_map(phi, ode);

    // inner chain G = Psi2 * Phi1 * Psi1 and its closed-form inverse
    auto phi1_fwd = dec.phi1.fwd;
    auto phi1_inv = dec.phi1.inv;
    double K = dec.K;
    int n = F.n;
    auto G = [phi1_fwd, K, n](const Vec& x) {
        Vec y = x;
        y[n - 1] = std::exp(K * x[n - 1]);
        y = (*phi1_fwd)(y);
        if (y[n - 1] <= 0.0) throw DomainError("psi2", y);
        y[n - 1] = std::log(y[n - 1]);
        return y;
    };
    auto Ginv = [phi1_inv, K, n](const Vec& y) {
        Vec x = y;
        x[n - 1] = std::exp(y[n - 1]);
        x = (*phi1_inv)(x);
        if (x[n - 1] <= 0.0) throw DomainError("psi1 (inverse)", x);
        x[n - 1] = std::log(x[n - 1]) / K;
        return x;
    };

    auto phi2_fwd = std::make_shared<SmoothMap>();
    phi2_fwd->n = n;
    phi2_fwd->label = "phi2";
    auto Ff = F.f;
    phi2_fwd->f = [Ff, Ginv](const Vec& y) { return Ff(Ginv(y)); };

    auto phi2_inv = std::make_shared<SmoothMap>();
    phi2_inv->n = n;
    phi2_inv->label = "phi2^-1";
    SmoothMap Fc = F;
    phi2_inv->f = [Fc, G](const Vec& z) { return G(newton_inverse(Fc, z, z)); };

    dec.phi2.fwd = phi2_fwd;
    dec.phi2.inv = phi2_inv;

    // residual and det-defect sweep
    dec.rows.assign(grid.size(), DecompositionRow{});
    MapComposition comp = dec.composition();
    double h = opts.fd_step;
    parallel_chunks(grid.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            const Vec& x = grid.points[k];
            DecompositionRow row;
            row.point = x;
            row.residual = dist2(comp.apply(x), F(x));
            // FD determinant of the inner chain vs J
            Eigen::MatrixXd DG(n, n);
            for (int j = 0; j < n; ++j) {
                Vec xp = x, xm = x;
                xp[j] += h;
                xm[j] -= h;
                Vec gp = G(xp), gm = G(xm);
                for (int i = 0; i < n; ++i) DG(i, j) = (gp[i] - gm[i]) / (2 * h);
            }
            row.det_defect = std::abs(DG.determinant() - jf.J(x));
            dec.rows[k] = row;
        }
    });
    for (const DecompositionRow& r : dec.rows) {
        dec.residual = std::max(dec.residual, r.residual);
        dec.det_defect = std::max(dec.det_defect, r.det_defect);
    }
    if (!opts.record_rows) dec.rows.clear();
    return dec;
}

MapComposition SpecialDecomposition::composition() const {
    MapComposition comp;
    comp.n = n;
    comp.provenance = "special decomposition";
    comp.meta["K"] = format_double(K);
    comp.factors = {phi2, psi2, phi1, psi1};
    return comp;
}

void write_decomposition_report(const SpecialDecomposition& dec, std::ostream& out) {
    for (int i = 0; i < dec.n; ++i) out << "x" << i + 1 << ",";
    out << "residual,det_defect\n";
    for (const DecompositionRow& r : dec.rows) {
        for (double c : r.point) out << format_double(c) << ",";
        out << format_double(r.residual) << "," << format_double(r.det_defect) << "\n";
    }
}

}  // namespace mapkit
