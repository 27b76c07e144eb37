#include "mapkit/fieldfit.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>

#include "mapkit/ode.hpp"

namespace mapkit {

namespace {

// One divergence-free basis field: the pair-i field of a stream monomial.
struct BasisElem {
    int i = 1;  // 1-based pair index
    Poly eta;   // d m / d x_{i+1}
    Poly zeta;  // -d m / d x_i
};

std::vector<BasisElem> stream_basis(int n, int degree) {
    std::vector<BasisElem> elems;
    std::vector<int> e(static_cast<size_t>(n), 0);
    const int dmax = degree + 1;
    while (true) {
        int total = 0;
        for (int v : e) total += v;
        if (total >= 1 && total <= dmax) {
            std::vector<int> et(e.begin(), e.end());
            et.push_back(0);  // unused time slot
            const Poly m = Poly::monomial(n + 1, 1.0, et);
            for (int i = 1; i <= n - 1; ++i) {
                BasisElem b;
                b.i = i;
                b.eta = m.derivative(i);
                b.zeta = m.derivative(i - 1).scaled(-1.0);
                if (b.eta.is_zero() && b.zeta.is_zero()) continue;
                elems.push_back(std::move(b));
            }
        }
        int k = n - 1;
        while (k >= 0 && e[static_cast<size_t>(k)] == dmax) e[static_cast<size_t>(k--)] = 0;
        if (k < 0) break;
        ++e[static_cast<size_t>(k)];
    }
    return elems;
}

NonAutonomousField assemble(int n, const std::vector<BasisElem>& elems,
                            const Eigen::VectorXd& c) {
    NonAutonomousField X = NonAutonomousField::zero(n);
    for (size_t e = 0; e < elems.size(); ++e) {
        const double ce = c(static_cast<Eigen::Index>(e));
        if (ce == 0.0) continue;
        X.xi[static_cast<size_t>(elems[e].i - 1)] += elems[e].eta.scaled(ce);
        X.xi[static_cast<size_t>(elems[e].i)] += elems[e].zeta.scaled(ce);
    }
    return X;
}

// Least-squares coefficients making the basis field match the samples
// values[p] at points[p].
Eigen::VectorXd solve_ls(int n, const std::vector<BasisElem>& elems,
                         const std::vector<Vec>& points, const std::vector<Vec>& values) {
    const Eigen::Index rows = static_cast<Eigen::Index>(points.size()) * n;
    const Eigen::Index cols = static_cast<Eigen::Index>(elems.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::VectorXd rhs(rows);
    double buf[Poly::kMaxVars] = {0.0};
    for (size_t p = 0; p < points.size(); ++p) {
        for (int j = 0; j < n; ++j) buf[j] = points[p][static_cast<size_t>(j)];
        buf[n] = 0.0;
        const Eigen::Index r0 = static_cast<Eigen::Index>(p) * n;
        for (int j = 0; j < n; ++j) rhs(r0 + j) = values[p][static_cast<size_t>(j)];
        for (size_t e = 0; e < elems.size(); ++e) {
            const Eigen::Index col = static_cast<Eigen::Index>(e);
            A(r0 + elems[e].i - 1, col) += elems[e].eta.eval(buf);
            A(r0 + elems[e].i, col) += elems[e].zeta.eval(buf);
        }
    }
    return A.colPivHouseholderQr().solve(rhs);
}

}  // namespace

Vec flow_time_one(const NonAutonomousField& X, const Vec& x0, double ode_tol) {
    OdeOptions opts;
    opts.tol = ode_tol;
    OdeField f = [&X](double t, const Vec& x, Vec& dx) { X.eval(t, x, dx); };
    return ode_solve(f, 0.0, x0, 1.0, opts);
}

FieldFitResult fit_generating_field(const SmoothMap& Phi, int degree,
                                    const std::vector<Vec>& points,
                                    const FieldFitOptions& opts) {
    const int n = Phi.n;
    if (points.empty()) throw std::invalid_argument("fit_generating_field: no points");
    if (n + 1 > Poly::kMaxVars)
        throw std::invalid_argument("fit_generating_field: dimension too large");

    const std::vector<BasisElem> elems = stream_basis(n, degree);
    std::vector<Vec> images(points.size());
    for (size_t p = 0; p < points.size(); ++p) images[p] = Phi.f(points[p]);

    // Seed: affine field L x + b with exp(L) = DPhi(0) (trace-projected) and
    // time-one flow from 0 hitting Phi(0); realized in basis coordinates by a
    // least-squares fit of that affine field on the points.
    Eigen::MatrixXd L;
    {
        const Vec origin(static_cast<size_t>(n), 0.0);
        Eigen::MatrixXd A0 = Phi.jacobian(origin);
        Eigen::MatrixXd Lg = A0.log();
        if (!Lg.allFinite()) Lg = A0 - Eigen::MatrixXd::Identity(n, n);
        Lg -= (Lg.trace() / n) * Eigen::MatrixXd::Identity(n, n);
        L = Lg;
    }
    Eigen::VectorXd b;
    {
        // M = int_0^1 exp(L s) ds = sum_k L^k / (k+1)!
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
        Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);
        double fact = 1.0;
        for (int k = 0; k < 40; ++k) {
            fact /= (k + 1);
            M += P * fact;
            P = P * L;
        }
        Eigen::VectorXd phi0(n);
        const Vec f0 = Phi.f(Vec(static_cast<size_t>(n), 0.0));
        for (int j = 0; j < n; ++j) phi0(j) = f0[static_cast<size_t>(j)];
        b = M.fullPivLu().solve(phi0);
    }
    std::vector<Vec> seed_vals(points.size());
    for (size_t p = 0; p < points.size(); ++p) {
        Eigen::VectorXd x(n);
        for (int j = 0; j < n; ++j) x(j) = points[p][static_cast<size_t>(j)];
        Eigen::VectorXd v = L * x + b;
        seed_vals[p] = Vec(v.data(), v.data() + n);
    }
    Eigen::VectorXd c = solve_ls(n, elems, points, seed_vals);

    auto residual_of = [&](const Eigen::VectorXd& coef, std::vector<Vec>* flows) {
        const NonAutonomousField X = assemble(n, elems, coef);
        double worst = 0.0;
        if (flows) flows->resize(points.size());
        for (size_t p = 0; p < points.size(); ++p) {
            Vec y = flow_time_one(X, points[p], opts.ode_tol);
            worst = std::max(worst, dist2(images[p], y));
            if (flows) (*flows)[p] = std::move(y);
        }
        return worst;
    };

    std::vector<Vec> flows;
    double best = residual_of(c, &flows);
    Eigen::VectorXd best_c = c;
    int iter = 0;
    while (iter < opts.max_iter && best > opts.target) {
        ++iter;
        // Fit the mismatch at the flow images: to first order the corrected
        // flow is flow(x) + delta(flow(x)).
        std::vector<Vec> vals(points.size());
        for (size_t p = 0; p < points.size(); ++p) vals[p] = vsub(images[p], flows[p]);
        const Eigen::VectorXd dc = solve_ls(n, elems, flows, vals);

        bool improved = false;
        double lambda = 1.0;
        for (int attempt = 0; attempt < 3; ++attempt, lambda *= 0.5) {
            Eigen::VectorXd cand = best_c + lambda * dc;
            std::vector<Vec> cand_flows;
            const double r = residual_of(cand, &cand_flows);
            if (r < best) {
                best = r;
                best_c = cand;
                flows = std::move(cand_flows);
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }

    FieldFitResult out;
    out.field = assemble(n, elems, best_c);
    out.residual_c0 = best;
    out.iterations = iter;
    return out;
}

}  // namespace mapkit
