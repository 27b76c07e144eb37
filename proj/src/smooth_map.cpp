#include "mapkit/smooth_map.hpp"

#include <cmath>
#include <stdexcept>

#include "mapkit/newton.hpp"

namespace mapkit {

Eigen::MatrixXd SmoothMap::jacobian(const Vec& x, double step) const {
    if (jac) return jac(x);
    Eigen::MatrixXd J(n, n);
    for (int j = 0; j < n; ++j) {
        double h = step * (1 + std::abs(x[j]));
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        Vec fp = f(xp), fm = f(xm);
        for (int i = 0; i < n; ++i) J(i, j) = (fp[i] - fm[i]) / (2 * h);
    }
    return J;
}

SmoothMap SmoothMap::identity(int n) {
    SmoothMap m;
    m.n = n;
    m.label = "id";
    m.f = [](const Vec& x) { return x; };
    m.jac = [n](const Vec&) { return Eigen::MatrixXd::Identity(n, n); };
    return m;
}

SmoothMap SmoothMap::from_polys(std::vector<Poly> comps, double r_dom) {
    SmoothMap m;
    m.n = (int)comps.size();
    m.r_dom = r_dom;
    auto shared = std::make_shared<std::vector<Poly>>(std::move(comps));
    // Precompute partials so jacobian() is exact for polynomial maps.
    auto partials = std::make_shared<std::vector<std::vector<Poly>>>();
    partials->resize(shared->size());
    for (std::size_t i = 0; i < shared->size(); ++i) {
        (*partials)[i].reserve(shared->size());
        for (std::size_t j = 0; j < shared->size(); ++j)
            (*partials)[i].push_back((*shared)[i].derivative((int)j));
    }
    int n = m.n;
    m.f = [shared, n](const Vec& x) {
        Vec y(n);
        for (int i = 0; i < n; ++i) y[i] = (*shared)[i].eval(x);
        return y;
    };
    m.jac = [partials, n](const Vec& x) {
        Eigen::MatrixXd J(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) J(i, j) = (*partials)[i][j].eval(x);
        return J;
    };
    m.polys = shared;
    return m;
}

double det_jacobian(const SmoothMap& m, const Vec& x, double step) {
    return m.jacobian(x, step).determinant();
}

Vec newton_inverse(const SmoothMap& m, const Vec& y, const Vec& seed, double tol) {
    NewtonOptions opts;
    opts.tol = tol;
    auto sol = newton_solve([&](const Vec& x) { return m.f(x); }, y, seed, opts);
    if (!sol) throw std::runtime_error("newton_inverse: iteration failed");
    return *sol;
}

SmoothMap compose(const SmoothMap& g, const SmoothMap& f) {
    SmoothMap m;
    m.n = f.n;
    m.label = g.label.empty() || f.label.empty() ? "" : g.label + "*" + f.label;
    auto gf = g.f;
    auto ff = f.f;
    m.f = [gf, ff](const Vec& x) { return gf(ff(x)); };
    if (g.jac && f.jac) {
        auto gj = g.jac;
        auto fj = f.jac;
        m.jac = [ff, gj, fj](const Vec& x) { return gj(ff(x)) * fj(x); };
    }
    return m;
}

}  // namespace mapkit
