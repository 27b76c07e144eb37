#include "mapkit/newton.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace mapkit {

std::optional<Vec> newton_solve(const std::function<Vec(const Vec&)>& f,
                                const Vec& target, const Vec& seed,
                                const NewtonOptions& opts) {
    const int n = (int)seed.size();
    Vec x = seed;
    Vec fx = f(x);
    auto resid = [&](const Vec& v) {
        double r = 0;
        for (int i = 0; i < n; ++i) r = std::max(r, std::abs(v[i] - target[i]));
        return r;
    };
    double r = resid(fx);
    for (int it = 0; it < opts.max_iter; ++it) {
        if (r < opts.tol) return x;
        Eigen::MatrixXd J(n, n);
        for (int j = 0; j < n; ++j) {
            double h = opts.fd_step * (1 + std::abs(x[j]));
            Vec xp = x;
            xp[j] += h;
            Vec fp = f(xp);
            for (int i = 0; i < n; ++i) J(i, j) = (fp[i] - fx[i]) / h;
        }
        Eigen::VectorXd rhs(n);
        for (int i = 0; i < n; ++i) rhs(i) = target[i] - fx[i];
        Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (!lu.isInvertible()) return std::nullopt;
        Eigen::VectorXd dx = lu.solve(rhs);
        double lambda = 1.0;
        bool improved = false;
        for (int bt = 0; bt < opts.max_backtrack; ++bt) {
            Vec xn = x;
            for (int i = 0; i < n; ++i) xn[i] += lambda * dx(i);
            Vec fn = f(xn);
            double rn = resid(fn);
            if (rn < r) {
                x = xn;
                fx = fn;
                r = rn;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) return (r < opts.tol) ? std::optional<Vec>(x) : std::nullopt;
    }
    return (r < opts.tol) ? std::optional<Vec>(x) : std::nullopt;
}

}  // namespace mapkit
