#include "mapkit/chain.hpp"

#include <cmath>
#include <memory>
#include <sstream>

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

SmoothMap interpolant(const SmoothMap& F, double t) {
    SmoothMap m;
    m.n = F.n;
    auto f = F.f;
    m.f = [f, t](const Vec& x) {
        Vec y = f(x);
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = (1 - t) * x[i] + t * y[i];
        return y;
    };
    if (F.jac) {
        auto j = F.jac;
        int n = F.n;
        m.jac = [j, t, n](const Vec& x) -> Eigen::MatrixXd {
            return (1 - t) * Eigen::MatrixXd::Identity(n, n) + t * j(x);
        };
    }
    return m;
}

}  // namespace

ChainValidationError::ChainValidationError(double t_, const Vec& point_)
    : std::runtime_error("linear interpolation is not a diffeotopy: det DF_t <= 0 at t=" +
                         std::to_string(t_) + ", x=" + point_str(point_)),
      t(t_),
      point(point_) {}

std::vector<SmoothMap> ruelle_takens_chain(const SmoothMap& F, int N,
                                           const SampleGrid& grid) {
    for (int k = 0; k <= N; ++k) {
        double t = (double)k / N;
        SmoothMap Ft = interpolant(F, t);
        for (const Vec& x : grid.points)
            if (Ft.jacobian(x).determinant() <= 0.0) throw ChainValidationError(t, x);
    }

    // Seed table for the Newton inversion of F_{(s-1)/N}: nearest grid
    // preimage, refreshed per stage.
    auto grid_pts = std::make_shared<std::vector<Vec>>(grid.points);

    std::vector<SmoothMap> chain;
    chain.reserve(N);
    for (int s = 1; s <= N; ++s) {
        auto prev = std::make_shared<SmoothMap>(interpolant(F, (double)(s - 1) / N));
        auto cur = std::make_shared<SmoothMap>(interpolant(F, (double)s / N));
        auto images = std::make_shared<std::vector<Vec>>();
        images->reserve(grid_pts->size());
        for (const Vec& p : *grid_pts) images->push_back((*prev)(p));

        SmoothMap stage;
        stage.n = F.n;
        stage.label = "chain[" + std::to_string(s) + "/" + std::to_string(N) + "]";
        stage.f = [prev, cur, grid_pts, images](const Vec& y) -> Vec {
            NewtonOptions opts;
            opts.tol = 1e-12;
            auto pre = newton_solve([&](const Vec& v) { return (*prev)(v); }, y, y, opts);
            if (!pre) {
                // fall back to the nearest recorded preimage as the seed
                std::size_t best = 0;
                double bd = dist2((*images)[0], y);
                for (std::size_t i = 1; i < images->size(); ++i) {
                    double d = dist2((*images)[i], y);
                    if (d < bd) {
                        bd = d;
                        best = i;
                    }
                }
                pre = newton_solve([&](const Vec& v) { return (*prev)(v); }, y,
                                   (*grid_pts)[best], opts);
            }
            if (!pre)
                throw std::runtime_error("ruelle_takens_chain: inversion failed at " +
                                         point_str(y));
            return (*cur)(*pre);
        };
        chain.push_back(std::move(stage));
    }
    return chain;
}

}  // namespace mapkit
