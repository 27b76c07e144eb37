#pragma once

// SmoothMap is the universal currency: any evaluable map of R^n with an
// optional analytic Jacobian. Everything that composes, decomposes, or
// measures maps goes through this type.

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mapkit/geometry.hpp"
#include "mapkit/poly.hpp"

namespace mapkit {

struct SmoothMap {
    int n = 0;                       // dimension
    double r_dom = 0.0;              // radius of validity, 0 = everywhere
    bool identity_outside = false;   // true if the map is id outside r_dom
    std::string label;               // for diagnostics only
    std::function<Vec(const Vec&)> f;
    std::function<Eigen::MatrixXd(const Vec&)> jac;  // optional analytic Jacobian
    std::shared_ptr<const std::vector<Poly>> polys;  // set when built from polynomials

    Vec operator()(const Vec& x) const { return f(x); }

    // Analytic Jacobian when available, otherwise central differences.
    Eigen::MatrixXd jacobian(const Vec& x, double step = 1e-5) const;

    static SmoothMap identity(int n);
    static SmoothMap from_polys(std::vector<Poly> comps, double r_dom = 0.0);
};

double det_jacobian(const SmoothMap& m, const Vec& x, double step = 1e-5);

// Invert y = m(x) by damped Newton from `seed`. Throws on failure.
Vec newton_inverse(const SmoothMap& m, const Vec& y, const Vec& seed,
                   double tol = 1e-12);

// Compose g after f: x -> g(f(x)).
SmoothMap compose(const SmoothMap& g, const SmoothMap& f);

}  // namespace mapkit
