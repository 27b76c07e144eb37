#pragma once

// Volume-preserving Henon-like maps
//   (x_1, ..., x_n) -> (x_2, ..., x_n, s*x_1 + h(x_2, ..., x_n)),
// with s = (-1)^(n+1). The Jacobian determinant is identically 1 and the
// inverse is closed-form.

#include <random>

#include "mapkit/poly.hpp"
#include "mapkit/smooth_map.hpp"

namespace mapkit {

struct HenonLikeMap {
    int n = 2;
    Poly h;  // polynomial in n-1 variables, arguments (x_2, ..., x_n)

    double sign() const { return (n % 2 == 0) ? -1.0 : 1.0; }
    int degree() const { return h.total_degree(); }

    Vec apply(const Vec& x) const;
    Vec apply_inverse(const Vec& xb) const;

    SmoothMap to_map() const;

    static HenonLikeMap random(int n, int deg, double scale, std::mt19937_64& rng);
};

}  // namespace mapkit
