#pragma once

// Exact planar shear flows and their factorization into Hénon-like maps.
//
// A ShearMap translates points along the direction (beta, -alpha) inside one
// coordinate pair, by an amount depending only on the conserved combination
// u = alpha*x_i + beta*x_{i+1} (and on the remaining coordinates, which it
// never moves). Such maps are volume preserving in closed form and are the
// time-tau flows of ridge terms of a stream function.
//
// shear_to_henon rewrites a shear as a finite product of Hénon-like maps:
// axis shears in the plane need four factors, oblique ones are conjugated by
// a rotation-like linear map split into three axis shears (28 factors), and
// for n >= 3 every planar factor is expanded into 2n+1 full-dimensional
// Hénon-like factors.

#include <vector>

#include "mapkit/henon.hpp"
#include "mapkit/poly.hpp"
#include "mapkit/ridge.hpp"
#include "mapkit/smooth_map.hpp"

namespace mapkit {

struct ShearMap {
    int n = 0;
    int ix = 0;  // active pair slots (0-based); iy == ix + 1
    int iy = 1;
    double alpha = 1.0;  // unit direction defining u = alpha*x + beta*y
    double beta = 0.0;
    double tau = 0.0;
    // Profile derivative: displacement is tau * g(u) * (beta, -alpha). The
    // polynomial g lives in n variables, with slot ix holding u, slot iy
    // unused, and the other slots acting as frozen parameters.
    Poly g;

    void apply(const Vec& x, Vec& y) const;
    void apply_inverse(const Vec& xbar, Vec& x) const;
    SmoothMap to_map() const;

    // Time-tau flow of the ridge term's Hamiltonian amp * u^k: displacement
    // speed is amp * k * u^{k-1}.
    static ShearMap from_ridge(int n, int ix, const RidgeTerm& term, double tau);
};

// Product of 2n+1 Hénon-like maps (application order) equal to the map that
// acts on the pair (x_i, x_{i+1}), i 1-based, as
//   (x_i, x_{i+1}) -> (x_{i+1}, -x_i + h2(...))
// and fixes the other coordinates. h2 is a polynomial in n variables: slot i
// (0-based) is the active argument x_{i+1}, slots 0..i-2 and i+1..n-1 are
// parameters, slot i-1 must be unused. For n == 2 this is a single factor.
std::vector<HenonLikeMap> planar_henon_factors(int n, int i, const Poly& h2);

// Factorization of a shear into Hénon-like maps, in application order.
std::vector<HenonLikeMap> shear_to_henon(const ShearMap& S);

}  // namespace mapkit
