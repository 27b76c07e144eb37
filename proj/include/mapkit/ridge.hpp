#pragma once

// Ridge decomposition of a polynomial in two active variables: each
// homogeneous part of degree k is written as a sum of k+1 directional powers
//   sum_j c_j (x + t_j y)^k,   t_j = cos(pi (2j+1) / (2(k+1))),
// by solving the Chebyshev-node Vandermonde system. Coefficients that depend
// on the remaining (parameter) variables are carried through linearly.

#include <vector>

#include "mapkit/poly.hpp"

namespace mapkit {

struct RidgeTerm {
    int k = 0;            // homogeneous degree in the active pair
    double node = 0.0;    // t_j
    double alpha = 1.0;   // unit direction (alpha, beta) = (1, t_j)/|(1, t_j)|
    double beta = 0.0;
    // Profile is amp * u^k in the unit coordinate u = alpha*x + beta*y; amp is
    // a polynomial in the parameter variables (same variable space as the
    // input, active slots unused).
    Poly amp;
};

struct RidgeDecomposition {
    int var_x = 0;  // active variable slots in the input polynomial
    int var_y = 1;
    std::vector<RidgeTerm> terms;

    Poly reconstruct(int nv) const;  // sum of amp * (alpha x + beta y)^k
};

// Throws std::runtime_error if a Vandermonde system is ill conditioned
// (condition number above 1e12); with Chebyshev nodes this indicates degrees
// far beyond the intended range.
RidgeDecomposition ridge_decompose(const Poly& psi, int var_x, int var_y);

}  // namespace mapkit
