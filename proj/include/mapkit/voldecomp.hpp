#pragma once

// Decomposition of an orientation-preserving diffeomorphism F into
//   F = Phi2 * Psi2 * Phi1 * Psi1
// where Psi1: x_n -> exp(K x_n), Psi2: x_n -> ln x_n are fixed coordinate
// maps, Phi1 is an explicitly constructed volume-preserving map built from
// an auxiliary plane flow, and Phi2 is volume-preserving because the inner
// chain absorbs the full Jacobian of F.

#include <iosfwd>

#include "mapkit/factors.hpp"
#include "mapkit/geometry.hpp"
#include "mapkit/ode.hpp"
#include "mapkit/smooth_map.hpp"

namespace mapkit {

// Jacobian determinant J(x) = det DF(x) and its gradient, with the bound K
// controlling sup ||grad J|| / J.
struct JacobianField {
    int n = 0;
    double K = 0.0;  // 0 until estimated
    std::function<double(const Vec&)> J;
    std::function<Vec(const Vec&)> gradJ;

    // J from the (analytic when available) Jacobian of F, grad J by central
    // differences of J.
    static JacobianField from_map(const SmoothMap& F, double grad_step = 1e-5);
};

// K = safety * sup_grid ||grad J|| / J, floored at `floor`. Throws if J <= 0
// anywhere on the grid.
double estimate_K(const JacobianField& jf, const SampleGrid& grid,
                  double safety = 1.1, double floor = 0.1);
double estimate_K(const SmoothMap& F, const SampleGrid& grid, double safety = 1.1);

// Scalar field phi(x) = K x_n / J(x_1, ..., x_{n-1}, ln(x_n)/K) on the
// half-space x_n > 0, with analytic partial derivatives in terms of J and
// grad J. The last partial is strictly positive.
struct PhiField {
    int n = 0;
    double K = 1.0;
    JacobianField jf;

    double value(const Vec& x) const;
    Vec gradient(const Vec& x) const;
};

PhiField build_phi(const JacobianField& jf, double K);

// Signed time for the plane flow
//   d x_{n-1}/dt = d phi/d x_n,   d x_n/dt = -d phi/d x_{n-1}
// (coordinates x_1..x_{n-2} frozen) to carry x to the section x_{n-1} = 0.
// Negative when the section lies in the past of x.
double compute_tau(const PhiField& phi, const Vec& x, const OdeOptions& opts = {});

// The volume-preserving map
//   (x_1, ..., x_n) -> (x_1, ..., x_{n-2}, -tau(x), phi(x))   for x_n > 0,
// extended by (x_{n-1}, x_n) -> (x_{n-1}/K, K x_n) for x_n <= 0; the two
// branches agree wherever J = 1 below the working region. The inverse
// root-finds the section height with phi = given value, then flows back.
NumericFactor phi1_map(const PhiField& phi, const OdeOptions& opts = {});

// F_ext = x + chi(||x||)(F(x) - x) with a quintic cutoff chi equal to 1 for
// ||x|| <= r_inner and 0 for ||x|| >= r_outer. Sampled injectivity check;
// throws if two sample images collide within 1e-9.
SmoothMap blend_to_identity(const SmoothMap& F, double r_inner = 1.0,
                            double r_outer = 2.0);

struct DecompositionRow {
    Vec point;
    double residual = 0.0;
    double det_defect = 0.0;
};

struct SpecialDecomposition {
    int n = 0;
    double K = 0.0;
    Psi1Factor psi1;
    Psi2Factor psi2;
    NumericFactor phi1;
    NumericFactor phi2;
    double residual = 0.0;    // max grid distance of the composition from F
    double det_defect = 0.0;  // max | det D(Psi2 Phi1 Psi1) - J |
    std::vector<DecompositionRow> rows;

    MapComposition composition() const;  // [phi2, psi2, phi1, psi1]
};

struct DecomposeOptions {
    double safety = 1.1;
    double K_floor = 0.1;
    double K_override = 0.0;  // > 0 forces this K
    double fd_step = 1e-4;    // for the det-defect sweep
    double ode_tol = 1e-10;
    bool record_rows = true;
};

SpecialDecomposition special_decompose(const SmoothMap& F, const SampleGrid& grid,
                                       const DecomposeOptions& opts = {});

// CSV rows "x_1,...,x_n,residual,det_defect".
void write_decomposition_report(const SpecialDecomposition& dec, std::ostream& out);

}  // namespace mapkit
