#pragma once

// Factorization of the time-one flow of a divergence-free polynomial field
// into Hénon-like maps. The time interval is cut into N slabs; on each slab
// the field is frozen at the slab midpoint, split into planar pair fields,
// each pair's stream function is ridge-decomposed, and every ridge term's
// exact shear flow over the slab is rewritten as Hénon-like factors. The
// splitting error of the product against the true flow is O(1/N).

#include <vector>

#include "mapkit/factors.hpp"
#include "mapkit/field.hpp"
#include "mapkit/geometry.hpp"

namespace mapkit {

struct FactorizeReport {
    int N = 0;
    double error = 0.0;  // max distance to the reference flow over the grid
    int factor_count = 0;
    int max_degree = 0;
};

// Reference time-one flow of X from x0, integrated to tolerance ref_tol.
Vec flow_reference(const NonAutonomousField& X, const Vec& x0, double ref_tol = 1e-12);

// Product of Hénon-like factors approximating the time-one flow of X. When
// grid is nonempty the report's error field holds the max deviation from the
// reference flow over the grid points.
MapComposition factorize(const NonAutonomousField& X, int N, const SampleGrid& grid,
                         double ref_tol = 1e-12, FactorizeReport* report = nullptr);

}  // namespace mapkit
