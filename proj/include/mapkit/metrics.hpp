#pragma once

// Grid-sampled C0/C1 surrogates for map distances, plus the volume defect
// max |det D - 1| used by every conservation check.

#include "mapkit/geometry.hpp"
#include "mapkit/smooth_map.hpp"

namespace mapkit {

struct C0C1Distance {
    double e0 = 0.0;  // max Euclidean distance of images over the grid
    double e1 = 0.0;  // max abs entry difference of FD Jacobians
};

// Both Jacobians are taken by central differences with the given step so the
// comparison is symmetric even when only one side has an analytic Jacobian.
C0C1Distance c0_c1_distance(const SmoothMap& A, const SmoothMap& B,
                            const SampleGrid& grid, double fd_step = 1e-5);

double volume_defect(const SmoothMap& A, const SampleGrid& grid,
                     double fd_step = 1e-5);

}  // namespace mapkit
