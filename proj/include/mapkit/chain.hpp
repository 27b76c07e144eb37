#pragma once

// Baseline decomposition of a diffeomorphism into N near-identity maps along
// the linear diffeotopy F_t(x) = (1-t)x + tF(x):
//   F = F_N * ... * F_1,   F_s = F_{s/N} o F_{(s-1)/N}^{-1}.

#include <stdexcept>
#include <vector>

#include "mapkit/smooth_map.hpp"

namespace mapkit {

struct ChainValidationError : std::runtime_error {
    double t;
    Vec point;
    ChainValidationError(double t_, const Vec& point_);
};

// The diffeotopy is validated on the grid (det DF_t > 0 at t = 0, 1/N, ..., 1)
// before any factors are built. Returned maps are listed in application
// order: chain[0] applied first.
std::vector<SmoothMap> ruelle_takens_chain(const SmoothMap& F, int N,
                                           const SampleGrid& grid);

}  // namespace mapkit
