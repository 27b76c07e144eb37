#pragma once

// Damped Newton solver for small dense systems F(x) = target, with a
// finite-difference Jacobian and simple backtracking line search.

#include <functional>
#include <optional>

#include "mapkit/geometry.hpp"

namespace mapkit {

struct NewtonOptions {
    double tol = 1e-12;       // residual inf-norm target
    int max_iter = 50;
    double fd_step = 1e-7;    // Jacobian finite-difference step
    int max_backtrack = 20;
};

// Returns the solution, or std::nullopt if the iteration stalls or the
// Jacobian degenerates. `f` maps R^n -> R^n.
std::optional<Vec> newton_solve(const std::function<Vec(const Vec&)>& f,
                                const Vec& target, const Vec& seed,
                                const NewtonOptions& opts = {});

}  // namespace mapkit
