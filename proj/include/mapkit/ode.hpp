#pragma once

// Adaptive Dormand-Prince 5(4) integrator for the small autonomous systems
// used throughout: flow fields, transit-time computations, section crossings.

#include <functional>
#include <optional>

#include "mapkit/geometry.hpp"

namespace mapkit {

using OdeField = std::function<void(double t, const Vec& x, Vec& dx)>;

struct OdeOptions {
    double tol = 1e-10;         // absolute + relative local error target
    double h_init = 1e-2;
    double h_min = 1e-14;
    double h_max = 1.0;
    std::size_t max_steps = 2'000'000;
};

// Integrate from (t0, x0) to t1 (t1 may be < t0). Returns x(t1).
Vec ode_solve(const OdeField& f, double t0, const Vec& x0, double t1,
              const OdeOptions& opts = {});

struct CrossingResult {
    double t = 0.0;   // event time
    Vec x;            // state at the event
};

// Integrate forward from (0, x0) until event(x) crosses zero in direction
// `dir` (+1: negative to positive, -1: positive to negative, 0: either).
// The crossing is located to ~1e-12 in time by bisecting the bracketing step
// and re-integrating from the step start. Throws if no crossing occurs
// within `t_budget`.
CrossingResult ode_solve_until(const OdeField& f, const Vec& x0,
                               const std::function<double(const Vec&)>& event,
                               int dir = 0, double t_budget = 1e3,
                               const OdeOptions& opts = {});

}  // namespace mapkit
