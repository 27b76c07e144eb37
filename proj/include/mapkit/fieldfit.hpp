#pragma once

// Least-squares fit of an autonomous divergence-free polynomial field whose
// time-one flow approximates a given volume-preserving map. The linear part
// is seeded from the (trace-projected) matrix logarithm of the Jacobian at
// the origin when that logarithm is real; nonlinear structure is picked up
// by iterated corrections fitted at the flow images. Residuals are reported,
// never hidden: the fit is only as good as the returned residual_c0.

#include <vector>

#include "mapkit/field.hpp"
#include "mapkit/geometry.hpp"
#include "mapkit/smooth_map.hpp"

namespace mapkit {

struct FieldFitOptions {
    int max_iter = 25;      // correction steps converge linearly; cheap ones exit early
    double ode_tol = 1e-10;
    double target = 1e-11;  // stop early below this C0 residual
};

struct FieldFitResult {
    NonAutonomousField field;  // autonomous: the time slot is unused
    double residual_c0 = 0.0;  // max |Phi(x) - flow_1(x)| over the fit points
    int iterations = 0;
};

// Fit over the given point cloud, with stream functions of total degree up to
// degree + 1 (so field components have degree <= degree).
FieldFitResult fit_generating_field(const SmoothMap& Phi, int degree,
                                    const std::vector<Vec>& points,
                                    const FieldFitOptions& opts = {});

// Time-one flow of an autonomous field (helper shared with the fit loop).
Vec flow_time_one(const NonAutonomousField& X, const Vec& x0, double ode_tol = 1e-10);

}  // namespace mapkit
