#pragma once

// 1-D adaptive quadrature: Gauss-Kronrod 7-15 for production use, adaptive
// Simpson as an independent cross-check.

#include <functional>

namespace mapkit {

double integrate_gk(const std::function<double(double)>& f, double a, double b,
                    double tol = 1e-10, int max_depth = 40);

// Globally adaptive variant: repeatedly bisects the subinterval with the
// largest error estimate until the summed estimate meets
// max(epsabs, epsrel * |integral|) or the segment budget is exhausted
// (throws). Prefer this for sharply peaked integrands, where the
// tolerance-splitting recursion of integrate_gk over-refines.
double integrate_gk_global(const std::function<double(double)>& f, double a, double b,
                           double epsabs = 1e-12, double epsrel = 1e-12, int limit = 4000);

double integrate_simpson(const std::function<double(double)>& f, double a, double b,
                         double tol = 1e-12, int max_depth = 48);

}  // namespace mapkit
