#pragma once

// End-to-end approximation of an orientation-preserving diffeomorphism by an
// explicit composition
//   F  ~  [Henon factors of Phi2] * Psi2 * [Henon factors of Phi1] * Psi1.
// The two volume-preserving stages from the special decomposition are either
// recognized as affine (and emitted exactly) or fitted with a divergence-free
// polynomial field whose flow is then factorized into Hénon-like maps. All
// stage residuals and a slab-count convergence table are reported.

#include <string>
#include <vector>

#include "mapkit/factorize.hpp"
#include "mapkit/fieldfit.hpp"
#include "mapkit/voldecomp.hpp"

namespace mapkit {

struct PipelineBudget {
    int N = 32;          // time slabs per factorized stage
    int degree = 6;      // cap on emitted factor degree
    int fit_degree = 3;  // degree of fitted generating fields
    // Stages within this distance of an affine map are emitted as a single
    // exact affine factor. The threshold absorbs Jacobian-sampling noise in
    // the decomposition; misclassification costs at most this much error,
    // and the final residual is always measured directly.
    double affine_tol = 1e-7;
    double K_floor = 1.0;  // conditioning floor for the special decomposition
    FieldFitOptions fit;
};

struct PipelineStage {
    std::string name;  // "phi1" or "phi2"
    bool affine = false;
    double fit_residual = 0.0;   // field fit C0 residual (0 for affine stages)
    double stage_error = 0.0;    // max |stage map - emitted factors| on its points
    int factor_count = 0;
    int max_degree = 0;
};

// Convergence table row: the emitted product for this slab count against the
// true stage map over the stage's sample points (affine stages get N = 0).
struct PipelineRow {
    std::string stage;
    int N = 0;
    int factor_count = 0;
    int max_degree = 0;
    double error = 0.0;
};

struct PipelineResult {
    MapComposition composition;
    double residual_c0 = 0.0;  // max |F - composition| over the input grid
    SpecialDecomposition decomposition;
    std::vector<PipelineStage> stages;
    std::vector<PipelineRow> table;
};

PipelineResult approximate_pipeline(const SmoothMap& F, const SampleGrid& grid,
                                    const PipelineBudget& budget = {});

}  // namespace mapkit
