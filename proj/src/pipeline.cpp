#include "mapkit/pipeline.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>

namespace mapkit {

namespace {

// Best affine approximation Ax + b of the sampled map, with its max
// deviation over the samples.
std::pair<AffineFactor, double> affine_fit(int n, const std::vector<Vec>& pts,
                                           const std::vector<Vec>& images) {
    const Eigen::Index rows = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd D(rows, n + 1);
    for (Eigen::Index p = 0; p < rows; ++p) {
        for (int j = 0; j < n; ++j) D(p, j) = pts[static_cast<size_t>(p)][static_cast<size_t>(j)];
        D(p, n) = 1.0;
    }
    Eigen::MatrixXd Y(rows, n);
    for (Eigen::Index p = 0; p < rows; ++p)
        for (int j = 0; j < n; ++j) Y(p, j) = images[static_cast<size_t>(p)][static_cast<size_t>(j)];
    const Eigen::MatrixXd C = D.colPivHouseholderQr().solve(Y);  // (n+1) x n

    AffineFactor aff;
    aff.A = C.topRows(n).transpose();
    aff.b = C.row(n).transpose();
    double dev = 0.0;
    for (Eigen::Index p = 0; p < rows; ++p) {
        const Eigen::VectorXd r = Y.row(p).transpose() - (aff.A * D.row(p).head(n).transpose() + aff.b);
        dev = std::max(dev, r.lpNorm<Eigen::Infinity>());
    }
    return {aff, dev};
}

SampleGrid cloud_grid(int n, const std::vector<Vec>& pts) {
    SampleGrid g;
    g.dim = n;
    g.points = pts;
    g.radius = 0.0;
    for (const Vec& p : pts) g.radius = std::max(g.radius, norm2(p));
    return g;
}

}  // namespace

PipelineResult approximate_pipeline(const SmoothMap& F, const SampleGrid& grid,
                                    const PipelineBudget& budget) {
    const int n = F.n;
    PipelineResult out;

    DecomposeOptions dopts;
    dopts.K_floor = budget.K_floor;
    dopts.record_rows = false;
    out.decomposition = special_decompose(F, grid, dopts);

    // Sample clouds seen by each stage in application order.
    std::vector<Vec> p1(grid.points.size());
    for (size_t i = 0; i < grid.points.size(); ++i)
        p1[i] = apply_factor(Psi1Factor{out.decomposition.K}, grid.points[i]);
    std::vector<Vec> p2(p1.size());
    for (size_t i = 0; i < p1.size(); ++i)
        p2[i] = apply_factor(Psi2Factor{}, out.decomposition.phi1.fwd->f(p1[i]));

    std::vector<PrimitiveFactor> applied;
    applied.emplace_back(Psi1Factor{out.decomposition.K});

    struct StageInput {
        const char* name;
        const SmoothMap* map;
        const std::vector<Vec>* pts;
    };
    const StageInput inputs[2] = {{"phi1", out.decomposition.phi1.fwd.get(), &p1},
                                  {"phi2", out.decomposition.phi2.fwd.get(), &p2}};

    for (int s = 0; s < 2; ++s) {
        const StageInput& in = inputs[s];
        PipelineStage stage;
        stage.name = in.name;
        std::vector<Vec> images(in.pts->size());
        for (size_t i = 0; i < in.pts->size(); ++i) images[i] = in.map->f((*in.pts)[i]);

        auto [aff, dev] = affine_fit(n, *in.pts, images);
        if (dev < budget.affine_tol) {
            stage.affine = true;
            stage.stage_error = dev;
            stage.factor_count = 1;
            stage.max_degree = 1;
            out.table.push_back({stage.name, 0, 1, 1, dev});
            applied.emplace_back(std::move(aff));
        } else {
            const int fit_degree = std::min(budget.fit_degree, budget.degree - 1);
            FieldFitResult fit = fit_generating_field(*in.map, fit_degree, *in.pts, budget.fit);
            stage.fit_residual = fit.residual_c0;

            const SampleGrid stage_grid = cloud_grid(n, *in.pts);
            std::vector<PrimitiveFactor> chosen;
            for (int N = std::max(1, budget.N / 4); N <= budget.N; N *= 2) {
                MapComposition comp = factorize(fit.field, N, stage_grid, 1e-12, nullptr);
                double err = 0.0;
                int max_deg = 0;
                for (const PrimitiveFactor& f : comp.factors)
                    max_deg = std::max(max_deg, std::get<HenonLikeMap>(f).degree());
                for (size_t i = 0; i < in.pts->size(); ++i)
                    err = std::max(err, dist2(comp.apply((*in.pts)[i]), images[i]));
                out.table.push_back({stage.name, N, static_cast<int>(comp.size()), max_deg, err});
                if (N == budget.N) {
                    stage.stage_error = err;
                    stage.factor_count = static_cast<int>(comp.size());
                    stage.max_degree = max_deg;
                    // Composition order to application order.
                    chosen.assign(comp.factors.rbegin(), comp.factors.rend());
                }
            }
            for (PrimitiveFactor& f : chosen) applied.emplace_back(std::move(f));
        }
        out.stages.push_back(std::move(stage));
        if (s == 0) applied.emplace_back(Psi2Factor{});
    }

    out.composition = MapComposition::from_application_order(n, std::move(applied));
    out.composition.provenance = "approximate_pipeline";
    out.composition.meta["K"] = std::to_string(out.decomposition.K);
    out.composition.meta["N"] = std::to_string(budget.N);

    for (const Vec& x : grid.points)
        out.residual_c0 = std::max(out.residual_c0, dist2(F.f(x), out.composition.apply(x)));
    return out;
}

}  // namespace mapkit
