#include "mapkit/factorize.hpp"

#include <algorithm>
#include <stdexcept>

#include "mapkit/ode.hpp"
#include "mapkit/ridge.hpp"
#include "mapkit/shear.hpp"

namespace mapkit {

Vec flow_reference(const NonAutonomousField& X, const Vec& x0, double ref_tol) {
    OdeOptions opts;
    opts.tol = ref_tol;
    OdeField f = [&X](double t, const Vec& x, Vec& dx) { X.eval(t, x, dx); };
    return ode_solve(f, 0.0, x0, 1.0, opts);
}

MapComposition factorize(const NonAutonomousField& X, int N, const SampleGrid& grid,
                         double ref_tol, FactorizeReport* report) {
    const int n = X.n;
    if (n < 2) throw std::invalid_argument("factorize: need n >= 2");

    const std::vector<PairField> pairs = split_field(X);
    std::vector<Poly> streams;
    streams.reserve(pairs.size());
    for (const PairField& pf : pairs) streams.push_back(pf.stream());

    // After freezing time the t slot is unused; drop it so the shears live in
    // the n spatial variables.
    std::vector<int> drop_t(static_cast<size_t>(n + 1), 0);
    for (int j = 0; j < n; ++j) drop_t[static_cast<size_t>(j)] = j;

    std::vector<PrimitiveFactor> applied;
    int max_degree = 0;
    for (const auto& [t0, t1] : fragment(N)) {
        const double tau = t1 - t0;
        const double tm = 0.5 * (t0 + t1);
        for (size_t p = 0; p < pairs.size(); ++p) {
            const Poly psi = streams[p].set_var(n, tm).remap(n, drop_t);
            const int ix = pairs[p].i - 1;
            RidgeDecomposition dec = ridge_decompose(psi, ix, ix + 1);
            for (const RidgeTerm& term : dec.terms) {
                if (term.k == 0) continue;  // constant Hamiltonian part, no motion
                ShearMap S = ShearMap::from_ridge(n, ix, term, tau);
                for (HenonLikeMap& hm : shear_to_henon(S)) {
                    max_degree = std::max(max_degree, hm.degree());
                    applied.emplace_back(std::move(hm));
                }
            }
        }
    }

    MapComposition comp = MapComposition::from_application_order(n, std::move(applied));
    comp.provenance = "factorize";
    comp.meta["N"] = std::to_string(N);

    if (report) {
        report->N = N;
        report->factor_count = static_cast<int>(comp.size());
        report->max_degree = max_degree;
        report->error = 0.0;
        std::vector<double> errs(grid.points.size(), 0.0);
        parallel_chunks(grid.points.size(), [&](size_t a, size_t b) {
            for (size_t idx = a; idx < b; ++idx) {
                const Vec& x0 = grid.points[idx];
                const Vec ref = flow_reference(X, x0, ref_tol);
                errs[idx] = dist2(comp.apply(x0), ref);
            }
        });
        for (double e : errs) report->error = std::max(report->error, e);
    }
    return comp;
}

}  // namespace mapkit
