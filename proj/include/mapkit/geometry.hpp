#pragma once
// Basic vector helpers and sample grids on balls.

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace mapkit {

using Vec = std::vector<double>;
using Pt = std::array<double, 2>;

double norm2(const Vec& v);
double norm_inf(const Vec& v);
double dist2(const Vec& a, const Vec& b);
double dist_inf(const Vec& a, const Vec& b);
Vec vsub(const Vec& a, const Vec& b);
Vec vadd(const Vec& a, const Vec& b);
Vec vscale(const Vec& a, double c);

// A fixed list of sample points inside a ball of given radius.  Grids are
// immutable after construction and safe to share across threads.
struct SampleGrid {
    int dim = 0;
    std::vector<int> resolution;  // per-axis counts (empty for random grids)
    double radius = 1.0;
    std::vector<Vec> points;

    std::size_t size() const { return points.size(); }

    // Tensor grid on [-radius, radius]^dim, keeping points with |x| <= radius.
    static SampleGrid tensor(int dim, int per_axis, double radius = 1.0);
    // Uniform random points in the ball, reproducible from the seed.
    static SampleGrid random_ball(int dim, int count, double radius, std::uint64_t seed);

    bool all_inside(double tol = 1e-12) const;
};

// Deterministic partition of [0, count) into chunks, run fn(chunk_begin,
// chunk_end) over a small thread pool, results must be written to
// disjoint slots so the merge is order-independent.
void parallel_chunks(std::size_t count, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace mapkit
