#include "mapkit/geometry.hpp"

#include <cmath>
#include <thread>

namespace mapkit {

double norm2(const Vec& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double norm_inf(const Vec& v) {
    double s = 0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

double dist2(const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

double dist_inf(const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

Vec vsub(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

Vec vadd(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

Vec vscale(const Vec& a, double c) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * c;
    return r;
}

SampleGrid SampleGrid::tensor(int dim, int per_axis, double radius) {
    SampleGrid g;
    g.dim = dim;
    g.resolution.assign(dim, per_axis);
    g.radius = radius;
    std::vector<int> idx(dim, 0);
    Vec p(dim);
    while (true) {
        double r2 = 0;
        for (int i = 0; i < dim; ++i) {
            p[i] = (per_axis == 1) ? 0.0 : -radius + 2.0 * radius * idx[i] / (per_axis - 1);
            r2 += p[i] * p[i];
        }
        if (r2 <= radius * radius * (1 + 1e-12)) g.points.push_back(p);
        int axis = dim - 1;
        while (axis >= 0 && ++idx[axis] == per_axis) idx[axis--] = 0;
        if (axis < 0) break;
    }
    return g;
}

SampleGrid SampleGrid::random_ball(int dim, int count, double radius, std::uint64_t seed) {
    SampleGrid g;
    g.dim = dim;
    g.radius = radius;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-radius, radius);
    Vec p(dim);
    while ((int)g.points.size() < count) {
        double r2 = 0;
        for (int i = 0; i < dim; ++i) {
            p[i] = u(rng);
            r2 += p[i] * p[i];
        }
        if (r2 <= radius * radius) g.points.push_back(p);
    }
    return g;
}

bool SampleGrid::all_inside(double tol) const {
    for (const auto& p : points)
        if (norm2(p) > radius + tol) return false;
    return true;
}

void parallel_chunks(std::size_t count, const std::function<void(std::size_t, std::size_t)>& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    std::size_t nthreads = std::min<std::size_t>(hw ? hw : 1, 8);
    if (count < 64 || nthreads <= 1) {
        fn(0, count);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nthreads);
    std::size_t chunk = (count + nthreads - 1) / nthreads;
    for (std::size_t t = 0; t < nthreads; ++t) {
        std::size_t lo = t * chunk, hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, t, lo, hi]() {
            try {
                fn(lo, hi);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace mapkit
