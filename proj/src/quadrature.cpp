#include "mapkit/quadrature.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mapkit {

namespace {

// Gauss-Kronrod 7-15 nodes/weights on [-1, 1] (positive half; symmetric).
constexpr std::array<double, 8> kx = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr std::array<double, 8> kw = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr std::array<double, 4> gw = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct GkEval {
    double kronrod, gauss;
    double resabs, resasc;  // integrals of |f| and |f - mean|, for error scaling
};

GkEval gk15(const std::function<double(double)>& f, double a, double b) {
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    std::array<double, 8> fp{}, fm{};
    double fk = 0, fg = 0, fabs = 0;
    for (int i = 0; i < 8; ++i) {
        fp[i] = f(c + h * kx[i]);
        fm[i] = (i == 7) ? fp[i] : f(c - h * kx[i]);
        double s = (i == 7) ? fp[i] : fp[i] + fm[i];
        fk += kw[i] * s;
        fabs += kw[i] * ((i == 7) ? std::abs(fp[i]) : std::abs(fp[i]) + std::abs(fm[i]));
        if (i % 2 == 1) fg += gw[i / 2] * s;  // odd Kronrod indices are Gauss nodes
    }
    const double mean = 0.5 * fk;
    double fasc = 0;
    for (int i = 0; i < 8; ++i)
        fasc += kw[i] * ((i == 7) ? std::abs(fp[i] - mean)
                                  : std::abs(fp[i] - mean) + std::abs(fm[i] - mean));
    const double ah = std::abs(h);
    return {fk * h, fg * h, fabs * ah, fasc * ah};
}

double gk_adapt(const std::function<double(double)>& f, double a, double b, double tol,
                int depth, int max_depth) {
    GkEval e = gk15(f, a, b);
    double err = std::abs(e.kronrod - e.gauss);
    if (err <= tol || depth >= max_depth) {
        if (depth >= max_depth && err > 100 * tol)
            throw std::runtime_error("integrate_gk: refinement limit hit");
        return e.kronrod;
    }
    double c = 0.5 * (a + b);
    return gk_adapt(f, a, c, 0.5 * tol, depth + 1, max_depth) +
           gk_adapt(f, c, b, 0.5 * tol, depth + 1, max_depth);
}

double simpson_adapt(const std::function<double(double)>& f, double a, double b,
                     double fa, double fm, double fb, double whole, double tol,
                     int depth, int max_depth) {
    double c = 0.5 * (a + b);
    double fl = f(0.5 * (a + c)), fr = f(0.5 * (c + b));
    double left = (c - a) / 6 * (fa + 4 * fl + fm);
    double right = (b - c) / 6 * (fm + 4 * fr + fb);
    double err = left + right - whole;
    if (std::abs(err) <= 15 * tol || depth >= max_depth)
        return left + right + err / 15;
    return simpson_adapt(f, a, c, fa, fl, fm, left, 0.5 * tol, depth + 1, max_depth) +
           simpson_adapt(f, c, b, fm, fr, fb, right, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace

double integrate_gk(const std::function<double(double)>& f, double a, double b,
                    double tol, int max_depth) {
    if (a == b) return 0.0;
    return gk_adapt(f, a, b, tol, 0, max_depth);
}

double integrate_simpson(const std::function<double(double)>& f, double a, double b,
                         double tol, int max_depth) {
    if (a == b) return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    return simpson_adapt(f, a, b, fa, fm, fb, whole, tol, 0, max_depth);
}

double integrate_gk_global(const std::function<double(double)>& f, double a, double b,
                           double epsabs, double epsrel, int limit) {
    if (a == b) return 0.0;
    struct Segment {
        double a, b, val, err;
    };
    auto make = [&f](double lo, double hi) {
        GkEval e = gk15(f, lo, hi);
        // Scale the raw Kronrod-Gauss difference down once the segment is
        // converged, and floor it at the roundoff level of the |f| integral;
        // otherwise the summed estimate stalls above the roundoff plateau on
        // sharply peaked integrands.
        double err = std::abs(e.kronrod - e.gauss);
        if (e.resasc != 0.0 && err != 0.0)
            err = e.resasc * std::min(1.0, std::pow(200.0 * err / e.resasc, 1.5));
        err = std::max(err, 50.0 * std::numeric_limits<double>::epsilon() * e.resabs);
        return Segment{lo, hi, e.kronrod, err};
    };
    std::vector<Segment> segs = {make(a, b)};
    segs.reserve(static_cast<size_t>(limit));
    for (;;) {
        double total = 0.0, err = 0.0;
        size_t worst = 0;
        for (size_t i = 0; i < segs.size(); ++i) {
            total += segs[i].val;
            err += segs[i].err;
            if (segs[i].err > segs[worst].err) worst = i;
        }
        if (err <= std::max(epsabs, epsrel * std::abs(total))) return total;
        if (static_cast<int>(segs.size()) >= limit)
            throw std::runtime_error("integrate_gk_global: segment budget exhausted");
        const Segment s = segs[worst];
        const double mid = 0.5 * (s.a + s.b);
        segs[worst] = make(s.a, mid);
        segs.push_back(make(mid, s.b));
    }
}

}  // namespace mapkit
