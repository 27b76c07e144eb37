#include "mapkit/ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mapkit {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// embedded 4th order weights
constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                 e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

struct Stepper {
    const OdeField& f;
    int n;
    Vec k1, k2, k3, k4, k5, k6, k7, tmp;

    explicit Stepper(const OdeField& f_, int n_) : f(f_), n(n_) {
        for (Vec* v : {&k1, &k2, &k3, &k4, &k5, &k6, &k7, &tmp}) v->assign(n, 0.0);
    }

    // One trial step from (t, x) with size h; fills out and err_norm.
    void step(double t, const Vec& x, double h, Vec& out, double& err) {
        f(t, x, k1);
        for (int i = 0; i < n; ++i) tmp[i] = x[i] + h * a21 * k1[i];
        f(t + c2 * h, tmp, k2);
        for (int i = 0; i < n; ++i) tmp[i] = x[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f(t + c3 * h, tmp, k3);
        for (int i = 0; i < n; ++i)
            tmp[i] = x[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + c4 * h, tmp, k4);
        for (int i = 0; i < n; ++i)
            tmp[i] = x[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(t + c5 * h, tmp, k5);
        for (int i = 0; i < n; ++i)
            tmp[i] = x[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                 a65 * k5[i]);
        f(t + h, tmp, k6);
        out.resize(n);
        for (int i = 0; i < n; ++i)
            out[i] = x[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                                 b6 * k6[i]);
        f(t + h, out, k7);
        err = 0;
        for (int i = 0; i < n; ++i) {
            double e4th = x[i] + h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                      e6 * k6[i] + e7 * k7[i]);
            double sc = 1.0 + std::max(std::abs(x[i]), std::abs(out[i]));
            err = std::max(err, std::abs(out[i] - e4th) / sc);
        }
    }
};

// Advance with adaptive control, calling `on_step(t0, x0, t1, x1)` after each
// accepted step; the callback may shrink the remaining interval by returning
// a new target time (or NaN to keep going).
void integrate(const OdeField& f, double t0, Vec x, double t1, const OdeOptions& o,
               const std::function<bool(double, const Vec&, double, const Vec&)>& on_step,
               Vec* final_x) {
    const int n = (int)x.size();
    Stepper st(f, n);
    double dir = (t1 >= t0) ? 1.0 : -1.0;
    double t = t0;
    double h = std::min(o.h_init, o.h_max) * dir;
    Vec out;
    std::size_t steps = 0;
    while (dir * (t1 - t) > 0) {
        if (std::abs(h) > std::abs(t1 - t)) h = t1 - t;
        double err;
        st.step(t, x, h, out, err);
        if (err <= o.tol || std::abs(h) <= o.h_min * (1 + std::abs(t))) {
            double tn = t + h;
            if (on_step && !on_step(t, x, tn, out)) return;
            t = tn;
            x = out;
        }
        // PI-free classic controller with safety 0.9
        double fac = (err > 0) ? 0.9 * std::pow(o.tol / err, 0.2) : 5.0;
        fac = std::clamp(fac, 0.2, 5.0);
        h *= fac;
        if (std::abs(h) > o.h_max) h = o.h_max * dir;
        if (std::abs(h) < o.h_min) h = o.h_min * dir;
        if (++steps > o.max_steps)
            throw std::runtime_error("ode_solve: step budget exhausted");
    }
    if (final_x) *final_x = x;
}

}  // namespace

Vec ode_solve(const OdeField& f, double t0, const Vec& x0, double t1,
              const OdeOptions& opts) {
    if (t0 == t1) return x0;
    Vec out;
    integrate(f, t0, x0, t1, opts, nullptr, &out);
    return out;
}

CrossingResult ode_solve_until(const OdeField& f, const Vec& x0,
                               const std::function<double(const Vec&)>& event,
                               int dir, double t_budget, const OdeOptions& opts) {
    bool found = false;
    double bt0 = 0, bt1 = 0;
    Vec bx0;
    auto crosses = [&](double ga, double gb) {
        if (dir > 0) return ga < 0 && gb >= 0;
        if (dir < 0) return ga > 0 && gb <= 0;
        return (ga < 0 && gb >= 0) || (ga > 0 && gb <= 0);
    };
    integrate(f, 0.0, x0, t_budget, opts,
              [&](double ta, const Vec& xa, double tb, const Vec& xb) {
                  double ga = event(xa), gb = event(xb);
                  if (crosses(ga, gb)) {
                      found = true;
                      bt0 = ta;
                      bt1 = tb;
                      bx0 = xa;
                      return false;  // stop integration
                  }
                  return true;
              },
              nullptr);
    if (!found) throw std::runtime_error("ode_solve_until: no section crossing in budget");

    // Locate the event inside the bracketing step by Illinois iteration on
    // g(t). Probes integrate from the cached left endpoint, which tracks the
    // shrinking bracket, so each probe costs only a step or two.
    double lo = 0.0, hi = bt1 - bt0;
    Vec xlo = bx0;
    double glo = event(bx0);
    double ghi = event(ode_solve(f, 0.0, bx0, hi, opts));
    double side = 0;  // Illinois weighting state
    double t_tol = 1e-13 * (1 + std::abs(bt1));
    for (int it = 0; it < 200 && (hi - lo) > t_tol; ++it) {
        double mid;
        if (ghi != glo) {
            mid = lo + (hi - lo) * (-glo / (ghi - glo));
            double margin = 0.01 * (hi - lo);
            if (mid < lo + margin || mid > hi - margin) mid = 0.5 * (lo + hi);
        } else {
            mid = 0.5 * (lo + hi);
        }
        Vec xm = ode_solve(f, 0.0, xlo, mid - lo, opts);
        double gm = event(xm);
        bool cross_left = (glo < 0 && gm >= 0) || (glo > 0 && gm <= 0);
        if (dir > 0) cross_left = glo < 0 && gm >= 0;
        if (dir < 0) cross_left = glo > 0 && gm <= 0;
        if (cross_left) {
            hi = mid;
            ghi = gm;
            if (side == 1) glo *= 0.5;
            side = 1;
        } else {
            lo = mid;
            xlo = xm;
            glo = gm;
            if (side == -1) ghi *= 0.5;
            side = -1;
        }
    }
    CrossingResult r;
    r.t = bt0 + 0.5 * (lo + hi);
    r.x = ode_solve(f, 0.0, xlo, r.t - bt0 - lo, opts);
    return r;
}

}  // namespace mapkit
