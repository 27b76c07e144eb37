#pragma once

// Normal form of a planar map near a unipotent fixed point, and the flow
// that interpolates it. The pipeline has four stages:
//
//  1. normal_form_reduce: pass to coordinates (u, z) with ubar = u + z and
//     eliminate every u^i z^j monomial with j >= 2 from the z-component by a
//     polynomial change of variables, one total degree at a time. With
//     rational coefficients the elimination is residual-free.
//  2. flow_time1 / flow_interpolate: the field du/dt = v, dv/dt = psi0(u) +
//     v psi1(u) has a time-1 map whose series is computable term by term;
//     interpolation solves for psi0, psi1 so that this series matches a
//     given map (after reduction, the match is two coefficients per degree,
//     which pins the two free psi coefficients of that degree).
//  3. conservative_tune: moves the free parameters of a return-map family
//     until psi0 == s psi1 coefficientwise, which turns the field into
//     dv/dt = -Psi(u)(1+v) after u -> su, v -> sv. That field preserves
//     H(u, v) = int Psi du + v - ln(1+v) exactly.
//  4. elliptic_check: numerical confirmation that the tuned field has a
//     center at the origin: H drift along time-1 steps and the multipliers
//     of the linearization.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include "mapkit/series.hpp"

namespace mapkit {

namespace detail {

template <class C>
double sup_abs(const TruncatedSeries<C>& s) {
    double m = 0.0;
    for (const C& c : s.coef) m = std::max(m, std::abs(coef_to_double(c)));
    return m;
}

template <class C>
double sup_abs(const SeriesMap2<C>& m) {
    return std::max(sup_abs(m.u), sup_abs(m.v));
}

struct Mat2 {
    double a = 0, b = 0, c = 0, d = 0;  // rows (a b; c d)
};

inline Mat2 operator*(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c,
            x.c * y.b + x.d * y.d};
}

inline Mat2 inverse(const Mat2& m) {
    const double det = m.a * m.d - m.b * m.c;
    if (std::abs(det) < 1e-12)
        throw std::runtime_error("normal form: singular 2x2 frame while matching linear parts");
    return {m.d / det, -m.b / det, -m.c / det, m.a / det};
}

inline Mat2 exponential(const Mat2& m) {
    Mat2 sum{1, 0, 0, 1}, term{1, 0, 0, 1};
    for (int k = 1; k <= 80; ++k) {
        term = term * m;
        term = {term.a / k, term.b / k, term.c / k, term.d / k};
        sum = {sum.a + term.a, sum.b + term.b, sum.c + term.c, sum.d + term.d};
        if (std::abs(term.a) + std::abs(term.b) + std::abs(term.c) + std::abs(term.d) < 1e-22)
            break;
    }
    return sum;
}

}  // namespace detail

template <class C>
SeriesMap2<C> identity_map2(int cap) {
    return {TruncatedSeries<C>::variable(cap, 0), TruncatedSeries<C>::variable(cap, 1)};
}

template <class C>
SeriesMap2<C> linear_map2(int cap, const C& a, const C& b, const C& c, const C& d) {
    SeriesMap2<C> m{TruncatedSeries<C>(cap), TruncatedSeries<C>(cap)};
    m.u.set(1, 0, a);
    m.u.set(0, 1, b);
    m.v.set(1, 0, c);
    m.v.set(0, 1, d);
    return m;
}

// Inverse through the cap of a map whose linear part is the identity:
// iterate g <- id - (w - id) o g, one exact degree per sweep.
template <class C>
SeriesMap2<C> invert_near_identity(const SeriesMap2<C>& w) {
    const int cap = w.u.cap;
    const SeriesMap2<C> id = identity_map2<C>(cap);
    const SeriesMap2<C> rest{w.u - id.u, w.v - id.v};
    SeriesMap2<C> g = id;
    for (int n = 1; n < cap; ++n) {
        const SeriesMap2<C> r = rest.after(g);
        g = {id.u - r.u, id.v - r.v};
    }
    return g;
}

// w o t o w^{-1}, with the inverse supplied by the caller.
template <class C>
SeriesMap2<C> conjugate_map(const SeriesMap2<C>& t, const SeriesMap2<C>& w,
                            const SeriesMap2<C>& w_inv) {
    return w.after(t.after(w_inv));
}

// Dense linear solve with first-acceptable pivoting; exact for rational C.
template <class C>
std::vector<C> solve_linear(std::vector<std::vector<C>> a, std::vector<C> b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        double best = 0.0;
        for (int r = col; r < n; ++r) {
            if (a[r][col] == C(0)) continue;
            const double mag = std::abs(detail::coef_to_double(a[r][col]));
            if (piv < 0 || mag > best) {
                piv = r;
                best = mag;
            }
        }
        if (piv < 0) throw std::runtime_error("linear solve: singular system");
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (int r = 0; r < n; ++r) {
            if (r == col || a[r][col] == C(0)) continue;
            const C f = a[r][col] / a[col][col];
            for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<C> x(b.size());
    for (int i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
    return x;
}

template <class C>
struct NormalFormResult {
    SeriesMap2<C> reduced;        // first component u + z; second component
                                  // keeps only the linear part, u^i and
                                  // u^(i-1) z monomials
    SeriesMap2<C> transform;      // (u, v) -> (U, Z), all steps composed
    SeriesMap2<C> transform_inv;  // inverse of the transform through the cap
    C eps1{0}, eps2{0};           // z-component linear part: eps2 u + (1+eps1) z
};

// Brings a map with first row u + v + (nonlinear) and second row close to v
// into the reduced form above. The change of variables is found degree by
// degree: at total degree n the candidate generators u^(n-l) z^l,
// l = 0..n-2, act linearly on the targeted coefficients, so one exact linear
// solve per degree kills them all.
template <class C>
NormalFormResult<C> normal_form_reduce(const SeriesMap2<C>& map_in, int order) {
    constexpr bool exact = !std::is_floating_point_v<C>;
    if (order < 2) throw std::invalid_argument("normal form: order must be at least 2");
    const SeriesMap2<C> map = truncated_to(map_in, order);
    if (map.u.get(0, 0) != C(0) || map.v.get(0, 0) != C(0))
        throw std::invalid_argument("normal form: the map must fix the origin");

    const auto uvar = TruncatedSeries<C>::variable(order, 0);
    const auto zvar = TruncatedSeries<C>::variable(order, 1);

    // First row must be u + v: exactly so for exact coefficients, to roundoff
    // otherwise (the small residue is carried through the v-inversion below).
    {
        const double du = detail::coef_to_double(map.u.get(1, 0)) - 1.0;
        const double dv = detail::coef_to_double(map.u.get(0, 1)) - 1.0;
        if ((exact && (map.u.get(1, 0) != C(1) || map.u.get(0, 1) != C(1))) ||
            std::abs(du) > 1e-9 || std::abs(dv) > 1e-9)
            throw std::invalid_argument(
                "normal form: the first row must be u + v + higher-order terms");
    }

    // z := ubar - u. Solve z_of(u, v) = z for v to change variables to (u, z).
    const TruncatedSeries<C> z_of = map.u - uvar;
    const C cu = z_of.get(1, 0), cv = z_of.get(0, 1);
    TruncatedSeries<C> z_nl = z_of;
    z_nl.set(1, 0, C(0));
    z_nl.set(0, 1, C(0));
    TruncatedSeries<C> v_of = (zvar - uvar.scaled(cu)).scaled(C(1) / cv);
    for (int n = 1; n < order; ++n)
        v_of = (zvar - uvar.scaled(cu) - z_nl.compose(uvar, v_of)).scaled(C(1) / cv);

    SeriesMap2<C> t;
    t.u = map.u.compose(uvar, v_of);
    t.v = z_of.compose(map.u, map.v).compose(uvar, v_of);

    // ubar = u + z holds identically by the definition of z; enforce it on
    // the stored series so later coefficient reads are clean.
    const auto resnap_first_row = [&](SeriesMap2<C>& s) {
        TruncatedSeries<C> diff = s.u - uvar - zvar;
        if (exact && !diff.is_zero())
            throw std::logic_error("normal form: the u + z structure was lost");
        if (detail::sup_abs(diff) > 1e-9)
            throw std::logic_error("normal form: the u + z structure was lost");
        s.u = uvar + zvar;
    };
    resnap_first_row(t);

    NormalFormResult<C> out;
    out.eps2 = t.v.get(1, 0);
    out.eps1 = t.v.get(0, 1) - C(1);
    if (std::abs(detail::coef_to_double(out.eps1)) >= 0.1 ||
        std::abs(detail::coef_to_double(out.eps2)) >= 0.1)
        throw std::invalid_argument("normal form: linear part too far from unipotent (|eps| >= 0.1)");

    SeriesMap2<C> w_total{uvar, z_of};  // (u, v) -> (u, z)

    for (int n = 2; n <= order; ++n) {
        std::vector<C> rhs;
        bool all_zero = true;
        for (int j = 2; j <= n; ++j) {
            const C c = t.v.get(n - j, j);
            if (c != C(0)) all_zero = false;
            rhs.push_back(-c);
        }
        if (all_zero) continue;

        // Generator sum_l A_l u^(n-l) z^l; the z-image is pushed through the
        // current map so the u + z structure survives the change exactly.
        const auto make_change = [&](const std::vector<C>& coefs) {
            TruncatedSeries<C> p(order);
            for (int l = 0; l <= n - 2; ++l)
                if (coefs[static_cast<std::size_t>(l)] != C(0))
                    p.set(n - l, l, coefs[static_cast<std::size_t>(l)]);
            SeriesMap2<C> w;
            w.u = uvar + p;
            w.v = zvar + p.compose(t.u, t.v) - p;
            return w;
        };

        // The action on degree-n coefficients is exactly linear in A, so unit
        // probes assemble the full elimination system.
        std::vector<std::vector<C>> sys(rhs.size(), std::vector<C>(rhs.size(), C(0)));
        for (int l = 0; l <= n - 2; ++l) {
            std::vector<C> unit(static_cast<std::size_t>(n - 1), C(0));
            unit[static_cast<std::size_t>(l)] = C(1);
            const SeriesMap2<C> w = make_change(unit);
            const SeriesMap2<C> probe = conjugate_map(t, w, invert_near_identity(w));
            for (int j = 2; j <= n; ++j)
                sys[static_cast<std::size_t>(j - 2)][static_cast<std::size_t>(l)] =
                    probe.v.get(n - j, j) - t.v.get(n - j, j);
        }
        const std::vector<C> a = solve_linear(sys, rhs);
        const SeriesMap2<C> w = make_change(a);
        t = conjugate_map(t, w, invert_near_identity(w));
        resnap_first_row(t);
        if constexpr (exact) {
            for (int j = 2; j <= n; ++j)
                if (t.v.get(n - j, j) != C(0))
                    throw std::logic_error("normal form: elimination left a nonzero coefficient");
        }
        w_total = w.after(w_total);
    }

    out.reduced = t;
    out.transform = w_total;
    out.transform_inv = invert_near_identity(w_total);
    return out;
}

// Time-1 map of du/dt = v, dv/dt = psi0(u) + v psi1(u) through the cap, by
// the derivation series sum_k D^k(x)/k!. With a nilpotent linear part
// (psi0'(0) = 0, psi1(0) = 0) the sum terminates exactly, which is what the
// exact coefficient types require; otherwise the tail is summed until it
// drops below roundoff.
template <class C>
SeriesMap2<C> flow_time1(std::vector<C> psi0, std::vector<C> psi1, int cap) {
    constexpr bool exact = !std::is_floating_point_v<C>;
    psi0.resize(static_cast<std::size_t>(cap) + 1, C(0));
    psi1.resize(static_cast<std::size_t>(cap) + 1, C(0));
    if (psi0[0] != C(0))
        throw std::invalid_argument("flow: psi0 must vanish at the origin");

    TruncatedSeries<C> f1 = TruncatedSeries<C>::variable(cap, 1);
    TruncatedSeries<C> f2(cap);
    for (int i = 0; i <= cap; ++i) f2.set(i, 0, psi0[static_cast<std::size_t>(i)]);
    for (int i = 0; i + 1 <= cap; ++i) f2.set(i, 1, psi1[static_cast<std::size_t>(i)]);

    const auto lie = [&](const TruncatedSeries<C>& g) {
        return g.derivative(0) * f1 + g.derivative(1) * f2;
    };

    SeriesMap2<C> out = identity_map2<C>(cap);
    const int exact_bound = (cap + 2) * (cap + 2);
    for (int comp = 0; comp < 2; ++comp) {
        TruncatedSeries<C>& sum = comp == 0 ? out.u : out.v;
        TruncatedSeries<C> term = sum;
        double prev = 1e300;
        for (int k = 1;; ++k) {
            term = lie(term).scaled(C(1) / C(k));
            if (term.is_zero()) break;
            sum += term;
            if constexpr (exact) {
                if (k > exact_bound)
                    throw std::invalid_argument(
                        "flow: exact time-1 series needs a nilpotent linear part");
            } else {
                const double cur = detail::sup_abs(term);
                const double floor = 1e-22 * (1.0 + detail::sup_abs(sum));
                if (cur < floor && prev < floor) break;
                prev = cur;
                if (k > 250)
                    throw std::runtime_error("flow: time-1 series did not converge");
            }
        }
    }
    return out;
}

template <class C>
struct FlowFit {
    std::vector<C> psi0, psi1;  // coefficients by power of u; psi0[0] = 0
    SeriesMap2<C> time1;        // time-1 series of the fitted field
    C eps1{0}, eps2{0};         // linear data recovered from the input
    double residual = 0;        // sup coefficient mismatch of the final check
};

namespace detail {

// psi0'(0) and psi1(0) from the linear part: the time-1 matrix of the field
// linearization L = (0 1; a b) has eigenvalues exp of those of L, so
// b = ln det and a = -ln(nu+) ln(nu-) with nu the input eigenvalues.
inline std::pair<double, double> flow_linear_data(double tr, double det) {
    if (det <= 0.0)
        throw std::domain_error("flow: the linear part must have positive determinant");
    const std::complex<double> disc(tr * tr / 4.0 - det, 0.0);
    const std::complex<double> root = std::sqrt(disc);
    const std::complex<double> nup = tr / 2.0 + root, num = tr / 2.0 - root;
    const double a = -(std::log(nup) * std::log(num)).real();
    const double b = std::log(det);
    return {a, b};
}

}  // namespace detail

// Solves for the field coefficients so that the time-1 map of the flow
// matches `map_in` through `order`. Two regimes, detected from the first
// row of the linear part:
//  - u + v (the reduced normal-form setting): the match is between normal
//    forms, two coefficients per degree, after aligning the linear frames.
//  - anything else: the input must itself be a time-1 flow map; its raw
//    coefficients are matched and the full series equality is verified.
template <class C>
FlowFit<C> flow_interpolate(const SeriesMap2<C>& map_in, int order) {
    constexpr bool exact = !std::is_floating_point_v<C>;
    if (order < 1) throw std::invalid_argument("flow: order must be at least 1");
    const SeriesMap2<C> map = truncated_to(map_in, order);

    const double a11 = detail::coef_to_double(map.u.get(1, 0));
    const double a12 = detail::coef_to_double(map.u.get(0, 1));
    const double a21 = detail::coef_to_double(map.v.get(1, 0));
    const double a22 = detail::coef_to_double(map.v.get(0, 1));
    const bool reduced_setting = std::abs(a11 - 1.0) < 1e-12 && std::abs(a12 - 1.0) < 1e-12;

    FlowFit<C> fit;
    fit.psi0.assign(static_cast<std::size_t>(order) + 1, C(0));
    fit.psi1.assign(static_cast<std::size_t>(std::max(order, 1)), C(0));

    // Targets per degree and the frame conjugation, per regime.
    SeriesMap2<C> target;
    SeriesMap2<C> frame = identity_map2<C>(order), frame_inv = frame;
    bool use_frame = false;

    if (reduced_setting) {
        if (order >= 2) {
            const NormalFormResult<C> nf = normal_form_reduce(map, order);
            fit.eps1 = nf.eps1;
            fit.eps2 = nf.eps2;
            target = nf.reduced;
        } else {
            fit.eps2 = map.v.get(1, 0);
            fit.eps1 = map.v.get(0, 1) - C(1);
            target = map;
        }
        if constexpr (exact) {
            if (fit.eps1 != C(0) || fit.eps2 != C(0))
                throw std::invalid_argument(
                    "flow: exact interpolation needs a unipotent linear part");
        } else {
            const double e1 = detail::coef_to_double(fit.eps1);
            const double e2 = detail::coef_to_double(fit.eps2);
            const auto [a, b] = detail::flow_linear_data(2.0 + e1, 1.0 + e1 - e2);
            fit.psi0[1] = C(a);
            fit.psi1[0] = C(b);
            if (a != 0.0 || b != 0.0) {
                // The flow's time-1 linear part is exp(0 1; a b), similar to
                // the input frame (1 1; e2 1+e1) but not equal to it. Align
                // via the cyclic frames of the shared companion form.
                const detail::Mat2 expl =
                    detail::exponential({0.0, 1.0, a, b});
                const detail::Mat2 p1{0.0, expl.b, 1.0, expl.d};
                const detail::Mat2 p2{0.0, 1.0, 1.0, 1.0 + e1};
                const detail::Mat2 s = p2 * detail::inverse(p1);
                const detail::Mat2 si = detail::inverse(s);
                frame = linear_map2<C>(order, C(s.a), C(s.b), C(s.c), C(s.d));
                frame_inv = linear_map2<C>(order, C(si.a), C(si.b), C(si.c), C(si.d));
                use_frame = true;
            }
        }
    } else {
        if constexpr (exact) {
            throw std::invalid_argument(
                "flow: exact interpolation needs the reduced unipotent form");
        } else {
            const auto [a, b] = detail::flow_linear_data(a11 + a22, a11 * a22 - a12 * a21);
            fit.psi0[1] = C(a);
            fit.psi1[0] = C(b);
            const detail::Mat2 expl = detail::exponential({0.0, 1.0, a, b});
            const double err = std::abs(expl.a - a11) + std::abs(expl.b - a12) +
                               std::abs(expl.c - a21) + std::abs(expl.d - a22);
            if (err > 1e-8 * (1.0 + std::abs(a11) + std::abs(a22)))
                throw std::invalid_argument(
                    "flow: the linear part is not a time-1 matrix of this field family");
            target = map;
        }
    }

    // In the reduced setting compare normal forms; otherwise raw series.
    const auto observe = [&](const std::vector<C>& p0, const std::vector<C>& p1) {
        SeriesMap2<C> t1 = flow_time1(p0, p1, order);
        if (use_frame) t1 = conjugate_map(t1, frame, frame_inv);
        if (reduced_setting && order >= 2) return normal_form_reduce(t1, order).reduced;
        return t1;
    };

    for (int n = 2; n <= order; ++n) {
        const SeriesMap2<C> base = observe(fit.psi0, fit.psi1);
        const C r0 = target.v.get(n, 0) - base.v.get(n, 0);
        const C r1 = target.v.get(n - 1, 1) - base.v.get(n - 1, 1);

        std::vector<C> p0 = fit.psi0, p1 = fit.psi1;
        p0[static_cast<std::size_t>(n)] += C(1);
        const SeriesMap2<C> probe0 = observe(p0, fit.psi1);
        p1[static_cast<std::size_t>(n - 1)] += C(1);
        const SeriesMap2<C> probe1 = observe(fit.psi0, p1);

        const std::vector<C> sol = solve_linear<C>(
            {{probe0.v.get(n, 0) - base.v.get(n, 0), probe1.v.get(n, 0) - base.v.get(n, 0)},
             {probe0.v.get(n - 1, 1) - base.v.get(n - 1, 1),
              probe1.v.get(n - 1, 1) - base.v.get(n - 1, 1)}},
            {r0, r1});
        fit.psi0[static_cast<std::size_t>(n)] += sol[0];
        fit.psi1[static_cast<std::size_t>(n - 1)] += sol[1];
    }

    fit.time1 = flow_time1(fit.psi0, fit.psi1, order);
    const SeriesMap2<C> check = observe(fit.psi0, fit.psi1);
    const SeriesMap2<C> diff{check.u - target.u, check.v - target.v};
    fit.residual = detail::sup_abs(diff);
    if constexpr (exact) {
        if (!diff.u.is_zero() || !diff.v.is_zero())
            throw std::logic_error("flow: exact interpolation left a residual");
    } else {
        if (fit.residual > 1e-8 * (1.0 + detail::sup_abs(target)))
            throw std::invalid_argument(
                "flow: the map is not interpolated by this field family through the order");
    }
    return fit;
}

// Orientation of the conservative substitution u -> su, v -> sv: keep s = +1
// unless that would make Psi'(0) = -psi1'(0) negative.
inline int tuning_sign(double psi1_prime0) { return psi1_prime0 > 0.0 ? -1 : 1; }

// A return-map family in the rescaled window coordinates (X, Y) -> (Y, ...),
// parameterized by the coefficients being tuned.
using RetsFamily = std::function<SeriesMap2<double>(const std::vector<double>&)>;

struct TuneResult {
    std::vector<double> ehat;      // tuned parameter values, size m
    int s = 1;                     // orientation chosen by tuning_sign
    std::vector<double> psi0, psi1;
    std::vector<double> psi_cons;  // Psi(u) = -psi1(su)
    double residual = 0;           // sup |psi0 - s psi1| coefficientwise
    int iterations = 0;
    bool converged = false;
    FlowFit<double> fit;           // fit at the tuned parameter values
};

// Newton on ehat until the interpolating field of the family satisfies
// psi0 == s psi1 through degree m. The family map must fix the origin, have
// first component exactly Y, and unit linear determinant (so psi1(0) = 0).
TuneResult conservative_tune(const RetsFamily& family, int m, std::vector<double> seed = {});

struct EllipticOptions {
    double box = 0.1;       // half-width of the sample box
    int grid = 5;           // sample points per axis
    long iterates = 10000;  // length of the long orbit
    double step_tol = 1e-8;
    double long_tol = 1e-6;
    double modulus_tol = 1e-6;
    double ode_tol = 1e-12;
};

struct EllipticReport {
    double step_drift = 0;  // max |H(T p) - H(p)| over the sample box
    double long_drift = 0;  // max |H - H(start)| along the long orbit
    long iterates = 0;
    std::array<std::complex<double>, 2> multipliers{};
    double modulus_error = 0;  // max | |multiplier| - 1 |
    bool pass = false;
    std::vector<double> drift_curve;  // |H - H(start)| sampled along the orbit
};

// Integrates du/dt = v, dv/dt = -Psi(u)(1+v) and checks that
// H = int Psi du + v - ln(1+v) is conserved by the time-1 map, and that the
// multipliers at the origin stay on the unit circle. psi holds the
// coefficients of Psi by power of u; Psi(0) = 0 and Psi'(0) > 0 required.
EllipticReport elliptic_check(const std::vector<double>& psi, const EllipticOptions& opts = {});

// Two-parameter family in window coordinates used by the tests and tools:
// (X, Y) -> (Y, -X + (2 + E1) Y + E2 Y^2 + X^2/25 + Y^3/50).
SeriesMap2<double> conservative_test_family(const std::vector<double>& ehat, int cap);

}  // namespace mapkit
