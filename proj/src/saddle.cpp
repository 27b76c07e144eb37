#include "mapkit/saddle.hpp"

#include <cmath>
#include <utility>

#include "mapkit/newton.hpp"

namespace mapkit {

Rational rational_pow(const Rational& base, long e) {
    if (e < 0) {
        if (base == 0) throw std::domain_error("rational_pow: zero base with negative exponent");
        return 1 / rational_pow(base, -e);
    }
    Rational acc(1), sq(base);
    for (long n = e; n > 0; n >>= 1) {
        if (n & 1) acc *= sq;
        sq *= sq;
    }
    return acc;
}

void SaddleModel::validate() const {
    if (abs(lam1) >= 1 || abs(lam2) >= 1 || abs(gam1) <= 1 || abs(gam2) <= 1)
        throw std::invalid_argument("saddle: need |lam| < 1 < |gam| at both saddles");
    if (J1() >= 1 || J2() <= 1)
        throw std::invalid_argument("saddle: need saddle values J1 < 1 < J2");
    const double ll1 = std::log(std::abs(lam1.convert_to<double>()));
    const double ll2 = std::log(std::abs(lam2.convert_to<double>()));
    const double lg1 = std::log(std::abs(gam1.convert_to<double>()));
    const double lg2 = std::log(std::abs(gam2.convert_to<double>()));
    if (!(lg1 * lg2 < ll1 * ll2))
        throw std::invalid_argument("saddle: multiplier log condition ln|gam1| ln|gam2| < ln|lam1| ln|lam2| fails");
}

void TransitionMaps::validate() const {
    if (d1 == 0 || d2 == 0) throw std::invalid_argument("transitions: d1 and d2 must be nonzero");
    if (D() <= 0) throw std::invalid_argument("transitions: determinant a1 d1 - b1 c1 must be positive");
    if (b2 * c2 >= 0) throw std::invalid_argument("transitions: need b2 c2 < 0");
    if (m < 1) throw std::invalid_argument("transitions: tangency order m must be at least 1");
    if (static_cast<int>(mu.size()) != m)
        throw std::invalid_argument("transitions: need one unfolding parameter per order below m");
}

int RescaledParams::k1() const {
    const Rational k1r = theta0 * k2;
    if (boost::multiprecision::denominator(k1r) != 1)
        throw std::invalid_argument("rescaling: theta0 * k2 must be an integer");
    const long v = boost::multiprecision::numerator(k1r).convert_to<long>();
    if (v <= 0 || v % 2 != 0)
        throw std::invalid_argument("rescaling: k1 = theta0 * k2 must be a positive even integer");
    return static_cast<int>(v);
}

ReturnAnchors compute_anchors(const SaddleModel& s, const TransitionMaps& t, int k1, int k2) {
    s.validate();
    t.validate();
    if (k1 <= 0 || k2 <= 0) throw std::invalid_argument("return map: k1 and k2 must be positive");
    if (k1 % t.m != 0 || k2 % t.m != 0)
        throw std::invalid_argument("return map: k1 and k2 must be multiples of the tangency order");

    ReturnAnchors a;
    a.k1 = k1;
    a.k2 = k2;
    a.L1 = rational_pow(s.lam1, k1);
    a.G1 = rational_pow(s.gam1, k1);
    a.L2 = rational_pow(s.lam2, k2);
    a.G2 = rational_pow(s.gam2, k2);
    a.sig = rational_pow(s.gam1, -(k1 / t.m)) * rational_pow(s.gam2, -(k2 / t.m));
    a.Sx = t.b2 * t.d1 * a.sig;
    a.Sy = rational_pow(s.gam1, -(k1 / t.m)) * rational_pow(s.gam2, -(k2 + k2 / t.m));
    // The strip shear kills the lam1^k1-level dependence of y2 on x1.
    a.e = t.c1 * a.L1 / t.d1;
    // At tangency order 1 the strip center sits at the critical point of the
    // folded coordinate rather than at y2m itself.
    a.Y2s = (t.m >= 2) ? t.y2m : t.y2m - a.e * t.b2 / (2 * t.d2 * a.G1);
    // Approximate fixed point of the full cycle: a 2x2 linear solve for the
    // x-centers at the two saddles.
    const Rational A12 = -t.a2 * a.L2;
    const Rational A21 = -(t.D() / t.d1) * a.L1;
    const Rational r1 = t.x1p + t.b2 * (a.Y2s - t.y2m);
    const Rational r2 = t.x2p + t.b1 / (t.d1 * a.G2) * a.Y2s;
    const Rational det = 1 - A12 * A21;
    a.Xs = (r1 - A12 * r2) / det;
    a.X2s = (r2 - A21 * r1) / det;
    a.Y1s = t.y1m + a.Y2s / (t.d1 * a.G2);
    return a;
}

namespace {

// One pass of the cycle T21 T02^k2 T12 T01^k1 written over an arbitrary
// value type: exact rationals, truncated series, or wide floats. The hooks
// supply constant embedding, the cross-form x remainder, and the solve for
// the exit y (exact multiplication by gam^k in model mode).
template <class V>
struct ChainHooks {
    std::function<V(const Rational&)> lift;
    std::function<V(int, int, const V&, const V&)> xi;      // (j, k, x0, yk)
    std::function<V(int, int, const V&, const V&)> exit_y;  // (j, k, x0, y0)
};

template <class V>
std::pair<V, V> return_chain(const TransitionMaps& t, const ReturnAnchors& a, const V& X,
                             const V& Y, const ChainHooks<V>& h) {
    const auto& C = h.lift;
    const V x1 = C(a.Xs) + C(a.Sx) * X;
    const V ytilde = C(a.Y1s) + C(a.Sy) * Y;
    const V y1 = ytilde - C(a.e) * x1;
    const V x1k = C(a.L1) * x1 + h.xi(1, a.k1, x1, y1);
    const V y1d = y1 - C(t.y1m);
    const V x2 = C(t.x2p) + C(t.a1) * x1k + C(t.b1) * y1d;
    const V y2 = C(t.c1) * x1k + C(t.d1) * y1d;
    const V Y2 = h.exit_y(2, a.k2, x2, y2);
    const V x2k = C(a.L2) * x2 + h.xi(2, a.k2, x2, Y2);
    const V W = Y2 - C(t.y2m);
    const V xb1 = C(t.x1p) + C(t.a2) * x2k + C(t.b2) * W;
    V yb1 = C(t.c2) * x2k;
    V Wp = C(Rational(1));
    for (int ord = 0; ord < t.m; ++ord) {
        yb1 = yb1 + C(t.mu[ord]) * Wp;
        Wp = Wp * W;
    }
    yb1 = yb1 + C(t.d2) * (Wp * W);  // the order-(m+1) fold
    const V Yb1 = h.exit_y(1, a.k1, xb1, yb1);
    const V ytout = Yb1 + C(a.e) * xb1;
    const V Xout = (xb1 - C(a.Xs)) * C(1 / a.Sx);
    const V Yout = (ytout - C(a.Y1s)) * C(1 / a.Sy);
    return {Xout, Yout};
}

BigFloat to_big(const Rational& r) { return r.convert_to<BigFloat>(); }

// Solve y0 = gam^{-k} yk + eta(k, x0, yk) for yk. The model part is kept in
// wide precision; the remainder correction is Newton-iterated in double,
// which is all the remainder callback can resolve anyway.
BigFloat solve_exit_y(const Rational& gam, int k, const Remainder& eta, const BigFloat& x0,
                      const BigFloat& y0) {
    const BigFloat gk = to_big(rational_pow(gam, k));
    const BigFloat yk_model = gk * y0;
    if (!eta) return yk_model;

    const double x0d = x0.convert_to<double>();
    const double gkd = gk.convert_to<double>();
    const double ykd = yk_model.convert_to<double>();
    double c = 0.0;
    auto res = [&](double cc) { return cc + gkd * eta(k, x0d, ykd + cc); };
    for (int it = 0; it < 60; ++it) {
        const double f = res(c);
        if (std::abs(f) <= 1e-12 * (1.0 + std::abs(c))) return yk_model + BigFloat(c);
        const double hstep = 1e-6 * (1.0 + std::abs(c));
        const double fp = (res(c + hstep) - res(c - hstep)) / (2.0 * hstep);
        if (fp == 0.0 || !std::isfinite(fp)) break;
        c -= f / fp;
        if (!std::isfinite(c) || std::abs(c) > 1e6 * (1.0 + std::abs(ykd))) break;
    }
    throw std::runtime_error("local map: remainder iteration diverged; the starting box is too large");
}

ChainHooks<Rational> exact_hooks(const SaddleModel& s) {
    return {
        [](const Rational& c) { return c; },
        [](int, int, const Rational&, const Rational&) { return Rational(0); },
        [&s](int j, int k, const Rational&, const Rational& y0) {
            return rational_pow(s.gam(j), k) * y0;
        },
    };
}

}  // namespace

Pt StripMap::apply(const Pt& p) const {
    if (std::abs(p[0]) > strip_radius || std::abs(p[1]) > strip_radius)
        throw std::domain_error("first_return: point exits strip");
    ChainHooks<BigFloat> h{
        [](const Rational& c) { return to_big(c); },
        [this](int j, int k, const BigFloat& x0, const BigFloat& yk) {
            const Remainder& rem = (j == 1) ? model.xi1 : model.xi2;
            if (!rem) return BigFloat(0);
            return BigFloat(rem(k, x0.convert_to<double>(), yk.convert_to<double>()));
        },
        [this](int j, int k, const BigFloat& x0, const BigFloat& y0) {
            return solve_exit_y(model.gam(j), k, (j == 1) ? model.eta1 : model.eta2, x0, y0);
        },
    };
    auto [Xo, Yo] = return_chain(trans, anch, BigFloat(p[0]), BigFloat(p[1]), h);
    return {Xo.convert_to<double>(), Yo.convert_to<double>()};
}

std::pair<Rational, Rational> StripMap::apply_exact(const Rational& X, const Rational& Y) const {
    if (!model.model_mode())
        throw std::logic_error("first_return: exact evaluation needs the model-mode saddles");
    return return_chain(trans, anch, X, Y, exact_hooks(model));
}

std::optional<Pt> StripMap::fixed_point() const {
    auto displacement = [this](const Vec& v) {
        const Pt q = apply({v[0], v[1]});
        return Vec{q[0] - v[0], q[1] - v[1]};
    };
    const auto sol = newton_solve(displacement, Vec{0.0, 0.0}, Vec{0.0, 0.0});
    if (!sol) return std::nullopt;
    return Pt{(*sol)[0], (*sol)[1]};
}

StripMap first_return(const SaddleModel& s, const TransitionMaps& t, int k1, int k2) {
    StripMap sm;
    sm.model = s;
    sm.trans = t;
    sm.anch = compute_anchors(s, t, k1, k2);
    return sm;
}

RescaledReturn rescale_return(const SaddleModel& s, const TransitionMaps& t,
                              const RescaledParams& par) {
    par.validate();
    if (!s.model_mode())
        throw std::invalid_argument("rescale_return: exact rescaling needs the model-mode saddles");
    if (static_cast<int>(par.E.size()) != t.m)
        throw std::invalid_argument("rescale_return: need one E coefficient per order below m");
    // B is the rescaled image of the transition's -c2 D b2; a mismatch would
    // make the limit family below meaningless.
    if (par.B != -t.c2 * t.D() * t.b2)
        throw std::invalid_argument("rescale_return: B must equal -c2 D b2 of the transition data");

    RescaledReturn rr;
    rr.par = par;
    rr.anch = compute_anchors(s, t, par.k1(), par.k2);
    rr.d = t.d2 * rational_pow(t.d1, t.m + 1);
    rr.par.d = rr.d;

    const int cap = t.m + 1;
    using TS = TruncatedSeries<Rational>;
    ChainHooks<TS> h{
        [cap](const Rational& c) { return TS::constant(cap, c); },
        [cap](int, int, const TS&, const TS&) { return TS(cap); },
        [&rr, cap](int j, int, const TS&, const TS& y0) {
            return TS::constant(cap, j == 1 ? rr.anch.G1 : rr.anch.G2) * y0;
        },
    };
    auto [Xo, Yo] = return_chain(t, rr.anch, TS::variable(cap, 0), TS::variable(cap, 1), h);
    rr.X = Xo;
    rr.Y = Yo;

    rr.limX = TS::variable(cap, 1);
    TS limY(cap);
    limY.set(1, 0, -par.B);
    for (int ord = 0; ord < t.m; ++ord) limY.set(0, ord, par.E[ord]);
    limY.set(0, t.m + 1, rr.d);
    rr.limY = limY;
    return rr;
}

double RescaledReturn::sup_distance(int n) const {
    const TruncatedSeries<Rational> dX = X - limX, dY = Y - limY;
    double sup = 0.0;
    for (int i = 0; i < n; ++i) {
        const double Xv = -1.0 + 2.0 * i / (n - 1);
        for (int j = 0; j < n; ++j) {
            const double Yv = -1.0 + 2.0 * j / (n - 1);
            sup = std::max(sup, std::abs(dX.eval_double(Xv, Yv)));
            sup = std::max(sup, std::abs(dY.eval_double(Xv, Yv)));
        }
    }
    return sup;
}

std::vector<Rational> solve_unfolding(const SaddleModel& s, const TransitionMaps& t,
                                      const RescaledParams& par) {
    const int m = t.m;
    TransitionMaps t0 = t;
    t0.mu.assign(m, Rational(0));
    const RescaledReturn base = rescale_return(s, t0, par);

    // The low Y-coefficients depend linearly on mu; assemble the exact
    // column-by-column system and eliminate.
    std::vector<std::vector<Rational>> M(m, std::vector<Rational>(m + 1));
    for (int col = 0; col < m; ++col) {
        TransitionMaps tp = t0;
        tp.mu[col] = 1;
        const RescaledReturn probe = rescale_return(s, tp, par);
        for (int row = 0; row < m; ++row)
            M[row][col] = probe.Y.get(0, row) - base.Y.get(0, row);
    }
    for (int row = 0; row < m; ++row) M[row][m] = par.E[row] - base.Y.get(0, row);

    for (int c = 0; c < m; ++c) {
        int piv = c;
        while (piv < m && M[piv][c] == 0) ++piv;
        if (piv == m) throw std::runtime_error("solve_unfolding: singular unfolding system");
        std::swap(M[c], M[piv]);
        for (int r = 0; r < m; ++r) {
            if (r == c || M[r][c] == 0) continue;
            const Rational f = M[r][c] / M[c][c];
            for (int i = c; i <= m; ++i) M[r][i] -= f * M[c][i];
        }
    }
    std::vector<Rational> mu(m);
    for (int i = 0; i < m; ++i) mu[i] = M[i][m] / M[i][i];
    return mu;
}

Pt local_power(const SaddleModel& s, int j, int k, double x0, double yk) {
    if (j != 1 && j != 2) throw std::invalid_argument("local map: saddle index must be 1 or 2");
    if (k < 0) throw std::invalid_argument("local map: k must be nonnegative");
    const double lk = rational_pow(s.lam(j), k).convert_to<double>();
    const double gik = rational_pow(s.gam(j), -k).convert_to<double>();
    const Remainder& xi = (j == 1) ? s.xi1 : s.xi2;
    const Remainder& eta = (j == 1) ? s.eta1 : s.eta2;
    const double xk = lk * x0 + (xi ? xi(k, x0, yk) : 0.0);
    const double y0 = gik * yk + (eta ? eta(k, x0, yk) : 0.0);
    return {xk, y0};
}

std::pair<Rational, Rational> local_power_exact(const SaddleModel& s, int j, int k,
                                                const Rational& x0, const Rational& yk) {
    if (j != 1 && j != 2) throw std::invalid_argument("local map: saddle index must be 1 or 2");
    if (k < 0) throw std::invalid_argument("local map: k must be nonnegative");
    if (!s.model_mode())
        throw std::logic_error("local map: exact evaluation needs the model-mode saddles");
    return {rational_pow(s.lam(j), k) * x0, rational_pow(s.gam(j), -k) * yk};
}

Pt local_forward(const SaddleModel& s, int j, int k, double x0, double y0) {
    if (j != 1 && j != 2) throw std::invalid_argument("local map: saddle index must be 1 or 2");
    if (k < 0) throw std::invalid_argument("local map: k must be nonnegative");
    const Remainder& eta = (j == 1) ? s.eta1 : s.eta2;
    const BigFloat yk = solve_exit_y(s.gam(j), k, eta, BigFloat(x0), BigFloat(y0));
    const double ykd = yk.convert_to<double>();
    const double lk = rational_pow(s.lam(j), k).convert_to<double>();
    const Remainder& xi = (j == 1) ? s.xi1 : s.xi2;
    return {lk * x0 + (xi ? xi(k, x0, ykd) : 0.0), ykd};
}

SaddleModel shipped_saddles() { return {}; }

TransitionMaps shipped_transitions(int m) {
    TransitionMaps t;
    t.m = m;
    t.mu.assign(m, Rational(0));
    return t;
}

RescaledParams shipped_rescaling(int m, int k2) {
    RescaledParams p;
    p.k2 = k2;
    p.E.assign(m, Rational(0));
    p.E[0] = Rational(1, 10);
    if (m >= 2) p.E[1] = Rational(-1, 5);
    const TransitionMaps t = shipped_transitions(m);
    p.d = t.d2 * rational_pow(t.d1, m + 1);
    return p;
}

}  // namespace mapkit
