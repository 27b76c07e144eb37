#include "mapkit/shear.hpp"

#include <cmath>
#include <stdexcept>

namespace mapkit {

namespace {

// Argument buffer with the conserved combination u substituted into slot ix.
void fill_u_args(const ShearMap& S, const Vec& x, double* buf) {
    for (int j = 0; j < S.n; ++j) buf[j] = x[static_cast<size_t>(j)];
    buf[S.ix] = S.alpha * x[static_cast<size_t>(S.ix)] + S.beta * x[static_cast<size_t>(S.iy)];
}

}  // namespace

void ShearMap::apply(const Vec& x, Vec& y) const {
    double buf[Poly::kMaxVars] = {0.0};
    fill_u_args(*this, x, buf);
    const double d = tau * g.eval(buf);
    y = x;
    y[static_cast<size_t>(ix)] += d * beta;
    y[static_cast<size_t>(iy)] -= d * alpha;
}

void ShearMap::apply_inverse(const Vec& xbar, Vec& x) const {
    // u and all parameter slots are unchanged by the shear, so the forward
    // displacement can be recomputed from the image point.
    double buf[Poly::kMaxVars] = {0.0};
    fill_u_args(*this, xbar, buf);
    const double d = tau * g.eval(buf);
    x = xbar;
    x[static_cast<size_t>(ix)] -= d * beta;
    x[static_cast<size_t>(iy)] += d * alpha;
}

SmoothMap ShearMap::to_map() const {
    SmoothMap m;
    m.n = n;
    m.label = "shear";
    ShearMap S = *this;
    m.f = [S](const Vec& x) {
        Vec y;
        S.apply(x, y);
        return y;
    };
    Poly gu = g.derivative(ix);
    std::vector<Poly> gp;
    gp.reserve(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) gp.push_back(g.derivative(j));
    m.jac = [S, gu, gp](const Vec& x) {
        double buf[Poly::kMaxVars] = {0.0};
        fill_u_args(S, x, buf);
        Eigen::MatrixXd J = Eigen::MatrixXd::Identity(S.n, S.n);
        const double du = gu.eval(buf);
        for (int j = 0; j < S.n; ++j) {
            double dg;
            if (j == S.ix)
                dg = du * S.alpha;
            else if (j == S.iy)
                dg = du * S.beta;
            else
                dg = gp[static_cast<size_t>(j)].eval(buf);
            if (dg == 0.0) continue;
            J(S.ix, j) += S.tau * S.beta * dg;
            J(S.iy, j) -= S.tau * S.alpha * dg;
        }
        return J;
    };
    return m;
}

ShearMap ShearMap::from_ridge(int n, int ix, const RidgeTerm& term, double tau) {
    if (term.amp.nv != n)
        throw std::invalid_argument("ShearMap::from_ridge: amp variable count mismatch");
    ShearMap S;
    S.n = n;
    S.ix = ix;
    S.iy = ix + 1;
    S.alpha = term.alpha;
    S.beta = term.beta;
    S.tau = tau;
    if (term.k == 0) {
        S.g = Poly::zero(n);  // constant Hamiltonian, no motion
    } else {
        S.g = term.amp.scaled(static_cast<double>(term.k)) * Poly::var(n, ix).pow(term.k - 1);
    }
    return S;
}

std::vector<HenonLikeMap> planar_henon_factors(int n, int i, const Poly& h2) {
    if (i < 1 || i > n - 1) throw std::invalid_argument("planar_henon_factors: bad pair index");
    if (h2.nv != n) throw std::invalid_argument("planar_henon_factors: h2 variable count mismatch");
    if (h2.depends_on(i - 1))
        throw std::invalid_argument("planar_henon_factors: h2 depends on the replaced coordinate");

    if (n == 2) {
        std::vector<int> var_map = {0, 0};  // slot 0 is unused, slot 1 becomes the argument
        return {HenonLikeMap{2, h2.remap(1, var_map)}};
    }

    const double sigma = (n % 2 == 0) ? -1.0 : 1.0;

    HenonLikeMap S{n, Poly::zero(n - 1)};  // pure cyclic shift with sign

    HenonLikeMap Q{n, Poly::zero(n - 1)};  // alternating sum in the last slot
    for (int j = 2; j <= n; ++j) {
        const double c = ((n + j) % 2 == 0) ? 1.0 : -1.0;
        Q.h += Poly::var(n - 1, j - 2).scaled(c);
    }

    // The middle factor re-creates the planar step: its nonlinearity sees the
    // active argument in the last slot, the i-1 leading parameters in slots
    // n-i-1 .. n-3, and the trailing parameters (scaled by sigma) in slots
    // 0 .. n-i-2.
    HenonLikeMap H{n, Poly::zero(n - 1)};
    for (int j = 2; j <= n - 1; ++j) {
        const double c = ((n + j) % 2 == 0) ? 1.0 : -1.0;
        H.h += Poly::var(n - 1, j - 2).scaled(c);
    }
    H.h -= Poly::var(n - 1, n - 2);
    std::vector<Poly> repl(static_cast<size_t>(n));
    for (int a = 0; a < n; ++a) {
        if (a <= i - 2)
            repl[static_cast<size_t>(a)] = Poly::var(n - 1, n - i - 1 + a);
        else if (a == i - 1)
            repl[static_cast<size_t>(a)] = Poly::zero(n - 1);
        else if (a == i)
            repl[static_cast<size_t>(a)] = Poly::var(n - 1, n - 2);
        else
            repl[static_cast<size_t>(a)] = Poly::var(n - 1, a - i - 1).scaled(sigma);
    }
    H.h += h2.substitute(repl);

    std::vector<HenonLikeMap> out;
    out.reserve(static_cast<size_t>(2 * n + 1));
    for (int r = 0; r < i + 1; ++r) out.push_back(S);
    for (int r = 0; r < n - 1; ++r) out.push_back(Q);
    out.push_back(S);
    out.push_back(H);
    for (int r = 0; r < n - i - 1; ++r) out.push_back(S);
    return out;
}

namespace {

// Planar factor lists in application order; each entry is the h2 polynomial
// of one (x_i, x_{i+1}) -> (x_{i+1}, -x_i + h2) step.
void append_vertical(std::vector<Poly>& list, const ShearMap& S, const Poly& s_on_u) {
    // (x, y) -> (x, y + s(x)) equals P_s applied after three pure rotations;
    // the factor's argument slot is iy, so move the dependence there.
    std::vector<int> var_map(static_cast<size_t>(S.n));
    for (int j = 0; j < S.n; ++j) var_map[static_cast<size_t>(j)] = j;
    var_map[static_cast<size_t>(S.ix)] = S.iy;
    const Poly zero = Poly::zero(S.n);
    list.push_back(zero);
    list.push_back(zero);
    list.push_back(zero);
    list.push_back(s_on_u.remap(S.n, var_map));
}

void append_horizontal(std::vector<Poly>& list, const ShearMap& S, const Poly& s_on_y) {
    // (x, y) -> (x + s(y), y) equals three pure rotations applied after P_{-s}.
    const Poly zero = Poly::zero(S.n);
    list.push_back(s_on_y.scaled(-1.0));
    list.push_back(zero);
    list.push_back(zero);
    list.push_back(zero);
}

}  // namespace

std::vector<HenonLikeMap> shear_to_henon(const ShearMap& S) {
    if (S.iy != S.ix + 1) throw std::invalid_argument("shear_to_henon: pair slots not adjacent");
    if (std::abs(S.alpha * S.alpha + S.beta * S.beta - 1.0) > 1e-12)
        throw std::invalid_argument("shear_to_henon: direction must be unit length");

    std::vector<Poly> planar;
    const Poly profile = S.g.scaled(-S.tau);
    if (S.beta == 0.0) {
        // Displacement along (0, -alpha) with alpha = +-1: a vertical shear
        // with s(x) = -tau * alpha * g(alpha x).
        Poly s_on_u = profile.scaled(S.alpha);
        if (S.alpha != 1.0) {
            std::vector<Poly> repl;
            repl.reserve(static_cast<size_t>(S.n));
            for (int j = 0; j < S.n; ++j) repl.push_back(Poly::var(S.n, j));
            repl[static_cast<size_t>(S.ix)] = Poly::var(S.n, S.ix).scaled(S.alpha);
            s_on_u = s_on_u.substitute(repl);
        }
        append_vertical(planar, S, s_on_u);
    } else {
        if (S.alpha <= -1.0) throw std::invalid_argument("shear_to_henon: degenerate direction");
        // Conjugate by the rotation-like map R = [[alpha, beta], [-beta,
        // alpha]], written as three axis shears, so the displacement becomes
        // vertical in the rotated pair (u, w).
        const double a = S.beta / (1.0 + S.alpha);
        const double b = -S.beta;
        const Poly lin_y = Poly::var(S.n, S.iy);
        const Poly lin_u = Poly::var(S.n, S.ix);
        append_horizontal(planar, S, lin_y.scaled(a));
        append_vertical(planar, S, lin_u.scaled(b));
        append_horizontal(planar, S, lin_y.scaled(a));
        append_vertical(planar, S, profile);
        append_horizontal(planar, S, lin_y.scaled(-a));
        append_vertical(planar, S, lin_u.scaled(-b));
        append_horizontal(planar, S, lin_y.scaled(-a));
    }

    std::vector<HenonLikeMap> out;
    out.reserve(planar.size() * static_cast<size_t>(2 * S.n + 1));
    for (const Poly& h2 : planar) {
        std::vector<HenonLikeMap> block = planar_henon_factors(S.n, S.ix + 1, h2);
        out.insert(out.end(), std::make_move_iterator(block.begin()),
                   std::make_move_iterator(block.end()));
    }
    return out;
}

}  // namespace mapkit
