#include "mapkit/field.hpp"

#include <stdexcept>
#include <utility>

namespace mapkit {

Poly NonAutonomousField::divergence() const {
    Poly d = Poly::zero(n + 1);
    for (int i = 0; i < n; ++i) d += xi[static_cast<size_t>(i)].derivative(i);
    return d;
}

void NonAutonomousField::eval(double t, const Vec& x, Vec& dx) const {
    double buf[Poly::kMaxVars] = {0.0};
    for (int i = 0; i < n; ++i) buf[i] = x[static_cast<size_t>(i)];
    buf[n] = t;
    dx.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) dx[static_cast<size_t>(i)] = xi[static_cast<size_t>(i)].eval(buf);
}

NonAutonomousField NonAutonomousField::zero(int n) {
    NonAutonomousField X;
    X.n = n;
    X.xi.assign(static_cast<size_t>(n), Poly::zero(n + 1));
    return X;
}

Poly PairField::stream() const {
    // Antiderivative of eta in x_{i+1} (variable slot i), minus the
    // antiderivative in x_i (slot i-1) of zeta restricted to x_{i+1} = 0.
    Poly psi = eta.antiderivative(i);
    psi -= zeta.set_var(i, 0.0).antiderivative(i - 1);
    return psi;
}

Poly PairField::divergence() const {
    Poly d = eta.derivative(i - 1);
    d += zeta.derivative(i);
    return d;
}

NonAutonomousField PairField::as_field() const {
    NonAutonomousField X = NonAutonomousField::zero(n);
    X.xi[static_cast<size_t>(i - 1)] = eta;
    X.xi[static_cast<size_t>(i)] = zeta;
    return X;
}

std::vector<PairField> split_field(const NonAutonomousField& X) {
    const int n = X.n;
    if (n < 2) throw std::invalid_argument("split_field: need n >= 2");
    if (static_cast<int>(X.xi.size()) != n)
        throw std::invalid_argument("split_field: component count mismatch");

    double scale = 1.0;
    for (const Poly& c : X.xi) scale = std::max(scale, c.max_abs_coeff());
    if (!X.divergence().is_zero(1e-12 * scale))
        throw std::invalid_argument("split_field: field is not divergence-free");

    std::vector<PairField> pairs;
    pairs.reserve(static_cast<size_t>(n - 1));
    Poly eta = X.xi[0];
    for (int i = 1; i <= n - 1; ++i) {
        PairField pf;
        pf.n = n;
        pf.i = i;
        pf.eta = eta;
        if (i < n - 1) {
            // Choose zeta_i with d eta_i/d x_i + d zeta_i/d x_{i+1} = 0 and
            // zeta_i = 0 on {x_{i+1} = 0}.
            Poly zeta = eta.derivative(i - 1).antiderivative(i);
            zeta = -1.0 * zeta;
            pf.zeta = zeta;
            eta = X.xi[static_cast<size_t>(i)] - zeta;
        } else {
            pf.zeta = X.xi[static_cast<size_t>(n - 1)];
            if (!pf.divergence().is_zero(1e-10 * scale))
                throw std::invalid_argument("split_field: residual pair not divergence-free");
        }
        pairs.push_back(std::move(pf));
    }
    return pairs;
}

std::vector<std::pair<double, double>> fragment(int N) {
    if (N < 1) throw std::invalid_argument("fragment: N must be positive");
    std::vector<std::pair<double, double>> slabs;
    slabs.reserve(static_cast<size_t>(N));
    for (int m = 0; m < N; ++m)
        slabs.emplace_back(static_cast<double>(m) / N, static_cast<double>(m + 1) / N);
    return slabs;
}

}  // namespace mapkit
