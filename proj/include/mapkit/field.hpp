#pragma once

// Divergence-free polynomial fields on [0,1] x R^n and their exact splitting
// into planar pair fields: X = sum_i X^(i) where X^(i) moves only the
// coordinates (x_i, x_{i+1}) and is itself divergence-free. Each pair field
// has an explicit polynomial stream function.

#include <vector>

#include "mapkit/poly.hpp"

namespace mapkit {

// Components xi_i are polynomials in (x_1, ..., x_n, t); t is the last
// variable slot (index n).
struct NonAutonomousField {
    int n = 0;
    std::vector<Poly> xi;

    Poly divergence() const;  // sum_i d xi_i / d x_i, symbolic
    void eval(double t, const Vec& x, Vec& dx) const;

    static NonAutonomousField zero(int n);
};

// Planar field eta * e_i + zeta * e_{i+1} (i is 1-based); eta and zeta are
// polynomials in (x_1, ..., x_n, t).
struct PairField {
    int n = 0;
    int i = 1;
    Poly eta;
    Poly zeta;

    // Stream function psi with eta = d psi/d x_{i+1}, zeta = -d psi/d x_i:
    //   psi = int_0^{x_{i+1}} eta ds  -  int_0^{x_i} zeta(s, x_{i+1}=0) ds.
    Poly stream() const;
    Poly divergence() const;
    NonAutonomousField as_field() const;
};

// Exact recursion: eta_1 = xi_1; zeta_i = -int_0^{x_{i+1}} d eta_i/d x_i;
// eta_i = xi_i - zeta_{i-1}; the last pair gets zeta_{n-1} = xi_n. Input must
// be divergence-free (symbolically); result sums to X exactly.
std::vector<PairField> split_field(const NonAutonomousField& X);

// Time slabs [m/N, (m+1)/N], m = 0..N-1, in application order.
std::vector<std::pair<double, double>> fragment(int N);

}  // namespace mapkit
