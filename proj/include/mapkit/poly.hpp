#pragma once
// Sparse multivariate polynomials with double coefficients.  Exponents are
// stored in a fixed-width array (max 8 variables, degree per variable < 256),
// which keeps terms POD and compositions of many small factors cheap.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mapkit/geometry.hpp"

namespace mapkit {

struct Poly {
    static constexpr int kMaxVars = 8;
    using Expo = std::array<std::uint8_t, kMaxVars>;

    struct Term {
        double c = 0;
        Expo e{};
    };

    int nv = 0;
    std::vector<Term> terms;  // sorted by exponent tuple, like terms combined

    Poly() = default;
    explicit Poly(int nvars) : nv(nvars) {}

    static Poly zero(int nv) { return Poly(nv); }
    static Poly constant(int nv, double c);
    static Poly var(int nv, int i);        // x_i (0-based)
    static Poly monomial(int nv, double c, const std::vector<int>& exps);

    bool empty() const { return terms.empty(); }
    int total_degree() const;
    int degree_in(int i) const;
    double max_abs_coeff() const;
    bool is_zero(double tol = 0.0) const;
    bool depends_on(int i) const;

    double eval(const Vec& x) const;
    double eval(const double* x) const;

    Poly operator+(const Poly& o) const;
    Poly operator-(const Poly& o) const;
    Poly operator*(const Poly& o) const;
    Poly& operator+=(const Poly& o);
    Poly& operator-=(const Poly& o);
    Poly scaled(double c) const;
    Poly pow(int k) const;

    Poly derivative(int i) const;
    Poly antiderivative(int i) const;  // definite integral from 0 in variable i

    // Substitute each variable by a polynomial (general composition).
    Poly substitute(const std::vector<Poly>& repl) const;
    // Freeze one variable to a value.
    Poly set_var(int i, double value) const;
    // Reinterpret in a space with new_nv variables, old variable j becoming
    // variable var_map[j].
    Poly remap(int new_nv, const std::vector<int>& var_map) const;

    void normalize();  // sort, combine, drop exact zeros
    std::string to_string(const std::vector<std::string>& names = {}) const;
};

Poly operator*(double c, const Poly& p);

}  // namespace mapkit
