#include "mapkit/poly.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mapkit {

static bool expo_less(const Poly::Expo& a, const Poly::Expo& b) { return a < b; }

void Poly::normalize() {
    std::sort(terms.begin(), terms.end(),
              [](const Term& a, const Term& b) { return expo_less(a.e, b.e); });
    std::vector<Term> out;
    out.reserve(terms.size());
    for (const Term& t : terms) {
        if (!out.empty() && out.back().e == t.e)
            out.back().c += t.c;
        else
            out.push_back(t);
    }
    out.erase(std::remove_if(out.begin(), out.end(), [](const Term& t) { return t.c == 0.0; }),
              out.end());
    terms = std::move(out);
}

Poly Poly::constant(int nv, double c) {
    Poly p(nv);
    if (c != 0.0) p.terms.push_back({c, Expo{}});
    return p;
}

Poly Poly::var(int nv, int i) {
    assert(i >= 0 && i < nv && nv <= kMaxVars);
    Poly p(nv);
    Term t{1.0, Expo{}};
    t.e[i] = 1;
    p.terms.push_back(t);
    return p;
}

Poly Poly::monomial(int nv, double c, const std::vector<int>& exps) {
    assert((int)exps.size() == nv);
    Poly p(nv);
    if (c == 0.0) return p;
    Term t{c, Expo{}};
    for (int i = 0; i < nv; ++i) {
        assert(exps[i] >= 0 && exps[i] < 256);
        t.e[i] = (std::uint8_t)exps[i];
    }
    p.terms.push_back(t);
    return p;
}

int Poly::total_degree() const {
    int d = 0;
    for (const Term& t : terms) {
        int s = 0;
        for (int i = 0; i < nv; ++i) s += t.e[i];
        d = std::max(d, s);
    }
    return d;
}

int Poly::degree_in(int i) const {
    int d = 0;
    for (const Term& t : terms) d = std::max(d, (int)t.e[i]);
    return d;
}

double Poly::max_abs_coeff() const {
    double m = 0;
    for (const Term& t : terms) m = std::max(m, std::abs(t.c));
    return m;
}

bool Poly::is_zero(double tol) const {
    for (const Term& t : terms)
        if (std::abs(t.c) > tol) return false;
    return true;
}

bool Poly::depends_on(int i) const {
    for (const Term& t : terms)
        if (t.e[i] != 0) return true;
    return false;
}

double Poly::eval(const Vec& x) const { return eval(x.data()); }

double Poly::eval(const double* x) const {
    double s = 0;
    for (const Term& t : terms) {
        double v = t.c;
        for (int i = 0; i < nv; ++i) {
            int e = t.e[i];
            if (e == 0) continue;
            double xi = x[i];
            // tiny exponents dominate: unrolled square-multiply
            double acc = 1.0;
            while (e) {
                if (e & 1) acc *= xi;
                xi *= xi;
                e >>= 1;
            }
            v *= acc;
        }
        s += v;
    }
    return s;
}

Poly Poly::operator+(const Poly& o) const {
    Poly r = *this;
    r += o;
    return r;
}

Poly Poly::operator-(const Poly& o) const {
    Poly r = *this;
    r -= o;
    return r;
}

Poly& Poly::operator+=(const Poly& o) {
    assert(nv == o.nv || terms.empty() || o.terms.empty());
    if (terms.empty()) nv = std::max(nv, o.nv);
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    normalize();
    return *this;
}

Poly& Poly::operator-=(const Poly& o) {
    *this += o.scaled(-1.0);
    return *this;
}

Poly Poly::scaled(double c) const {
    Poly r(nv);
    if (c == 0.0) return r;
    r.terms = terms;
    for (Term& t : r.terms) t.c *= c;
    return r;
}

Poly Poly::operator*(const Poly& o) const {
    Poly r(std::max(nv, o.nv));
    r.terms.reserve(terms.size() * o.terms.size());
    for (const Term& a : terms)
        for (const Term& b : o.terms) {
            Term t{a.c * b.c, Expo{}};
            for (int i = 0; i < kMaxVars; ++i) {
                int e = a.e[i] + b.e[i];
                if (e > 255) throw std::overflow_error("Poly: exponent overflow in product");
                t.e[i] = (std::uint8_t)e;
            }
            r.terms.push_back(t);
        }
    r.normalize();
    return r;
}

Poly operator*(double c, const Poly& p) { return p.scaled(c); }

Poly Poly::pow(int k) const {
    Poly r = Poly::constant(nv, 1.0);
    Poly base = *this;
    while (k > 0) {
        if (k & 1) r = r * base;
        base = (k >>= 1) ? base * base : base;
    }
    return r;
}

Poly Poly::derivative(int i) const {
    Poly r(nv);
    for (const Term& t : terms) {
        if (t.e[i] == 0) continue;
        Term d = t;
        d.c = t.c * t.e[i];
        d.e[i] = (std::uint8_t)(t.e[i] - 1);
        r.terms.push_back(d);
    }
    r.normalize();
    return r;
}

Poly Poly::antiderivative(int i) const {
    Poly r(nv);
    for (const Term& t : terms) {
        Term d = t;
        d.c = t.c / (t.e[i] + 1);
        if (t.e[i] + 1 > 255) throw std::overflow_error("Poly: exponent overflow in integral");
        d.e[i] = (std::uint8_t)(t.e[i] + 1);
        r.terms.push_back(d);
    }
    r.normalize();
    return r;
}

Poly Poly::substitute(const std::vector<Poly>& repl) const {
    assert((int)repl.size() == nv);
    int out_nv = nv;
    for (const Poly& p : repl) out_nv = std::max(out_nv, p.nv);
    Poly r(out_nv);
    for (const Term& t : terms) {
        Poly m = Poly::constant(out_nv, t.c);
        for (int i = 0; i < nv; ++i)
            if (t.e[i] != 0) m = m * repl[i].pow(t.e[i]);
        r += m;
    }
    return r;
}

Poly Poly::set_var(int i, double value) const {
    Poly r(nv);
    for (const Term& t : terms) {
        Term d = t;
        d.c = t.c * std::pow(value, (int)t.e[i]);
        d.e[i] = 0;
        r.terms.push_back(d);
    }
    r.normalize();
    return r;
}

Poly Poly::remap(int new_nv, const std::vector<int>& var_map) const {
    assert((int)var_map.size() == nv && new_nv <= kMaxVars);
    Poly r(new_nv);
    for (const Term& t : terms) {
        Term d{t.c, Expo{}};
        for (int i = 0; i < nv; ++i) {
            if (t.e[i] == 0) continue;
            assert(var_map[i] >= 0 && var_map[i] < new_nv);
            d.e[var_map[i]] = (std::uint8_t)(d.e[var_map[i]] + t.e[i]);
        }
        r.terms.push_back(d);
    }
    r.normalize();
    return r;
}

std::string Poly::to_string(const std::vector<std::string>& names) const {
    if (terms.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const Term& t : terms) {
        if (!first) os << (t.c >= 0 ? " + " : " - ");
        else if (t.c < 0) os << "-";
        first = false;
        os << std::abs(t.c);
        for (int i = 0; i < nv; ++i) {
            if (t.e[i] == 0) continue;
            os << "*";
            if ((int)names.size() > i) os << names[i];
            else os << "x" << i + 1;
            if (t.e[i] > 1) os << "^" << (int)t.e[i];
        }
    }
    return os.str();
}

}  // namespace mapkit
