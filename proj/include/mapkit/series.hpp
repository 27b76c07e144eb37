#pragma once

// Bivariate truncated power series. Every operation is exact through the
// degree cap and discards higher terms deterministically, so with a rational
// coefficient type the eliminations downstream can be checked for literally
// zero residual. Storage is dense grade-lex: the total-degree-t block starts
// at offset t(t+1)/2 and is indexed by the power of the second variable.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace mapkit {

using Rational = boost::multiprecision::cpp_rational;

namespace detail {
inline double coef_to_double(double v) { return v; }
template <class C>
double coef_to_double(const C& v) {
    return v.template convert_to<double>();
}
}  // namespace detail

template <class C>
struct TruncatedSeries {
    int cap = 0;
    std::vector<C> coef;

    TruncatedSeries() : coef(1, C(0)) {}
    explicit TruncatedSeries(int max_degree)
        : cap(max_degree),
          coef(static_cast<std::size_t>((max_degree + 1) * (max_degree + 2) / 2), C(0)) {
        if (max_degree < 0) throw std::invalid_argument("series: negative degree cap");
    }

    static TruncatedSeries constant(int max_degree, const C& v) {
        TruncatedSeries s(max_degree);
        s.coef[0] = v;
        return s;
    }
    // which = 0: first variable, 1: second.
    static TruncatedSeries variable(int max_degree, int which) {
        if (max_degree < 1) throw std::invalid_argument("series: cap too small for a variable");
        TruncatedSeries s(max_degree);
        s.set(1 - which, which, C(1));
        return s;
    }

    static std::size_t offset(int i, int j) {
        const int t = i + j;
        return static_cast<std::size_t>(t * (t + 1) / 2 + j);
    }

    C get(int i, int j) const {
        if (i < 0 || j < 0 || i + j > cap) return C(0);
        return coef[offset(i, j)];
    }
    void set(int i, int j, const C& v) {
        if (i < 0 || j < 0 || i + j > cap)
            throw std::out_of_range("series: coefficient outside the degree cap");
        coef[offset(i, j)] = v;
    }

    bool is_zero() const {
        for (const C& c : coef)
            if (c != 0) return false;
        return true;
    }

    friend bool operator==(const TruncatedSeries& a, const TruncatedSeries& b) {
        return a.cap == b.cap && a.coef == b.coef;
    }

    TruncatedSeries& operator+=(const TruncatedSeries& o) {
        check_cap(o);
        for (std::size_t i = 0; i < coef.size(); ++i) coef[i] += o.coef[i];
        return *this;
    }
    TruncatedSeries& operator-=(const TruncatedSeries& o) {
        check_cap(o);
        for (std::size_t i = 0; i < coef.size(); ++i) coef[i] -= o.coef[i];
        return *this;
    }
    friend TruncatedSeries operator+(TruncatedSeries a, const TruncatedSeries& b) {
        return a += b;
    }
    friend TruncatedSeries operator-(TruncatedSeries a, const TruncatedSeries& b) {
        return a -= b;
    }

    TruncatedSeries scaled(const C& f) const {
        TruncatedSeries out(*this);
        for (C& c : out.coef) c *= f;
        return out;
    }

    friend TruncatedSeries operator*(const TruncatedSeries& a, const TruncatedSeries& b) {
        a.check_cap(b);
        TruncatedSeries out(a.cap);
        for (int ta = 0; ta <= a.cap; ++ta)
            for (int ja = 0; ja <= ta; ++ja) {
                const C& ca = a.coef[offset(ta - ja, ja)];
                if (ca == 0) continue;
                for (int tb = 0; ta + tb <= a.cap; ++tb)
                    for (int jb = 0; jb <= tb; ++jb) {
                        const C& cb = b.coef[offset(tb - jb, jb)];
                        if (cb == 0) continue;
                        out.coef[offset(ta + tb - ja - jb, ja + jb)] += ca * cb;
                    }
            }
        return out;
    }

    TruncatedSeries pow(int n) const {
        if (n < 0) throw std::invalid_argument("series: negative power");
        TruncatedSeries out = constant(cap, C(1));
        for (int i = 0; i < n; ++i) out = out * *this;
        return out;
    }

    // Substitute series for the two variables. Requires zero constant terms
    // in the substituents; otherwise truncation would not commute with the
    // substitution.
    TruncatedSeries compose(const TruncatedSeries& su, const TruncatedSeries& sv) const {
        check_cap(su);
        check_cap(sv);
        if (su.coef[0] != 0 || sv.coef[0] != 0)
            throw std::invalid_argument("series: substituent has a constant term");
        // Powers of the substituents up to the cap.
        std::vector<TruncatedSeries> pu(static_cast<std::size_t>(cap + 1)),
            pv(static_cast<std::size_t>(cap + 1));
        pu[0] = pv[0] = constant(cap, C(1));
        for (int p = 1; p <= cap; ++p) {
            pu[static_cast<std::size_t>(p)] = pu[static_cast<std::size_t>(p - 1)] * su;
            pv[static_cast<std::size_t>(p)] = pv[static_cast<std::size_t>(p - 1)] * sv;
        }
        TruncatedSeries out(cap);
        for (int t = 0; t <= cap; ++t)
            for (int j = 0; j <= t; ++j) {
                const C& c = coef[offset(t - j, j)];
                if (c == 0) continue;
                out += (pu[static_cast<std::size_t>(t - j)] * pv[static_cast<std::size_t>(j)])
                           .scaled(c);
            }
        return out;
    }

    // which = 0: d/du, 1: d/dv. The result keeps the same cap; its top block
    // is exact because differentiation lowers the degree.
    TruncatedSeries derivative(int which) const {
        TruncatedSeries out(cap);
        for (int t = 1; t <= cap; ++t)
            for (int j = 0; j <= t; ++j) {
                const C& c = coef[offset(t - j, j)];
                if (c == 0) continue;
                if (which == 0 && t - j >= 1)
                    out.coef[offset(t - j - 1, j)] += c * C(t - j);
                if (which == 1 && j >= 1) out.coef[offset(t - j, j - 1)] += c * C(j);
            }
        return out;
    }

    C eval(const C& x, const C& y) const {
        C acc(0);
        for (int t = cap; t >= 0; --t) {
            C block(0), py(1);
            for (int j = 0; j <= t; ++j) {
                block += coef[offset(t - j, j)] * py * pow_of(x, t - j);
                py *= y;
            }
            acc += block;
        }
        return acc;
    }

    double eval_double(double x, double y) const {
        double acc = 0.0;
        for (int t = 0; t <= cap; ++t)
            for (int j = 0; j <= t; ++j) {
                const double c = detail::coef_to_double(coef[offset(t - j, j)]);
                if (c == 0.0) continue;
                acc += c * std::pow(x, t - j) * std::pow(y, j);
            }
        return acc;
    }

   private:
    void check_cap(const TruncatedSeries& o) const {
        if (cap != o.cap) throw std::invalid_argument("series: degree cap mismatch");
    }
    static C pow_of(const C& x, int n) {
        C r(1);
        for (int i = 0; i < n; ++i) r *= x;
        return r;
    }
};

// Copy of a series with a different degree cap; raising the cap pads with
// zeros, lowering it discards the tail.
template <class C>
TruncatedSeries<C> truncated_to(const TruncatedSeries<C>& s, int cap) {
    TruncatedSeries<C> out(cap);
    const int keep = std::min(cap, s.cap);
    for (int t = 0; t <= keep; ++t)
        for (int j = 0; j <= t; ++j) out.set(t - j, j, s.get(t - j, j));
    return out;
}

// A planar map given by a pair of series in the same two variables.
template <class C>
struct SeriesMap2 {
    TruncatedSeries<C> u, v;

    // this after `inner`: substitute the components of `inner` into *this.
    // Both components of `inner` must vanish at the origin.
    SeriesMap2 after(const SeriesMap2& inner) const {
        return {u.compose(inner.u, inner.v), v.compose(inner.u, inner.v)};
    }

    friend bool operator==(const SeriesMap2& a, const SeriesMap2& b) {
        return a.u == b.u && a.v == b.v;
    }
};

template <class C>
SeriesMap2<C> truncated_to(const SeriesMap2<C>& m, int cap) {
    return {truncated_to(m.u, cap), truncated_to(m.v, cap)};
}

}  // namespace mapkit
