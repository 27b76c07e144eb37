#include "mapkit/henon.hpp"

#include <cassert>

namespace mapkit {

Vec HenonLikeMap::apply(const Vec& x) const {
    assert((int)x.size() == n);
    Vec y(n);
    for (int i = 0; i + 1 < n; ++i) y[i] = x[i + 1];
    y[n - 1] = sign() * x[0] + h.eval(x.data() + 1);
    return y;
}

Vec HenonLikeMap::apply_inverse(const Vec& xb) const {
    assert((int)xb.size() == n);
    Vec x(n);
    for (int i = 1; i < n; ++i) x[i] = xb[i - 1];
    x[0] = sign() * (xb[n - 1] - h.eval(xb.data()));
    return x;
}

SmoothMap HenonLikeMap::to_map() const {
    SmoothMap m;
    m.n = n;
    m.label = "henon";
    HenonLikeMap self = *this;
    auto grads = std::make_shared<std::vector<Poly>>();
    for (int j = 0; j < n - 1; ++j) grads->push_back(h.derivative(j));
    m.f = [self](const Vec& x) { return self.apply(x); };
    int nn = n;
    double s = sign();
    m.jac = [grads, nn, s](const Vec& x) {
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nn, nn);
        for (int i = 0; i + 1 < nn; ++i) J(i, i + 1) = 1;
        J(nn - 1, 0) = s;
        for (int j = 1; j < nn; ++j) J(nn - 1, j) = (*grads)[j - 1].eval(x.data() + 1);
        return J;
    };
    return m;
}

HenonLikeMap HenonLikeMap::random(int n, int deg, double scale, std::mt19937_64& rng) {
    assert(n >= 2 && n <= Poly::kMaxVars + 1);
    std::uniform_real_distribution<double> coef(-scale, scale);
    HenonLikeMap H;
    H.n = n;
    H.h = Poly(n - 1);
    // enumerate all monomials in n-1 vars of total degree <= deg
    std::vector<int> e(n - 1, 0);
    std::function<void(int, int)> emit = [&](int pos, int remaining) {
        if (pos == n - 1) {
            H.h += Poly::monomial(n - 1, coef(rng), e);
            return;
        }
        for (int d = 0; d <= remaining; ++d) {
            e[pos] = d;
            emit(pos + 1, remaining - d);
        }
        e[pos] = 0;
    };
    emit(0, deg);
    return H;
}

}  // namespace mapkit
