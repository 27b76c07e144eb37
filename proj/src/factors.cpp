#include "mapkit/factors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mapkit {

namespace {

std::string point_str(const Vec& x) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

}  // namespace

DomainError::DomainError(const std::string& factor_, const Vec& point_)
    : std::runtime_error("factor " + factor_ + " undefined at " + point_str(point_)),
      factor(factor_),
      point(point_) {}

std::string factor_name(const PrimitiveFactor& f) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, HenonLikeMap>) return "henon";
            else if constexpr (std::is_same_v<T, Psi1Factor>) return "psi1";
            else if constexpr (std::is_same_v<T, Psi2Factor>) return "psi2";
            else if constexpr (std::is_same_v<T, Phi0Factor>) return "phi0";
            else if constexpr (std::is_same_v<T, AffineFactor>) return "affine";
            else return v.kind.empty() ? std::string("numeric")
                                       : "numeric:" + v.kind;
        },
        f);
}

int factor_dim(const PrimitiveFactor& f) {
    return std::visit(
        [](const auto& v) -> int {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, HenonLikeMap>) return v.n;
            else if constexpr (std::is_same_v<T, Psi1Factor>) return 0;  // any dim
            else if constexpr (std::is_same_v<T, Psi2Factor>) return 0;
            else if constexpr (std::is_same_v<T, Phi0Factor>) return v.n;
            else if constexpr (std::is_same_v<T, AffineFactor>) return (int)v.A.rows();
            else return v.fwd ? v.fwd->n : 0;
        },
        f);
}

Vec apply_factor(const PrimitiveFactor& f, const Vec& x) {
    return std::visit(
        [&](const auto& v) -> Vec {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, HenonLikeMap>) {
                return v.apply(x);
            } else if constexpr (std::is_same_v<T, Psi1Factor>) {
                Vec y = x;
                y.back() = std::exp(v.K * x.back());
                return y;
            } else if constexpr (std::is_same_v<T, Psi2Factor>) {
                if (x.back() <= 0.0) throw DomainError("psi2", x);
                Vec y = x;
                y.back() = std::log(x.back());
                return y;
            } else if constexpr (std::is_same_v<T, Phi0Factor>) {
                Vec y = x;
                y[v.n - 2] = x[v.n - 1];
                y[v.n - 1] = -x[v.n - 2];
                return y;
            } else if constexpr (std::is_same_v<T, AffineFactor>) {
                Eigen::Map<const Eigen::VectorXd> xv(x.data(), x.size());
                Eigen::VectorXd yv = v.A * xv + v.b;
                return Vec(yv.data(), yv.data() + yv.size());
            } else {
                if (!v.fwd) throw std::runtime_error("numeric factor has no forward map");
                return (*v.fwd)(x);
            }
        },
        f);
}

Vec apply_factor_inverse(const PrimitiveFactor& f, const Vec& x) {
    return std::visit(
        [&](const auto& v) -> Vec {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, HenonLikeMap>) {
                return v.apply_inverse(x);
            } else if constexpr (std::is_same_v<T, Psi1Factor>) {
                if (x.back() <= 0.0) throw DomainError("psi1 (inverse)", x);
                Vec y = x;
                y.back() = std::log(x.back()) / v.K;
                return y;
            } else if constexpr (std::is_same_v<T, Psi2Factor>) {
                Vec y = x;
                y.back() = std::exp(x.back());
                return y;
            } else if constexpr (std::is_same_v<T, Phi0Factor>) {
                Vec y = x;
                y[v.n - 2] = -x[v.n - 1];
                y[v.n - 1] = x[v.n - 2];
                return y;
            } else if constexpr (std::is_same_v<T, AffineFactor>) {
                Eigen::Map<const Eigen::VectorXd> xv(x.data(), x.size());
                Eigen::VectorXd yv = v.A.fullPivLu().solve(xv - v.b);
                return Vec(yv.data(), yv.data() + yv.size());
            } else {
                if (!v.inv)
                    throw std::runtime_error("numeric factor " + v.kind +
                                             " has no inverse map");
                return (*v.inv)(x);
            }
        },
        f);
}

Vec MapComposition::apply(const Vec& x) const {
    Vec y = x;
    for (auto it = factors.rbegin(); it != factors.rend(); ++it)
        y = apply_factor(*it, y);
    return y;
}

Vec MapComposition::apply_inverse(const Vec& x) const {
    Vec y = x;
    for (const PrimitiveFactor& f : factors) y = apply_factor_inverse(f, y);
    return y;
}

SmoothMap MapComposition::to_map() const {
    SmoothMap m;
    m.n = n;
    m.label = provenance;
    auto self = std::make_shared<MapComposition>(*this);
    m.f = [self](const Vec& x) { return self->apply(x); };
    return m;
}

MapComposition MapComposition::from_application_order(
    int n, std::vector<PrimitiveFactor> applied) {
    MapComposition c;
    c.n = n;
    std::reverse(applied.begin(), applied.end());
    c.factors = std::move(applied);
    return c;
}

}  // namespace mapkit
