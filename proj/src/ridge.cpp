#include "mapkit/ridge.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <map>
#include <stdexcept>

namespace mapkit {

namespace {

double binomial(int k, int p) {
    double b = 1.0;
    for (int s = 1; s <= p; ++s) b = b * (k - p + s) / s;
    return b;
}

}  // namespace

Poly RidgeDecomposition::reconstruct(int nv) const {
    Poly out = Poly::zero(nv);
    for (const RidgeTerm& t : terms) {
        Poly u = Poly::var(nv, var_x).scaled(t.alpha) + Poly::var(nv, var_y).scaled(t.beta);
        out += t.amp * u.pow(t.k);
    }
    return out;
}

RidgeDecomposition ridge_decompose(const Poly& psi, int var_x, int var_y) {
    if (var_x == var_y) throw std::invalid_argument("ridge_decompose: active slots coincide");
    RidgeDecomposition dec;
    dec.var_x = var_x;
    dec.var_y = var_y;

    // Right-hand sides by homogeneous degree k in the active pair: rhs[k][p]
    // collects the coefficient polynomial of x^{k-p} y^p divided by C(k,p).
    std::map<int, std::vector<Poly>> rhs;
    for (const Poly::Term& term : psi.terms) {
        const int px = term.e[static_cast<size_t>(var_x)];
        const int py = term.e[static_cast<size_t>(var_y)];
        const int k = px + py;
        auto it = rhs.find(k);
        if (it == rhs.end())
            it = rhs.emplace(k, std::vector<Poly>(static_cast<size_t>(k + 1), Poly::zero(psi.nv))).first;
        Poly::Term param = term;
        param.e[static_cast<size_t>(var_x)] = 0;
        param.e[static_cast<size_t>(var_y)] = 0;
        param.c /= binomial(k, py);
        Poly mono(psi.nv);
        mono.terms.push_back(param);
        it->second[static_cast<size_t>(py)] += mono;
    }

    const double drop_tol = 1e-14 * std::max(1.0, psi.max_abs_coeff());
    for (auto& [k, rhs_k] : rhs) {
        if (k == 0) {
            if (rhs_k[0].is_zero(drop_tol)) continue;
            RidgeTerm t;
            t.k = 0;
            t.node = 0.0;
            t.alpha = 1.0;
            t.beta = 0.0;
            t.amp = rhs_k[0];
            dec.terms.push_back(std::move(t));
            continue;
        }

        const int m = k + 1;
        std::vector<double> nodes(static_cast<size_t>(m));
        Eigen::MatrixXd V(m, m);
        for (int j = 0; j < m; ++j) {
            double node = std::cos(M_PI * (2 * j + 1) / (2.0 * m));
            if (std::abs(node) < 1e-14) node = 0.0;  // exact axis direction
            nodes[static_cast<size_t>(j)] = node;
            double tp = 1.0;
            for (int p = 0; p < m; ++p) {
                V(p, j) = tp;
                tp *= nodes[static_cast<size_t>(j)];
            }
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(V);
        const double cond =
            svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
        if (!(cond < 1e12))
            throw std::runtime_error("ridge_decompose: Vandermonde system ill conditioned");
        Eigen::MatrixXd Vinv = V.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(m, m));

        for (int j = 0; j < m; ++j) {
            Poly cj = Poly::zero(psi.nv);
            for (int p = 0; p < m; ++p) {
                if (Vinv(j, p) != 0.0) cj += rhs_k[static_cast<size_t>(p)].scaled(Vinv(j, p));
            }
            if (cj.is_zero(drop_tol)) continue;
            const double t = nodes[static_cast<size_t>(j)];
            const double norm = std::sqrt(1.0 + t * t);
            RidgeTerm term;
            term.k = k;
            term.node = t;
            term.alpha = 1.0 / norm;
            term.beta = t / norm;
            term.amp = cj.scaled(std::pow(norm, k));
            dec.terms.push_back(std::move(term));
        }
    }
    return dec;
}

}  // namespace mapkit
