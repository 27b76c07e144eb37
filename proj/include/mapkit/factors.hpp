#pragma once

// Elementary factors and ordered compositions of them. A composition stores
// its factors in composition order: the rightmost (back of the list) factor
// is applied first, matching the usual notation F = f_1 * f_2 * ... * f_k.

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mapkit/henon.hpp"
#include "mapkit/smooth_map.hpp"

namespace mapkit {

// Last coordinate x_n -> exp(K * x_n), other coordinates fixed.
struct Psi1Factor {
    double K = 1.0;
};

// Last coordinate x_n -> ln(x_n), defined for x_n > 0.
struct Psi2Factor {};

// (x_1, ..., x_{n-2}, x_{n-1}, x_n) -> (x_1, ..., x_{n-2}, x_n, -x_{n-1}).
struct Phi0Factor {
    int n = 2;
};

struct AffineFactor {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
};

// Wraps an arbitrary SmoothMap (forward and, when available, inverse).
// `kind` + `params` let a manifest regenerate the map via a registered
// builder; factors with an empty kind cannot be serialized.
struct NumericFactor {
    std::string kind;
    std::map<std::string, std::string> params;
    std::shared_ptr<const SmoothMap> fwd;
    std::shared_ptr<const SmoothMap> inv;  // may be null
};

using PrimitiveFactor =
    std::variant<HenonLikeMap, Psi1Factor, Psi2Factor, Phi0Factor, AffineFactor,
                 NumericFactor>;

struct DomainError : std::runtime_error {
    std::string factor;
    Vec point;
    DomainError(const std::string& factor_, const Vec& point_);
};

std::string factor_name(const PrimitiveFactor& f);
int factor_dim(const PrimitiveFactor& f);

Vec apply_factor(const PrimitiveFactor& f, const Vec& x);
Vec apply_factor_inverse(const PrimitiveFactor& f, const Vec& x);

struct MapComposition {
    int n = 0;
    std::vector<PrimitiveFactor> factors;  // back of the list applied first
    std::string provenance;
    std::map<std::string, std::string> meta;

    std::size_t size() const { return factors.size(); }

    Vec apply(const Vec& x) const;
    Vec apply_inverse(const Vec& x) const;
    SmoothMap to_map() const;

    // Build from factors listed in application order (first applied first).
    static MapComposition from_application_order(int n,
                                                 std::vector<PrimitiveFactor> applied);
};

}  // namespace mapkit
