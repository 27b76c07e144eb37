#pragma once

// Heteroclinic cycle between two planar saddles and its first-return map.
// The local maps near the saddles are kept in cross form: the power T0_j^k
// is written as x_k = lam_j^k x_0 + xi, y_0 = gam_j^(-k) y_k + eta, so the
// natural strip coordinates are (x at entry, y at exit) and the remainders
// xi, eta are small corrections (identically zero in model mode). Two
// affine-plus-tangency transitions close the cycle; the transition from
// saddle 2 back to saddle 1 is tangent of order m and carries unfolding
// parameters mu_0..mu_{m-1}.
//
// In model mode everything is rational, so the return map rescaled to the
// unit window is an exact polynomial; as the cycle length k2 grows it
// converges to the limit family (X, Y) -> (Y, -B X + sum_s E_s Y^s +
// d Y^(m+1)). The numeric path evaluates the same composition step by step
// in wide floating point, because the strip is exponentially thin in the
// original coordinates.

#include <array>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "mapkit/geometry.hpp"
#include "mapkit/series.hpp"

namespace mapkit {

// Wide accumulator for the step-by-step return path: the strip width in the
// original coordinates shrinks like gam2^(-k2-k2/m), far below double
// resolution for the k2 range of interest.
using BigFloat = boost::multiprecision::cpp_bin_float_100;

// base^e for integer e of either sign (exact; throws on 0^negative).
Rational rational_pow(const Rational& base, long e);

// Cross-form remainder term: arguments are (k, x_0, y_k).
using Remainder = std::function<double(int, double, double)>;

// Multipliers of the two saddles plus optional cross-form remainders.
struct SaddleModel {
    Rational lam1{1, 8};
    Rational gam1{2};
    Rational lam2{1, 4};
    Rational gam2{8};
    Remainder xi1, eta1, xi2, eta2;  // all empty in model mode

    Rational J1() const { return abs(lam1 * gam1); }  // contracting saddle value
    Rational J2() const { return abs(lam2 * gam2); }  // expanding saddle value
    bool model_mode() const { return !xi1 && !eta1 && !xi2 && !eta2; }
    const Rational& lam(int j) const { return j == 1 ? lam1 : lam2; }
    const Rational& gam(int j) const { return j == 1 ? gam1 : gam2; }

    // Enforces |lam_j| < 1 < |gam_j|, J1 < 1 < J2, and the multiplier log
    // condition ln|gam1| ln|gam2| < ln|lam1| ln|lam2|.
    void validate() const;
};

// The two transitions closing the cycle. T12 (from a neighborhood of saddle
// 1 to saddle 2) is affine with matrix (a1 b1; c1 d1) anchored at x2p, y1m.
// T21 is affine in x but tangent of order m in y, anchored at x1p, y2m, with
// unfolding coefficients mu (one per tangency order below m).
struct TransitionMaps {
    Rational a1{7, 10}, b1{11, 10}, c1{2, 5}, d1{9, 10};
    Rational x2p{1, 4}, y1m{1, 5};
    Rational a2{3, 5}, b2{-4, 5}, c2{125, 19}, d2{13, 10};
    Rational x1p{3, 10}, y2m{7, 20};
    int m = 1;
    std::vector<Rational> mu;  // size m, zero-filled by default

    Rational D() const { return a1 * d1 - b1 * c1; }

    // d1 != 0, D > 0, d2 != 0, b2 c2 < 0, m >= 1, mu sized to m.
    void validate() const;
};

// Rescaling data: the limit family coefficient B (must be positive), its
// lower-order coefficients E_0..E_{m-1}, and the cycle lengths k1 = theta0 k2
// (both even integers).
struct RescaledParams {
    Rational B{1};
    std::vector<Rational> E;
    Rational theta0{1, 2};
    int k2 = 8;
    Rational d{0};  // composite coefficient d2 * d1^(m+1), filled on use

    int k1() const;        // theta0 * k2, checked to be an even integer
    void validate() const  // also requires k2 even and positive, B > 0
    {
        (void)k1();
        if (k2 <= 0 || k2 % 2 != 0) throw std::invalid_argument("rescaling: k2 must be a positive even integer");
        if (B <= 0) throw std::invalid_argument("rescaling: B must be positive");
    }
};

// Constants shared by the exact rescaled build and the numeric strip path:
// saddle powers, window scales, the strip shear e, and the approximate fixed
// point (Xs, X2s, Y1s, Y2s) the windows are centered on.
struct ReturnAnchors {
    int k1 = 0, k2 = 0;
    Rational L1, G1, L2, G2;       // lam1^k1, gam1^k1, lam2^k2, gam2^k2
    Rational sig, Sx, Sy;          // window scales
    Rational e;                    // strip coordinate is ytilde = y + e x
    Rational Xs, X2s, Y1s, Y2s;    // strip centers at the two saddles
};

ReturnAnchors compute_anchors(const SaddleModel& s, const TransitionMaps& t, int k1, int k2);

// First-return map T21 T02^k2 T12 T01^k1 on the strip around the cycle, in
// normalized strip coordinates: the input (X, Y) corresponds to the original
// point x1 = Xs + Sx X, ytilde1 = Y1s + Sy Y.
struct StripMap {
    SaddleModel model;
    TransitionMaps trans;
    ReturnAnchors anch;
    double strip_radius = 8.0;  // admissible |X|, |Y| before "exits strip"

    // Numeric path (wide floating point inside, remainders included).
    Pt apply(const Pt& p) const;
    // Exact path, model mode only.
    std::pair<Rational, Rational> apply_exact(const Rational& X, const Rational& Y) const;
    // Newton from the strip center; empty on failure.
    std::optional<Pt> fixed_point() const;
};

StripMap first_return(const SaddleModel& s, const TransitionMaps& t, int k1, int k2);

// The return map conjugated to the unit window, as exact polynomials in
// (X, Y) of total degree m+1, together with the limit family it approaches.
struct RescaledReturn {
    RescaledParams par;
    ReturnAnchors anch;
    Rational d;                            // d2 * d1^(m+1)
    TruncatedSeries<Rational> X, Y;        // rescaled return map
    TruncatedSeries<Rational> limX, limY;  // limit family

    // Sup over an n x n grid on [-1,1]^2 of the distance to the limit map.
    double sup_distance(int n = 9) const;
};

RescaledReturn rescale_return(const SaddleModel& s, const TransitionMaps& t,
                              const RescaledParams& par);

// Unfolding parameters mu making the rescaled Y-component match E_s exactly
// in the coefficients of Y^s, s < m (the dependence is linear; solved by
// exact elimination).
std::vector<Rational> solve_unfolding(const SaddleModel& s, const TransitionMaps& t,
                                      const RescaledParams& par);

// Cross form of the local power T0_j^k: given x at entry and y at exit,
// returns (x at exit, y at entry). Explicit, including remainders.
Pt local_power(const SaddleModel& s, int j, int k, double x0, double yk);
std::pair<Rational, Rational> local_power_exact(const SaddleModel& s, int j, int k,
                                                const Rational& x0, const Rational& yk);

// Forward form: given the entry point (x0, y0), solves the cross-form
// relations for (x_k, y_k). With remainders this is a fixed-point iteration;
// divergence means the starting box is too large and throws.
Pt local_forward(const SaddleModel& s, int j, int k, double x0, double y0);

// Parameter sets used throughout the tests and the command line tools.
SaddleModel shipped_saddles();
TransitionMaps shipped_transitions(int m);
RescaledParams shipped_rescaling(int m, int k2);

}  // namespace mapkit
