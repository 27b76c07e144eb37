#pragma once

// A planar flow scheme with two slow (saddle-like) regions joined by fast
// transits. All time-t maps of the flow between section anchors are closed
// form; small polynomial perturbations of the transition maps implant
// Hénon-type targets. After matching the internal parameters, the return map
// between rescaled windows approximates a prescribed composition of Hénon
// maps, with error O(eta) where eta = exp(-m/(2d)) shrinks as the transit
// time m grows.
//
// Index conventions follow the construction: legs j = 1, 2; within leg j the
// window points are 1-based, s = 1..q_j for the positive points and s =
// q_j + 1 for the negative anchor point.

#include <array>
#include <vector>

#include "mapkit/geometry.hpp"

namespace mapkit {

// Fixed geometry: section anchors with exact spacing chain
//   a1p = a1m + 3 = b1 + 6 = a2p + 9 = a2m + 12 = b2 + 15,
// the bump profile, and the two transit-shape integrals alpha and beta.
struct FlowConstants {
    double b2 = 0.0;
    double a2m = 3.0;
    double a2p = 6.0;
    double b1 = 9.0;
    double a1m = 12.0;
    double a1p = 15.0;
    double R = 17.0;  // strip half-width containing every anchor interval
    double delta = 0.05;

    // Bump: exp(1 - 1/(1 - 4z^2)) for |z| < 1/2, else 0; bump(0) = 1.
    static double bump(double z);
    // 1 - bump(z) computed without cancellation (expm1 form); near z = 0 the
    // direct subtraction would lose half the digits, which poisons the
    // integrands below for small mu.
    static double one_minus_bump(double z);

    // alpha(mu) = int bump / (mu + (1-mu)(1-bump)),
    // beta(mu)  = 2 (int 1 / (mu + (1-mu)(1-bump)) - 1), both over [-1/2, 1/2].
    double alpha(double mu) const;
    double beta(double mu) const;
    // Inverse of the decreasing map mu -> beta(mu) by geometric bisection on
    // [1e-9, 1]; throws if the target is outside the covered range.
    double solve_mu(double target_beta) const;
};

// Everything matched for one choice of targets: window points u, section
// heights z, scale constants C, their time-shifted (primed) versions, the
// perturbation coefficients, and the solved slow-region parameters.
struct SchemeParameters {
    std::array<int, 2> q{1, 1};  // targets per leg
    int m = 6;                   // transit time scale
    int d = 1;                   // target degree bound
    double K = 0.5;              // exponent of the leg-1 boundary map
    // h[j-1][s-1][nu]: target coefficients, nu = 0..d.
    std::vector<std::vector<std::vector<double>>> h;

    double eta = 0.0;  // exp(-m/(2d))
    int k = 0;         // integer transit budget shared by both legs
    std::array<int, 2> l{0, 0};
    std::array<double, 2> mu{0, 0};
    std::array<double, 2> gamma{0, 0};
    std::array<double, 2> alpha_val{0, 0};
    std::array<double, 2> beta_val{0, 0};
    // 1-based in s: index 0 unused, entries 1..q_j+1.
    std::array<std::vector<double>, 2> u, z, zp, up, C;
    // eps[j-1][s-1][nu], s = 1..q_j.
    std::array<std::vector<std::vector<double>>, 2> eps;
};

struct FlowScheme {
    FlowConstants fc;
    SchemeParameters par;

    double b(int j) const { return j == 1 ? fc.b1 : fc.b2; }
    double am(int j) const { return j == 1 ? fc.a1m : fc.a2m; }
    double ap(int j) const { return j == 1 ? fc.a1p : fc.a2p; }

    // Closed-form time maps of the flow between sections (leg j).
    Pt S_block(int j, const Pt& x) const;              // slow-region boundary map
    Pt Q_block(int j, const Pt& x) const;              // entry turn, perturbed
    Pt L_block(int j, double t, const Pt& x) const;    // saddle linearization, time t
    Pt T_block(int j, int s, const Pt& x) const;       // turn map with target term
    Pt T_unperturbed(int j, const Pt& x) const;        // turn map of the plain flow
    Pt G_block(int j, const Pt& x) const;              // exit map to the other leg
    Pt leg(int j, const Pt& x) const;                  // full leg composition

    // Window rescalings at the leg entry point.
    Pt rescale_in(int j, const Pt& v) const;
    Pt rescale_out(int j, const Pt& x) const;
    // Window rescalings around one interior turn (leg j, index s).
    Pt block_in(int j, int s, const Pt& v) const;
    Pt block_out(int j, int s, const Pt& x) const;

    // Prescribed targets in window coordinates.
    Pt target_henon(int j, int s, const Pt& v) const;
    Pt target_leg(int j, const Pt& v) const;

    // One interior turn in window coordinates vs its Hénon target.
    Pt single_block(int j, int s, const Pt& v) const;

    // Full two-leg cycle in window coordinates (start = 1 or 2) and its target.
    Pt cycle(int start, const Pt& v) const;
    Pt target_cycle(int start, const Pt& v) const;
};

// Solve all matching equations. Throws std::runtime_error when an invariant
// fails (index ranges, gamma in (0, 1], beta target out of range).
FlowScheme build_scheme(const std::array<int, 2>& q,
                        const std::vector<std::vector<std::vector<double>>>& h, int m, int d,
                        double K, const FlowConstants& fc = {});

// Independent checks of the closed-form blocks against direct integration of
// the defining slow-region field
//   x1' = -mu_j - (1-mu_j)(1 - bump(x1 - a)),  x2' = sigma gamma_j x2 bump(x1 - a)
// across the window [a - 1, a + 1], where a = a_{j,sigma}.
struct BlockCrossCheck {
    double transit_time = 0.0;      // measured by the ODE
    double transit_expected = 0.0;  // 2 + beta(mu_j)/2
    double multiplier = 0.0;        // measured x2 ratio
    double multiplier_expected = 0.0;  // exp(sigma gamma_j alpha(mu_j))
};

BlockCrossCheck cross_validate_block(const FlowScheme& fs, int j, int sigma,
                                     double x2_start = 0.1, double ode_tol = 1e-12);

}  // namespace mapkit
