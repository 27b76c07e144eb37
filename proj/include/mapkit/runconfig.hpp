#pragma once

// Configuration and dispatch for the command line driver. A RunConfig is
// parsed from a JSON document, validated field by field, and executed; each
// command writes a CSV report whose rows repeat the parameters that produced
// them, so reports are self-describing and two runs with the same config and
// seed are byte-identical.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mapkit/field.hpp"
#include "mapkit/smooth_map.hpp"

namespace mapkit {

// Config rejection; `field` names the offending entry ("delta",
// "grid.per_axis", "N[2]", ...).
struct ConfigError : std::runtime_error {
    std::string field;
    ConfigError(std::string field_, const std::string& what_);
};

// Test objects addressable from configs by name.
//   maps:   identity, identity3, stretch, cubic, bend, wave3
//   fields: rotation, swirl
SmoothMap named_map(const std::string& name);
NonAutonomousField named_field(const std::string& name);
std::vector<std::string> named_map_list();
std::vector<std::string> named_field_list();

struct GridSpec {
    int per_axis = 21;     // tensor resolution per axis
    int random_count = 0;  // when > 0, a seeded random ball sample instead
    double radius = 1.0;
};

// Gates checked before exiting; entries left unset fall back to
// per-command defaults (see RunConfig::resolved_residual).
struct ToleranceSpec {
    std::optional<double> residual;
    double ratio_lo = 1.6;  // factorize convergence ratio bracket
    double ratio_hi = 2.4;
    double step_drift = 1e-8;  // normal-form conservation gates
    double long_drift = 1e-6;
    double modulus = 1e-6;
};

struct RunConfig {
    std::string command;

    // Input map: a named test map, or inline components as term lists
    // [[coef, [e1, ..., en]], ...] (one list per component).
    std::string map_name = "identity";
    std::vector<Poly> map_components;

    // Input field, same convention; exponent lists carry the trailing time
    // slot, so a field on n variables uses n + 1 exponents per term.
    std::string field_name = "rotation";
    std::vector<Poly> field_components;

    double delta = 0.05;  // flow-verify perturbation window width
    std::vector<int> n_list{8, 16, 32};
    std::vector<int> m_list;  // defaults per command when empty
    std::vector<int> k2_list{8, 16, 24};
    int degree = 6;      // emitted factor degree cap
    int fit_degree = 3;  // fitted generating field degree
    int tangency = 2;    // normal-form tuning order
    GridSpec grid;
    ToleranceSpec tol;
    std::uint64_t seed = 1;
    std::string output_dir = ".";
    std::string manifest_path;  // manifest command input (optional)

    void validate() const;  // throws ConfigError
    double resolved_residual() const;
    std::vector<int> resolved_m_list() const;

    SmoothMap input_map() const;
    NonAutonomousField input_field() const;
};

RunConfig parse_config(std::istream& in);
RunConfig parse_config_file(const std::string& path);

// Executes one command. Reports are written under cfg.output_dir (created
// when missing); one summary line per report plus PASS/FAIL gate lines go to
// `log`. Returns the exit status: 0 pass, 2 validation failure, 3 numeric
// thresholds missed.
int run(const RunConfig& cfg, std::ostream& log);

}  // namespace mapkit
