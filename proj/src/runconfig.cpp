#include "mapkit/runconfig.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "mapkit/factorize.hpp"
#include "mapkit/flow_scheme.hpp"
#include "mapkit/manifest.hpp"
#include "mapkit/normal_form.hpp"
#include "mapkit/pipeline.hpp"
#include "mapkit/saddle.hpp"
#include "mapkit/voldecomp.hpp"

namespace mapkit {

using nlohmann::json;

ConfigError::ConfigError(std::string field_, const std::string& what_)
    : std::runtime_error(what_), field(std::move(field_)) {}

// ---------------------------------------------------------------------------
// Named test objects.

SmoothMap named_map(const std::string& name) {
    const Poly x = Poly::var(2, 0), y = Poly::var(2, 1);
    if (name == "identity") return SmoothMap::identity(2);
    if (name == "identity3") return SmoothMap::identity(3);
    if (name == "stretch") return SmoothMap::from_polys({x, y + 0.1 * (x * y)});
    if (name == "cubic")
        return SmoothMap::from_polys({x + 0.02 * (y * y * y), y - 0.02 * (x * x * x)});
    if (name == "bend")
        return SmoothMap::from_polys(
            {x + Poly::monomial(2, 0.2, {0, 2}), y + Poly::monomial(2, 0.1, {2, 0})});
    if (name == "wave3") {
        const Poly u = Poly::var(3, 0), v = Poly::var(3, 1), w = Poly::var(3, 2);
        return SmoothMap::from_polys({u + 0.05 * (v * v), v + 0.05 * (w * w),
                                      w + 0.05 * (u * u)});
    }
    throw ConfigError("map.name", "unknown map '" + name + "'");
}

NonAutonomousField named_field(const std::string& name) {
    if (name == "rotation") {
        NonAutonomousField X = NonAutonomousField::zero(2);
        X.xi[0] = Poly::var(3, 1).scaled(-1.0);
        X.xi[1] = Poly::var(3, 0);
        return X;
    }
    if (name == "swirl") {
        NonAutonomousField X = NonAutonomousField::zero(3);
        const Poly t = Poly::var(4, 3);
        const Poly ramp = Poly::constant(4, 1.0) + t.scaled(0.5);
        X.xi[0] = Poly::var(4, 1) * ramp + Poly::var(4, 2).pow(2).scaled(0.2);
        X.xi[1] = Poly::var(4, 0) * ramp.scaled(-1.0);
        X.xi[2] = (Poly::var(4, 0) * Poly::var(4, 1)).scaled(0.3);
        return X;
    }
    throw ConfigError("field.name", "unknown field '" + name + "'");
}

std::vector<std::string> named_map_list() {
    return {"identity", "identity3", "stretch", "cubic", "bend", "wave3"};
}

std::vector<std::string> named_field_list() { return {"rotation", "swirl"}; }

// ---------------------------------------------------------------------------
// Parsing.

namespace {

double need_number(const json& v, const std::string& field) {
    if (!v.is_number()) throw ConfigError(field, "expected a number");
    return v.get<double>();
}

int need_int(const json& v, const std::string& field) {
    if (!v.is_number_integer()) throw ConfigError(field, "expected an integer");
    return v.get<int>();
}

std::string need_string(const json& v, const std::string& field) {
    if (!v.is_string()) throw ConfigError(field, "expected a string");
    return v.get<std::string>();
}

std::vector<int> need_int_list(const json& v, const std::string& field) {
    if (!v.is_array() || v.empty()) throw ConfigError(field, "expected a non-empty list");
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(need_int(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

Poly parse_poly(const json& comp, int nv, const std::string& field) {
    if (!comp.is_array())
        throw ConfigError(field, "expected a list of [coef, [exponents]] terms");
    Poly p = Poly::zero(nv);
    for (std::size_t t = 0; t < comp.size(); ++t) {
        const std::string where = field + "[" + std::to_string(t) + "]";
        const json& term = comp[t];
        if (!term.is_array() || term.size() != 2 || !term[0].is_number() ||
            !term[1].is_array())
            throw ConfigError(where, "expected [coef, [exponents]]");
        if (static_cast<int>(term[1].size()) != nv)
            throw ConfigError(where, "expected " + std::to_string(nv) + " exponents");
        std::vector<int> exps;
        for (std::size_t k = 0; k < term[1].size(); ++k) {
            const int e = need_int(term[1][k], where + ".exponents");
            if (e < 0) throw ConfigError(where + ".exponents", "exponents must be >= 0");
            exps.push_back(e);
        }
        p = p + Poly::monomial(nv, term[0].get<double>(), exps);
    }
    return p;
}

void parse_map_spec(const json& v, RunConfig& cfg) {
    if (!v.is_object()) throw ConfigError("map", "expected an object");
    bool has_name = false, has_comps = false;
    for (const auto& [key, val] : v.items()) {
        if (key == "name") {
            cfg.map_name = need_string(val, "map.name");
            has_name = true;
        } else if (key == "components") {
            if (!val.is_array() || val.empty())
                throw ConfigError("map.components", "expected a non-empty list");
            const int n = static_cast<int>(val.size());
            for (int i = 0; i < n; ++i)
                cfg.map_components.push_back(
                    parse_poly(val[i], n, "map.components[" + std::to_string(i) + "]"));
            has_comps = true;
        } else {
            throw ConfigError("map." + key, "unknown field");
        }
    }
    if (has_name && has_comps)
        throw ConfigError("map", "give either name or components, not both");
}

void parse_field_spec(const json& v, RunConfig& cfg) {
    if (!v.is_object()) throw ConfigError("field", "expected an object");
    bool has_name = false, has_comps = false;
    for (const auto& [key, val] : v.items()) {
        if (key == "name") {
            cfg.field_name = need_string(val, "field.name");
            has_name = true;
        } else if (key == "components") {
            if (!val.is_array() || val.empty())
                throw ConfigError("field.components", "expected a non-empty list");
            const int n = static_cast<int>(val.size());
            for (int i = 0; i < n; ++i)
                cfg.field_components.push_back(parse_poly(
                    val[i], n + 1, "field.components[" + std::to_string(i) + "]"));
            has_comps = true;
        } else {
            throw ConfigError("field." + key, "unknown field");
        }
    }
    if (has_name && has_comps)
        throw ConfigError("field", "give either name or components, not both");
}

void parse_grid_spec(const json& v, GridSpec& grid) {
    if (!v.is_object()) throw ConfigError("grid", "expected an object");
    for (const auto& [key, val] : v.items()) {
        if (key == "per_axis")
            grid.per_axis = need_int(val, "grid.per_axis");
        else if (key == "random")
            grid.random_count = need_int(val, "grid.random");
        else if (key == "radius")
            grid.radius = need_number(val, "grid.radius");
        else
            throw ConfigError("grid." + key, "unknown field");
    }
}

void parse_tolerances(const json& v, ToleranceSpec& tol) {
    if (!v.is_object()) throw ConfigError("tolerances", "expected an object");
    for (const auto& [key, val] : v.items()) {
        if (key == "residual")
            tol.residual = need_number(val, "tolerances.residual");
        else if (key == "ratio_lo")
            tol.ratio_lo = need_number(val, "tolerances.ratio_lo");
        else if (key == "ratio_hi")
            tol.ratio_hi = need_number(val, "tolerances.ratio_hi");
        else if (key == "step_drift")
            tol.step_drift = need_number(val, "tolerances.step_drift");
        else if (key == "long_drift")
            tol.long_drift = need_number(val, "tolerances.long_drift");
        else if (key == "modulus")
            tol.modulus = need_number(val, "tolerances.modulus");
        else
            throw ConfigError("tolerances." + key, "unknown field");
    }
}

}  // namespace

RunConfig parse_config(std::istream& in) {
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("(document)", e.what());
    }
    if (!j.is_object()) throw ConfigError("(document)", "config must be a JSON object");

    RunConfig cfg;
    for (const auto& [key, val] : j.items()) {
        if (key == "command")
            cfg.command = need_string(val, "command");
        else if (key == "seed") {
            if (!val.is_number_integer() || val.get<long long>() < 0)
                throw ConfigError("seed", "expected a non-negative integer");
            cfg.seed = val.get<std::uint64_t>();
        } else if (key == "output")
            cfg.output_dir = need_string(val, "output");
        else if (key == "delta")
            cfg.delta = need_number(val, "delta");
        else if (key == "degree")
            cfg.degree = need_int(val, "degree");
        else if (key == "fit_degree")
            cfg.fit_degree = need_int(val, "fit_degree");
        else if (key == "tangency")
            cfg.tangency = need_int(val, "tangency");
        else if (key == "N")
            cfg.n_list = need_int_list(val, "N");
        else if (key == "m")
            cfg.m_list = need_int_list(val, "m");
        else if (key == "k2")
            cfg.k2_list = need_int_list(val, "k2");
        else if (key == "manifest")
            cfg.manifest_path = need_string(val, "manifest");
        else if (key == "grid")
            parse_grid_spec(val, cfg.grid);
        else if (key == "tolerances")
            parse_tolerances(val, cfg.tol);
        else if (key == "map")
            parse_map_spec(val, cfg);
        else if (key == "field")
            parse_field_spec(val, cfg);
        else
            throw ConfigError(key, "unknown config field");
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("(document)", "cannot open config file '" + path + "'");
    return parse_config(in);
}

// ---------------------------------------------------------------------------
// Validation and input resolution.

void RunConfig::validate() const {
    static const std::vector<std::string> commands{
        "decompose", "factorize",  "approximate", "flow-verify",
        "return-map", "normal-form", "manifest"};
    if (command.empty()) throw ConfigError("command", "missing command");
    if (std::find(commands.begin(), commands.end(), command) == commands.end())
        throw ConfigError("command", "unknown command '" + command + "'");

    if (!(delta > 0.0) || delta >= 1.0)
        throw ConfigError("delta", "delta must be in (0, 1)");

    if (n_list.empty()) throw ConfigError("N", "must not be empty");
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        if (n_list[i] < 1)
            throw ConfigError("N[" + std::to_string(i) + "]", "must be >= 1");
        if (i > 0 && n_list[i] <= n_list[i - 1])
            throw ConfigError("N[" + std::to_string(i) + "]",
                              "slab counts must be strictly increasing");
    }

    for (std::size_t i = 0; i < m_list.size(); ++i) {
        const std::string field = "m[" + std::to_string(i) + "]";
        if (m_list[i] < 1) throw ConfigError(field, "must be >= 1");
        if (command == "return-map" && m_list[i] > 2)
            throw ConfigError(field, "return-map ships parameter sets for m in {1, 2}");
        if (command == "flow-verify" && m_list[i] < 2)
            throw ConfigError(field, "flow-verify needs m >= 2");
        if (i > 0 && m_list[i] <= m_list[i - 1])
            throw ConfigError(field, "m values must be strictly increasing");
    }

    for (std::size_t i = 0; i < k2_list.size(); ++i) {
        const std::string field = "k2[" + std::to_string(i) + "]";
        if (k2_list[i] < 4 || k2_list[i] % 2 != 0)
            throw ConfigError(field, "k2 must be even and >= 4");
        if (i > 0 && k2_list[i] <= k2_list[i - 1])
            throw ConfigError(field, "k2 values must be strictly increasing");
    }
    if (k2_list.empty()) throw ConfigError("k2", "must not be empty");

    if (degree < 1 || degree > 12) throw ConfigError("degree", "must be in [1, 12]");
    if (fit_degree < 1 || fit_degree > 6)
        throw ConfigError("fit_degree", "must be in [1, 6]");
    if (tangency < 1 || tangency > 4) throw ConfigError("tangency", "must be in [1, 4]");

    if (grid.random_count < 0) throw ConfigError("grid.random", "must be >= 0");
    if (grid.random_count == 0 && grid.per_axis < 2)
        throw ConfigError("grid.per_axis", "must be >= 2");
    if (!(grid.radius > 0.0)) throw ConfigError("grid.radius", "must be positive");

    if (tol.residual && !(*tol.residual > 0.0))
        throw ConfigError("tolerances.residual", "must be positive");
    if (!(tol.ratio_lo > 0.0) || !(tol.ratio_hi > tol.ratio_lo))
        throw ConfigError("tolerances.ratio_lo", "need 0 < ratio_lo < ratio_hi");
    if (!(tol.step_drift > 0.0))
        throw ConfigError("tolerances.step_drift", "must be positive");
    if (!(tol.long_drift > 0.0))
        throw ConfigError("tolerances.long_drift", "must be positive");
    if (!(tol.modulus > 0.0)) throw ConfigError("tolerances.modulus", "must be positive");

    if (output_dir.empty()) throw ConfigError("output", "must not be empty");

    // Resolve names early so a typo is a validation error, not a crash later.
    if (map_components.empty()) (void)named_map(map_name);
    if (field_components.empty()) (void)named_field(field_name);
}

double RunConfig::resolved_residual() const {
    if (tol.residual) return *tol.residual;
    if (command == "approximate") return 0.05;
    if (command == "return-map") return 1e-2;
    return 1e-5;
}

std::vector<int> RunConfig::resolved_m_list() const {
    if (!m_list.empty()) return m_list;
    if (command == "flow-verify") return {6, 8, 10};
    return {1, 2};
}

SmoothMap RunConfig::input_map() const {
    if (map_components.empty()) return named_map(map_name);
    return SmoothMap::from_polys(map_components);
}

NonAutonomousField RunConfig::input_field() const {
    if (field_components.empty()) return named_field(field_name);
    NonAutonomousField X;
    X.n = static_cast<int>(field_components.size());
    X.xi = field_components;
    return X;
}

// ---------------------------------------------------------------------------
// Command execution.

namespace {

namespace fs = std::filesystem;

std::string error_record(const std::string& code, const std::string& field,
                         const std::string& message) {
    json rec;
    rec["error"]["code"] = code;
    rec["error"]["field"] = field;
    rec["error"]["message"] = message;
    return rec.dump();
}

std::string map_label(const RunConfig& cfg) {
    return cfg.map_components.empty() ? cfg.map_name : "inline";
}

std::string field_label(const RunConfig& cfg) {
    return cfg.field_components.empty() ? cfg.field_name : "inline";
}

SampleGrid make_grid(const RunConfig& cfg, int dim) {
    if (cfg.grid.random_count > 0)
        return SampleGrid::random_ball(dim, cfg.grid.random_count, cfg.grid.radius,
                                       cfg.seed);
    return SampleGrid::tensor(dim, cfg.grid.per_axis, cfg.grid.radius);
}

std::string write_report(const RunConfig& cfg, const std::string& name,
                         const std::string& content, std::size_t rows,
                         std::ostream& log) {
    fs::create_directories(cfg.output_dir);
    const std::string path = (fs::path(cfg.output_dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report '" + path + "'");
    out << content;
    out.close();
    log << "wrote " << path << " (" << rows << " rows)\n";
    return path;
}

std::vector<double> linspace(double a, double b, int count) {
    std::vector<double> v(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        v[static_cast<std::size_t>(i)] = a + (b - a) * i / (count - 1);
    return v;
}

bool run_decompose(const RunConfig& cfg, std::ostream& log) {
    const SmoothMap F = cfg.input_map();
    const SampleGrid grid = make_grid(cfg, F.n);
    const SpecialDecomposition dec = special_decompose(F, grid);

    std::ostringstream csv;
    csv << "map,radius,K";
    for (int i = 0; i < dec.n; ++i) csv << ",x" << i + 1;
    csv << ",residual,det_defect\n";
    for (const DecompositionRow& r : dec.rows) {
        csv << map_label(cfg) << "," << format_double(cfg.grid.radius) << ","
            << format_double(dec.K);
        for (double c : r.point) csv << "," << format_double(c);
        csv << "," << format_double(r.residual) << "," << format_double(r.det_defect)
            << "\n";
    }
    write_report(cfg, "decompose.csv", csv.str(), dec.rows.size(), log);

    const double gate = cfg.resolved_residual();
    const bool pass = dec.residual < gate && dec.det_defect < gate;
    log << (pass ? "PASS" : "FAIL") << " decompose: residual "
        << format_double(dec.residual) << ", det defect " << format_double(dec.det_defect)
        << ", gate " << format_double(gate) << "\n";
    return pass;
}

bool run_factorize(const RunConfig& cfg, std::ostream& log) {
    const NonAutonomousField X = cfg.input_field();
    const SampleGrid grid = make_grid(cfg, X.n);

    std::ostringstream csv;
    csv << "field,radius,N,factor_count,max_degree,error,ratio\n";
    std::vector<double> errors;
    bool ratios_ok = true;
    for (int N : cfg.n_list) {
        FactorizeReport rep;
        factorize(X, N, grid, 1e-12, &rep);
        csv << field_label(cfg) << "," << format_double(cfg.grid.radius) << "," << N << ","
            << rep.factor_count << "," << rep.max_degree << ","
            << format_double(rep.error) << ",";
        if (!errors.empty()) {
            const double ratio = errors.back() / rep.error;
            csv << format_double(ratio);
            if (ratio < cfg.tol.ratio_lo || ratio > cfg.tol.ratio_hi) ratios_ok = false;
        }
        csv << "\n";
        errors.push_back(rep.error);
    }
    write_report(cfg, "factorize.csv", csv.str(), cfg.n_list.size(), log);

    log << (ratios_ok ? "PASS" : "FAIL") << " factorize: convergence ratios within ["
        << format_double(cfg.tol.ratio_lo) << ", " << format_double(cfg.tol.ratio_hi)
        << "]\n";
    return ratios_ok;
}

bool run_approximate(const RunConfig& cfg, std::ostream& log) {
    const SmoothMap F = cfg.input_map();
    const SampleGrid grid = make_grid(cfg, F.n);
    PipelineBudget budget;
    budget.N = cfg.n_list.back();
    budget.degree = cfg.degree;
    budget.fit_degree = cfg.fit_degree;
    const PipelineResult res = approximate_pipeline(F, grid, budget);

    std::ostringstream csv;
    csv << "map,budget_N,degree,fit_degree,stage,N,factor_count,max_degree,error\n";
    std::size_t rows = 0;
    const std::string prefix = map_label(cfg) + "," + std::to_string(budget.N) + "," +
                               std::to_string(budget.degree) + "," +
                               std::to_string(budget.fit_degree) + ",";
    for (const PipelineRow& r : res.table) {
        csv << prefix << r.stage << "," << r.N << "," << r.factor_count << ","
            << r.max_degree << "," << format_double(r.error) << "\n";
        ++rows;
    }
    csv << prefix << "total," << budget.N << "," << res.composition.size() << ","
        << budget.degree << "," << format_double(res.residual_c0) << "\n";
    ++rows;
    write_report(cfg, "approximate.csv", csv.str(), rows, log);

    const double gate = cfg.resolved_residual();
    const bool pass = res.residual_c0 < gate;
    log << (pass ? "PASS" : "FAIL") << " approximate: C0 residual "
        << format_double(res.residual_c0) << ", gate " << format_double(gate) << "\n";
    return pass;
}

bool run_flow_verify(const RunConfig& cfg, std::ostream& log) {
    // Fixed one-target-per-leg schedule with gentle degree-1 targets; the
    // sweep shows the window error shrinking with the transit scale m.
    const std::array<int, 2> q{1, 1};
    const std::vector<std::vector<std::vector<double>>> h = {{{0.02, -0.05}},
                                                             {{0.01, 0.03}}};
    FlowConstants fc;
    fc.delta = cfg.delta;
    const std::vector<double> window = linspace(-1.0, 1.0, 9);

    std::ostringstream csv;
    csv << "m,d,K,delta,eta,k,mu1,mu2,gamma1,gamma2,max_eps,block1,block2\n";
    std::vector<double> eps_hist, b1_hist, b2_hist;
    for (int m : cfg.resolved_m_list()) {
        const FlowScheme fsch = build_scheme(q, h, m, 1, 0.5, fc);
        double max_eps = 0.0;
        for (const auto& leg : fsch.par.eps)
            for (const auto& tgt : leg)
                for (double e : tgt) max_eps = std::max(max_eps, std::abs(e));
        double b1 = 0.0, b2 = 0.0;
        for (double a : window)
            for (double b : window)
                for (int j : {1, 2}) {
                    const Pt got = fsch.single_block(j, 1, {a, b});
                    const Pt tgt = fsch.target_henon(j, 1, {a, b});
                    const double d =
                        std::max(std::abs(got[0] - tgt[0]), std::abs(got[1] - tgt[1]));
                    (j == 1 ? b1 : b2) = std::max(j == 1 ? b1 : b2, d);
                }
        csv << m << ",1," << format_double(0.5) << "," << format_double(cfg.delta) << ","
            << format_double(fsch.par.eta) << "," << fsch.par.k << ","
            << format_double(fsch.par.mu[0]) << "," << format_double(fsch.par.mu[1]) << ","
            << format_double(fsch.par.gamma[0]) << "," << format_double(fsch.par.gamma[1])
            << "," << format_double(max_eps) << "," << format_double(b1) << ","
            << format_double(b2) << "\n";
        eps_hist.push_back(max_eps);
        b1_hist.push_back(b1);
        b2_hist.push_back(b2);
    }
    write_report(cfg, "flow_verify.csv", csv.str(), eps_hist.size(), log);

    bool decreasing = true;
    for (std::size_t i = 1; i < eps_hist.size(); ++i)
        if (eps_hist[i] >= eps_hist[i - 1] || b1_hist[i] >= b1_hist[i - 1] ||
            b2_hist[i] >= b2_hist[i - 1])
            decreasing = false;
    log << (decreasing ? "PASS" : "FAIL")
        << " flow-verify: perturbation sizes and window errors decrease with m\n";
    return decreasing;
}

bool run_return_map(const RunConfig& cfg, std::ostream& log) {
    const SaddleModel s = shipped_saddles();
    const double gate = cfg.resolved_residual();

    std::ostringstream csv;
    csv << "m,k2,k1,J1,J2,theta0,sup_distance\n";
    std::size_t rows = 0;
    bool pass = true;
    for (int m : cfg.resolved_m_list()) {
        const TransitionMaps t = shipped_transitions(m);
        double prev = 0.0;
        for (std::size_t i = 0; i < cfg.k2_list.size(); ++i) {
            const RescaledParams par = shipped_rescaling(m, cfg.k2_list[i]);
            const RescaledReturn rr = rescale_return(s, t, par);
            const double sup = rr.sup_distance();
            csv << m << "," << par.k2 << "," << par.k1() << "," << format_double(s.J1())
                << "," << format_double(s.J2()) << ","
                << format_double(par.theta0.convert_to<double>()) << ","
                << format_double(sup) << "\n";
            ++rows;
            if (i > 0 && sup >= prev) pass = false;
            if (i + 1 == cfg.k2_list.size() && sup >= gate) pass = false;
            prev = sup;
        }
    }
    write_report(cfg, "return_map.csv", csv.str(), rows, log);

    log << (pass ? "PASS" : "FAIL")
        << " return-map: sup distance decreasing in k2 and below "
        << format_double(gate) << " at k2 = " << cfg.k2_list.back() << "\n";
    return pass;
}

bool run_normal_form(const RunConfig& cfg, std::ostream& log) {
    const int m = cfg.tangency;
    const RetsFamily family = [&](const std::vector<double>& e) {
        return conservative_test_family(e, std::max(2, m + 1));
    };
    const TuneResult tune = conservative_tune(family, m);
    EllipticOptions opts;
    opts.step_tol = cfg.tol.step_drift;
    opts.long_tol = cfg.tol.long_drift;
    opts.modulus_tol = cfg.tol.modulus;
    const EllipticReport rep = elliptic_check(tune.psi_cons, opts);

    std::ostringstream csv;
    csv << "family,m,kind,index,value\n";
    std::size_t rows = 0;
    const std::string prefix = "shipped," + std::to_string(m) + ",";
    const auto emit = [&](const std::string& kind, int index, double value) {
        csv << prefix << kind << "," << index << "," << format_double(value) << "\n";
        ++rows;
    };
    for (std::size_t i = 0; i < tune.ehat.size(); ++i)
        emit("ehat", static_cast<int>(i), tune.ehat[i]);
    emit("s", 0, tune.s);
    emit("iterations", 0, tune.iterations);
    emit("residual", 0, tune.residual);
    for (std::size_t i = 0; i < tune.psi0.size(); ++i)
        emit("psi0", static_cast<int>(i), tune.psi0[i]);
    for (std::size_t i = 0; i < tune.psi1.size(); ++i)
        emit("psi1", static_cast<int>(i), tune.psi1[i]);
    for (std::size_t i = 0; i < tune.psi_cons.size(); ++i)
        emit("Psi", static_cast<int>(i), tune.psi_cons[i]);
    emit("multiplier_re", 0, rep.multipliers[0].real());
    emit("multiplier_im", 0, rep.multipliers[0].imag());
    emit("multiplier_re", 1, rep.multipliers[1].real());
    emit("multiplier_im", 1, rep.multipliers[1].imag());
    emit("step_drift", 0, rep.step_drift);
    emit("long_drift", 0, rep.long_drift);
    emit("modulus_error", 0, rep.modulus_error);
    write_report(cfg, "normal_form.csv", csv.str(), rows, log);

    const bool pass = tune.converged && rep.pass;
    log << (pass ? "PASS" : "FAIL") << " normal-form: tuning "
        << (tune.converged ? "converged" : "did not converge") << ", conservation "
        << (rep.pass ? "holds" : "violated") << "\n";
    return pass;
}

bool run_manifest(const RunConfig& cfg, std::ostream& log) {
    MapComposition comp;
    std::string source;
    if (!cfg.manifest_path.empty()) {
        comp = load_manifest(cfg.manifest_path);
        source = cfg.manifest_path;
    } else {
        comp = factorize(cfg.input_field(), cfg.n_list.front(), SampleGrid{});
        source = field_label(cfg) + ":N=" + std::to_string(cfg.n_list.front());
    }

    std::ostringstream first;
    save_manifest(comp, first);
    fs::create_directories(cfg.output_dir);
    const std::string path = (fs::path(cfg.output_dir) / "manifest.txt").string();
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write manifest '" + path + "'");
        out << first.str();
    }
    log << "wrote " << path << " (" << comp.size() << " factors)\n";

    const MapComposition reloaded = load_manifest(path);
    std::ostringstream second;
    save_manifest(reloaded, second);
    const bool identical = first.str() == second.str();

    std::ostringstream csv;
    csv << "source,index,factor\n";
    for (std::size_t i = 0; i < comp.factors.size(); ++i)
        csv << source << "," << i << "," << factor_name(comp.factors[i]) << "\n";
    csv << source << "," << comp.size() << ",roundtrip=" << (identical ? "ok" : "mismatch")
        << "\n";
    write_report(cfg, "manifest_report.csv", csv.str(), comp.size() + 1, log);

    log << (identical ? "PASS" : "FAIL") << " manifest: save/load/save is "
        << (identical ? "byte-identical" : "not byte-identical") << "\n";
    return identical;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& log) {
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        log << error_record("validation", e.field, e.what()) << "\n";
        return 2;
    }
    try {
        bool pass = false;
        if (cfg.command == "decompose")
            pass = run_decompose(cfg, log);
        else if (cfg.command == "factorize")
            pass = run_factorize(cfg, log);
        else if (cfg.command == "approximate")
            pass = run_approximate(cfg, log);
        else if (cfg.command == "flow-verify")
            pass = run_flow_verify(cfg, log);
        else if (cfg.command == "return-map")
            pass = run_return_map(cfg, log);
        else if (cfg.command == "normal-form")
            pass = run_normal_form(cfg, log);
        else if (cfg.command == "manifest")
            pass = run_manifest(cfg, log);
        return pass ? 0 : 3;
    } catch (const ConfigError& e) {
        log << error_record("validation", e.field, e.what()) << "\n";
        return 2;
    } catch (const ManifestError& e) {
        log << error_record("validation", "manifest", e.what()) << "\n";
        return 2;
    } catch (const std::exception& e) {
        log << error_record("validation", "", e.what()) << "\n";
        return 2;
    }
}

}  // namespace mapkit
