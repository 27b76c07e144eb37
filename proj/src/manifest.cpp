#include "mapkit/manifest.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace mapkit {

namespace {

constexpr const char* kHeader = "mapkit-manifest 1";

std::map<std::string, NumericBuilder>& registry() {
    static std::map<std::string, NumericBuilder> r;
    return r;
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream is(line);
    std::string t;
    while (is >> t) toks.push_back(t);
    return toks;
}

}  // namespace

ManifestError::ManifestError(int line_, const std::string& what_)
    : std::runtime_error("manifest line " + std::to_string(line_) + ": " + what_),
      line(line_) {}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, int line_for_error) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ManifestError(line_for_error, "bad real '" + s + "'");
    return v;
}

void register_numeric_kind(const std::string& kind, NumericBuilder builder) {
    registry()[kind] = std::move(builder);
}

namespace {

void write_factor(std::ostream& out, const PrimitiveFactor& f) {
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, HenonLikeMap>) {
                out << "henon " << v.n << " " << v.h.terms.size();
                for (const Poly::Term& t : v.h.terms) {
                    out << " " << format_double(t.c);
                    for (int i = 0; i < v.n - 1; ++i) out << " " << (int)t.e[i];
                }
            } else if constexpr (std::is_same_v<T, Psi1Factor>) {
                out << "psi1 " << format_double(v.K);
            } else if constexpr (std::is_same_v<T, Psi2Factor>) {
                out << "psi2";
            } else if constexpr (std::is_same_v<T, Phi0Factor>) {
                out << "phi0 " << v.n;
            } else if constexpr (std::is_same_v<T, AffineFactor>) {
                int n = (int)v.A.rows();
                out << "affine " << n;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) out << " " << format_double(v.A(i, j));
                for (int i = 0; i < n; ++i) out << " " << format_double(v.b(i));
            } else {
                if (v.kind.empty())
                    throw std::runtime_error(
                        "cannot serialize a numeric factor without a kind");
                out << "numeric " << v.kind << " " << v.params.size();
                for (const auto& [k, val] : v.params) out << " " << k << " " << val;
            }
            out << "\n";
        },
        f);
}

PrimitiveFactor read_factor(const std::vector<std::string>& t, int ln) {
    std::size_t idx = 1;
    auto need = [&](std::size_t more) {
        if (t.size() < idx + more) throw ManifestError(ln, "truncated record");
    };
    auto next_int = [&]() {
        need(1);
        int v = 0;
        auto res = std::from_chars(t[idx].data(), t[idx].data() + t[idx].size(), v);
        if (res.ec != std::errc()) throw ManifestError(ln, "bad integer '" + t[idx] + "'");
        ++idx;
        return v;
    };
    auto next_real = [&]() {
        need(1);
        return parse_double(t[idx++], ln);
    };

    const std::string& tag = t[0];
    if (tag == "henon") {
        HenonLikeMap H;
        H.n = next_int();
        if (H.n < 2 || H.n > Poly::kMaxVars + 1) throw ManifestError(ln, "bad dimension");
        int nterms = next_int();
        H.h = Poly(H.n - 1);
        for (int k = 0; k < nterms; ++k) {
            Poly::Term term{next_real(), Poly::Expo{}};
            for (int i = 0; i < H.n - 1; ++i) {
                int e = next_int();
                if (e < 0 || e > 255) throw ManifestError(ln, "bad exponent");
                term.e[i] = (std::uint8_t)e;
            }
            H.h.terms.push_back(term);
        }
        H.h.normalize();
        return H;
    }
    if (tag == "psi1") {
        Psi1Factor p;
        p.K = next_real();
        return p;
    }
    if (tag == "psi2") return Psi2Factor{};
    if (tag == "phi0") {
        Phi0Factor p;
        p.n = next_int();
        return p;
    }
    if (tag == "affine") {
        AffineFactor a;
        int n = next_int();
        a.A.resize(n, n);
        a.b.resize(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a.A(i, j) = next_real();
        for (int i = 0; i < n; ++i) a.b(i) = next_real();
        return a;
    }
    if (tag == "numeric") {
        need(2);
        std::string kind = t[idx++];
        int nparams = next_int();
        std::map<std::string, std::string> params;
        for (int k = 0; k < nparams; ++k) {
            need(2);
            std::string key = t[idx++];
            params[key] = t[idx++];
        }
        auto it = registry().find(kind);
        if (it == registry().end())
            throw ManifestError(ln, "no builder registered for numeric kind '" + kind + "'");
        NumericFactor f = it->second(params);
        f.kind = kind;
        f.params = params;
        return f;
    }
    throw ManifestError(ln, "unknown factor tag '" + tag + "'");
}

}  // namespace

void save_manifest(const MapComposition& comp, std::ostream& out) {
    out << kHeader << "\n";
    out << "dim " << comp.n << "\n";
    if (!comp.provenance.empty()) out << "provenance " << comp.provenance << "\n";
    for (const auto& [k, v] : comp.meta) out << "meta " << k << " " << v << "\n";
    out << "factors " << comp.factors.size() << "\n";
    for (const PrimitiveFactor& f : comp.factors) write_factor(out, f);
}

void save_manifest(const MapComposition& comp, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    save_manifest(comp, out);
}

MapComposition load_manifest(std::istream& in) {
    MapComposition comp;
    std::string line;
    int ln = 0;
    auto next_line = [&]() {
        if (!std::getline(in, line)) throw ManifestError(ln, "unexpected end of file");
        ++ln;
    };
    next_line();
    if (line != kHeader) throw ManifestError(ln, "bad header '" + line + "'");

    long factor_count = -1;
    while (factor_count < 0) {
        next_line();
        auto toks = tokenize(line);
        if (toks.empty()) continue;
        if (toks[0] == "dim" && toks.size() == 2) {
            comp.n = std::stoi(toks[1]);
        } else if (toks[0] == "provenance") {
            comp.provenance = line.substr(line.find(' ') + 1);
        } else if (toks[0] == "meta" && toks.size() >= 2) {
            std::istringstream is(line);
            std::string tag, key;
            is >> tag >> key;
            std::string value;
            std::getline(is, value);
            if (!value.empty() && value.front() == ' ') value.erase(0, 1);
            comp.meta[key] = value;
        } else if (toks[0] == "factors" && toks.size() == 2) {
            factor_count = std::stol(toks[1]);
        } else {
            throw ManifestError(ln, "unexpected record '" + toks[0] + "'");
        }
    }
    for (long k = 0; k < factor_count; ++k) {
        next_line();
        auto toks = tokenize(line);
        if (toks.empty()) {
            --k;
            continue;
        }
        comp.factors.push_back(read_factor(toks, ln));
    }
    return comp;
}

MapComposition load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_manifest(in);
}

}  // namespace mapkit
