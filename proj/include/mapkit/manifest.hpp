#pragma once

// Plain-text manifests for factor compositions. One factor per line, all
// reals encoded as shortest round-trip decimal strings, so a save/load cycle
// is bit-exact and the files diff cleanly.

#include <functional>
#include <iosfwd>
#include <string>

#include "mapkit/factors.hpp"

namespace mapkit {

struct ManifestError : std::runtime_error {
    int line;
    ManifestError(int line_, const std::string& what_);
};

void save_manifest(const MapComposition& comp, std::ostream& out);
void save_manifest(const MapComposition& comp, const std::string& path);

MapComposition load_manifest(std::istream& in);
MapComposition load_manifest(const std::string& path);

// Numeric factors are serialized as (kind, params); a registered builder
// regenerates the wrapped maps on load. Unregistered kinds fail to load,
// numeric factors with an empty kind fail to save.
using NumericBuilder =
    std::function<NumericFactor(const std::map<std::string, std::string>&)>;
void register_numeric_kind(const std::string& kind, NumericBuilder builder);

// Shortest decimal string that parses back to exactly this double.
std::string format_double(double v);
double parse_double(const std::string& s, int line_for_error);

}  // namespace mapkit
