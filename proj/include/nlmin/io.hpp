#pragma once

#include <string>

#include "json.hpp"
#include "nlmin/energy.hpp"
#include "nlmin/geometry.hpp"
#include "nlmin/measures.hpp"
#include "nlmin/optimize.hpp"

namespace nlmin {

using Json = nlohmann::json;

Json to_json(const ClusterReport& r);
Json to_json(const ELReport& r);
Json to_json(const DiameterBoundReport& r);
Json to_json(const Classification& c);
Json to_json(const ConfinementReport& r);
Json to_json(const SecondDerivativeRatioReport& r);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// CSV with header x0,..,x{N-1},weight; values printed round-trip exact.
void write_measure_csv(const std::string& path, const DiscreteMeasure& mu);
DiscreteMeasure read_measure_csv(const std::string& path);

/// Raw little-endian float64 values at `stem`.bin plus a JSON sidecar `stem`.json.
void write_density(const std::string& stem, const GridDensity& f);
GridDensity read_density(const std::string& stem);

/// JSON {dim, dr, values} at `stem`.json and a plot CSV (r,value) at `stem`.csv.
void write_radial(const std::string& stem, const RadialProfile& p);
RadialProfile read_radial(const std::string& stem);

void write_trace_csv(const std::string& path, const OptimizeTrace& t);

}  // namespace nlmin
