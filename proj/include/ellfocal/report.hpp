#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "ellfocal/acceptance.hpp"
#include "ellfocal/focal.hpp"
#include "ellfocal/geodesic.hpp"
#include "ellfocal/rosochatius.hpp"

namespace ellfocal {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
std::string version_string();

Json to_json(const Vec& v);
Json to_json(const IntegratorOptions& o);
Json to_json(const GridOptions& g);
Json to_json(const ScanReport& r);
Json to_json(const std::vector<ReturnMapSample>& samples);
Json to_json(const TwistReport& r);
Json to_json(const UmbilicPoints& u);
Json to_json(const MomentConstancyReport& r);
Json to_json(const ExperimentReport& r);
Json to_json(const Measurement& m);
Json to_json(const CriterionResult& r);

/// Values that are not finite become null; everything else is a number.
Json number(double v);

/// Wraps a report body: schema_version, version, command, the config echo,
/// the seeds and the tolerance table.
Json envelope(const std::string& command, const Json& config, const Json& seeds, const Json& tolerances,
              const Json& body);

/// Per-direction scan table: direction_index, returned, representative_time,
/// miss_distance, angular_deviation, integration_failed.
void write_scan_csv(std::ostream& os, const ScanReport& r);

/// direction_index, angle (circle grids, else empty), angular_deviation,
/// return_time, miss_distance, flagged.
void write_return_map_csv(std::ostream& os, const Ellipsoid& e, const Vec& x0,
                          const std::vector<ReturnMapSample>& samples);

}  // namespace ellfocal
