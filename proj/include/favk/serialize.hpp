#pragma once

#include <json.hpp>

#include "favk/chamfer_em.hpp"
#include "favk/geometry.hpp"
#include "favk/morph.hpp"
#include "favk/synth.hpp"

// JSON interchange for every structured file format the CLI reads or writes.
// All reports carry a format-version string and echo their resolved config.

namespace favk {

inline constexpr const char* kFormatVersion = "fa-vesselkit/1";

nlohmann::json transform_to_json(const TransformParams& t);
TransformParams transform_from_json(const nlohmann::json& j);

nlohmann::json morph_params_to_json(const MorphParams& p);
MorphParams morph_params_from_json(const nlohmann::json& j);

nlohmann::json em_config_to_json(const EmConfig& cfg);
EmConfig em_config_from_json(const nlohmann::json& j);

nlohmann::json phantom_spec_to_json(const PhantomSpec& spec);
PhantomSpec phantom_spec_from_json(const nlohmann::json& j);

nlohmann::json warp_spec_to_json(const WarpSpec& spec);
WarpSpec warp_spec_from_json(const nlohmann::json& j);

nlohmann::json registration_report_to_json(const RegistrationReport& report,
                                           const EmConfig& cfg);

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const nlohmann::json& j, const std::string& path);

void save_points_csv(const PointSet& points, const std::string& path);
PointSet load_points_csv(const std::string& path);

}  // namespace favk
