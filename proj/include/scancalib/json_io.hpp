#pragma once

#include "json.hpp"

#include "scancalib/geometry.hpp"
#include "scancalib/scanner_sim.hpp"

namespace scancalib {

using Json = nlohmann::json;

Json json_of(const Vec3& v);
Vec3 vec3_from_json(const Json& j);

// Rotations serialize as a flat 9-element row-major array.
Json json_of(const Rotation3& r);
Rotation3 rotation_from_json(const Json& j);

// Transforms serialize as {"rotation": [..9 row-major..], "translation": [x,y,z]}.
Json json_of(const RigidTransform& h);
RigidTransform transform_from_json(const Json& j);

Json json_of(const SensorModel& s);
SensorModel sensor_from_json(const Json& j);

}  // namespace scancalib
