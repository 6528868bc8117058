#pragma once

// JSON conversions for the value types that cross file boundaries.

#include <json.hpp>

#include "padfuse/liegroup.hpp"
#include "padfuse/sdf.hpp"

namespace padfuse {

using Json = nlohmann::json;

/// {"q":[w,x,y,z],"t":[x,y,z]}
Json pose_to_json(const Pose& p);
Pose pose_from_json(const Json& j);

Json vector3_to_json(const Vector3& v);
Vector3 vector3_from_json(const Json& j);

Json twist_to_json(const Twist& t);

/// {"type":"sphere","radius":r} | {"type":"box","half_extents":[..]} |
/// {"type":"rounded_box","half_extents":[..],"edge_radius":r} |
/// {"type":"cylinder","radius":r,"half_height":h}
Json shape_to_json(const Shape& s);
Shape shape_from_json(const Json& j);
std::string shape_name(const Shape& s);

/// Reads `key` from `j` if present, else returns `fallback`.
template <class T>
T value_or(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->template get<T>();
}

}  // namespace padfuse
