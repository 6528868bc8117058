#include "padfuse/json_io.hpp"

#include "padfuse/error.hpp"

namespace padfuse {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ResolutionTooSmall: return "ResolutionTooSmall";
    case ErrorCode::DofMismatch: return "DofMismatch";
    case ErrorCode::NotInitialized: return "NotInitialized";
    case ErrorCode::RejectionExhausted: return "RejectionExhausted";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::EmptyModel: return "EmptyModel";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Json vector3_to_json(const Vector3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vector3 vector3_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::Parse, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json pose_to_json(const Pose& p) {
  const auto& q = p.rotation().quaternion();
  return Json{{"q", Json::array({q.w(), q.x(), q.y(), q.z()})},
              {"t", vector3_to_json(p.translation())}};
}

Pose pose_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, "pose must be an object");
  Rotation r;
  if (auto it = j.find("q"); it != j.end()) {
    if (!it->is_array() || it->size() != 4) throw Error(ErrorCode::Parse, "pose.q must have 4 entries");
    r = Rotation((*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>(),
                 (*it)[3].get<double>());
  }
  Vector3 t = Vector3::Zero();
  if (auto it = j.find("t"); it != j.end()) t = vector3_from_json(*it);
  return {r, t};
}

Json twist_to_json(const Twist& t) {
  Json out = Json::array();
  for (int i = 0; i < 6; ++i) out.push_back(t[i]);
  return out;
}

Json shape_to_json(const Shape& s) {
  return std::visit(
      Overloaded{
          [](const Sphere& v) { return Json{{"type", "sphere"}, {"radius", v.radius}}; },
          [](const Box& v) {
            return Json{{"type", "box"}, {"half_extents", vector3_to_json(v.half_extents)}};
          },
          [](const RoundedBox& v) {
            return Json{{"type", "rounded_box"},
                        {"half_extents", vector3_to_json(v.half_extents)},
                        {"edge_radius", v.edge_radius}};
          },
          [](const Cylinder& v) {
            return Json{{"type", "cylinder"}, {"radius", v.radius}, {"half_height", v.half_height}};
          },
      },
      s);
}

Shape shape_from_json(const Json& j) {
  const auto type = j.at("type").get<std::string>();
  Shape out;
  if (type == "sphere") {
    out = Sphere{j.at("radius").get<double>()};
  } else if (type == "box") {
    out = Box{vector3_from_json(j.at("half_extents"))};
  } else if (type == "rounded_box") {
    out = RoundedBox{vector3_from_json(j.at("half_extents")), j.at("edge_radius").get<double>()};
  } else if (type == "cylinder") {
    out = Cylinder{j.at("radius").get<double>(), j.at("half_height").get<double>()};
  } else {
    throw Error(ErrorCode::Parse, "unknown shape type '" + type + "'");
  }
  validate_shape(out);
  return out;
}

std::string shape_name(const Shape& s) {
  return std::visit(Overloaded{
                        [](const Sphere&) { return std::string("sphere"); },
                        [](const Box&) { return std::string("box"); },
                        [](const RoundedBox&) { return std::string("rounded_box"); },
                        [](const Cylinder&) { return std::string("cylinder"); },
                    },
                    s);
}

}  // namespace padfuse
