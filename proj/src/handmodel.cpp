#include "padfuse/handmodel.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "padfuse/default_hand_json.hpp"
#include "padfuse/error.hpp"
#include "padfuse/json_io.hpp"

namespace padfuse {

std::vector<Vector3> make_pad_grid(double half_length, double half_width, double edge_radius,
                                   double spacing) {
  if (!(spacing > 0.0) || edge_radius < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "pad spacing must be positive and edge radius >= 0");
  }
  // The epsilon absorbs round-off in e.g. (0.020 - 0.004) / 0.001.
  const auto count = [&](double half) {
    const double usable = 2.0 * half - 2.0 * edge_radius;
    if (usable < 0.0) return 0;
    return static_cast<int>(std::floor(usable / spacing + 1.0 + 1e-9));
  };
  const int nx = count(half_length);
  const int ny = count(half_width);
  if (nx < 1 || ny < 1) throw Error(ErrorCode::InvalidArgument, "pad too small for its edge radius");

  std::vector<Vector3> grid;
  grid.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      grid.emplace_back((i - 0.5 * (nx - 1)) * spacing, (j - 0.5 * (ny - 1)) * spacing, 0.0);
    }
  }
  return grid;
}

SensorPad make_pad(std::string name, const Pose& mount, double half_length, double half_width,
                   double edge_radius, double spacing) {
  SensorPad pad;
  pad.name = std::move(name);
  pad.mount = mount;
  pad.half_length = half_length;
  pad.half_width = half_width;
  pad.edge_radius = edge_radius;
  pad.spacing = spacing;
  pad.grid = make_pad_grid(half_length, half_width, edge_radius, spacing);
  return pad;
}

HandModel::HandModel(std::vector<Chain> chains, std::vector<SensorPad> pads)
    : chains_(std::move(chains)), pads_(std::move(pads)) {
  pad_links_.assign(pads_.size(), {-1, -1});
  for (std::size_t c = 0; c < chains_.size(); ++c) {
    joint_offsets_.push_back(dof_);
    for (std::size_t j = 0; j < chains_[c].joints.size(); ++j) {
      Joint& joint = chains_[c].joints[j];
      if (joint.axis.norm() < 1e-12) {
        throw Error(ErrorCode::InvalidArgument, "joint '" + joint.name + "' has a zero axis");
      }
      joint.axis.normalize();
      for (int k : joint.pads) {
        if (k < 0 || static_cast<std::size_t>(k) >= pads_.size()) {
          throw Error(ErrorCode::InvalidArgument, "joint '" + joint.name + "' references unknown pad");
        }
        if (pad_links_[k].first >= 0) {
          throw Error(ErrorCode::InvalidArgument, "pad '" + pads_[k].name + "' attached twice");
        }
        pad_links_[k] = {static_cast<int>(c), static_cast<int>(j)};
      }
      ++dof_;
    }
  }
  for (std::size_t k = 0; k < pads_.size(); ++k) {
    if (pad_links_[k].first < 0) {
      throw Error(ErrorCode::InvalidArgument, "pad '" + pads_[k].name + "' is not attached to a link");
    }
    if (pads_[k].grid.empty()) {
      pads_[k].grid = make_pad_grid(pads_[k].half_length, pads_[k].half_width, pads_[k].edge_radius,
                                    pads_[k].spacing);
    }
  }
}

HandModel HandModel::default_hand() { return from_json_text(kDefaultHandJson); }

HandModel HandModel::from_json_text(std::string_view text) {
  try {
    const Json j = Json::parse(text);
    std::vector<SensorPad> pads;
    for (const auto& p : j.at("pads")) {
      const auto& he = p.at("half_extents");
      pads.push_back(make_pad(p.at("name").get<std::string>(), pose_from_json(p.at("mount")),
                              he.at(0).get<double>(), he.at(1).get<double>(),
                              value_or(p, "edge_radius", 0.002), value_or(p, "spacing", 0.001)));
    }
    std::vector<Chain> chains;
    for (const auto& c : j.at("chains")) {
      Chain chain;
      chain.name = c.at("name").get<std::string>();
      chain.base = c.contains("base") ? pose_from_json(c.at("base")) : Pose::identity();
      for (const auto& jj : c.at("joints")) {
        Joint joint;
        joint.name = jj.at("name").get<std::string>();
        joint.axis = vector3_from_json(jj.at("axis"));
        joint.offset = jj.contains("offset") ? pose_from_json(jj.at("offset")) : Pose::identity();
        joint.pads = value_or(jj, "pads", std::vector<int>{});
        chain.joints.push_back(std::move(joint));
      }
      chains.push_back(std::move(chain));
    }
    return HandModel(std::move(chains), std::move(pads));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("hand description: ") + e.what());
  }
}

HandModel HandModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open hand description " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string HandModel::to_json_text() const {
  Json pads = Json::array();
  for (const auto& p : pads_) {
    pads.push_back({{"name", p.name},
                    {"half_extents", {p.half_length, p.half_width}},
                    {"edge_radius", p.edge_radius},
                    {"spacing", p.spacing},
                    {"mount", pose_to_json(p.mount)}});
  }
  Json chains = Json::array();
  for (const auto& c : chains_) {
    Json joints = Json::array();
    for (const auto& j : c.joints) {
      joints.push_back({{"name", j.name},
                        {"axis", vector3_to_json(j.axis)},
                        {"offset", pose_to_json(j.offset)},
                        {"pads", j.pads}});
    }
    chains.push_back({{"name", c.name}, {"base", pose_to_json(c.base)}, {"joints", joints}});
  }
  return Json{{"pads", pads}, {"chains", chains}}.dump(2);
}

std::vector<Pose> forward_kinematics(const HandModel& hand, const JointConfig& q, const Pose& wrist) {
  if (static_cast<int>(q.size()) != hand.dof()) {
    throw Error(ErrorCode::DofMismatch, "expected " + std::to_string(hand.dof()) + " joint angles, got " +
                                            std::to_string(q.size()));
  }
  std::vector<Pose> out(hand.pad_count());
  int qi = 0;
  for (const Chain& chain : hand.chains()) {
    Pose link = wrist * chain.base;
    for (const Joint& joint : chain.joints) {
      link = link * joint.offset * Pose::from_rotation(Rotation::about_axis(joint.axis, q[qi++]));
      for (int k : joint.pads) out[k] = link * hand.pads()[k].mount;
    }
  }
  return out;
}

ContactPoint contact_point(const std::vector<Vector3>& grid_world, const Pose& object_pose,
                           const SdfField& sdf) {
  if (grid_world.empty()) throw Error(ErrorCode::InvalidArgument, "pad grid is empty");
  const Pose to_object = object_pose.inverse();
  ContactPoint best{grid_world.front(), std::numeric_limits<double>::infinity(), 0};
  for (std::size_t i = 0; i < grid_world.size(); ++i) {
    const double v = sdf.eval(to_object * grid_world[i]);
    if (v < best.sdf_value) best = {grid_world[i], v, i};
  }
  return best;
}

ContactPoint contact_point(const SensorPad& pad, const Pose& pad_pose, const Pose& object_pose,
                           const SdfField& sdf) {
  std::vector<Vector3> world;
  world.reserve(pad.grid.size());
  for (const auto& g : pad.grid) world.push_back(pad_pose * g);
  return contact_point(world, object_pose, sdf);
}

ContactVector synthesize_contacts(const HandModel& hand, const JointConfig& q,
                                  const Pose& object_pose, const SdfField& sdf, double threshold,
                                  const Pose& wrist) {
  if (threshold < 0.0) throw Error(ErrorCode::InvalidArgument, "contact threshold must be >= 0");
  const auto poses = forward_kinematics(hand, q, wrist);
  ContactVector y(hand.pad_count(), false);
  for (std::size_t k = 0; k < hand.pad_count(); ++k) {
    y[k] = contact_point(hand.pads()[k], poses[k], object_pose, sdf).sdf_value <= threshold;
  }
  return y;
}

}  // namespace padfuse
