#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "padfuse/liegroup.hpp"
#include "padfuse/sdf.hpp"

namespace padfuse {

/// Joint angles in radians, one per degree of freedom.
using JointConfig = std::vector<double>;
/// One binary contact flag per sensor pad.
using ContactVector = std::vector<bool>;

/**
 * Rectangular tactile pad. The sensing face lies in the pad frame's xy-plane
 * with outward normal +z. Candidate contact points form a regular grid that
 * keeps clear of the rounded pad edges.
 */
struct SensorPad {
  std::string name;
  Pose mount;                 ///< pad frame in its link frame
  double half_length = 0.0;   ///< along pad x [m]
  double half_width = 0.0;    ///< along pad y [m]
  double edge_radius = 0.002;
  double spacing = 0.001;
  std::vector<Vector3> grid;  ///< candidate points in the pad frame
};

/// Candidate grid for a pad face; spacing `s`, margin `edge_radius` from every edge.
std::vector<Vector3> make_pad_grid(double half_length, double half_width, double edge_radius,
                                   double spacing);
SensorPad make_pad(std::string name, const Pose& mount, double half_length, double half_width,
                   double edge_radius = 0.002, double spacing = 0.001);

struct Joint {
  std::string name;
  Vector3 axis = Vector3::UnitZ();  ///< revolute axis in the joint frame
  Pose offset;                      ///< joint frame relative to the parent link frame
  std::vector<int> pads;            ///< pads riding on the link this joint drives
};

struct Chain {
  std::string name;
  Pose base;  ///< chain root in the hand frame
  std::vector<Joint> joints;
};

class HandModel {
 public:
  HandModel(std::vector<Chain> chains, std::vector<SensorPad> pads);

  /// 15-DoF, 16-pad hand shipped as data/default_hand.json.
  static HandModel default_hand();
  static HandModel from_json_text(std::string_view text);
  static HandModel load(const std::string& path);
  std::string to_json_text() const;

  int dof() const { return dof_; }
  std::size_t pad_count() const { return pads_.size(); }
  const std::vector<Chain>& chains() const { return chains_; }
  const std::vector<SensorPad>& pads() const { return pads_; }

  /// Offset of chain `c`'s first joint in the flat joint vector.
  int joint_offset(std::size_t chain) const { return joint_offsets_[chain]; }
  /// (chain, joint) driving pad `k`.
  std::pair<int, int> pad_link(std::size_t k) const { return pad_links_[k]; }

 private:
  std::vector<Chain> chains_;
  std::vector<SensorPad> pads_;
  std::vector<int> joint_offsets_;
  std::vector<std::pair<int, int>> pad_links_;
  int dof_ = 0;
};

/// Pad poses in the world frame; `wrist` places the hand frame in the world.
std::vector<Pose> forward_kinematics(const HandModel& hand, const JointConfig& q,
                                     const Pose& wrist = Pose::identity());

struct ContactPoint {
  Vector3 point;        ///< world frame
  double sdf_value;     ///< object SDF at the point
  std::size_t grid_index;
};

/// Pad grid point with the minimal object SDF; ties go to the lowest index.
ContactPoint contact_point(const SensorPad& pad, const Pose& pad_pose, const Pose& object_pose,
                           const SdfField& sdf);
/// Same selection over pre-transformed world-frame grid points.
ContactPoint contact_point(const std::vector<Vector3>& grid_world, const Pose& object_pose,
                           const SdfField& sdf);

ContactVector synthesize_contacts(const HandModel& hand, const JointConfig& q,
                                  const Pose& object_pose, const SdfField& sdf,
                                  double threshold = 0.0, const Pose& wrist = Pose::identity());

}  // namespace padfuse
