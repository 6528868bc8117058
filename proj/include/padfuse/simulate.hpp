#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "padfuse/handmodel.hpp"
#include "padfuse/json_io.hpp"
#include "padfuse/liegroup.hpp"
#include "padfuse/sdf.hpp"

namespace padfuse {

/// Depth noise standard deviation [m] of the RGB-D camera at depth d [m].
double depth_noise_sigma(double depth);

enum class InitialPoseMode {
  Uniform,   ///< uniform SO(3) orientation
  FixedYaw,  ///< nominal orientation perturbed about the vertical axis
};

struct InitialPoseSpec {
  InitialPoseMode mode = InitialPoseMode::Uniform;
  Rotation nominal;
  double yaw_range_deg = 5.0;
};

/**
 * Kinematic grasp timeline. Finger joints start closing after the settle
 * phase, proximal first with `stage_delay` between levels; thumb chains start
 * `thumb_delay` later. Chains named "palm" never move. After the grasp the
 * whole hand tilts backward about a wrist pivot.
 */
struct GraspSchedule {
  double settle_duration = 1.0;
  double close_duration = 1.0;  ///< time for one joint to sweep to its max angle
  double stage_delay = 0.2;
  double thumb_delay = 0.6;
  double rotate_start = 4.5;
  double rotate_duration = 3.0;
  double rotate_angle_deg = 45.0;
  double hold_duration = 1.5;
  std::vector<double> max_angles{1.6, 1.6, 1.4};  ///< per joint level along a chain
  Vector3 wrist_pivot{-0.06, 0.0, 0.0};            ///< hand frame

  double end_time() const { return rotate_start + rotate_duration + hold_duration; }
};

struct VisionNoise {
  double scale = 1.0;            ///< global multiplier on both sigmas
  double rotation_sigma = 0.02;  ///< rad, per axis
  /// Translation sigma per axis is translation_scale * depth_noise_sigma(camera distance).
  double translation_scale = 1.0;
  double outlier_probability = 0.02;
  double outlier_rotation_sigma = 0.3;
  double outlier_translation_sigma = 0.03;
  Vector3 bias = Vector3::Zero();  ///< constant hand-frame translation offset [m]
};

/// Multiplier on vision noise and outlier probability: 1 before the rotation,
/// linear ramp to max_multiplier during it, constant afterwards.
struct OcclusionSchedule {
  double max_multiplier = 3.0;
  double multiplier(double t, const GraspSchedule& schedule) const;
};

struct CameraSetup {
  double horizontal_distance = 0.6;
  double vertical_distance = 0.576;
  Vector3 position() const { return {-horizontal_distance, 0.0, vertical_distance}; }
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  Shape object = Sphere{0.035};
  std::string hand = "default";  ///< "default" or a path to a hand description
  InitialPoseSpec initial;
  GraspSchedule schedule;
  double vision_hz = 30.0;
  double tactile_hz = 100.0;
  VisionNoise noise;
  OcclusionSchedule occlusion;
  CameraSetup camera;
  double contact_threshold = 0.0;
  int min_contacts = 4;  ///< grasps with fewer contacts are rejected
  ObjectModelOptions model;

  void validate() const;
};

Json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_json(const Json& j);

struct SequenceRecord {
  double t = 0.0;
  Pose truth;
  Pose wrist;
  JointConfig q;
  ContactVector y;
  std::optional<Pose> vision;
  double occlusion = 1.0;
  bool outlier = false;
};

struct SequenceData {
  ScenarioConfig config;
  Pose object_in_hand;
  int attempts = 1;
  std::vector<SequenceRecord> records;
};

HandModel load_hand(const std::string& ref);

SequenceData generate(const ScenarioConfig& cfg);

/// JSON lines: one header line, then one "frame" line per record.
void write_sequence(const SequenceData& seq, const std::filesystem::path& path);
SequenceData read_sequence(const std::filesystem::path& path);
std::string sequence_to_jsonl(const SequenceData& seq);

}  // namespace padfuse
