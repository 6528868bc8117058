#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "padfuse/factors.hpp"
#include "padfuse/handmodel.hpp"
#include "padfuse/sdf.hpp"
#include "padfuse/solver.hpp"

namespace padfuse {

enum class TrackingMode { Vis, VisPen, VisTacPen };

std::string_view to_string(TrackingMode mode);
TrackingMode parse_mode(std::string_view text);

struct ModeFlags {
  bool use_vis = true;
  bool use_tac = true;
  bool use_pen = true;
  /// Vision baseline: no optimization, the estimate is the latest visual pose.
  bool passthrough = false;
};

ModeFlags configure_ablation(TrackingMode mode);

struct Measurements {
  double timestamp = 0.0;
  std::optional<Pose> vision;  ///< absent on frames without a visual estimate
  ContactVector contacts;
  JointConfig joints;
  Pose wrist;  ///< hand frame in the world
};

struct TrackerState {
  Pose estimate;
  bool initialized = false;
  ModeFlags flags;
};

struct EstimatorConfig {
  SolverConfig solver;
  FactorWeights weights;
};

struct StepResult {
  TrackerState state;
  SolveReport report;
  std::size_t block_count = 0;
};

/// Factor graph for one time step: [visual] + K tactile + K penetration blocks.
std::vector<ResidualBlock> build_problem(const TrackerState& state, const Measurements& m,
                                         const HandModel& hand, const ObjectModel& object,
                                         const EstimatorConfig& cfg);

/// One tracking update, warm-started from the previous estimate.
StepResult step(const TrackerState& state, const Measurements& m, const HandModel& hand,
                const ObjectModel& object, const EstimatorConfig& cfg);

}  // namespace padfuse
